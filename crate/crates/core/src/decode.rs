//! Maximum-weight undirected spanning trees over a [`CpmiMatrix`].
//!
//! All three decoders share one tie-breaking rule: among trees of equal
//! total score, the one whose sorted edge list is lexicographically
//! smallest under `(min endpoint, max endpoint)` wins. Scores are
//! recomputed by summing edge weights in that same sorted order.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::CpmiMatrix;
use crate::treebank::{is_noncrossing, Edge, UndirectedTree};

pub const TIE_BREAK_RULE: &str =
    "lexicographically smallest (min endpoint, max endpoint) edge list";

/// Largest sentence the exhaustive decoder accepts.
pub const BRUTE_FORCE_MAX_N: usize = 8;

const MAX_TRACE: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderKind {
    Projective,
    Mst,
    BruteForce,
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DecoderKind::Projective => "projective",
            DecoderKind::Mst => "mst",
            DecoderKind::BruteForce => "brute_force",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("score matrix is not symmetric at ({i}, {j})")]
    Asymmetric { i: usize, j: usize },
    #[error("cannot decode an empty sentence")]
    Empty,
    #[error("exhaustive decoding refused for n = {n} (limit {BRUTE_FORCE_MAX_N})")]
    TooLarge { n: usize },
}

/// Two partial structures of equal score; `kept` won under the tie rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TieEvent {
    pub kept: Vec<Edge>,
    pub discarded: Vec<Edge>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodedTree {
    pub tree: UndirectedTree,
    pub total_score: f64,
    pub decoder: DecoderKind,
    /// `None` when no ties were met; capped at a few dozen events.
    pub tie_break_trace: Option<Vec<TieEvent>>,
}

/// Sum of matrix entries over `edges`, in sorted edge order.
pub fn tree_score<'a>(m: &CpmiMatrix, edges: impl IntoIterator<Item = &'a Edge>) -> f64 {
    let sorted: BTreeSet<&Edge> = edges.into_iter().collect();
    sorted
        .into_iter()
        .fold(0.0, |acc, e| acc + m.get(e.lo(), e.hi()))
}

fn check(m: &CpmiMatrix) -> Result<(), DecodeError> {
    if m.n() == 0 {
        return Err(DecodeError::Empty);
    }
    for i in 1..=m.n() {
        for j in i + 1..=m.n() {
            if m.get(i, j) != m.get(j, i) {
                return Err(DecodeError::Asymmetric { i, j });
            }
        }
    }
    Ok(())
}

fn finish(
    m: &CpmiMatrix,
    edges: Vec<Edge>,
    decoder: DecoderKind,
    trace: Vec<TieEvent>,
) -> DecodedTree {
    let tree = UndirectedTree::new(m.n(), edges).expect("decoder produced a spanning tree");
    let total_score = tree_score(m, tree.edges());
    DecodedTree {
        tree,
        total_score,
        decoder,
        tie_break_trace: (!trace.is_empty()).then_some(trace),
    }
}

fn push_trace(trace: &mut Vec<TieEvent>, kept: Vec<Edge>, discarded: Vec<Edge>) {
    if trace.len() < MAX_TRACE {
        trace.push(TieEvent { kept, discarded });
    }
}

/// `Less` when `a` wins the tie rule against `b`. Both must be sorted.
fn tie_order(a: &[Edge], b: &[Edge]) -> Ordering {
    // For sets of equal size this is plain lexicographic order. For partial
    // structures of different content it is decided by the smallest edge in
    // the symmetric difference, which stays consistent when both sides are
    // extended by the same disjoint remainder.
    let sa: BTreeSet<&Edge> = a.iter().collect();
    let sb: BTreeSet<&Edge> = b.iter().collect();
    match sa.symmetric_difference(&sb).next() {
        None => Ordering::Equal,
        Some(e) if sa.contains(e) => Ordering::Less,
        Some(_) => Ordering::Greater,
    }
}

// Chart cells for the span-based dynamic program, 0-based word indices.
#[derive(Clone, Copy)]
enum Span {
    // Head on the left, covering s..=t.
    CompleteRight,
    // Head on the right.
    CompleteLeft,
    // Arc between s and t plus the material between them.
    Incomplete,
}

struct Chart {
    n: usize,
    score: [Vec<f64>; 3],
    split: [Vec<usize>; 3],
}

impl Chart {
    fn idx(&self, s: usize, t: usize) -> usize {
        s * self.n + t
    }

    fn get(&self, kind: Span, s: usize, t: usize) -> f64 {
        self.score[kind as usize][self.idx(s, t)]
    }

    fn set(&mut self, kind: Span, s: usize, t: usize, v: f64, r: usize) {
        let k = self.idx(s, t);
        self.score[kind as usize][k] = v;
        self.split[kind as usize][k] = r;
    }

    fn collect(&self, kind: Span, s: usize, t: usize, out: &mut Vec<Edge>) {
        if s == t {
            return;
        }
        let r = self.split[kind as usize][self.idx(s, t)];
        match kind {
            Span::Incomplete => {
                out.push(Edge::new(s + 1, t + 1).expect("s < t"));
                self.collect(Span::CompleteRight, s, r, out);
                self.collect(Span::CompleteLeft, r + 1, t, out);
            }
            Span::CompleteRight => {
                self.collect(Span::Incomplete, s, r, out);
                self.collect(Span::CompleteRight, r, t, out);
            }
            Span::CompleteLeft => {
                self.collect(Span::CompleteLeft, s, r, out);
                self.collect(Span::Incomplete, r, t, out);
            }
        }
    }

    fn candidate_edges(
        &self,
        parts: &[(Span, usize, usize)],
        arc: Option<(usize, usize)>,
    ) -> Vec<Edge> {
        let mut out = Vec::new();
        for &(kind, s, t) in parts {
            self.collect(kind, s, t, &mut out);
        }
        if let Some((s, t)) = arc {
            out.push(Edge::new(s + 1, t + 1).expect("s < t"));
        }
        out.sort();
        out
    }
}

/// Eisner's O(n^3) span dynamic program over the symmetric weights.
///
/// Arcs are scored head-outward with `w(h, d) = m[h][d]`, so the
/// direction carries no information and is dropped on output. The tree is
/// rooted at whichever word gives the best total; no root is reported.
pub fn eisner_projective(m: &CpmiMatrix) -> Result<DecodedTree, DecodeError> {
    check(m)?;
    let n = m.n();
    let w = |s: usize, t: usize| m.get(s + 1, t + 1);
    let mut chart = Chart {
        n,
        score: [vec![0.0; n * n], vec![0.0; n * n], vec![0.0; n * n]],
        split: [vec![0; n * n], vec![0; n * n], vec![0; n * n]],
    };
    let mut trace = Vec::new();

    for width in 1..n {
        for s in 0..n - width {
            let t = s + width;

            // Incomplete span: arc s-t over a split r in [s, t).
            let mut best: Option<(f64, usize)> = None;
            for r in s..t {
                let v =
                    chart.get(Span::CompleteRight, s, r) + chart.get(Span::CompleteLeft, r + 1, t);
                best = Some(pick(
                    &chart,
                    &mut trace,
                    best,
                    v,
                    r,
                    |r| vec![(Span::CompleteRight, s, r), (Span::CompleteLeft, r + 1, t)],
                    Some((s, t)),
                ));
            }
            let (v, r) = best.expect("nonempty range");
            chart.set(Span::Incomplete, s, t, v + w(s, t), r);

            // Complete span headed at s: last dependent r in (s, t].
            let mut best = None;
            for r in s + 1..=t {
                let v = chart.get(Span::Incomplete, s, r) + chart.get(Span::CompleteRight, r, t);
                best = Some(pick(
                    &chart,
                    &mut trace,
                    best,
                    v,
                    r,
                    |r| vec![(Span::Incomplete, s, r), (Span::CompleteRight, r, t)],
                    None,
                ));
            }
            let (v, r) = best.expect("nonempty range");
            chart.set(Span::CompleteRight, s, t, v, r);

            // Complete span headed at t: last dependent r in [s, t).
            let mut best = None;
            for r in s..t {
                let v = chart.get(Span::CompleteLeft, s, r) + chart.get(Span::Incomplete, r, t);
                best = Some(pick(
                    &chart,
                    &mut trace,
                    best,
                    v,
                    r,
                    |r| vec![(Span::CompleteLeft, s, r), (Span::Incomplete, r, t)],
                    None,
                ));
            }
            let (v, r) = best.expect("nonempty range");
            chart.set(Span::CompleteLeft, s, t, v, r);
        }
    }

    let mut best = None;
    for r in 0..n {
        let v = chart.get(Span::CompleteLeft, 0, r) + chart.get(Span::CompleteRight, r, n - 1);
        best = Some(pick(
            &chart,
            &mut trace,
            best,
            v,
            r,
            |r| vec![(Span::CompleteLeft, 0, r), (Span::CompleteRight, r, n - 1)],
            None,
        ));
    }
    let (_, root) = best.expect("n >= 1");
    let edges = chart.candidate_edges(
        &[
            (Span::CompleteLeft, 0, root),
            (Span::CompleteRight, root, n - 1),
        ],
        None,
    );
    Ok(finish(m, edges, DecoderKind::Projective, trace))
}

fn pick(
    chart: &Chart,
    trace: &mut Vec<TieEvent>,
    best: Option<(f64, usize)>,
    v: f64,
    r: usize,
    parts: impl Fn(usize) -> Vec<(Span, usize, usize)>,
    arc: Option<(usize, usize)>,
) -> (f64, usize) {
    match best {
        None => (v, r),
        Some((b, _)) if v > b => (v, r),
        Some((b, br)) if v == b => {
            let old = chart.candidate_edges(&parts(br), arc);
            let new = chart.candidate_edges(&parts(r), arc);
            match tie_order(&new, &old) {
                Ordering::Less => {
                    push_trace(trace, new, old);
                    (v, r)
                }
                Ordering::Greater => {
                    push_trace(trace, old, new);
                    (b, br)
                }
                // Same undirected structure reached twice.
                Ordering::Equal => (b, br),
            }
        }
        Some(keep) => keep,
    }
}

/// Kruskal's algorithm over the complete graph, scanning edges by
/// descending weight and then ascending `(lo, hi)`.
pub fn max_spanning_tree(m: &CpmiMatrix) -> Result<DecodedTree, DecodeError> {
    check(m)?;
    let n = m.n();
    let mut candidates: Vec<(f64, Edge)> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 1..=n {
        for j in i + 1..=n {
            candidates.push((m.get(i, j), Edge::new(i, j).expect("i < j")));
        }
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut parent: Vec<usize> = (0..=n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }

    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut trace = Vec::new();
    let mut k = 0;
    while k < candidates.len() && edges.len() + 1 < n {
        let weight = candidates[k].0;
        let mut end = k;
        while end < candidates.len() && candidates[end].0 == weight {
            end += 1;
        }
        let mut kept = Vec::new();
        let mut discarded = Vec::new();
        for &(_, e) in &candidates[k..end] {
            let (a, b) = (find(&mut parent, e.lo()), find(&mut parent, e.hi()));
            if a != b && edges.len() + 1 < n {
                parent[a] = b;
                edges.push(e);
                kept.push(e);
            } else {
                discarded.push(e);
            }
        }
        if end - k > 1 && !kept.is_empty() && !discarded.is_empty() {
            push_trace(&mut trace, kept, discarded);
        }
        k = end;
    }
    Ok(finish(m, edges, DecoderKind::Mst, trace))
}

/// Exhaustive search over all `n^(n-2)` labelled spanning trees, optionally
/// restricted to noncrossing ones. Reference implementation for tests.
pub fn brute_force_best(m: &CpmiMatrix, projective: bool) -> Result<DecodedTree, DecodeError> {
    check(m)?;
    let n = m.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(DecodeError::TooLarge { n });
    }
    let mut best: Option<(f64, Vec<Edge>)> = None;
    let mut trace = Vec::new();
    for_each_spanning_tree(n, |edges| {
        if projective && !is_noncrossing(edges.iter()) {
            return;
        }
        let score = edges.iter().fold(0.0, |acc, e| acc + m.get(e.lo(), e.hi()));
        match &best {
            None => best = Some((score, edges.to_vec())),
            Some((b, _)) if score > *b => best = Some((score, edges.to_vec())),
            Some((b, cur)) if score == *b => {
                if edges < cur.as_slice() {
                    push_trace(&mut trace, edges.to_vec(), cur.clone());
                    best = Some((score, edges.to_vec()));
                } else {
                    push_trace(&mut trace, cur.clone(), edges.to_vec());
                }
            }
            Some(_) => {}
        }
    });
    let (_, edges) = best.expect("at least one spanning tree exists");
    Ok(finish(m, edges, DecoderKind::BruteForce, trace))
}

/// Calls `f` with the sorted edge list of every labelled spanning tree on
/// `n` vertices, by decoding all Prüfer sequences.
pub fn for_each_spanning_tree(n: usize, mut f: impl FnMut(&[Edge])) {
    match n {
        0 => {}
        1 => f(&[]),
        2 => f(&[Edge::new(1, 2).expect("distinct")]),
        _ => {
            let len = n - 2;
            let mut seq = vec![0usize; len];
            let mut edges = Vec::with_capacity(n - 1);
            loop {
                prufer_decode(n, &seq, &mut edges);
                f(&edges);
                // Odometer increment.
                let mut k = 0;
                loop {
                    if k == len {
                        return;
                    }
                    seq[k] += 1;
                    if seq[k] < n {
                        break;
                    }
                    seq[k] = 0;
                    k += 1;
                }
            }
        }
    }
}

fn prufer_decode(n: usize, seq: &[usize], edges: &mut Vec<Edge>) {
    edges.clear();
    let mut degree = vec![1usize; n];
    for &v in seq {
        degree[v] += 1;
    }
    for &v in seq {
        let leaf = (0..n).find(|&u| degree[u] == 1).expect("a leaf exists");
        edges.push(Edge::new(leaf + 1, v + 1).expect("leaf differs from v"));
        degree[leaf] -= 1;
        degree[v] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&u| degree[u] == 1).collect();
    edges.push(Edge::new(rest[0] + 1, rest[1] + 1).expect("two leaves remain"));
    edges.sort();
}

/// `sentence_id<TAB>i-j,i-j,...`
pub fn tree_line(sentence_id: &str, tree: &UndirectedTree) -> String {
    format!("{sentence_id}\t{}", tree.edge_list())
}

#[derive(Debug, Error)]
pub enum TreeLineError {
    #[error("line {line}: expected `id<TAB>edges`")]
    Format { line: usize },
    #[error("line {line}: {source}")]
    Edge {
        line: usize,
        #[source]
        source: crate::treebank::EdgeError,
    },
}

/// Parses an edge-list file into `(sentence_id, edges)` pairs, skipping
/// blank and `#` lines.
pub fn parse_tree_lines(text: &str) -> Result<Vec<(String, Vec<Edge>)>, TreeLineError> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, rest) = line
            .split_once('\t')
            .ok_or(TreeLineError::Format { line: k + 1 })?;
        let mut edges = Vec::new();
        for part in rest.split(',').filter(|p| !p.trim().is_empty()) {
            edges.push(part.parse().map_err(|source| TreeLineError::Edge {
                line: k + 1,
                source,
            })?);
        }
        out.push((id.to_owned(), edges));
    }
    Ok(out)
}
