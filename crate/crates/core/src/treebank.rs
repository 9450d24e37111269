//! CoNLL-U ingestion, sentences, and undirected dependency trees.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Problems with a single sentence block.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum SentenceError {
    #[error("empty sentence")]
    Empty,
    #[error(
        "field lengths disagree: {tokens} tokens, {heads} heads, {relations} relations, {pos} tags"
    )]
    LengthMismatch {
        tokens: usize,
        heads: usize,
        relations: usize,
        pos: usize,
    },
    #[error("head {head} of token {token} is outside [0, {n}]")]
    HeadOutOfRange { token: usize, head: usize, n: usize },
    #[error("expected exactly one root, found {0}")]
    RootCount(usize),
    #[error("cyclic heads")]
    CyclicHeads,
}

/// A per-block parse failure. `sentence` is the 0-based index of the block.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ConlluError {
    #[error("sentence {sentence}, line {line}: expected 10 columns, found {found}")]
    ColumnCount {
        sentence: usize,
        line: usize,
        found: usize,
    },
    #[error("sentence {sentence}, line {line}: invalid token id `{value}`")]
    BadId {
        sentence: usize,
        line: usize,
        value: String,
    },
    #[error("sentence {sentence}, line {line}: non-integer head `{value}`")]
    BadHead {
        sentence: usize,
        line: usize,
        value: String,
    },
    #[error("sentence {sentence}: head refers to missing token {head}")]
    DanglingHead { sentence: usize, head: usize },
    #[error("sentence {sentence}: {source}")]
    Invalid {
        sentence: usize,
        #[source]
        source: SentenceError,
    },
}

impl ConlluError {
    pub fn sentence_index(&self) -> usize {
        match self {
            ConlluError::ColumnCount { sentence, .. }
            | ConlluError::BadId { sentence, .. }
            | ConlluError::BadHead { sentence, .. }
            | ConlluError::DanglingHead { sentence, .. }
            | ConlluError::Invalid { sentence, .. } => *sentence,
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum EdgeError {
    #[error("self edge {0}-{0}")]
    SelfLoop(usize),
    #[error("position 0 is not a word")]
    ZeroPosition,
    #[error("malformed edge `{0}`")]
    Malformed(String),
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("edge {edge} outside a {n}-word sentence")]
    OutOfRange { edge: Edge, n: usize },
    #[error("expected {expected} edges for {n} words, found {found}")]
    EdgeCount {
        n: usize,
        expected: usize,
        found: usize,
    },
    #[error("edge set is not connected")]
    Disconnected,
    #[error("duplicate edge {0}")]
    Duplicate(Edge),
}

/// An unordered pair of 1-based word positions, stored as `(lo, hi)`.
///
/// The derived ordering is lexicographic on `(lo, hi)`; decoders break
/// ties with it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    lo: usize,
    hi: usize,
}

impl Edge {
    pub fn new(i: usize, j: usize) -> Result<Self, EdgeError> {
        if i == j {
            return Err(EdgeError::SelfLoop(i));
        }
        if i == 0 || j == 0 {
            return Err(EdgeError::ZeroPosition);
        }
        Ok(Edge {
            lo: i.min(j),
            hi: i.max(j),
        })
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }

    /// Distance between the endpoints, always at least 1.
    pub fn length(&self) -> usize {
        self.hi - self.lo
    }

    /// Whether the two edges cross when drawn above the sentence.
    pub fn crosses(&self, other: &Edge) -> bool {
        let (a, b, c, d) = (self.lo, self.hi, other.lo, other.hi);
        (a < c && c < b && b < d) || (c < a && a < d && d < b)
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.lo, self.hi)
    }
}

impl FromStr for Edge {
    type Err = EdgeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once('-')
            .ok_or_else(|| EdgeError::Malformed(s.to_owned()))?;
        let a = a
            .trim()
            .parse()
            .map_err(|_| EdgeError::Malformed(s.to_owned()))?;
        let b = b
            .trim()
            .parse()
            .map_err(|_| EdgeError::Malformed(s.to_owned()))?;
        Edge::new(a, b)
    }
}

/// Length of the arc between two positions.
pub fn arc_length(i: usize, j: usize) -> Result<usize, EdgeError> {
    if i == j {
        return Err(EdgeError::SelfLoop(i));
    }
    Ok(i.abs_diff(j))
}

/// A spanning tree over words `1..=n` with direction discarded.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UndirectedTree {
    n: usize,
    edges: BTreeSet<Edge>,
}

impl UndirectedTree {
    /// Builds a tree, checking that the edges span all `n` words.
    pub fn new(n: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self, TreeError> {
        let mut set = BTreeSet::new();
        for e in edges {
            if e.hi > n {
                return Err(TreeError::OutOfRange { edge: e, n });
            }
            if !set.insert(e) {
                return Err(TreeError::Duplicate(e));
            }
        }
        let expected = n.saturating_sub(1);
        if set.len() != expected {
            return Err(TreeError::EdgeCount {
                n,
                expected,
                found: set.len(),
            });
        }
        if !connected(n, &set) {
            return Err(TreeError::Disconnected);
        }
        Ok(UndirectedTree { n, edges: set })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn contains(&self, e: &Edge) -> bool {
        self.edges.contains(e)
    }

    /// No two edges `{a,b}`, `{c,d}` with `a < c < b < d`.
    pub fn is_projective(&self) -> bool {
        is_noncrossing(self.edges.iter())
    }

    /// Arc lengths in edge order.
    pub fn lengths(&self) -> Vec<usize> {
        self.edges.iter().map(Edge::length).collect()
    }

    /// `i-j,i-j,...` in lexicographic order.
    pub fn edge_list(&self) -> String {
        let parts: Vec<String> = self.edges.iter().map(Edge::to_string).collect();
        parts.join(",")
    }
}

pub(crate) fn is_noncrossing<'a>(edges: impl Iterator<Item = &'a Edge> + Clone) -> bool {
    let v: Vec<&Edge> = edges.collect();
    for (k, a) in v.iter().enumerate() {
        for b in &v[k + 1..] {
            if a.crosses(b) {
                return false;
            }
        }
    }
    true
}

fn connected(n: usize, edges: &BTreeSet<Edge>) -> bool {
    if n <= 1 {
        return true;
    }
    let mut adj = vec![Vec::new(); n + 1];
    for e in edges {
        adj[e.lo].push(e.hi);
        adj[e.hi].push(e.lo);
    }
    let mut seen = vec![false; n + 1];
    let mut stack = vec![1];
    seen[1] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == n
}

/// One treebank sentence with gold annotation. Positions are 1-based;
/// `heads[k]` is the head of token `k + 1`, with 0 marking the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    id: String,
    tokens: Vec<String>,
    pos: Option<Vec<String>>,
    heads: Vec<usize>,
    relations: Vec<String>,
}

impl Sentence {
    pub fn new(
        id: impl Into<String>,
        tokens: Vec<String>,
        pos: Option<Vec<String>>,
        heads: Vec<usize>,
        relations: Vec<String>,
    ) -> Result<Self, SentenceError> {
        let n = tokens.len();
        if n == 0 {
            return Err(SentenceError::Empty);
        }
        let pos_len = pos.as_ref().map_or(n, Vec::len);
        if heads.len() != n || relations.len() != n || pos_len != n {
            return Err(SentenceError::LengthMismatch {
                tokens: n,
                heads: heads.len(),
                relations: relations.len(),
                pos: pos_len,
            });
        }
        check_heads(&heads)?;
        Ok(Sentence {
            id: id.into(),
            tokens,
            pos,
            heads,
            relations,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn pos(&self) -> Option<&[String]> {
        self.pos.as_deref()
    }

    pub fn heads(&self) -> &[usize] {
        &self.heads
    }

    pub fn relations(&self) -> &[String] {
        &self.relations
    }

    /// Token at 1-based position `i`.
    pub fn token(&self, i: usize) -> &str {
        &self.tokens[i - 1]
    }

    /// Whether the token at 1-based position `i` is tagged as punctuation.
    pub fn is_punct(&self, i: usize) -> bool {
        self.pos
            .as_ref()
            .is_some_and(|tags| is_punct_tag(&tags[i - 1]))
    }
}

/// UPOS `PUNCT` and the Penn Treebank punctuation tags.
pub fn is_punct_tag(tag: &str) -> bool {
    matches!(
        tag,
        "PUNCT" | "." | "," | ":" | "``" | "''" | "-LRB-" | "-RRB-" | "#" | "$" | "HYPH" | "NFP"
    )
}

fn check_heads(heads: &[usize]) -> Result<(), SentenceError> {
    let n = heads.len();
    for (k, &h) in heads.iter().enumerate() {
        if h > n {
            return Err(SentenceError::HeadOutOfRange {
                token: k + 1,
                head: h,
                n,
            });
        }
    }
    let roots = heads.iter().filter(|&&h| h == 0).count();
    // Every token must reach the root by following heads.
    // 0 = unvisited, 1 = on current path, 2 = reaches root
    let mut state = vec![0u8; n + 1];
    state[0] = 2;
    for start in 1..=n {
        let mut path = Vec::new();
        let mut cur = start;
        while state[cur] == 0 {
            state[cur] = 1;
            path.push(cur);
            cur = heads[cur - 1];
        }
        if state[cur] == 1 {
            return Err(SentenceError::CyclicHeads);
        }
        for p in path {
            state[p] = 2;
        }
    }
    if roots != 1 {
        return Err(SentenceError::RootCount(roots));
    }
    Ok(())
}

/// The gold tree with the root attachment dropped: `n - 1` word-word edges.
pub fn gold_edges(s: &Sentence) -> UndirectedTree {
    let edges = s
        .heads
        .iter()
        .enumerate()
        .filter(|(_, &h)| h != 0)
        .map(|(k, &h)| Edge::new(k + 1, h).expect("validated heads"));
    UndirectedTree::new(s.len(), edges).expect("validated heads form a tree")
}

/// Parses CoNLL-U text, yielding one result per sentence block.
///
/// Multiword ranges (`3-4`) and empty nodes (`5.1`) are skipped and the
/// remaining tokens renumbered densely from 1. The sentence id comes from
/// a `# sent_id = ...` comment when present, otherwise the 1-based block
/// number.
pub fn parse_conllu(text: &str) -> Vec<Result<Sentence, ConlluError>> {
    let mut out = Vec::new();
    let mut block: Vec<(usize, &str)> = Vec::new();
    // Blocks holding only comments (file headers) are not sentences.
    let flush = |block: &mut Vec<(usize, &str)>, out: &mut Vec<_>| {
        if block.iter().any(|(_, l)| !l.starts_with('#')) {
            let idx = out.len();
            out.push(parse_block(idx, block));
        }
        block.clear();
    };
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut block, &mut out);
        } else {
            block.push((lineno + 1, line));
        }
    }
    flush(&mut block, &mut out);
    out
}

/// Like [`parse_conllu`], but stops at the first malformed block.
pub fn parse_conllu_strict(text: &str) -> Result<Vec<Sentence>, ConlluError> {
    parse_conllu(text).into_iter().collect()
}

fn split_columns(line: &str) -> Vec<&str> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() == 1 {
        line.split_whitespace().collect()
    } else {
        cols
    }
}

fn parse_block(sentence: usize, lines: &[(usize, &str)]) -> Result<Sentence, ConlluError> {
    let mut id = None;
    let mut rows = Vec::new();
    for &(line, text) in lines {
        if let Some(comment) = text.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                if key.trim() == "sent_id" {
                    id = Some(value.trim().to_owned());
                }
            }
            continue;
        }
        let cols = split_columns(text);
        if cols.len() != 10 {
            return Err(ConlluError::ColumnCount {
                sentence,
                line,
                found: cols.len(),
            });
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let orig: usize = cols[0].parse().map_err(|_| ConlluError::BadId {
            sentence,
            line,
            value: cols[0].to_owned(),
        })?;
        let head: usize = cols[6].parse().map_err(|_| ConlluError::BadHead {
            sentence,
            line,
            value: cols[6].to_owned(),
        })?;
        rows.push((orig, cols, head));
    }

    let mut dense = std::collections::HashMap::new();
    for (k, (orig, _, _)) in rows.iter().enumerate() {
        dense.insert(*orig, k + 1);
    }
    let mut tokens = Vec::with_capacity(rows.len());
    let mut tags = Vec::with_capacity(rows.len());
    let mut heads = Vec::with_capacity(rows.len());
    let mut relations = Vec::with_capacity(rows.len());
    for (_, cols, head) in &rows {
        tokens.push(cols[1].to_owned());
        // Fall back to XPOS when UPOS is unset, as in converted PTB data.
        let tag = if cols[3] == "_" { cols[4] } else { cols[3] };
        tags.push(tag.to_owned());
        let h = if *head == 0 {
            0
        } else {
            *dense.get(head).ok_or(ConlluError::DanglingHead {
                sentence,
                head: *head,
            })?
        };
        heads.push(h);
        relations.push(cols[7].to_owned());
    }
    let pos = if tags.iter().all(|t| t == "_") {
        None
    } else {
        Some(tags)
    };
    let id = id.unwrap_or_else(|| (sentence + 1).to_string());
    Sentence::new(id, tokens, pos, heads, relations)
        .map_err(|source| ConlluError::Invalid { sentence, source })
}

/// Serializes sentences as `id<TAB>token<TAB>pos<TAB>head<TAB>relation`
/// lines, one per token, with a blank line after each sentence.
pub fn write_tsv(sentences: &[Sentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        for k in 0..s.len() {
            let tag = s.pos.as_ref().map_or("_", |p| p[k].as_str());
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                s.id, s.tokens[k], tag, s.heads[k], s.relations[k]
            ));
        }
        out.push('\n');
    }
    out
}

/// Id, tokens, tags, heads, relations.
type TsvBlock = (String, Vec<String>, Vec<String>, Vec<usize>, Vec<String>);

/// Reads the format produced by [`write_tsv`].
pub fn read_tsv(text: &str) -> Result<Vec<Sentence>, ConlluError> {
    let mut out = Vec::new();
    let mut cur: Option<TsvBlock> = None;
    let finish = |out: &mut Vec<Sentence>, cur: TsvBlock| {
        let idx = out.len();
        let (id, tokens, tags, heads, rels) = cur;
        let pos = if tags.iter().all(|t| t == "_") {
            None
        } else {
            Some(tags)
        };
        Sentence::new(id, tokens, pos, heads, rels)
            .map(|s| out.push(s))
            .map_err(|source| ConlluError::Invalid {
                sentence: idx,
                source,
            })
    };
    for (lineno, line) in text.lines().enumerate() {
        if line.is_empty() || line.starts_with('#') {
            if let Some(c) = cur.take() {
                finish(&mut out, c)?;
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 5 {
            return Err(ConlluError::ColumnCount {
                sentence: out.len(),
                line: lineno + 1,
                found: cols.len(),
            });
        }
        let head = cols[3].parse().map_err(|_| ConlluError::BadHead {
            sentence: out.len(),
            line: lineno + 1,
            value: cols[3].to_owned(),
        })?;
        if cur.as_ref().is_some_and(|c| c.0 != cols[0]) {
            let c = cur.take().expect("checked");
            finish(&mut out, c)?;
        }
        let c = cur.get_or_insert_with(|| {
            (
                cols[0].to_owned(),
                Vec::new(),
                Vec::new(),
                Vec::new(),
                Vec::new(),
            )
        });
        c.1.push(cols[1].to_owned());
        c.2.push(cols[2].to_owned());
        c.3.push(head);
        c.4.push(cols[4].to_owned());
    }
    if let Some(c) = cur.take() {
        finish(&mut out, c)?;
    }
    Ok(out)
}
