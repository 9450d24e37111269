//! Comparison structures: the linear chain, trees decoded from random
//! weights, and random trees matching the gold arc-length multiset.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::decode::{eisner_projective, max_spanning_tree, DecodedTree};
use crate::matrix::{CpmiMatrix, Symmetrization, Variant};
use crate::rng::StreamSeed;
use crate::treebank::{Edge, UndirectedTree};

/// Restart budget for [`length_matched_tree`].
pub const DEFAULT_MAX_RESTARTS: usize = 10_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BaselineError {
    #[error("no length-matched tree found after {0} restarts")]
    NoLengthMatchedTree(usize),
}

/// Words connected in order: `{i, i+1}` for `1 <= i < n`.
pub fn linear_tree(n: usize) -> UndirectedTree {
    let edges = (1..n).map(|i| Edge::new(i, i + 1).expect("i < i + 1"));
    UndirectedTree::new(n, edges).expect("a chain spans")
}

/// Symmetric matrix of i.i.d. Uniform(0, 1) weights.
pub fn random_matrix(n: usize, seed: StreamSeed) -> CpmiMatrix {
    let mut rng = seed.rng();
    CpmiMatrix::from_fn(
        n,
        Variant::Absolute,
        Symmetrization::Sum,
        format!("random[{seed}]"),
        |_, _| rng.gen::<f64>(),
    )
    .expect("uniform draws are finite")
}

/// Tree decoded from a random weight matrix, so every pair of words is
/// equally likely to be connected.
pub fn random_tree(n: usize, seed: StreamSeed, projective: bool) -> DecodedTree {
    let n = n.max(1);
    let m = random_matrix(n, seed);
    let decoded = if projective {
        eisner_projective(&m)
    } else {
        max_spanning_tree(&m)
    };
    decoded.expect("random matrix is symmetric and nonempty")
}

/// A random spanning tree whose multiset of arc lengths equals `gold`'s.
///
/// Arcs are placed longest first; each length picks a random unused
/// position among those that keep the forest acyclic, backtracking on dead
/// ends. Each restart has a node budget; when it runs out a fresh random
/// order is tried. The result is uniform over backtracking orders, not
/// over valid trees, and may be nonprojective.
pub fn length_matched_tree(
    gold: &UndirectedTree,
    seed: StreamSeed,
) -> Result<UndirectedTree, BaselineError> {
    length_matched_tree_with(gold, seed, DEFAULT_MAX_RESTARTS)
}

pub fn length_matched_tree_with(
    gold: &UndirectedTree,
    seed: StreamSeed,
    max_restarts: usize,
) -> Result<UndirectedTree, BaselineError> {
    let n = gold.n();
    let mut lengths = gold.lengths();
    lengths.sort_unstable_by(|a, b| b.cmp(a));
    if lengths.is_empty() {
        return Ok(gold.clone());
    }
    let mut rng = seed.rng();
    let budget = 200 + 20 * n * n;
    for _ in 0..max_restarts {
        let mut search = Search {
            n,
            lengths: &lengths,
            forest: Forest::new(n),
            chosen: Vec::with_capacity(lengths.len()),
            budget,
        };
        if search.place(0, &mut rng) {
            let tree = UndirectedTree::new(n, search.chosen)
                .expect("n - 1 acyclic edges span the sentence");
            return Ok(tree);
        }
    }
    Err(BaselineError::NoLengthMatchedTree(max_restarts))
}

struct Search<'a> {
    n: usize,
    lengths: &'a [usize],
    forest: Forest,
    chosen: Vec<Edge>,
    budget: usize,
}

impl Search<'_> {
    fn place(&mut self, k: usize, rng: &mut ChaCha20Rng) -> bool {
        if k == self.lengths.len() {
            return true;
        }
        if self.budget == 0 {
            return false;
        }
        self.budget -= 1;
        let len = self.lengths[k];
        // Within a run of equal lengths, place starts in increasing order so
        // each set of edges is tried once.
        let min_start = if k > 0 && self.lengths[k - 1] == len {
            self.chosen[k - 1].lo() + 1
        } else {
            1
        };
        let mut starts: Vec<usize> = (min_start..=self.n - len).collect();
        starts.shuffle(rng);
        for start in starts {
            let (a, b) = (start, start + len);
            if self.forest.connected(a, b) {
                continue;
            }
            let mark = self.forest.union(a, b);
            self.chosen.push(Edge::new(a, b).expect("len >= 1"));
            if self.place(k + 1, rng) {
                return true;
            }
            self.chosen.pop();
            self.forest.undo(mark);
            if self.budget == 0 {
                return false;
            }
        }
        false
    }
}

/// Union-find with rollback (union by size, no path compression).
struct Forest {
    parent: Vec<usize>,
    size: Vec<usize>,
    history: Vec<(usize, usize)>,
}

impl Forest {
    fn new(n: usize) -> Self {
        Forest {
            parent: (0..=n).collect(),
            size: vec![1; n + 1],
            history: Vec::new(),
        }
    }

    fn find(&self, mut x: usize) -> usize {
        while self.parent[x] != x {
            x = self.parent[x];
        }
        x
    }

    fn connected(&self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }

    fn union(&mut self, a: usize, b: usize) -> usize {
        let mark = self.history.len();
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.history.push((ra, rb));
        mark
    }

    fn undo(&mut self, mark: usize) {
        while self.history.len() > mark {
            let (ra, rb) = self.history.pop().expect("len > mark");
            self.parent[rb] = rb;
            self.size[ra] -= self.size[rb];
        }
    }
}
