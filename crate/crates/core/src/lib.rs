//! Dependency trees that maximize contextualized pointwise mutual
//! information (CPMI) between words, with the baselines, metrics, and
//! exact synthetic-language oracles used to evaluate them.
//!
//! The pipeline is: parse a treebank ([`treebank`]), read word-level
//! conditional log-probabilities produced by some scorer ([`scores`]),
//! assemble a symmetric score matrix ([`matrix`]), decode a maximum
//! spanning tree ([`decode`]), and compare with gold ([`eval`]).

pub mod baselines;
pub mod decode;
pub mod eval;
mod jsonfmt;
pub mod matrix;
pub mod oracle;
pub mod rng;
pub mod scores;
pub mod treebank;
pub mod w2v;

pub use decode::{
    brute_force_best, eisner_projective, max_spanning_tree, DecodedTree, DecoderKind,
};
pub use matrix::{
    build_ltor_matrix, build_matrix, build_pos_matrix, CpmiMatrix, Symmetrization, Variant,
};
pub use rng::StreamSeed;
pub use scores::{cpmi_pair, validate_record, Mode, PosScoreRecord, ScoreRecord};
pub use treebank::{gold_edges, parse_conllu, Edge, Sentence, UndirectedTree};

/// A small English treebank in CoNLL-U, bundled for tests and demos.
pub const SAMPLE_CONLLU: &str = include_str!("../data/sample.conllu");
