//! Skip-gram with negative sampling, used as a non-contextual PMI control.
//!
//! At the optimum of the SGNS objective `w_i . c_j = pmi(w_i; w_j) - ln k`,
//! so the dot product of target and context vectors is a PMI estimate up
//! to a global shift, which no spanning-tree decoder can see.

use std::collections::HashMap;
use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use thiserror::Error;

use crate::matrix::{CpmiMatrix, MatrixError, Symmetrization, Variant};
use crate::rng::StreamSeed;

const MAGIC: &[u8; 8] = b"CPMIW2V\0";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum W2vError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("vocabulary has {0} types; at least 2 are needed")]
    TinyVocabulary(usize),
    #[error("invalid hyperparameter: {0}")]
    Config(&'static str),
    #[error("not an embedding table (bad magic)")]
    BadMagic,
    #[error("unsupported embedding table version {0}")]
    Version(u32),
    #[error("vocabulary entry is not UTF-8")]
    Utf8,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub window: usize,
    pub negative: usize,
    pub epochs: usize,
    pub seed: u64,
    pub learning_rate: f32,
    /// Frequent-word subsampling threshold; off when `None`.
    pub subsample: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 100,
            window: 5,
            negative: 5,
            epochs: 5,
            seed: 0,
            learning_rate: 0.025,
            subsample: None,
        }
    }
}

impl TrainConfig {
    fn check(&self) -> Result<(), W2vError> {
        if self.dim < 2 {
            return Err(W2vError::Config("dim must be at least 2"));
        }
        if self.window < 1 {
            return Err(W2vError::Config("window must be at least 1"));
        }
        if self.negative < 1 {
            return Err(W2vError::Config("negative must be at least 1"));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(W2vError::Config("learning rate must be positive"));
        }
        Ok(())
    }
}

/// Target and context embeddings, with out-of-vocabulary words mapped to
/// the mean of the in-vocabulary rows.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    words: Vec<String>,
    index: HashMap<String, usize>,
    config: TrainConfig,
    target: Vec<f32>,
    context: Vec<f32>,
    unk_target: Vec<f32>,
    unk_context: Vec<f32>,
}

impl EmbeddingTable {
    fn from_parts(
        words: Vec<String>,
        config: TrainConfig,
        target: Vec<f32>,
        context: Vec<f32>,
    ) -> Self {
        let index = words
            .iter()
            .enumerate()
            .map(|(k, w)| (w.clone(), k))
            .collect();
        let mut table = EmbeddingTable {
            words,
            index,
            config,
            target,
            context,
            unk_target: Vec::new(),
            unk_context: Vec::new(),
        };
        table.unk_target = table.mean_row(&table.target);
        table.unk_context = table.mean_row(&table.context);
        table
    }

    fn mean_row(&self, m: &[f32]) -> Vec<f32> {
        let d = self.config.dim;
        let mut acc = vec![0f64; d];
        for row in m.chunks_exact(d) {
            for (a, &x) in acc.iter_mut().zip(row) {
                *a += f64::from(x);
            }
        }
        let v = self.words.len().max(1) as f64;
        acc.into_iter().map(|a| (a / v) as f32).collect()
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn negative(&self) -> usize {
        self.config.negative
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.words
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn target(&self, word: &str) -> &[f32] {
        match self.index.get(word) {
            Some(&k) => self.row(&self.target, k),
            None => &self.unk_target,
        }
    }

    pub fn context(&self, word: &str) -> &[f32] {
        match self.index.get(word) {
            Some(&k) => self.row(&self.context, k),
            None => &self.unk_context,
        }
    }

    fn row<'a>(&self, m: &'a [f32], k: usize) -> &'a [f32] {
        let d = self.config.dim;
        &m[k * d..(k + 1) * d]
    }

    /// `w_a . c_b`, the shifted PMI estimate for `(a, b)`.
    pub fn pmi(&self, a: &str, b: &str) -> f64 {
        dot(self.target(a), self.context(b))
    }

    /// Binary layout, little endian: magic, version, |V| (u64), d, k,
    /// window, epochs (u32), seed (u64), learning rate (f32), subsampling
    /// threshold (f64, negative when off); then each word as a u32 byte
    /// length and UTF-8 bytes; then the target and context matrices as
    /// row-major f32.
    pub fn write<W: Write>(&self, mut w: W) -> Result<(), W2vError> {
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(VERSION)?;
        w.write_u64::<LittleEndian>(self.words.len() as u64)?;
        w.write_u32::<LittleEndian>(self.config.dim as u32)?;
        w.write_u32::<LittleEndian>(self.config.negative as u32)?;
        w.write_u32::<LittleEndian>(self.config.window as u32)?;
        w.write_u32::<LittleEndian>(self.config.epochs as u32)?;
        w.write_u64::<LittleEndian>(self.config.seed)?;
        w.write_f32::<LittleEndian>(self.config.learning_rate)?;
        w.write_f64::<LittleEndian>(self.config.subsample.unwrap_or(-1.0))?;
        for word in &self.words {
            w.write_u32::<LittleEndian>(word.len() as u32)?;
            w.write_all(word.as_bytes())?;
        }
        for &x in self.target.iter().chain(&self.context) {
            w.write_f32::<LittleEndian>(x)?;
        }
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self, W2vError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(W2vError::BadMagic);
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != VERSION {
            return Err(W2vError::Version(version));
        }
        let v = r.read_u64::<LittleEndian>()? as usize;
        let dim = r.read_u32::<LittleEndian>()? as usize;
        let negative = r.read_u32::<LittleEndian>()? as usize;
        let window = r.read_u32::<LittleEndian>()? as usize;
        let epochs = r.read_u32::<LittleEndian>()? as usize;
        let seed = r.read_u64::<LittleEndian>()?;
        let learning_rate = r.read_f32::<LittleEndian>()?;
        let sub = r.read_f64::<LittleEndian>()?;
        let config = TrainConfig {
            dim,
            window,
            negative,
            epochs,
            seed,
            learning_rate,
            subsample: (sub >= 0.0).then_some(sub),
        };
        let mut words = Vec::with_capacity(v);
        for _ in 0..v {
            let len = r.read_u32::<LittleEndian>()? as usize;
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf)?;
            words.push(String::from_utf8(buf).map_err(|_| W2vError::Utf8)?);
        }
        let mut read_matrix = || -> Result<Vec<f32>, W2vError> {
            let mut m = vec![0f32; v * dim];
            r.read_f32_into::<LittleEndian>(&mut m)?;
            Ok(m)
        };
        let target = read_matrix()?;
        let context = read_matrix()?;
        Ok(EmbeddingTable::from_parts(words, config, target, context))
    }
}

fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| f64::from(x) * f64::from(y))
        .sum()
}

fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

/// Trains SGNS embeddings on tokenized sentences. Context windows do not
/// cross sentence boundaries. Single-threaded and deterministic for a
/// given config.
pub fn train_sgns<S: AsRef<str>>(
    corpus: &[Vec<S>],
    config: &TrainConfig,
) -> Result<EmbeddingTable, W2vError> {
    config.check()?;
    let total_tokens: usize = corpus.iter().map(Vec::len).sum();
    if total_tokens == 0 {
        return Err(W2vError::EmptyCorpus);
    }

    // Vocabulary ordered by descending frequency, then lexicographically.
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for s in corpus {
        for w in s {
            *counts.entry(w.as_ref()).or_insert(0) += 1;
        }
    }
    let mut vocab: Vec<(&str, u64)> = counts.into_iter().collect();
    vocab.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    if vocab.len() < 2 {
        return Err(W2vError::TinyVocabulary(vocab.len()));
    }
    let index: HashMap<&str, usize> = vocab
        .iter()
        .enumerate()
        .map(|(k, (w, _))| (*w, k))
        .collect();
    let freq: Vec<f64> = vocab.iter().map(|(_, c)| *c as f64).collect();
    let noise = WeightedIndex::new(freq.iter().map(|c| c.powf(0.75))).expect("positive counts");
    let keep_prob: Option<Vec<f64>> = config.subsample.map(|t| {
        let total = total_tokens as f64;
        freq.iter()
            .map(|c| ((t / (c / total)).sqrt()).min(1.0))
            .collect()
    });

    let v = vocab.len();
    let d = config.dim;
    let mut rng = StreamSeed::new(config.seed, 0).rng();
    let mut target: Vec<f32> = (0..v * d)
        .map(|_| (rng.gen::<f32>() - 0.5) / d as f32)
        .collect();
    let mut context = vec![0f32; v * d];

    let sentences: Vec<Vec<usize>> = corpus
        .iter()
        .map(|s| s.iter().map(|w| index[w.as_ref()]).collect())
        .collect();
    let schedule = (config.epochs * total_tokens) as f64 + 1.0;
    let mut processed = 0usize;
    let mut grad = vec![0f32; d];

    for _ in 0..config.epochs {
        for sentence in &sentences {
            let kept: Vec<usize> = match &keep_prob {
                Some(p) => sentence
                    .iter()
                    .copied()
                    .filter(|&w| rng.gen::<f64>() < p[w])
                    .collect(),
                None => sentence.clone(),
            };
            for (pos, &center) in kept.iter().enumerate() {
                let progress = processed as f64 / schedule;
                let lr = config.learning_rate * (1.0 - progress).max(1e-4) as f32;
                processed += 1;
                let lo = pos.saturating_sub(config.window);
                let hi = (pos + config.window).min(kept.len() - 1);
                for (ctx_pos, &ctx) in kept.iter().enumerate().take(hi + 1).skip(lo) {
                    if ctx_pos == pos {
                        continue;
                    }
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    let w_row = center * d;
                    for k in 0..=config.negative {
                        let (out, label) = if k == 0 {
                            (ctx, 1.0)
                        } else {
                            let s = noise.sample(&mut rng);
                            if s == ctx {
                                continue;
                            }
                            (s, 0.0)
                        };
                        let c_row = out * d;
                        let f: f32 = (0..d).map(|x| target[w_row + x] * context[c_row + x]).sum();
                        let g = (label - sigmoid(f)) * lr;
                        for x in 0..d {
                            grad[x] += g * context[c_row + x];
                            context[c_row + x] += g * target[w_row + x];
                        }
                    }
                    for x in 0..d {
                        target[w_row + x] += grad[x];
                    }
                }
            }
        }
    }

    let words = vocab.into_iter().map(|(w, _)| w.to_owned()).collect();
    Ok(EmbeddingTable::from_parts(
        words,
        config.clone(),
        target,
        context,
    ))
}

/// Pairwise PMI estimates for one sentence: `w_i . c_j` and `w_j . c_i`
/// combined by `symmetrization`. Only the signed variant is allowed.
pub fn pmi_matrix<S: AsRef<str>>(
    tokens: &[S],
    table: &EmbeddingTable,
    symmetrization: Symmetrization,
    variant: Variant,
) -> Result<CpmiMatrix, W2vError> {
    if variant == Variant::Absolute {
        return Err(MatrixError::AbsoluteNotAllowed(
            "dot products estimate PMI shifted by -ln k, so their magnitude is arbitrary",
        )
        .into());
    }
    let source = format!(
        "w2v[d={},window={},k={},epochs={},seed={}]",
        table.config.dim,
        table.config.window,
        table.config.negative,
        table.config.epochs,
        table.config.seed
    );
    let m = CpmiMatrix::from_fn(
        tokens.len(),
        Variant::Signed,
        symmetrization,
        source,
        |i, j| {
            let (a, b) = (tokens[i - 1].as_ref(), tokens[j - 1].as_ref());
            symmetrization.combine(table.pmi(a, b), table.pmi(b, a))
        },
    )?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus() -> Vec<Vec<String>> {
        let text = "the cat sat on the mat . the dog sat on the log . a cat saw a dog .";
        text.split(" . ")
            .map(|s| s.split_whitespace().map(String::from).collect())
            .collect()
    }

    fn small() -> TrainConfig {
        TrainConfig {
            dim: 2,
            epochs: 1,
            seed: 11,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn deterministic_training() {
        let a = train_sgns(&corpus(), &small()).unwrap();
        let b = train_sgns(&corpus(), &small()).unwrap();
        let (mut ba, mut bb) = (Vec::new(), Vec::new());
        a.write(&mut ba).unwrap();
        b.write(&mut bb).unwrap();
        assert_eq!(ba, bb);
    }

    #[test]
    fn empty_and_tiny_corpora() {
        let empty: Vec<Vec<String>> = vec![vec![]];
        assert!(matches!(
            train_sgns(&empty, &small()),
            Err(W2vError::EmptyCorpus)
        ));
        let tiny = vec![vec!["x".to_owned(), "x".to_owned()]];
        assert!(matches!(
            train_sgns(&tiny, &small()),
            Err(W2vError::TinyVocabulary(1))
        ));
        let bad = TrainConfig { dim: 1, ..small() };
        assert!(matches!(
            train_sgns(&corpus(), &bad),
            Err(W2vError::Config(_))
        ));
    }

    #[test]
    fn oov_uses_average_vectors() {
        let t = train_sgns(&corpus(), &small()).unwrap();
        let d = t.dim();
        let v = t.vocabulary().len() as f64;
        for k in 0..d {
            let mean: f64 = t
                .vocabulary()
                .iter()
                .map(|w| f64::from(t.target(w)[k]))
                .sum::<f64>()
                / v;
            assert!((f64::from(t.target("zebra")[k]) - mean).abs() < 1e-6);
        }
        assert!(!t.contains("zebra"));
    }

    #[test]
    fn identical_tokens() {
        let t = train_sgns(&corpus(), &small()).unwrap();
        let m = pmi_matrix(&["cat", "cat"], &t, Symmetrization::Sum, Variant::Signed).unwrap();
        let wc = dot(t.target("cat"), t.context("cat"));
        assert_eq!(m.get(1, 2), wc + wc);
    }

    #[test]
    fn absolute_refused() {
        let t = train_sgns(&corpus(), &small()).unwrap();
        let err =
            pmi_matrix(&["cat", "dog"], &t, Symmetrization::Sum, Variant::Absolute).unwrap_err();
        assert!(err.to_string().contains("ln k"));
    }

    #[test]
    fn binary_roundtrip() {
        let mut cfg = small();
        cfg.subsample = Some(1e-3);
        let t = train_sgns(&corpus(), &cfg).unwrap();
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        assert_eq!(&buf[..8], MAGIC);
        let back = EmbeddingTable::read(buf.as_slice()).unwrap();
        assert_eq!(back, t);
        assert!(matches!(
            EmbeddingTable::read(&b"NOTMAGIC........"[..]),
            Err(W2vError::BadMagic)
        ));
    }
}
