//! Exactly solvable synthetic languages.
//!
//! A language is an explicit table from fixed-length sentences to
//! probabilities. Every conditional probability a scorer would estimate
//! can be computed here by marginalization, which makes these tables the
//! reference scorer for the rest of the crate.

use std::collections::{BTreeMap, HashMap};

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::StreamSeed;
use crate::scores::{Mode, ScoreRecord, Target};

/// Largest sentence length accepted by [`verify_equivalence`].
pub const EQUIVALENCE_MAX_LEN: usize = 6;

const SUM_TOLERANCE: f64 = 1e-12;
const ARGMAX_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("probabilities sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("negative or non-finite probability {0}")]
    BadProbability(f64),
    #[error("sentence {0:?} does not have length {1}")]
    WrongLength(Vec<String>, usize),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("sentence {0:?} listed twice")]
    Duplicate(Vec<String>),
    #[error("target position {0} is observed or out of range")]
    BadTarget(usize),
    #[error("observed context has zero probability")]
    ZeroContext,
    #[error("sentence has zero probability")]
    ZeroSentence,
    #[error("{trees} candidate structures exceed the enumeration bound {bound}")]
    TooManyTrees { trees: u64, bound: u64 },
    #[error("sentence length {0} exceeds {EQUIVALENCE_MAX_LEN}")]
    TooLong(usize),
    #[error("tag table has {found} entries for {vocab} symbols")]
    TagTable { found: usize, vocab: usize },
    #[error("invalid language file: {0}")]
    Json(#[from] serde_json::Error),
}

/// A finite distribution over sentences of one fixed length.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticLanguage {
    vocab: Vec<String>,
    length: usize,
    table: BTreeMap<Vec<usize>, f64>,
    seed: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct LanguageFile {
    vocab: Vec<String>,
    n: usize,
    entries: Vec<(Vec<String>, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

impl SyntheticLanguage {
    pub fn new(
        vocab: Vec<String>,
        length: usize,
        entries: Vec<(Vec<String>, f64)>,
    ) -> Result<Self, OracleError> {
        let index: HashMap<&str, usize> = vocab
            .iter()
            .enumerate()
            .map(|(k, v)| (v.as_str(), k))
            .collect();
        let mut table = BTreeMap::new();
        let mut total = 0.0;
        for (sentence, p) in entries {
            if !p.is_finite() || p < 0.0 {
                return Err(OracleError::BadProbability(p));
            }
            if sentence.len() != length {
                return Err(OracleError::WrongLength(sentence, length));
            }
            let mut ids = Vec::with_capacity(length);
            for w in &sentence {
                ids.push(
                    *index
                        .get(w.as_str())
                        .ok_or_else(|| OracleError::UnknownSymbol(w.clone()))?,
                );
            }
            if table.insert(ids, p).is_some() {
                return Err(OracleError::Duplicate(sentence));
            }
            total += p;
        }
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(OracleError::NotNormalized(total));
        }
        Ok(SyntheticLanguage {
            vocab,
            length,
            table,
            seed: None,
        })
    }

    /// Length 2 over `{a, b, c, d}` with `p(a b) = 1/2`, `p(a c) = 1/4`,
    /// `p(d c) = 1/4`.
    pub fn l0() -> Self {
        let s = |a: &str, b: &str| vec![a.to_owned(), b.to_owned()];
        SyntheticLanguage::new(
            ["a", "b", "c", "d"].map(String::from).to_vec(),
            2,
            vec![(s("a", "b"), 0.5), (s("a", "c"), 0.25), (s("d", "c"), 0.25)],
        )
        .expect("L0 is well formed")
    }

    /// Positions drawn independently: `marginals[p][v]` is the probability
    /// of symbol `v` at position `p`.
    pub fn product(vocab: Vec<String>, marginals: &[Vec<f64>]) -> Result<Self, OracleError> {
        let length = marginals.len();
        let mut entries = vec![(Vec::new(), 1.0)];
        for dist in marginals {
            let mut next = Vec::new();
            for (prefix, p) in &entries {
                for (v, &q) in dist.iter().enumerate() {
                    if q > 0.0 {
                        let mut s = prefix.clone();
                        s.push(vocab[v].clone());
                        next.push((s, p * q));
                    }
                }
            }
            entries = next;
        }
        SyntheticLanguage::new(vocab, length, entries)
    }

    /// A random language over `vocab_size` symbols named `a`, `b`, ...
    /// whose support is `support` distinct sentences with exponentially
    /// distributed weights.
    pub fn random(vocab_size: usize, length: usize, support: usize, seed: StreamSeed) -> Self {
        let vocab: Vec<String> = (0..vocab_size).map(symbol_name).collect();
        let total = (vocab_size as u64).saturating_pow(length as u32);
        let support = (support as u64).clamp(1, total) as usize;
        let mut rng = seed.rng();
        let picks = sample(&mut rng, total as usize, support);
        let mut raw: Vec<(Vec<usize>, f64)> = picks
            .iter()
            .map(|code| {
                let mut ids = Vec::with_capacity(length);
                let mut c = code;
                for _ in 0..length {
                    ids.push(c % vocab_size);
                    c /= vocab_size;
                }
                let u: f64 = rng.gen_range(f64::EPSILON..1.0);
                (ids, -u.ln())
            })
            .collect();
        let z: f64 = raw.iter().map(|(_, w)| w).sum();
        for (_, w) in &mut raw {
            *w /= z;
        }
        let entries = raw
            .into_iter()
            .map(|(ids, p)| (ids.iter().map(|&k| vocab[k].clone()).collect(), p))
            .collect();
        let mut lang = SyntheticLanguage::new(vocab, length, entries)
            .expect("generated language is well formed");
        lang.seed = Some(seed.seed);
        lang
    }

    pub fn from_json(text: &str) -> Result<Self, OracleError> {
        let f: LanguageFile = serde_json::from_str(text)?;
        let mut lang = SyntheticLanguage::new(f.vocab, f.n, f.entries)?;
        lang.seed = f.seed;
        Ok(lang)
    }

    pub fn to_json(&self) -> String {
        let f = LanguageFile {
            vocab: self.vocab.clone(),
            n: self.length,
            entries: self
                .table
                .iter()
                .map(|(ids, &p)| (self.decode(ids), p))
                .collect(),
            seed: self.seed,
        };
        serde_json::to_string_pretty(&f).expect("language serializes")
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn length(&self) -> usize {
        self.length
    }

    /// Sentences (as symbol indices) with their probabilities.
    pub fn entries(&self) -> impl Iterator<Item = (&[usize], f64)> {
        self.table.iter().map(|(s, &p)| (s.as_slice(), p))
    }

    pub fn probability(&self, sentence: &[usize]) -> f64 {
        self.table.get(sentence).copied().unwrap_or(0.0)
    }

    pub fn encode(&self, words: &[&str]) -> Result<Vec<usize>, OracleError> {
        words
            .iter()
            .map(|w| {
                self.vocab
                    .iter()
                    .position(|v| v == w)
                    .ok_or_else(|| OracleError::UnknownSymbol((*w).to_owned()))
            })
            .collect()
    }

    pub fn decode(&self, ids: &[usize]) -> Vec<String> {
        ids.iter().map(|&k| self.vocab[k].clone()).collect()
    }

    fn context_mass<'a>(
        &'a self,
        observed: &'a [Option<usize>],
    ) -> impl Iterator<Item = (&'a [usize], f64)> + 'a {
        self.entries().filter(move |(s, _)| {
            observed
                .iter()
                .zip(s.iter())
                .all(|(o, w)| o.is_none_or(|o| o == *w))
        })
    }
}

fn symbol_name(k: usize) -> String {
    if k < 26 {
        ((b'a' + k as u8) as char).to_string()
    } else {
        format!("s{k}")
    }
}

/// Distribution of the symbol at 1-based `target` given the observed
/// positions, marginalizing everything else.
pub fn exact_conditional(
    lang: &SyntheticLanguage,
    observed: &[Option<usize>],
    target: usize,
) -> Result<Vec<f64>, OracleError> {
    if target == 0
        || target > lang.length
        || observed.len() != lang.length
        || observed[target - 1].is_some()
    {
        return Err(OracleError::BadTarget(target));
    }
    let mut dist = vec![0.0; lang.vocab.len()];
    let mut total = 0.0;
    for (s, p) in lang.context_mass(observed) {
        dist[s[target - 1]] += p;
        total += p;
    }
    if total <= 0.0 {
        return Err(OracleError::ZeroContext);
    }
    for d in &mut dist {
        *d /= total;
    }
    Ok(dist)
}

/// `ln p(class(w_target) | observed)` where `class` maps symbols to
/// groups (identity for words, a tag table for POS).
fn log_conditional(
    lang: &SyntheticLanguage,
    sentence: &[usize],
    target: usize,
    hidden: &[usize],
    class: &[usize],
) -> Result<f64, OracleError> {
    let observed: Vec<Option<usize>> = sentence
        .iter()
        .enumerate()
        .map(|(k, &w)| (k + 1 != target && !hidden.contains(&(k + 1))).then_some(w))
        .collect();
    let dist = exact_conditional(lang, &observed, target)?;
    let want = class[sentence[target - 1]];
    let p: f64 = dist
        .iter()
        .enumerate()
        .filter(|(v, _)| class[*v] == want)
        .map(|(_, p)| p)
        .sum();
    Ok(p.ln())
}

fn check_sentence(lang: &SyntheticLanguage, sentence: &[usize]) -> Result<(), OracleError> {
    if sentence.len() != lang.length {
        return Err(OracleError::WrongLength(lang.decode(sentence), lang.length));
    }
    if lang.probability(sentence) <= 0.0 {
        return Err(OracleError::ZeroSentence);
    }
    Ok(())
}

fn record(
    lang: &SyntheticLanguage,
    sentence: &[usize],
    mode: Mode,
    class: &[usize],
    target: Target,
) -> Result<ScoreRecord, OracleError> {
    check_sentence(lang, sentence)?;
    let n = lang.length;
    let mut base = Vec::with_capacity(n);
    let mut drop = vec![vec![None; n]; n];
    for i in 1..=n {
        // Left-to-right conditioning hides everything after the target.
        let future: Vec<usize> = match mode {
            Mode::Bidirectional => Vec::new(),
            Mode::LeftToRight => (i + 1..=n).collect(),
        };
        base.push(log_conditional(lang, sentence, i, &future, class)?);
        for j in 1..=n {
            let defined = j != i && (mode == Mode::Bidirectional || j < i);
            if defined {
                let mut hidden = future.clone();
                hidden.push(j);
                drop[i - 1][j - 1] = Some(log_conditional(lang, sentence, i, &hidden, class)?);
            }
        }
    }
    let id: Vec<String> = lang.decode(sentence);
    Ok(ScoreRecord {
        sentence_id: id.join(" "),
        n,
        mode,
        target,
        base_loglik: base,
        drop_loglik: drop,
        provenance: "oracle-exact;no renormalization beyond exact marginalization".into(),
    })
}

/// Exact bidirectional record: `base[i] = ln p(w_i | all other words)`,
/// `drop[i][j] = ln p(w_i | all other words except w_j)`.
pub fn exact_record(
    lang: &SyntheticLanguage,
    sentence: &[usize],
) -> Result<ScoreRecord, OracleError> {
    let identity: Vec<usize> = (0..lang.vocab.len()).collect();
    record(lang, sentence, Mode::Bidirectional, &identity, Target::Word)
}

/// Exact left-to-right record: conditioning on the prefix, with `w_j`
/// (`j < i`) marginalized out for the drop entries.
pub fn exact_ltor_record(
    lang: &SyntheticLanguage,
    sentence: &[usize],
) -> Result<ScoreRecord, OracleError> {
    let identity: Vec<usize> = (0..lang.vocab.len()).collect();
    record(lang, sentence, Mode::LeftToRight, &identity, Target::Word)
}

/// Exact bidirectional record over tags, where `tag_of[v]` is the tag of
/// symbol `v`.
pub fn exact_pos_record(
    lang: &SyntheticLanguage,
    sentence: &[usize],
    tag_of: &[usize],
) -> Result<ScoreRecord, OracleError> {
    if tag_of.len() != lang.vocab.len() {
        return Err(OracleError::TagTable {
            found: tag_of.len(),
            vocab: lang.vocab.len(),
        });
    }
    record(lang, sentence, Mode::Bidirectional, tag_of, Target::Pos)
}

/// Head assignment: `heads[i]` is the 1-based head of word `i + 1`, or 0
/// for the root.
pub type Heads = Vec<usize>;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SentenceEquivalence {
    pub sentence: Vec<String>,
    pub trees: usize,
    pub pmi_argmax: Vec<Heads>,
    pub cond_argmax: Vec<Heads>,
    pub coincident: bool,
    /// Whether the dependent marginals were the same for every tree.
    pub assumption_holds: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub sentences: usize,
    pub coincident: usize,
    pub assumption_violations: usize,
    pub details: Vec<SentenceEquivalence>,
}

impl EquivalenceReport {
    /// Every sentence whose assumption held had coincident argmax sets.
    pub fn equivalence_holds(&self) -> bool {
        self.details
            .iter()
            .filter(|d| d.assumption_holds)
            .all(|d| d.coincident)
    }
}

/// Compares `argmax_t sum_i pmi(w_i; w_t(i))` with
/// `argmax_t sum_i ln p(w_i | w_t(i))` over every rooted spanning tree of
/// every sentence in the language.
///
/// The root word attaches to an artificial root symbol of probability 1,
/// which contributes 0 to the PMI objective and `ln p(w_root)` to the
/// conditional one. Marginals are the language's positional marginals.
pub fn verify_equivalence(
    lang: &SyntheticLanguage,
    n_trees: u64,
) -> Result<EquivalenceReport, OracleError> {
    verify_equivalence_with(lang, n_trees, |_, _, p| p)
}

/// As [`verify_equivalence`], but the dependent marginal used in the PMI
/// objective is `marginal(heads, position, positional_marginal)`. A
/// marginal that depends on `heads` breaks the assumption behind the
/// equivalence; such sentences are flagged rather than asserted.
pub fn verify_equivalence_with(
    lang: &SyntheticLanguage,
    n_trees: u64,
    marginal: impl Fn(&[usize], usize, f64) -> f64,
) -> Result<EquivalenceReport, OracleError> {
    let n = lang.length;
    if n > EQUIVALENCE_MAX_LEN {
        return Err(OracleError::TooLong(n));
    }
    let trees = rooted_trees(n);
    if trees.len() as u64 > n_trees {
        return Err(OracleError::TooManyTrees {
            trees: trees.len() as u64,
            bound: n_trees,
        });
    }
    let single = positional_marginals(lang);
    let pairs = pair_marginals(lang);

    let mut report = EquivalenceReport::default();
    for (sentence, p) in lang.entries() {
        if p <= 0.0 {
            continue;
        }
        let mut pmi_scores = Vec::with_capacity(trees.len());
        let mut cond_scores = Vec::with_capacity(trees.len());
        let mut dependent_terms = Vec::with_capacity(trees.len());
        for heads in &trees {
            let mut pmi = 0.0;
            let mut cond = 0.0;
            let mut dep = 0.0;
            for i in 0..n {
                let wi = sentence[i];
                let pi = single[i][wi];
                let m = marginal(heads, i + 1, pi);
                dep += m.ln();
                match heads[i] {
                    0 => cond += pi.ln(),
                    h => {
                        let h = h - 1;
                        let wh = sentence[h];
                        let joint = pairs[&(i, h)][&(wi, wh)];
                        let ph = single[h][wh];
                        pmi += joint.ln() - m.ln() - ph.ln();
                        cond += joint.ln() - ph.ln();
                    }
                }
            }
            pmi_scores.push(pmi);
            cond_scores.push(cond);
            dependent_terms.push(dep);
        }
        let spread = dependent_terms
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &d| {
                (lo.min(d), hi.max(d))
            });
        let assumption_holds = spread.1 - spread.0 <= ARGMAX_TOLERANCE;
        let pmi_argmax = argmax_set(&pmi_scores);
        let cond_argmax = argmax_set(&cond_scores);
        let coincident = pmi_argmax == cond_argmax;
        report.sentences += 1;
        report.coincident += usize::from(coincident);
        report.assumption_violations += usize::from(!assumption_holds);
        report.details.push(SentenceEquivalence {
            sentence: lang.decode(sentence),
            trees: trees.len(),
            pmi_argmax: pmi_argmax.iter().map(|&k| trees[k].clone()).collect(),
            cond_argmax: cond_argmax.iter().map(|&k| trees[k].clone()).collect(),
            coincident,
            assumption_holds,
        });
    }
    Ok(report)
}

fn argmax_set(scores: &[f64]) -> Vec<usize> {
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..scores.len())
        .filter(|&k| scores[k] >= best - ARGMAX_TOLERANCE)
        .collect()
}

/// `single[p][v]`: probability of symbol `v` at position `p` (0-based).
fn positional_marginals(lang: &SyntheticLanguage) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; lang.vocab.len()]; lang.length];
    for (s, p) in lang.entries() {
        for (pos, &w) in s.iter().enumerate() {
            out[pos][w] += p;
        }
    }
    out
}

type PairTable = HashMap<(usize, usize), HashMap<(usize, usize), f64>>;

fn pair_marginals(lang: &SyntheticLanguage) -> PairTable {
    let mut out: PairTable = HashMap::new();
    for (s, p) in lang.entries() {
        for a in 0..lang.length {
            for b in 0..lang.length {
                if a != b {
                    *out.entry((a, b))
                        .or_default()
                        .entry((s[a], s[b]))
                        .or_insert(0.0) += p;
                }
            }
        }
    }
    out
}

/// Every head function on `n` words with exactly one root and no cycles.
pub fn rooted_trees(n: usize) -> Vec<Heads> {
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let mut heads = vec![0usize; n];
    loop {
        if is_rooted_tree(&heads) {
            out.push(heads.clone());
        }
        let mut k = 0;
        loop {
            if k == n {
                return out;
            }
            heads[k] += 1;
            if heads[k] <= n {
                break;
            }
            heads[k] = 0;
            k += 1;
        }
    }
}

fn is_rooted_tree(heads: &[usize]) -> bool {
    let n = heads.len();
    if heads.iter().filter(|&&h| h == 0).count() != 1 {
        return false;
    }
    for (k, &h) in heads.iter().enumerate() {
        if h == k + 1 {
            return false;
        }
    }
    (1..=n).all(|start| {
        let mut cur = start;
        for _ in 0..=n {
            if cur == 0 {
                return true;
            }
            cur = heads[cur - 1];
        }
        false
    })
}
