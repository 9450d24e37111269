//! Attachment metrics and corpus analyses.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::ops::{Add, AddAssign};

use serde::Serialize;
use thiserror::Error;

use crate::scores::{Mode, ScoreRecord};
use crate::treebank::{gold_edges, Edge, Sentence, UndirectedTree};

pub const DEFAULT_MIN_RELATION_COUNT: usize = 60;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("predicted tree has {pred} words, gold has {gold}")]
    LengthMismatch { pred: usize, gold: usize },
    #[error("{preds} predicted trees for {golds} gold sentences")]
    CorpusMismatch { preds: usize, golds: usize },
    #[error("no prediction for sentence `{0}`")]
    MissingPrediction(String),
    #[error("sentence `{0}` has no relation labels")]
    MissingRelations(String),
    #[error("pseudo-perplexity needs a bidirectional record")]
    NotBidirectional,
    #[error("regression needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("regression predictor is constant")]
    ConstantPredictor,
}

fn same_n(pred: &UndirectedTree, gold: &UndirectedTree) -> Result<(), EvalError> {
    if pred.n() != gold.n() {
        return Err(EvalError::LengthMismatch {
            pred: pred.n(),
            gold: gold.n(),
        });
    }
    Ok(())
}

/// Fraction of the `n - 1` gold edges that are also predicted. A
/// one-word sentence scores 1 by convention.
pub fn uuas(pred: &UndirectedTree, gold: &UndirectedTree) -> Result<f64, EvalError> {
    same_n(pred, gold)?;
    if gold.n() <= 1 {
        return Ok(1.0);
    }
    let hit = pred.edges().intersection(gold.edges()).count();
    Ok(hit as f64 / (gold.n() - 1) as f64)
}

/// Intersection and denominators for one subset of edges. Adds
/// componentwise, so corpus totals are micro-averages.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PrecisionRecall {
    pub intersect: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl PrecisionRecall {
    fn from_sets<'a>(
        pred: impl Iterator<Item = &'a Edge>,
        gold: impl Iterator<Item = &'a Edge>,
    ) -> Self {
        let pred: HashSet<&Edge> = pred.collect();
        let gold: HashSet<&Edge> = gold.collect();
        PrecisionRecall {
            intersect: pred.intersection(&gold).count(),
            predicted: pred.len(),
            gold: gold.len(),
        }
    }

    /// `None` when nothing was predicted.
    pub fn precision(&self) -> Option<f64> {
        (self.predicted > 0).then(|| self.intersect as f64 / self.predicted as f64)
    }

    /// `None` when the gold subset is empty.
    pub fn recall(&self) -> Option<f64> {
        (self.gold > 0).then(|| self.intersect as f64 / self.gold as f64)
    }
}

impl Add for PrecisionRecall {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        PrecisionRecall {
            intersect: self.intersect + o.intersect,
            predicted: self.predicted + o.predicted,
            gold: self.gold + o.gold,
        }
    }
}

impl AddAssign for PrecisionRecall {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

/// Precision and recall split by arc length 1 versus longer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LengthPr {
    pub adjacent: PrecisionRecall,
    pub nonadjacent: PrecisionRecall,
}

impl Add for LengthPr {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        LengthPr {
            adjacent: self.adjacent + o.adjacent,
            nonadjacent: self.nonadjacent + o.nonadjacent,
        }
    }
}

impl LengthPr {
    pub fn total(&self) -> PrecisionRecall {
        self.adjacent + self.nonadjacent
    }
}

fn split_pr<'a>(
    pred: impl Iterator<Item = &'a Edge> + Clone,
    gold: impl Iterator<Item = &'a Edge> + Clone,
) -> LengthPr {
    let adj = |e: &&Edge| e.length() == 1;
    let far = |e: &&Edge| e.length() > 1;
    LengthPr {
        adjacent: PrecisionRecall::from_sets(pred.clone().filter(adj), gold.clone().filter(adj)),
        nonadjacent: PrecisionRecall::from_sets(pred.filter(far), gold.filter(far)),
    }
}

pub fn pr_by_length(pred: &UndirectedTree, gold: &UndirectedTree) -> Result<LengthPr, EvalError> {
    same_n(pred, gold)?;
    Ok(split_pr(pred.edges().iter(), gold.edges().iter()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelationRow {
    pub relation: String,
    pub count: usize,
    pub recall: f64,
    pub mean_arc_length: f64,
}

/// Recall of predicted edges on gold arcs, grouped by the dependent's
/// relation label. Only labels with more than `min_count` observations
/// (after the optional length-1 filter) are kept. Rows are ordered by mean
/// arc length, then label.
pub fn recall_by_relation(
    preds: &[UndirectedTree],
    golds: &[Sentence],
    min_count: usize,
    exclude_len1: bool,
) -> Result<Vec<RelationRow>, EvalError> {
    if preds.len() != golds.len() {
        return Err(EvalError::CorpusMismatch {
            preds: preds.len(),
            golds: golds.len(),
        });
    }
    // label -> (count, hits, total length)
    let mut acc: HashMap<&str, (usize, usize, usize)> = HashMap::new();
    for (pred, gold) in preds.iter().zip(golds) {
        if pred.n() != gold.len() {
            return Err(EvalError::LengthMismatch {
                pred: pred.n(),
                gold: gold.len(),
            });
        }
        if gold.relations().iter().all(|r| r.is_empty() || r == "_") {
            return Err(EvalError::MissingRelations(gold.id().to_owned()));
        }
        for (k, (&h, rel)) in gold.heads().iter().zip(gold.relations()).enumerate() {
            if h == 0 {
                continue;
            }
            let e = Edge::new(k + 1, h).expect("validated heads");
            if exclude_len1 && e.length() == 1 {
                continue;
            }
            let entry = acc.entry(rel.as_str()).or_default();
            entry.0 += 1;
            entry.1 += usize::from(pred.contains(&e));
            entry.2 += e.length();
        }
    }
    let mut rows: Vec<RelationRow> = acc
        .into_iter()
        .filter(|(_, (count, _, _))| *count > min_count)
        .map(|(rel, (count, hits, len))| RelationRow {
            relation: rel.to_owned(),
            count,
            recall: hits as f64 / count as f64,
            mean_arc_length: len as f64 / count as f64,
        })
        .collect();
    rows.sort_by(|a, b| {
        a.mean_arc_length
            .total_cmp(&b.mean_arc_length)
            .then_with(|| a.relation.cmp(&b.relation))
    });
    Ok(rows)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LengthHistogram {
    pub counts: BTreeMap<usize, usize>,
    pub total: usize,
    /// `None` for an empty corpus.
    pub fraction_len1: Option<f64>,
}

pub fn length_histogram<'a>(
    trees: impl IntoIterator<Item = &'a UndirectedTree>,
) -> LengthHistogram {
    let mut counts = BTreeMap::new();
    let mut total = 0;
    for t in trees {
        for e in t.edges() {
            *counts.entry(e.length()).or_insert(0) += 1;
            total += 1;
        }
    }
    let ones = counts.get(&1).copied().unwrap_or(0);
    LengthHistogram {
        counts,
        total,
        fraction_len1: (total > 0).then(|| ones as f64 / total as f64),
    }
}

/// An edge identified across a corpus.
pub type CorpusEdge = (String, Edge);

pub fn corpus_edges<'a>(
    trees: impl IntoIterator<Item = (&'a str, &'a UndirectedTree)>,
) -> HashSet<CorpusEdge> {
    trees
        .into_iter()
        .flat_map(|(id, t)| t.edges().iter().map(move |e| (id.to_owned(), *e)))
        .collect()
}

/// `|A ∩ B| / |A ∪ B|`, and 1 when both are empty.
pub fn jaccard_similarity(a: &HashSet<CorpusEdge>, b: &HashSet<CorpusEdge>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

/// `exp(-mean(base_loglik))`.
pub fn pseudo_perplexity(r: &ScoreRecord) -> Result<f64, EvalError> {
    if r.mode != Mode::Bidirectional {
        return Err(EvalError::NotBidirectional);
    }
    let n = r.base_loglik.len().max(1) as f64;
    let mean = r.base_loglik.iter().sum::<f64>() / n;
    Ok((-mean).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OlsFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares line through `(log PPL, UUAS)` points. A constant
/// response gives `R² = 0`.
pub fn ppl_accuracy_correlation(pairs: &[(f64, f64)]) -> Result<OlsFit, EvalError> {
    if pairs.len() < 3 {
        return Err(EvalError::TooFewPoints(pairs.len()));
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pairs.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(EvalError::ConstantPredictor);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        0.0
    } else {
        (sxy * sxy / (sxx * syy)).min(1.0)
    };
    Ok(OlsFit {
        slope,
        intercept,
        r_squared,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EvalOptions {
    /// Drop edges touching punctuation from both trees before scoring.
    pub exclude_punct: bool,
    pub min_relation_count: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            exclude_punct: false,
            min_relation_count: DEFAULT_MIN_RELATION_COUNT,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SentenceScore {
    pub id: String,
    pub n: usize,
    pub uuas: f64,
    /// False for one-word sentences and sentences with no scorable edges.
    pub counted: bool,
}

/// Mean of per-sentence precision and recall, over sentences where each
/// is defined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct MacroPr {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub per_sentence: Vec<SentenceScore>,
    pub mean_uuas: Option<f64>,
    /// Pooled counts across sentences (the headline numbers).
    pub length_pr: LengthPr,
    pub macro_adjacent: MacroPr,
    pub macro_nonadjacent: MacroPr,
    pub relation_table: Vec<RelationRow>,
    pub relation_table_nonadjacent: Vec<RelationRow>,
    pub pred_histogram: LengthHistogram,
    pub gold_histogram: LengthHistogram,
    pub options: EvalOptions,
    pub length_partition_averaging: &'static str,
}

impl EvalReport {
    pub fn per_sentence_uuas(&self) -> Vec<f64> {
        self.per_sentence.iter().map(|s| s.uuas).collect()
    }
}

fn restrict(tree: &UndirectedTree, keep: impl Fn(usize) -> bool) -> Vec<Edge> {
    tree.edges()
        .iter()
        .filter(|e| keep(e.lo()) && keep(e.hi()))
        .copied()
        .collect()
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Scores predicted trees against gold sentences, matching by sentence id.
pub fn evaluate(
    preds: &HashMap<String, UndirectedTree>,
    golds: &[Sentence],
    options: EvalOptions,
) -> Result<EvalReport, EvalError> {
    let mut per_sentence = Vec::with_capacity(golds.len());
    let mut length_pr = LengthPr::default();
    let mut macro_parts: Vec<LengthPr> = Vec::new();
    let mut ordered_preds = Vec::with_capacity(golds.len());
    let mut gold_trees = Vec::with_capacity(golds.len());

    for s in golds {
        let pred = preds
            .get(s.id())
            .ok_or_else(|| EvalError::MissingPrediction(s.id().to_owned()))?;
        let gold = gold_edges(s);
        same_n(pred, &gold)?;
        let keep = |i: usize| !(options.exclude_punct && s.is_punct(i));
        let p_edges = restrict(pred, keep);
        let g_edges = restrict(&gold, keep);
        let parts = split_pr(p_edges.iter(), g_edges.iter());
        let total = parts.total();
        let counted = s.len() > 1 && total.gold > 0;
        let score = if counted {
            total.intersect as f64 / total.gold as f64
        } else {
            1.0
        };
        per_sentence.push(SentenceScore {
            id: s.id().to_owned(),
            n: s.len(),
            uuas: score,
            counted,
        });
        if counted {
            length_pr = length_pr + parts;
            macro_parts.push(parts);
        }
        ordered_preds.push(pred.clone());
        gold_trees.push(gold);
    }

    let mean_uuas = mean(per_sentence.iter().filter(|s| s.counted).map(|s| s.uuas));
    let macro_of = |f: fn(&LengthPr) -> PrecisionRecall| MacroPr {
        precision: mean(macro_parts.iter().filter_map(|p| f(p).precision())),
        recall: mean(macro_parts.iter().filter_map(|p| f(p).recall())),
    };
    let has_relations = golds
        .iter()
        .all(|s| s.relations().iter().any(|r| !r.is_empty() && r != "_"));
    let (relation_table, relation_table_nonadjacent) = if has_relations {
        (
            recall_by_relation(&ordered_preds, golds, options.min_relation_count, false)?,
            recall_by_relation(&ordered_preds, golds, options.min_relation_count, true)?,
        )
    } else {
        (Vec::new(), Vec::new())
    };

    Ok(EvalReport {
        per_sentence,
        mean_uuas,
        length_pr,
        macro_adjacent: macro_of(|p| p.adjacent),
        macro_nonadjacent: macro_of(|p| p.nonadjacent),
        relation_table,
        relation_table_nonadjacent,
        pred_histogram: length_histogram(&ordered_preds),
        gold_histogram: length_histogram(&gold_trees),
        options,
        length_partition_averaging: "micro",
    })
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_owned(), |v| format!("{v:.6}"))
}

/// `model,metric,value` rows; undefined values are written as `-`.
pub fn report_csv_rows(model: &str, r: &EvalReport) -> Vec<String> {
    let adj = r.length_pr.adjacent;
    let far = r.length_pr.nonadjacent;
    let counted = r.per_sentence.iter().filter(|s| s.counted).count();
    vec![
        format!("{model},mean_uuas,{}", fmt_opt(r.mean_uuas)),
        format!("{model},sentences,{counted}"),
        format!("{model},len1_precision,{}", fmt_opt(adj.precision())),
        format!("{model},len1_recall,{}", fmt_opt(adj.recall())),
        format!("{model},len_gt1_precision,{}", fmt_opt(far.precision())),
        format!("{model},len_gt1_recall,{}", fmt_opt(far.recall())),
        format!(
            "{model},len1_precision_macro,{}",
            fmt_opt(r.macro_adjacent.precision)
        ),
        format!(
            "{model},len1_recall_macro,{}",
            fmt_opt(r.macro_adjacent.recall)
        ),
        format!(
            "{model},len_gt1_precision_macro,{}",
            fmt_opt(r.macro_nonadjacent.precision)
        ),
        format!(
            "{model},len_gt1_recall_macro,{}",
            fmt_opt(r.macro_nonadjacent.recall)
        ),
        format!(
            "{model},pred_len1_fraction,{}",
            fmt_opt(r.pred_histogram.fraction_len1)
        ),
        format!(
            "{model},gold_len1_fraction,{}",
            fmt_opt(r.gold_histogram.fraction_len1)
        ),
    ]
}

/// `length,count` rows.
pub fn histogram_csv(h: &LengthHistogram) -> String {
    let mut out = String::from("length,count\n");
    for (len, count) in &h.counts {
        out.push_str(&format!("{len},{count}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::linear_tree;
    use crate::scores::Target;

    fn tree(n: usize, edges: &[(usize, usize)]) -> UndirectedTree {
        UndirectedTree::new(n, edges.iter().map(|&(a, b)| Edge::new(a, b).unwrap())).unwrap()
    }

    fn released() -> UndirectedTree {
        tree(7, &[(1, 3), (2, 3), (3, 7), (4, 7), (5, 6), (6, 7)])
    }

    #[test]
    fn uuas_values() {
        assert_eq!(
            uuas(&tree(3, &[(1, 2), (2, 3)]), &tree(3, &[(1, 2), (1, 3)])),
            Ok(0.5)
        );
        let g = released();
        assert_eq!(uuas(&g, &g), Ok(1.0));
        assert_eq!(uuas(&linear_tree(7), &g), Ok(0.5));
        assert_eq!(uuas(&linear_tree(1), &linear_tree(1)), Ok(1.0));
        assert!(uuas(&linear_tree(3), &g).is_err());
    }

    #[test]
    fn length_partitions() {
        let p = tree(4, &[(1, 2), (2, 3), (1, 4)]);
        let g = tree(4, &[(1, 2), (1, 3), (1, 4)]);
        let r = pr_by_length(&p, &g).unwrap();
        assert_eq!(r.adjacent.precision(), Some(0.5));
        assert_eq!(r.adjacent.recall(), Some(1.0));
        assert_eq!(r.nonadjacent.precision(), Some(1.0));
        assert_eq!(r.nonadjacent.recall(), Some(0.5));
    }

    #[test]
    fn linear_baseline_partitions() {
        let r = pr_by_length(&linear_tree(7), &released()).unwrap();
        assert_eq!(r.adjacent.recall(), Some(1.0));
        assert_eq!(r.nonadjacent.precision(), None);
        assert_eq!(r.nonadjacent.recall(), Some(0.0));
    }

    fn sentence(id: &str, heads: Vec<usize>, rels: &[&str]) -> Sentence {
        let n = heads.len();
        Sentence::new(
            id,
            vec!["w".into(); n],
            None,
            heads,
            rels.iter().map(|r| r.to_string()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn relation_recall() {
        // Two det arcs of length 1, both predicted.
        let s = sentence("a", vec![2, 0, 4, 2], &["det", "root", "det", "obj"]);
        let pred = gold_edges(&s);
        let rows = recall_by_relation(
            std::slice::from_ref(&pred),
            std::slice::from_ref(&s),
            0,
            false,
        )
        .unwrap();
        let det = rows.iter().find(|r| r.relation == "det").unwrap();
        assert_eq!((det.count, det.recall, det.mean_arc_length), (2, 1.0, 1.0));
        let rows = recall_by_relation(&[pred], &[s], 0, true).unwrap();
        assert!(rows.iter().all(|r| r.relation != "det"));
        assert_eq!(rows[0].relation, "obj");
        assert_eq!(rows[0].mean_arc_length, 2.0);
    }

    #[test]
    fn relation_threshold_and_missing() {
        let s = sentence("a", vec![2, 0], &["det", "root"]);
        let p = gold_edges(&s);
        assert!(
            recall_by_relation(std::slice::from_ref(&p), std::slice::from_ref(&s), 1, false)
                .unwrap()
                .is_empty()
        );
        let bare = sentence("b", vec![2, 0], &["_", "_"]);
        assert_eq!(
            recall_by_relation(&[p], &[bare], 0, false),
            Err(EvalError::MissingRelations("b".into()))
        );
    }

    #[test]
    fn histograms() {
        let h = length_histogram(&[linear_tree(4), linear_tree(3)]);
        assert_eq!(h.fraction_len1, Some(1.0));
        assert_eq!(h.total, 5);
        let empty: Vec<UndirectedTree> = Vec::new();
        let h = length_histogram(&empty);
        assert!(h.counts.is_empty());
        assert_eq!(h.fraction_len1, None);
        assert_eq!(length_histogram([&released()]).fraction_len1, Some(0.5));
    }

    #[test]
    fn jaccard_values() {
        let e = |i, j| ("s".to_owned(), Edge::new(i, j).unwrap());
        let a: HashSet<_> = [e(1, 2), e(2, 3)].into();
        let b: HashSet<_> = [e(1, 2), e(3, 4)].into();
        let c: HashSet<_> = [e(5, 6)].into();
        assert_eq!(jaccard_similarity(&a, &a), 1.0);
        assert_eq!(jaccard_similarity(&a, &c), 0.0);
        assert!((jaccard_similarity(&a, &b) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(jaccard_similarity(&HashSet::new(), &HashSet::new()), 1.0);
    }

    fn record(base: Vec<f64>, mode: Mode) -> ScoreRecord {
        let n = base.len();
        ScoreRecord {
            sentence_id: "p".into(),
            n,
            mode,
            target: Target::Word,
            base_loglik: base,
            drop_loglik: vec![vec![None; n]; n],
            provenance: String::new(),
        }
    }

    #[test]
    fn perplexity() {
        let r = record(vec![-(4f64.ln()); 5], Mode::Bidirectional);
        assert!((pseudo_perplexity(&r).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(
            pseudo_perplexity(&record(vec![0.0; 3], Mode::Bidirectional)),
            Ok(1.0)
        );
        assert!(pseudo_perplexity(&record(vec![0.0; 3], Mode::LeftToRight)).is_err());
    }

    #[test]
    fn regression() {
        let fit = ppl_accuracy_correlation(&[(1.0, 3.0), (2.0, 5.0), (4.0, 9.0)]).unwrap();
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        let flat = ppl_accuracy_correlation(&[(1.0, 0.5), (2.0, 0.5), (3.0, 0.5)]).unwrap();
        assert_eq!(flat.r_squared, 0.0);
        assert_eq!(
            ppl_accuracy_correlation(&[(1.0, 1.0)]),
            Err(EvalError::TooFewPoints(1))
        );
        assert_eq!(
            ppl_accuracy_correlation(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)]),
            Err(EvalError::ConstantPredictor)
        );
    }

    #[test]
    fn corpus_report() {
        let s1 = sentence(
            "a",
            vec![3, 3, 0, 7, 6, 7, 3],
            &[
                "nsubjpass",
                "auxpass",
                "root",
                "mark",
                "det",
                "nsubj",
                "advcl",
            ],
        );
        let s2 = sentence("b", vec![0], &["root"]);
        let preds: HashMap<String, UndirectedTree> = [
            ("a".to_owned(), linear_tree(7)),
            ("b".to_owned(), linear_tree(1)),
        ]
        .into();
        let r = evaluate(&preds, &[s1, s2], EvalOptions::default()).unwrap();
        assert_eq!(r.mean_uuas, Some(0.5));
        assert!(!r.per_sentence[1].counted);
        assert_eq!(r.length_pr.adjacent.recall(), Some(1.0));
        assert_eq!(r.length_pr.nonadjacent.precision(), None);
        let rows = report_csv_rows("linear", &r);
        assert!(rows[0].starts_with("linear,mean_uuas,0.5"));
        assert!(rows.iter().any(|l| l == "linear,len_gt1_precision,-"));
    }

    #[test]
    fn punctuation_exclusion() {
        let s = Sentence::new(
            "p",
            vec!["Go".into(), "home".into(), ".".into()],
            Some(vec!["VERB".into(), "ADV".into(), "PUNCT".into()]),
            vec![0, 1, 1],
            vec!["root".into(), "advmod".into(), "punct".into()],
        )
        .unwrap();
        let preds: HashMap<String, UndirectedTree> = [("p".to_owned(), linear_tree(3))].into();
        let incl = evaluate(&preds, std::slice::from_ref(&s), EvalOptions::default()).unwrap();
        assert_eq!(incl.mean_uuas, Some(0.5));
        let excl = evaluate(
            &preds,
            &[s],
            EvalOptions {
                exclude_punct: true,
                ..EvalOptions::default()
            },
        )
        .unwrap();
        assert_eq!(excl.mean_uuas, Some(1.0));
    }
}
