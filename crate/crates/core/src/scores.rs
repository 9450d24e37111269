//! Word-level conditional log-probability records exchanged with scorers.
//!
//! A record holds, for one sentence, `log p(w_i | C_i)` and
//! `log p(w_i | C_i without w_j)` in nats. Files are JSON Lines
//! (`.cpmi-scores.jsonl`), one record per line; lines starting with `#`
//! are comments.

use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jsonfmt::Sci;

pub const SCHEMA_VERSION: u32 = 1;

/// Which context a scorer conditions on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// The whole sentence minus the target (masked language models).
    Bidirectional,
    /// Only the preceding words (left-to-right language models).
    LeftToRight,
}

/// What the probabilities are probabilities of.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// The word form itself.
    #[default]
    Word,
    /// The gold part-of-speech tag, under a probe.
    Pos,
}

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("direction unavailable: ({i}, {j}) is not defined in this record")]
    DirectionUnavailable { i: usize, j: usize },
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: unsupported schema version {found}")]
    Version { line: usize, found: u32 },
    #[error("refusing to write invalid record `{id}`: {violations}")]
    InvalidRecord { id: String, violations: String },
    #[error("expected a POS record, found a word record")]
    NotPos,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Conditional log-likelihoods for one sentence.
///
/// `base_loglik[k]` and `drop_loglik[k][m]` are indexed from 0 and describe
/// positions `k + 1` and `m + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreRecord {
    pub sentence_id: String,
    pub n: usize,
    pub mode: Mode,
    pub target: Target,
    pub base_loglik: Vec<f64>,
    pub drop_loglik: Vec<Vec<Option<f64>>>,
    pub provenance: String,
}

/// A record whose entries are log-probabilities of gold POS tags.
#[derive(Clone, Debug, PartialEq)]
pub struct PosScoreRecord(ScoreRecord);

impl PosScoreRecord {
    pub fn record(&self) -> &ScoreRecord {
        &self.0
    }

    pub fn into_inner(self) -> ScoreRecord {
        self.0
    }
}

impl TryFrom<ScoreRecord> for PosScoreRecord {
    type Error = ScoreError;

    fn try_from(r: ScoreRecord) -> Result<Self, Self::Error> {
        if r.target == Target::Pos {
            Ok(PosScoreRecord(r))
        } else {
            Err(ScoreError::NotPos)
        }
    }
}

/// A single problem found by [`validate_record`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    ShapeMismatch(String),
    NonFinite { i: usize, j: Option<usize> },
    DiagonalDefined(usize),
    FutureConditioner { i: usize, j: usize },
    MissingEntry { i: usize, j: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ShapeMismatch(what) => write!(f, "shape mismatch: {what}"),
            Violation::NonFinite { i, j: None } => write!(f, "non-finite base entry at {i}"),
            Violation::NonFinite { i, j: Some(j) } => {
                write!(f, "non-finite drop entry at ({i}, {j})")
            }
            Violation::DiagonalDefined(i) => write!(f, "diagonal defined at ({i}, {i})"),
            Violation::FutureConditioner { i, j } => {
                write!(f, "future conditioner in LtoR mode at ({i}, {j})")
            }
            Violation::MissingEntry { i, j } => write!(f, "missing entry at ({i}, {j})"),
        }
    }
}

/// Lists everything wrong with a record; empty means valid.
pub fn validate_record(r: &ScoreRecord) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = r.n;
    if n == 0 {
        out.push(Violation::ShapeMismatch("n must be at least 1".into()));
    }
    if r.base_loglik.len() != n {
        out.push(Violation::ShapeMismatch(format!(
            "base has {} entries, n = {n}",
            r.base_loglik.len()
        )));
    }
    if r.drop_loglik.len() != n {
        out.push(Violation::ShapeMismatch(format!(
            "drop has {} rows, n = {n}",
            r.drop_loglik.len()
        )));
    }
    for (k, row) in r.drop_loglik.iter().enumerate() {
        if row.len() != n {
            out.push(Violation::ShapeMismatch(format!(
                "drop row {} has {} entries, n = {n}",
                k + 1,
                row.len()
            )));
        }
    }
    if !out.is_empty() {
        return out;
    }
    for (k, &b) in r.base_loglik.iter().enumerate() {
        if !b.is_finite() {
            out.push(Violation::NonFinite { i: k + 1, j: None });
        }
    }
    for (k, row) in r.drop_loglik.iter().enumerate() {
        let i = k + 1;
        for (m, cell) in row.iter().enumerate() {
            let j = m + 1;
            let expected = i != j && (r.mode == Mode::Bidirectional || j < i);
            match cell {
                Some(v) => {
                    if i == j {
                        out.push(Violation::DiagonalDefined(i));
                    } else if !expected {
                        out.push(Violation::FutureConditioner { i, j });
                    } else if !v.is_finite() {
                        out.push(Violation::NonFinite { i, j: Some(j) });
                    }
                }
                None if expected => out.push(Violation::MissingEntry { i, j }),
                None => {}
            }
        }
    }
    out
}

/// `CPMI(w_i; w_j | s) = log p(w_i | C_i) - log p(w_i | C_i \ {w_j})`, in
/// nats, for 1-based positions.
pub fn cpmi_pair(r: &ScoreRecord, i: usize, j: usize) -> Result<f64, ScoreError> {
    let unavailable = ScoreError::DirectionUnavailable { i, j };
    if i == 0 || j == 0 || i > r.n || j > r.n || i == j {
        return Err(unavailable);
    }
    let base = r.base_loglik.get(i - 1).copied();
    let dropped = r
        .drop_loglik
        .get(i - 1)
        .and_then(|row| row.get(j - 1))
        .copied()
        .flatten();
    match (base, dropped) {
        (Some(b), Some(d)) => Ok(b - d),
        _ => Err(unavailable),
    }
}

#[derive(Serialize, Deserialize)]
struct RecordLine {
    v: u32,
    sentence_id: String,
    n: usize,
    mode: Mode,
    #[serde(default)]
    target: Target,
    base: Vec<Sci>,
    drop: Vec<Vec<Option<Sci>>>,
    #[serde(default)]
    provenance: String,
}

/// Serializes a valid record as one JSON line (no trailing newline).
pub fn record_to_line(r: &ScoreRecord) -> Result<String, ScoreError> {
    let violations = validate_record(r);
    if !violations.is_empty() {
        let text: Vec<String> = violations.iter().map(Violation::to_string).collect();
        return Err(ScoreError::InvalidRecord {
            id: r.sentence_id.clone(),
            violations: text.join("; "),
        });
    }
    let line = RecordLine {
        v: SCHEMA_VERSION,
        sentence_id: r.sentence_id.clone(),
        n: r.n,
        mode: r.mode,
        target: r.target,
        base: r.base_loglik.iter().copied().map(Sci).collect(),
        drop: r
            .drop_loglik
            .iter()
            .map(|row| row.iter().map(|c| c.map(Sci)).collect())
            .collect(),
        provenance: r.provenance.clone(),
    };
    Ok(serde_json::to_string(&line).expect("record serializes"))
}

/// Parses one JSON line. `line` is used in error messages only.
pub fn record_from_line(text: &str, line: usize) -> Result<ScoreRecord, ScoreError> {
    let raw: RecordLine =
        serde_json::from_str(text).map_err(|source| ScoreError::Json { line, source })?;
    if raw.v != SCHEMA_VERSION {
        return Err(ScoreError::Version { line, found: raw.v });
    }
    Ok(ScoreRecord {
        sentence_id: raw.sentence_id,
        n: raw.n,
        mode: raw.mode,
        target: raw.target,
        base_loglik: raw.base.into_iter().map(|s| s.0).collect(),
        drop_loglik: raw
            .drop
            .into_iter()
            .map(|row| row.into_iter().map(|c| c.map(|s| s.0)).collect())
            .collect(),
        provenance: raw.provenance,
    })
}

pub fn write_records<'a, W: Write>(
    mut w: W,
    records: impl IntoIterator<Item = &'a ScoreRecord>,
) -> Result<(), ScoreError> {
    for r in records {
        writeln!(w, "{}", record_to_line(r)?)?;
    }
    Ok(())
}

/// Reads every record, skipping blank and `#` lines.
pub fn read_records<R: BufRead>(r: R) -> Vec<Result<ScoreRecord, ScoreError>> {
    let mut out = Vec::new();
    for (k, line) in r.lines().enumerate() {
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                out.push(Err(e.into()));
                break;
            }
        };
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        out.push(record_from_line(trimmed, k + 1));
    }
    out
}
