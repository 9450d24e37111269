//! Symmetric pairwise CPMI matrices built from score records.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jsonfmt::Sci;
use crate::scores::{cpmi_pair, validate_record, Mode, PosScoreRecord, ScoreRecord, Violation};

/// Value stored on the diagonal. Decoders never read it.
pub const DIAGONAL_SENTINEL: f64 = 0.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Signed,
    #[default]
    Absolute,
}

/// How the two directional estimates of a pair are merged.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetrization {
    #[default]
    Sum,
    Max,
    /// `s_ij = CPMI(w_i; w_j)` for `i < j`: the earlier word is the target.
    /// Left-to-right records use the only direction they have.
    SingleDirection,
}

impl Symmetrization {
    pub fn combine(self, forward: f64, backward: f64) -> f64 {
        match self {
            Symmetrization::Sum => forward + backward,
            Symmetrization::Max => forward.max(backward),
            Symmetrization::SingleDirection => forward,
        }
    }
}

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("record `{0}` is left-to-right; use build_ltor_matrix")]
    LeftToRightRecord(String),
    #[error("record `{0}` is bidirectional; use build_matrix")]
    BidirectionalRecord(String),
    #[error("record `{id}` is invalid: {first}")]
    InvalidRecord { id: String, first: Violation },
    #[error("matrix is {rows}x{cols}, expected {n}x{n}")]
    Shape { n: usize, rows: usize, cols: usize },
    #[error("non-finite score at ({i}, {j})")]
    NonFinite { i: usize, j: usize },
    #[error("absolute values are not meaningful for this estimator: {0}")]
    AbsoluteNotAllowed(&'static str),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An `n x n` score matrix over 1-based word positions.
#[derive(Clone, Debug, PartialEq)]
pub struct CpmiMatrix {
    sentence_id: String,
    n: usize,
    score: Vec<f64>,
    variant: Variant,
    symmetrization: Symmetrization,
    source: String,
}

impl CpmiMatrix {
    /// Fills `s_ij = s_ji = f(i, j)` for every `i < j`.
    pub fn from_fn(
        n: usize,
        variant: Variant,
        symmetrization: Symmetrization,
        source: impl Into<String>,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self, MatrixError> {
        let mut score = vec![DIAGONAL_SENTINEL; n * n];
        for i in 1..=n {
            for j in i + 1..=n {
                let mut v = f(i, j);
                if !v.is_finite() {
                    return Err(MatrixError::NonFinite { i, j });
                }
                if variant == Variant::Absolute {
                    v = v.abs();
                }
                score[(i - 1) * n + (j - 1)] = v;
                score[(j - 1) * n + (i - 1)] = v;
            }
        }
        Ok(CpmiMatrix {
            sentence_id: String::new(),
            n,
            score,
            variant,
            symmetrization,
            source: source.into(),
        })
    }

    /// Wraps arbitrary rows, which need not be symmetric. Diagonal values
    /// are replaced by the sentinel.
    pub fn from_rows(rows: Vec<Vec<f64>>, source: impl Into<String>) -> Result<Self, MatrixError> {
        let n = rows.len();
        let mut score = Vec::with_capacity(n * n);
        for (a, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(MatrixError::Shape {
                    n,
                    rows: n,
                    cols: row.len(),
                });
            }
            for (b, &v) in row.iter().enumerate() {
                if a == b {
                    score.push(DIAGONAL_SENTINEL);
                } else if !v.is_finite() {
                    return Err(MatrixError::NonFinite { i: a + 1, j: b + 1 });
                } else {
                    score.push(v);
                }
            }
        }
        let variant = if score.iter().all(|&v| v >= 0.0) {
            Variant::Absolute
        } else {
            Variant::Signed
        };
        Ok(CpmiMatrix {
            sentence_id: String::new(),
            n,
            score,
            variant,
            symmetrization: Symmetrization::Sum,
            source: source.into(),
        })
    }

    pub fn with_sentence_id(mut self, id: impl Into<String>) -> Self {
        self.sentence_id = id.into();
        self
    }

    pub fn sentence_id(&self) -> &str {
        &self.sentence_id
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn symmetrization(&self) -> Symmetrization {
        self.symmetrization
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Score of the pair at 1-based positions `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.score[(i - 1) * self.n + (j - 1)]
    }

    pub fn is_symmetric(&self) -> bool {
        (1..=self.n).all(|i| (i + 1..=self.n).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Applies `f` to every off-diagonal entry.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Result<Self, MatrixError> {
        let mut out = self.clone();
        for i in 1..=self.n {
            for j in 1..=self.n {
                if i != j {
                    let v = f(self.get(i, j));
                    if !v.is_finite() {
                        return Err(MatrixError::NonFinite { i, j });
                    }
                    out.score[(i - 1) * self.n + (j - 1)] = v;
                }
            }
        }
        if out.score.iter().any(|&v| v < 0.0) {
            out.variant = Variant::Signed;
        }
        Ok(out)
    }

    /// Rows with `None` on the diagonal.
    pub fn rows(&self) -> Vec<Vec<Option<f64>>> {
        (1..=self.n)
            .map(|i| {
                (1..=self.n)
                    .map(|j| (i != j).then(|| self.get(i, j)))
                    .collect()
            })
            .collect()
    }
}

fn ensure_valid(r: &ScoreRecord) -> Result<(), MatrixError> {
    match validate_record(r).into_iter().next() {
        None => Ok(()),
        Some(first) => Err(MatrixError::InvalidRecord {
            id: r.sentence_id.clone(),
            first,
        }),
    }
}

fn pair(r: &ScoreRecord, i: usize, j: usize) -> f64 {
    cpmi_pair(r, i, j).expect("validated record defines this direction")
}

/// Symmetric matrix from a bidirectional record.
///
/// The two directions are combined first; the absolute value, when asked
/// for, is taken of the combined score.
pub fn build_matrix(
    r: &ScoreRecord,
    symmetrization: Symmetrization,
    variant: Variant,
) -> Result<CpmiMatrix, MatrixError> {
    if r.mode != Mode::Bidirectional {
        return Err(MatrixError::LeftToRightRecord(r.sentence_id.clone()));
    }
    ensure_valid(r)?;
    let source = format!("cpmi[{}]", r.provenance);
    CpmiMatrix::from_fn(r.n, variant, symmetrization, source, |i, j| {
        symmetrization.combine(pair(r, i, j), pair(r, j, i))
    })
    .map(|m| m.with_sentence_id(r.sentence_id.clone()))
}

/// Matrix from a left-to-right record: `s_ij = CPMI(w_i; w_j)` for `i > j`,
/// mirrored.
pub fn build_ltor_matrix(r: &ScoreRecord, variant: Variant) -> Result<CpmiMatrix, MatrixError> {
    if r.mode != Mode::LeftToRight {
        return Err(MatrixError::BidirectionalRecord(r.sentence_id.clone()));
    }
    ensure_valid(r)?;
    let source = format!("ltor-cpmi[{}];single-direction mirror", r.provenance);
    CpmiMatrix::from_fn(
        r.n,
        variant,
        Symmetrization::SingleDirection,
        source,
        |i, j| pair(r, j, i),
    )
    .map(|m| m.with_sentence_id(r.sentence_id.clone()))
}

/// Same as [`build_matrix`] over POS-tag probabilities.
pub fn build_pos_matrix(
    r: &PosScoreRecord,
    symmetrization: Symmetrization,
    variant: Variant,
) -> Result<CpmiMatrix, MatrixError> {
    let mut m = build_matrix(r.record(), symmetrization, variant)?;
    m.source = format!("pos-{}", m.source);
    Ok(m)
}

#[derive(Serialize, Deserialize)]
struct MatrixLine {
    v: u32,
    sentence_id: String,
    n: usize,
    variant: Variant,
    symmetrization: Symmetrization,
    source: String,
    score: Vec<Vec<Option<Sci>>>,
}

pub fn matrix_to_line(m: &CpmiMatrix) -> String {
    let line = MatrixLine {
        v: 1,
        sentence_id: m.sentence_id.clone(),
        n: m.n,
        variant: m.variant,
        symmetrization: m.symmetrization,
        source: m.source.clone(),
        score: m
            .rows()
            .into_iter()
            .map(|row| row.into_iter().map(|c| c.map(Sci)).collect())
            .collect(),
    };
    serde_json::to_string(&line).expect("finite matrix serializes")
}

pub fn matrix_from_line(text: &str, line: usize) -> Result<CpmiMatrix, MatrixError> {
    let raw: MatrixLine =
        serde_json::from_str(text).map_err(|source| MatrixError::Json { line, source })?;
    let n = raw.n;
    if raw.score.len() != n {
        return Err(MatrixError::Shape {
            n,
            rows: raw.score.len(),
            cols: n,
        });
    }
    let rows = raw
        .score
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|c| c.map_or(DIAGONAL_SENTINEL, |s| s.0))
                .collect()
        })
        .collect();
    let mut m = CpmiMatrix::from_rows(rows, raw.source)?;
    m.variant = raw.variant;
    m.symmetrization = raw.symmetrization;
    m.sentence_id = raw.sentence_id;
    Ok(m)
}

pub fn write_matrices<'a, W: Write>(
    mut w: W,
    matrices: impl IntoIterator<Item = &'a CpmiMatrix>,
) -> std::io::Result<()> {
    for m in matrices {
        writeln!(w, "{}", matrix_to_line(m))?;
    }
    Ok(())
}

pub fn read_matrices<R: BufRead>(r: R) -> Result<Vec<CpmiMatrix>, MatrixError> {
    let mut out = Vec::new();
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(matrix_from_line(t, k + 1)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scores::Target;
    use proptest::prelude::*;

    /// Record whose CPMI in direction (i; j) is `cpmi[i-1][j-1]`.
    fn record_from_cpmi(cpmi: &[Vec<f64>], mode: Mode) -> ScoreRecord {
        let n = cpmi.len();
        let base: Vec<f64> = (0..n).map(|k| -1.0 - k as f64).collect();
        let drop = (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| {
                        let defined = a != b && (mode == Mode::Bidirectional || b < a);
                        defined.then(|| base[a] - cpmi[a][b])
                    })
                    .collect()
            })
            .collect();
        ScoreRecord {
            sentence_id: "t".into(),
            n,
            mode,
            target: Target::Word,
            base_loglik: base,
            drop_loglik: drop,
            provenance: "unit".into(),
        }
    }

    #[test]
    fn sum_signed() {
        let r = record_from_cpmi(&[vec![0.0, 0.5], vec![0.3, 0.0]], Mode::Bidirectional);
        let m = build_matrix(&r, Symmetrization::Sum, Variant::Signed).unwrap();
        assert!((m.get(1, 2) - 0.8).abs() < 1e-12);
        assert_eq!(m.get(1, 2), m.get(2, 1));
    }

    #[test]
    fn sum_absolute_after_combining() {
        let r = record_from_cpmi(&[vec![0.0, -0.5], vec![0.3, 0.0]], Mode::Bidirectional);
        let m = build_matrix(&r, Symmetrization::Sum, Variant::Absolute).unwrap();
        assert!((m.get(1, 2) - 0.2).abs() < 1e-12);
        assert_eq!(m.variant(), Variant::Absolute);
    }

    #[test]
    fn max_and_single_direction() {
        let r = record_from_cpmi(&[vec![0.0, -0.5], vec![0.3, 0.0]], Mode::Bidirectional);
        let m = build_matrix(&r, Symmetrization::Max, Variant::Signed).unwrap();
        assert!((m.get(2, 1) - 0.3).abs() < 1e-12);
        let m = build_matrix(&r, Symmetrization::SingleDirection, Variant::Signed).unwrap();
        assert!((m.get(2, 1) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn ltor_matrix() {
        let c = vec![
            vec![0.0, 0.0, 0.0],
            vec![0.4, 0.0, 0.0],
            vec![0.1, 0.7, 0.0],
        ];
        let r = record_from_cpmi(&c, Mode::LeftToRight);
        let m = build_ltor_matrix(&r, Variant::Signed).unwrap();
        assert!((m.get(1, 2) - 0.4).abs() < 1e-12);
        assert!((m.get(1, 3) - 0.1).abs() < 1e-12);
        assert!((m.get(3, 2) - 0.7).abs() < 1e-12);
        assert!(m.source().contains("single-direction"));

        let mut c = c;
        c[1][0] = -0.4;
        let r = record_from_cpmi(&c, Mode::LeftToRight);
        let m = build_ltor_matrix(&r, Variant::Absolute).unwrap();
        assert!((m.get(1, 2) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn mode_mismatch() {
        let r = record_from_cpmi(&[vec![0.0, 0.0], vec![0.1, 0.0]], Mode::LeftToRight);
        let err = build_matrix(&r, Symmetrization::Sum, Variant::Absolute).unwrap_err();
        assert!(err.to_string().contains("build_ltor_matrix"));
        let r = record_from_cpmi(&[vec![0.0, 0.1], vec![0.1, 0.0]], Mode::Bidirectional);
        assert!(build_ltor_matrix(&r, Variant::Absolute).is_err());
    }

    #[test]
    fn zero_information_pos_probe() {
        let mut r = record_from_cpmi(&vec![vec![0.0; 4]; 4], Mode::Bidirectional);
        r.target = Target::Pos;
        let p = PosScoreRecord::try_from(r).unwrap();
        let m = build_pos_matrix(&p, Symmetrization::Sum, Variant::Absolute).unwrap();
        assert!(m.rows().iter().flatten().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn pos_mirror_of_word_example() {
        let mut r = record_from_cpmi(&[vec![0.0, 0.5], vec![0.3, 0.0]], Mode::Bidirectional);
        r.target = Target::Pos;
        let p = PosScoreRecord::try_from(r).unwrap();
        let m = build_pos_matrix(&p, Symmetrization::Sum, Variant::Signed).unwrap();
        assert!((m.get(1, 2) - 0.8).abs() < 1e-12);
        assert!(m.source().starts_with("pos-"));
    }

    #[test]
    fn serialization_roundtrip() {
        let r = record_from_cpmi(
            &[
                vec![0.0, 0.5, -0.25],
                vec![0.3, 0.0, 1.0 / 3.0],
                vec![0.2, 0.1, 0.0],
            ],
            Mode::Bidirectional,
        );
        let m = build_matrix(&r, Symmetrization::Sum, Variant::Signed).unwrap();
        let mut buf = Vec::new();
        write_matrices(&mut buf, [&m]).unwrap();
        let back = read_matrices(buf.as_slice()).unwrap();
        assert_eq!(back, vec![m]);
    }

    fn cpmi_grid() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (2usize..7).prop_flat_map(|n| {
            proptest::collection::vec(proptest::collection::vec(-5.0f64..5.0, n), n)
        })
    }

    fn sym_strategy() -> impl Strategy<Value = Symmetrization> {
        prop_oneof![
            Just(Symmetrization::Sum),
            Just(Symmetrization::Max),
            Just(Symmetrization::SingleDirection)
        ]
    }

    proptest! {
        #[test]
        fn symmetric_for_every_mode(c in cpmi_grid(), sym in sym_strategy()) {
            let r = record_from_cpmi(&c, Mode::Bidirectional);
            for variant in [Variant::Signed, Variant::Absolute] {
                let m = build_matrix(&r, sym, variant).unwrap();
                prop_assert!(m.is_symmetric());
            }
        }

        #[test]
        fn absolute_is_abs_of_signed(c in cpmi_grid(), sym in sym_strategy()) {
            let r = record_from_cpmi(&c, Mode::Bidirectional);
            let s = build_matrix(&r, sym, Variant::Signed).unwrap();
            let a = build_matrix(&r, sym, Variant::Absolute).unwrap();
            for i in 1..=s.n() {
                for j in 1..=s.n() {
                    if i != j {
                        prop_assert_eq!(a.get(i, j), s.get(i, j).abs());
                        prop_assert!(a.get(i, j) >= 0.0);
                    }
                }
            }
        }

        #[test]
        fn sum_is_linear_in_gaps(c in cpmi_grid(), scale in -4.0f64..4.0) {
            let scaled: Vec<Vec<f64>> =
                c.iter().map(|row| row.iter().map(|v| v * scale).collect()).collect();
            let m1 = build_matrix(&record_from_cpmi(&c, Mode::Bidirectional), Symmetrization::Sum, Variant::Signed).unwrap();
            let m2 = build_matrix(&record_from_cpmi(&scaled, Mode::Bidirectional), Symmetrization::Sum, Variant::Signed).unwrap();
            for i in 1..=m1.n() {
                for j in 1..=m1.n() {
                    if i != j {
                        prop_assert!((m2.get(i, j) - scale * m1.get(i, j)).abs() < 1e-9);
                    }
                }
            }
        }
    }
}
