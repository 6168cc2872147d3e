//! Pairwise-comparison matrices, criterion weight extraction, and
//! consistency diagnostics.
//!
//! A judgment matrix holds positive preference ratios `a[i][j]` meaning
//! "criterion i is `a[i][j]` times as important as criterion j". The matrix
//! must be reciprocal (`a[j][i] = 1/a[i][j]`) with a unit diagonal. Weights
//! are extracted with the principal-eigenvector method by default; two
//! approximation methods are provided for cross-checking. Judgment quality
//! is measured by the inconsistency ratio: the inconsistency index
//! `(lambda_max - n) / (n - 1)` divided by the random-matrix index for the
//! same dimension, acceptable when at most 0.1.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance for the reciprocity check `a[i][j] * a[j][i] = 1`.
/// Wide enough to admit decimal-entered judgments like 0.333333333 for 1/3.
pub const RECIPROCITY_TOL: f64 = 1e-9;

/// Largest supported judgment matrix dimension.
pub const MAX_DIMENSION: usize = 15;

/// Inconsistency indices of random reciprocal matrices, indexed by
/// dimension 1..=9. Dimensions above the table are refused, not
/// extrapolated.
const RANDOM_INDEX_TABLE: [f64; 9] = [0.0, 0.0, 0.58, 0.9, 1.12, 1.24, 1.32, 1.41, 1.45];

/// Threshold on the inconsistency ratio below which judgments are accepted.
pub const ACCEPTABLE_RATIO: f64 = 0.1;

#[derive(Debug, Error, PartialEq)]
pub enum AhpError {
    #[error("matrix must be square: row {row} has {got} entries, expected {expected}")]
    NotSquare {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("matrix dimension {0} outside supported range 1..={MAX_DIMENSION}")]
    BadDimension(usize),
    #[error("entry ({i},{j}) = {value} must be strictly positive and finite")]
    NonPositiveEntry { i: usize, j: usize, value: f64 },
    #[error("diagonal entry ({i},{i}) = {value}, expected 1")]
    DiagonalNotOne { i: usize, value: f64 },
    #[error("reciprocity violated at ({i},{j}): a_ij * a_ji = {product}, expected 1")]
    ReciprocityViolation { i: usize, j: usize, product: f64 },
    #[error("power iteration did not converge within {max_iterations} iterations")]
    NonConvergence { max_iterations: usize },
    #[error("degenerate weights: w[{index}] = 0, consistency ratio undefined")]
    DegenerateWeights { index: usize },
    #[error("weight vector length {got} does not match matrix dimension {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("no random-matrix inconsistency index tabulated for n = {0} (table covers 1..=9)")]
    RandomIndexOutOfRange(usize),
    #[error("matrix document: {0}")]
    Document(String),
}

/// A validated reciprocal pairwise-comparison matrix.
///
/// Construction goes through [`validate_pairwise`]; a value of this type
/// always satisfies the unit-diagonal, positivity, and reciprocity
/// invariants. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseMatrix {
    n: usize,
    entries: Vec<f64>, // row-major n*n
}

impl PairwiseMatrix {
    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    /// Matrix-vector product `A * v`.
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, x)| a * x).sum())
            .collect()
    }
}

/// Weight extraction method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMethod {
    /// Principal eigenvector via power iteration. The default.
    Eigenvector,
    /// Average of the column-normalized matrix rows.
    ColumnNormalization,
    /// Normalized geometric means of the rows.
    RowGeometricMean,
}

impl WeightMethod {
    pub const ALL: [WeightMethod; 3] = [
        WeightMethod::Eigenvector,
        WeightMethod::ColumnNormalization,
        WeightMethod::RowGeometricMean,
    ];
}

/// A normalized criterion weight vector together with the method that
/// produced it. Weights are strictly positive and sum to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionWeights {
    pub weights: Vec<f64>,
    pub method: WeightMethod,
}

impl CriterionWeights {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Consistency diagnostics for one judgment matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    /// Estimate of the largest eigenvalue: mean of `(A*w)_i / w_i`.
    pub lambda_max: f64,
    /// `(lambda_max - n) / (n - 1)`; 0 for `n <= 1`.
    pub inconsistency_index: f64,
    /// Tabulated random-matrix index for this dimension.
    pub random_index: f64,
    /// `inconsistency_index / random_index`; defined as 0 for `n <= 2`.
    pub inconsistency_ratio: f64,
    /// True when the ratio is at most 0.1.
    pub acceptable: bool,
}

/// Validate a raw square matrix of judgments into a [`PairwiseMatrix`].
///
/// Checks squareness, dimension bounds, strict positivity, unit diagonal,
/// and reciprocity. Transitive consistency (`a_ik * a_kj = a_ij`) is NOT
/// required here; it is measured separately by [`consistency`].
pub fn validate_pairwise(raw: &[Vec<f64>]) -> Result<PairwiseMatrix, AhpError> {
    let n = raw.len();
    if n == 0 || n > MAX_DIMENSION {
        return Err(AhpError::BadDimension(n));
    }
    for (i, row) in raw.iter().enumerate() {
        if row.len() != n {
            return Err(AhpError::NotSquare {
                row: i,
                got: row.len(),
                expected: n,
            });
        }
    }
    let mut entries = Vec::with_capacity(n * n);
    for (i, row) in raw.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() || v <= 0.0 {
                return Err(AhpError::NonPositiveEntry { i, j, value: v });
            }
            if i == j && (v - 1.0).abs() > RECIPROCITY_TOL {
                return Err(AhpError::DiagonalNotOne { i, value: v });
            }
            entries.push(v);
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let product = entries[i * n + j] * entries[j * n + i];
            if (product - 1.0).abs() > RECIPROCITY_TOL {
                return Err(AhpError::ReciprocityViolation { i, j, product });
            }
        }
    }
    Ok(PairwiseMatrix { n, entries })
}

/// Stopping tolerance for power iteration (max-norm change between
/// successive normalized iterates).
const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITERATIONS: usize = 10_000;

/// Extract a normalized weight vector from a validated matrix.
pub fn compute_weights(
    m: &PairwiseMatrix,
    method: WeightMethod,
) -> Result<CriterionWeights, AhpError> {
    let n = m.dimension();
    let weights = match method {
        WeightMethod::Eigenvector => {
            let mut w = vec![1.0 / n as f64; n];
            let mut converged = false;
            for _ in 0..POWER_MAX_ITERATIONS {
                let next = normalize(m.apply(&w));
                let delta = w
                    .iter()
                    .zip(&next)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                w = next;
                if delta <= POWER_TOL {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(AhpError::NonConvergence {
                    max_iterations: POWER_MAX_ITERATIONS,
                });
            }
            w
        }
        WeightMethod::ColumnNormalization => {
            let mut col_sums = vec![0.0; n];
            for i in 0..n {
                for (j, sum) in col_sums.iter_mut().enumerate() {
                    *sum += m.entry(i, j);
                }
            }
            let w: Vec<f64> = (0..n)
                .map(|i| (0..n).map(|j| m.entry(i, j) / col_sums[j]).sum::<f64>() / n as f64)
                .collect();
            normalize(w)
        }
        WeightMethod::RowGeometricMean => {
            let w: Vec<f64> = (0..n)
                .map(|i| {
                    let log_mean = m.row(i).iter().map(|a| a.ln()).sum::<f64>() / n as f64;
                    log_mean.exp()
                })
                .collect();
            normalize(w)
        }
    };
    Ok(CriterionWeights { weights, method })
}

fn normalize(v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    v.into_iter().map(|x| x / total).collect()
}

/// Random-matrix inconsistency index for dimension `n`, from the standard
/// table for n = 1..=9. Larger dimensions are refused.
pub fn rmii(n: usize) -> Result<f64, AhpError> {
    if n == 0 || n > RANDOM_INDEX_TABLE.len() {
        return Err(AhpError::RandomIndexOutOfRange(n));
    }
    Ok(RANDOM_INDEX_TABLE[n - 1])
}

/// Consistency diagnostics for `m` given weights `w` computed from it.
///
/// `lambda_max` is estimated as the mean over rows of `(A*w)_i / w_i`,
/// which equals the principal eigenvalue exactly when `w` is the principal
/// eigenvector. For `n <= 2` the ratio is defined as 0: a 1x1 or
/// reciprocal 2x2 matrix is always consistent.
pub fn consistency(
    m: &PairwiseMatrix,
    w: &CriterionWeights,
) -> Result<ConsistencyReport, AhpError> {
    let n = m.dimension();
    if w.len() != n {
        return Err(AhpError::DimensionMismatch {
            got: w.len(),
            expected: n,
        });
    }
    if let Some(index) = w.weights.iter().position(|&x| x == 0.0) {
        return Err(AhpError::DegenerateWeights { index });
    }
    let random_index = rmii(n)?;
    let aw = m.apply(&w.weights);
    let lambda_max = aw
        .iter()
        .zip(&w.weights)
        .map(|(num, den)| num / den)
        .sum::<f64>()
        / n as f64;
    let inconsistency_index = if n <= 1 {
        0.0
    } else {
        (lambda_max - n as f64) / (n as f64 - 1.0)
    };
    let inconsistency_ratio = if n <= 2 {
        0.0
    } else {
        inconsistency_index / random_index
    };
    Ok(ConsistencyReport {
        lambda_max,
        inconsistency_index,
        random_index,
        inconsistency_ratio,
        acceptable: inconsistency_ratio <= ACCEPTABLE_RATIO,
    })
}

/// JSON document form of a judgment matrix:
/// `{"criteria": ["name", ...], "matrix": [[...], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixDocument {
    pub criteria: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
}

impl MatrixDocument {
    pub fn from_json(json: &str) -> Result<Self, AhpError> {
        let doc: MatrixDocument =
            serde_json::from_str(json).map_err(|e| AhpError::Document(e.to_string()))?;
        if doc.criteria.len() != doc.matrix.len() {
            return Err(AhpError::Document(format!(
                "{} criteria named but matrix has {} rows",
                doc.criteria.len(),
                doc.matrix.len()
            )));
        }
        Ok(doc)
    }

    pub fn from_reader(mut r: impl Read) -> Result<Self, AhpError> {
        let mut buf = String::new();
        r.read_to_string(&mut buf)
            .map_err(|e| AhpError::Document(e.to_string()))?;
        Self::from_json(&buf)
    }

    pub fn from_path(path: &Path) -> Result<Self, AhpError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AhpError::Document(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<PairwiseMatrix, AhpError> {
        validate_pairwise(&self.matrix)
    }
}

/// Write weights as CSV rows `criterion,weight`.
pub fn write_weights_csv(
    out: impl Write,
    criteria: &[String],
    weights: &CriterionWeights,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["criterion", "weight"])?;
    for (name, weight) in criteria.iter().zip(&weights.weights) {
        w.write_record([name.as_str(), &weight.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn consistent_3x3() -> PairwiseMatrix {
        validate_pairwise(&[
            vec![1.0, 2.0, 4.0],
            vec![0.5, 1.0, 2.0],
            vec![0.25, 0.5, 1.0],
        ])
        .unwrap()
    }

    #[test]
    fn all_ones_matrix_is_valid() {
        let m = validate_pairwise(&[vec![1.0; 3], vec![1.0; 3], vec![1.0; 3]]).unwrap();
        assert_eq!(m.dimension(), 3);
    }

    #[test]
    fn reciprocity_violation_is_rejected() {
        let err = validate_pairwise(&[vec![1.0, 2.0], vec![0.4, 1.0]]).unwrap_err();
        assert!(matches!(
            err,
            AhpError::ReciprocityViolation { i: 0, j: 1, .. }
        ));
    }

    #[test]
    fn non_square_is_rejected() {
        let err = validate_pairwise(&[vec![1.0, 2.0], vec![0.5, 1.0, 3.0]]).unwrap_err();
        assert!(matches!(err, AhpError::NotSquare { row: 1, .. }));
    }

    #[test]
    fn non_positive_entry_is_rejected() {
        let err = validate_pairwise(&[vec![1.0, -2.0], vec![-0.5, 1.0]]).unwrap_err();
        assert!(matches!(err, AhpError::NonPositiveEntry { .. }));
    }

    #[test]
    fn bad_diagonal_is_rejected() {
        let err = validate_pairwise(&[vec![2.0]]).unwrap_err();
        assert!(matches!(err, AhpError::DiagonalNotOne { i: 0, .. }));
    }

    #[test]
    fn oversized_matrix_is_rejected() {
        let raw = vec![vec![1.0; 16]; 16];
        assert_eq!(
            validate_pairwise(&raw).unwrap_err(),
            AhpError::BadDimension(16)
        );
    }

    #[test]
    fn all_ones_gives_uniform_weights_every_method() {
        let m = validate_pairwise(&vec![vec![1.0; 4]; 4]).unwrap();
        for method in WeightMethod::ALL {
            let w = compute_weights(&m, method).unwrap();
            for x in &w.weights {
                assert!((x - 0.25).abs() < 1e-12, "{method:?} gave {x}");
            }
        }
    }

    // Expected weights solved by hand from A*w = 3w: columns of the
    // consistent matrix are proportional to (4, 2, 1).
    #[test]
    fn consistent_matrix_weights_match_hand_solution() {
        let m = consistent_3x3();
        let expected = [4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0];
        for method in WeightMethod::ALL {
            let w = compute_weights(&m, method).unwrap();
            for (got, want) in w.weights.iter().zip(expected) {
                assert!((got - want).abs() < 1e-9, "{method:?}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn consistent_matrix_reports_zero_inconsistency() {
        let m = consistent_3x3();
        let w = compute_weights(&m, WeightMethod::Eigenvector).unwrap();
        let report = consistency(&m, &w).unwrap();
        assert!((report.lambda_max - 3.0).abs() < 1e-9);
        assert!(report.inconsistency_index.abs() < 1e-9);
        assert!(report.inconsistency_ratio.abs() < 1e-9);
        assert!(report.acceptable);
    }

    // Principal eigenvalue of this maximally cyclic matrix is
    // 3.9166923627818 (checked against a dense eigensolver); the
    // inconsistency ratio lands far above the 0.1 acceptance line.
    #[test]
    fn cyclic_matrix_is_unacceptable() {
        let m = validate_pairwise(&[
            vec![1.0, 2.0, 0.5],
            vec![0.5, 1.0, 4.0],
            vec![2.0, 0.25, 1.0],
        ])
        .unwrap();
        let w = compute_weights(&m, WeightMethod::Eigenvector).unwrap();
        let report = consistency(&m, &w).unwrap();
        assert!((report.lambda_max - 3.9166923627818).abs() < 1e-9);
        assert!(report.inconsistency_ratio > 0.1);
        assert!(!report.acceptable);
    }

    #[test]
    fn rmii_matches_table() {
        let expected = [0.0, 0.0, 0.58, 0.9, 1.12, 1.24, 1.32, 1.41, 1.45];
        for (i, want) in expected.iter().enumerate() {
            assert_eq!(rmii(i + 1).unwrap(), *want);
        }
        assert!(rmii(10).is_err());
        assert!(rmii(0).is_err());
    }

    #[test]
    fn two_by_two_ratio_defined_as_zero() {
        let m = validate_pairwise(&[vec![1.0, 3.0], vec![1.0 / 3.0, 1.0]]).unwrap();
        let w = compute_weights(&m, WeightMethod::Eigenvector).unwrap();
        let report = consistency(&m, &w).unwrap();
        assert_eq!(report.inconsistency_ratio, 0.0);
        assert!(report.acceptable);
        assert!((report.lambda_max - 2.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_weights_are_rejected() {
        let m = consistent_3x3();
        let w = CriterionWeights {
            weights: vec![1.0, 0.0, 0.0],
            method: WeightMethod::Eigenvector,
        };
        assert!(matches!(
            consistency(&m, &w),
            Err(AhpError::DegenerateWeights { index: 1 })
        ));
    }

    #[test]
    fn matrix_document_round_trip() {
        let json = r#"{"criteria":["a","b"],"matrix":[[1.0,2.0],[0.5,1.0]]}"#;
        let doc = MatrixDocument::from_json(json).unwrap();
        let m = doc.validate().unwrap();
        assert_eq!(m.dimension(), 2);
        assert_eq!(m.entry(0, 1), 2.0);
    }

    #[test]
    fn matrix_document_rejects_name_count_mismatch() {
        let json = r#"{"criteria":["a"],"matrix":[[1.0,2.0],[0.5,1.0]]}"#;
        assert!(MatrixDocument::from_json(json).is_err());
    }

    // The committed five-criterion fixture must reproduce the reference
    // weight vector (0.52, 0.15, 0.14, 0.12, 0.07) with a clean
    // consistency report. The weights sum to exactly 1.00.
    #[test]
    fn bundled_fixture_reproduces_reference_weights() {
        let path =
            std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/ahp_criteria.json");
        let doc = MatrixDocument::from_path(&path).unwrap();
        assert_eq!(doc.criteria.len(), 5);
        let matrix = doc.validate().unwrap();
        let expected = [0.52, 0.15, 0.14, 0.12, 0.07];
        for method in WeightMethod::ALL {
            let w = compute_weights(&matrix, method).unwrap();
            for (got, want) in w.weights.iter().zip(expected) {
                assert!((got - want).abs() < 1e-9, "{method:?}: {got} vs {want}");
            }
        }
        let w = compute_weights(&matrix, WeightMethod::Eigenvector).unwrap();
        let report = consistency(&matrix, &w).unwrap();
        assert!(report.acceptable);
        assert!(report.inconsistency_index.abs() < 1e-9);
    }

    #[test]
    fn weights_csv_format() {
        let mut buf = Vec::new();
        let w = CriterionWeights {
            weights: vec![0.75, 0.25],
            method: WeightMethod::Eigenvector,
        };
        write_weights_csv(&mut buf, &["speed".into(), "cost".into()], &w).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "criterion,weight\nspeed,0.75\ncost,0.25\n");
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn consistent_matrix_from(weights: &[f64]) -> Vec<Vec<f64>> {
            weights
                .iter()
                .map(|wi| weights.iter().map(|wj| wi / wj).collect())
                .collect()
        }

        proptest! {
            // A matrix built as a_ij = w_i / w_j satisfies the transitivity
            // identity exactly, so every method must agree and the
            // inconsistency index must vanish.
            #[test]
            fn generated_consistent_matrices_agree(
                raw in prop::collection::vec(0.05f64..20.0, 3..=9)
            ) {
                let m = validate_pairwise(&consistent_matrix_from(&raw)).unwrap();
                let eig = compute_weights(&m, WeightMethod::Eigenvector).unwrap();
                let col = compute_weights(&m, WeightMethod::ColumnNormalization).unwrap();
                let geo = compute_weights(&m, WeightMethod::RowGeometricMean).unwrap();
                for i in 0..m.dimension() {
                    prop_assert!((eig.weights[i] - col.weights[i]).abs() < 1e-6);
                    prop_assert!((eig.weights[i] - geo.weights[i]).abs() < 1e-6);
                }
                let report = consistency(&m, &eig).unwrap();
                prop_assert!(report.inconsistency_index.abs() <= 1e-6);
            }

            // Weights always normalize and stay strictly positive, and the
            // eigenvalue estimate respects lambda_max >= n.
            #[test]
            fn weights_normalized_and_lambda_bounded(
                raw in prop::collection::vec(0.1f64..10.0, 2..=6)
            ) {
                let n = raw.len();
                // Reciprocal but not consistent: fill the upper triangle
                // from the raw pool, mirror the lower.
                let mut matrix = vec![vec![1.0; n]; n];
                let mut k = 0;
                for i in 0..n {
                    for j in (i + 1)..n {
                        let v = raw[k % raw.len()] + 0.1 * (k as f64);
                        matrix[i][j] = v;
                        matrix[j][i] = 1.0 / v;
                        k += 1;
                    }
                }
                let m = validate_pairwise(&matrix).unwrap();
                for method in WeightMethod::ALL {
                    let w = compute_weights(&m, method).unwrap();
                    let total: f64 = w.weights.iter().sum();
                    prop_assert!((total - 1.0).abs() < 1e-9);
                    prop_assert!(w.weights.iter().all(|&x| x > 0.0));
                }
                let w = compute_weights(&m, WeightMethod::Eigenvector).unwrap();
                let lambda = consistency(&m, &w).unwrap().lambda_max;
                prop_assert!(lambda >= n as f64 - 1e-9);
            }

            // Scaling row i by c and column i by 1/c preserves validity
            // (reciprocity and diagonal), whatever c > 0.
            #[test]
            fn row_column_rescale_preserves_validity(
                raw in prop::collection::vec(0.05f64..20.0, 3..=6),
                scale in 0.1f64..10.0,
            ) {
                let mut matrix = consistent_matrix_from(&raw);
                let n = matrix.len();
                let target = n / 2;
                for j in 0..n {
                    if j != target {
                        matrix[target][j] *= scale;
                        matrix[j][target] /= scale;
                    }
                }
                let m = validate_pairwise(&matrix).unwrap();
                prop_assert_eq!(m.dimension(), n);
            }
        }
    }
}
