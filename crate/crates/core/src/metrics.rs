//! Alignment quality measurements against a ground-truth correspondence.

use crate::error::{Error, Result};
use crate::scalar::{real, Real};
use ndarray::Array2;

/// Ground-truth correspondence between two type sets: a binary matrix with
/// at least one nonzero entry. In the synthetic protocol it is a bijection
/// (a permutation matrix).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Correspondence {
    matrix: Array2<bool>,
}

impl Correspondence {
    pub fn new(matrix: Array2<bool>) -> Result<Self> {
        if !matrix.iter().any(|&x| x) {
            return Err(Error::ZeroMatrix("correspondence"));
        }
        Ok(Self { matrix })
    }

    /// Build from a {0, 1}-valued matrix, rejecting anything else.
    pub fn from_binary_matrix<S: Real>(matrix: &Array2<S>) -> Result<Self> {
        let mut out = Array2::from_elem(matrix.dim(), false);
        for ((i, j), &v) in matrix.indexed_iter() {
            if v == S::one() {
                out[[i, j]] = true;
            } else if v != S::zero() {
                return Err(Error::InvalidConfig(format!(
                    "correspondence entries must be 0 or 1, got {v} at ({i}, {j})"
                )));
            }
        }
        Self::new(out)
    }

    /// Permutation correspondence: source type `i` matches target type
    /// `perm[i]`.
    pub fn from_permutation(perm: &[usize]) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &j in perm {
            if j >= n || seen[j] {
                return Err(Error::NotAPermutation(format!("{perm:?}")));
            }
            seen[j] = true;
        }
        let mut m = Array2::from_elem((n, n), false);
        for (i, &j) in perm.iter().enumerate() {
            m[[i, j]] = true;
        }
        Self::new(m)
    }

    pub fn matrix(&self) -> &Array2<bool> {
        &self.matrix
    }

    pub fn dims(&self) -> (usize, usize) {
        self.matrix.dim()
    }

    pub fn num_matches(&self) -> usize {
        self.matrix.iter().filter(|&&x| x).count()
    }

    /// `Some(perm)` when the correspondence is a bijection (exactly one
    /// entry per row and per column).
    pub fn as_permutation(&self) -> Option<Vec<usize>> {
        let (m, n) = self.dims();
        if m != n {
            return None;
        }
        let mut perm = vec![usize::MAX; m];
        let mut used = vec![false; n];
        for i in 0..m {
            let row: Vec<usize> = (0..n).filter(|&j| self.matrix[[i, j]]).collect();
            if row.len() != 1 || used[row[0]] {
                return None;
            }
            perm[i] = row[0];
            used[row[0]] = true;
        }
        Some(perm)
    }

    /// The correspondence as a scalar matrix (entries 0 or 1).
    pub fn indicator<S: Real>(&self) -> Array2<S> {
        self.matrix
            .mapv(|x| if x { S::one() } else { S::zero() })
    }
}

fn check_plan<S: Real>(truth: &Correspondence, plan: &Array2<S>) -> Result<()> {
    if truth.dims() != plan.dim() {
        return Err(Error::ShapeMismatch {
            what: "plan vs correspondence",
            expected: format!("{}x{}", truth.dims().0, truth.dims().1),
            actual: format!("{}x{}", plan.nrows(), plan.ncols()),
        });
    }
    if plan.iter().any(|&x| !x.is_finite()) {
        return Err(Error::InvalidConfig("plan entries must be finite".into()));
    }
    Ok(())
}

/// Top-K alignment accuracy: binarize each plan row at its K largest
/// entries (ties broken toward the smaller column index) and count the
/// overlap with the truth, divided by the number of rows.
pub fn top_k_accuracy<S: Real>(
    truth: &Correspondence,
    plan: &Array2<S>,
    k: usize,
) -> Result<S> {
    check_plan(truth, plan)?;
    let (rows, cols) = truth.dims();
    if k == 0 || k > cols {
        return Err(Error::InvalidConfig(format!(
            "top-K size {k} must lie in [1, {cols}]"
        )));
    }
    let mut hits = 0usize;
    for (i, row) in plan.rows().into_iter().enumerate() {
        let mut order: Vec<usize> = (0..cols).collect();
        order.sort_by(|&a, &b| {
            row[b]
                .partial_cmp(&row[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        for &j in order.iter().take(k) {
            if truth.matrix()[[i, j]] {
                hits += 1;
            }
        }
    }
    Ok(real::<S>(hits as f64) / real(rows as f64))
}

/// Cosine similarity between the truth and the plan under the Frobenius
/// inner product. Scale-invariant in the plan; errors if either matrix is
/// identically zero.
pub fn cosine_similarity<S: Real>(truth: &Correspondence, plan: &Array2<S>) -> Result<S> {
    check_plan(truth, plan)?;
    let mut dot = S::zero();
    let mut plan_sq = S::zero();
    for ((i, j), &v) in plan.indexed_iter() {
        if truth.matrix()[[i, j]] {
            dot += v;
        }
        plan_sq += v * v;
    }
    if plan_sq == S::zero() {
        return Err(Error::ZeroMatrix("transport plan"));
    }
    let truth_norm = real::<S>(truth.num_matches() as f64).sqrt();
    Ok(dot / (truth_norm * plan_sq.sqrt()))
}

/// Plan entropy `H = -sum T log T` (natural log, `0 log 0 = 0`). Lower
/// entropy means a more certain correspondence.
pub fn plan_entropy<S: Real>(plan: &Array2<S>) -> S {
    plan.iter()
        .map(|&x| if x > S::zero() { -x * x.ln() } else { S::zero() })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn perfect_alignment_scores_one() {
        let truth = Correspondence::from_permutation(&[1, 0, 2]).unwrap();
        let plan = truth.indicator::<f64>().mapv(|x| x / 3.0);
        assert_eq!(top_k_accuracy(&truth, &plan, 1).unwrap(), 1.0);
        assert!((cosine_similarity(&truth, &plan).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn top1_counts_row_argmax_hits() {
        let truth = Correspondence::from_permutation(&[0, 1]).unwrap();
        let plan = array![[0.1, 0.4], [0.3, 0.2]];
        assert_eq!(top_k_accuracy(&truth, &plan, 1).unwrap(), 0.0);
    }

    #[test]
    fn top_k_with_all_columns_is_total_matches_over_rows() {
        let truth = Correspondence::from_permutation(&[2, 0, 1]).unwrap();
        let plan = array![[0.2, 0.1, 0.05], [0.0, 0.3, 0.05], [0.1, 0.1, 0.1]];
        assert_eq!(top_k_accuracy(&truth, &plan, 3).unwrap(), 1.0);
    }

    #[test]
    fn top_k_monotone_in_k() {
        let truth = Correspondence::from_permutation(&[2, 0, 1]).unwrap();
        let plan = array![[0.2, 0.1, 0.05], [0.0, 0.3, 0.05], [0.2, 0.1, 0.1]];
        let mut prev = 0.0;
        for k in 1..=3 {
            let acc = top_k_accuracy(&truth, &plan, k).unwrap();
            assert!(acc >= prev);
            prev = acc;
        }
    }

    #[test]
    fn top_k_ties_break_toward_lower_column() {
        let truth =
            Correspondence::from_binary_matrix(&array![[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let plan = array![[0.5, 0.5], [0.5, 0.5]];
        // Row 0 picks column 0 (hit), row 1 picks column 0 (miss).
        assert_eq!(top_k_accuracy(&truth, &plan, 1).unwrap(), 0.5);
    }

    #[test]
    fn top_k_validates_k_and_shapes() {
        let truth = Correspondence::from_permutation(&[0, 1]).unwrap();
        let plan = Array2::<f64>::ones((2, 2));
        assert!(top_k_accuracy(&truth, &plan, 3).is_err());
        assert!(top_k_accuracy(&truth, &plan, 0).is_err());
        let bad = Array2::<f64>::ones((2, 3));
        assert!(matches!(
            top_k_accuracy(&truth, &bad, 1),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn cosine_scale_invariance_and_orthogonality() {
        let truth = Correspondence::from_permutation(&[0, 1]).unwrap();
        let scaled = truth.indicator::<f64>().mapv(|x| x * 7.25);
        assert!((cosine_similarity(&truth, &scaled).unwrap() - 1.0).abs() < 1e-12);
        let disjoint = array![[0.0, 0.5], [0.5, 0.0]];
        assert_eq!(cosine_similarity(&truth, &disjoint).unwrap(), 0.0);
    }

    #[test]
    fn cosine_uniform_plan_against_identity() {
        // <I, U>/(||I|| ||U||) with U = 1/4: (2 * 1/4) / (sqrt(2) * 1/2).
        let truth = Correspondence::from_permutation(&[0, 1]).unwrap();
        let plan = Array2::from_elem((2, 2), 0.25);
        let sim = cosine_similarity(&truth, &plan).unwrap();
        assert!((sim - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((sim - 0.7071).abs() < 1e-4);
    }

    #[test]
    fn cosine_zero_plan_is_an_error() {
        let truth = Correspondence::from_permutation(&[0, 1]).unwrap();
        let plan = Array2::<f64>::zeros((2, 2));
        assert!(matches!(
            cosine_similarity(&truth, &plan),
            Err(Error::ZeroMatrix(_))
        ));
    }

    #[test]
    fn entropy_values() {
        // Scaled permutation at C = 10: ln 10.
        let truth = Correspondence::from_permutation(&(0..10).collect::<Vec<_>>()).unwrap();
        let perm_plan = truth.indicator::<f64>().mapv(|x| x / 10.0);
        assert!((plan_entropy(&perm_plan) - 10f64.ln()).abs() < 1e-12);
        // Uniform 1/C^2 at C = 10: 2 ln 10.
        let uniform = Array2::from_elem((10, 10), 0.01);
        assert!((plan_entropy(&uniform) - 2.0 * 10f64.ln()).abs() < 1e-12);
        // Deterministic single entry: zero.
        let mut point = Array2::zeros((3, 3));
        point[[1, 2]] = 1.0;
        assert_eq!(plan_entropy(&point), 0.0);
    }

    #[test]
    fn entropy_at_least_marginal_entropy() {
        // Joint entropy of a coupling dominates each marginal entropy.
        let plan = array![[0.3, 0.1], [0.05, 0.55]];
        let rows = [0.4, 0.6];
        let h_rows: f64 = rows.iter().map(|&x: &f64| -x * x.ln()).sum();
        assert!(plan_entropy(&plan) >= h_rows - 1e-12);
        assert!(plan_entropy(&plan) <= (4f64).ln() + 1e-12);
    }

    #[test]
    fn correspondence_validation() {
        assert!(Correspondence::from_permutation(&[0, 0]).is_err());
        assert!(Correspondence::from_permutation(&[0, 2]).is_err());
        assert!(Correspondence::from_binary_matrix(&array![[0.5]]).is_err());
        assert!(Correspondence::new(Array2::from_elem((2, 2), false)).is_err());
        let c = Correspondence::from_permutation(&[1, 0]).unwrap();
        assert_eq!(c.as_permutation(), Some(vec![1, 0]));
    }
}
