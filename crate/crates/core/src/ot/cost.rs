//! Cost structure of the fused discrepancy.
//!
//! With MSE loss `L(a, b) = |a - b|^2`, the fused cost of pairing source
//! type `j` with target type `j'` under a coupling `T` is
//!
//! ```text
//! (1 - alpha) * L(mu_s[j], mu_t[j'])                        (absolute term)
//!     + alpha * sum_{i,i'} L(A_s[i,j], A_t[i',j']) T[i,i']  (relational term)
//! ```
//!
//! The relational matrix is evaluated through the squared-loss
//! decomposition, which costs O(C^3) instead of the O(C^4) quadruple sum:
//!
//! ```text
//! L_A(T) = ((A_s . A_s)' r) 1' + 1 ((A_t . A_t)' c)' - 2 A_s' T A_t
//! ```
//!
//! where `r`, `c` are the row and column sums of `T`. Using the realized
//! sums (rather than the nominal marginals) makes the identity exact for
//! any nonnegative `T`.

use super::TransportPlan;
use crate::error::{Error, Result};
use crate::hawkes::HawkesParams;
use crate::linalg::frobenius_inner;
use crate::scalar::Real;
use ndarray::{Array2, Axis};

/// Validated pairing of two parameter sets with a fusion weight.
#[derive(Debug, Clone)]
pub struct CostMatrices<S> {
    l_mu: Array2<S>,
    a_s: Array2<S>,
    a_t: Array2<S>,
    alpha: S,
}

impl<S: Real> CostMatrices<S> {
    pub fn new(params_s: &HawkesParams<S>, params_t: &HawkesParams<S>, alpha: S) -> Result<Self> {
        check_alpha(alpha)?;
        let mu_s = params_s.mu();
        let mu_t = params_t.mu();
        let l_mu = Array2::from_shape_fn((mu_s.len(), mu_t.len()), |(i, j)| {
            let d = mu_s[i] - mu_t[j];
            d * d
        });
        Ok(Self {
            l_mu,
            a_s: params_s.a().clone(),
            a_t: params_t.a().clone(),
            alpha,
        })
    }

    /// Feature cost `L_mu[i, j] = |mu_s[i] - mu_t[j]|^2`.
    pub fn l_mu(&self) -> &Array2<S> {
        &self.l_mu
    }

    pub fn alpha(&self) -> S {
        self.alpha
    }

    /// Relational cost `L_A(T)` for the given plan.
    pub fn relational(&self, plan: &TransportPlan<S>) -> Result<Array2<S>> {
        relational_from_raw(&self.a_s, &self.a_t, plan)
    }

    /// Fused cost `(1 - alpha) L_mu + alpha L_A(T)`.
    ///
    /// The endpoints short-circuit so that `alpha = 0` depends on the base
    /// intensities only and `alpha = 1` on the infectivity matrices only.
    pub fn fused(&self, plan: &TransportPlan<S>) -> Result<Array2<S>> {
        if self.alpha == S::zero() {
            Ok(self.l_mu.clone())
        } else if self.alpha == S::one() {
            self.relational(plan)
        } else {
            let rel = self.relational(plan)?;
            Ok(&self.l_mu * (S::one() - self.alpha) + &rel * self.alpha)
        }
    }
}

fn check_alpha<S: Real>(alpha: S) -> Result<()> {
    if !alpha.is_finite() || alpha < S::zero() || alpha > S::one() {
        return Err(Error::AlphaOutOfRange(alpha.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(())
}

fn relational_from_raw<S: Real>(
    a_s: &Array2<S>,
    a_t: &Array2<S>,
    plan: &TransportPlan<S>,
) -> Result<Array2<S>> {
    let (c_s, c_t) = plan.dims();
    if a_s.dim() != (c_s, c_s) {
        return Err(Error::ShapeMismatch {
            what: "source infectivity matrix",
            expected: format!("{c_s}x{c_s}"),
            actual: format!("{}x{}", a_s.nrows(), a_s.ncols()),
        });
    }
    if a_t.dim() != (c_t, c_t) {
        return Err(Error::ShapeMismatch {
            what: "target infectivity matrix",
            expected: format!("{c_t}x{c_t}"),
            actual: format!("{}x{}", a_t.nrows(), a_t.ncols()),
        });
    }
    let t = plan.matrix();
    let r = t.sum_axis(Axis(1));
    let c = t.sum_axis(Axis(0));
    let v_s = a_s.mapv(|x| x * x).t().dot(&r); // len c_s, indexed by j
    let v_t = a_t.mapv(|x| x * x).t().dot(&c); // len c_t, indexed by j'
    let cross = a_s.t().dot(t).dot(a_t);
    let two = S::one() + S::one();
    let mut out = Array2::from_shape_fn((c_s, c_t), |(j, jp)| v_s[j] + v_t[jp] - two * cross[[j, jp]]);
    // The exact value is a nonnegative combination of squares; clamp the
    // cancellation residue.
    out.mapv_inplace(|x| x.max(S::zero()));
    Ok(out)
}

/// Relational (Gromov-Wasserstein) cost matrix
/// `L_A(T)[j, j'] = sum_{i, i'} |A_s[i, j] - A_t[i', j']|^2 T[i, i']`.
pub fn relational_cost<S: Real>(
    a_s: &Array2<S>,
    a_t: &Array2<S>,
    plan: &TransportPlan<S>,
) -> Result<Array2<S>> {
    relational_from_raw(a_s, a_t, plan)
}

/// Fused Gromov-Wasserstein discrepancy value at a given plan:
/// `<(1 - alpha) L_mu + alpha L_A(T), T>`.
pub fn fgw_discrepancy<S: Real>(
    params_s: &HawkesParams<S>,
    params_t: &HawkesParams<S>,
    plan: &TransportPlan<S>,
    alpha: S,
) -> Result<S> {
    let costs = CostMatrices::new(params_s, params_t, alpha)?;
    let fused = costs.fused(plan)?;
    Ok(frobenius_inner(&fused, plan.matrix()))
}
