//! Proximal-point outer loop for the fused transport subproblem.
//!
//! The relational part of the fused cost depends on the plan itself, so the
//! subproblem is solved by successive KL-proximal steps: evaluate the fused
//! cost at the current plan, take one Sinkhorn-projected proximal step
//! against it, repeat until the plan stops moving. Each step minimizes an
//! upper bound touching the objective at the current iterate, so the
//! discrepancy trace is non-increasing.

use super::cost::CostMatrices;
use super::sinkhorn::sinkhorn_prox_step;
use super::{Marginals, TransportPlan};
use crate::error::{Error, Result};
use crate::hawkes::HawkesParams;
use crate::linalg::{frobenius_inner, l1_distance};
use crate::scalar::{real, tol, Real};

/// Knobs for the transport solver. `tau = None` picks a scale-adaptive
/// default of `0.1 x` the mean entry of the initial fused cost.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportConfig<S> {
    pub tau: Option<S>,
    pub outer_max_iters: usize,
    pub outer_tol: S,
    pub sinkhorn_max_iters: usize,
    pub sinkhorn_tol: S,
}

impl<S: Real> Default for TransportConfig<S> {
    fn default() -> Self {
        Self {
            tau: None,
            outer_max_iters: 200,
            outer_tol: tol(1e-6),
            sinkhorn_max_iters: super::sinkhorn::SINKHORN_MAX_ITERS,
            sinkhorn_tol: tol(super::sinkhorn::SINKHORN_TOL),
        }
    }
}

/// Result of a transport solve: the final plan, the discrepancy value at
/// every outer iterate (including the initial plan), and the proximal
/// weight actually used.
#[derive(Debug, Clone)]
pub struct TransportSolution<S> {
    pub plan: TransportPlan<S>,
    pub objective_trace: Vec<S>,
    pub converged: bool,
    pub tau: S,
}

/// Solve `min_{T in Pi} <(1 - alpha) L_mu + alpha L_A(T), T>` starting from
/// `init`, which must be feasible for `marginals`.
pub fn solve_transport<S: Real>(
    params_s: &HawkesParams<S>,
    params_t: &HawkesParams<S>,
    marginals: &Marginals<S>,
    alpha: S,
    init: &TransportPlan<S>,
    config: &TransportConfig<S>,
) -> Result<TransportSolution<S>> {
    let (c_s, c_t) = marginals.dims();
    if params_s.num_types() != c_s || params_t.num_types() != c_t {
        return Err(Error::ShapeMismatch {
            what: "marginals vs parameters",
            expected: format!("{}x{}", params_s.num_types(), params_t.num_types()),
            actual: format!("{c_s}x{c_t}"),
        });
    }
    if init.dims() != (c_s, c_t) {
        return Err(Error::ShapeMismatch {
            what: "initial plan",
            expected: format!("{c_s}x{c_t}"),
            actual: format!("{}x{}", init.dims().0, init.dims().1),
        });
    }

    let costs = CostMatrices::new(params_s, params_t, alpha)?;
    let mut plan = init.clone();
    let mut fused = costs.fused(&plan)?;
    let tau = config.tau.unwrap_or_else(|| default_tau(&fused));
    let mut value = frobenius_inner(&fused, plan.matrix());
    let mut trace = vec![value];
    let mut converged = false;

    for _ in 0..config.outer_max_iters {
        let next = match sinkhorn_prox_step(
            &fused,
            &plan,
            tau,
            config.sinkhorn_max_iters,
            config.sinkhorn_tol,
        ) {
            Ok(next) => next,
            // The chain has sharpened the plan to where the inner solver
            // can no longer track it; the current iterate is the answer.
            Err(Error::SinkhornStalled { .. }) => break,
            Err(other) => return Err(other),
        };
        let next_fused = costs.fused(&next)?;
        let next_value = frobenius_inner(&next_fused, next.matrix());
        // Inexact inner solves can leave the objective flat plus rounding
        // noise; a step that no longer descends means the scheme has
        // stagnated, so keep the current plan.
        let guard = tol::<S>(1e-12) * (S::one() + value.abs());
        if next_value > value + guard {
            converged = true;
            break;
        }
        let delta = l1_distance(next.matrix(), plan.matrix());
        plan = next;
        fused = next_fused;
        value = next_value;
        trace.push(value);
        if delta < config.outer_tol {
            converged = true;
            break;
        }
    }

    Ok(TransportSolution {
        plan,
        objective_trace: trace,
        converged,
        tau,
    })
}

fn default_tau<S: Real>(fused: &ndarray::Array2<S>) -> S {
    let mean = fused.sum() / real(fused.len() as f64);
    if mean > S::zero() && mean.is_finite() {
        mean * real(0.1)
    } else {
        // Degenerate all-zero cost: any positive weight works, the prox
        // step just returns the prior.
        real(1e-3)
    }
}
