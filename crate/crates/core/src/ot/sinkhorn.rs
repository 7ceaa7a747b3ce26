//! KL-proximal Sinkhorn step.
//!
//! One proximal-point iterate for a linear transport cost:
//!
//! ```text
//! argmin_{T in Pi(u_s, u_t)}  <cost, T> + tau * KL(T || prior)
//! ```
//!
//! with the generalized divergence
//! `KL(T || P) = sum T log(T / P) - T + P`. The minimizer is the Sinkhorn
//! projection of the kernel `K = prior . exp(-cost / tau)` onto the
//! transport polytope: alternate row and column rescalings until the
//! marginal L1 error drops below the stopping tolerance.
//!
//! The cost is shifted by its minimum before exponentiating (the projection
//! is invariant to constant shifts). If the kernel still underflows, the
//! same iteration runs in log domain with log-sum-exp reductions.

use super::{Marginals, TransportPlan};
use crate::error::{Error, Result};
use crate::linalg::l1_distance_vec;
use crate::scalar::{real, tol, Real};
use ndarray::{Array1, Array2, Axis};

/// Default inner-iteration cap.
pub const SINKHORN_MAX_ITERS: usize = 1000;
/// Default marginal L1 stopping tolerance.
pub const SINKHORN_TOL: f64 = 1e-8;

/// Solve the KL-proximal subproblem for the given cost, prior plan, and
/// proximal weight `tau`.
///
/// Stops once the marginal L1 error is below `stop_tol` or after
/// `max_iters` scalings, then projects the result exactly onto the
/// polytope (a rank-one rounding whose size is bounded by the remaining
/// marginal error). A plan still far from feasible after the iteration cap
/// fails with [`Error::SinkhornStalled`]; an all-zero kernel row or column
/// fails with [`Error::SinkhornUnderflow`].
pub fn sinkhorn_prox_step<S: Real>(
    cost: &Array2<S>,
    prior: &TransportPlan<S>,
    tau: S,
    max_iters: usize,
    stop_tol: S,
) -> Result<TransportPlan<S>> {
    if !(tau > S::zero()) || !tau.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "proximal weight tau must be positive and finite, got {tau}"
        )));
    }
    if cost.dim() != prior.dims() {
        return Err(Error::ShapeMismatch {
            what: "transport cost matrix",
            expected: format!("{}x{}", prior.dims().0, prior.dims().1),
            actual: format!("{}x{}", cost.nrows(), cost.ncols()),
        });
    }
    if cost.iter().any(|&x| !x.is_finite()) {
        return Err(Error::InvalidConfig("cost matrix must be finite".into()));
    }

    let c_min = cost.iter().cloned().fold(S::infinity(), S::min);
    let kernel = {
        let mut k = cost.mapv(|x| (-(x - c_min) / tau).exp());
        k.zip_mut_with(prior.matrix(), |k, &p| *k *= p);
        k
    };

    // Entries this small lose all relative precision in plain scalings;
    // run the iteration in log domain instead.
    let underflow_floor = S::min_positive_value() * real(1e8);
    let outcome = if kernel.iter().any(|&k| k < underflow_floor) {
        log_domain(cost, prior, tau, c_min, max_iters, stop_tol)?
    } else {
        match plain_domain(&kernel, prior.marginals(), max_iters, stop_tol) {
            Some(out) => out,
            // Scalings degenerated mid-run; retry stabilized.
            None => log_domain(cost, prior, tau, c_min, max_iters, stop_tol)?,
        }
    };

    let (plan, err, iters) = outcome;
    if err > tol(1e-4) {
        // Too far from the polytope for the rounding step to be a small
        // correction; treat as a genuine failure.
        return Err(Error::SinkhornStalled {
            error: err.to_f64().unwrap_or(f64::NAN),
            iterations: iters,
        });
    }
    let rounded = round_to_polytope(plan, prior.marginals());
    TransportPlan::new(rounded, prior.marginals().clone())
}

/// Exact projection of an almost-feasible plan onto the transport polytope:
/// scale any row/column exceeding its marginal down to it, then spread the
/// remaining deficit as a rank-one update. Perturbs the plan by at most the
/// incoming marginal L1 error, and leaves already-exact plans untouched.
fn round_to_polytope<S: Real>(mut plan: Array2<S>, marginals: &Marginals<S>) -> Array2<S> {
    let u_s = marginals.source();
    let u_t = marginals.target();
    let rows = plan.sum_axis(Axis(1));
    for (i, mut row) in plan.rows_mut().into_iter().enumerate() {
        if rows[i] > u_s[i] && rows[i] > S::zero() {
            let scale = u_s[i] / rows[i];
            row.mapv_inplace(|x| x * scale);
        }
    }
    let cols = plan.sum_axis(Axis(0));
    for j in 0..plan.ncols() {
        if cols[j] > u_t[j] && cols[j] > S::zero() {
            let scale = u_t[j] / cols[j];
            plan.column_mut(j).mapv_inplace(|x| x * scale);
        }
    }
    let row_deficit = (u_s - &plan.sum_axis(Axis(1))).mapv(|x| x.max(S::zero()));
    let col_deficit = (u_t - &plan.sum_axis(Axis(0))).mapv(|x| x.max(S::zero()));
    let total: S = row_deficit.sum();
    if total > S::zero() {
        for ((i, j), v) in plan.indexed_iter_mut() {
            *v += row_deficit[i] * col_deficit[j] / total;
        }
    }
    plan
}

/// Plain-domain scaling; returns `None` when the scalings become
/// non-finite so the caller can retry in log domain.
fn plain_domain<S: Real>(
    kernel: &Array2<S>,
    marginals: &Marginals<S>,
    max_iters: usize,
    stop_tol: S,
) -> Option<(Array2<S>, S, usize)> {
    let u_s = marginals.source();
    let u_t = marginals.target();
    let mut a: Array1<S> = Array1::ones(u_s.len());
    let mut b: Array1<S> = Array1::ones(u_t.len());
    let mut kb = kernel.dot(&b);
    let mut err = S::infinity();
    let mut iters = 0usize;
    for it in 1..=max_iters {
        a = u_s / &kb;
        let kta = kernel.t().dot(&a);
        b = u_t / &kta;
        kb = kernel.dot(&b);
        if a.iter().any(|x| !x.is_finite()) || b.iter().any(|x| !x.is_finite()) {
            return None;
        }
        // Columns are exact right after the b-update; only rows can be off.
        let rows = &a * &kb;
        err = l1_distance_vec(&rows, u_s);
        iters = it;
        if err < stop_tol {
            break;
        }
    }
    let mut plan = kernel.clone();
    for ((i, j), v) in plan.indexed_iter_mut() {
        *v = *v * a[i] * b[j];
    }
    Some((plan, err, iters))
}

fn log_domain<S: Real>(
    cost: &Array2<S>,
    prior: &TransportPlan<S>,
    tau: S,
    c_min: S,
    max_iters: usize,
    stop_tol: S,
) -> Result<(Array2<S>, S, usize)> {
    let u_s = prior.marginals().source();
    let u_t = prior.marginals().target();
    let (m, n) = cost.dim();
    let log_k = Array2::from_shape_fn((m, n), |(i, j)| {
        prior.matrix()[[i, j]].ln() - (cost[[i, j]] - c_min) / tau
    });
    // A row or column that is -inf everywhere can never carry mass.
    let row_dead = (0..m).any(|i| log_k.row(i).iter().all(|&x| x == S::neg_infinity()));
    let col_dead = (0..n).any(|j| log_k.column(j).iter().all(|&x| x == S::neg_infinity()));
    if row_dead || col_dead {
        return Err(Error::SinkhornUnderflow);
    }

    let log_us = u_s.mapv(|x| x.ln());
    let log_ut = u_t.mapv(|x| x.ln());
    let mut f: Array1<S> = Array1::zeros(m);
    let mut g: Array1<S> = Array1::zeros(n);

    let lse = |xs: &mut dyn Iterator<Item = S>| -> S {
        let vals: Vec<S> = xs.collect();
        let max = vals.iter().cloned().fold(S::neg_infinity(), S::max);
        if max == S::neg_infinity() {
            return S::neg_infinity();
        }
        let sum: S = vals.iter().map(|&x| (x - max).exp()).sum();
        max + sum.ln()
    };

    let mut err = S::infinity();
    let mut iters = 0usize;
    let mut plan = Array2::zeros((m, n));
    for it in 1..=max_iters {
        for i in 0..m {
            let row = log_k.row(i);
            let l = lse(&mut row.iter().zip(g.iter()).map(|(&k, &gj)| k + gj));
            f[i] = log_us[i] - l;
        }
        for j in 0..n {
            let col = log_k.column(j);
            let l = lse(&mut col.iter().zip(f.iter()).map(|(&k, &fi)| k + fi));
            g[j] = log_ut[j] - l;
        }
        if f.iter().any(|x| x.is_nan()) || g.iter().any(|x| x.is_nan()) {
            return Err(Error::SinkhornUnderflow);
        }
        for ((i, j), v) in plan.indexed_iter_mut() {
            *v = (log_k[[i, j]] + f[i] + g[j]).exp();
        }
        let rows = plan.sum_axis(Axis(1));
        let cols = plan.sum_axis(Axis(0));
        err = l1_distance_vec(&rows, u_s).max(l1_distance_vec(&cols, u_t));
        iters = it;
        if err < stop_tol {
            break;
        }
    }
    if plan.iter().any(|x| !x.is_finite()) {
        return Err(Error::SinkhornUnderflow);
    }
    Ok((plan, err, iters))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::l1_distance;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_cost_returns_feasible_prior() {
        let marg = Marginals::new(array![0.4, 0.6], array![0.3, 0.7]).unwrap();
        let prior = TransportPlan::independence(&marg);
        let cost = Array2::<f64>::zeros((2, 2));
        let plan = sinkhorn_prox_step(&cost, &prior, 0.5, SINKHORN_MAX_ITERS, 1e-8).unwrap();
        assert!(l1_distance(plan.matrix(), prior.matrix()) < 1e-12);
    }

    #[test]
    fn small_tau_recovers_the_cheap_permutation() {
        // Brute-force oracle: the feasible set is the one-parameter family
        // T(theta) = [[theta, .5 - theta], [.5 - theta, theta]]; minimize
        // <cost, T> + tau KL(T || uniform) by grid search.
        let marg = Marginals::uniform(2, 2);
        let prior = TransportPlan::independence(&marg);
        let cost = array![[0.0, 1.0], [1.0, 0.0]];
        let tau = 0.01;
        let plan = sinkhorn_prox_step(&cost, &prior, tau, SINKHORN_MAX_ITERS, 1e-8).unwrap();

        let objective = |theta: f64| -> f64 {
            let entries = [theta, 0.5 - theta, 0.5 - theta, theta];
            let costs = [0.0, 1.0, 1.0, 0.0];
            let mut v = 0.0;
            for (x, c) in entries.iter().zip(costs.iter()) {
                v += c * x;
                if *x > 0.0 {
                    v += tau * (x * (x / 0.25).ln() - x + 0.25);
                } else {
                    v += tau * 0.25;
                }
            }
            v
        };
        let mut best = 0.0;
        let mut best_val = f64::INFINITY;
        let steps = 500_000;
        for k in 0..=steps {
            let theta = 0.5 * k as f64 / steps as f64;
            let v = objective(theta);
            if v < best_val {
                best_val = v;
                best = theta;
            }
        }
        let oracle = array![[best, 0.5 - best], [0.5 - best, best]];
        assert!(
            l1_distance(plan.matrix(), &oracle) < 1e-3,
            "plan {:?} vs oracle {:?}",
            plan.matrix(),
            oracle
        );
        // And the oracle itself is essentially the half-identity.
        assert!((best - 0.5).abs() < 1e-3);
    }

    #[test]
    fn output_marginals_feasible_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..20 {
            let m = 2 + (trial % 4);
            let n = 2 + (trial % 3);
            let mut us = Array1::from_shape_fn(m, |_| rng.random::<f64>() + 0.1);
            us.mapv_inplace(|x| x / 1.0);
            let s: f64 = us.sum();
            us.mapv_inplace(|x| x / s);
            let mut ut = Array1::from_shape_fn(n, |_| rng.random::<f64>() + 0.1);
            let s: f64 = ut.sum();
            ut.mapv_inplace(|x| x / s);
            let marg = Marginals::new(us, ut).unwrap();
            let prior = TransportPlan::independence(&marg);
            let cost = Array2::from_shape_fn((m, n), |_| rng.random::<f64>());
            let plan =
                sinkhorn_prox_step(&cost, &prior, 0.05, SINKHORN_MAX_ITERS, 1e-8).unwrap();
            assert!(plan.feasibility_error() <= 1e-6);
        }
    }

    #[test]
    fn log_domain_matches_plain_domain() {
        // tau small enough that exp(-cost/tau) spans ~130 decades: the
        // shifted kernel stays representable, but forcing the log path via
        // an even smaller tau must agree with the plain path where both
        // work. Compare the two paths on a moderate instance by calling the
        // internals indirectly: a tiny tau triggers the log path inside
        // sinkhorn_prox_step.
        let marg = Marginals::uniform(3, 3);
        let prior = TransportPlan::independence(&marg);
        let cost = array![[0.0, 2.0, 4.0], [2.0, 0.0, 2.0], [4.0, 2.0, 0.0]];
        let plain = sinkhorn_prox_step(&cost, &prior, 0.5, SINKHORN_MAX_ITERS, 1e-10).unwrap();
        // Same problem, costs and tau scaled together: identical argmin.
        let scaled_cost = cost.mapv(|x| x * 1e-3);
        let scaled = sinkhorn_prox_step(&scaled_cost, &prior, 0.5e-3, SINKHORN_MAX_ITERS, 1e-10)
            .unwrap();
        assert!(l1_distance(plain.matrix(), scaled.matrix()) < 1e-9);
    }

    #[test]
    fn scale_invariance_of_cost_and_tau() {
        let marg = Marginals::new(array![0.25, 0.75], array![0.6, 0.4]).unwrap();
        let prior = TransportPlan::independence(&marg);
        let cost = array![[0.3, 1.1], [0.9, 0.2]];
        let base = sinkhorn_prox_step(&cost, &prior, 0.07, SINKHORN_MAX_ITERS, 1e-10).unwrap();
        let scaled_cost = cost.mapv(|x| x * 37.0);
        let scaled =
            sinkhorn_prox_step(&scaled_cost, &prior, 0.07 * 37.0, SINKHORN_MAX_ITERS, 1e-10)
                .unwrap();
        assert!(l1_distance(base.matrix(), scaled.matrix()) < 1e-10);
    }

    #[test]
    fn dead_kernel_row_is_an_underflow_error() {
        // With tau this small, every entry except the row containing the
        // global minimum becomes exp(-inf) = 0; row 1 dies entirely.
        let marg = Marginals::uniform(2, 2);
        let prior = TransportPlan::independence(&marg);
        let cost = array![[0.0, 1.0], [1.0, 2.0]];
        let result = sinkhorn_prox_step(&cost, &prior, 1e-320, SINKHORN_MAX_ITERS, 1e-8);
        assert!(matches!(result, Err(Error::SinkhornUnderflow)));
    }

    #[test]
    fn rejects_nonpositive_tau_and_bad_shapes() {
        let marg = Marginals::uniform(2, 2);
        let prior = TransportPlan::independence(&marg);
        let cost = Array2::<f64>::zeros((2, 2));
        assert!(sinkhorn_prox_step(&cost, &prior, 0.0, 10, 1e-8).is_err());
        let bad = Array2::<f64>::zeros((3, 2));
        assert!(sinkhorn_prox_step(&bad, &prior, 0.1, 10, 1e-8).is_err());
    }
}
