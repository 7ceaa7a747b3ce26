//! Optimal transport between the event-type sets of two Hawkes processes.
//!
//! The transport polytope is `Pi(u_s, u_t) = { T >= 0 | T 1 = u_s, T' 1 = u_t }`
//! with `u_s`, `u_t` the empirical event-type distributions. Costs combine
//! an absolute term on base intensities with a relational
//! (Gromov-Wasserstein) term on infectivity matrices; the transport
//! subproblem is solved by a KL-proximal-point outer loop whose inner steps
//! are Sinkhorn scalings.

mod cost;
mod sinkhorn;
mod solve;

pub use cost::{fgw_discrepancy, relational_cost, CostMatrices};
pub use sinkhorn::sinkhorn_prox_step;
pub use solve::{solve_transport, TransportConfig, TransportSolution};

use crate::error::{Error, Result};
use crate::hawkes::EventSequence;
use crate::linalg::l1_distance_vec;
use crate::scalar::{real, tol, Real};
use ndarray::{Array1, Array2, Axis};

/// Additive smoothing applied to empirical type histograms so every
/// marginal entry is strictly positive (Sinkhorn requires it).
pub const MARGINAL_SMOOTHING: f64 = 1e-3;

/// L1 feasibility tolerance on each marginal of a transport plan.
pub const PLAN_FEASIBILITY_TOL: f64 = 1e-6;

/// A pair of strictly positive probability vectors, one per domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals<S> {
    source: Array1<S>,
    target: Array1<S>,
}

impl<S: Real> Marginals<S> {
    /// Validate and build: entries strictly positive, each vector summing to
    /// one within 1e-12.
    pub fn new(source: Array1<S>, target: Array1<S>) -> Result<Self> {
        for (name, v) in [("source", &source), ("target", &target)] {
            if v.is_empty() {
                return Err(Error::InvalidMarginals(format!("{name} marginal is empty")));
            }
            if v.iter().any(|&x| !(x > S::zero()) || !x.is_finite()) {
                return Err(Error::InvalidMarginals(format!(
                    "{name} marginal entries must be strictly positive"
                )));
            }
            let sum = v.sum();
            if (sum - S::one()).abs() > tol(1e-12) {
                return Err(Error::InvalidMarginals(format!(
                    "{name} marginal sums to {sum}, not 1"
                )));
            }
        }
        Ok(Self { source, target })
    }

    /// Uniform marginals `1/C_s` and `1/C_t`.
    pub fn uniform(c_s: usize, c_t: usize) -> Self {
        let source = Array1::from_elem(c_s, S::one() / real(c_s as f64));
        let target = Array1::from_elem(c_t, S::one() / real(c_t as f64));
        Self::new(source, target).expect("uniform marginals are valid")
    }

    pub fn source(&self) -> &Array1<S> {
        &self.source
    }

    pub fn target(&self) -> &Array1<S> {
        &self.target
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.source.len(), self.target.len())
    }
}

/// Smoothed empirical distribution of event types across a corpus:
/// `u_c = (count_c + smoothing) / (total + C * smoothing)`.
///
/// Errors if the corpus contains no events at all.
pub fn empirical_marginal<S: Real>(
    sequences: &[EventSequence<S>],
    smoothing: S,
) -> Result<Array1<S>> {
    if sequences.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let c = sequences[0].num_types();
    let mut counts = vec![0usize; c];
    for seq in sequences {
        if seq.num_types() != c {
            return Err(Error::ShapeMismatch {
                what: "corpus type count",
                expected: c.to_string(),
                actual: seq.num_types().to_string(),
            });
        }
        for (k, n) in seq.type_counts().into_iter().enumerate() {
            counts[k] += n;
        }
    }
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyCorpus);
    }
    if smoothing < S::zero() {
        return Err(Error::InvalidConfig("smoothing must be nonnegative".into()));
    }
    let denom = real::<S>(total as f64) + smoothing * real(c as f64);
    Ok(Array1::from_iter(
        counts
            .into_iter()
            .map(|n| (real::<S>(n as f64) + smoothing) / denom),
    ))
}

/// A nonnegative matrix coupling the two type sets, with its prescribed
/// marginals attached.
///
/// Invariants: entries nonnegative and finite; row sums within
/// [`PLAN_FEASIBILITY_TOL`] (L1) of `u_s` and column sums within the same
/// tolerance of `u_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan<S> {
    matrix: Array2<S>,
    marginals: Marginals<S>,
}

impl<S: Real> TransportPlan<S> {
    pub fn new(matrix: Array2<S>, marginals: Marginals<S>) -> Result<Self> {
        let (c_s, c_t) = marginals.dims();
        if matrix.dim() != (c_s, c_t) {
            return Err(Error::ShapeMismatch {
                what: "transport plan",
                expected: format!("{c_s}x{c_t}"),
                actual: format!("{}x{}", matrix.nrows(), matrix.ncols()),
            });
        }
        if matrix.iter().any(|&x| !x.is_finite() || x < S::zero()) {
            return Err(Error::InvalidSequence(
                "transport plan entries must be finite and nonnegative".into(),
            ));
        }
        let plan = Self { matrix, marginals };
        let err = plan.feasibility_error();
        let feas = tol::<S>(PLAN_FEASIBILITY_TOL);
        if err > feas {
            return Err(Error::InfeasiblePlan {
                error: err.to_f64().unwrap_or(f64::NAN),
                tolerance: feas.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(plan)
    }

    /// The independence coupling `u_s u_t'`: strictly positive, feasible,
    /// and maximally uninformative. The standard initial plan.
    pub fn independence(marginals: &Marginals<S>) -> Self {
        let (c_s, c_t) = marginals.dims();
        let matrix = Array2::from_shape_fn((c_s, c_t), |(i, j)| {
            marginals.source()[i] * marginals.target()[j]
        });
        Self::new(matrix, marginals.clone()).expect("independence coupling is feasible")
    }

    pub fn matrix(&self) -> &Array2<S> {
        &self.matrix
    }

    pub fn marginals(&self) -> &Marginals<S> {
        &self.marginals
    }

    pub fn dims(&self) -> (usize, usize) {
        self.matrix.dim()
    }

    pub fn row_sums(&self) -> Array1<S> {
        self.matrix.sum_axis(Axis(1))
    }

    pub fn col_sums(&self) -> Array1<S> {
        self.matrix.sum_axis(Axis(0))
    }

    /// Larger of the two marginal L1 errors.
    pub fn feasibility_error(&self) -> S {
        let row = l1_distance_vec(&self.row_sums(), self.marginals.source());
        let col = l1_distance_vec(&self.col_sums(), self.marginals.target());
        row.max(col)
    }

    /// Column index of the largest entry in each row, ties broken by the
    /// smaller column index.
    pub fn row_argmax(&self) -> Vec<usize> {
        self.matrix
            .rows()
            .into_iter()
            .map(|row| {
                let mut best = 0usize;
                for (j, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect()
    }
}
