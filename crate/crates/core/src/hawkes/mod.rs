//! Multivariate Hawkes processes with exponential kernels.
//!
//! An event of type `c'` at time `t_i` raises the future intensity of type
//! `c` by `a[c, c'] * exp(-beta * (t - t_i))`, on top of a constant base
//! rate `mu[c]`:
//!
//! ```text
//! lambda_c(t) = mu[c] + sum_{i: t_i < t} a[c, c_i] * exp(-beta * (t - t_i))
//! ```
//!
//! The module provides the parameter and event-sequence types, intensity and
//! compensator evaluation, the negative log-likelihood, and simulation via
//! Ogata's thinning algorithm. Likelihood-style sums over events use the
//! standard O(events * C) recursion for exponential kernels instead of the
//! naive O(events^2) history scan.

mod simulate;

pub use simulate::{simulate, simulate_with_rng};

use crate::error::{Error, Result};
use crate::linalg::spectral_radius;
use crate::scalar::Real;
use ndarray::{Array1, Array2};

/// A single timestamped, typed event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event<S> {
    /// Event time in `[0, horizon]`.
    pub time: S,
    /// Event type in `[0, num_types)`.
    pub type_id: usize,
}

/// An ordered event sequence observed on `[0, horizon]`.
///
/// Invariants (enforced at construction): times strictly increasing, all
/// times within `[0, horizon]`, every `type_id < num_types`, `horizon > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSequence<S> {
    events: Vec<Event<S>>,
    horizon: S,
    num_types: usize,
}

impl<S: Real> EventSequence<S> {
    /// Build a sequence, rejecting any invariant violation.
    pub fn new(events: Vec<Event<S>>, horizon: S, num_types: usize) -> Result<Self> {
        if num_types == 0 {
            return Err(Error::InvalidSequence("num_types must be positive".into()));
        }
        if !(horizon > S::zero()) || !horizon.is_finite() {
            return Err(Error::InvalidSequence(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        let mut prev: Option<S> = None;
        for (i, ev) in events.iter().enumerate() {
            if ev.type_id >= num_types {
                return Err(Error::TypeOutOfRange {
                    type_id: ev.type_id,
                    num_types,
                });
            }
            if !ev.time.is_finite() || ev.time < S::zero() || ev.time > horizon {
                return Err(Error::InvalidSequence(format!(
                    "event {i} at time {} outside [0, {horizon}]",
                    ev.time
                )));
            }
            if let Some(p) = prev {
                if ev.time <= p {
                    return Err(Error::InvalidSequence(format!(
                        "event times must be strictly increasing (event {i} at {} after {})",
                        ev.time, p
                    )));
                }
            }
            prev = Some(ev.time);
        }
        Ok(Self {
            events,
            horizon,
            num_types,
        })
    }

    /// Build a sequence from possibly unsorted events with possible ties.
    ///
    /// Events are sorted by time; tied times are broken by adding the
    /// smallest representable increment, and a warning is logged. Intended
    /// for ingesting external data files.
    pub fn from_unordered(mut events: Vec<Event<S>>, horizon: S, num_types: usize) -> Result<Self> {
        events.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap_or(std::cmp::Ordering::Equal));
        let mut nudged = 0usize;
        let mut prev: Option<S> = None;
        for ev in events.iter_mut() {
            if let Some(p) = prev {
                if ev.time <= p {
                    let bump = (p * S::epsilon()).abs().max(S::min_positive_value());
                    ev.time = p + bump;
                    nudged += 1;
                    if ev.time > horizon {
                        return Err(Error::InvalidSequence(
                            "tied event times at the horizon cannot be nudged apart".into(),
                        ));
                    }
                }
            }
            prev = Some(ev.time);
        }
        if nudged > 0 {
            log::warn!("broke {nudged} tied event time(s) by the smallest representable increment");
        }
        Self::new(events, horizon, num_types)
    }

    pub fn events(&self) -> &[Event<S>] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn horizon(&self) -> S {
        self.horizon
    }

    pub fn num_types(&self) -> usize {
        self.num_types
    }

    /// Number of events of each type.
    pub fn type_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.num_types];
        for ev in &self.events {
            counts[ev.type_id] += 1;
        }
        counts
    }
}

/// Parameters of a multivariate Hawkes process with exponential kernel
/// `g(t) = exp(-beta * t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HawkesParams<S> {
    mu: Array1<S>,
    a: Array2<S>,
    beta: S,
}

impl<S: Real> HawkesParams<S> {
    /// Validate and build: `mu >= 0`, `a >= 0` (C x C), `beta > 0`.
    pub fn new(mu: Array1<S>, a: Array2<S>, beta: S) -> Result<Self> {
        let c = mu.len();
        if c == 0 {
            return Err(Error::InvalidParams("at least one event type".into()));
        }
        if a.nrows() != c || a.ncols() != c {
            return Err(Error::ShapeMismatch {
                what: "infectivity matrix",
                expected: format!("{c}x{c}"),
                actual: format!("{}x{}", a.nrows(), a.ncols()),
            });
        }
        if mu.iter().any(|&x| !x.is_finite() || x < S::zero()) {
            return Err(Error::InvalidParams(
                "base intensities must be finite and nonnegative".into(),
            ));
        }
        if a.iter().any(|&x| !x.is_finite() || x < S::zero()) {
            return Err(Error::InvalidParams(
                "infectivity coefficients must be finite and nonnegative".into(),
            ));
        }
        if !(beta > S::zero()) || !beta.is_finite() {
            return Err(Error::InvalidParams(format!(
                "decay rate beta must be positive and finite, got {beta}"
            )));
        }
        Ok(Self { mu, a, beta })
    }

    pub fn num_types(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &Array1<S> {
        &self.mu
    }

    pub fn a(&self) -> &Array2<S> {
        &self.a
    }

    pub fn beta(&self) -> S {
        self.beta
    }

    /// Branching matrix `G = A * integral(g) = A / beta`.
    pub fn branching_matrix(&self) -> Array2<S> {
        self.a.mapv(|x| x / self.beta)
    }

    /// Spectral radius of the branching matrix; `< 1` means the process is
    /// stable (finite expected event counts).
    pub fn branching_spectral_radius(&self) -> S {
        spectral_radius(&self.branching_matrix())
    }

    pub fn is_stable(&self) -> bool {
        self.branching_spectral_radius() < S::one()
    }
}

fn check_type_compat<S: Real>(params: &HawkesParams<S>, seq: &EventSequence<S>) -> Result<()> {
    if params.num_types() != seq.num_types() {
        return Err(Error::ShapeMismatch {
            what: "event sequence type count",
            expected: params.num_types().to_string(),
            actual: seq.num_types().to_string(),
        });
    }
    Ok(())
}

/// Conditional intensity of type `c` at time `t` given the history in `seq`.
///
/// Only events strictly before `t` contribute.
pub fn intensity_at<S: Real>(
    params: &HawkesParams<S>,
    seq: &EventSequence<S>,
    c: usize,
    t: S,
) -> Result<S> {
    check_type_compat(params, seq)?;
    if c >= params.num_types() {
        return Err(Error::TypeOutOfRange {
            type_id: c,
            num_types: params.num_types(),
        });
    }
    let mut lambda = params.mu[c];
    for ev in seq.events() {
        if ev.time >= t {
            break;
        }
        lambda += params.a[[c, ev.type_id]] * (-(params.beta * (t - ev.time))).exp();
    }
    Ok(lambda)
}

/// Integrated intensity of type `c` over `[0, horizon]` (closed form for the
/// exponential kernel):
///
/// ```text
/// mu[c] * T + sum_i a[c, c_i] * (1 - exp(-beta * (T - t_i))) / beta
/// ```
pub fn compensator<S: Real>(params: &HawkesParams<S>, seq: &EventSequence<S>, c: usize) -> Result<S> {
    check_type_compat(params, seq)?;
    if c >= params.num_types() {
        return Err(Error::TypeOutOfRange {
            type_id: c,
            num_types: params.num_types(),
        });
    }
    let kappa = kernel_integrals(seq, params.beta);
    Ok(params.mu[c] * seq.horizon() + params.a.row(c).dot(&kappa))
}

/// Per-type integrated kernel mass:
/// `kappa[c'] = sum_{i: c_i = c'} (1 - exp(-beta * (T - t_i))) / beta`.
///
/// Depends only on the data and `beta`, not on `mu` or `A`; the compensator
/// of type `c` is `mu[c] * T + A[c, :] . kappa`.
pub(crate) fn kernel_integrals<S: Real>(seq: &EventSequence<S>, beta: S) -> Array1<S> {
    let mut kappa = Array1::zeros(seq.num_types());
    let horizon = seq.horizon();
    for ev in seq.events() {
        kappa[ev.type_id] += (S::one() - (-(beta * (horizon - ev.time))).exp()) / beta;
    }
    kappa
}

/// Visit every event together with its decayed history state
/// `r[c'] = sum_{j < i, c_j = c'} exp(-beta * (t_i - t_j))`, maintained by
/// the O(C)-per-event recursion valid for strictly increasing times.
pub(crate) fn fold_event_states<S: Real, F>(
    seq: &EventSequence<S>,
    beta: S,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(usize, &Event<S>, &Array1<S>) -> Result<()>,
{
    let mut r: Array1<S> = Array1::zeros(seq.num_types());
    let mut prev: Option<(S, usize)> = None;
    for (i, ev) in seq.events().iter().enumerate() {
        if let Some((pt, pc)) = prev {
            let decay = (-(beta * (ev.time - pt))).exp();
            r.mapv_inplace(|x| x * decay);
            r[pc] += decay;
        }
        visit(i, ev, &r)?;
        prev = Some((ev.time, ev.type_id));
    }
    Ok(())
}

/// Negative log-likelihood of a corpus of sequences under `params`:
///
/// ```text
/// NLL = sum_n [ sum_c integral lambda_c - sum_i log lambda_{c_i}(t_i) ]
/// ```
///
/// Fails with [`Error::InfeasibleParams`] if the intensity vanishes at any
/// observed event; keeping `mu` strictly positive avoids this.
pub fn neg_log_likelihood<S: Real>(
    params: &HawkesParams<S>,
    sequences: &[EventSequence<S>],
) -> Result<S> {
    let mut nll = S::zero();
    for (n, seq) in sequences.iter().enumerate() {
        check_type_compat(params, seq)?;
        let kappa = kernel_integrals(seq, params.beta);
        nll += params.mu.sum() * seq.horizon() + params.a.dot(&kappa).sum();
        fold_event_states(seq, params.beta, |i, ev, r| {
            let lambda = params.mu[ev.type_id] + params.a.row(ev.type_id).dot(r);
            if !(lambda > S::zero()) || !lambda.is_finite() {
                return Err(Error::InfeasibleParams {
                    sequence: n,
                    event: i,
                });
            }
            nll -= lambda.ln();
            Ok(())
        })?;
    }
    Ok(nll)
}
