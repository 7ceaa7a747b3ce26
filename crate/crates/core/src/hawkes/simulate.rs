//! Simulation by Ogata's thinning algorithm.
//!
//! For exponential kernels the total intensity is non-increasing between
//! events, so the intensity evaluated just after the most recent point is a
//! valid local upper bound. Candidates are drawn as exponential waiting
//! times under that bound and accepted with probability
//! `total_intensity(candidate) / bound`; the bound is regenerated after
//! every candidate, accepted or not.

use super::{Event, EventSequence, HawkesParams};
use crate::error::{Error, Result};
use crate::scalar::{real, Real};
use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Simulate one sequence on `[0, horizon]` from a fixed seed.
pub fn simulate<S: Real>(params: &HawkesParams<S>, horizon: S, seed: u64) -> Result<EventSequence<S>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_with_rng(params, horizon, &mut rng)
}

/// Simulate one sequence on `[0, horizon]` drawing from the given generator.
///
/// Rejects unstable parameters (branching spectral radius >= 1) before
/// doing any work.
pub fn simulate_with_rng<S: Real, R: Rng>(
    params: &HawkesParams<S>,
    horizon: S,
    rng: &mut R,
) -> Result<EventSequence<S>> {
    if !(horizon > S::zero()) || !horizon.is_finite() {
        return Err(Error::InvalidParams(format!(
            "simulation horizon must be positive and finite, got {horizon}"
        )));
    }
    let radius = params.branching_spectral_radius();
    if !(radius < S::one()) {
        return Err(Error::UnstableParams {
            radius: radius.to_f64().unwrap_or(f64::NAN),
        });
    }

    let c = params.num_types();
    let sum_mu = params.mu().sum();
    let col_sums: Array1<S> = params.a().sum_axis(ndarray::Axis(0));

    let mut events: Vec<Event<S>> = Vec::new();
    // Decayed excitation state at the anchor time, including the anchor
    // event itself: r[c'] = sum_{t_j <= anchor, c_j = c'} exp(-beta (anchor - t_j)).
    let mut r: Array1<S> = Array1::zeros(c);
    let mut anchor = S::zero();

    loop {
        let bound = sum_mu + col_sums.dot(&r);
        if !(bound > S::zero()) {
            break; // no base rate and no residual excitation: nothing more can happen
        }
        let u: S = real(rng.random::<f64>());
        let wait = -(S::one() - u).ln() / bound;
        let mut candidate = anchor + wait;
        if candidate <= anchor {
            // Waiting time rounded to zero; move by one ulp to keep times
            // strictly increasing.
            candidate = anchor + (anchor * S::epsilon()).max(S::min_positive_value());
        }
        if candidate > horizon {
            break;
        }

        let decay = (-(params.beta() * (candidate - anchor))).exp();
        r.mapv_inplace(|x| x * decay);
        let total = sum_mu + col_sums.dot(&r);

        let accept: S = real(rng.random::<f64>());
        if accept * bound <= total {
            // Accepted: pick the type proportionally to the per-type intensity.
            let lambdas = params.mu() + &params.a().dot(&r);
            let pick: S = real(rng.random::<f64>());
            let mut threshold = pick * total;
            let mut chosen = c - 1;
            for (k, &lam) in lambdas.iter().enumerate() {
                if threshold < lam {
                    chosen = k;
                    break;
                }
                threshold -= lam;
            }
            events.push(Event {
                time: candidate,
                type_id: chosen,
            });
            r[chosen] += S::one();
        }
        anchor = candidate;
    }

    EventSequence::new(events, horizon, c)
}
