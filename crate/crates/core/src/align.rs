//! Joint learning of two Hawkes processes under a fused transport
//! regularizer.
//!
//! The joint objective is
//!
//! ```text
//! NLL(S_s; mu_s, A_s) + NLL(S_t; mu_t, A_t) + gamma * <fused_cost(T), T>
//! ```
//!
//! minimized by alternating two blocks: the transport plan `T` (see
//! [`crate::ot::solve_transport`]) and the Hawkes parameters, updated here
//! by projected gradient descent with the plan frozen. Full-batch updates
//! use a backtracking (Armijo) step so the recorded objective never
//! increases; an SGD mode with truncated histories is available for large
//! corpora.

use crate::error::{Error, Result};
use crate::hawkes::{
    fold_event_states, kernel_integrals, neg_log_likelihood, EventSequence, HawkesParams,
};
use crate::linalg::frobenius_inner;
use crate::ot::{
    empirical_marginal, fgw_discrepancy, solve_transport, Marginals, TransportConfig,
    TransportPlan, MARGINAL_SMOOTHING,
};
use crate::scalar::{real, Real};
use crate::seeds::child_seed;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Lower clamp applied to base intensities during optimization so every
/// observed event keeps strictly positive intensity.
pub const MU_FLOOR: f64 = 1e-8;

/// Mini-batch settings for the SGD update mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SgdConfig {
    /// Events sampled per gradient step.
    pub batch_size: usize,
    /// Most-recent history events kept per sampled event.
    pub history_window: usize,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            batch_size: 1024,
            history_window: 64,
        }
    }
}

/// Configuration of the alternating alignment run.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentConfig<S> {
    /// Balance between the feature term (weight `1 - alpha`) and the
    /// relational term (weight `alpha`).
    pub alpha: S,
    /// Regularizer weight; `None` defaults to `0.01 x total event count`,
    /// which keeps the regularizer comparable to the likelihood across
    /// corpus sizes.
    pub gamma: Option<S>,
    /// Alternating rounds (one transport update + one parameter update).
    pub outer_rounds: usize,
    /// Gradient steps per parameter update.
    pub hp_steps: usize,
    /// Initial step size (full batch) or fixed step size (SGD).
    pub learning_rate: S,
    /// `Some` enables mini-batch gradients.
    pub sgd: Option<SgdConfig>,
    /// Master seed for all stochastic pieces of the run.
    pub seed: u64,
    /// Start each round's transport solve from the previous plan instead of
    /// the independence coupling.
    pub warm_start: bool,
    /// Additive smoothing for the empirical marginals.
    pub smoothing: S,
    /// Hold the infectivity matrices fixed (pure-Poisson style fits).
    pub freeze_infectivity: bool,
    /// Exponential kernel decay rate (fixed, not learned).
    pub beta: S,
    pub transport: TransportConfig<S>,
}

impl<S: Real> Default for AlignmentConfig<S> {
    fn default() -> Self {
        Self {
            alpha: real(0.8),
            gamma: None,
            outer_rounds: 10,
            hp_steps: 200,
            learning_rate: real(0.1),
            sgd: None,
            seed: 0,
            warm_start: true,
            smoothing: real(MARGINAL_SMOOTHING),
            freeze_infectivity: false,
            beta: S::one(),
            transport: TransportConfig::default(),
        }
    }
}

impl<S: Real> AlignmentConfig<S> {
    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || self.alpha < S::zero() || self.alpha > S::one() {
            return Err(Error::AlphaOutOfRange(self.alpha.to_f64().unwrap_or(f64::NAN)));
        }
        if let Some(g) = self.gamma {
            if !(g >= S::zero()) {
                return Err(Error::InvalidConfig("gamma must be nonnegative".into()));
            }
        }
        if !(self.learning_rate > S::zero()) {
            return Err(Error::InvalidConfig("learning_rate must be positive".into()));
        }
        if !(self.smoothing >= S::zero()) {
            return Err(Error::InvalidConfig("smoothing must be nonnegative".into()));
        }
        if !(self.beta > S::zero()) {
            return Err(Error::InvalidConfig("beta must be positive".into()));
        }
        if let Some(sgd) = &self.sgd {
            if sgd.batch_size == 0 {
                return Err(Error::InvalidConfig("sgd batch_size must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Gradients of the fused discrepancy `<fused_cost(T), T>` with respect to
/// the four parameter blocks, the plan held fixed.
#[derive(Debug, Clone)]
pub struct FgwGradients<S> {
    pub mu_s: Array1<S>,
    pub a_s: Array2<S>,
    pub mu_t: Array1<S>,
    pub a_t: Array2<S>,
}

/// Analytic parameter gradients of the fused discrepancy at a fixed plan:
///
/// ```text
/// d/d mu_s[i]   = 2 (1 - alpha) sum_j (mu_s[i] - mu_t[j]) T[i, j]
/// d/d A_s[i, j] = 2 alpha (r[i] r[j] A_s[i, j] - (T A_t T')[i, j])
/// ```
///
/// with `r` the realized row sums of `T`, and symmetric expressions for the
/// target side (column sums `c`).
pub fn regularizer_gradients<S: Real>(
    params_s: &HawkesParams<S>,
    params_t: &HawkesParams<S>,
    plan: &TransportPlan<S>,
    alpha: S,
) -> Result<FgwGradients<S>> {
    if !alpha.is_finite() || alpha < S::zero() || alpha > S::one() {
        return Err(Error::AlphaOutOfRange(alpha.to_f64().unwrap_or(f64::NAN)));
    }
    let (c_s, c_t) = plan.dims();
    if params_s.num_types() != c_s || params_t.num_types() != c_t {
        return Err(Error::ShapeMismatch {
            what: "plan vs parameters",
            expected: format!("{}x{}", params_s.num_types(), params_t.num_types()),
            actual: format!("{c_s}x{c_t}"),
        });
    }

    let t = plan.matrix();
    let r = plan.row_sums();
    let c = plan.col_sums();
    let two = real::<S>(2.0);

    let w = two * (S::one() - alpha);
    let t_mu_t = t.dot(params_t.mu());
    let mu_s = Array1::from_shape_fn(c_s, |i| w * (params_s.mu()[i] * r[i] - t_mu_t[i]));
    let tt_mu_s = t.t().dot(params_s.mu());
    let mu_t = Array1::from_shape_fn(c_t, |j| w * (params_t.mu()[j] * c[j] - tt_mu_s[j]));

    let (a_s, a_t) = if alpha == S::zero() {
        (Array2::zeros((c_s, c_s)), Array2::zeros((c_t, c_t)))
    } else {
        let ga = two * alpha;
        let tat = t.dot(params_t.a()).dot(&t.t());
        let a_s = Array2::from_shape_fn((c_s, c_s), |(i, j)| {
            ga * (r[i] * r[j] * params_s.a()[[i, j]] - tat[[i, j]])
        });
        let tas = t.t().dot(params_s.a()).dot(t);
        let a_t = Array2::from_shape_fn((c_t, c_t), |(i, j)| {
            ga * (c[i] * c[j] * params_t.a()[[i, j]] - tas[[i, j]])
        });
        (a_s, a_t)
    };

    Ok(FgwGradients { mu_s, a_s, mu_t, a_t })
}

/// Exact full-batch gradient of the negative log-likelihood with respect to
/// `(mu, A)`.
pub fn nll_gradients<S: Real>(
    params: &HawkesParams<S>,
    sequences: &[EventSequence<S>],
) -> Result<(Array1<S>, Array2<S>)> {
    let c = params.num_types();
    let mut grad_mu: Array1<S> = Array1::zeros(c);
    let mut grad_a: Array2<S> = Array2::zeros((c, c));
    let mut horizon_sum = S::zero();
    for (n, seq) in sequences.iter().enumerate() {
        if seq.num_types() != c {
            return Err(Error::ShapeMismatch {
                what: "event sequence type count",
                expected: c.to_string(),
                actual: seq.num_types().to_string(),
            });
        }
        horizon_sum += seq.horizon();
        let kappa = kernel_integrals(seq, params.beta());
        for mut row in grad_a.rows_mut() {
            row += &kappa;
        }
        fold_event_states(seq, params.beta(), |i, ev, r| {
            let lambda = params.mu()[ev.type_id] + params.a().row(ev.type_id).dot(r);
            if !(lambda > S::zero()) || !lambda.is_finite() {
                return Err(Error::InfeasibleParams {
                    sequence: n,
                    event: i,
                });
            }
            let inv = S::one() / lambda;
            grad_mu[ev.type_id] -= inv;
            grad_a.row_mut(ev.type_id).scaled_add(-inv, r);
            Ok(())
        })?;
    }
    grad_mu += horizon_sum;
    Ok((grad_mu, grad_a))
}

/// Mini-batch gradient estimate: `batch_size` events sampled uniformly
/// without replacement, each seeing at most `history_window` most-recent
/// history events; compensator contributions are apportioned per event of
/// the owning sequence. Unbiased up to the history truncation; with the
/// batch covering every event and an unbounded window it equals the
/// full-batch gradient.
pub fn nll_gradients_sgd<S: Real, R: Rng>(
    params: &HawkesParams<S>,
    sequences: &[EventSequence<S>],
    batch_size: usize,
    history_window: usize,
    rng: &mut R,
) -> Result<(Array1<S>, Array2<S>)> {
    if batch_size == 0 {
        return Err(Error::InvalidConfig("sgd batch_size must be positive".into()));
    }
    let c = params.num_types();
    let mut index: Vec<(usize, usize)> = Vec::new();
    for (si, seq) in sequences.iter().enumerate() {
        if seq.num_types() != c {
            return Err(Error::ShapeMismatch {
                what: "event sequence type count",
                expected: c.to_string(),
                actual: seq.num_types().to_string(),
            });
        }
        for ei in 0..seq.len() {
            index.push((si, ei));
        }
    }
    let total = index.len();
    if total == 0 {
        // No event terms to subsample; the gradient is the exact
        // compensator gradient.
        return nll_gradients(params, sequences);
    }

    let take = batch_size.min(total);
    let chosen: Vec<usize> = if take == total {
        (0..total).collect()
    } else {
        rand::seq::index::sample(rng, total, take).into_vec()
    };
    let scale = real::<S>(total as f64) / real(take as f64);

    let mut grad_mu: Array1<S> = Array1::zeros(c);
    let mut grad_a: Array2<S> = Array2::zeros((c, c));
    let mut hits = vec![0usize; sequences.len()];

    for &pick in &chosen {
        let (si, ei) = index[pick];
        hits[si] += 1;
        let seq = &sequences[si];
        let ev = &seq.events()[ei];
        let start = ei.saturating_sub(history_window);
        let mut lambda = params.mu()[ev.type_id];
        for h in &seq.events()[start..ei] {
            let w = (-(params.beta() * (ev.time - h.time))).exp();
            lambda += params.a()[[ev.type_id, h.type_id]] * w;
        }
        if !(lambda > S::zero()) || !lambda.is_finite() {
            return Err(Error::InfeasibleParams {
                sequence: si,
                event: ei,
            });
        }
        let inv = scale / lambda;
        grad_mu[ev.type_id] -= inv;
        for h in &seq.events()[start..ei] {
            let w = (-(params.beta() * (ev.time - h.time))).exp();
            grad_a[[ev.type_id, h.type_id]] -= inv * w;
        }
    }

    for (si, seq) in sequences.iter().enumerate() {
        // Empty sequences have nothing to apportion over; their compensator
        // contribution (just the mu term) is added exactly.
        let weight = if seq.is_empty() {
            S::one()
        } else if hits[si] > 0 {
            scale * real::<S>(hits[si] as f64) / real(seq.len() as f64)
        } else {
            continue;
        };
        grad_mu += seq.horizon() * weight;
        if !seq.is_empty() {
            let kappa = kernel_integrals(seq, params.beta());
            for mut row in grad_a.rows_mut() {
                row.scaled_add(weight, &kappa);
            }
        }
    }

    Ok((grad_mu, grad_a))
}

/// One objective-trace row of an alignment run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow<S> {
    pub round: usize,
    pub nll_s: S,
    pub nll_t: S,
    pub fgw: S,
    pub total: S,
}

/// Snapshot of the joint optimization state.
#[derive(Debug, Clone)]
pub struct JointState<S> {
    pub params_s: HawkesParams<S>,
    pub params_t: HawkesParams<S>,
    pub plan: TransportPlan<S>,
    /// Resolved regularizer weight for this run.
    pub gamma: S,
    pub objective_trace: Vec<TraceRow<S>>,
}

fn project_mu<S: Real>(mu: &Array1<S>) -> Array1<S> {
    let floor = real::<S>(MU_FLOOR);
    mu.mapv(|x| x.max(floor))
}

fn project_a<S: Real>(a: &Array2<S>) -> Array2<S> {
    a.mapv(|x| x.max(S::zero()))
}

fn inner1<S: Real>(a: &Array1<S>, b: &Array1<S>) -> S {
    a.iter().zip(b.iter()).map(|(&x, &y)| x * y).sum()
}

/// Run `hp_steps` of projected gradient descent on the joint objective with
/// the plan frozen at `state.plan`. Returns the updated state and the
/// recorded objective values (non-increasing in full-batch mode).
pub fn update_hawkes<S: Real, R: Rng>(
    state: &JointState<S>,
    config: &AlignmentConfig<S>,
    sequences_s: &[EventSequence<S>],
    sequences_t: &[EventSequence<S>],
    rng: &mut R,
) -> Result<(JointState<S>, Vec<S>)> {
    config.validate()?;
    let alpha = config.alpha;
    let gamma = state.gamma;
    let plan = &state.plan;
    let beta_s = state.params_s.beta();
    let beta_t = state.params_t.beta();

    let objective = |mu_s: &Array1<S>,
                     a_s: &Array2<S>,
                     mu_t: &Array1<S>,
                     a_t: &Array2<S>|
     -> Result<S> {
        let ps = HawkesParams::new(mu_s.clone(), a_s.clone(), beta_s)?;
        let pt = HawkesParams::new(mu_t.clone(), a_t.clone(), beta_t)?;
        let nll_s = neg_log_likelihood(&ps, sequences_s)?;
        let nll_t = neg_log_likelihood(&pt, sequences_t)?;
        let fgw = fgw_discrepancy(&ps, &pt, plan, alpha)?;
        Ok(nll_s + nll_t + gamma * fgw)
    };

    let mut mu_s = project_mu(state.params_s.mu());
    let mut a_s = project_a(state.params_s.a());
    let mut mu_t = project_mu(state.params_t.mu());
    let mut a_t = project_a(state.params_t.a());

    let mut trace: Vec<S> = Vec::with_capacity(config.hp_steps + 1);

    if config.sgd.is_none() {
        // Full batch with Armijo backtracking: monotone by construction.
        let armijo = real::<S>(1e-4);
        let min_step = real::<S>(1e-18);
        let mut step = config.learning_rate;
        let mut current = objective(&mu_s, &a_s, &mu_t, &a_t)?;
        trace.push(current);

        'outer: for _ in 0..config.hp_steps {
            let ps = HawkesParams::new(mu_s.clone(), a_s.clone(), beta_s)?;
            let pt = HawkesParams::new(mu_t.clone(), a_t.clone(), beta_t)?;
            let (mut gms, mut gas) = nll_gradients(&ps, sequences_s)?;
            let (mut gmt, mut gat) = nll_gradients(&pt, sequences_t)?;
            let reg = regularizer_gradients(&ps, &pt, plan, alpha)?;
            gms.scaled_add(gamma, &reg.mu_s);
            gmt.scaled_add(gamma, &reg.mu_t);
            if config.freeze_infectivity {
                gas.fill(S::zero());
                gat.fill(S::zero());
            } else {
                gas.scaled_add(gamma, &reg.a_s);
                gat.scaled_add(gamma, &reg.a_t);
            }

            loop {
                let cand_mu_s = project_mu(&(&mu_s - &(&gms * step)));
                let cand_a_s = project_a(&(&a_s - &(&gas * step)));
                let cand_mu_t = project_mu(&(&mu_t - &(&gmt * step)));
                let cand_a_t = project_a(&(&a_t - &(&gat * step)));
                let decrease = inner1(&gms, &(&mu_s - &cand_mu_s))
                    + frobenius_inner(&gas, &(&a_s - &cand_a_s))
                    + inner1(&gmt, &(&mu_t - &cand_mu_t))
                    + frobenius_inner(&gat, &(&a_t - &cand_a_t));
                if decrease == S::zero() {
                    // Projected gradient step is a fixed point: stationary.
                    break 'outer;
                }
                match objective(&cand_mu_s, &cand_a_s, &cand_mu_t, &cand_a_t) {
                    Ok(value) if value <= current - armijo * decrease => {
                        mu_s = cand_mu_s;
                        a_s = cand_a_s;
                        mu_t = cand_mu_t;
                        a_t = cand_a_t;
                        current = value;
                        trace.push(current);
                        step = step * real(2.0);
                        break;
                    }
                    _ => {
                        step = step * real(0.5);
                        if step < min_step {
                            break 'outer;
                        }
                    }
                }
            }
        }
    } else {
        let sgd = config.sgd.clone().unwrap();
        trace.push(objective(&mu_s, &a_s, &mu_t, &a_t)?);
        for _ in 0..config.hp_steps {
            let ps = HawkesParams::new(mu_s.clone(), a_s.clone(), beta_s)?;
            let pt = HawkesParams::new(mu_t.clone(), a_t.clone(), beta_t)?;
            let (mut gms, mut gas) =
                nll_gradients_sgd(&ps, sequences_s, sgd.batch_size, sgd.history_window, rng)?;
            let (mut gmt, mut gat) =
                nll_gradients_sgd(&pt, sequences_t, sgd.batch_size, sgd.history_window, rng)?;
            let reg = regularizer_gradients(&ps, &pt, plan, alpha)?;
            gms.scaled_add(gamma, &reg.mu_s);
            gmt.scaled_add(gamma, &reg.mu_t);
            if config.freeze_infectivity {
                gas.fill(S::zero());
                gat.fill(S::zero());
            } else {
                gas.scaled_add(gamma, &reg.a_s);
                gat.scaled_add(gamma, &reg.a_t);
            }
            let step = config.learning_rate;
            mu_s = project_mu(&(&mu_s - &(&gms * step)));
            a_s = project_a(&(&a_s - &(&gas * step)));
            mu_t = project_mu(&(&mu_t - &(&gmt * step)));
            a_t = project_a(&(&a_t - &(&gat * step)));
        }
        trace.push(objective(&mu_s, &a_s, &mu_t, &a_t)?);
    }

    let new_state = JointState {
        params_s: HawkesParams::new(mu_s, a_s, beta_s)?,
        params_t: HawkesParams::new(mu_t, a_t, beta_t)?,
        plan: state.plan.clone(),
        gamma,
        objective_trace: state.objective_trace.clone(),
    };
    Ok((new_state, trace))
}

/// Result of an alignment run: final state plus the discrepancy trace of
/// the last transport solve.
#[derive(Debug, Clone)]
pub struct AlignResult<S> {
    pub state: JointState<S>,
    pub final_transport_trace: Vec<S>,
}

/// Rate-matched initialization: `mu` at the per-type Poisson MLE (floored),
/// `A` small and uniform so the branching structure starts stable.
fn init_params<S: Real>(sequences: &[EventSequence<S>], beta: S) -> Result<HawkesParams<S>> {
    let c = sequences[0].num_types();
    let mut counts = vec![0usize; c];
    let mut horizon_sum = S::zero();
    for seq in sequences {
        if seq.num_types() != c {
            return Err(Error::ShapeMismatch {
                what: "corpus type count",
                expected: c.to_string(),
                actual: seq.num_types().to_string(),
            });
        }
        horizon_sum += seq.horizon();
        for (k, n) in seq.type_counts().into_iter().enumerate() {
            counts[k] += n;
        }
    }
    let floor = real::<S>(MU_FLOOR);
    let mu = Array1::from_iter(
        counts
            .into_iter()
            .map(|n| (real::<S>(n as f64) / horizon_sum).max(floor)),
    );
    let a = Array2::from_elem((c, c), real::<S>(0.1) / real(c as f64));
    HawkesParams::new(mu, a, beta)
}

fn trace_row<S: Real>(
    round: usize,
    state: &JointState<S>,
    alpha: S,
    sequences_s: &[EventSequence<S>],
    sequences_t: &[EventSequence<S>],
) -> Result<TraceRow<S>> {
    let nll_s = neg_log_likelihood(&state.params_s, sequences_s)?;
    let nll_t = neg_log_likelihood(&state.params_t, sequences_t)?;
    let fgw = fgw_discrepancy(&state.params_s, &state.params_t, &state.plan, alpha)?;
    Ok(TraceRow {
        round,
        nll_s,
        nll_t,
        fgw,
        total: nll_s + nll_t + state.gamma * fgw,
    })
}

/// Full alternating run: initialize from the data, then repeat
/// transport-update followed by parameter-update for `outer_rounds` rounds.
///
/// With `outer_rounds = 0` the initialization is returned unchanged.
pub fn align<S: Real>(
    sequences_s: &[EventSequence<S>],
    sequences_t: &[EventSequence<S>],
    config: &AlignmentConfig<S>,
) -> Result<AlignResult<S>> {
    config.validate()?;
    if sequences_s.is_empty() || sequences_t.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let u_s = empirical_marginal(sequences_s, config.smoothing)?;
    let u_t = empirical_marginal(sequences_t, config.smoothing)?;
    let marginals = Marginals::new(u_s, u_t)?;

    let params_s = init_params(sequences_s, config.beta)?;
    let params_t = init_params(sequences_t, config.beta)?;
    let total_events: usize = sequences_s.iter().map(|s| s.len()).sum::<usize>()
        + sequences_t.iter().map(|s| s.len()).sum::<usize>();
    let gamma = config
        .gamma
        .unwrap_or_else(|| real::<S>(total_events as f64) * real(1e-2));

    let mut state = JointState {
        params_s,
        params_t,
        plan: TransportPlan::independence(&marginals),
        gamma,
        objective_trace: Vec::new(),
    };
    let row0 = trace_row(0, &state, config.alpha, sequences_s, sequences_t)?;
    state.objective_trace.push(row0);

    let mut rng = ChaCha8Rng::seed_from_u64(child_seed(config.seed, 0x5_6D));
    let mut final_transport_trace = Vec::new();

    for round in 1..=config.outer_rounds {
        let init_plan = if config.warm_start {
            state.plan.clone()
        } else {
            TransportPlan::independence(&marginals)
        };
        let sol = solve_transport(
            &state.params_s,
            &state.params_t,
            &marginals,
            config.alpha,
            &init_plan,
            &config.transport,
        )?;
        state.plan = sol.plan;
        final_transport_trace = sol.objective_trace;

        let (next, _inner) = update_hawkes(&state, config, sequences_s, sequences_t, &mut rng)?;
        state = next;
        let row = trace_row(round, &state, config.alpha, sequences_s, sequences_t)?;
        state.objective_trace.push(row);
    }

    Ok(AlignResult {
        state,
        final_transport_trace,
    })
}
