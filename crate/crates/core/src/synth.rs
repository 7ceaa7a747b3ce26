//! Synthetic benchmark protocol.
//!
//! Each trial draws a random source process (`mu ~ U[0, 1/C]`, `A ~
//! U[0, 1/C^2]`, unit decay rate), builds the target by a hidden random
//! permutation of the types, simulates one corpus per domain, and scores a
//! chosen alignment method against the hidden permutation. A benchmark runs
//! several trials with matched seeds (every method sees byte-identical
//! corpora) and averages top-1 accuracy, cosine similarity, and plan
//! entropy per method.

use crate::align::{align, AlignmentConfig};
use crate::error::{Error, Result};
use crate::hawkes::{simulate, EventSequence, HawkesParams};
use crate::linalg::frobenius_inner;
use crate::metrics::{cosine_similarity, plan_entropy, top_k_accuracy, Correspondence};
use crate::ot::{
    empirical_marginal, sinkhorn_prox_step, solve_transport, Marginals, TransportPlan,
};
use crate::scalar::{real, Real};
use crate::seeds::child_seed;
use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::str::FromStr;

/// Alignment methods compared in the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Sinkhorn directly on squared differences of the empirical type
    /// histograms; no process model at all.
    Empirical,
    /// Maximum-likelihood fits followed by one transport solve on the base
    /// intensities only (`alpha = 0`).
    HpWd,
    /// Maximum-likelihood fits followed by one transport solve on the
    /// infectivity structure only (`alpha = 1`).
    HpGwd,
    /// The full alternating method with the fused cost.
    Fgwa,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Empirical, Method::HpWd, Method::HpGwd, Method::Fgwa];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Method::Empirical => "Empirical",
            Method::HpWd => "HP-WD",
            Method::HpGwd => "HP-GWD",
            Method::Fgwa => "FGWA",
        };
        write!(f, "{name}")
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "EMPIRICAL" => Ok(Method::Empirical),
            "HP-WD" | "HPWD" => Ok(Method::HpWd),
            "HP-GWD" | "HPGWD" => Ok(Method::HpGwd),
            "FGWA" => Ok(Method::Fgwa),
            other => Err(Error::InvalidConfig(format!(
                "unknown method '{other}' (expected Empirical, HP-WD, HP-GWD, or FGWA)"
            ))),
        }
    }
}

/// Size and seeding of one synthetic experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSpec<S> {
    pub num_types: usize,
    pub num_sequences: usize,
    pub horizon: S,
    pub trials: usize,
    pub seed: u64,
}

impl<S: Real> TrialSpec<S> {
    /// Protocol defaults for a given type count: `C` sequences per domain
    /// on a horizon of `C^2`, ten trials.
    pub fn for_types(num_types: usize) -> Self {
        Self {
            num_types,
            num_sequences: num_types,
            horizon: real((num_types * num_types) as f64),
            trials: 10,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_types < 2 {
            return Err(Error::InvalidConfig("num_types must be at least 2".into()));
        }
        if self.num_sequences == 0 || self.trials == 0 {
            return Err(Error::InvalidConfig(
                "num_sequences and trials must be positive".into(),
            ));
        }
        if !(self.horizon > S::zero()) || !self.horizon.is_finite() {
            return Err(Error::InvalidConfig("horizon must be positive".into()));
        }
        Ok(())
    }
}

/// Draw source parameters: `mu_i ~ U[0, 1/C]`, `a_ij ~ U[0, 1/C^2]`, unit
/// decay rate. Resampled in the (rare) unstable case.
pub fn generate_source<S: Real, R: Rng>(num_types: usize, rng: &mut R) -> HawkesParams<S> {
    let c = num_types;
    let mu_hi = 1.0 / c as f64;
    let a_hi = 1.0 / (c * c) as f64;
    loop {
        let mu = Array1::from_shape_fn(c, |_| real::<S>(rng.random::<f64>() * mu_hi));
        let a = Array2::from_shape_fn((c, c), |_| real::<S>(rng.random::<f64>() * a_hi));
        let params = HawkesParams::new(mu, a, S::one()).expect("sampled parameters are valid");
        if params.is_stable() {
            return params;
        }
    }
}

/// Uniformly random permutation correspondence on `C` types.
pub fn random_permutation<R: Rng>(num_types: usize, rng: &mut R) -> Correspondence {
    let mut perm: Vec<usize> = (0..num_types).collect();
    perm.shuffle(rng);
    Correspondence::from_permutation(&perm).expect("shuffled identity is a permutation")
}

/// Target parameters from a permutation correspondence `P`:
/// `mu_t = P' mu_s` and `A_t = P' A_s P`; the decay rate is inherited.
pub fn permute_target<S: Real>(
    params: &HawkesParams<S>,
    correspondence: &Correspondence,
) -> Result<HawkesParams<S>> {
    let c = params.num_types();
    if correspondence.dims() != (c, c) {
        return Err(Error::ShapeMismatch {
            what: "correspondence",
            expected: format!("{c}x{c}"),
            actual: format!("{}x{}", correspondence.dims().0, correspondence.dims().1),
        });
    }
    let perm = correspondence
        .as_permutation()
        .ok_or_else(|| Error::NotAPermutation("correspondence is not bijective".into()))?;
    let mut mu = Array1::zeros(c);
    let mut a = Array2::zeros((c, c));
    for i in 0..c {
        mu[perm[i]] = params.mu()[i];
        for j in 0..c {
            a[[perm[i], perm[j]]] = params.a()[[i, j]];
        }
    }
    HawkesParams::new(mu, a, params.beta())
}

/// Everything produced by one trial of one method.
#[derive(Debug, Clone)]
pub struct TrialReport<S> {
    pub method: Method,
    pub acc_1: S,
    pub sim: S,
    pub entropy: S,
    pub plan: TransportPlan<S>,
    pub truth: Correspondence,
    /// Discrepancy trace of the (final) transport solve; a single value for
    /// the Empirical baseline.
    pub transport_trace: Vec<S>,
}

/// Seed of the `index`-th trial of a benchmark.
pub fn trial_seed<S: Real>(spec: &TrialSpec<S>, index: usize) -> u64 {
    child_seed(spec.seed, index as u64)
}

/// Run one trial with the spec's own seed.
pub fn run_trial<S: Real>(
    spec: &TrialSpec<S>,
    method: Method,
    config: &AlignmentConfig<S>,
) -> Result<TrialReport<S>> {
    run_trial_seeded(spec, spec.seed, method, config)
}

/// Run one trial from an explicit seed. All methods called with the same
/// seed consume identical corpora: the data stream is drawn before the
/// method branches.
pub fn run_trial_seeded<S: Real>(
    spec: &TrialSpec<S>,
    seed: u64,
    method: Method,
    config: &AlignmentConfig<S>,
) -> Result<TrialReport<S>> {
    spec.validate()?;
    config.validate()?;

    let mut data_rng = ChaCha8Rng::seed_from_u64(child_seed(seed, 0));
    let truth = random_permutation(spec.num_types, &mut data_rng);
    let params_s = generate_source::<S, _>(spec.num_types, &mut data_rng);
    let params_t = permute_target(&params_s, &truth)?;

    let src_stream = child_seed(seed, 1);
    let tgt_stream = child_seed(seed, 2);
    let sequences_s: Vec<EventSequence<S>> = (0..spec.num_sequences)
        .map(|n| simulate(&params_s, spec.horizon, child_seed(src_stream, n as u64)))
        .collect::<Result<_>>()?;
    let sequences_t: Vec<EventSequence<S>> = (0..spec.num_sequences)
        .map(|n| simulate(&params_t, spec.horizon, child_seed(tgt_stream, n as u64)))
        .collect::<Result<_>>()?;

    let mut trial_config = config.clone();
    trial_config.seed = child_seed(seed, 3);

    let u_s = empirical_marginal(&sequences_s, trial_config.smoothing)?;
    let u_t = empirical_marginal(&sequences_t, trial_config.smoothing)?;
    let marginals = Marginals::new(u_s.clone(), u_t.clone())?;

    let (plan, transport_trace) = match method {
        Method::Empirical => {
            let cost = Array2::from_shape_fn((u_s.len(), u_t.len()), |(i, j)| {
                let d = u_s[i] - u_t[j];
                d * d
            });
            let prior = TransportPlan::independence(&marginals);
            let mean = cost.sum() / real(cost.len() as f64);
            let tau = if mean > S::zero() { mean * real(0.1) } else { real(1e-3) };
            let plan = sinkhorn_prox_step(
                &cost,
                &prior,
                tau,
                trial_config.transport.sinkhorn_max_iters,
                trial_config.transport.sinkhorn_tol,
            )?;
            let value = frobenius_inner(&cost, plan.matrix());
            (plan, vec![value])
        }
        Method::HpWd | Method::HpGwd => {
            // Plain maximum likelihood (regularizer off), then one
            // transport solve at the endpoint weight.
            let mut mle_config = trial_config.clone();
            mle_config.gamma = Some(S::zero());
            let fitted = align(&sequences_s, &sequences_t, &mle_config)?;
            let endpoint = if method == Method::HpWd {
                S::zero()
            } else {
                S::one()
            };
            let init = TransportPlan::independence(&marginals);
            let sol = solve_transport(
                &fitted.state.params_s,
                &fitted.state.params_t,
                &marginals,
                endpoint,
                &init,
                &trial_config.transport,
            )?;
            (sol.plan, sol.objective_trace)
        }
        Method::Fgwa => {
            let res = align(&sequences_s, &sequences_t, &trial_config)?;
            (res.state.plan, res.final_transport_trace)
        }
    };

    let acc_1 = top_k_accuracy(&truth, plan.matrix(), 1)?;
    let sim = cosine_similarity(&truth, plan.matrix())?;
    let entropy = plan_entropy(plan.matrix());
    Ok(TrialReport {
        method,
        acc_1,
        sim,
        entropy,
        plan,
        truth,
        transport_trace,
    })
}

/// One row of the per-trial record table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord<S> {
    pub trial: usize,
    pub seed: u64,
    pub method: Method,
    pub acc_1: S,
    pub sim: S,
    pub entropy: S,
}

/// Per-method means over the trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkRow<S> {
    pub method: Method,
    pub mean_acc_1: S,
    pub mean_sim: S,
    pub mean_entropy: S,
}

/// Aggregated benchmark: summary rows plus the raw per-trial records.
#[derive(Debug, Clone)]
pub struct BenchmarkTable<S> {
    pub rows: Vec<BenchmarkRow<S>>,
    pub records: Vec<TrialRecord<S>>,
}

impl<S: Real> BenchmarkTable<S> {
    pub fn row(&self, method: Method) -> Option<&BenchmarkRow<S>> {
        self.rows.iter().find(|r| r.method == method)
    }
}

/// Mean the records per method, in the order the methods are given.
pub fn summarize<S: Real>(methods: &[Method], records: &[TrialRecord<S>]) -> Vec<BenchmarkRow<S>> {
    methods
        .iter()
        .map(|&method| {
            let mine: Vec<&TrialRecord<S>> =
                records.iter().filter(|r| r.method == method).collect();
            let n = real::<S>(mine.len().max(1) as f64);
            BenchmarkRow {
                method,
                mean_acc_1: mine.iter().map(|r| r.acc_1).sum::<S>() / n,
                mean_sim: mine.iter().map(|r| r.sim).sum::<S>() / n,
                mean_entropy: mine.iter().map(|r| r.entropy).sum::<S>() / n,
            }
        })
        .collect()
}

/// Run every method on every trial with matched per-trial seeds and average
/// the measurements.
pub fn run_benchmark<S: Real>(
    spec: &TrialSpec<S>,
    methods: &[Method],
    config: &AlignmentConfig<S>,
) -> Result<BenchmarkTable<S>> {
    spec.validate()?;
    if methods.is_empty() {
        return Err(Error::InvalidConfig("at least one method".into()));
    }
    let mut records = Vec::with_capacity(spec.trials * methods.len());
    for trial in 0..spec.trials {
        let seed = trial_seed(spec, trial);
        for &method in methods {
            let report = run_trial_seeded(spec, seed, method, config)?;
            records.push(TrialRecord {
                trial,
                seed,
                method,
                acc_1: report.acc_1,
                sim: report.sim,
                entropy: report.entropy,
            });
        }
    }
    Ok(BenchmarkTable {
        rows: summarize(methods, &records),
        records,
    })
}
