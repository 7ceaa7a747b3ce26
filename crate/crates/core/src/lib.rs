//! Joint learning and event-type alignment of multivariate Hawkes
//! processes via fused Gromov-Wasserstein optimal transport.
//!
//! Two corpora of timestamped, typed event sequences are each modeled as a
//! Hawkes process (base intensity vector plus infectivity matrix with an
//! exponential kernel). A soft correspondence between the two type sets is
//! learned as an optimal-transport plan that minimizes a fused discrepancy:
//! an absolute (Wasserstein) term comparing base intensities and a
//! relational (Gromov-Wasserstein) term comparing infectivity structure.
//! Model fitting and transport are alternated, with the discrepancy acting
//! as a regularizer on the likelihoods.
//!
//! Modules:
//! - [`hawkes`]: process types, intensities, likelihoods, simulation;
//! - [`ot`]: marginals, transport plans, fused costs, the proximal Sinkhorn
//!   solver;
//! - [`align`]: gradients and the alternating optimization loop;
//! - [`metrics`]: accuracy / similarity / entropy against a ground truth;
//! - [`synth`]: the randomized benchmark protocol and baselines.
//!
//! Everything numeric is generic over a scalar type implementing
//! [`Real`] (`f64` or `f32`); the `*F64` aliases below are the concrete
//! types the CLI works with.

pub mod align;
pub mod error;
pub mod hawkes;
pub mod linalg;
pub mod metrics;
pub mod ot;
pub mod scalar;
pub mod seeds;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Real;

pub type EventSequenceF64 = hawkes::EventSequence<f64>;
pub type HawkesParamsF64 = hawkes::HawkesParams<f64>;
pub type MarginalsF64 = ot::Marginals<f64>;
pub type TransportPlanF64 = ot::TransportPlan<f64>;
pub type TransportConfigF64 = ot::TransportConfig<f64>;
pub type AlignmentConfigF64 = align::AlignmentConfig<f64>;
pub type JointStateF64 = align::JointState<f64>;
pub type TrialSpecF64 = synth::TrialSpec<f64>;

pub type EventSequenceF32 = hawkes::EventSequence<f32>;
pub type HawkesParamsF32 = hawkes::HawkesParams<f32>;
pub type TransportPlanF32 = ot::TransportPlan<f32>;
