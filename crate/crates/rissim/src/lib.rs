//! Discrete-time simulator and optimization suite for a roadside unit that
//! serves vehicles through a reconfigurable passive reflecting surface.
//!
//! The crate covers the full pipeline: LoS geometry and cascaded channel
//! evaluation ([`channel`]), discrete phase-shift selection via block
//! coordinate descent with an exhaustive oracle ([`beamforming`]), synthetic
//! road traffic ([`mobility`]), the max-min scheduling MDP ([`env`]), a
//! from-scratch PPO actor-critic ([`agent`]), the comparison schemes
//! ([`baselines`]), and the experiment harness with sweeps, studies and CSV
//! persistence ([`harness`]).
//!
//! Independent work items (evaluation runs, rollout batches, sweep cells)
//! execute on rayon when the default `parallel` feature is enabled and fall
//! back to sequential execution without it; outputs are identical either
//! way.

pub mod agent;
pub mod baselines;
pub mod beamforming;
pub mod channel;
pub mod env;
pub mod harness;
pub mod mobility;
pub mod parallel;

pub use parallel::Parallelism;
