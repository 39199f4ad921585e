//! Movable-antenna cooperative-NOMA downlink laboratory.
//!
//! A base station serves a near and a far user over field-response channels
//! that depend on continuously movable antenna positions; the near user
//! relays the far user's message over a device-to-device link in full-duplex
//! mode. The crate synthesizes the channels, evaluates the SIC/MRC link
//! rates, embodies the joint beamforming/power/placement problem with its
//! penalty reward, and solves it two ways: a DDPG agent and a derivative-free
//! reference optimizer, compared across four benchmark schemes.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix `f64`, which is what the CLI uses.

pub mod baselines;
pub mod channel;
pub mod ddpg;
pub mod error;
pub mod link_rates;
pub mod neural;
pub mod problem;
pub mod rl_env;
pub mod scalar;
pub mod seed;
pub mod units;

pub mod cli;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default precision of the CLI and the experiment suite.
pub type Real = f64;
/// Complex sample at default precision.
pub type CReal = num_complex::Complex<Real>;

pub type SystemConfig64 = channel::SystemConfig<Real>;
pub type ScenarioRealization64 = channel::ScenarioRealization<Real>;
pub type ChannelSet64 = channel::ChannelSet<Real>;
pub type CandidateSolution64 = link_rates::CandidateSolution<Real>;
pub type LinkEvaluation64 = link_rates::LinkEvaluation<Real>;
pub type ConstraintSlacks64 = problem::ConstraintSlacks<Real>;
pub type EnvConfig64 = rl_env::EnvConfig<Real>;
pub type EnvState64 = rl_env::EnvState<Real>;
pub type RawAction64 = rl_env::RawAction<Real>;
pub type Transition64 = rl_env::Transition<Real>;
pub type Network64 = neural::Network<Real>;
pub type AgentConfig64 = ddpg::AgentConfig<Real>;
pub type Agent64 = ddpg::Agent<Real>;
pub type OptimizerReport64 = baselines::OptimizerReport<Real>;
