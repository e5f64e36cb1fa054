//! Agent-based SIS epidemic model with particle-filter likelihoods and
//! particle MCMC inference.
//!
//! The core is generic over the floating-point type through [`Real`]; the
//! aliases at the crate root fix it to `f64`.

pub mod cli;
pub mod error;
pub mod io;
pub mod model;
pub mod network;
pub mod pmcmc;
pub mod rng;
pub mod scalar;
pub mod simulate;
pub mod smc;

pub use error::{Error, Result};
pub use model::{compute_agent_rates, logistic_link, reproduction_number, AgentStateVector, Recovery, Trajectory};
pub use network::Network;
pub use scalar::Real;
pub use simulate::{classical_sis, simulate_abm, CovariatePreset, SimulationOutput};
pub use smc::{bootstrap_filter, conditional_smc, exact_loglik_forward, FilterOptions, Resampling};

pub type ParameterSet = model::ParameterSet<f64>;
pub type AgentPopulation = model::AgentPopulation<f64>;
pub type AgentRates = model::AgentRates<f64>;
pub type FilterResult = smc::FilterResult<f64>;
pub type ParticleEnsemble = smc::ParticleEnsemble<f64>;
