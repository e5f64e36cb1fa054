//! Parameter inference by particle MCMC.

pub mod chain;
pub mod gibbs;
pub mod pmmh;
pub mod prior;
pub mod proposal;
pub mod tune;

pub use chain::{Draw, PosteriorChain, StoredTrajectory};
pub use gibbs::{particle_gibbs, update_rho_conjugate};
pub use pmmh::{pmmh, pmmh_with, Estimate, LikelihoodEstimator, McmcConfig, ParticleFilterLikelihood};
pub use prior::{LogPrior, Prior, PriorSpec, RhoPrior};
pub use proposal::ProposalKernel;
pub use tune::{tune_proposal, PilotConfig, TunedKernel};
