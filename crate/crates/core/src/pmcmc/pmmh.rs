//! Particle marginal Metropolis-Hastings.

use rand::Rng;

use crate::error::{ensure, Result};
use crate::model::{compute_agent_rates, AgentPopulation, ParameterSet, Trajectory};
use crate::network::Network;
use crate::rng::{derive_seed, stream, Domain};
use crate::scalar::Real;
use crate::smc::{run_filter, FilterOptions};

use super::chain::{Draw, PosteriorChain, StoredTrajectory};
use super::prior::LogPrior;
use super::proposal::ProposalKernel;

/// Prior draws tried before giving up on a finite starting likelihood.
const MAX_INIT_ATTEMPTS: u32 = 100;

/// A (possibly noisy) log-likelihood evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimate<F> {
    pub log_likelihood: F,
    pub trajectory: Option<Trajectory>,
}

/// Anything that scores a parameter set. Implementations must be
/// deterministic in `(theta, seed)`.
pub trait LikelihoodEstimator<F: Real>: Sync {
    fn estimate(&self, theta: &ParameterSet<F>, seed: u64) -> Result<Estimate<F>>;
}

/// The bootstrap particle filter as a likelihood estimator.
#[derive(Clone, Debug)]
pub struct ParticleFilterLikelihood<'a, F> {
    pub pop: &'a AgentPopulation<F>,
    pub net: &'a Network,
    pub observations: &'a [u64],
    pub particles: usize,
    pub options: FilterOptions,
}

impl<'a, F: Real> ParticleFilterLikelihood<'a, F> {
    pub fn new(pop: &'a AgentPopulation<F>, net: &'a Network, observations: &'a [u64], particles: usize) -> Self {
        Self {
            pop,
            net,
            observations,
            particles,
            options: FilterOptions::default(),
        }
    }
}

impl<F: Real> LikelihoodEstimator<F> for ParticleFilterLikelihood<'_, F> {
    fn estimate(&self, theta: &ParameterSet<F>, seed: u64) -> Result<Estimate<F>> {
        let rates = compute_agent_rates(theta, self.pop)?;
        let run = run_filter(
            &rates,
            theta.rho(),
            self.net,
            self.observations,
            self.particles,
            seed,
            None,
            &self.options,
        )?;
        let path = run.result.sampled_trajectory;
        Ok(Estimate {
            log_likelihood: run.result.log_marginal_likelihood,
            trajectory: (!path.is_empty()).then_some(path),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct McmcConfig<F> {
    /// Retained iterations `M`.
    pub iterations: usize,
    pub burn_in: usize,
    /// Keep the hidden path of every `thinning`-th retained draw; 0 keeps none.
    pub thinning: usize,
    pub seed: u64,
    /// Starting point; drawn from the prior when absent.
    pub init: Option<ParameterSet<F>>,
}

impl<F> McmcConfig<F> {
    pub fn new(iterations: usize, burn_in: usize, seed: u64) -> Self {
        Self {
            iterations,
            burn_in,
            thinning: 10,
            seed,
            init: None,
        }
    }
}

pub(crate) struct State<F> {
    pub theta: ParameterSet<F>,
    pub log_prior: F,
    pub estimate: Estimate<F>,
}

/// Starting point: the configured `init`, else the first prior draw whose
/// likelihood is finite (the last draw if none is).
pub(crate) fn initialize<F: Real, L: LikelihoodEstimator<F>, P: LogPrior<F> + ?Sized>(
    estimator: &L,
    prior: &P,
    template: &ParameterSet<F>,
    config: &McmcConfig<F>,
) -> Result<State<F>> {
    if let Some(theta) = &config.init {
        let log_prior = prior.log_prior(theta);
        ensure!(
            log_prior > F::neg_infinity(),
            "initial parameters lie outside the prior support"
        );
        let estimate = estimator.estimate(theta, derive_seed(config.seed, Domain::FilterSeed, 0))?;
        return Ok(State {
            theta: theta.clone(),
            log_prior,
            estimate,
        });
    }
    let mut last = None;
    for attempt in 0..MAX_INIT_ATTEMPTS {
        let mut rng = stream(config.seed, Domain::PriorDraw, attempt, 0);
        let theta = prior.sample(template, &mut rng)?;
        let log_prior = prior.log_prior(&theta);
        let estimate = estimator.estimate(&theta, derive_seed(config.seed, Domain::PriorDraw, attempt as u64))?;
        let finite = estimate.log_likelihood.is_finite();
        last = Some(State {
            theta,
            log_prior,
            estimate,
        });
        if finite {
            break;
        }
    }
    Ok(last.expect("at least one attempt"))
}

/// Metropolis-Hastings test for a symmetric proposal. A non-finite current
/// target accepts any finite candidate.
pub(crate) fn mh_accept<F: Real, R: Rng + ?Sized>(current: F, candidate: F, rng: &mut R) -> bool {
    if !(candidate > F::neg_infinity()) {
        return false;
    }
    if !(current > F::neg_infinity()) {
        return true;
    }
    let u: f64 = rng.random();
    u.ln() < (candidate - current).f64()
}

pub(crate) fn check_config<F>(config: &McmcConfig<F>, kernel: &ProposalKernel, n_coordinates: usize) -> Result<()> {
    ensure!(config.iterations >= 1, "need at least one retained iteration");
    ensure!(
        kernel.len() == n_coordinates,
        "proposal kernel has {} coordinates, parameters have {}",
        kernel.len(),
        n_coordinates
    );
    Ok(())
}

/// PMMH with an arbitrary estimator and prior. `template` fixes the
/// parameter layout (and any fixed recovery rate).
pub fn pmmh_with<F: Real, L: LikelihoodEstimator<F>, P: LogPrior<F> + ?Sized>(
    estimator: &L,
    prior: &P,
    kernel: &ProposalKernel,
    template: &ParameterSet<F>,
    config: &McmcConfig<F>,
) -> Result<PosteriorChain<F>> {
    check_config(config, kernel, template.n_coordinates())?;
    let mut state = initialize(estimator, prior, template, config)?;
    let mut chain = PosteriorChain::new(template.coordinate_names());
    chain.draws.reserve(config.iterations);
    let total = config.burn_in + config.iterations;

    for i in 1..=total {
        let major = i as u32;
        let current_u = state.theta.unconstrained();
        let proposed_u = kernel.propose(&current_u, &mut stream(config.seed, Domain::Proposal, major, 0))?;
        // an unmoved proposal is the identity move
        let accepted = if proposed_u == current_u {
            true
        } else {
            match state.theta.with_unconstrained(&proposed_u) {
                Err(_) => false,
                Ok(candidate) => {
                    let log_prior = prior.log_prior(&candidate);
                    if log_prior > F::neg_infinity() {
                        let estimate =
                            estimator.estimate(&candidate, derive_seed(config.seed, Domain::FilterSeed, i as u64))?;
                        let mut rng = stream(config.seed, Domain::Accept, major, 0);
                        let ok = mh_accept(
                            state.log_prior + state.estimate.log_likelihood,
                            log_prior + estimate.log_likelihood,
                            &mut rng,
                        );
                        if ok {
                            state = State {
                                theta: candidate,
                                log_prior,
                                estimate,
                            };
                        }
                        ok
                    } else {
                        false
                    }
                }
            }
        };
        if i > config.burn_in {
            let index = chain.draws.len();
            chain.draws.push(Draw {
                theta: state.theta.clone(),
                log_likelihood: state.estimate.log_likelihood,
                accepted,
            });
            if config.thinning > 0 && index % config.thinning == 0 {
                if let Some(path) = &state.estimate.trajectory {
                    chain.trajectories.push(StoredTrajectory {
                        index,
                        path: path.clone(),
                    });
                }
            }
        }
    }
    Ok(chain)
}

/// PMMH driven by the bootstrap filter with `particles` particles.
#[allow(clippy::too_many_arguments)]
pub fn pmmh<F: Real, P: LogPrior<F> + ?Sized>(
    observations: &[u64],
    pop: &AgentPopulation<F>,
    net: &Network,
    prior: &P,
    kernel: &ProposalKernel,
    template: &ParameterSet<F>,
    particles: usize,
    config: &McmcConfig<F>,
) -> Result<PosteriorChain<F>> {
    ensure!(particles >= 2, "PMMH needs at least 2 particles, got {particles}");
    let estimator = ParticleFilterLikelihood::new(pop, net, observations, particles);
    pmmh_with(&estimator, prior, kernel, template, config)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::model::Recovery;
    use crate::pmcmc::prior::PriorSpec;

    /// Improper flat prior; initial values must be supplied.
    pub struct Flat;

    impl<F: Real> LogPrior<F> for Flat {
        fn log_prior(&self, _: &ParameterSet<F>) -> F {
            F::zero()
        }

        fn sample(&self, template: &ParameterSet<F>, _: &mut dyn rand::RngCore) -> Result<ParameterSet<F>> {
            Ok(template.clone())
        }
    }

    pub struct Constant;

    impl<F: Real> LikelihoodEstimator<F> for Constant {
        fn estimate(&self, _: &ParameterSet<F>, _: u64) -> Result<Estimate<F>> {
            Ok(Estimate {
                log_likelihood: F::of(-12.5),
                trajectory: None,
            })
        }
    }

    pub fn template() -> ParameterSet<f64> {
        ParameterSet::new(vec![-3.0, 0.0], vec![-1.0, 2.0], Recovery::Fixed(0.1), 0.8).unwrap()
    }

    #[test]
    fn constant_likelihood_flat_prior_accepts_everything() {
        let kernel = ProposalKernel::uniform(5, 0.5).unwrap();
        let chain = pmmh_with(&Constant, &Flat, &kernel, &template(), &McmcConfig::new(2000, 0, 1)).unwrap();
        assert_eq!(chain.acceptance_rate(), 1.0);
        assert_ne!(chain.draws[0].theta, chain.draws[1].theta);
    }

    #[test]
    fn zero_step_chain_is_constant() {
        let kernel = ProposalKernel::uniform(5, 0.0).unwrap();
        let (pop, net, obs) = toy();
        let mut cfg = McmcConfig::new(30, 5, 2);
        cfg.init = Some(template());
        let chain = pmmh(
            &obs,
            &pop,
            &net,
            &PriorSpec::knowledge_based(2, false),
            &kernel,
            &template(),
            200,
            &cfg,
        )
        .unwrap();
        assert_eq!(chain.acceptance_rate(), 1.0);
        assert!(chain.draws.iter().all(|d| d.theta == template()));
        assert_eq!(chain.trajectories.len(), 3);
    }

    fn toy() -> (AgentPopulation<f64>, Network, Vec<u64>) {
        let pop = crate::simulate::CovariatePreset::StandardNormal
            .generate(20, 3)
            .unwrap();
        let net = Network::fully_connected(20).unwrap();
        // zero infected is absorbing, so start from a visibly seeded outbreak
        let sim = (0..)
            .map(|seed| crate::simulate::simulate_abm(&template(), &pop, &net, 10, seed).unwrap())
            .find(|s| s.observations[0] > 0)
            .unwrap();
        (pop, net, sim.observations)
    }

    #[test]
    fn chain_is_reproducible_and_state_moves_jointly() {
        let (pop, net, obs) = toy();
        let kernel = ProposalKernel::uniform(5, 0.3).unwrap();
        let prior = PriorSpec::knowledge_based(2, false);
        let mut cfg = McmcConfig::new(200, 20, 5);
        cfg.thinning = 1;
        let a = pmmh(&obs, &pop, &net, &prior, &kernel, &template(), 30, &cfg).unwrap();
        let b = pmmh(&obs, &pop, &net, &prior, &kernel, &template(), 30, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.acceptance_rate() > 0.0 && a.acceptance_rate() < 1.0);
        for w in 1..a.len() {
            let (prev, cur) = (&a.draws[w - 1], &a.draws[w]);
            let moved_theta = prev.theta != cur.theta;
            let moved_ll = prev.log_likelihood != cur.log_likelihood;
            let moved_path = a.trajectories[w - 1].path != a.trajectories[w].path;
            if cur.accepted {
                assert!(moved_theta && moved_ll);
            } else {
                assert!(!moved_theta && !moved_ll && !moved_path);
            }
            assert!(LogPrior::<f64>::log_prior(&prior, &cur.theta).is_finite());
        }
    }

    #[test]
    fn rejects_bad_configuration() {
        let kernel = ProposalKernel::uniform(4, 0.1).unwrap();
        assert!(pmmh_with(&Constant, &Flat, &kernel, &template(), &McmcConfig::new(10, 0, 0)).is_err());
        let kernel = ProposalKernel::uniform(5, 0.1).unwrap();
        assert!(pmmh_with(&Constant, &Flat, &kernel, &template(), &McmcConfig::new(0, 0, 0)).is_err());
        let (pop, net, obs) = toy();
        let mut cfg = McmcConfig::new(10, 0, 0);
        let outside = ParameterSet::new(vec![-3.0, 0.0], vec![-1.0, -2.0], Recovery::Fixed(0.1), 0.8).unwrap();
        cfg.init = Some(outside);
        let prior = PriorSpec::knowledge_based(2, false);
        assert!(pmmh(&obs, &pop, &net, &prior, &kernel, &template(), 10, &cfg).is_err());
    }

    /// Pseudo-marginal check: a likelihood known only up to mean-one noise
    /// still leaves the exact posterior invariant.
    #[test]
    fn noisy_unbiased_likelihood_targets_exact_posterior() {
        struct Noisy;
        impl LikelihoodEstimator<f64> for Noisy {
            fn estimate(&self, theta: &ParameterSet<f64>, seed: u64) -> Result<Estimate<f64>> {
                let x = theta.beta_alpha()[0];
                let noise: f64 = if stream(seed, Domain::Observe, 0, 0).random::<bool>() {
                    0.5
                } else {
                    1.5
                };
                Ok(Estimate {
                    log_likelihood: -0.5 * (x - 1.0) * (x - 1.0) + noise.ln(),
                    trajectory: None,
                })
            }
        }
        let kernel = ProposalKernel::new(vec![1.5, 0.0, 0.0, 0.0, 0.0], true).unwrap();
        let mut cfg = McmcConfig::new(100_000, 1000, 3);
        cfg.init = Some(template());
        let chain = pmmh_with(&Noisy, &Flat, &kernel, &template(), &cfg).unwrap();
        let xs = chain.column(0);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!((mean - 1.0).abs() < 0.05, "mean {mean}");
        assert!((var - 1.0).abs() < 0.08, "var {var}");
    }
}
