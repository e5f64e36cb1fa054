//! Particle Gibbs: conditional SMC for the hidden path, then parameters
//! given the path.

use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{ensure, Result};
use crate::model::{complete_data_loglik, compute_agent_rates, AgentPopulation, AgentStateVector, ParameterSet};
use crate::network::Network;
use crate::rng::{derive_seed, stream, Domain};
use crate::scalar::Real;
use crate::smc::{run_filter, split_reference, FilterOptions};

use super::chain::{Draw, PosteriorChain, StoredTrajectory};
use super::pmmh::{check_config, initialize, mh_accept, McmcConfig, ParticleFilterLikelihood};
use super::prior::{LogPrior, PriorSpec, RhoPrior};
use super::proposal::ProposalKernel;

/// Draws `rho ~ Beta(a + sum y_t, b + sum (I_t - y_t))`, its exact full
/// conditional under binomial reporting.
pub fn update_rho_conjugate<F: Real, R: Rng + ?Sized>(
    trajectory: &[AgentStateVector],
    observations: &[u64],
    a: f64,
    b: f64,
    rng: &mut R,
) -> Result<F> {
    ensure!(a > 0.0 && b > 0.0, "Beta prior needs a, b > 0");
    ensure!(
        trajectory.len() == observations.len(),
        "trajectory has {} states for {} observations",
        trajectory.len(),
        observations.len()
    );
    let (mut reported, mut missed) = (0u64, 0u64);
    for (t, (s, &y)) in trajectory.iter().zip(observations).enumerate() {
        let infected = s.infected_count();
        ensure!(y <= infected, "y_{t} = {y} exceeds I_{t} = {infected}");
        reported += y;
        missed += infected - y;
    }
    let law = Beta::new(a + reported as f64, b + missed as f64).expect("positive shapes");
    loop {
        let rho: f64 = law.sample(rng);
        if rho > 0.0 {
            return Ok(F::of(rho));
        }
    }
}

/// Lower bound on the particle count of the filter that seeds the reference.
const INIT_PARTICLES: usize = 100;

/// Bootstrap filters with doubling particle counts until one survives.
fn initial_reference<F: Real>(
    theta: &ParameterSet<F>,
    pop: &AgentPopulation<F>,
    net: &Network,
    observations: &[u64],
    seed: u64,
) -> Result<Vec<AgentStateVector>> {
    let rates = compute_agent_rates(theta, pop)?;
    for round in 1..=8u64 {
        let particles = INIT_PARTICLES << round;
        let seed = derive_seed(seed, Domain::FilterSeed, u64::MAX - round);
        let run = run_filter(
            &rates,
            theta.rho(),
            net,
            observations,
            particles,
            seed,
            None,
            &FilterOptions::default(),
        )?;
        if !run.result.sampled_trajectory.is_empty() {
            return Ok(run.result.sampled_trajectory);
        }
    }
    Err(crate::Error::Contract(
        "no hidden path consistent with the observations was found at the initial parameters".into(),
    ))
}

/// Particle Gibbs with `particles` particles; the reference starts as a
/// bootstrap-filter draw at the initial parameters (with at least 100 particles). Each sweep runs
/// conditional SMC, then updates `rho` by its conjugate draw when its prior
/// is Beta, then makes one random-walk Metropolis step on the coefficients
/// (and `logit(rho)` when its prior is not Beta) targeting the complete-data
/// likelihood times the prior.
#[allow(clippy::too_many_arguments)]
pub fn particle_gibbs<F: Real>(
    observations: &[u64],
    pop: &AgentPopulation<F>,
    net: &Network,
    prior: &PriorSpec,
    kernel: &ProposalKernel,
    template: &ParameterSet<F>,
    particles: usize,
    config: &McmcConfig<F>,
) -> Result<PosteriorChain<F>> {
    ensure!(particles >= 1, "need at least one particle");
    check_config(config, kernel, template.n_coordinates())?;
    prior.check_layout(template)?;
    let conjugate = match prior.rho() {
        RhoPrior::Beta { a, b } => Some((a, b)),
        RhoPrior::NormalOnLogit { .. } => None,
    };
    let mut mask = vec![true; template.n_coordinates()];
    *mask.last_mut().expect("rho coordinate") = conjugate.is_none();
    let kernel = kernel.restricted(&mask)?;

    let estimator = ParticleFilterLikelihood::new(pop, net, observations, particles.max(INIT_PARTICLES));
    let start = initialize(&estimator, prior, template, config)?;
    let mut theta = start.theta;
    let mut reference = match start.estimate.trajectory {
        Some(path) => path,
        None => initial_reference(&theta, pop, net, observations, config.seed)?,
    };

    let options = FilterOptions::default();
    let mut chain = PosteriorChain::new(template.coordinate_names());
    chain.draws.reserve(config.iterations);
    let total = config.burn_in + config.iterations;
    for i in 1..=total {
        let major = i as u32;
        let rates = compute_agent_rates(&theta, pop)?;
        let seed = derive_seed(config.seed, Domain::FilterSeed, i as u64);
        let run = run_filter(
            &rates,
            theta.rho(),
            net,
            observations,
            particles,
            seed,
            Some(&reference),
            &options,
        )?;
        reference = split_reference(run.result, &reference).1;

        if let Some((a, b)) = conjugate {
            let rho = update_rho_conjugate(
                &reference,
                observations,
                a,
                b,
                &mut stream(config.seed, Domain::Gibbs, major, 0),
            )?;
            theta = theta.with_rho(rho)?;
        }

        let target = |t: &ParameterSet<F>| -> Result<F> {
            let lp = LogPrior::<F>::log_prior(prior, t);
            if !(lp > F::neg_infinity()) {
                return Ok(lp);
            }
            let r = compute_agent_rates(t, pop)?;
            Ok(lp + complete_data_loglik(&r, t.rho(), net, &reference, observations)?)
        };
        let current_u = theta.unconstrained();
        let proposed_u = kernel.propose(&current_u, &mut stream(config.seed, Domain::Proposal, major, 0))?;
        let accepted = if proposed_u == current_u {
            true
        } else if let Ok(candidate) = theta.with_unconstrained(&proposed_u) {
            let ok = mh_accept(
                target(&theta)?,
                target(&candidate)?,
                &mut stream(config.seed, Domain::Accept, major, 0),
            );
            if ok {
                theta = candidate;
            }
            ok
        } else {
            false
        };

        if i > config.burn_in {
            let index = chain.draws.len();
            let rates = compute_agent_rates(&theta, pop)?;
            chain.draws.push(Draw {
                log_likelihood: complete_data_loglik(&rates, theta.rho(), net, &reference, observations)?,
                theta: theta.clone(),
                accepted,
            });
            if config.thinning > 0 && index % config.thinning == 0 {
                chain.trajectories.push(StoredTrajectory {
                    index,
                    path: reference.clone(),
                });
            }
        }
    }
    Ok(chain)
}
