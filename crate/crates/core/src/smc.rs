//! Sequential Monte Carlo over agent-state vectors.
//!
//! The bootstrap filter proposes from the transition prior, weights each
//! particle by the binomial emission of its infected count and resamples at
//! every step. The product over time of the mean unnormalized weights is an
//! unbiased estimate of `p(y_{0:T} | theta)`. The conditional variant pins
//! the last particle to a reference path, which is what Particle Gibbs
//! needs. For tiny populations [`exact_loglik_forward`] enumerates the full
//! `2^N` state space and gives the marginal likelihood exactly.
//!
//! Randomness: particle `p` at time `t` propagates with its own stream
//! `(seed, t, p)`; resampling at `t` uses stream `(seed, t)`. Propagation is
//! spread over rayon workers when the ensemble is large, without changing
//! any result.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{ensure, Result};
use crate::model::{
    binomial_logpmf, check_trajectory, compute_agent_rates, initial_into, propagate_into,
    transition_probabilities_into, AgentPopulation, AgentRates, AgentStateVector, ParameterSet, Trajectory,
};
use crate::network::Network;
use crate::rng::{stream, Domain};
use crate::scalar::Real;

/// Below this many agent updates per step propagation stays on one thread.
const PARALLEL_WORK_THRESHOLD: usize = 1 << 14;

/// Largest population [`exact_loglik_forward`] will enumerate.
pub const EXACT_MAX_AGENTS: usize = 12;

/// Particles at one time step with their weights and parents.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleEnsemble<F> {
    width: usize,
    particles: Vec<u8>,
    pub log_weights: Vec<F>,
    /// All zero when every log-weight is `-inf`.
    pub normalized_weights: Vec<F>,
    /// Index, at the previous step, of each particle's parent. Identity at `t = 0`.
    pub ancestors: Vec<usize>,
}

impl<F: Real> ParticleEnsemble<F> {
    pub fn n_particles(&self) -> usize {
        self.log_weights.len()
    }

    pub fn particle(&self, k: usize) -> &[u8] {
        &self.particles[k * self.width..(k + 1) * self.width]
    }

    pub fn infected(&self, k: usize) -> u64 {
        self.particle(k).iter().map(|&s| s as u64).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FilterResult<F> {
    /// `log p_hat(y_{0:T} | theta)`; `-inf` if every particle was impossible at some step.
    pub log_marginal_likelihood: F,
    /// Weighted mean of `I_t` before resampling at each step (truncated at a degenerate step).
    pub filtered_infected_mean: Vec<F>,
    /// One path traced back from a final-weight draw; empty when the likelihood is `-inf`.
    pub sampled_trajectory: Trajectory,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Resampling {
    /// Independent categorical draws.
    #[default]
    Multinomial,
    Systematic,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FilterOptions {
    pub resampling: Resampling,
    /// Keep every step's [`ParticleEnsemble`] in the returned [`FilterRun`].
    pub record_ensembles: bool,
}

/// Everything a filter pass produces.
#[derive(Clone, Debug)]
pub struct FilterRun<F> {
    pub result: FilterResult<F>,
    pub ensembles: Vec<ParticleEnsemble<F>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedWeights<F> {
    pub weights: Vec<F>,
    /// `logsumexp(log_weights) - ln P`: the step's likelihood increment.
    pub log_mean: F,
}

/// Max-shifted exponentiation. `None` when every weight is `-inf` (or the
/// input is empty).
pub fn normalize_weights<F: Real>(log_weights: &[F]) -> Option<NormalizedWeights<F>> {
    let max = log_weights.iter().copied().fold(F::neg_infinity(), F::max);
    if log_weights.is_empty() || max == F::neg_infinity() || max.is_nan() {
        return None;
    }
    let mut weights: Vec<F> = log_weights.iter().map(|&lw| (lw - max).exp()).collect();
    let sum: F = weights.iter().copied().sum();
    for w in &mut weights {
        *w = *w / sum;
    }
    let log_mean = max + sum.ln() - F::of(log_weights.len() as f64).ln();
    Some(NormalizedWeights { weights, log_mean })
}

fn check_weights<F: Real>(weights: &[F]) -> Result<F> {
    ensure!(!weights.is_empty(), "cannot resample from an empty ensemble");
    ensure!(
        weights.iter().all(|w| *w >= F::zero() && w.is_finite()),
        "weights must be finite and nonnegative"
    );
    let total: F = weights.iter().copied().sum();
    ensure!(total > F::zero(), "cannot resample degenerate (all-zero) weights");
    Ok(total)
}

fn cumulative<F: Real>(weights: &[F]) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w.f64();
            acc
        })
        .collect()
}

/// `n_out` independent categorical draws from `weights`.
pub fn multinomial_resample<F: Real, R: Rng + ?Sized>(weights: &[F], n_out: usize, rng: &mut R) -> Result<Vec<usize>> {
    check_weights(weights)?;
    let cdf = cumulative(weights);
    let total = *cdf.last().expect("non-empty");
    let last = weights.len() - 1;
    Ok((0..n_out)
        .map(|_| {
            let u = rng.random::<f64>() * total;
            cdf.partition_point(|&c| c <= u).min(last)
        })
        .collect())
}

/// One uniform offset, `n_out` evenly spaced positions.
pub fn systematic_resample<F: Real, R: Rng + ?Sized>(weights: &[F], n_out: usize, rng: &mut R) -> Result<Vec<usize>> {
    check_weights(weights)?;
    let cdf = cumulative(weights);
    let total = *cdf.last().expect("non-empty");
    let last = weights.len() - 1;
    let offset = rng.random::<f64>();
    let mut k = 0;
    Ok((0..n_out)
        .map(|i| {
            let u = (i as f64 + offset) / n_out as f64 * total;
            while k < last && cdf[k] <= u {
                k += 1;
            }
            k
        })
        .collect())
}

fn resample<F: Real, R: Rng + ?Sized>(
    mode: Resampling,
    weights: &[F],
    n_out: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    match mode {
        Resampling::Multinomial => multinomial_resample(weights, n_out, rng),
        Resampling::Systematic => systematic_resample(weights, n_out, rng),
    }
}

fn check_inputs<F: Real>(rates: &AgentRates<F>, net: &Network, observations: &[u64], particles: usize) -> Result<()> {
    ensure!(particles >= 1, "need at least one particle");
    ensure!(!observations.is_empty(), "need at least one observation");
    ensure!(
        rates.len() == net.len(),
        "population has {} agents but network has {}",
        rates.len(),
        net.len()
    );
    Ok(())
}

/// Shared engine for the bootstrap and conditional filters. With a
/// reference path the last particle is pinned to it at every step, its own
/// ancestor is always itself, and only the first `P - 1` particles are
/// resampled and propagated.
pub(crate) fn run_filter<F: Real>(
    rates: &AgentRates<F>,
    rho: F,
    net: &Network,
    observations: &[u64],
    particles: usize,
    seed: u64,
    reference: Option<&[AgentStateVector]>,
    options: &FilterOptions,
) -> Result<FilterRun<F>> {
    check_inputs(rates, net, observations, particles)?;
    let n = rates.len();
    let steps = observations.len();
    if let Some(r) = reference {
        check_trajectory(r, n, steps)?;
    }
    let free = if reference.is_some() { particles - 1 } else { particles };

    let mut history: Vec<Vec<u8>> = Vec::with_capacity(steps);
    let mut ancestry: Vec<Vec<usize>> = Vec::with_capacity(steps);
    let mut ensembles = Vec::new();
    let mut filtered_mean = Vec::with_capacity(steps);
    let mut log_likelihood = F::zero();
    let mut weights: Vec<F> = Vec::new();
    let parallel = particles * n >= PARALLEL_WORK_THRESHOLD && rayon::current_num_threads() > 1;

    for (t, &y) in observations.iter().enumerate() {
        let mut current = vec![0u8; particles * n];
        let ancestors: Vec<usize> = if t == 0 {
            let init = |(p, out): (usize, &mut [u8])| {
                let mut rng = stream(seed, Domain::InitialState, 0, p as u32);
                initial_into(rates, out, &mut rng);
            };
            if parallel {
                current[..free * n].par_chunks_mut(n).enumerate().for_each(init);
            } else {
                current[..free * n].chunks_mut(n).enumerate().for_each(init);
            }
            (0..particles).collect()
        } else {
            let mut rng = stream(seed, Domain::Resample, t as u32, 0);
            let mut a = resample(options.resampling, &weights, free, &mut rng)?;
            if reference.is_some() {
                a.push(particles - 1);
            }
            let previous = &history[t - 1];
            let step = |counts: &mut Vec<u32>, (p, out): (usize, &mut [u8])| {
                let parent = &previous[a[p] * n..(a[p] + 1) * n];
                let mut rng = stream(seed, Domain::Propagate, t as u32, p as u32);
                propagate_into(parent, rates, net, counts, out, &mut rng);
            };
            if parallel {
                current[..free * n]
                    .par_chunks_mut(n)
                    .enumerate()
                    .for_each_init(|| vec![0u32; n], step);
            } else {
                let mut counts = vec![0u32; n];
                current[..free * n]
                    .chunks_mut(n)
                    .enumerate()
                    .for_each(|job| step(&mut counts, job));
            }
            a
        };
        if let Some(r) = reference {
            current[free * n..].copy_from_slice(r[t].states());
        }

        let infected: Vec<u64> = current.chunks(n).map(|x| x.iter().map(|&s| s as u64).sum()).collect();
        let log_weights: Vec<F> = infected.iter().map(|&i| binomial_logpmf(y, i, rho)).collect();
        let normalized = normalize_weights(&log_weights);

        if options.record_ensembles {
            ensembles.push(ParticleEnsemble {
                width: n,
                particles: current.clone(),
                log_weights: log_weights.clone(),
                normalized_weights: normalized
                    .as_ref()
                    .map_or_else(|| vec![F::zero(); particles], |nw| nw.weights.clone()),
                ancestors: ancestors.clone(),
            });
        }
        history.push(current);
        ancestry.push(ancestors);

        let Some(normalized) = normalized else {
            return Ok(FilterRun {
                result: FilterResult {
                    log_marginal_likelihood: F::neg_infinity(),
                    filtered_infected_mean: filtered_mean,
                    sampled_trajectory: Vec::new(),
                },
                ensembles,
            });
        };
        log_likelihood = log_likelihood + normalized.log_mean;
        filtered_mean.push(
            normalized
                .weights
                .iter()
                .zip(&infected)
                .map(|(&w, &i)| w * F::of(i as f64))
                .sum(),
        );
        weights = normalized.weights;
    }

    let mut rng = stream(seed, Domain::FinalDraw, 0, 0);
    let mut k = multinomial_resample(&weights, 1, &mut rng)?[0];
    let mut path = Vec::with_capacity(steps);
    for t in (0..steps).rev() {
        path.push(AgentStateVector::from_raw(history[t][k * n..(k + 1) * n].to_vec(), t));
        k = ancestry[t][k];
    }
    path.reverse();

    Ok(FilterRun {
        result: FilterResult {
            log_marginal_likelihood: log_likelihood,
            filtered_infected_mean: filtered_mean,
            sampled_trajectory: path,
        },
        ensembles,
    })
}

/// Bootstrap particle filter with `particles >= 2` particles.
pub fn bootstrap_filter<F: Real>(
    theta: &ParameterSet<F>,
    pop: &AgentPopulation<F>,
    net: &Network,
    observations: &[u64],
    particles: usize,
    seed: u64,
) -> Result<FilterResult<F>> {
    Ok(bootstrap_filter_with(
        theta,
        pop,
        net,
        observations,
        particles,
        seed,
        &FilterOptions::default(),
    )?
    .result)
}

pub fn bootstrap_filter_with<F: Real>(
    theta: &ParameterSet<F>,
    pop: &AgentPopulation<F>,
    net: &Network,
    observations: &[u64],
    particles: usize,
    seed: u64,
    options: &FilterOptions,
) -> Result<FilterRun<F>> {
    ensure!(
        particles >= 2,
        "bootstrap filter needs at least 2 particles, got {particles}"
    );
    let rates = compute_agent_rates(theta, pop)?;
    run_filter(&rates, theta.rho(), net, observations, particles, seed, None, options)
}

/// Conditional SMC: particle `P - 1` follows `reference`. Returns the filter
/// result and the next reference, a final-weight draw traced back through
/// the ancestry. If every particle is impossible the input reference is
/// returned unchanged.
pub fn conditional_smc<F: Real>(
    theta: &ParameterSet<F>,
    pop: &AgentPopulation<F>,
    net: &Network,
    observations: &[u64],
    reference: &[AgentStateVector],
    particles: usize,
    seed: u64,
) -> Result<(FilterResult<F>, Trajectory)> {
    let run = conditional_smc_with(
        theta,
        pop,
        net,
        observations,
        reference,
        particles,
        seed,
        &FilterOptions::default(),
    )?;
    Ok(split_reference(run.result, reference))
}

#[allow(clippy::too_many_arguments)]
pub fn conditional_smc_with<F: Real>(
    theta: &ParameterSet<F>,
    pop: &AgentPopulation<F>,
    net: &Network,
    observations: &[u64],
    reference: &[AgentStateVector],
    particles: usize,
    seed: u64,
    options: &FilterOptions,
) -> Result<FilterRun<F>> {
    let rates = compute_agent_rates(theta, pop)?;
    run_filter(
        &rates,
        theta.rho(),
        net,
        observations,
        particles,
        seed,
        Some(reference),
        options,
    )
}

pub(crate) fn split_reference<F: Real>(
    result: FilterResult<F>,
    reference: &[AgentStateVector],
) -> (FilterResult<F>, Trajectory) {
    let next = if result.sampled_trajectory.is_empty() {
        reference.to_vec()
    } else {
        result.sampled_trajectory.clone()
    };
    (result, next)
}

/// Exact `log p(y_{0:T} | theta)` by the forward recursion over all `2^N`
/// joint agent states. Only for `N <= 12`.
pub fn exact_loglik_forward<F: Real>(
    theta: &ParameterSet<F>,
    pop: &AgentPopulation<F>,
    net: &Network,
    observations: &[u64],
) -> Result<F> {
    let rates = compute_agent_rates(theta, pop)?;
    exact_loglik_from_rates(&rates, theta.rho(), net, observations)
}

pub(crate) fn exact_loglik_from_rates<F: Real>(
    rates: &AgentRates<F>,
    rho: F,
    net: &Network,
    observations: &[u64],
) -> Result<F> {
    let n = rates.len();
    ensure!(
        n <= EXACT_MAX_AGENTS,
        "exact forward recursion limited to {EXACT_MAX_AGENTS} agents, got {n}"
    );
    check_inputs(rates, net, observations, 1)?;
    let size = 1usize << n;
    let decode = |s: usize| -> Vec<u8> { (0..n).map(|k| ((s >> k) & 1) as u8).collect() };
    let infected: Vec<u64> = (0..size).map(|s| s.count_ones() as u64).collect();

    // product-Bernoulli law over all 2^N outcomes; doubling puts agent k on bit k
    let product_law = |p: &[F]| -> Vec<F> {
        let mut law = vec![F::one()];
        for &pk in p {
            let mut next = Vec::with_capacity(law.len() * 2);
            next.extend(law.iter().map(|&v| v * (F::one() - pk)));
            next.extend(law.iter().map(|&v| v * pk));
            law = next;
        }
        law
    };

    let mut counts = vec![0u32; n];
    let mut xi = vec![F::zero(); n];
    let kernel: Vec<Vec<F>> = (0..size)
        .map(|s| {
            transition_probabilities_into(&decode(s), rates, net, &mut counts, &mut xi);
            product_law(&xi)
        })
        .collect();

    let mut alpha = product_law(&rates.alpha0);
    let mut log_likelihood = F::zero();
    for (t, &y) in observations.iter().enumerate() {
        if t > 0 {
            let mut next = vec![F::zero(); size];
            for (s, &a) in alpha.iter().enumerate() {
                if a == F::zero() {
                    continue;
                }
                for (dst, &k) in next.iter_mut().zip(&kernel[s]) {
                    *dst = *dst + a * k;
                }
            }
            alpha = next;
        }
        for (a, &i) in alpha.iter_mut().zip(&infected) {
            *a = *a * binomial_logpmf(y, i, rho).exp();
        }
        let c: F = alpha.iter().copied().sum();
        if c <= F::zero() {
            return Ok(F::neg_infinity());
        }
        log_likelihood = log_likelihood + c.ln();
        for a in &mut alpha {
            *a = *a / c;
        }
    }
    Ok(log_likelihood)
}
