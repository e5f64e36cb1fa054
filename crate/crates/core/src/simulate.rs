//! Synthetic data: the agent-based model and the aggregate SIS recursion.

use num_traits::Num;
use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use crate::error::{ensure, Result};
use crate::model::{
    compute_agent_rates, initial_into, propagate_into, AgentPopulation, AgentStateVector, ParameterSet, Trajectory,
};
use crate::network::Network;
use crate::rng::{stream, Domain};
use crate::scalar::Real;

/// Hidden path, reported counts and true prevalence for `t = 0..=T`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationOutput {
    pub hidden_states: Trajectory,
    pub observations: Vec<u64>,
    pub true_prevalence: Vec<u64>,
    pub seed: u64,
}

/// Draws `y ~ Binomial(n, p)`.
pub(crate) fn binomial_draw<F: Real, R: Rng + ?Sized>(rng: &mut R, n: u64, p: F) -> u64 {
    let p = p.f64();
    if n == 0 || p <= 0.0 {
        0
    } else if p >= 1.0 {
        n
    } else {
        Binomial::new(n, p).expect("p in (0, 1)").sample(rng)
    }
}

/// Runs the agent-based model for `steps` transitions.
pub fn simulate_abm<F: Real>(
    theta: &ParameterSet<F>,
    pop: &AgentPopulation<F>,
    net: &Network,
    steps: usize,
    seed: u64,
) -> Result<SimulationOutput> {
    ensure!(steps >= 1, "need at least one time step");
    ensure!(
        pop.len() == net.len(),
        "population has {} agents, network {}",
        pop.len(),
        net.len()
    );
    let rates = compute_agent_rates(theta, pop)?;
    let n = pop.len();

    let mut rng = stream(seed, Domain::InitialState, 0, 0);
    let mut current = vec![0u8; n];
    initial_into(&rates, &mut current, &mut rng);

    let mut counts = vec![0u32; n];
    let mut hidden = Vec::with_capacity(steps + 1);
    let mut observations = Vec::with_capacity(steps + 1);
    let mut prevalence = Vec::with_capacity(steps + 1);
    let mut obs_rng = stream(seed, Domain::Observe, 0, 0);
    for t in 0..=steps {
        if t > 0 {
            let mut next = vec![0u8; n];
            let mut rng = stream(seed, Domain::Propagate, t as u32, 0);
            propagate_into(&current, &rates, net, &mut counts, &mut next, &mut rng);
            current = next;
        }
        let state = AgentStateVector::from_raw(current.clone(), t);
        let infected = state.infected_count();
        observations.push(binomial_draw(&mut obs_rng, infected, theta.rho()));
        prevalence.push(infected);
        hidden.push(state);
    }
    Ok(SimulationOutput {
        hidden_states: hidden,
        observations,
        true_prevalence: prevalence,
        seed,
    })
}

/// Aggregate susceptible and infected counts over time.
#[derive(Clone, Debug, PartialEq)]
pub struct CompartmentTrajectory<T> {
    pub susceptible: Vec<T>,
    pub infected: Vec<T>,
}

/// The compartmental SIS recursion
/// `I_{t+1} = I_t + lambda (S_t / N) I_t - gamma I_t`, `S_{t+1} = N - I_{t+1}`.
///
/// Generic over any numeric field, so exact rationals give exact closure.
pub fn classical_sis<T: Num + Clone>(s0: T, i0: T, lambda: T, gamma: T, steps: usize) -> CompartmentTrajectory<T> {
    let n = s0.clone() + i0.clone();
    let mut susceptible = Vec::with_capacity(steps + 1);
    let mut infected = Vec::with_capacity(steps + 1);
    let (mut s, mut i) = (s0, i0);
    susceptible.push(s.clone());
    infected.push(i.clone());
    for _ in 0..steps {
        let flow = lambda.clone() * (s.clone() / n.clone()) * i.clone() - gamma.clone() * i.clone();
        s = s - flow.clone();
        i = i + flow;
        susceptible.push(s.clone());
        infected.push(i.clone());
    }
    CompartmentTrajectory { susceptible, infected }
}

/// Built-in covariate generators. Every preset prepends an intercept column.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CovariatePreset {
    /// `z_2 ~ N(0, 1)`.
    StandardNormal,
    /// `z_2 ~ Bernoulli(p)`.
    Bernoulli(f64),
}

impl CovariatePreset {
    pub fn generate<F: Real>(self, n_agents: usize, seed: u64) -> Result<AgentPopulation<F>> {
        ensure!(n_agents >= 1, "need at least one agent");
        let mut rng = stream(seed, Domain::Population, 0, 0);
        let values: Vec<F> = match self {
            CovariatePreset::StandardNormal => (0..n_agents).map(|_| F::of(StandardNormal.sample(&mut rng))).collect(),
            CovariatePreset::Bernoulli(p) => {
                ensure!((0.0..=1.0).contains(&p), "Bernoulli probability {p} outside [0, 1]");
                (0..n_agents)
                    .map(|_| if rng.random::<f64>() < p { F::one() } else { F::zero() })
                    .collect()
            }
        };
        AgentPopulation::with_intercept(&values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Recovery;
    use num_bigint::BigInt;
    use num_rational::{BigRational, Ratio};

    fn fig2() -> (ParameterSet<f64>, AgentPopulation<f64>, Network) {
        let theta = ParameterSet::new(
            vec![-(1.0_f64 / 0.2 - 1.0).ln(), 0.0],
            vec![1.0, 2.0],
            Recovery::Covariate(vec![-1.0, -3.0]),
            0.8,
        )
        .unwrap();
        let pop = CovariatePreset::StandardNormal.generate(30, 11).unwrap();
        (theta, pop, Network::fully_connected(30).unwrap())
    }

    #[test]
    fn full_detection_reports_everything() {
        let (theta, pop, net) = fig2();
        let out = simulate_abm(&theta.with_rho(1.0).unwrap(), &pop, &net, 30, 5).unwrap();
        assert_eq!(out.observations, out.true_prevalence);
        assert_eq!(out.hidden_states.len(), 31);
    }

    #[test]
    fn no_seed_infections_means_no_epidemic() {
        let (_, pop, net) = fig2();
        let quiet = ParameterSet::new(vec![-800.0, 0.0], vec![1.0, 2.0], Recovery::Fixed(0.1), 0.8).unwrap();
        let out = simulate_abm(&quiet, &pop, &net, 10, 1).unwrap();
        assert!(out.true_prevalence.iter().all(|&i| i == 0));
        assert!(out.observations.iter().all(|&y| y == 0));
    }

    #[test]
    fn output_invariants_and_reproducibility() {
        let (theta, pop, net) = fig2();
        let a = simulate_abm(&theta, &pop, &net, 30, 42).unwrap();
        let b = simulate_abm(&theta, &pop, &net, 30, 42).unwrap();
        assert_eq!(a, b);
        for (t, s) in a.hidden_states.iter().enumerate() {
            assert_eq!(s.time_index(), t);
            assert_eq!(s.infected_count(), a.true_prevalence[t]);
            assert!(a.observations[t] <= a.true_prevalence[t]);
            assert!(a.true_prevalence[t] <= 30);
        }
    }

    #[test]
    fn fig2_epidemic_in_high_lambda_half() {
        let (theta, _, net) = fig2();
        let mut hits = 0;
        for seed in 0..100u64 {
            let pop = CovariatePreset::StandardNormal
                .generate::<f64>(30, 1000 + seed)
                .unwrap();
            let rates = compute_agent_rates(&theta, &pop).unwrap();
            let mut order: Vec<usize> = (0..30).collect();
            order.sort_by(|&a, &b| rates.lambda[b].total_cmp(&rates.lambda[a]));
            let top = &order[..15];
            let out = simulate_abm(&theta, &pop, &net, 30, seed).unwrap();
            if out.hidden_states[1..].iter().any(|s| s.infected_among(top) > 0) {
                hits += 1;
            }
        }
        assert!(hits > 90, "epidemic in high-lambda half in {hits}/100 runs");
    }

    #[test]
    fn reported_mean_tracks_rho_times_prevalence() {
        let pop = CovariatePreset::Bernoulli(0.4).generate::<f64>(100, 3).unwrap();
        let net = Network::fully_connected(100).unwrap();
        let theta = ParameterSet::new(vec![-(19.0_f64).ln(), 0.0], vec![-1.0, 2.0], Recovery::Fixed(0.1), 0.8).unwrap();
        let (mut y, mut i) = (0u64, 0u64);
        for seed in 0..200 {
            let out = simulate_abm(&theta, &pop, &net, 30, seed).unwrap();
            y += out.observations.iter().sum::<u64>();
            i += out.true_prevalence.iter().sum::<u64>();
        }
        let ratio = y as f64 / i as f64;
        assert!((ratio - 0.8).abs() < 0.01, "reported / actual = {ratio}");
    }

    #[test]
    fn sis_recursion_examples() {
        let off = classical_sis(100.0, 0.0, 0.3, 0.1, 20);
        assert!(off.infected.iter().all(|&i| i == 0.0));

        // endemic point: S = N gamma / lambda
        let eq = classical_sis(
            Ratio::new(25i64, 1),
            Ratio::new(75, 1),
            Ratio::new(2, 5),
            Ratio::new(1, 10),
            10,
        );
        assert!(eq.infected.iter().all(|&i| i == Ratio::from_integer(75)));

        let one = classical_sis(
            Ratio::new(90i64, 1),
            Ratio::new(10, 1),
            Ratio::new(3, 10),
            Ratio::new(1, 10),
            1,
        );
        assert_eq!(one.infected[1], Ratio::new(117, 10));
        let float = classical_sis(90.0_f64, 10.0, 0.3, 0.1, 1);
        assert!((float.infected[1] - 11.7).abs() < 1e-12);
    }

    #[test]
    fn sis_population_closure_is_exact_in_rationals() {
        let q = |a: i64, b: i64| BigRational::new(BigInt::from(a), BigInt::from(b));
        let traj = classical_sis(q(95, 1), q(5, 1), q(1, 2), q(1, 5), 8);
        for (s, i) in traj.susceptible.iter().zip(&traj.infected) {
            assert_eq!(s + i, q(100, 1));
        }
        let f = classical_sis(95.0_f64, 5.0, 0.5, 0.2, 200);
        for (s, i) in f.susceptible.iter().zip(&f.infected) {
            assert!((s + i - 100.0).abs() < 1e-9);
        }
    }

    #[test]
    fn bernoulli_preset_fraction() {
        let pop = CovariatePreset::Bernoulli(0.4).generate::<f64>(5000, 8).unwrap();
        let frac = pop.rows().filter(|r| r[1] == 1.0).count() as f64 / 5000.0;
        assert!((frac - 0.4).abs() < 0.03);
        assert!(pop.rows().all(|r| r[0] == 1.0));
    }
}
