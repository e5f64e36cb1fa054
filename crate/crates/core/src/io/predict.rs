//! Posterior-predictive bands of reported and actual cases.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{ensure, Result};
use crate::io::config::{AgentGroup, Response};
use crate::io::summary::quantile_sorted;
use crate::model::AgentPopulation;
use crate::network::Network;
use crate::pmcmc::PosteriorChain;
use crate::rng::{derive_seed, stream, Domain};
use crate::simulate::simulate_abm;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Series {
    /// Cases that pass the detection layer.
    Reported,
    /// Every case, as if all agents were tested.
    Actual,
}

impl Series {
    pub fn as_str(self) -> &'static str {
        match self {
            Series::Reported => "reported",
            Series::Actual => "actual",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BandRow {
    pub day: i64,
    pub group: String,
    pub series: Series,
    pub q025: f64,
    pub q50: f64,
    pub q975: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictiveBands {
    pub rows: Vec<BandRow>,
}

impl PredictiveBands {
    pub fn get(&self, day: i64, group: &str, series: Series) -> Option<&BandRow> {
        self.rows
            .iter()
            .find(|r| r.day == day && r.group == group && r.series == series)
    }

    /// Header `day,group,series,q025,q50,q975`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["day", "group", "series", "q025", "q50", "q975"])?;
        for r in &self.rows {
            w.write_record([
                r.day.to_string(),
                r.group.clone(),
                r.series.as_str().to_string(),
                r.q025.to_string(),
                r.q50.to_string(),
                r.q975.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub struct PredictOptions<'a> {
    pub steps: usize,
    pub draws: usize,
    pub seed: u64,
    pub response: Response,
    /// Label of model time 0 in the output.
    pub first_day: i64,
    /// Reported alongside the whole population, which is labelled `all`.
    pub groups: &'a [AgentGroup],
}

/// Per draw: `[group][t]` reported and actual counts.
type DrawCounts = (Vec<Vec<u64>>, Vec<Vec<u64>>);

/// Forward-simulates the model at `draws` chain states spaced evenly over
/// the chain, thins each agent's cases by `rho`, and summarizes per day.
///
/// Prevalence thins each infected agent-day independently. Cumulative
/// counts agents ever infected, each detected with one draw per agent.
pub fn predict_trajectories(
    chain: &PosteriorChain<f64>,
    pop: &AgentPopulation<f64>,
    net: &Network,
    options: &PredictOptions<'_>,
) -> Result<PredictiveBands> {
    ensure!(!chain.is_empty(), "cannot predict from an empty chain");
    ensure!(options.draws >= 1, "need at least one predictive draw");
    ensure!(options.steps >= 1, "need at least one time step");
    let all: Vec<usize> = (0..pop.len()).collect();
    let mut members: Vec<(&str, &[usize])> = vec![("all", &all)];
    members.extend(options.groups.iter().map(|g| (g.name.as_str(), g.members.as_slice())));

    let per_draw: Vec<DrawCounts> = (0..options.draws)
        .into_par_iter()
        .map(|k| {
            let theta = &chain.draws[k * chain.len() / options.draws].theta;
            let seed = derive_seed(options.seed, Domain::Prediction, k as u64);
            let sim = simulate_abm(theta, pop, net, options.steps, seed)?;
            let rho = theta.rho();
            let n = pop.len();
            let mut reported = vec![vec![0u64; options.steps + 1]; members.len()];
            let mut actual = reported.clone();
            let mut ever = vec![false; n];
            let mut detect_rng = stream(seed, Domain::Prediction, 0, 0);
            let detected_once: Vec<bool> = (0..n).map(|_| detect_rng.random::<f64>() < rho).collect();
            for (t, state) in sim.hidden_states.iter().enumerate() {
                let mut rng = stream(seed, Domain::Prediction, t as u32 + 1, 0);
                let mut case = vec![false; n];
                let mut seen = vec![false; n];
                for a in 0..n {
                    let infected = state.is_infected(a);
                    ever[a] |= infected;
                    (case[a], seen[a]) = match options.response {
                        Response::Prevalence => (infected, infected && rng.random::<f64>() < rho),
                        Response::Cumulative => (ever[a], ever[a] && detected_once[a]),
                    };
                }
                for (g, (_, m)) in members.iter().enumerate() {
                    actual[g][t] = m.iter().filter(|&&a| case[a]).count() as u64;
                    reported[g][t] = m.iter().filter(|&&a| seen[a]).count() as u64;
                }
            }
            Ok((reported, actual))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for t in 0..=options.steps {
        for (g, (name, _)) in members.iter().enumerate() {
            for series in [Series::Reported, Series::Actual] {
                let mut values: Vec<f64> = per_draw
                    .iter()
                    .map(|(r, a)| match series {
                        Series::Reported => r[g][t],
                        Series::Actual => a[g][t],
                    } as f64)
                    .collect();
                values.sort_by(f64::total_cmp);
                rows.push(BandRow {
                    day: options.first_day + t as i64,
                    group: name.to_string(),
                    series,
                    q025: quantile_sorted(&values, 0.025),
                    q50: quantile_sorted(&values, 0.5),
                    q975: quantile_sorted(&values, 0.975),
                });
            }
        }
    }
    Ok(PredictiveBands { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ParameterSet, Recovery};
    use crate::pmcmc::Draw;

    fn chain(alpha0: f64, rho: f64) -> PosteriorChain<f64> {
        let a = -(1.0 / alpha0 - 1.0_f64).ln();
        let theta = ParameterSet::new(vec![a, 0.0], vec![0.0, 1.0], Recovery::Fixed(0.1), rho).unwrap();
        let mut c = PosteriorChain::new(theta.coordinate_names());
        for _ in 0..4 {
            c.draws.push(Draw {
                theta: theta.clone(),
                log_likelihood: 0.0,
                accepted: false,
            });
        }
        c
    }

    fn setup() -> (AgentPopulation<f64>, Network, Vec<AgentGroup>) {
        let z: Vec<f64> = (0..40).map(|k| (k % 2) as f64).collect();
        let pop = AgentPopulation::with_intercept(&z).unwrap();
        let groups = vec![AgentGroup {
            name: "odd".into(),
            members: (0..40).filter(|k| k % 2 == 1).collect(),
            covariates: Some(vec![1.0, 1.0]),
        }];
        (pop, Network::fully_connected(40).unwrap(), groups)
    }

    fn options(groups: &[AgentGroup], response: Response) -> PredictOptions<'_> {
        PredictOptions {
            steps: 10,
            draws: 30,
            seed: 5,
            response,
            first_day: 1,
            groups,
        }
    }

    #[test]
    fn full_detection_bands_coincide() {
        let (pop, net, groups) = setup();
        for response in [Response::Prevalence, Response::Cumulative] {
            let bands = predict_trajectories(&chain(0.3, 1.0), &pop, &net, &options(&groups, response)).unwrap();
            assert_eq!(bands.rows.len(), 11 * 2 * 2);
            for day in 1..=11 {
                for g in ["all", "odd"] {
                    let r = bands.get(day, g, Series::Reported).unwrap();
                    let a = bands.get(day, g, Series::Actual).unwrap();
                    assert_eq!((r.q025, r.q50, r.q975), (a.q025, a.q50, a.q975));
                }
            }
        }
    }

    #[test]
    fn no_seed_infections_gives_zero_bands() {
        let (pop, net, groups) = setup();
        let mut c = chain(0.3, 0.7);
        for d in &mut c.draws {
            d.theta = d.theta.with_natural_values(&[-800.0, 0.0, 0.0, 1.0, 0.7]).unwrap();
        }
        let bands = predict_trajectories(&c, &pop, &net, &options(&groups, Response::Prevalence)).unwrap();
        assert!(bands
            .rows
            .iter()
            .all(|r| r.q025 == 0.0 && r.q50 == 0.0 && r.q975 == 0.0));
    }

    #[test]
    fn cumulative_bands_never_decrease_and_dominate_prevalence() {
        let (pop, net, groups) = setup();
        let c = chain(0.3, 0.6);
        let cum = predict_trajectories(&c, &pop, &net, &options(&groups, Response::Cumulative)).unwrap();
        let prev = predict_trajectories(&c, &pop, &net, &options(&groups, Response::Prevalence)).unwrap();
        for day in 2..=11 {
            let a = cum.get(day, "all", Series::Actual).unwrap();
            let b = cum.get(day - 1, "all", Series::Actual).unwrap();
            assert!(a.q50 >= b.q50);
            assert!(a.q975 >= prev.get(day, "all", Series::Actual).unwrap().q975);
        }
    }

    #[test]
    fn zero_draws_and_empty_chain_are_rejected() {
        let (pop, net, groups) = setup();
        let mut o = options(&groups, Response::Prevalence);
        o.draws = 0;
        assert!(predict_trajectories(&chain(0.3, 0.5), &pop, &net, &o).is_err());
        let empty = PosteriorChain::new(chain(0.3, 0.5).names);
        assert!(predict_trajectories(&empty, &pop, &net, &options(&groups, Response::Prevalence)).is_err());
    }

    #[test]
    fn deterministic_for_a_seed() {
        let (pop, net, groups) = setup();
        let o = options(&groups, Response::Prevalence);
        let a = predict_trajectories(&chain(0.3, 0.6), &pop, &net, &o).unwrap();
        let b = predict_trajectories(&chain(0.3, 0.6), &pop, &net, &o).unwrap();
        assert_eq!(a, b);
    }
}
