//! Posterior summaries: coordinates and per-draw derived group rates.

use std::io::Write;

use crate::error::{ensure, Result};
use crate::io::config::AgentGroup;
use crate::model::{compute_agent_rates, logistic_link, AgentPopulation, Recovery};
use crate::pmcmc::PosteriorChain;

/// Linear-interpolation quantile of sorted data (R type 7).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty() && (0.0..=1.0).contains(&q));
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub quantity: String,
    pub mean: f64,
    pub q025: f64,
    pub q975: f64,
}

impl SummaryRow {
    /// Mean and central 95% interval of `values`.
    pub fn of(quantity: impl Into<String>, values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            quantity: quantity.into(),
            mean: values.iter().sum::<f64>() / values.len() as f64,
            q025: quantile_sorted(&sorted, 0.025),
            q975: quantile_sorted(&sorted, 0.975),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorSummary {
    pub rows: Vec<SummaryRow>,
    pub acceptance_rate: f64,
    pub draws: usize,
}

impl PosteriorSummary {
    pub fn get(&self, quantity: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.quantity == quantity)
    }

    /// Header `quantity,mean,q025,q975`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["quantity", "mean", "q025", "q975"])?;
        for r in &self.rows {
            w.write_record([
                r.quantity.clone(),
                r.mean.to_string(),
                r.q025.to_string(),
                r.q975.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Per-draw rates of each covariate group: `alpha0[g]`, `lambda[g]`,
/// `gamma[g]` and `R[g] = lambda / gamma`, one vector per quantity.
pub fn group_rate_draws(chain: &PosteriorChain<f64>, groups: &[AgentGroup]) -> Result<Vec<(String, Vec<f64>)>> {
    let mut out = Vec::new();
    for g in groups {
        let Some(z) = &g.covariates else { continue };
        let mut series: [Vec<f64>; 4] = Default::default();
        for d in &chain.draws {
            let alpha0 = logistic_link(d.theta.beta_alpha(), z)?;
            let lambda = logistic_link(d.theta.beta_lambda(), z)?;
            let gamma = match d.theta.recovery() {
                Recovery::Fixed(v) => *v,
                Recovery::Covariate(b) => logistic_link(b, z)?,
            };
            for (s, v) in series.iter_mut().zip([alpha0, lambda, gamma, lambda / gamma]) {
                s.push(v);
            }
        }
        for (name, s) in ["alpha0", "lambda", "gamma", "R"].into_iter().zip(series) {
            out.push((format!("{name}[{}]", g.name), s));
        }
    }
    Ok(out)
}

/// Natural-scale coordinate summaries followed by derived group rates.
/// Every derived quantity is evaluated per draw, then summarized.
pub fn posterior_summary(chain: &PosteriorChain<f64>, groups: &[AgentGroup]) -> Result<PosteriorSummary> {
    ensure!(!chain.is_empty(), "cannot summarize an empty chain");
    let mut rows: Vec<SummaryRow> = chain
        .names
        .iter()
        .enumerate()
        .map(|(k, name)| SummaryRow::of(name.clone(), &chain.column(k)))
        .collect();
    for (name, values) in group_rate_draws(chain, groups)? {
        rows.push(SummaryRow::of(name, &values));
    }
    Ok(PosteriorSummary {
        rows,
        acceptance_rate: chain.acceptance_rate(),
        draws: chain.len(),
    })
}

/// Posterior mean of each agent's infection rate.
pub fn posterior_mean_lambda(chain: &PosteriorChain<f64>, pop: &AgentPopulation<f64>) -> Result<Vec<f64>> {
    ensure!(!chain.is_empty(), "cannot summarize an empty chain");
    let mut mean = vec![0.0; pop.len()];
    for d in &chain.draws {
        let rates = compute_agent_rates(&d.theta, pop)?;
        for (m, l) in mean.iter_mut().zip(&rates.lambda) {
            *m += l;
        }
    }
    let m = chain.len() as f64;
    Ok(mean.into_iter().map(|v| v / m).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ParameterSet;
    use crate::pmcmc::Draw;
    use proptest::prelude::*;

    fn chain(rhos: &[f64]) -> PosteriorChain<f64> {
        let base = ParameterSet::new(vec![-3.0, 0.0], vec![-1.32, 1.09], Recovery::Fixed(1.0 / 13.5), 0.5).unwrap();
        let mut c = PosteriorChain::new(base.coordinate_names());
        for &rho in rhos {
            c.draws.push(Draw {
                theta: base.with_rho(rho).unwrap(),
                log_likelihood: 0.0,
                accepted: true,
            });
        }
        c
    }

    fn groups() -> Vec<AgentGroup> {
        vec![
            AgentGroup {
                name: "younger".into(),
                members: vec![0],
                covariates: Some(vec![1.0, 0.0]),
            },
            AgentGroup {
                name: "elderly".into(),
                members: vec![1],
                covariates: Some(vec![1.0, 1.0]),
            },
        ]
    }

    #[test]
    fn constant_and_two_point_chains() {
        let s = posterior_summary(&chain(&[0.6; 5]), &[]).unwrap();
        let rho = s.get("rho").unwrap();
        assert!((rho.mean - 0.6).abs() < 1e-15);
        assert_eq!(rho.q975 - rho.q025, 0.0);
        let mut two = chain(&[0.5, 0.5]);
        two.draws[0].theta = two.draws[0]
            .theta
            .with_natural_values(&[0.0, 0.0, 0.0, 0.0, 0.5])
            .unwrap();
        two.draws[1].theta = two.draws[1]
            .theta
            .with_natural_values(&[1.0, 1.0, 1.0, 1.0, 0.5])
            .unwrap();
        assert!((posterior_summary(&two, &[]).unwrap().get("beta_a0").unwrap().mean - 0.5).abs() < 1e-15);
        assert!(posterior_summary(&chain(&[]), &[]).is_err());
    }

    #[test]
    fn group_reproduction_numbers() {
        let s = posterior_summary(&chain(&[0.6]), &groups()).unwrap();
        let young = s.get("R[younger]").unwrap().mean;
        let old = s.get("R[elderly]").unwrap().mean;
        // logistic(-1.32) * 13.5 and logistic(-0.23) * 13.5
        assert!((young - 2.846).abs() < 1e-3, "{young}");
        assert!((old - 5.978).abs() < 1e-3, "{old}");
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("quantity,mean,q025,q975\nbeta_a0,"));
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&v, 0.5), 3.0);
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 5.0);
        assert!((quantile_sorted(&v, 0.025) - 1.1).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn summary_ignores_draw_order(rhos in prop::collection::vec(0.01f64..0.99, 1..30), seed in any::<u64>()) {
            let c = chain(&rhos);
            let mut shuffled = c.clone();
            let mut rng = crate::rng::stream(seed, crate::rng::Domain::Proposal, 0, 0);
            rand::seq::SliceRandom::shuffle(shuffled.draws.as_mut_slice(), &mut rng);
            let a = posterior_summary(&c, &groups()).unwrap();
            let b = posterior_summary(&shuffled, &groups()).unwrap();
            for (x, y) in a.rows.iter().zip(&b.rows) {
                prop_assert!((x.mean - y.mean).abs() < 1e-12);
                prop_assert_eq!(x.q025, y.q025);
                prop_assert_eq!(x.q975, y.q975);
            }
        }
    }
}
