//! Pilot-run step-size tuning.

use crate::error::{ensure, Result};
use crate::model::ParameterSet;
use crate::scalar::Real;

use super::pmmh::{pmmh_with, LikelihoodEstimator, McmcConfig};
use super::prior::LogPrior;
use super::proposal::ProposalKernel;

#[derive(Clone, Debug, PartialEq)]
pub struct PilotConfig<F> {
    /// Length of each pilot chain; at least 500.
    pub iterations: usize,
    pub max_rounds: usize,
    /// Target acceptance band, inclusive.
    pub band: (f64, f64),
    pub seed: u64,
    pub init: Option<ParameterSet<F>>,
}

impl<F> PilotConfig<F> {
    pub fn new(iterations: usize, seed: u64) -> Self {
        Self {
            iterations,
            max_rounds: 10,
            band: (0.15, 0.20),
            seed,
            init: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TunedKernel {
    pub kernel: ProposalKernel,
    /// Pilot acceptance rate achieved by `kernel`.
    pub acceptance_rate: f64,
    pub converged: bool,
    pub rounds: usize,
}

/// Doubles every step while the pilot accepts too often and halves it while
/// it accepts too rarely. Every round reuses the same pilot seed, so an
/// in-band kernel is returned unchanged.
pub fn tune_proposal<F: Real, L: LikelihoodEstimator<F>, P: LogPrior<F> + ?Sized>(
    estimator: &L,
    prior: &P,
    kernel: &ProposalKernel,
    template: &ParameterSet<F>,
    pilot: &PilotConfig<F>,
) -> Result<TunedKernel> {
    ensure!(pilot.iterations >= 500, "pilot chains need at least 500 iterations");
    ensure!(pilot.max_rounds >= 1, "need at least one pilot round");
    ensure!(pilot.band.0 <= pilot.band.1, "acceptance band is empty");
    let config = McmcConfig {
        iterations: pilot.iterations,
        burn_in: 0,
        thinning: 0,
        seed: pilot.seed,
        init: pilot.init.clone(),
    };
    let mut current = kernel.clone();
    for round in 1..=pilot.max_rounds {
        let rate = pmmh_with(estimator, prior, &current, template, &config)?.acceptance_rate();
        let (lo, hi) = pilot.band;
        if (lo..=hi).contains(&rate) || round == pilot.max_rounds {
            return Ok(TunedKernel {
                kernel: current,
                acceptance_rate: rate,
                converged: (lo..=hi).contains(&rate),
                rounds: round,
            });
        }
        current = current.scaled(if rate > hi { 2.0 } else { 0.5 })?;
    }
    unreachable!("the last round always returns")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pmcmc::pmmh::tests::{template, Flat};
    use crate::pmcmc::pmmh::Estimate;

    /// Standard normal log-likelihood in the first coordinate.
    struct Gaussian;

    impl LikelihoodEstimator<f64> for Gaussian {
        fn estimate(&self, theta: &ParameterSet<f64>, _: u64) -> Result<Estimate<f64>> {
            let x = theta.beta_alpha()[0] + 3.0;
            Ok(Estimate {
                log_likelihood: -0.5 * x * x,
                trajectory: None,
            })
        }
    }

    fn first_only(step: f64) -> ProposalKernel {
        ProposalKernel::new(vec![step, 0.0, 0.0, 0.0, 0.0], true).unwrap()
    }

    fn pilot() -> PilotConfig<f64> {
        let mut p = PilotConfig::new(2000, 4);
        p.init = Some(template());
        p
    }

    #[test]
    fn acceptance_is_monotone_in_step() {
        let rate = |step| {
            tune_proposal(
                &Gaussian,
                &Flat,
                &first_only(step),
                &template(),
                &PilotConfig {
                    max_rounds: 1,
                    ..pilot()
                },
            )
            .unwrap()
            .acceptance_rate
        };
        let (tiny, mid, huge) = (rate(1e-4), rate(2.0), rate(1e4));
        assert!(tiny > 0.99, "{tiny}");
        assert!(huge < 0.01, "{huge}");
        assert!(tiny > mid && mid > huge);
    }

    #[test]
    fn tuner_reaches_band_and_keeps_in_band_kernels() {
        let tuned = tune_proposal(&Gaussian, &Flat, &first_only(0.05), &template(), &pilot()).unwrap();
        assert!(tuned.converged, "{tuned:?}");
        assert!((0.15..=0.20).contains(&tuned.acceptance_rate));
        let again = tune_proposal(&Gaussian, &Flat, &tuned.kernel, &template(), &pilot()).unwrap();
        assert_eq!(again.kernel, tuned.kernel);
        assert_eq!(again.rounds, 1);
    }

    #[test]
    fn non_convergence_is_flagged() {
        let p = PilotConfig {
            max_rounds: 2,
            ..pilot()
        };
        let tuned = tune_proposal(&Gaussian, &Flat, &first_only(1e-6), &template(), &p).unwrap();
        assert!(!tuned.converged);
        assert_eq!(tuned.rounds, 2);
        assert_eq!(tuned.kernel.steps()[0], 2e-6);
        assert!(tune_proposal(
            &Gaussian,
            &Flat,
            &first_only(1.0),
            &template(),
            &PilotConfig::new(100, 0)
        )
        .is_err());
    }
}
