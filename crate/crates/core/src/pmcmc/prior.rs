//! Prior families and their densities on the sampler scale.

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

use crate::error::{ensure, Result};
use crate::model::ParameterSet;
use crate::scalar::{ln_std_normal_cdf, std_normal_quantile, Real};

/// Prior on one link coefficient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Prior {
    Normal {
        mean: f64,
        sd: f64,
    },
    /// Normal truncated to `(0, inf)`.
    TruncatedNormalPositive {
        mean: f64,
        sd: f64,
    },
    /// Normal truncated to `(-inf, 0)`.
    TruncatedNormalNegative {
        mean: f64,
        sd: f64,
    },
}

/// Prior on the detection probability.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RhoPrior {
    /// `rho ~ Beta(a, b)`.
    Beta { a: f64, b: f64 },
    /// `logit(rho) ~ N(mean, sd^2)`.
    NormalOnLogit { mean: f64, sd: f64 },
}

fn normal_logpdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

impl Prior {
    pub fn sd(&self) -> f64 {
        match *self {
            Prior::Normal { sd, .. }
            | Prior::TruncatedNormalPositive { sd, .. }
            | Prior::TruncatedNormalNegative { sd, .. } => sd,
        }
    }

    pub fn log_density(&self, x: f64) -> f64 {
        match *self {
            Prior::Normal { mean, sd } => normal_logpdf(x, mean, sd),
            Prior::TruncatedNormalPositive { mean, sd } => {
                if x > 0.0 {
                    normal_logpdf(x, mean, sd) - ln_std_normal_cdf(mean / sd)
                } else {
                    f64::NEG_INFINITY
                }
            }
            Prior::TruncatedNormalNegative { mean, sd } => {
                if x < 0.0 {
                    normal_logpdf(x, mean, sd) - ln_std_normal_cdf(-mean / sd)
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// Truncated families are sampled by inverting the CDF on the allowed interval.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let inverse = |lo: f64, hi: f64, mean: f64, sd: f64, rng: &mut R| {
            let u: f64 = rng.random();
            mean + sd * std_normal_quantile(lo + u * (hi - lo))
        };
        let cdf = |x: f64| ln_std_normal_cdf(x).exp();
        match *self {
            Prior::Normal { mean, sd } => mean + sd * rng.sample::<f64, _>(StandardNormal),
            Prior::TruncatedNormalPositive { mean, sd } => loop {
                let x = inverse(cdf(-mean / sd), 1.0, mean, sd, rng);
                if x > 0.0 && x.is_finite() {
                    return x;
                }
            },
            Prior::TruncatedNormalNegative { mean, sd } => loop {
                let x = inverse(0.0, cdf(-mean / sd), mean, sd, rng);
                if x < 0.0 && x.is_finite() {
                    return x;
                }
            },
        }
    }

    fn validate(&self) -> Result<()> {
        let (mean, sd) = match *self {
            Prior::Normal { mean, sd }
            | Prior::TruncatedNormalPositive { mean, sd }
            | Prior::TruncatedNormalNegative { mean, sd } => (mean, sd),
        };
        ensure!(
            mean.is_finite() && sd.is_finite() && sd > 0.0,
            "prior needs finite mean and sd > 0, got {self:?}"
        );
        Ok(())
    }
}

impl RhoPrior {
    /// Log density of `logit(rho) = u`. The Beta case includes the
    /// `rho (1 - rho)` Jacobian of the logit transform.
    pub fn log_density_logit(&self, u: f64) -> f64 {
        match *self {
            RhoPrior::NormalOnLogit { mean, sd } => normal_logpdf(u, mean, sd),
            RhoPrior::Beta { a, b } => {
                // ln rho = -ln(1 + e^-u), ln(1 - rho) = -ln(1 + e^u)
                let ln_rho = -(-u).exp().ln_1p();
                let ln_one_minus = -u.exp().ln_1p();
                if !ln_rho.is_finite() || !ln_one_minus.is_finite() {
                    return f64::NEG_INFINITY;
                }
                a * ln_rho + b * ln_one_minus - ln_beta(a, b)
            }
        }
    }

    /// Log density of `rho` itself.
    pub fn log_density(&self, rho: f64) -> f64 {
        if !(rho > 0.0 && rho < 1.0) {
            return f64::NEG_INFINITY;
        }
        match *self {
            RhoPrior::Beta { a, b } => (a - 1.0) * rho.ln() + (b - 1.0) * (1.0 - rho).ln() - ln_beta(a, b),
            RhoPrior::NormalOnLogit { mean, sd } => normal_logpdf(rho.logit(), mean, sd) - rho.ln() - (1.0 - rho).ln(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            RhoPrior::Beta { a, b } => loop {
                let r: f64 = Beta::new(a, b).expect("validated shape").sample(rng);
                if r > 0.0 && r < 1.0 {
                    return r;
                }
            },
            RhoPrior::NormalOnLogit { mean, sd } => (mean + sd * rng.sample::<f64, _>(StandardNormal)).logistic(),
        }
    }

    /// Central interval of `rho` with probability `mass`.
    pub fn central_interval(&self, mass: f64) -> Option<(f64, f64)> {
        match *self {
            RhoPrior::NormalOnLogit { mean, sd } => {
                let z = std_normal_quantile(0.5 + mass / 2.0);
                Some(((mean - z * sd).logistic(), (mean + z * sd).logistic()))
            }
            RhoPrior::Beta { .. } => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            RhoPrior::Beta { a, b } => ensure!(
                a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite(),
                "Beta prior needs a, b > 0"
            ),
            RhoPrior::NormalOnLogit { mean, sd } => {
                ensure!(
                    mean.is_finite() && sd.is_finite() && sd > 0.0,
                    "logit-normal prior needs sd > 0"
                )
            }
        }
        Ok(())
    }
}

fn ln_beta(a: f64, b: f64) -> f64 {
    Real::ln_gamma(a) + Real::ln_gamma(b) - Real::ln_gamma(a + b)
}

/// Log prior density and a sampler for initial values.
pub trait LogPrior<F: Real>: Sync {
    /// Log density on the sampler scale (coefficients, then `logit(rho)`).
    fn log_prior(&self, theta: &ParameterSet<F>) -> F;

    /// A draw with the layout of `template`.
    fn sample(&self, template: &ParameterSet<F>, rng: &mut dyn rand::RngCore) -> Result<ParameterSet<F>>;
}

/// Independent priors: one per coefficient in coordinate order
/// (`beta_alpha`, `beta_lambda`, then `beta_gamma` if free) and one on `rho`.
#[derive(Clone, Debug, PartialEq)]
pub struct PriorSpec {
    coefficients: Vec<Prior>,
    rho: RhoPrior,
}

impl PriorSpec {
    pub fn new(coefficients: Vec<Prior>, rho: RhoPrior) -> Result<Self> {
        ensure!(!coefficients.is_empty(), "need at least one coefficient prior");
        for p in &coefficients {
            p.validate()?;
        }
        rho.validate()?;
        Ok(Self { coefficients, rho })
    }

    /// `N(0, 3^2)` on every coefficient and on `logit(rho)`.
    pub fn diffuse(n_coefficients: usize) -> Self {
        Self {
            coefficients: vec![Prior::Normal { mean: 0.0, sd: 3.0 }; n_coefficients],
            rho: RhoPrior::NormalOnLogit { mean: 0.0, sd: 3.0 },
        }
    }

    /// `N(0, 3^2)` on intercepts, positive (negative) truncation on the
    /// covariate slopes of `lambda` (`gamma`), `N(logit 0.8, 1)` on `logit(rho)`.
    pub fn knowledge_based(dim: usize, free_recovery: bool) -> Self {
        let normal = Prior::Normal { mean: 0.0, sd: 3.0 };
        let mut coefficients = vec![normal; dim];
        coefficients.push(normal);
        coefficients.extend(std::iter::repeat_n(
            Prior::TruncatedNormalPositive { mean: 0.0, sd: 3.0 },
            dim - 1,
        ));
        if free_recovery {
            coefficients.push(normal);
            coefficients.extend(std::iter::repeat_n(
                Prior::TruncatedNormalNegative { mean: 0.0, sd: 3.0 },
                dim - 1,
            ));
        }
        Self {
            coefficients,
            rho: RhoPrior::NormalOnLogit {
                mean: 0.8_f64.logit(),
                sd: 1.0,
            },
        }
    }

    pub fn with_rho(mut self, rho: RhoPrior) -> Result<Self> {
        rho.validate()?;
        self.rho = rho;
        Ok(self)
    }

    pub fn coefficients(&self) -> &[Prior] {
        &self.coefficients
    }

    pub fn rho(&self) -> RhoPrior {
        self.rho
    }

    /// Log prior of sampler-scale coordinates.
    pub fn log_prior_unconstrained(&self, u: &[f64]) -> f64 {
        if u.len() != self.coefficients.len() + 1 {
            return f64::NEG_INFINITY;
        }
        let (beta, logit_rho) = u.split_at(self.coefficients.len());
        let lp: f64 = self.coefficients.iter().zip(beta).map(|(p, &x)| p.log_density(x)).sum();
        lp + self.rho.log_density_logit(logit_rho[0])
    }

    pub fn check_layout<F: Real>(&self, template: &ParameterSet<F>) -> Result<()> {
        ensure!(
            self.coefficients.len() == template.n_coefficients(),
            "{} coefficient priors for {} coefficients",
            self.coefficients.len(),
            template.n_coefficients()
        );
        Ok(())
    }
}

impl<F: Real> LogPrior<F> for PriorSpec {
    fn log_prior(&self, theta: &ParameterSet<F>) -> F {
        let u: Vec<f64> = theta.unconstrained().iter().map(|x| x.f64()).collect();
        F::of(self.log_prior_unconstrained(&u))
    }

    fn sample(&self, template: &ParameterSet<F>, rng: &mut dyn rand::RngCore) -> Result<ParameterSet<F>> {
        self.check_layout(template)?;
        let mut values: Vec<F> = self.coefficients.iter().map(|p| F::of(p.sample(rng))).collect();
        values.push(F::of(self.rho.sample(rng)));
        template.with_natural_values(&values)
    }
}
