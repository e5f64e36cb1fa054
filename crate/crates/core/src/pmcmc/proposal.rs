//! Gaussian random-walk proposals on the sampler scale.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{ensure, Result};
use crate::scalar::Real;

/// Independent normal increments with per-coordinate standard deviations.
/// The last coordinate is `logit(rho)`. A zero step freezes its coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct ProposalKernel {
    steps: Vec<f64>,
    /// Perturb every coordinate at once; otherwise one coordinate with a
    /// nonzero step, chosen uniformly.
    pub joint: bool,
}

impl ProposalKernel {
    pub fn new(steps: Vec<f64>, joint: bool) -> Result<Self> {
        ensure!(!steps.is_empty(), "proposal kernel needs at least one coordinate");
        ensure!(
            steps.iter().all(|s| s.is_finite() && *s >= 0.0),
            "proposal steps must be finite and nonnegative"
        );
        Ok(Self { steps, joint })
    }

    pub fn uniform(n_coordinates: usize, step: f64) -> Result<Self> {
        Self::new(vec![step; n_coordinates], true)
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Every step multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.steps.iter().map(|s| s * factor).collect(), self.joint)
    }

    /// Same kernel with the coordinates where `keep` is false frozen.
    pub fn restricted(&self, keep: &[bool]) -> Result<Self> {
        ensure!(
            keep.len() == self.steps.len(),
            "mask length {} for {} coordinates",
            keep.len(),
            self.steps.len()
        );
        Self::new(
            self.steps
                .iter()
                .zip(keep)
                .map(|(&s, &k)| if k { s } else { 0.0 })
                .collect(),
            self.joint,
        )
    }

    /// `u + step * N(0, I)`. Symmetric, so the Hastings correction is 1.
    pub fn propose<F: Real, R: Rng + ?Sized>(&self, u: &[F], rng: &mut R) -> Result<Vec<F>> {
        ensure!(
            u.len() == self.steps.len(),
            "kernel has {} coordinates, state {}",
            self.steps.len(),
            u.len()
        );
        let mut out = u.to_vec();
        if self.joint {
            for (x, &s) in out.iter_mut().zip(&self.steps) {
                if s > 0.0 {
                    *x = *x + F::of(s * rng.sample::<f64, _>(StandardNormal));
                }
            }
        } else {
            let active: Vec<usize> = (0..self.steps.len()).filter(|&k| self.steps[k] > 0.0).collect();
            if !active.is_empty() {
                let k = active[rng.random_range(0..active.len())];
                out[k] = out[k] + F::of(self.steps[k] * rng.sample::<f64, _>(StandardNormal));
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};

    #[test]
    fn zero_step_is_identity() {
        let k = ProposalKernel::uniform(3, 0.0).unwrap();
        let mut rng = stream(0, Domain::Proposal, 0, 0);
        assert_eq!(k.propose(&[1.0, -2.0, 0.5], &mut rng).unwrap(), vec![1.0, -2.0, 0.5]);
        assert!(ProposalKernel::new(vec![0.1, -0.1], true).is_err());
        assert!(k.propose(&[1.0], &mut rng).is_err());
    }

    #[test]
    fn increment_sd_matches_step() {
        let k = ProposalKernel::uniform(5, 0.1).unwrap();
        let mut rng = stream(7, Domain::Proposal, 0, 0);
        let draws = 10_000;
        let mut sq = [0.0; 5];
        for _ in 0..draws {
            let x = k.propose(&[0.0; 5], &mut rng).unwrap();
            for (a, v) in sq.iter_mut().zip(&x) {
                *a += v * v;
            }
        }
        for a in sq {
            let sd = (a / draws as f64).sqrt();
            // sd of the sample sd is about 0.1 / sqrt(2 * 10^4)
            assert!((sd - 0.1).abs() < 0.003, "{sd}");
        }
    }

    #[test]
    fn single_site_moves_one_active_coordinate() {
        let k = ProposalKernel::new(vec![1.0, 0.0, 1.0], false).unwrap();
        let mut rng = stream(3, Domain::Proposal, 0, 0);
        for _ in 0..200 {
            let x = k.propose(&[0.0; 3], &mut rng).unwrap();
            assert_eq!(x[1], 0.0);
            assert_eq!(x.iter().filter(|&&v| v != 0.0).count(), 1);
        }
        let frozen = ProposalKernel::uniform(3, 0.5)
            .unwrap()
            .restricted(&[true, false, false])
            .unwrap();
        assert_eq!(frozen.steps(), &[0.5, 0.0, 0.0]);
    }
}
