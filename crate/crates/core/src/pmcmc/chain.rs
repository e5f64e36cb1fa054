//! Posterior draws and their CSV form.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::model::{ParameterSet, Trajectory};
use crate::scalar::Real;

/// One retained MCMC state.
#[derive(Clone, Debug, PartialEq)]
pub struct Draw<F> {
    pub theta: ParameterSet<F>,
    /// The likelihood attached to `theta`: the particle estimate for PMMH,
    /// the complete-data value at the current reference for Particle Gibbs.
    pub log_likelihood: F,
    /// Whether the move into this iteration was accepted.
    pub accepted: bool,
}

/// A hidden path kept alongside draw `index` (0-based, after burn-in).
#[derive(Clone, Debug, PartialEq)]
pub struct StoredTrajectory {
    pub index: usize,
    pub path: Trajectory,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorChain<F> {
    pub names: Vec<String>,
    /// Post-burn-in draws, in iteration order.
    pub draws: Vec<Draw<F>>,
    pub trajectories: Vec<StoredTrajectory>,
}

impl<F: Real> PosteriorChain<F> {
    pub fn new(names: Vec<String>) -> Self {
        Self {
            names,
            draws: Vec::new(),
            trajectories: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    /// Accepted moves over retained draws; zero for an empty chain.
    pub fn acceptance_rate(&self) -> f64 {
        if self.draws.is_empty() {
            return 0.0;
        }
        self.draws.iter().filter(|d| d.accepted).count() as f64 / self.draws.len() as f64
    }

    /// Natural-scale values of coordinate `k` across draws.
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d.theta.natural_values()[k].f64()).collect()
    }

    /// Header `iter,<coordinates>,loglik,accepted`, one row per draw.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["iter".to_string()];
        header.extend(self.names.iter().cloned());
        header.push("loglik".into());
        header.push("accepted".into());
        w.write_record(&header)?;
        for (i, d) in self.draws.iter().enumerate() {
            let mut row = vec![i.to_string()];
            row.extend(d.theta.natural_values().iter().map(|v| v.to_string()));
            row.push(d.log_likelihood.to_string());
            row.push(u8::from(d.accepted).to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a chain written by [`PosteriorChain::write_csv`]. `template`
    /// supplies the parameter layout and any fixed recovery rate; its
    /// coordinate names must match the header.
    pub fn read_csv<R: Read>(reader: R, template: &ParameterSet<F>, source: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let names = template.coordinate_names();
        let k = names.len();
        let load = |line: usize, message: String| Error::Load {
            path: source.to_string(),
            line,
            message,
        };
        let expected: Vec<String> = std::iter::once("iter".to_string())
            .chain(names.iter().cloned())
            .chain(["loglik".to_string(), "accepted".to_string()])
            .collect();
        if header != expected {
            return Err(load(1, format!("header {header:?} does not match {expected:?}")));
        }
        let mut chain = Self::new(names);
        for (i, record) in r.records().enumerate() {
            let line = i + 2;
            let record = record?;
            let parse = |j: usize| -> Result<f64> {
                record[j]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| load(line, format!("column {}: {e}", expected[j])))
            };
            let values: Vec<F> = (1..=k).map(|j| parse(j).map(F::of)).collect::<Result<_>>()?;
            let theta = template
                .with_natural_values(&values)
                .map_err(|e| load(line, e.to_string()))?;
            let accepted = match record[k + 2].trim() {
                "1" => true,
                "0" => false,
                other => return Err(load(line, format!("accepted flag {other:?} is not 0 or 1"))),
            };
            chain.draws.push(Draw {
                theta,
                log_likelihood: F::of(parse(k + 1)?),
                accepted,
            });
        }
        Ok(chain)
    }
}
