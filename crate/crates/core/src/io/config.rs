//! Run configuration: a sectioned TOML file (`[model]`, `[truth]`,
//! `[priors]`, `[sampler]`, `[io]`). `docs/example.toml` lists every key.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::preset::{builtin_series, BUILTIN_PREFIX};
use crate::io::series::{load_case_series, CaseSeries};
use crate::model::{AgentPopulation, ParameterSet, Recovery};
use crate::network::Network;
use crate::pmcmc::{Prior, PriorSpec, ProposalKernel, RhoPrior};
use crate::rng::{stream, Domain};
use crate::simulate::{simulate_abm, CovariatePreset, SimulationOutput};

fn config_err(message: impl Into<String>) -> Error {
    Error::Config(message.into())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    /// Data-generating parameters, used by `simulate`, `loglik` and when no data file is given.
    #[serde(default)]
    pub truth: Option<TruthConfig>,
    #[serde(default)]
    pub priors: PriorsConfig,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub io: IoConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n_agents: usize,
    /// Number of transitions `T`; the series has `T + 1` days.
    pub steps: usize,
    pub covariates: CovariateConfig,
    #[serde(default)]
    pub network: NetworkConfig,
    /// Fixed recovery probability; omit to estimate `beta_gamma`.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub population_seed: u64,
    /// Labels for the distinct covariate rows, in ascending order of the rows.
    #[serde(default)]
    pub group_names: Option<Vec<String>>,
    /// Labels for the network blocks.
    #[serde(default)]
    pub block_names: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CovariateConfig {
    /// Intercept plus one `N(0, 1)` covariate.
    Normal,
    /// Intercept plus one `Bernoulli(p)` indicator.
    Bernoulli { p: f64 },
    /// Intercept plus an indicator equal to 1 for exactly `ones` agents, placed by seeded shuffle.
    Count { ones: usize },
    /// Headed CSV, one row per agent, covariates without the intercept.
    File { path: PathBuf },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NetworkConfig {
    #[default]
    Full,
    /// Complete blocks of consecutive agents with these sizes.
    Blocks { sizes: Vec<usize> },
    /// Eight-neighbor grid, row-major.
    Grid8 {
        rows: usize,
        cols: usize,
        #[serde(default)]
        wrap: bool,
    },
    /// Whitespace-separated edge list of 0-based agent indices.
    Edges { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthConfig {
    pub beta_alpha: Vec<f64>,
    pub beta_lambda: Vec<f64>,
    #[serde(default)]
    pub beta_gamma: Option<Vec<f64>>,
    pub rho: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorBase {
    /// `N(0, 3^2)` intercepts, sign-truncated slopes, `N(logit 0.8, 1)` on `logit(rho)`.
    #[default]
    Knowledge,
    /// `N(0, 3^2)` on every coordinate including `logit(rho)`.
    Diffuse,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorsConfig {
    #[serde(default)]
    pub base: PriorBase,
    /// Replaces every coefficient prior when present.
    #[serde(default)]
    pub coefficients: Option<Vec<PriorEntry>>,
    #[serde(default)]
    pub rho: Option<RhoEntry>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorEntry {
    Normal { mean: f64, sd: f64 },
    TruncatedPositive { mean: f64, sd: f64 },
    TruncatedNegative { mean: f64, sd: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum RhoEntry {
    Beta { a: f64, b: f64 },
    LogitNormal { mean: f64, sd: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    #[default]
    Pmmh,
    Pg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    #[serde(default)]
    pub algorithm: Algorithm,
    #[serde(default = "defaults::particles")]
    pub particles: usize,
    #[serde(default = "defaults::iterations")]
    pub iterations: usize,
    #[serde(default = "defaults::burn_in")]
    pub burn_in: usize,
    #[serde(default = "defaults::thinning")]
    pub thinning: usize,
    /// Random-walk standard deviation for every coordinate.
    #[serde(default = "defaults::step")]
    pub step: f64,
    /// Per-coordinate steps; overrides `step`.
    #[serde(default)]
    pub steps: Option<Vec<f64>>,
    #[serde(default = "defaults::yes")]
    pub joint: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub init: InitialValue,
    /// Run pilot chains to bring acceptance into 15-20% before the fit.
    #[serde(default)]
    pub tune: bool,
    #[serde(default = "defaults::pilot_iterations")]
    pub pilot_iterations: usize,
    #[serde(default = "defaults::predictive_draws")]
    pub predictive_draws: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Pmmh,
            particles: defaults::particles(),
            iterations: defaults::iterations(),
            burn_in: defaults::burn_in(),
            thinning: defaults::thinning(),
            step: defaults::step(),
            steps: None,
            joint: true,
            seed: 0,
            init: InitialValue::Prior,
            tune: false,
            pilot_iterations: defaults::pilot_iterations(),
            predictive_draws: defaults::predictive_draws(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialValue {
    /// A draw from the prior.
    #[default]
    Prior,
    /// The `[truth]` parameters.
    Truth,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Response {
    /// Predictive bands of the number currently infected.
    #[default]
    Prevalence,
    /// Predictive bands of the number ever infected.
    Cumulative,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoConfig {
    /// Case-series CSV, or `builtin:diamond_princess`. Without it the data
    /// are simulated from `[truth]` with `data_seed`.
    #[serde(default)]
    pub data: Option<String>,
    #[serde(default = "defaults::yes")]
    pub interpolate: bool,
    #[serde(default)]
    pub data_seed: u64,
    #[serde(default)]
    pub response: Response,
    #[serde(default = "defaults::output_dir")]
    pub output_dir: PathBuf,
}

impl Default for IoConfig {
    fn default() -> Self {
        Self {
            data: None,
            interpolate: true,
            data_seed: 0,
            response: Response::Prevalence,
            output_dir: defaults::output_dir(),
        }
    }
}

mod defaults {
    use std::path::PathBuf;

    pub fn particles() -> usize {
        100
    }
    pub fn iterations() -> usize {
        10_000
    }
    pub fn burn_in() -> usize {
        10_000
    }
    pub fn thinning() -> usize {
        10
    }
    pub fn step() -> f64 {
        0.1
    }
    pub fn yes() -> bool {
        true
    }
    pub fn pilot_iterations() -> usize {
        1000
    }
    pub fn predictive_draws() -> usize {
        200
    }
    pub fn output_dir() -> PathBuf {
        PathBuf::from("out")
    }
}

/// A named set of agents for grouped outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentGroup {
    pub name: String,
    pub members: Vec<usize>,
    /// Shared covariate row, for covariate groups.
    pub covariates: Option<Vec<f64>>,
}

/// Everything a run needs, built from a [`RunConfig`].
#[derive(Clone, Debug)]
pub struct Scenario {
    pub pop: AgentPopulation<f64>,
    pub net: Network,
    /// Parameter layout: the truth when given, else zeros with the configured recovery.
    pub template: ParameterSet<f64>,
    pub truth: Option<ParameterSet<f64>>,
    pub priors: PriorSpec,
    pub kernel: ProposalKernel,
    /// Agents sharing a covariate row: built for binary covariates, or when
    /// `model.group_names` is given, and only with at most 16 distinct rows.
    pub groups: Vec<AgentGroup>,
    pub blocks: Vec<AgentGroup>,
}

/// Observed series for a run, and the simulation behind it when synthetic.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub series: CaseSeries,
    pub simulated: Option<SimulationOutput>,
}

impl Dataset {
    pub fn observations(&self) -> &[u64] {
        &self.series.counts
    }
}

/// Largest number of distinct covariate rows reported as groups.
const MAX_GROUPS: usize = 16;

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    /// Loads a file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        if let Some(dir) = path.parent() {
            config.resolve_paths(dir);
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    fn resolve_paths(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        if let CovariateConfig::File { path } = &mut self.model.covariates {
            fix(path);
        }
        if let NetworkConfig::Edges { path } = &mut self.model.network {
            fix(path);
        }
        if let Some(data) = &mut self.io.data {
            if !data.starts_with("builtin:") && Path::new(data).is_relative() {
                *data = dir.join(&*data).display().to_string();
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        if m.n_agents == 0 || m.steps == 0 {
            return Err(config_err("model.n_agents and model.steps must be positive"));
        }
        if let Some(g) = m.gamma {
            if !(g > 0.0 && g <= 1.0) {
                return Err(config_err(format!("model.gamma = {g} outside (0, 1]")));
            }
        }
        let s = &self.sampler;
        let min_particles = if s.algorithm == Algorithm::Pmmh { 2 } else { 1 };
        if s.particles < min_particles {
            return Err(config_err(format!(
                "sampler.particles must be at least {min_particles}"
            )));
        }
        if s.iterations == 0 {
            return Err(config_err("sampler.iterations must be at least 1"));
        }
        if s.tune && s.pilot_iterations < 500 {
            return Err(config_err("sampler.pilot_iterations must be at least 500"));
        }
        if s.init == InitialValue::Truth && self.truth.is_none() {
            return Err(config_err("sampler.init = \"truth\" needs a [truth] section"));
        }
        if let Some(t) = &self.truth {
            if t.beta_gamma.is_some() == m.gamma.is_some() {
                return Err(config_err("give exactly one of model.gamma and truth.beta_gamma"));
            }
        }
        Ok(())
    }

    /// Builds population, network, priors and kernel.
    pub fn scenario(&self) -> Result<Scenario> {
        self.validate()?;
        let m = &self.model;
        let pop = self.population()?;
        let net = self.network()?;
        if pop.len() != m.n_agents || net.len() != m.n_agents {
            return Err(config_err(format!(
                "model.n_agents = {} but population has {} agents and network {}",
                m.n_agents,
                pop.len(),
                net.len()
            )));
        }
        let dim = pop.dim();
        let truth = match &self.truth {
            Some(t) => {
                let recovery = match (&t.beta_gamma, m.gamma) {
                    (Some(b), None) => Recovery::Covariate(b.clone()),
                    (None, Some(g)) => Recovery::Fixed(g),
                    _ => unreachable!("validated"),
                };
                let theta = ParameterSet::new(t.beta_alpha.clone(), t.beta_lambda.clone(), recovery, t.rho)
                    .map_err(|e| config_err(format!("truth: {e}")))?;
                if theta.dim() != dim {
                    return Err(config_err(format!(
                        "truth has dimension {} but covariates have {dim}",
                        theta.dim()
                    )));
                }
                Some(theta)
            }
            None => None,
        };
        let template = match &truth {
            Some(t) => t.clone(),
            None => {
                let recovery = match m.gamma {
                    Some(g) => Recovery::Fixed(g),
                    None => Recovery::Covariate(vec![0.0; dim]),
                };
                ParameterSet::new(vec![0.0; dim], vec![0.0; dim], recovery, 0.5)?
            }
        };
        let priors = self.priors(&template)?;
        let kernel = match &self.sampler.steps {
            Some(steps) => ProposalKernel::new(steps.clone(), self.sampler.joint),
            None => ProposalKernel::new(vec![self.sampler.step; template.n_coordinates()], self.sampler.joint),
        }
        .map_err(|e| config_err(format!("sampler: {e}")))?;
        if kernel.len() != template.n_coordinates() {
            return Err(config_err(format!(
                "sampler.steps has {} entries for {} coordinates",
                kernel.len(),
                template.n_coordinates()
            )));
        }
        let discrete = matches!(
            m.covariates,
            CovariateConfig::Bernoulli { .. } | CovariateConfig::Count { .. }
        );
        let groups = if discrete || m.group_names.is_some() {
            covariate_groups(&pop, m.group_names.as_deref())?
        } else {
            Vec::new()
        };
        let blocks = match net.blocks() {
            Some(blocks) => {
                let names = m
                    .block_names
                    .clone()
                    .unwrap_or_else(|| (0..blocks.len()).map(|b| format!("block{b}")).collect());
                if names.len() != blocks.len() {
                    return Err(config_err(format!(
                        "{} block names for {} blocks",
                        names.len(),
                        blocks.len()
                    )));
                }
                names
                    .into_iter()
                    .zip(blocks)
                    .map(|(name, members)| AgentGroup {
                        name,
                        members: members.clone(),
                        covariates: None,
                    })
                    .collect()
            }
            None => Vec::new(),
        };
        Ok(Scenario {
            pop,
            net,
            template,
            truth,
            priors,
            kernel,
            groups,
            blocks,
        })
    }

    /// Loads `io.data`, or simulates from `[truth]` with `io.data_seed`.
    /// The series must have `steps + 1` days.
    pub fn dataset(&self, scenario: &Scenario) -> Result<Dataset> {
        let steps = self.model.steps;
        let dataset = match &self.io.data {
            Some(data) => {
                let series = match data.strip_prefix(BUILTIN_PREFIX) {
                    Some(name) => builtin_series(name, self.io.interpolate)?,
                    None => load_case_series(Path::new(data), self.io.interpolate)?,
                };
                Dataset {
                    series,
                    simulated: None,
                }
            }
            None => {
                let truth = scenario
                    .truth
                    .as_ref()
                    .ok_or_else(|| config_err("no io.data given and no [truth] to simulate from"))?;
                let sim = simulate_abm(truth, &scenario.pop, &scenario.net, steps, self.io.data_seed)?;
                Dataset {
                    series: CaseSeries::from_counts(0, sim.observations.clone()),
                    simulated: Some(sim),
                }
            }
        };
        if dataset.series.len() != steps + 1 {
            return Err(config_err(format!(
                "data have {} days but model.steps = {steps} needs {}",
                dataset.series.len(),
                steps + 1
            )));
        }
        Ok(dataset)
    }

    fn population(&self) -> Result<AgentPopulation<f64>> {
        let m = &self.model;
        match &m.covariates {
            CovariateConfig::Normal => CovariatePreset::StandardNormal.generate(m.n_agents, m.population_seed),
            CovariateConfig::Bernoulli { p } => CovariatePreset::Bernoulli(*p).generate(m.n_agents, m.population_seed),
            CovariateConfig::Count { ones } => {
                if *ones > m.n_agents {
                    return Err(config_err(format!(
                        "{ones} flagged agents exceed n_agents = {}",
                        m.n_agents
                    )));
                }
                let mut z: Vec<f64> = (0..m.n_agents).map(|k| if k < *ones { 1.0 } else { 0.0 }).collect();
                z.shuffle(&mut stream(m.population_seed, Domain::Population, 1, 0));
                AgentPopulation::with_intercept(&z)
            }
            CovariateConfig::File { path } => read_covariates(path),
        }
    }

    fn network(&self) -> Result<Network> {
        let n = self.model.n_agents;
        match &self.model.network {
            NetworkConfig::Full => Network::fully_connected(n),
            NetworkConfig::Blocks { sizes } => {
                if sizes.iter().sum::<usize>() != n {
                    return Err(config_err(format!(
                        "block sizes {sizes:?} do not sum to n_agents = {n}"
                    )));
                }
                let labels: Vec<usize> = sizes
                    .iter()
                    .enumerate()
                    .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
                    .collect();
                Network::block_network(&labels)
            }
            NetworkConfig::Grid8 { rows, cols, wrap } => Network::grid8_for(n, *rows, *cols, *wrap),
            NetworkConfig::Edges { path } => {
                let file = std::fs::File::open(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
                Network::read_edge_list(std::io::BufReader::new(file), n, &path.display().to_string())
            }
        }
    }

    fn priors(&self, template: &ParameterSet<f64>) -> Result<PriorSpec> {
        let p = &self.priors;
        let free = template.beta_gamma().is_some();
        let base = match p.base {
            PriorBase::Knowledge => PriorSpec::knowledge_based(template.dim(), free),
            PriorBase::Diffuse => PriorSpec::diffuse(template.n_coefficients()),
        };
        let coefficients = match &p.coefficients {
            Some(entries) => entries
                .iter()
                .map(|e| match *e {
                    PriorEntry::Normal { mean, sd } => Prior::Normal { mean, sd },
                    PriorEntry::TruncatedPositive { mean, sd } => Prior::TruncatedNormalPositive { mean, sd },
                    PriorEntry::TruncatedNegative { mean, sd } => Prior::TruncatedNormalNegative { mean, sd },
                })
                .collect(),
            None => base.coefficients().to_vec(),
        };
        let rho = match p.rho {
            Some(RhoEntry::Beta { a, b }) => RhoPrior::Beta { a, b },
            Some(RhoEntry::LogitNormal { mean, sd }) => RhoPrior::NormalOnLogit { mean, sd },
            None => base.rho(),
        };
        let spec = PriorSpec::new(coefficients, rho).map_err(|e| config_err(format!("priors: {e}")))?;
        spec.check_layout(template)
            .map_err(|e| config_err(format!("priors: {e}")))?;
        Ok(spec)
    }
}

fn read_covariates(path: &Path) -> Result<AgentPopulation<f64>> {
    let source = path.display().to_string();
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| config_err(format!("{source}: {e}")))?;
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let mut row = vec![1.0];
        for field in record.iter() {
            row.push(field.parse::<f64>().map_err(|_| Error::Load {
                path: source.clone(),
                line,
                message: format!("covariate {field:?} is not a number"),
            })?);
        }
        rows.push(row);
    }
    AgentPopulation::new(rows)
}

/// Agents grouped by identical covariate rows, rows in ascending order.
fn covariate_groups(pop: &AgentPopulation<f64>, names: Option<&[String]>) -> Result<Vec<AgentGroup>> {
    let mut distinct: Vec<Vec<f64>> = Vec::new();
    for row in pop.rows() {
        if !distinct.iter().any(|d| d.as_slice() == row) {
            distinct.push(row.to_vec());
            if distinct.len() > MAX_GROUPS {
                return Ok(Vec::new());
            }
        }
    }
    distinct.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    if let Some(names) = names {
        if names.len() != distinct.len() {
            return Err(config_err(format!(
                "{} group names for {} covariate groups",
                names.len(),
                distinct.len()
            )));
        }
    }
    Ok(distinct
        .into_iter()
        .enumerate()
        .map(|(g, row)| AgentGroup {
            name: names.map_or_else(|| format!("z{g}"), |n| n[g].clone()),
            members: (0..pop.len()).filter(|&k| pop.row(k) == row.as_slice()).collect(),
            covariates: Some(row),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[model]
n_agents = 10
steps = 5
gamma = 0.1
covariates = { kind = "bernoulli", p = 0.5 }

[truth]
beta_alpha = [-1.0, 0.0]
beta_lambda = [-1.0, 2.0]
rho = 0.8
"#;

    #[test]
    fn minimal_config_defaults() {
        let c = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.sampler.particles, 100);
        assert_eq!(c.sampler.step, 0.1);
        assert_eq!(c.io.response, Response::Prevalence);
        assert_eq!(c.sampler.init, InitialValue::Prior);
        let s = c.scenario().unwrap();
        assert_eq!(s.pop.len(), 10);
        assert_eq!(s.kernel.len(), 5);
        assert_eq!(s.groups.len(), 2);
        assert_eq!(s.groups[0].covariates.as_deref(), Some(&[1.0, 0.0][..]));
        assert_eq!(
            s.priors.coefficients()[3],
            Prior::TruncatedNormalPositive { mean: 0.0, sd: 3.0 }
        );
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn invalid_configs_are_config_errors() {
        let bad = [
            MINIMAL.replace("steps = 5", "steps = 5\nunknown = 1"),
            MINIMAL.replace("gamma = 0.1", "gamma = 1.5"),
            MINIMAL.replace("rho = 0.8", "rho = 0.8\nbeta_gamma = [0.0, 0.0]"),
            format!("{MINIMAL}\n[sampler]\nparticles = 1\n"),
            format!("{MINIMAL}\n[sampler]\nsteps = [0.1, 0.1]\n"),
            format!("{MINIMAL}\n[priors]\nrho = {{ family = \"beta\", a = 0.0, b = 1.0 }}\n"),
            MINIMAL.replace("[truth]", "network = { kind = \"blocks\", sizes = [3, 3] }\n[truth]"),
            format!(
                "{}\n[sampler]\ninit = \"truth\"\n",
                &MINIMAL[..MINIMAL.find("[truth]").unwrap()]
            ),
        ];
        for text in &bad {
            let result = RunConfig::from_toml(text).and_then(|c| c.scenario().map(|_| ()));
            assert!(matches!(result, Err(Error::Config(_))), "{text}\n{result:?}");
        }
    }

    #[test]
    fn count_covariate_and_blocks() {
        let text = MINIMAL
            .replace(
                r#"covariates = { kind = "bernoulli", p = 0.5 }"#,
                r#"covariates = { kind = "count", ones = 4 }"#,
            )
            .replace(
                "[truth]",
                "network = { kind = \"blocks\", sizes = [3, 7] }\nblock_names = [\"crew\", \"guests\"]\n[truth]",
            );
        let s = RunConfig::from_toml(&text).unwrap().scenario().unwrap();
        assert_eq!(s.pop.rows().filter(|r| r[1] == 1.0).count(), 4);
        assert_eq!(s.blocks[0].name, "crew");
        assert_eq!(s.blocks[1].members.len(), 7);
        assert_eq!(s.net.degree(0), 2);
    }
}
