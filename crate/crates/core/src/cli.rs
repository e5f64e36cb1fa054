//! Command-line interface.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::io::summary::posterior_summary;
use crate::io::{
    predict_trajectories, preset, write_hidden_states_csv, write_simulation_csv, Algorithm, InitialValue,
    PredictOptions, Response, RunConfig, Scenario,
};
use crate::pmcmc::{
    particle_gibbs, pmmh_with, tune_proposal, McmcConfig, ParticleFilterLikelihood, PilotConfig, PosteriorChain,
    TunedKernel,
};
use crate::simulate::simulate_abm;
use crate::smc::{bootstrap_filter, exact_loglik_forward, EXACT_MAX_AGENTS};

/// Environment variable fixing the worker-thread count.
pub const THREADS_ENV: &str = "AGENTSIS_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "agentsis",
    version,
    about = "Agent-based SIS model: simulation, particle filtering and particle MCMC"
)]
pub struct Cli {
    #[command(flatten)]
    pub source: Source,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
#[group(multiple = false)]
pub struct Source {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Built-in configuration: fig2, sim1, sim2, sim3, sim4 or diamond.
    #[arg(long, global = true)]
    pub preset: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate data from `[truth]`; writes simulation.csv and hidden_states.csv.
    Simulate {
        /// Simulation seed (overrides io.data_seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (overrides io.output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the particle-filter log-likelihood at `[truth]`, and the exact value for small populations.
    Loglik {
        /// Filter seed (overrides sampler.seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Particle count (overrides sampler.particles).
        #[arg(long)]
        particles: Option<usize>,
        /// Case series CSV or `builtin:<name>` (overrides io.data).
        #[arg(long)]
        data: Option<String>,
    },
    /// Run PMMH or Particle Gibbs; writes chain.csv and trajectories.csv.
    Fit {
        /// Sampler (overrides sampler.algorithm).
        #[arg(long, value_enum)]
        algo: Option<Algorithm>,
        /// Sampler seed (overrides sampler.seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Particle count (overrides sampler.particles).
        #[arg(long)]
        particles: Option<usize>,
        /// Retained iterations (overrides sampler.iterations).
        #[arg(long)]
        iterations: Option<usize>,
        /// Discarded iterations (overrides sampler.burn_in).
        #[arg(long)]
        burn_in: Option<usize>,
        /// Case series CSV or `builtin:<name>` (overrides io.data).
        #[arg(long)]
        data: Option<String>,
        /// Output directory (overrides io.output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Posterior-predictive bands from a chain; writes predictive.csv.
    Predict {
        /// chain.csv written by `fit`.
        #[arg(long)]
        chain: PathBuf,
        /// Chain states to simulate forward (overrides sampler.predictive_draws).
        #[arg(long)]
        draws: Option<usize>,
        /// Prediction seed (overrides sampler.seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Band type (overrides io.response).
        #[arg(long, value_enum)]
        response: Option<Response>,
        /// Output directory (overrides io.output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Posterior means and 95% intervals from a chain; writes summary.csv.
    Summarize {
        /// chain.csv written by `fit`.
        #[arg(long)]
        chain: PathBuf,
        /// Output directory (overrides io.output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `argv`, runs the command and returns the process exit status:
/// 0 on success, 2 for usage and configuration errors, 1 otherwise.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return 2;
    }
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => 2,
                _ => 1,
            }
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .map_err(|_| Error::Config(format!("{THREADS_ENV}={value:?} is not a thread count")))?;
    // A pool already built in this process keeps its size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

fn load_config(source: &Source) -> Result<RunConfig> {
    match (&source.config, &source.preset) {
        (Some(path), _) => RunConfig::load(path),
        (None, Some(name)) => preset(name),
        (None, None) => Err(Error::Config("give --config or --preset".into())),
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn execute(cli: &Cli) -> Result<()> {
    let mut config = load_config(&cli.source)?;
    match &cli.command {
        Command::Simulate { seed, out } => {
            if let Some(s) = seed {
                config.io.data_seed = *s;
            }
            let scenario = config.scenario()?;
            let truth = scenario
                .truth
                .as_ref()
                .ok_or_else(|| Error::Config("simulate needs a [truth] section".into()))?;
            let sim = simulate_abm(
                truth,
                &scenario.pop,
                &scenario.net,
                config.model.steps,
                config.io.data_seed,
            )?;
            let dir = out.clone().unwrap_or_else(|| config.io.output_dir.clone());
            write_simulation_csv(&sim, create(&dir, "simulation.csv")?)?;
            write_hidden_states_csv(&sim, create(&dir, "hidden_states.csv")?)?;
            println!(
                "wrote {} days for {} agents to {}",
                sim.observations.len(),
                scenario.pop.len(),
                dir.display()
            );
        }
        Command::Loglik { seed, particles, data } => {
            if let Some(p) = particles {
                config.sampler.particles = *p;
            }
            if data.is_some() {
                config.io.data = data.clone();
            }
            let scenario = config.scenario()?;
            let truth = scenario
                .truth
                .as_ref()
                .ok_or_else(|| Error::Config("loglik needs a [truth] section".into()))?;
            let dataset = config.dataset(&scenario)?;
            let seed = seed.unwrap_or(config.sampler.seed);
            let pf = bootstrap_filter(
                truth,
                &scenario.pop,
                &scenario.net,
                dataset.observations(),
                config.sampler.particles,
                seed,
            )?;
            println!("bpf_loglik {}", pf.log_marginal_likelihood);
            if scenario.pop.len() <= EXACT_MAX_AGENTS {
                let exact = exact_loglik_forward(truth, &scenario.pop, &scenario.net, dataset.observations())?;
                println!("exact_loglik {exact}");
            }
        }
        Command::Fit {
            algo,
            seed,
            particles,
            iterations,
            burn_in,
            data,
            out,
        } => {
            if let Some(a) = algo {
                config.sampler.algorithm = *a;
            }
            if let Some(s) = seed {
                config.sampler.seed = *s;
            }
            if let Some(p) = particles {
                config.sampler.particles = *p;
            }
            if let Some(m) = iterations {
                config.sampler.iterations = *m;
            }
            if let Some(b) = burn_in {
                config.sampler.burn_in = *b;
            }
            if data.is_some() {
                config.io.data = data.clone();
            }
            let scenario = config.scenario()?;
            let dataset = config.dataset(&scenario)?;
            let fit = fit_chain(&config, &scenario, dataset.observations())?;
            if let Some(t) = &fit.tuned {
                eprintln!(
                    "tuned steps {:?}: pilot acceptance {:.3} after {} rounds{}",
                    t.kernel.steps(),
                    t.acceptance_rate,
                    t.rounds,
                    if t.converged { "" } else { " (outside target band)" }
                );
            }
            let dir = out.clone().unwrap_or_else(|| config.io.output_dir.clone());
            fit.chain.write_csv(create(&dir, "chain.csv")?)?;
            write_trajectories(&fit.chain, &scenario, create(&dir, "trajectories.csv")?)?;
            println!(
                "{} draws, acceptance rate {:.3}, written to {}",
                fit.chain.len(),
                fit.chain.acceptance_rate(),
                dir.display()
            );
        }
        Command::Predict {
            chain,
            draws,
            seed,
            response,
            out,
        } => {
            let scenario = config.scenario()?;
            let chain = read_chain(chain, &scenario)?;
            let first_day = match &config.io.data {
                Some(_) => config.dataset(&scenario)?.series.first_day,
                None => 0,
            };
            let groups: Vec<_> = scenario.groups.iter().chain(&scenario.blocks).cloned().collect();
            let options = PredictOptions {
                steps: config.model.steps,
                draws: draws.unwrap_or(config.sampler.predictive_draws),
                seed: seed.unwrap_or(config.sampler.seed),
                response: response.unwrap_or(config.io.response),
                first_day,
                groups: &groups,
            };
            if options.draws == 0 {
                return Err(Error::Config("--draws must be at least 1".into()));
            }
            let bands = predict_trajectories(&chain, &scenario.pop, &scenario.net, &options)?;
            let dir = out.clone().unwrap_or_else(|| config.io.output_dir.clone());
            bands.write_csv(create(&dir, "predictive.csv")?)?;
            println!("{} band rows written to {}", bands.rows.len(), dir.display());
        }
        Command::Summarize { chain, out } => {
            let scenario = config.scenario()?;
            let chain = read_chain(chain, &scenario)?;
            let summary = posterior_summary(&chain, &scenario.groups)?;
            let dir = out.clone().unwrap_or_else(|| config.io.output_dir.clone());
            summary.write_csv(create(&dir, "summary.csv")?)?;
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            writeln!(
                lock,
                "{} draws, acceptance rate {:.3}",
                summary.draws, summary.acceptance_rate
            )?;
            for r in &summary.rows {
                writeln!(
                    lock,
                    "{:<20} {:>10.4} ({:.4}, {:.4})",
                    r.quantity, r.mean, r.q025, r.q975
                )?;
            }
        }
    }
    Ok(())
}

fn read_chain(path: &Path, scenario: &Scenario) -> Result<PosteriorChain<f64>> {
    let file = File::open(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    PosteriorChain::read_csv(
        std::io::BufReader::new(file),
        &scenario.template,
        &path.display().to_string(),
    )
}

/// Header `draw,t,infected`, then one column per group and block.
fn write_trajectories<W: Write>(chain: &PosteriorChain<f64>, scenario: &Scenario, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let groups: Vec<_> = scenario.groups.iter().chain(&scenario.blocks).collect();
    let mut header = vec!["draw".to_string(), "t".to_string(), "infected".to_string()];
    header.extend(groups.iter().map(|g| format!("infected[{}]", g.name)));
    w.write_record(&header)?;
    for stored in &chain.trajectories {
        for (t, state) in stored.path.iter().enumerate() {
            let mut row = vec![
                stored.index.to_string(),
                t.to_string(),
                state.infected_count().to_string(),
            ];
            row.extend(groups.iter().map(|g| state.infected_among(&g.members).to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// A finished chain and, when tuning was requested, the pilot outcome.
pub struct FitOutput {
    pub chain: PosteriorChain<f64>,
    pub tuned: Option<TunedKernel>,
}

/// Runs the sampler configured in `[sampler]` on `observations`.
pub fn fit_chain(config: &RunConfig, scenario: &Scenario, observations: &[u64]) -> Result<FitOutput> {
    let s = &config.sampler;
    let mut mcmc = McmcConfig::new(s.iterations, s.burn_in, s.seed);
    mcmc.thinning = s.thinning;
    if s.init == InitialValue::Truth {
        mcmc.init = scenario.truth.clone();
    }
    match s.algorithm {
        Algorithm::Pmmh => {
            let estimator = ParticleFilterLikelihood::new(&scenario.pop, &scenario.net, observations, s.particles);
            let tuned = if s.tune {
                let mut pilot = PilotConfig::new(s.pilot_iterations, s.seed);
                pilot.init = mcmc.init.clone();
                Some(tune_proposal(
                    &estimator,
                    &scenario.priors,
                    &scenario.kernel,
                    &scenario.template,
                    &pilot,
                )?)
            } else {
                None
            };
            let kernel = tuned.as_ref().map_or(&scenario.kernel, |t| &t.kernel);
            let chain = pmmh_with(&estimator, &scenario.priors, kernel, &scenario.template, &mcmc)?;
            Ok(FitOutput { chain, tuned })
        }
        Algorithm::Pg => {
            if s.tune {
                return Err(Error::Config("sampler.tune applies to pmmh only".into()));
            }
            let chain = particle_gibbs(
                observations,
                &scenario.pop,
                &scenario.net,
                &scenario.priors,
                &scenario.kernel,
                &scenario.template,
                s.particles,
                &mcmc,
            )?;
            Ok(FitOutput { chain, tuned: None })
        }
    }
}
