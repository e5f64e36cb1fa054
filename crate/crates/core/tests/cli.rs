use std::path::Path;
use std::process::{Command, Output};

use agentsis::io::RunConfig;

const BIN: &str = env!("CARGO_BIN_EXE_agentsis");

const TOY: &str = r#"
[model]
n_agents = 3
steps = 4
gamma = 0.3
covariates = { kind = "normal" }

[truth]
beta_alpha = [0.0, 0.0]
beta_lambda = [0.5, 1.0]
rho = 0.7

[sampler]
particles = 40
iterations = 150
burn_in = 50
thinning = 25

[io]
data_seed = 1
"#;

fn agentsis(dir: &Path, args: &[&str], threads: &str) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(dir)
        .env("AGENTSIS_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn toy_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("toy.toml"), TOY).unwrap();
    dir
}

#[test]
fn example_config_parses_and_builds() {
    let config = RunConfig::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/example.toml")).unwrap();
    let scenario = config.scenario().unwrap();
    assert_eq!(scenario.pop.len(), 100);
    assert_eq!(scenario.kernel.len(), 5);
    assert_eq!(config.dataset(&scenario).unwrap().observations().len(), 31);
}

#[test]
fn loglik_prints_filter_and_exact_values() {
    let dir = toy_dir();
    let out = agentsis(
        dir.path(),
        &["--config", "toy.toml", "loglik", "--particles", "2000"],
        "1",
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let value = |key: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(key))
            .unwrap_or_else(|| panic!("{key} missing in {text}"))
            .trim()
            .parse()
            .unwrap()
    };
    let (bpf, exact) = (value("bpf_loglik"), value("exact_loglik"));
    assert!(exact.is_finite() && (bpf - exact).abs() < 0.2, "{bpf} vs {exact}");
}

#[test]
fn repeated_invocations_write_identical_files() {
    let dir = toy_dir();
    let run = |args: &[&str], threads: &str| {
        let out = agentsis(dir.path(), args, threads);
        assert!(
            out.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    };
    for (out, threads) in [("a", "1"), ("b", "1"), ("c", "2")] {
        run(
            &["simulate", "--config", "toy.toml", "--seed", "3", "--out", out],
            threads,
        );
        run(
            &[
                "--config", "toy.toml", "fit", "--algo", "pmmh", "--seed", "7", "--out", out,
            ],
            threads,
        );
        let chain = format!("{out}/chain.csv");
        run(
            &[
                "--config", "toy.toml", "predict", "--chain", &chain, "--draws", "25", "--out", out,
            ],
            threads,
        );
        run(
            &["--config", "toy.toml", "summarize", "--chain", &chain, "--out", out],
            threads,
        );
    }
    for file in [
        "simulation.csv",
        "hidden_states.csv",
        "chain.csv",
        "trajectories.csv",
        "predictive.csv",
        "summary.csv",
    ] {
        let read = |d: &str| std::fs::read(dir.path().join(d).join(file)).unwrap();
        assert_eq!(read("a"), read("b"), "{file} differs between repeated runs");
        assert_eq!(read("a"), read("c"), "{file} differs across thread counts");
    }
    let chain = std::fs::read_to_string(dir.path().join("a/chain.csv")).unwrap();
    assert!(chain.starts_with("iter,beta_a0,beta_a1,beta_l0,beta_l1,rho,loglik,accepted\n"));
    assert_eq!(chain.lines().count(), 151);
}

#[test]
fn particle_gibbs_runs_from_the_cli() {
    let dir = toy_dir();
    let out = agentsis(
        dir.path(),
        &[
            "--config",
            "toy.toml",
            "fit",
            "--algo",
            "pg",
            "--particles",
            "10",
            "--iterations",
            "40",
            "--burn-in",
            "10",
        ],
        "1",
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let chain = std::fs::read_to_string(dir.path().join("out/chain.csv")).unwrap();
    assert_eq!(chain.lines().count(), 41);
}

#[test]
fn fig2_preset_simulates_its_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let out = agentsis(dir.path(), &["simulate", "--preset", "fig2", "--out", "."], "1");
    assert!(out.status.success());
    let sim = std::fs::read_to_string(dir.path().join("simulation.csv")).unwrap();
    assert_eq!(sim.lines().count(), 32);
    let raster = std::fs::read_to_string(dir.path().join("hidden_states.csv")).unwrap();
    assert_eq!(raster.lines().next().unwrap().split(',').count(), 31);
}

#[test]
fn errors_map_to_exit_codes() {
    let dir = toy_dir();
    let code = |args: &[&str]| agentsis(dir.path(), args, "1").status.code();
    assert_eq!(code(&["simulate"]), Some(2));
    assert_eq!(code(&["--preset", "nope", "simulate"]), Some(2));
    assert_eq!(code(&["--config", "toy.toml", "bogus"]), Some(2));
    assert_eq!(code(&["--config", "missing.toml", "simulate"]), Some(2));
    assert_eq!(code(&["--config", "toy.toml", "fit", "--particles", "1"]), Some(2));
    std::fs::write(dir.path().join("bad.csv"), "iter,x\n").unwrap();
    assert_eq!(
        code(&["--config", "toy.toml", "summarize", "--chain", "bad.csv"]),
        Some(1)
    );
    std::fs::write(dir.path().join("cases.csv"), "day,count\n0,1\n1,-2\n").unwrap();
    assert_eq!(
        code(&["--config", "toy.toml", "loglik", "--data", "cases.csv"]),
        Some(1)
    );
    let out = agentsis(
        dir.path(),
        &["--config", "toy.toml", "fit", "--iterations", "5", "--burn-in", "0"],
        "1",
    );
    assert!(out.status.success());
    assert_eq!(
        code(&[
            "--config",
            "toy.toml",
            "predict",
            "--chain",
            "out/chain.csv",
            "--draws",
            "0"
        ]),
        Some(2)
    );
}
