use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use difftomo::correlation::write_matrix_csv;
use difftomo::experiment::{run_trial, write_sweep_csv};
use difftomo::rng::{derive_seed, stream};
use difftomo::{
    generate, run_experiment, run_sweep, run_verify, simulate, ExperimentConfig, GraphKind, InputKind, Mode,
    Policy, Result, SweepAxis, VerifyScale,
};

#[derive(Parser)]
#[command(name = "difftomo", version, about = "Topology inference for partially observed diffusion networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one interaction graph and write its edge list.
    Generate {
        #[command(flatten)]
        opts: ConfigArgs,
        #[arg(long, default_value = "edges.csv")]
        out: PathBuf,
    },
    /// Simulate the diffusion recursion and write the output trace.
    Simulate {
        #[command(flatten)]
        opts: ConfigArgs,
        #[arg(long, default_value_t = 1000)]
        n_samples: usize,
        #[arg(long, default_value = "trace.csv")]
        out: PathBuf,
    },
    /// Run one tomography trial and write its scatter data and correlations.
    Tomography {
        #[command(flatten)]
        opts: ConfigArgs,
        #[arg(long, default_value_t = 0)]
        trial: usize,
        #[arg(long, default_value = "tomography")]
        out_dir: PathBuf,
    },
    /// Run the configured number of trials.
    Experiment {
        #[command(flatten)]
        opts: ConfigArgs,
    },
    /// Repeat the experiment along one parameter axis.
    Sweep {
        #[command(flatten)]
        opts: ConfigArgs,
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated axis values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Run the numerical verification suite.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Reduced Monte Carlo sizes.
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value = "verification.json")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyName {
    Laplacian,
    Metropolis,
    UniformAveraging,
    Counterexample,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeName {
    Exact,
    Empirical,
}

/// Flags mirror the config keys and override them.
#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration; defaults reproduce the flagship experiment.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long, value_parser = parse_kind)]
    kind: Option<GraphKind>,
    #[arg(long)]
    n_agents: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, value_enum)]
    policy: Option<PolicyName>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<ModeName>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    ridge: Option<f64>,
    #[arg(long)]
    outputs: Option<PathBuf>,
}

fn parse_kind(s: &str) -> std::result::Result<GraphKind, String> {
    match s {
        "erdos_renyi_symmetric" | "er" => Ok(GraphKind::ErdosRenyiSymmetric),
        "binomial_directed" | "directed" => Ok(GraphKind::BinomialDirected),
        other => Err(format!("unknown graph kind `{other}`")),
    }
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = self.mu {
            cfg.mu = v;
        }
        if let Some(v) = self.xi {
            cfg.xi = v;
        }
        if let Some(v) = self.kind {
            cfg.graph.kind = v;
        }
        if let Some(v) = self.n_agents {
            cfg.graph.n_agents = v;
        }
        if let Some(v) = self.p {
            cfg.graph.p = Some(v);
        }
        if let Some(name) = self.policy {
            cfg.policy = match name {
                PolicyName::Laplacian => Policy::Laplacian {
                    lambda: self.lambda.unwrap_or(0.5),
                },
                PolicyName::Metropolis => Policy::Metropolis,
                PolicyName::UniformAveraging => Policy::UniformAveraging,
                PolicyName::Counterexample => Policy::Counterexample {
                    epsilon: self.epsilon.unwrap_or(0.01),
                },
            };
        } else if let (Policy::Laplacian { lambda }, Some(v)) = (&mut cfg.policy, self.lambda) {
            *lambda = v;
        }
        match self.mode {
            Some(ModeName::Exact) => cfg.mode = Mode::ExactCorrelations,
            Some(ModeName::Empirical) if !matches!(cfg.mode, Mode::Empirical { .. }) => {
                cfg.mode = Mode::Empirical {
                    n_samples: 20_000,
                    burn_in: None,
                    ridge: 0.0,
                    input: InputKind::StandardNormal,
                }
            }
            _ => {}
        }
        if let Mode::Empirical {
            n_samples,
            burn_in,
            ridge,
            ..
        } = &mut cfg.mode
        {
            if let Some(v) = self.samples {
                *n_samples = v;
            }
            if self.burn_in.is_some() {
                *burn_in = self.burn_in;
            }
            if let Some(v) = self.ridge {
                *ridge = v;
            }
        }
        if self.outputs.is_some() {
            cfg.outputs = self.outputs.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn create(path: &Path, hash: &str) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "# config_hash={hash}")?;
    Ok(out)
}

enum Outcome {
    Ok,
    VerificationFailed,
}

fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Generate { opts, out } => {
            let cfg = opts.resolve()?;
            let graph = generate(&cfg.model(derive_seed(cfg.seed, stream::GRAPH, 0)))?;
            let mut w = create(&out, &cfg.hash())?;
            graph.write_edge_list(&mut w)?;
            w.flush()?;
            println!(
                "agents={} max_degree={} connected={} -> {}",
                graph.n_agents(),
                graph.max_degree(),
                graph.is_connected(),
                out.display()
            );
        }
        Command::Simulate { opts, n_samples, out } => {
            let cfg = opts.resolve()?;
            let graph = generate(&cfg.model(derive_seed(cfg.seed, stream::GRAPH, 0)))?;
            let a = cfg.policy.apply(&graph, cfg.mu)?;
            let trace = simulate(&a, n_samples, InputKind::StandardNormal, derive_seed(cfg.seed, stream::INPUT, 0))?;
            let mut w = create(&out, &cfg.hash())?;
            trace.write_csv(&mut w)?;
            w.flush()?;
            println!("{} samples x {} agents -> {}", n_samples, graph.n_agents(), out.display());
        }
        Command::Tomography { opts, trial, out_dir } => {
            let cfg = opts.resolve()?;
            let hash = cfg.hash();
            let (summary, result, labels) = run_trial(&cfg, trial)?;
            let mut w = create(&out_dir.join("scatter.csv"), &hash)?;
            result.write_scatter_csv(&labels, &mut w)?;
            w.flush()?;
            let mut w = create(&out_dir.join("a_hat_obs.csv"), &hash)?;
            write_matrix_csv(&result.a_hat_obs, &mut w)?;
            w.flush()?;
            let json = serde_json::json!({"config_hash": hash, "omega": result.omega.indices(), "trial": summary});
            fs::write(out_dir.join("trial.json"), serde_json::to_string_pretty(&json)? + "\n")?;
            println!(
                "K={} error_rate={} false={} miss={}",
                summary.k, summary.error_rate, summary.false_detections, summary.misses
            );
        }
        Command::Experiment { opts } => {
            let cfg = opts.resolve()?;
            let s = run_experiment(&cfg)?;
            println!(
                "trials={} mean_error_rate={} mean_false={} mean_miss={} perfect={}",
                s.trials.len(),
                s.mean_error_rate,
                s.mean_false,
                s.mean_miss,
                s.perfect_trials
            );
        }
        Command::Sweep { opts, axis, values } => {
            let cfg = opts.resolve()?;
            let rows = run_sweep(&cfg, axis, &values)?;
            write_sweep_csv(&rows, std::io::stdout().lock())?;
        }
        Command::Verify { seed, quick, out } => {
            let scale = if quick { VerifyScale::Quick } else { VerifyScale::Full };
            let report = run_verify(seed, scale)?;
            report.write_json(&out)?;
            for c in &report.checks {
                println!("{} {} observed={} bound={}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.observed, c.bound);
            }
            if !report.pass {
                return Ok(Outcome::VerificationFailed);
            }
        }
    }
    Ok(Outcome::Ok)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::VerificationFailed) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
