//! Configuration-driven trial harness: graph → weights → correlations →
//! estimate → clustering → metrics, repeated over seeded trials.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classify::{classify_edges, edge_metrics};
use crate::correlation::{default_burn_in, empirical_correlations, exact_correlations};
use crate::diffusion::{simulate, InputKind};
use crate::error::{Error, Result};
use crate::graphgen::{generate, GraphKind, GraphModel};
use crate::policies::Policy;
use crate::rng::{derive_seed, stream};
use crate::tomography::{diagnostics, scaled_fraction_ratio, select_observable, ObservableMode, TomographyResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub kind: GraphKind,
    pub n_agents: usize,
    /// Edge probability; `2 ln N / N` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            kind: GraphKind::ErdosRenyiSymmetric,
            n_agents: 100,
            p: None,
        }
    }
}

impl GraphConfig {
    pub fn p(&self) -> f64 {
        self.p.unwrap_or_else(|| {
            let n = self.n_agents as f64;
            (2.0 * n.ln() / n).min(1.0)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Mode {
    #[default]
    ExactCorrelations,
    Empirical {
        n_samples: usize,
        /// Defaults to `ceil(20 / μ)`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        burn_in: Option<usize>,
        #[serde(default)]
        ridge: f64,
        #[serde(default)]
        input: InputKind,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: usize,
    pub mu: f64,
    pub xi: f64,
    pub observable: ObservableMode,
    pub graph: GraphConfig,
    pub policy: Policy,
    pub mode: Mode,
    /// Output directory; nothing is written when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outputs: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            trials: 10,
            mu: 0.1,
            xi: 0.2,
            observable: ObservableMode::RandomSubset,
            graph: GraphConfig::default(),
            policy: Policy::Laplacian { lambda: 0.5 },
            mode: Mode::ExactCorrelations,
            outputs: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::param("trials", "must be at least 1"));
        }
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return Err(Error::param("mu", format!("{} not in (0, 1)", self.mu)));
        }
        if !(self.xi > 0.0 && self.xi <= 1.0) {
            return Err(Error::param("xi", format!("{} not in (0, 1]", self.xi)));
        }
        self.model(0).validate()?;
        let k = (self.xi * self.graph.n_agents as f64).round() as usize;
        if k < 2 {
            return Err(Error::param("xi", format!("K = {k} observed agents; need at least 2")));
        }
        if let Mode::Empirical { n_samples, ridge, .. } = self.mode {
            if n_samples < 2 {
                return Err(Error::param("n_samples", "need at least 2 samples"));
            }
            if !(ridge >= 0.0) {
                return Err(Error::param("ridge", "must be nonnegative"));
            }
        }
        Ok(())
    }

    pub fn model(&self, seed: u64) -> GraphModel {
        GraphModel {
            kind: self.graph.kind,
            n_agents: self.graph.n_agents,
            p: self.graph.p(),
            seed,
        }
    }

    /// SHA-256 of the canonical TOML rendering, excluding the output path.
    pub fn hash(&self) -> String {
        let canonical = Self {
            outputs: None,
            ..self.clone()
        };
        hex::encode(Sha256::digest(canonical.to_toml().as_bytes()))
    }

    /// Reference levels `(ε, τ)` for the diagnostics: `τ` is the policy's
    /// class level, or `(1 − μ)/e` when it has none, and `ε = τ / 2`.
    pub fn thresholds(&self) -> (f64, f64) {
        let tau = self
            .policy
            .class_tau(self.mu)
            .unwrap_or((1.0 - self.mu) / std::f64::consts::E);
        (tau / 2.0, tau)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialSummary {
    pub trial: usize,
    pub graph_seed: u64,
    pub k: usize,
    pub error_rate: f64,
    pub false_detections: usize,
    pub misses: usize,
    /// Mean of `N p e_ij` over observed off-diagonal pairs.
    pub mean_scaled_error: f64,
    pub f0_at_eps: f64,
    pub f1bar_at_tau: f64,
    /// `(1 − F₀(ε)) / p`.
    pub ratio_prop1: f64,
    pub split_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub config_hash: String,
    /// The configuration without its output path.
    pub config: ExperimentConfig,
    pub epsilon: f64,
    pub tau: f64,
    pub mean_error_rate: f64,
    pub mean_false: f64,
    pub mean_miss: f64,
    pub mean_scaled_error: f64,
    pub mean_f0_at_eps: f64,
    pub mean_f1bar_at_tau: f64,
    pub median_ratio_prop1: f64,
    pub perfect_trials: usize,
    pub trials: Vec<TrialSummary>,
}

/// Runs one trial and returns its summary together with the tomography
/// result and labels (for scatter export).
pub fn run_trial(cfg: &ExperimentConfig, trial: usize) -> Result<(TrialSummary, TomographyResult, DMatrix<u8>)> {
    let t = trial as u64;
    let graph_seed = derive_seed(cfg.seed, stream::GRAPH, t);
    let stage = |stage: &'static str| {
        move |e: Error| Error::Trial {
            trial,
            seed: graph_seed,
            stage,
            source: Box::new(e),
        }
    };
    let graph = generate(&cfg.model(graph_seed)).map_err(stage("graph"))?;
    let a = cfg.policy.apply(&graph, cfg.mu).map_err(stage("policy"))?;
    let omega = select_observable(
        graph.n_agents(),
        cfg.xi,
        cfg.observable,
        derive_seed(cfg.seed, stream::OBSERVABLE, t),
    )
    .map_err(stage("observable"))?;
    let (corr, ridge) = match cfg.mode {
        Mode::ExactCorrelations => (exact_correlations(&a).map_err(stage("correlation"))?, 0.0),
        Mode::Empirical {
            n_samples,
            burn_in,
            ridge,
            input,
        } => {
            let burn_in = burn_in.unwrap_or_else(|| default_burn_in(cfg.mu));
            let trace = simulate(&a, n_samples + burn_in, input, derive_seed(cfg.seed, stream::INPUT, t))
                .map_err(stage("simulate"))?;
            let obs = trace.restrict(omega.indices()).map_err(stage("simulate"))?;
            (empirical_correlations(&obs, burn_in).map_err(stage("correlation"))?, ridge)
        }
    };
    let observed = match corr.r0.nrows() == omega.len() {
        true => corr,
        false => corr.restrict(omega.indices()).map_err(stage("correlation"))?,
    };
    let result = TomographyResult::from_observed(omega, &observed, ridge, graph.scale())
        .and_then(|r| r.with_truth(&a, &graph))
        .map_err(stage("estimate"))?;
    let (labels, outcome) = classify_edges(&result).map_err(stage("classify"))?;
    let g_obs = result.g_obs.as_ref().expect("truth attached");
    let metrics = edge_metrics(&labels, g_obs).map_err(stage("metrics"))?;
    let (eps, tau) = cfg.thresholds();
    let diag = diagnostics(&result.a_hat_obs, g_obs, result.scale, &[eps, tau]).map_err(stage("diagnostics"))?;
    let k = result.k();
    let err = result.error.as_ref().expect("truth attached");
    let off_sum: f64 = (0..k)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .filter(|(i, j)| i != j)
        .map(|(i, j)| err[(i, j)])
        .sum();
    let summary = TrialSummary {
        trial,
        graph_seed,
        k,
        error_rate: metrics.error_rate,
        false_detections: metrics.false_detections,
        misses: metrics.misses,
        mean_scaled_error: result.scale * off_sum / (k * (k - 1)) as f64,
        f0_at_eps: diag.f0_at(eps),
        f1bar_at_tau: diag.f1_bar_at(tau),
        ratio_prop1: scaled_fraction_ratio(&diag, eps, graph.p()),
        split_value: outcome.split_value,
    };
    Ok((summary, result, labels))
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn create_file(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

/// Runs every trial (in parallel), writes per-trial scatter CSVs and
/// `summary.json` into `cfg.outputs` when set, and returns the summary.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary> {
    cfg.validate()?;
    let hash = cfg.hash();
    if let Some(dir) = &cfg.outputs {
        fs::create_dir_all(dir)?;
    }
    let mut trials = (0..cfg.trials)
        .into_par_iter()
        .map(|t| -> Result<TrialSummary> {
            let (summary, result, labels) = run_trial(cfg, t)?;
            if let Some(dir) = &cfg.outputs {
                let mut out = create_file(&dir.join(format!("trial_{t:04}_scatter.csv")))?;
                writeln!(out, "# config_hash={hash}")?;
                result.write_scatter_csv(&labels, &mut out)?;
                out.flush()?;
            }
            Ok(summary)
        })
        .collect::<Result<Vec<_>>>()?;
    trials.sort_by_key(|t| t.trial);

    let (epsilon, tau) = cfg.thresholds();
    let ratios: Vec<f64> = trials.iter().map(|t| t.ratio_prop1).collect();
    let summary = ExperimentSummary {
        config_hash: hash,
        config: ExperimentConfig {
            outputs: None,
            ..cfg.clone()
        },
        epsilon,
        tau,
        mean_error_rate: mean(trials.iter().map(|t| t.error_rate)),
        mean_false: mean(trials.iter().map(|t| t.false_detections as f64)),
        mean_miss: mean(trials.iter().map(|t| t.misses as f64)),
        mean_scaled_error: mean(trials.iter().map(|t| t.mean_scaled_error)),
        mean_f0_at_eps: mean(trials.iter().map(|t| t.f0_at_eps)),
        mean_f1bar_at_tau: mean(trials.iter().map(|t| t.f1bar_at_tau)),
        median_ratio_prop1: median(&ratios),
        perfect_trials: trials.iter().filter(|t| t.error_rate == 0.0).count(),
        trials,
    };
    if let Some(dir) = &cfg.outputs {
        let mut out = create_file(&dir.join("summary.json"))?;
        serde_json::to_writer_pretty(&mut out, &summary)?;
        writeln!(out)?;
        out.flush()?;
    }
    Ok(summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Mu,
    Xi,
    P,
    NAgents,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mu" => Ok(SweepAxis::Mu),
            "xi" => Ok(SweepAxis::Xi),
            "p" => Ok(SweepAxis::P),
            "n_agents" | "n" => Ok(SweepAxis::NAgents),
            other => Err(Error::Config(format!("unknown sweep axis `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub mean_error_rate: f64,
    pub mean_scaled_error: f64,
    pub f0_at_eps: f64,
    pub f1bar_at_tau: f64,
    pub ratio_prop1: f64,
}

/// Sets one axis of the configuration. An `n_agents` sweep keeps `p` at
/// `2 ln N / N` unless the base configuration fixes it.
pub fn with_axis(cfg: &ExperimentConfig, axis: SweepAxis, value: f64) -> Result<ExperimentConfig> {
    let mut c = cfg.clone();
    match axis {
        SweepAxis::Mu => c.mu = value,
        SweepAxis::Xi => c.xi = value,
        SweepAxis::P => c.graph.p = Some(value),
        SweepAxis::NAgents => {
            if !(value >= 1.0 && value.fract() == 0.0) {
                return Err(Error::param("n_agents", format!("{value} is not a positive integer")));
            }
            c.graph.n_agents = value as usize;
        }
    }
    c.validate()?;
    Ok(c)
}

/// Repeats the experiment along one axis. Per-value outputs go to
/// `<outputs>/<axis>_<index>/`, and the table to `<outputs>/sweep.csv`.
pub fn run_sweep(cfg: &ExperimentConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::param("values", "sweep needs at least one value"));
    }
    let configs = values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut c = with_axis(cfg, axis, v)?;
            c.outputs = cfg.outputs.as_ref().map(|d| d.join(format!("{}_{i:02}", axis_name(axis))));
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = configs
        .iter()
        .zip(values)
        .map(|(c, &v)| {
            let s = run_experiment(c)?;
            Ok(SweepRow {
                axis_value: v,
                mean_error_rate: s.mean_error_rate,
                mean_scaled_error: s.mean_scaled_error,
                f0_at_eps: s.mean_f0_at_eps,
                f1bar_at_tau: s.mean_f1bar_at_tau,
                ratio_prop1: s.median_ratio_prop1,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(dir) = &cfg.outputs {
        let mut out = create_file(&dir.join("sweep.csv"))?;
        writeln!(out, "# config_hash={} axis={}", cfg.hash(), axis_name(axis))?;
        write_sweep_csv(&rows, &mut out)?;
        out.flush()?;
    }
    Ok(rows)
}

fn axis_name(axis: SweepAxis) -> &'static str {
    match axis {
        SweepAxis::Mu => "mu",
        SweepAxis::Xi => "xi",
        SweepAxis::P => "p",
        SweepAxis::NAgents => "n_agents",
    }
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> Result<()> {
    writeln!(out, "axis_value,mean_error_rate,mean_scaled_error,f0_at_eps,f1bar_at_tau,ratio_prop1")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.axis_value, r.mean_error_rate, r.mean_scaled_error, r.f0_at_eps, r.f1bar_at_tau, r.ratio_prop1
        )?;
    }
    Ok(())
}
