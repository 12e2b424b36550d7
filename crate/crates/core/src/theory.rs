//! Finite-size numerical checks of the degree tail, binomial moment,
//! error-concentration, and error-variance results.

use std::f64::consts::E;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graphgen::{generate, GraphKind, GraphModel};
use crate::policies::Policy;
use crate::rng::{derive_seed, rng_from_seed, stream};
use crate::tomography::{error_terms, ObservableSet};

/// Rejection cap per trial for the conditional degree experiment.
pub const LEMMA1_MAX_ATTEMPTS: u64 = 1_000_000;

/// Tolerance of the nonnegativity and row-sum audits.
pub const AUDIT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailEstimate {
    /// Conditional frequency of `d_max ≥ N p e` given `g_01 = 1`.
    pub empirical: f64,
    /// `(e + 2e²/N) e^{−c_N}`.
    pub bound: f64,
    pub trials: usize,
}

/// `(e + 2e²/N) exp(−c)` with `c = N p − ln N`.
pub fn lemma1_bound(n_agents: usize, p: f64) -> f64 {
    let n = n_agents as f64;
    let c = n * p - n.ln();
    (E + 2.0 * E * E / n) * (-c).exp()
}

/// Maximal degree of one Erdős–Rényi draw conditioned on `g_01 = 1`.
///
/// The designated pair is drawn first and redrawn until it interacts;
/// since the pairs are independent, this is rejection sampling of whole
/// graphs without regenerating the pairs that do not affect acceptance.
fn conditional_max_degree(n: usize, p: f64, seed: u64) -> Result<usize> {
    let mut rng = rng_from_seed(seed);
    let mut attempts = 0u64;
    loop {
        attempts += 1;
        if rng.random::<f64>() < p {
            break;
        }
        if attempts >= LEMMA1_MAX_ATTEMPTS {
            return Err(Error::RetryBudgetExhausted { attempts });
        }
    }
    let mut degree = vec![1usize; n];
    degree[0] += 1;
    degree[1] += 1;
    for i in 0..n {
        for j in (i + 1)..n {
            if (i, j) != (0, 1) && rng.random::<f64>() < p {
                degree[i] += 1;
                degree[j] += 1;
            }
        }
    }
    Ok(degree.into_iter().max().unwrap_or(0))
}

/// Monte Carlo estimate of `P[d_max ≥ N p e | g_ij = 1]` next to its bound.
pub fn lemma1_tail(model: &GraphModel, trials: usize, seed: u64) -> Result<TailEstimate> {
    model.validate()?;
    if model.kind != GraphKind::ErdosRenyiSymmetric {
        return Err(Error::param("kind", "the degree tail is stated for symmetric graphs"));
    }
    if trials < 100 {
        return Err(Error::param("trials", "need at least 100 trials"));
    }
    if model.n_agents < 2 {
        return Err(Error::param("n_agents", "need a pair of agents"));
    }
    let (n, p) = (model.n_agents, model.p);
    let level = n as f64 * p * E;
    let hits = (0..trials as u64)
        .into_par_iter()
        .map(|t| conditional_max_degree(n, p, derive_seed(seed, stream::THEORY, t)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|&d| d as f64 >= level)
        .count();
    Ok(TailEstimate {
        empirical: hits as f64 / trials as f64,
        bound: lemma1_bound(n, p),
        trials,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentCheck {
    /// `E[1 / (1 + β)^m]` for `β ~ Binomial(n, p)`.
    pub exact: f64,
    /// `m / (n p)^m`.
    pub bound: f64,
}

/// Exact inverse binomial moment, with log-space binomial weights.
pub fn lemma2_moment(n: usize, p: f64, m: u32) -> Result<MomentCheck> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::param("p", format!("{p} not in (0, 1]")));
    }
    if !(1..=2).contains(&m) {
        return Err(Error::param("m", "must be 1 or 2"));
    }
    let bound = m as f64 / (n as f64 * p).powi(m as i32);
    if p == 1.0 {
        return Ok(MomentCheck {
            exact: 1.0 / ((n + 1) as f64).powi(m as i32),
            bound,
        });
    }
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let mut ln_choose = 0.0f64;
    let mut exact = 0.0;
    for k in 0..=n {
        if k > 0 {
            ln_choose += ((n - k + 1) as f64).ln() - (k as f64).ln();
        }
        let ln_w = ln_choose + k as f64 * lp + (n - k) as f64 * lq;
        exact += ln_w.exp() / ((k + 1) as f64).powi(m as i32);
    }
    Ok(MomentCheck { exact, bound })
}

/// Variance of `s = Σ_ℓ u_ℓ z_ℓ` for a random vector `u` independent of
/// identically distributed, uncorrelated `z_ℓ` with mean `z_mean` and
/// variance `z_var`: `σ_z² Σ_ℓ E[u_ℓ²] + z̄² V[Σ_ℓ u_ℓ]`.
///
/// Rows of `u_samples` are draws of `u`.
pub fn lemma3_variance(u_samples: &DMatrix<f64>, z_mean: f64, z_var: f64) -> Result<f64> {
    let draws = u_samples.nrows();
    if draws < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            available: draws,
        });
    }
    let second_moment: f64 = u_samples.iter().map(|u| u * u).sum::<f64>() / draws as f64;
    let sums: Vec<f64> = u_samples.row_iter().map(|r| r.sum()).collect();
    Ok(z_var * second_moment + z_mean * z_mean * sample_variance(&sums))
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
}

/// `C = 1 / (μ (2 − μ))²`, the squared bound on the row sums of `H`.
pub fn h_row_sum_bound_sq(mu: f64) -> f64 {
    (1.0 / (mu * (2.0 - mu))).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceConfig {
    pub n_agents: usize,
    pub p: f64,
    pub policy: Policy,
    pub mu: f64,
    pub xi: f64,
    pub runs: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceReport {
    /// Sample variance of `e_01` over fresh graphs.
    pub mc_variance: f64,
    /// Independence-approximation variance assembled from Monte Carlo
    /// moments.
    pub approx_variance: f64,
    /// `(N−K) E[a²] E[b²] C + (1 − μ)² / K²`.
    pub upper_bound: f64,
    pub n_runs: usize,
    /// `approx_variance / mc_variance` (NaN when both are zero).
    pub ratio: f64,
}

/// Moments gathered from one graph draw.
#[derive(Debug, Default, Clone)]
struct RunMoments {
    a_sq_sum: f64,
    a_count: f64,
    b_sum: f64,
    b_sq_sum: f64,
    b_count: f64,
    h_row_sq_sums: Vec<f64>,
    h_row_sums: Vec<f64>,
    f_sum: f64,
    f_count: f64,
    a_cross_row_sums: Vec<f64>,
    e01: f64,
}

fn run_moments(cfg: &VarianceConfig, omega: &ObservableSet, run: u64) -> Result<RunMoments> {
    let model = GraphModel::new(
        GraphKind::ErdosRenyiSymmetric,
        cfg.n_agents,
        cfg.p,
        derive_seed(cfg.seed, stream::GRAPH, run),
    )?;
    let graph = generate(&model)?;
    let a = cfg.policy.apply(&graph, cfg.mu)?;
    let a = a.matrix();
    let terms = error_terms(a, omega)?;
    let n = cfg.n_agents;
    let mut mom = RunMoments::default();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                mom.a_sq_sum += a[(i, j)].powi(2);
                mom.a_count += 1.0;
                let b = terms.b[(i, j)];
                mom.b_sum += b;
                mom.b_sq_sum += b * b;
                mom.b_count += 1.0;
            }
        }
    }
    for row in terms.h.row_iter() {
        mom.h_row_sq_sums.push(row.iter().map(|h| h * h).sum());
        mom.h_row_sums.push(row.sum());
    }
    mom.f_sum = terms.f.sum();
    mom.f_count = terms.f.len() as f64;
    mom.a_cross_row_sums = terms.a_cross.row_iter().map(|r| r.sum()).collect();
    mom.e01 = terms.e[(0, 1)];
    Ok(mom)
}

/// Compares the Monte Carlo variance of one error entry with its
/// independence approximation. The observed set is the first `K` agents
/// (the graph law is permutation invariant) and the tracked entry is
/// `e_01`.
pub fn approx_error_variance(cfg: &VarianceConfig) -> Result<VarianceReport> {
    if cfg.runs < 100 {
        return Err(Error::param("runs", "need at least 100 Monte Carlo runs"));
    }
    let n = cfg.n_agents;
    let k = (cfg.xi * n as f64).round() as usize;
    if k < 2 || k > n {
        return Err(Error::param("xi", format!("K = {k} not in [2, {n}]")));
    }
    if k == n {
        return Ok(VarianceReport {
            mc_variance: 0.0,
            approx_variance: 0.0,
            upper_bound: 0.0,
            n_runs: cfg.runs,
            ratio: f64::NAN,
        });
    }
    let omega = ObservableSet::new((0..k).collect(), n)?;
    let runs = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|r| run_moments(cfg, &omega, r))
        .collect::<Result<Vec<_>>>()?;

    let total = |f: fn(&RunMoments) -> f64| runs.iter().map(f).sum::<f64>();
    let a_sq_mean = total(|m| m.a_sq_sum) / total(|m| m.a_count);
    let b_count = total(|m| m.b_count);
    let b_mean = total(|m| m.b_sum) / b_count;
    let b_sq_mean = total(|m| m.b_sq_sum) / b_count;
    let b_var = (b_sq_mean - b_mean * b_mean).max(0.0);
    let h_rows: Vec<f64> = runs.iter().flat_map(|m| m.h_row_sq_sums.iter().copied()).collect();
    let h_sq_row_mean = h_rows.iter().sum::<f64>() / h_rows.len() as f64;
    let h_row_sums: Vec<f64> = runs.iter().flat_map(|m| m.h_row_sums.iter().copied()).collect();
    let h_row_var = sample_variance(&h_row_sums);
    let f_mean = total(|m| m.f_sum) / total(|m| m.f_count);
    let a_rows: Vec<f64> = runs.iter().flat_map(|m| m.a_cross_row_sums.iter().copied()).collect();
    let a_row_var = sample_variance(&a_rows);
    let e01: Vec<f64> = runs.iter().map(|m| m.e01).collect();

    let unobserved = (n - k) as f64;
    let approx_variance =
        unobserved * a_sq_mean * (b_var * h_sq_row_mean + b_mean * b_mean * h_row_var) + f_mean * f_mean * a_row_var;
    let upper_bound = unobserved * a_sq_mean * b_sq_mean * h_row_sum_bound_sq(cfg.mu)
        + (1.0 - cfg.mu).powi(2) / (k * k) as f64;
    let mc_variance = sample_variance(&e01);
    Ok(VarianceReport {
        mc_variance,
        approx_variance,
        upper_bound,
        n_runs: cfg.runs,
        ratio: approx_variance / mc_variance,
    })
}

/// Entrywise nonnegativity and row sums at most `1 − μ`.
pub fn theorem1_audit(e: &DMatrix<f64>, mu: f64) -> bool {
    e.iter().all(|&v| v >= -AUDIT_TOL) && e.row_iter().all(|r| r.sum() <= (1.0 - mu) + AUDIT_TOL)
}

/// Largest number of entries above `eps` in any row.
pub fn max_row_exceedances(e: &DMatrix<f64>, eps: f64) -> usize {
    e.row_iter()
        .map(|r| r.iter().filter(|&&v| v > eps).count())
        .max()
        .unwrap_or(0)
}

/// Per-row count of entries above `eps` at most `(1 − μ) / eps`.
pub fn corollary1_audit(e: &DMatrix<f64>, mu: f64, eps: f64) -> bool {
    max_row_exceedances(e, eps) as f64 <= (1.0 - mu) / eps
}
