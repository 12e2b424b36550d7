//! Verification suite: runs the theory audits and collects them into a
//! JSON report of named checks.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::correlation::{
    default_max_iters, exact_correlations, lyapunov_residual, r0_closed_form_symmetric, r0_lyapunov,
    DEFAULT_LYAPUNOV_TOL,
};
use crate::error::Result;
use crate::experiment::{run_experiment, ExperimentConfig, GraphConfig};
use crate::graphgen::{generate, GraphKind, GraphModel, InteractionGraph};
use crate::permutation::Permutation;
use crate::policies::{check_p2, Policy};
use crate::rng::{derive_seed, rng_from_seed, stream};
use crate::theory::{
    approx_error_variance, corollary1_audit, lemma1_tail, lemma2_moment, max_row_exceedances, theorem1_audit,
    VarianceConfig,
};
use crate::tomography::{error_terms, estimate_a_obs, select_observable, ObservableMode};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub configuration: Value,
    pub observed: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub seed: u64,
    pub scale: VerifyScale,
    pub pass: bool,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Monte Carlo sizes of the suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyScale {
    /// Sizes of the acceptance criteria.
    Full,
    /// Reduced counts for smoke runs.
    Quick,
}

impl VerifyScale {
    fn pick<T>(self, full: T, quick: T) -> T {
        match self {
            VerifyScale::Full => full,
            VerifyScale::Quick => quick,
        }
    }
}

/// `2 ln N / N`, i.e. `c_N = ln N`.
pub fn flagship_p(n: usize) -> f64 {
    let n = n as f64;
    (2.0 * n.ln() / n).min(1.0)
}

/// Worst-case quantities over a batch of error-matrix instances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorAudit {
    pub instances: usize,
    pub theorem1_pass: usize,
    pub corollary1_pass: usize,
    /// `max(−min e_ij, max row sum − (1 − μ))`.
    pub worst_theorem1_margin: f64,
    /// Largest `count · ε / (1 − μ)` over rows and both thresholds.
    pub worst_exceedance_ratio: f64,
    /// `max |Â − A_Ω − E|` with `Â` from exact correlations.
    pub max_consistency_gap: f64,
    /// `max |R_lyap − R_closed|`.
    pub max_lyapunov_gap: f64,
    pub max_lyapunov_residual: f64,
}

pub const COROLLARY_EPSILONS: [f64; 2] = [0.01, 0.1];

struct Instance {
    t1: bool,
    c1: bool,
    t1_margin: f64,
    exceed: f64,
    consistency: f64,
    lyap_gap: f64,
    lyap_res: f64,
}

fn audit_instance(policy: Policy, n: usize, mu: f64, xi: f64, seed: u64, t: u64) -> Result<Instance> {
    let model = GraphModel::new(
        GraphKind::ErdosRenyiSymmetric,
        n,
        flagship_p(n),
        derive_seed(seed, stream::GRAPH, t),
    )?;
    let graph = generate(&model)?;
    let a = policy.apply(&graph, mu)?;
    let omega = select_observable(n, xi, ObservableMode::RandomSubset, derive_seed(seed, stream::OBSERVABLE, t))?;
    let terms = error_terms(a.matrix(), &omega)?;
    let e = &terms.e;

    let min_entry = e.min();
    let max_row = e.row_iter().map(|r| r.sum()).fold(f64::NEG_INFINITY, f64::max);
    let exceed = COROLLARY_EPSILONS
        .iter()
        .map(|&eps| max_row_exceedances(e, eps) as f64 * eps / (1.0 - mu))
        .fold(0.0, f64::max);

    let corr = exact_correlations(&a)?.restrict(omega.indices())?;
    let a_hat = estimate_a_obs(&corr.r0, &corr.r1, 0.0)?;
    let idx = omega.indices();
    let a_obs = a.matrix().select_rows(idx).select_columns(idx);
    let consistency = (a_hat - a_obs - e).amax();

    let closed = r0_closed_form_symmetric(a.matrix(), mu)?;
    let lyap = r0_lyapunov(
        a.matrix(),
        mu,
        DEFAULT_LYAPUNOV_TOL,
        default_max_iters(mu, DEFAULT_LYAPUNOV_TOL),
    )?;
    Ok(Instance {
        t1: theorem1_audit(e, mu),
        c1: COROLLARY_EPSILONS.iter().all(|&eps| corollary1_audit(e, mu, eps)),
        t1_margin: (-min_entry).max(max_row - (1.0 - mu)),
        exceed,
        consistency,
        lyap_gap: (&lyap - &closed).amax(),
        lyap_res: lyapunov_residual(a.matrix(), &lyap, mu),
    })
}

/// Error-matrix structure, closed-form consistency, and the Lyapunov
/// cross-check on `instances` seeded Erdős–Rényi graphs with `p = 2 ln N / N`.
pub fn audit_error_structure(
    policy: Policy,
    n: usize,
    mu: f64,
    xi: f64,
    instances: usize,
    seed: u64,
) -> Result<ErrorAudit> {
    let rows = (0..instances as u64)
        .into_par_iter()
        .map(|t| audit_instance(policy, n, mu, xi, seed, t))
        .collect::<Result<Vec<_>>>()?;
    let max = |f: fn(&Instance) -> f64| rows.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    Ok(ErrorAudit {
        instances,
        theorem1_pass: rows.iter().filter(|r| r.t1).count(),
        corollary1_pass: rows.iter().filter(|r| r.c1).count(),
        worst_theorem1_margin: max(|r| r.t1_margin),
        worst_exceedance_ratio: max(|r| r.exceed),
        max_consistency_gap: max(|r| r.consistency),
        max_lyapunov_gap: max(|r| r.lyap_gap),
        max_lyapunov_residual: max(|r| r.lyap_res),
    })
}

/// Equivariance over random renumberings: returns how many of
/// `graphs × perms` cases pass.
pub fn p2_pass_count(policy: Policy, n: usize, mu: f64, graphs: usize, perms: usize, seed: u64) -> Result<usize> {
    let mut passed = 0;
    for g in 0..graphs as u64 {
        let model = GraphModel::new(
            GraphKind::ErdosRenyiSymmetric,
            n,
            flagship_p(n),
            derive_seed(seed, stream::GRAPH, g),
        )?;
        let graph = generate(&model)?;
        let mut rng = rng_from_seed(derive_seed(seed, stream::PERMUTATION, g));
        for _ in 0..perms {
            let perm = Permutation::random(n, &mut rng);
            passed += usize::from(check_p2(policy, mu, &graph, &perm)?);
        }
    }
    Ok(passed)
}

/// Three agents in a chain `0 - 1 - 2`.
pub fn counterexample_graph() -> InteractionGraph {
    InteractionGraph::from_rows(3, &[1, 1, 0, 1, 1, 1, 0, 1, 1], 1.0).expect("valid graph")
}

/// Exchange of the first two agents of [`counterexample_graph`].
pub fn counterexample_swap() -> Permutation {
    Permutation::swap(3, 0, 1).expect("valid swap")
}

/// Per-N medians of the scaled non-edge exceedance `(1 − F₀(ε)) / p` for
/// Metropolis weights and exact correlations.
pub fn prop1_medians(ns: &[usize], xi: f64, trials: usize, seed: u64) -> Result<Vec<f64>> {
    ns.iter()
        .map(|&n| {
            let cfg = ExperimentConfig {
                seed,
                trials,
                xi,
                graph: GraphConfig {
                    n_agents: n,
                    ..Default::default()
                },
                policy: Policy::Metropolis,
                ..Default::default()
            };
            Ok(run_experiment(&cfg)?.median_ratio_prop1)
        })
        .collect()
}

fn check(name: impl Into<String>, configuration: Value, observed: f64, bound: f64, pass: bool) -> Check {
    Check {
        name: name.into(),
        configuration,
        observed,
        bound,
        pass,
    }
}

/// Runs the full suite.
pub fn run_verify(seed: u64, scale: VerifyScale) -> Result<VerificationReport> {
    let mu = 0.1;
    let mut checks = Vec::new();

    let instances = scale.pick(100, 10);
    let ns: &[usize] = scale.pick(&[20, 50, 100, 200], &[20, 50]);
    for (name, policy) in [("laplacian", Policy::Laplacian { lambda: 0.5 }), ("metropolis", Policy::Metropolis)] {
        for &n in ns {
            let audit = audit_error_structure(policy, n, mu, 0.2, instances, seed)?;
            let cfg = json!({"policy": name, "n_agents": n, "p": flagship_p(n), "mu": mu, "xi": 0.2, "instances": instances});
            checks.push(check(
                format!("error_concentration/{name}/n{n}"),
                cfg.clone(),
                audit.worst_theorem1_margin,
                1e-10,
                audit.theorem1_pass == instances,
            ));
            checks.push(check(
                format!("error_exceedances/{name}/n{n}"),
                json!({"epsilons": COROLLARY_EPSILONS, "base": cfg}),
                audit.worst_exceedance_ratio,
                1.0,
                audit.corollary1_pass == instances,
            ));
            checks.push(check(
                format!("closed_form_consistency/{name}/n{n}"),
                cfg.clone(),
                audit.max_consistency_gap,
                1e-8,
                audit.max_consistency_gap <= 1e-8,
            ));
            checks.push(check(
                format!("lyapunov_agreement/{name}/n{n}"),
                cfg.clone(),
                audit.max_lyapunov_gap,
                1e-9,
                audit.max_lyapunov_gap <= 1e-9,
            ));
            checks.push(check(
                format!("lyapunov_residual/{name}/n{n}"),
                cfg,
                audit.max_lyapunov_residual,
                1e-11,
                audit.max_lyapunov_residual <= 1e-11,
            ));
        }
    }

    let tail_trials = scale.pick(10_000, 1_000);
    for n in [100usize, 400] {
        let model = GraphModel::new(GraphKind::ErdosRenyiSymmetric, n, flagship_p(n), 0)?;
        let r = lemma1_tail(&model, tail_trials, derive_seed(seed, stream::THEORY, n as u64))?;
        checks.push(check(
            format!("max_degree_tail/n{n}"),
            json!({"n_agents": n, "p": model.p, "trials": tail_trials}),
            r.empirical,
            r.bound,
            r.empirical <= r.bound,
        ));
    }

    let mut worst = 0.0f64;
    let mut grid_pass = true;
    for n in [10usize, 50, 200] {
        for p in [0.05, 0.1, 0.5] {
            for m in 1..=2 {
                let r = lemma2_moment(n, p, m)?;
                worst = worst.max(r.exact / r.bound);
                grid_pass &= r.exact <= r.bound;
            }
        }
    }
    checks.push(check(
        "binomial_inverse_moment",
        json!({"n": [10, 50, 200], "p": [0.05, 0.1, 0.5], "m": [1, 2]}),
        worst,
        1.0,
        grid_pass,
    ));

    let runs = scale.pick(1000, 100);
    let var_ns: &[usize] = scale.pick(&[50, 100, 200], &[50]);
    for (name, policy) in [("laplacian", Policy::Laplacian { lambda: 0.5 }), ("metropolis", Policy::Metropolis)] {
        for xi in [0.2, 0.5] {
            for &n in var_ns {
                let r = approx_error_variance(&VarianceConfig {
                    n_agents: n,
                    p: flagship_p(n),
                    policy,
                    mu,
                    xi,
                    runs,
                    seed: derive_seed(seed, stream::THEORY, 1000 + n as u64),
                })?;
                checks.push(check(
                    format!("variance_approximation/{name}/xi{xi}/n{n}"),
                    json!({"policy": name, "n_agents": n, "xi": xi, "mu": mu, "runs": runs,
                           "mc_variance": r.mc_variance, "approx_variance": r.approx_variance,
                           "upper_bound": r.upper_bound, "accepted_ratio": [0.2, 5.0]}),
                    r.ratio,
                    5.0,
                    (0.2..=5.0).contains(&r.ratio),
                ));
            }
        }
    }

    let prop_ns: &[usize] = scale.pick(&[100, 200, 400], &[100, 200]);
    let prop_trials = scale.pick(20, 5);
    let medians = prop1_medians(prop_ns, 0.2, prop_trials, seed)?;
    let rise = medians.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    checks.push(check(
        "nonedge_exceedance_trend",
        json!({"policy": "metropolis", "n_agents": prop_ns, "xi": 0.2, "trials": prop_trials, "medians": medians}),
        rise,
        0.0,
        rise <= 0.0,
    ));

    let (graphs, perms) = scale.pick((20, 50), (5, 10));
    for (name, policy) in [("laplacian", Policy::Laplacian { lambda: 0.5 }), ("metropolis", Policy::Metropolis)] {
        let passed = p2_pass_count(policy, 30, mu, graphs, perms, seed)?;
        checks.push(check(
            format!("permutation_equivariance/{name}"),
            json!({"n_agents": 30, "graphs": graphs, "permutations": perms}),
            passed as f64,
            (graphs * perms) as f64,
            passed == graphs * perms,
        ));
    }
    let swap = counterexample_swap();
    let equivariant = check_p2(Policy::Counterexample { epsilon: 0.1 }, 0.5, &counterexample_graph(), &swap)?;
    checks.push(check(
        "permutation_equivariance/counterexample_breaks",
        json!({"epsilon": 0.1, "mu": 0.5, "swap": [1, 2]}),
        f64::from(u8::from(equivariant)),
        0.0,
        !equivariant,
    ));

    let pass = checks.iter().all(|c| c.pass);
    Ok(VerificationReport {
        seed,
        scale,
        pass,
        checks,
    })
}
