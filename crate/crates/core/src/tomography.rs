//! Partial-observation estimate of the combination matrix, its error
//! decomposition, and the conditional empirical distributions of the scaled
//! estimated entries.
//!
//! Observable sets hold 0-based agent indices in increasing order; the
//! complement is taken in increasing order as well.

use std::io::Write;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::correlation::{CorrelationPair, SYMMETRY_TOL};
use crate::diffusion::validate_index_set;
use crate::error::{Error, Result};
use crate::graphgen::InteractionGraph;
use crate::linalg::{solve_left, solve_right, symmetrize};
use crate::policies::{max_asymmetry, CombinationMatrix};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableMode {
    #[default]
    RandomSubset,
    FirstK,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableSet {
    indices: Vec<usize>,
    n_agents: usize,
    xi: f64,
}

impl ObservableSet {
    /// Explicit set; `indices` must be sorted, distinct, in `0..n_agents`,
    /// and contain at least two agents.
    pub fn new(indices: Vec<usize>, n_agents: usize) -> Result<Self> {
        validate_index_set(&indices, n_agents)?;
        if indices.len() < 2 {
            return Err(Error::param("omega", "at least two observed agents are required"));
        }
        let xi = indices.len() as f64 / n_agents as f64;
        Ok(Self {
            indices,
            n_agents,
            xi,
        })
    }

    pub fn full(n_agents: usize) -> Result<Self> {
        Self::new((0..n_agents).collect(), n_agents)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// Unobserved agents in increasing order.
    pub fn complement(&self) -> Vec<usize> {
        let mut observed = vec![false; self.n_agents];
        for &i in &self.indices {
            observed[i] = true;
        }
        (0..self.n_agents).filter(|&i| !observed[i]).collect()
    }
}

/// Picks `K = round(ξ N)` agents.
pub fn select_observable(n_agents: usize, xi: f64, mode: ObservableMode, seed: u64) -> Result<ObservableSet> {
    if !(xi > 0.0 && xi <= 1.0) {
        return Err(Error::param("xi", format!("{xi} not in (0, 1]")));
    }
    let k = (xi * n_agents as f64).round() as usize;
    if k < 2 || k > n_agents {
        return Err(Error::param(
            "xi",
            format!("K = round({xi} * {n_agents}) = {k} not in [2, {n_agents}]"),
        ));
    }
    let mut indices: Vec<usize> = match mode {
        ObservableMode::FirstK => (0..k).collect(),
        ObservableMode::RandomSubset => {
            let mut rng = rng_from_seed(seed);
            sample(&mut rng, n_agents, k).into_vec()
        }
    };
    indices.sort_unstable();
    Ok(ObservableSet {
        indices,
        n_agents,
        xi,
    })
}

/// `R₁ (R₀ + ridge·I)⁻¹` for observed-block correlations.
pub fn estimate_a_obs(r0_obs: &DMatrix<f64>, r1_obs: &DMatrix<f64>, ridge: f64) -> Result<DMatrix<f64>> {
    let k = r0_obs.nrows();
    if !r0_obs.is_square() || r1_obs.shape() != r0_obs.shape() {
        return Err(Error::DimensionMismatch {
            expected: format!("two {k}x{k} matrices"),
            actual: format!("{:?} and {:?}", r0_obs.shape(), r1_obs.shape()),
        });
    }
    if k < 2 {
        return Err(Error::param("omega", "at least two observed agents are required"));
    }
    if !(ridge >= 0.0) {
        return Err(Error::param("ridge", "must be nonnegative"));
    }
    let mut r0 = symmetrize(r0_obs);
    for i in 0..k {
        r0[(i, i)] += ridge;
    }
    solve_right(r1_obs, &r0).map_err(|e| match e {
        Error::Singular(why) => Error::Singular(format!(
            "observed zero-lag correlation is numerically singular ({why}); \
             collect more samples or use a positive ridge"
        )),
        other => other,
    })
}

/// The blocks that make up the partial-observation error of a symmetric
/// combination matrix: `B = A²`, `H = (I − B_{Ω′})⁻¹`, `F = H B_{Ω′Ω}`,
/// and `E = A_{ΩΩ′} F`.
#[derive(Debug, Clone)]
pub struct ErrorTerms {
    /// `A_{ΩΩ′}`, `K × (N−K)`.
    pub a_cross: DMatrix<f64>,
    /// `B = A²`, `N × N`.
    pub b: DMatrix<f64>,
    /// `H`, `(N−K) × (N−K)`. Formed explicitly and checked by residual.
    pub h: DMatrix<f64>,
    /// `F`, `(N−K) × K`.
    pub f: DMatrix<f64>,
    /// `E`, `K × K`.
    pub e: DMatrix<f64>,
}

fn require_symmetric(a: &DMatrix<f64>) -> Result<()> {
    let asym = max_asymmetry(a);
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric {
            max_asymmetry: asym,
        });
    }
    Ok(())
}

fn check_omega(a: &DMatrix<f64>, omega: &ObservableSet) -> Result<()> {
    if !a.is_square() || a.nrows() != omega.n_agents() {
        return Err(Error::DimensionMismatch {
            expected: format!("{0}x{0}", omega.n_agents()),
            actual: format!("{}x{}", a.nrows(), a.ncols()),
        });
    }
    Ok(())
}

/// `F = (I − B_{Ω′})⁻¹ B_{Ω′Ω}` via a linear solve.
pub fn f_matrix(a: &DMatrix<f64>, omega: &ObservableSet) -> Result<DMatrix<f64>> {
    check_omega(a, omega)?;
    require_symmetric(a)?;
    let comp = omega.complement();
    let b = a * a;
    let m = comp.len();
    let b_comp = b.select_rows(&comp).select_columns(&comp);
    let lhs = DMatrix::identity(m, m) - b_comp;
    solve_left(&lhs, &b.select_rows(&comp).select_columns(omega.indices()))
}

/// `E = A_{ΩΩ′} (I − [A²]_{Ω′})⁻¹ [A²]_{Ω′Ω}`; zero when `Ω` is everything.
pub fn error_closed_form(a: &DMatrix<f64>, omega: &ObservableSet) -> Result<DMatrix<f64>> {
    let f = f_matrix(a, omega)?;
    let comp = omega.complement();
    let a_cross = a.select_rows(omega.indices()).select_columns(&comp);
    Ok(a_cross * f)
}

/// All blocks of the error decomposition, with `H` formed explicitly.
pub fn error_terms(a: &DMatrix<f64>, omega: &ObservableSet) -> Result<ErrorTerms> {
    check_omega(a, omega)?;
    require_symmetric(a)?;
    let comp = omega.complement();
    let m = comp.len();
    let b = a * a;
    let lhs = DMatrix::identity(m, m) - b.select_rows(&comp).select_columns(&comp);
    let h = solve_left(&lhs, &DMatrix::identity(m, m))?;
    if m > 0 {
        let residual = (&lhs * &h - DMatrix::identity(m, m)).amax();
        if residual > 1e-9 {
            return Err(Error::Singular(format!("inverse residual {residual:e}")));
        }
    }
    let f = &h * b.select_rows(&comp).select_columns(omega.indices());
    let a_cross = a.select_rows(omega.indices()).select_columns(&comp);
    let e = &a_cross * &f;
    Ok(ErrorTerms { a_cross, b, h, f, e })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TomographyResult {
    pub omega: ObservableSet,
    pub a_hat_obs: DMatrix<f64>,
    /// `A_Ω`, known only in simulation.
    pub a_true_obs: Option<DMatrix<f64>>,
    /// `Â − A_Ω`, known only in simulation.
    pub error: Option<DMatrix<f64>>,
    /// `N p`.
    pub scale: f64,
    /// Support of `A_Ω`, known only in simulation.
    pub g_obs: Option<DMatrix<u8>>,
}

impl TomographyResult {
    /// Estimates `Â` from correlations that are already restricted to `Ω`.
    pub fn from_observed(omega: ObservableSet, observed: &CorrelationPair, ridge: f64, scale: f64) -> Result<Self> {
        if observed.r0.nrows() != omega.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{0}x{0} correlations", omega.len()),
                actual: format!("{0}x{0}", observed.r0.nrows()),
            });
        }
        let a_hat_obs = estimate_a_obs(&observed.r0, &observed.r1, ridge)?;
        Ok(Self {
            omega,
            a_hat_obs,
            a_true_obs: None,
            error: None,
            scale,
            g_obs: None,
        })
    }

    /// Attaches the ground truth from the simulated network.
    pub fn with_truth(mut self, a: &CombinationMatrix, graph: &InteractionGraph) -> Result<Self> {
        let idx = self.omega.indices();
        if a.n_agents() != self.omega.n_agents() || graph.n_agents() != self.omega.n_agents() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} agents", self.omega.n_agents()),
                actual: format!("{} agents", a.n_agents()),
            });
        }
        let a_obs = a.matrix().select_rows(idx).select_columns(idx);
        self.g_obs = Some(graph.adjacency().select_rows(idx).select_columns(idx));
        self.error = Some(&self.a_hat_obs - &a_obs);
        self.a_true_obs = Some(a_obs);
        Ok(self)
    }

    pub fn k(&self) -> usize {
        self.omega.len()
    }

    /// Scatter CSV `pair,i,j,g_true,a_true_scaled,a_hat_scaled,label_hat`.
    ///
    /// Off-diagonal pairs are listed in column-major order with all
    /// non-interacting pairs first; `i` and `j` are 1-based network agent
    /// indices.
    pub fn write_scatter_csv<W: Write>(&self, labels: &DMatrix<u8>, mut out: W) -> Result<()> {
        let (Some(a_true), Some(g)) = (&self.a_true_obs, &self.g_obs) else {
            return Err(Error::param("truth", "scatter export needs the true combination matrix"));
        };
        let k = self.k();
        if labels.shape() != (k, k) {
            return Err(Error::DimensionMismatch {
                expected: format!("{k}x{k} labels"),
                actual: format!("{:?}", labels.shape()),
            });
        }
        let mut pairs: Vec<(usize, usize)> = (0..k)
            .flat_map(|j| (0..k).map(move |i| (i, j)))
            .filter(|&(i, j)| i != j)
            .collect();
        pairs.sort_by_key(|&(i, j)| g[(i, j)]);
        writeln!(out, "pair,i,j,g_true,a_true_scaled,a_hat_scaled,label_hat")?;
        let idx = self.omega.indices();
        for (n, &(i, j)) in pairs.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                n + 1,
                idx[i] + 1,
                idx[j] + 1,
                g[(i, j)],
                self.scale * a_true[(i, j)],
                self.scale * self.a_hat_obs[(i, j)],
                labels[(i, j)]
            )?;
        }
        Ok(())
    }
}

/// Conditional empirical distributions of the scaled off-diagonal estimates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionDiagnostics {
    /// Non-interacting observed pairs.
    pub n0: usize,
    /// Interacting observed pairs.
    pub n1: usize,
    pub alpha_grid: Vec<f64>,
    /// `F₀(α)` on the grid.
    pub f0: Vec<f64>,
    /// `1 − F₁(α)` on the grid.
    pub f1_bar: Vec<f64>,
    #[serde(skip)]
    zero_scaled: Vec<f64>,
    #[serde(skip)]
    one_scaled: Vec<f64>,
}

/// Fraction of sorted `values` that are `≤ alpha`, or 1/2 for no values.
fn fraction_at_most(values: &[f64], alpha: f64) -> f64 {
    if values.is_empty() {
        return 0.5;
    }
    values.partition_point(|&v| v <= alpha) as f64 / values.len() as f64
}

impl DistributionDiagnostics {
    /// `F₀(α)`: fraction of non-interacting pairs with `N p â ≤ α`.
    pub fn f0_at(&self, alpha: f64) -> f64 {
        fraction_at_most(&self.zero_scaled, alpha)
    }

    /// `1 − F₁(α)`: fraction of interacting pairs with `N p â > α`.
    pub fn f1_bar_at(&self, alpha: f64) -> f64 {
        if self.one_scaled.is_empty() {
            0.5
        } else {
            1.0 - fraction_at_most(&self.one_scaled, alpha)
        }
    }
}

pub fn diagnostics(
    a_hat_obs: &DMatrix<f64>,
    g_obs: &DMatrix<u8>,
    scale: f64,
    alpha_grid: &[f64],
) -> Result<DistributionDiagnostics> {
    if !a_hat_obs.is_square() || a_hat_obs.shape() != g_obs.shape() {
        return Err(Error::DimensionMismatch {
            expected: format!("{:?}", a_hat_obs.shape()),
            actual: format!("{:?}", g_obs.shape()),
        });
    }
    if alpha_grid.iter().any(|&a| !(a > 0.0)) || alpha_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("alpha_grid", "must be positive and strictly increasing"));
    }
    let k = a_hat_obs.nrows();
    let mut zero_scaled = Vec::new();
    let mut one_scaled = Vec::new();
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let v = scale * a_hat_obs[(i, j)];
            if g_obs[(i, j)] == 0 {
                zero_scaled.push(v);
            } else {
                one_scaled.push(v);
            }
        }
    }
    zero_scaled.sort_by(f64::total_cmp);
    one_scaled.sort_by(f64::total_cmp);
    let mut d = DistributionDiagnostics {
        n0: zero_scaled.len(),
        n1: one_scaled.len(),
        alpha_grid: alpha_grid.to_vec(),
        f0: Vec::new(),
        f1_bar: Vec::new(),
        zero_scaled,
        one_scaled,
    };
    d.f0 = alpha_grid.iter().map(|&a| d.f0_at(a)).collect();
    d.f1_bar = alpha_grid.iter().map(|&a| d.f1_bar_at(a)).collect();
    Ok(d)
}

/// `(1 − F₀(ε)) / p`.
pub fn scaled_fraction_ratio(diag: &DistributionDiagnostics, epsilon: f64, p: f64) -> f64 {
    (1.0 - diag.f0_at(epsilon)) / p
}
