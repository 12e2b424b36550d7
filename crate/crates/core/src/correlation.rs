//! Steady-state zero-lag and one-lag correlations of the diffusion output,
//! theoretical and empirical.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{solve_left, symmetrize};
use crate::policies::{max_asymmetry, CombinationMatrix};

/// Symmetry tolerance required by the closed-form routes.
pub const SYMMETRY_TOL: f64 = 1e-10;

pub const DEFAULT_LYAPUNOV_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationSource {
    ClosedFormSymmetric,
    LyapunovIteration,
    Empirical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationPair {
    pub r0: DMatrix<f64>,
    pub r1: DMatrix<f64>,
    pub source: CorrelationSource,
    pub burn_in: usize,
}

impl CorrelationPair {
    /// Restriction of both matrices to the rows and columns in `omega`.
    pub fn restrict(&self, omega: &[usize]) -> Result<Self> {
        crate::diffusion::validate_index_set(omega, self.r0.nrows())?;
        Ok(Self {
            r0: self.r0.select_rows(omega).select_columns(omega),
            r1: self.r1.select_rows(omega).select_columns(omega),
            ..self.clone()
        })
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if mu > 0.0 && mu < 1.0 {
        Ok(())
    } else {
        Err(Error::param("mu", format!("{mu} not in (0, 1)")))
    }
}

fn check_square(m: &DMatrix<f64>, name: &'static str) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: format!("square `{name}`"),
            actual: format!("{}x{}", m.nrows(), m.ncols()),
        })
    }
}

/// `μ² (I − A²)⁻¹` for symmetric `A`.
pub fn r0_closed_form_symmetric(a: &DMatrix<f64>, mu: f64) -> Result<DMatrix<f64>> {
    check_mu(mu)?;
    check_square(a, "A")?;
    let asym = max_asymmetry(a);
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric {
            max_asymmetry: asym,
        });
    }
    let n = a.nrows();
    let z = DMatrix::identity(n, n) - a * a;
    let r0 = solve_left(&z, &DMatrix::from_diagonal_element(n, n, mu * mu))?;
    Ok(symmetrize(&r0))
}

/// Default iteration cap: `ceil(ln(tol) / (2 ln(1 − μ))) + 100`.
pub fn default_max_iters(mu: f64, tol: f64) -> usize {
    (tol.ln() / (2.0 * (1.0 - mu).ln())).ceil().max(0.0) as usize + 100
}

/// Solves `R = A R Aᵀ + μ² I` by fixed-point iteration from `R = μ² I`,
/// stopping when successive iterates differ by less than `tol` in max-entry
/// norm. Works for asymmetric `A`.
pub fn r0_lyapunov(a: &DMatrix<f64>, mu: f64, tol: f64, max_iters: usize) -> Result<DMatrix<f64>> {
    check_mu(mu)?;
    check_square(a, "A")?;
    if !(tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    let n = a.nrows();
    let q = mu * mu;
    let at = a.transpose();
    let mut r = DMatrix::from_diagonal_element(n, n, q);
    let mut tmp = DMatrix::zeros(n, n);
    let mut next = DMatrix::zeros(n, n);
    let mut step = f64::INFINITY;
    for _ in 0..max_iters {
        tmp.gemm(1.0, a, &r, 0.0);
        next.gemm(1.0, &tmp, &at, 0.0);
        for i in 0..n {
            next[(i, i)] += q;
        }
        step = next
            .iter()
            .zip(r.iter())
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        std::mem::swap(&mut r, &mut next);
        if step < tol {
            return Ok(r);
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iters,
        last_step: step,
    })
}

/// `‖R − A R Aᵀ − μ² I‖_max`.
pub fn lyapunov_residual(a: &DMatrix<f64>, r0: &DMatrix<f64>, mu: f64) -> f64 {
    let n = a.nrows();
    let res = r0 - a * r0 * a.transpose() - DMatrix::from_diagonal_element(n, n, mu * mu);
    res.amax()
}

/// `R₁ = A R₀`.
pub fn r1_from_r0(a: &DMatrix<f64>, r0: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.ncols() != r0.nrows() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} rows in R0", a.ncols()),
            actual: format!("{} rows", r0.nrows()),
        });
    }
    Ok(a * r0)
}

/// Exact steady-state correlations: closed form when `A` is symmetric,
/// Lyapunov iteration otherwise.
pub fn exact_correlations(a: &CombinationMatrix) -> Result<CorrelationPair> {
    let m = a.matrix();
    let (r0, source) = if a.max_asymmetry() <= SYMMETRY_TOL {
        (
            r0_closed_form_symmetric(m, a.mu())?,
            CorrelationSource::ClosedFormSymmetric,
        )
    } else {
        let tol = DEFAULT_LYAPUNOV_TOL;
        (
            r0_lyapunov(m, a.mu(), tol, default_max_iters(a.mu(), tol))?,
            CorrelationSource::LyapunovIteration,
        )
    };
    let r1 = r1_from_r0(m, &r0)?;
    Ok(CorrelationPair {
        r0,
        r1,
        source,
        burn_in: 0,
    })
}

/// `ceil(20 / μ)`: the transient decays by `(1 − μ)^{20/μ} ≈ e⁻²⁰`.
pub fn default_burn_in(mu: f64) -> usize {
    (20.0 / mu).ceil() as usize
}

fn post_burn_in(trace: &DMatrix<f64>, burn_in: usize, needed: usize) -> Result<usize> {
    let available = trace.ncols().saturating_sub(burn_in);
    if available < needed {
        return Err(Error::TooFewSamples { needed, available });
    }
    Ok(available)
}

/// `Y Yᵀ / m` over the `m = n − burn_in` post-burn-in columns of `trace`.
pub fn empirical_r0(trace: &DMatrix<f64>, burn_in: usize) -> Result<DMatrix<f64>> {
    let m = post_burn_in(trace, burn_in, 2)?;
    let y = trace.columns(burn_in, m);
    Ok(symmetrize(&(y * y.transpose())) / m as f64)
}

/// `Σ y(t) y(t−1)ᵀ / (m − 1)` over the `m − 1` consecutive post-burn-in
/// pairs.
pub fn empirical_r1(trace: &DMatrix<f64>, burn_in: usize) -> Result<DMatrix<f64>> {
    let m = post_burn_in(trace, burn_in, 2)?;
    let current = trace.columns(burn_in + 1, m - 1);
    let previous = trace.columns(burn_in, m - 1);
    Ok(current * previous.transpose() / (m - 1) as f64)
}

pub fn empirical_correlations(trace: &DMatrix<f64>, burn_in: usize) -> Result<CorrelationPair> {
    Ok(CorrelationPair {
        r0: empirical_r0(trace, burn_in)?,
        r1: empirical_r1(trace, burn_in)?,
        source: CorrelationSource::Empirical,
        burn_in,
    })
}

/// Row-major CSV `row,col,value` with 1-based indices.
pub fn write_matrix_csv<W: Write>(m: &DMatrix<f64>, mut out: W) -> Result<()> {
    writeln!(out, "row,col,value")?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            writeln!(out, "{},{},{}", i + 1, j + 1, m[(i, j)])?;
        }
    }
    Ok(())
}
