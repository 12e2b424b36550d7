//! Combine-then-adapt diffusion over streaming data.
//!
//! The recursion is `y(t) = A y(t−1) + μ x(t)` from `y(0) = 0`. Time is
//! 1-based in the exported CSV; column `t − 1` of [`DiffusionTrace::outputs`]
//! holds `y(t)`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policies::CombinationMatrix;
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    #[default]
    StandardNormal,
    /// Uniform on {−1, +1}.
    Rademacher,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionTrace {
    outputs: DMatrix<f64>,
    mu: f64,
    input_kind: Option<InputKind>,
}

impl DiffusionTrace {
    /// `N × n` outputs; column `t` is `y(t + 1)`.
    pub fn outputs(&self) -> &DMatrix<f64> {
        &self.outputs
    }

    pub fn n_agents(&self) -> usize {
        self.outputs.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.outputs.ncols()
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `None` when the trace was driven by caller-supplied inputs.
    pub fn input_kind(&self) -> Option<InputKind> {
        self.input_kind
    }

    /// Rows of the observed agents, in the order of `omega`.
    pub fn restrict(&self, omega: &[usize]) -> Result<DMatrix<f64>> {
        validate_index_set(omega, self.n_agents())?;
        Ok(self.outputs.select_rows(omega))
    }

    /// Long-format CSV `t,agent,y` with 1-based time and agent indices.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,agent,y")?;
        for (t, col) in self.outputs.column_iter().enumerate() {
            for (i, y) in col.iter().enumerate() {
                writeln!(out, "{},{},{}", t + 1, i + 1, y)?;
            }
        }
        Ok(())
    }
}

/// Checks that `omega` is strictly increasing and within `0..n`.
pub(crate) fn validate_index_set(omega: &[usize], n: usize) -> Result<()> {
    if omega.is_empty() {
        return Err(Error::param("omega", "index set is empty"));
    }
    if let Some(&bad) = omega.iter().find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { index: bad, len: n });
    }
    if omega.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("omega", "indices must be sorted and distinct"));
    }
    Ok(())
}

fn run(
    a: &DMatrix<f64>,
    mu: f64,
    n_samples: usize,
    mut next_input: impl FnMut(usize, &mut DVector<f64>),
) -> DMatrix<f64> {
    let n = a.nrows();
    let mut outputs = DMatrix::zeros(n, n_samples);
    let mut y = DVector::zeros(n);
    let mut next = DVector::zeros(n);
    let mut x = DVector::zeros(n);
    for t in 0..n_samples {
        next_input(t, &mut x);
        next.gemv(1.0, a, &y, 0.0);
        next.axpy(mu, &x, 1.0);
        std::mem::swap(&mut y, &mut next);
        outputs.set_column(t, &y);
    }
    outputs
}

/// Runs the recursion with i.i.d. zero-mean unit-variance inputs drawn from
/// `seed`. Inputs are drawn time-major: all agents at `t = 1`, then `t = 2`.
pub fn simulate(
    a: &CombinationMatrix,
    n_samples: usize,
    input_kind: InputKind,
    seed: u64,
) -> Result<DiffusionTrace> {
    if n_samples == 0 {
        return Err(Error::param("n_samples", "must be at least 1"));
    }
    let mut rng = rng_from_seed(seed);
    let outputs = run(a.matrix(), a.mu(), n_samples, |_, x| match input_kind {
        InputKind::StandardNormal => x.iter_mut().for_each(|v| *v = rng.sample(StandardNormal)),
        InputKind::Rademacher => x
            .iter_mut()
            .for_each(|v| *v = if rng.random::<bool>() { 1.0 } else { -1.0 }),
    });
    Ok(DiffusionTrace {
        outputs,
        mu: a.mu(),
        input_kind: Some(input_kind),
    })
}

/// Runs the recursion on explicit inputs; column `t` of `inputs` is
/// `x(t + 1)`.
pub fn simulate_with_inputs(a: &DMatrix<f64>, mu: f64, inputs: &DMatrix<f64>) -> Result<DiffusionTrace> {
    if !a.is_square() || inputs.nrows() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} input rows", a.nrows()),
            actual: format!("{} input rows", inputs.nrows()),
        });
    }
    if inputs.ncols() == 0 {
        return Err(Error::param("n_samples", "must be at least 1"));
    }
    let outputs = run(a, mu, inputs.ncols(), |t, x| x.copy_from(&inputs.column(t)));
    Ok(DiffusionTrace {
        outputs,
        mu,
        input_kind: None,
    })
}
