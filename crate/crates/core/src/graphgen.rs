//! Random interaction graphs.
//!
//! Agents are indexed from 0 in the API. The CSV edge-list export uses
//! 1-based indices.

use std::collections::VecDeque;
use std::io::Write;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::permutation::Permutation;
use crate::rng::{derive_seed, rng_from_seed};

/// Attempt cap of [`generate_connected`].
pub const CONNECTED_MAX_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    /// Undirected Erdős–Rényi graph: `g_ij = g_ji ~ Bernoulli(p)` for `i < j`.
    ErdosRenyiSymmetric,
    /// Directed binomial graph: every off-diagonal `g_ij ~ Bernoulli(p)`.
    BinomialDirected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphModel {
    pub kind: GraphKind,
    pub n_agents: usize,
    pub p: f64,
    pub seed: u64,
}

impl GraphModel {
    pub fn new(kind: GraphKind, n_agents: usize, p: f64, seed: u64) -> Result<Self> {
        let model = Self {
            kind,
            n_agents,
            p,
            seed,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_agents == 0 {
            return Err(Error::param("n_agents", "must be at least 1"));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::param("p", format!("{} not in (0, 1]", self.p)));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// Binary interaction matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionGraph {
    adjacency: DMatrix<u8>,
    symmetric: bool,
    p: f64,
}

impl InteractionGraph {
    /// Wraps an explicit adjacency matrix. The diagonal must be all ones and
    /// every entry 0 or 1; `symmetric` is inferred.
    pub fn from_adjacency(adjacency: DMatrix<u8>, p: f64) -> Result<Self> {
        if !adjacency.is_square() {
            return Err(Error::DimensionMismatch {
                expected: "square matrix".into(),
                actual: format!("{}x{}", adjacency.nrows(), adjacency.ncols()),
            });
        }
        if adjacency.iter().any(|&v| v > 1) {
            return Err(Error::param("adjacency", "entries must be 0 or 1"));
        }
        if (0..adjacency.nrows()).any(|i| adjacency[(i, i)] != 1) {
            return Err(Error::param("adjacency", "diagonal must be all ones"));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::param("p", format!("{p} not in (0, 1]")));
        }
        let symmetric = adjacency == adjacency.transpose();
        Ok(Self {
            adjacency,
            symmetric,
            p,
        })
    }

    /// Convenience constructor from row-major 0/1 data.
    pub fn from_rows(n: usize, rows: &[u8], p: f64) -> Result<Self> {
        if rows.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: format!("{} entries", n * n),
                actual: format!("{} entries", rows.len()),
            });
        }
        Self::from_adjacency(DMatrix::from_row_slice(n, n, rows), p)
    }

    pub fn n_agents(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &DMatrix<u8> {
        &self.adjacency
    }

    pub fn adjacency_f64(&self) -> DMatrix<f64> {
        self.adjacency.map(f64::from)
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Connectivity offset `N·p − ln N`, kept for reporting only.
    pub fn c(&self) -> f64 {
        let n = self.n_agents() as f64;
        n * self.p - n.ln()
    }

    /// `N·p`, the scale applied to estimated combination weights.
    pub fn scale(&self) -> f64 {
        self.n_agents() as f64 * self.p
    }

    pub fn interacts(&self, i: usize, j: usize) -> bool {
        self.adjacency[(i, j)] == 1
    }

    /// Number of nonzero entries in row `i`, self included.
    pub fn degree(&self, i: usize) -> Result<usize> {
        let n = self.n_agents();
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, len: n });
        }
        Ok(self.adjacency.row(i).iter().map(|&v| v as usize).sum())
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency
            .row_iter()
            .map(|row| row.iter().map(|&v| v as usize).sum())
            .collect()
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    /// Breadth-first reachability from agent 0 on the symmetrized graph.
    pub fn is_connected(&self) -> bool {
        let n = self.n_agents();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if !seen[v] && (self.interacts(u, v) || self.interacts(v, u)) {
                    seen[v] = true;
                    reached += 1;
                    queue.push_back(v);
                }
            }
        }
        reached == n
    }

    /// Renumbers the agents: returns `P G Pᵀ`.
    pub fn permute(&self, perm: &Permutation) -> Result<Self> {
        Ok(Self {
            adjacency: perm.apply(&self.adjacency)?,
            symmetric: self.symmetric,
            p: self.p,
        })
    }

    /// Writes the edge list as CSV with header `i,j` and 1-based indices:
    /// the upper triangle for symmetric graphs, every ordered pair otherwise.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "i,j")?;
        let n = self.n_agents();
        for i in 0..n {
            let start = if self.symmetric { i + 1 } else { 0 };
            for j in start..n {
                if i != j && self.interacts(i, j) {
                    writeln!(out, "{},{}", i + 1, j + 1)?;
                }
            }
        }
        Ok(())
    }
}

/// Samples a graph from `model`. Deterministic in `model.seed`.
pub fn generate(model: &GraphModel) -> Result<InteractionGraph> {
    model.validate()?;
    let n = model.n_agents;
    let mut rng = rng_from_seed(model.seed);
    let mut adj = DMatrix::<u8>::identity(n, n);
    match model.kind {
        GraphKind::ErdosRenyiSymmetric => {
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.random::<f64>() < model.p {
                        adj[(i, j)] = 1;
                        adj[(j, i)] = 1;
                    }
                }
            }
        }
        GraphKind::BinomialDirected => {
            for i in 0..n {
                for j in 0..n {
                    if i != j && rng.random::<f64>() < model.p {
                        adj[(i, j)] = 1;
                    }
                }
            }
        }
    }
    let symmetric = model.kind == GraphKind::ErdosRenyiSymmetric || adj == adj.transpose();
    Ok(InteractionGraph {
        adjacency: adj,
        symmetric,
        p: model.p,
    })
}

/// Resamples until the graph is connected, at most
/// [`CONNECTED_MAX_ATTEMPTS`] times. Attempt `k` uses
/// `derive_seed(model.seed, 0, k)`.
pub fn generate_connected(model: &GraphModel) -> Result<InteractionGraph> {
    for attempt in 0..CONNECTED_MAX_ATTEMPTS {
        let candidate = model.with_seed(derive_seed(model.seed, 0, attempt as u64));
        let graph = generate(&candidate)?;
        if graph.is_connected() {
            return Ok(graph);
        }
    }
    Err(Error::NotConnected {
        attempts: CONNECTED_MAX_ATTEMPTS,
    })
}

/// `(ln N + c) / N`, clamped to at most 1.
pub fn connectivity_probability(n_agents: f64, c: f64) -> Result<f64> {
    if n_agents < 2.0 {
        return Err(Error::param("n_agents", "must be at least 2"));
    }
    let p = (n_agents.ln() + c) / n_agents;
    if !(p > 0.0) {
        return Err(Error::param(
            "c",
            format!("interaction probability {p} is not positive"),
        ));
    }
    Ok(p.min(1.0))
}
