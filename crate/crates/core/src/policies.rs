//! Combination policies: maps from an interaction graph to the scaled
//! combination matrix `A = (1 − μ) W`, with `W` right-stochastic.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphgen::{generate, GraphModel, InteractionGraph};
use crate::permutation::Permutation;
use crate::rng::{derive_seed, rng_from_seed, stream};

/// Tolerance for row sums and symmetry of constructed matrices.
pub const CONSTRUCTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Policy {
    Laplacian { lambda: f64 },
    Metropolis,
    UniformAveraging,
    Counterexample { epsilon: f64 },
}

impl Policy {
    pub fn apply(&self, graph: &InteractionGraph, mu: f64) -> Result<CombinationMatrix> {
        match *self {
            Policy::Laplacian { lambda } => laplacian(graph, mu, lambda),
            Policy::Metropolis => metropolis(graph, mu),
            Policy::UniformAveraging => uniform_averaging(graph, mu),
            Policy::Counterexample { epsilon } => counterexample_policy(graph, mu, epsilon),
        }
    }

    /// Whether the policy produces symmetric matrices on symmetric graphs.
    pub fn is_symmetric(&self) -> bool {
        !matches!(self, Policy::UniformAveraging)
    }

    /// Lower level `τ` that scaled nonzero weights exceed with high
    /// probability, when one is known for the policy.
    pub fn class_tau(&self, mu: f64) -> Option<f64> {
        match *self {
            Policy::Laplacian { lambda } => Some((1.0 - mu) * lambda / std::f64::consts::E),
            Policy::Metropolis => Some((1.0 - mu) / std::f64::consts::E),
            _ => None,
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Laplacian { lambda } => write!(f, "laplacian(lambda={lambda})"),
            Policy::Metropolis => write!(f, "metropolis"),
            Policy::UniformAveraging => write!(f, "uniform_averaging"),
            Policy::Counterexample { epsilon } => write!(f, "counterexample(epsilon={epsilon})"),
        }
    }
}

/// Nonnegative matrix whose rows sum to `1 − μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinationMatrix {
    matrix: DMatrix<f64>,
    mu: f64,
    policy: Policy,
}

impl CombinationMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    pub fn n_agents(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn max_asymmetry(&self) -> f64 {
        max_asymmetry(&self.matrix)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.matrix.row_iter().map(|r| r.sum()).collect()
    }

    /// Renumbers the agents: `P A Pᵀ`.
    pub fn permute(&self, perm: &Permutation) -> Result<Self> {
        Ok(Self {
            matrix: perm.apply(&self.matrix)?,
            ..self.clone()
        })
    }
}

pub(crate) fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

fn check_mu(mu: f64) -> Result<()> {
    if mu > 0.0 && mu < 1.0 {
        Ok(())
    } else {
        Err(Error::param("mu", format!("{mu} not in (0, 1)")))
    }
}

fn require_symmetric(graph: &InteractionGraph) -> Result<()> {
    if graph.is_symmetric() {
        Ok(())
    } else {
        Err(Error::UnsupportedGraph(
            "policy requires a symmetric interaction graph".into(),
        ))
    }
}

/// Fills off-diagonal weights from `weight(i, j)` on the graph support and
/// completes each diagonal so the row sums to `1 − μ`.
fn complete_rows(
    graph: &InteractionGraph,
    mu: f64,
    policy: Policy,
    weight: impl Fn(usize, usize) -> f64,
) -> CombinationMatrix {
    let n = graph.n_agents();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut off = 0.0;
        for j in 0..n {
            if i != j && graph.interacts(i, j) {
                let w = weight(i, j);
                a[(i, j)] = w;
                off += w;
            }
        }
        a[(i, i)] = (1.0 - mu) - off;
    }
    CombinationMatrix {
        matrix: a,
        mu,
        policy,
    }
}

/// Laplacian rule: `a_ij = (1 − μ) λ / d_max` on edges.
pub fn laplacian(graph: &InteractionGraph, mu: f64, lambda: f64) -> Result<CombinationMatrix> {
    check_mu(mu)?;
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::param("lambda", format!("{lambda} not in (0, 1]")));
    }
    require_symmetric(graph)?;
    let w = (1.0 - mu) * lambda / graph.max_degree() as f64;
    Ok(complete_rows(graph, mu, Policy::Laplacian { lambda }, |_, _| w))
}

/// Metropolis rule: `a_ij = (1 − μ) / max(d_i, d_j)` on edges.
pub fn metropolis(graph: &InteractionGraph, mu: f64) -> Result<CombinationMatrix> {
    check_mu(mu)?;
    require_symmetric(graph)?;
    let d = graph.degrees();
    Ok(complete_rows(graph, mu, Policy::Metropolis, |i, j| {
        (1.0 - mu) / d[i].max(d[j]) as f64
    }))
}

/// Uniform averaging: every neighbor of `i`, self included, gets
/// `(1 − μ) / d_i`. Works on directed graphs.
pub fn uniform_averaging(graph: &InteractionGraph, mu: f64) -> Result<CombinationMatrix> {
    check_mu(mu)?;
    let d = graph.degrees();
    let n = graph.n_agents();
    let a = DMatrix::from_fn(n, n, |i, j| {
        if graph.interacts(i, j) {
            (1.0 - mu) / d[i] as f64
        } else {
            0.0
        }
    });
    Ok(CombinationMatrix {
        matrix: a,
        mu,
        policy: Policy::UniformAveraging,
    })
}

/// Metropolis weights with agent 0's self-weight raised by `ε(1 − μ)`; the
/// increase is taken in equal parts from agent 0's edges, mirrored to keep
/// the matrix symmetric, and given back to the neighbors' self-weights.
///
/// Only defined on three-agent path graphs (any numbering), where it breaks
/// permutation equivariance.
pub fn counterexample_policy(
    graph: &InteractionGraph,
    mu: f64,
    epsilon: f64,
) -> Result<CombinationMatrix> {
    check_mu(mu)?;
    if !(0.0..1.0 / 3.0).contains(&epsilon) {
        return Err(Error::param("epsilon", format!("{epsilon} not in [0, 1/3)")));
    }
    let edges = if graph.n_agents() == 3 && graph.is_symmetric() {
        (0..3)
            .flat_map(|i| ((i + 1)..3).map(move |j| (i, j)))
            .filter(|&(i, j)| graph.interacts(i, j))
            .count()
    } else {
        0
    };
    if edges != 2 {
        return Err(Error::UnsupportedGraph(
            "counterexample policy is defined only on three-agent path graphs".into(),
        ));
    }
    let mut a = metropolis(graph, mu)?.matrix;
    let neighbors: Vec<usize> = (1..3).filter(|&j| graph.interacts(0, j)).collect();
    let bump = (1.0 - mu) * epsilon;
    let share = bump / neighbors.len() as f64;
    a[(0, 0)] += bump;
    for &j in &neighbors {
        a[(0, j)] -= share;
        a[(j, 0)] -= share;
        a[(j, j)] += share;
    }
    Ok(CombinationMatrix {
        matrix: a,
        mu,
        policy: Policy::Counterexample { epsilon },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct P1Check {
    /// No weight outside the graph support.
    pub holds: bool,
    /// Smallest `κ` with `a_ij ≤ κ / d_i` on every edge.
    pub kappa_min: f64,
}

/// Upper-bound property: `a_ij ≤ κ g_ij / d_i` for `i ≠ j`.
pub fn check_p1(a: &CombinationMatrix, graph: &InteractionGraph) -> Result<P1Check> {
    let n = graph.n_agents();
    if a.n_agents() != n {
        return Err(Error::DimensionMismatch {
            expected: format!("{n}x{n}"),
            actual: format!("{0}x{0}", a.n_agents()),
        });
    }
    let d = graph.degrees();
    let mut holds = true;
    let mut kappa_min = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let w = a.matrix[(i, j)];
            if graph.interacts(i, j) {
                kappa_min = kappa_min.max(w * d[i] as f64);
            } else if w != 0.0 {
                holds = false;
            }
        }
    }
    Ok(P1Check { holds, kappa_min })
}

/// Permutation equivariance: `policy(P G Pᵀ) = P policy(G) Pᵀ` within
/// [`CONSTRUCTION_TOL`].
pub fn check_p2(policy: Policy, mu: f64, graph: &InteractionGraph, perm: &Permutation) -> Result<bool> {
    let direct = policy.apply(&graph.permute(perm)?, mu)?;
    let renumbered = policy.apply(graph, mu)?.permute(perm)?;
    let diff = (direct.matrix() - renumbered.matrix()).amax();
    Ok(diff <= CONSTRUCTION_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolicyClassReport {
    pub tau: f64,
    /// Largest `κ` needed across trials.
    pub kappa: f64,
    /// Fraction of edges with `N p a_ij > τ`.
    pub freq_tau: f64,
    pub p1_holds: bool,
    pub p2_holds: bool,
}

/// Monte Carlo check of the lower-level class condition. Trial `t` draws its
/// graph from `derive_seed(seed, GRAPH, t)` and a random renumbering for the
/// equivariance check from `derive_seed(seed, PERMUTATION, t)`.
pub fn check_class_tau(
    policy: Policy,
    mu: f64,
    model: &GraphModel,
    tau: f64,
    trials: usize,
    seed: u64,
) -> Result<PolicyClassReport> {
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    let scale = model.n_agents as f64 * model.p;
    let mut edges = 0usize;
    let mut above = 0usize;
    let mut kappa = 0.0f64;
    let mut p1_holds = true;
    let mut p2_holds = true;
    for t in 0..trials as u64 {
        let graph = generate(&model.with_seed(derive_seed(seed, stream::GRAPH, t)))?;
        let a = policy.apply(&graph, mu)?;
        let n = graph.n_agents();
        for i in 0..n {
            for j in 0..n {
                if i != j && graph.interacts(i, j) {
                    edges += 1;
                    if scale * a.matrix()[(i, j)] > tau {
                        above += 1;
                    }
                }
            }
        }
        let p1 = check_p1(&a, &graph)?;
        p1_holds &= p1.holds;
        kappa = kappa.max(p1.kappa_min);
        let mut rng = rng_from_seed(derive_seed(seed, stream::PERMUTATION, t));
        let perm = Permutation::random(n, &mut rng);
        p2_holds &= check_p2(policy, mu, &graph, &perm)?;
    }
    let freq_tau = if edges == 0 {
        1.0
    } else {
        above as f64 / edges as f64
    };
    Ok(PolicyClassReport {
        tau,
        kappa,
        freq_tau,
        p1_holds,
        p2_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphgen::{connectivity_probability, GraphKind};

    fn er(n: usize, p: f64, seed: u64) -> InteractionGraph {
        generate(&GraphModel::new(GraphKind::ErdosRenyiSymmetric, n, p, seed).unwrap()).unwrap()
    }

    fn chain() -> InteractionGraph {
        InteractionGraph::from_rows(3, &[1, 1, 0, 1, 1, 1, 0, 1, 1], 0.5).unwrap()
    }

    fn assert_valid(a: &CombinationMatrix, g: &InteractionGraph, symmetric: bool) {
        let mu = a.mu();
        for s in a.row_sums() {
            assert!((s - (1.0 - mu)).abs() <= CONSTRUCTION_TOL, "row sum {s}");
        }
        for i in 0..g.n_agents() {
            for j in 0..g.n_agents() {
                let w = a.matrix()[(i, j)];
                assert!(w >= 0.0);
                assert_eq!(w > 0.0, g.interacts(i, j), "support mismatch at ({i},{j})");
            }
        }
        if symmetric {
            assert!(a.max_asymmetry() <= CONSTRUCTION_TOL);
        }
    }

    #[test]
    fn laplacian_weight_formula() {
        // Star with center 0 and five leaves: d_max = 6.
        let n = 6;
        let mut rows = vec![0u8; n * n];
        for i in 0..n {
            rows[i * n + i] = 1;
            rows[i] = 1;
            rows[i * n] = 1;
        }
        let g = InteractionGraph::from_rows(n, &rows, 0.5).unwrap();
        let a = laplacian(&g, 0.1, 0.5).unwrap();
        assert!((a.matrix()[(0, 1)] - 0.9 * 0.5 / 6.0).abs() < 1e-15);
        assert_valid(&a, &g, true);

        // d_max = 5 on a five-agent complete graph.
        let k5 = er(5, 1.0, 0);
        let a = laplacian(&k5, 0.1, 0.5).unwrap();
        assert!((a.matrix()[(0, 1)] - 0.09).abs() < 1e-15);
    }

    #[test]
    fn single_agent_policies() {
        let g = er(1, 0.5, 0);
        for a in [
            laplacian(&g, 0.1, 0.5).unwrap(),
            metropolis(&g, 0.1).unwrap(),
            uniform_averaging(&g, 0.1).unwrap(),
        ] {
            assert!((a.matrix()[(0, 0)] - 0.9).abs() < 1e-15);
        }
    }

    #[test]
    fn flagship_row_sums() {
        let p = connectivity_probability(100.0, 100f64.ln()).unwrap();
        for seed in 0..5 {
            let g = er(100, p, seed);
            assert_valid(&laplacian(&g, 0.1, 0.5).unwrap(), &g, true);
            assert_valid(&metropolis(&g, 0.1).unwrap(), &g, true);
        }
    }

    #[test]
    fn metropolis_weights() {
        // 0 has degree 3 (with self), 1 has degree 5.
        let rows = [
            1, 1, 1, 0, 0, //
            1, 1, 1, 1, 1, //
            1, 1, 1, 0, 0, //
            0, 1, 0, 1, 0, //
            0, 1, 0, 0, 1,
        ];
        let g = InteractionGraph::from_rows(5, &rows, 0.5).unwrap();
        let a = metropolis(&g, 0.1).unwrap();
        assert!((a.matrix()[(0, 1)] - 0.18).abs() < 1e-15);
        assert_valid(&a, &g, true);

        let k4 = er(4, 1.0, 0);
        let a = metropolis(&k4, 0.1).unwrap();
        assert!(a.matrix().iter().all(|&w| (w - 0.225).abs() < 1e-15));
    }

    #[test]
    fn uniform_averaging_rows() {
        let g = chain();
        let a = uniform_averaging(&g, 0.1).unwrap();
        for j in 0..3 {
            assert!((a.matrix()[(1, j)] - 0.3).abs() < 1e-15);
        }
        let model = GraphModel::new(GraphKind::BinomialDirected, 100, 0.0921, 2).unwrap();
        let d = generate(&model).unwrap();
        assert!(!d.is_symmetric());
        assert_valid(&uniform_averaging(&d, 0.1).unwrap(), &d, false);
    }

    #[test]
    fn parameter_errors() {
        let g = chain();
        assert!(laplacian(&g, 0.0, 0.5).is_err());
        assert!(laplacian(&g, 0.1, 0.0).is_err());
        assert!(laplacian(&g, 0.1, 1.5).is_err());
        assert!(metropolis(&g, 1.0).is_err());
        assert!(uniform_averaging(&g, -0.1).is_err());
        let d = InteractionGraph::from_rows(2, &[1, 1, 0, 1], 0.5).unwrap();
        assert!(matches!(metropolis(&d, 0.1), Err(Error::UnsupportedGraph(_))));
        assert!(matches!(laplacian(&d, 0.1, 0.5), Err(Error::UnsupportedGraph(_))));
    }

    #[test]
    fn counterexample_matrices() {
        let (mu, eps) = (0.1, 0.01);
        let a = counterexample_policy(&chain(), mu, eps).unwrap();
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[
                2.0 / 3.0 + eps,
                1.0 / 3.0 - eps,
                0.0,
                1.0 / 3.0 - eps,
                1.0 / 3.0 + eps,
                1.0 / 3.0,
                0.0,
                1.0 / 3.0,
                2.0 / 3.0,
            ],
        ) * (1.0 - mu);
        assert!((a.matrix() - &expected).amax() < 1e-15);
        assert_valid(&a, &chain(), true);

        let swapped = chain().permute(&Permutation::swap(3, 0, 1).unwrap()).unwrap();
        let b = counterexample_policy(&swapped, mu, eps).unwrap();
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[
                1.0 / 3.0 + eps,
                1.0 / 3.0 - eps / 2.0,
                1.0 / 3.0 - eps / 2.0,
                1.0 / 3.0 - eps / 2.0,
                2.0 / 3.0 + eps / 2.0,
                0.0,
                1.0 / 3.0 - eps / 2.0,
                0.0,
                2.0 / 3.0 + eps / 2.0,
            ],
        ) * (1.0 - mu);
        assert!((b.matrix() - &expected).amax() < 1e-15);
        assert_valid(&b, &swapped, true);
    }

    #[test]
    fn counterexample_without_perturbation_is_metropolis() {
        let a = counterexample_policy(&chain(), 0.1, 0.0).unwrap();
        let m = metropolis(&chain(), 0.1).unwrap();
        assert!((a.matrix() - m.matrix()).amax() < 1e-15);
    }

    #[test]
    fn counterexample_rejects_other_graphs() {
        assert!(counterexample_policy(&er(3, 1.0, 0), 0.1, 0.01).is_err());
        assert!(counterexample_policy(&er(4, 1.0, 0), 0.1, 0.01).is_err());
        assert!(counterexample_policy(&chain(), 0.1, 0.4).is_err());
    }

    #[test]
    fn p1_bounds() {
        let g = er(60, 0.15, 4);
        let lap = laplacian(&g, 0.1, 0.5).unwrap();
        let r = check_p1(&lap, &g).unwrap();
        assert!(r.holds && r.kappa_min <= 0.9 * 0.5 + 1e-15);
        let met = metropolis(&g, 0.1).unwrap();
        let r = check_p1(&met, &g).unwrap();
        assert!(r.holds && r.kappa_min <= 0.9 + 1e-15);

        let iso = er(4, 1e-9, 1);
        let r = check_p1(&metropolis(&iso, 0.1).unwrap(), &iso).unwrap();
        assert!(r.holds);
        assert_eq!(r.kappa_min, 0.0);

        assert!(check_p1(&met, &iso).is_err());
    }

    #[test]
    fn p2_examples() {
        let p = DMatrix::from_row_slice(
            4,
            4,
            &[0., 0., 0., 1., 0., 1., 0., 0., 1., 0., 0., 0., 0., 0., 1., 0.],
        );
        let perm = Permutation::from_matrix(&p).unwrap();
        let g = InteractionGraph::from_rows(4, &[1, 1, 1, 0, 1, 1, 1, 1, 1, 1, 1, 0, 0, 1, 0, 1], 0.5)
            .unwrap();
        assert!(check_p2(Policy::Metropolis, 0.1, &g, &perm).unwrap());

        let swap = Permutation::swap(3, 0, 1).unwrap();
        let ce = Policy::Counterexample { epsilon: 0.01 };
        assert!(!check_p2(ce, 0.1, &chain(), &swap).unwrap());
        for policy in [
            Policy::Metropolis,
            Policy::Laplacian { lambda: 0.5 },
            Policy::UniformAveraging,
            ce,
        ] {
            assert!(check_p2(policy, 0.1, &chain(), &Permutation::identity(3)).unwrap());
        }
    }

    #[test]
    fn class_tau_zero_threshold() {
        let model = GraphModel::new(GraphKind::ErdosRenyiSymmetric, 40, 0.2, 0).unwrap();
        let r = check_class_tau(Policy::Metropolis, 0.1, &model, 0.0, 3, 5).unwrap();
        assert_eq!(r.freq_tau, 1.0);
        assert!(r.p1_holds && r.p2_holds);
    }
}
