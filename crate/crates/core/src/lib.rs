//! Topology inference for partially observed adaptive diffusion networks.
//!
//! Agents run a combine-then-adapt recursion `y(t) = A y(t−1) + μ x(t)` over
//! a random interaction graph. Only a subset `Ω` of agents is observed; the
//! estimator `Â = R̂1 R̂0⁻¹` on that subset is clustered into edges and
//! non-edges.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod classify;
pub mod correlation;
pub mod diffusion;
pub mod error;
pub mod experiment;
pub mod graphgen;
pub mod linalg;
pub mod permutation;
pub mod policies;
pub mod rng;
pub mod theory;
pub mod tomography;
pub mod verify;

pub use classify::{classify_edges, edge_metrics, two_means_1d, ClusterOutcome, EdgeMetrics};
pub use correlation::{empirical_correlations, exact_correlations, CorrelationPair};
pub use diffusion::{simulate, DiffusionTrace, InputKind};
pub use error::{Error, Result};
pub use graphgen::{generate, generate_connected, GraphKind, GraphModel, InteractionGraph};
pub use permutation::Permutation;
pub use policies::{CombinationMatrix, Policy};
pub use tomography::{select_observable, ObservableMode, ObservableSet, TomographyResult};
pub use experiment::{run_experiment, run_sweep, ExperimentConfig, ExperimentSummary, Mode, SweepAxis};
pub use verify::{run_verify, VerificationReport, VerifyScale};
