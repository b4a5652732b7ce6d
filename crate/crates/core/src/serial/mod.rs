//! Significance ranking: DF computation, significance propagation, an exact
//! direct solver used as an oracle, ranking and the runtime cost model.
//!
//! Propagation is the incremental breadth-first scheme: every visited arrow
//! computes `delta = s_head * df - dw`, stores the new weight and forwards
//! `delta` to its tail. Each node is visited at most once per iteration, so
//! loops in the significance graph are unrolled one turn per iteration and
//! their contributions accumulate as a geometric series.
//!
//! The per-iteration error (ε) is measured after each sweep as the largest
//! pending relative change `|s_head * df - dw| / dw` over all arrows, which is
//! exactly the relative update the next sweep would apply if no head moved.
//! An arrow that still carries zero weight but has a pending update above
//! the absolute floor counts as a 100% change.

mod cost;
mod pipeline;
mod procedure1;
mod procedure2;
mod rank;
mod solve;

use serde::Serialize;
use thiserror::Error;

pub use cost::{estimate_cost, CostEstimate};
pub use pipeline::{analyze, Analysis, RankOptions};
pub use procedure1::{procedure1, procedure1_all, DfPropagator};
pub use procedure2::{
    initial_output_significance, output_bit_index, procedure2, OutputWeights, SignificancePropagator,
    SignificanceVector,
};
pub use rank::{rank, RankEntry, Ranking, RankingError};
pub use solve::{direct_solve, residual, MAX_DIRECT_UNKNOWNS};

/// Default ε threshold for both procedures (1%).
pub const DEFAULT_EPS: f64 = 0.01;
/// Default iteration cap for both procedures.
pub const DEFAULT_MAX_ITERS: usize = 100;

/// Per-iteration error trace of one propagation run.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct ConvergenceReport {
    pub iterations: usize,
    pub eps_trace: Vec<f64>,
    pub converged: bool,
}

impl ConvergenceReport {
    pub fn final_eps(&self) -> Option<f64> {
        self.eps_trace.last().copied()
    }
}

#[derive(Debug, Error)]
pub enum SerialError {
    #[error("{context}: no convergence after {} iteration(s) (last eps {:?})", report.iterations, report.final_eps())]
    NonConvergence { context: String, report: ConvergenceReport },
    #[error("linear system is singular (loop without branches?)")]
    SingularSystem,
    #[error("{0} unknowns exceed the direct-solve limit of {MAX_DIRECT_UNKNOWNS}")]
    TooLarge(usize),
    #[error("expected {expected} output significances, got {got}")]
    OutputCount { expected: usize, got: usize },
    #[error("DF computation failed for {} endpoint(s): {}", .0.len(), .0.iter().map(|(n, e)| format!("{n}: {e}")).collect::<Vec<_>>().join("; "))]
    Endpoints(Vec<(String, SerialError)>),
    #[error(transparent)]
    Graph(#[from] crate::graphs::GraphError),
}

impl SerialError {
    /// True when the error is (or only contains) non-convergence.
    pub fn is_non_convergence(&self) -> bool {
        match self {
            SerialError::NonConvergence { .. } => true,
            SerialError::Endpoints(v) => v.iter().all(|(_, e)| e.is_non_convergence()),
            _ => false,
        }
    }
}
