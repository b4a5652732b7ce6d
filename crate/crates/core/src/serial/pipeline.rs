use super::{
    initial_output_significance, procedure1_all, procedure2, rank, residual, ConvergenceReport, OutputWeights, Ranking,
    SerialError, SignificanceVector, DEFAULT_EPS, DEFAULT_MAX_ITERS,
};
use crate::graphs::{build_significance_graph, DfMatrix, SignificanceGraph};
use crate::netlist::Netlist;
use crate::scalar::Scalar;

/// Knobs of the full ranking pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOptions {
    /// ε₁ threshold. Cones are acyclic, so 0 is always reachable.
    pub eps1: f64,
    pub max_iters1: usize,
    pub eps2: f64,
    pub max_iters2: usize,
    pub weights: OutputWeights,
    /// Inputs pinned to zero significance (clock, reset).
    pub pinned: Vec<String>,
}

impl Default for RankOptions {
    fn default() -> Self {
        RankOptions {
            eps1: 0.0,
            max_iters1: DEFAULT_MAX_ITERS,
            eps2: DEFAULT_EPS,
            max_iters2: DEFAULT_MAX_ITERS,
            weights: OutputWeights::Uniform,
            pinned: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Analysis<T> {
    pub df: DfMatrix<T>,
    pub graph: SignificanceGraph<T>,
    pub significance: SignificanceVector<T>,
    pub report: ConvergenceReport,
    pub residual: T,
    pub ranking: Ranking<T>,
}

/// DF matrix, significance graph, propagation and ranking in one call.
pub fn analyze<T: Scalar>(netlist: &Netlist, opts: &RankOptions) -> Result<Analysis<T>, SerialError> {
    let df = procedure1_all::<T>(netlist, opts.eps1, opts.max_iters1)?;
    let graph = build_significance_graph(netlist, &df, &opts.pinned)?;
    let s_out = initial_output_significance(&graph, opts.weights);
    let (significance, report) = procedure2(&graph, &s_out, opts.eps2, opts.max_iters2)?;
    let residual = residual(&graph, &significance);
    let ranking = rank(&graph, &significance);
    Ok(Analysis { df, graph, significance, report, residual, ranking })
}
