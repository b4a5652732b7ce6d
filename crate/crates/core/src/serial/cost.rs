use serde::Serialize;

use crate::netlist::NetlistStats;

/// Unitless runtime estimates of the two procedures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostEstimate {
    /// `#nodes * iter1 * degree_node^2`
    pub t1_units: f64,
    /// `iter2 * #nodes * degree_node`
    pub t2_units: f64,
}

/// DF computation visits about `degree_node^2` gates per node and
/// iteration; one propagation sweep touches `degree_node` arrows per node.
pub fn estimate_cost(stats: &NetlistStats, iter1: f64, iter2: f64) -> CostEstimate {
    let nodes = stats.node_count as f64;
    let d = stats.degree_node;
    CostEstimate { t1_units: nodes * iter1 * d * d, t2_units: iter2 * nodes * d }
}
