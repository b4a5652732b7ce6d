use std::collections::VecDeque;

use rayon::prelude::*;

use super::{ConvergenceReport, SerialError};
use crate::graphs::{build_logic_graph, DfMatrix, DfRow, LogicGraph};
use crate::netlist::{Netlist, NodeRef};
use crate::scalar::{relative_change, Scalar};

/// Iterative state of the DF computation on one logic graph.
///
/// The source starts with logic significance 1, every other node with 0 and
/// all arrow weights with 0.
#[derive(Debug, Clone)]
pub struct DfPropagator<'g, T> {
    graph: &'g LogicGraph<T>,
    ls: Vec<T>,
    ldw: Vec<Vec<T>>,
    trace: Vec<f64>,
}

impl<'g, T: Scalar> DfPropagator<'g, T> {
    pub fn new(graph: &'g LogicGraph<T>) -> Self {
        let mut ls = vec![T::zero(); graph.node_count()];
        ls[0] = T::one();
        let ldw = (0..graph.node_count()).map(|h| vec![T::zero(); graph.arrows(h).len()]).collect();
        DfPropagator { graph, ls, ldw, trace: Vec::new() }
    }

    /// One breadth-first sweep from the source; returns ε₁ after the sweep.
    pub fn step(&mut self) -> f64 {
        let g = self.graph;
        let mut visited = vec![false; g.node_count()];
        let mut queue = VecDeque::from([0usize]);
        visited[0] = true;
        while let Some(head) = queue.pop_front() {
            let ls_head = self.ls[head].clone();
            for (k, arrow) in g.arrows(head).iter().enumerate() {
                let target = ls_head.clone() * arrow.ldf.clone();
                let delta = target.clone() - self.ldw[head][k].clone();
                self.ldw[head][k] = target;
                if !delta.is_zero() {
                    self.ls[arrow.tail] = self.ls[arrow.tail].clone() + delta;
                }
                if g.is_gate(arrow.tail) && !visited[arrow.tail] {
                    visited[arrow.tail] = true;
                    queue.push_back(arrow.tail);
                }
            }
        }
        let eps = self.mismatch();
        self.trace.push(eps);
        eps
    }

    /// Largest pending relative weight change over all arrows.
    pub fn mismatch(&self) -> f64 {
        let g = self.graph;
        let mut worst = 0.0f64;
        for head in 0..g.node_count() {
            for (k, arrow) in g.arrows(head).iter().enumerate() {
                let pending = self.ls[head].clone() * arrow.ldf.clone() - self.ldw[head][k].clone();
                worst = worst.max(relative_change(&pending, &self.ldw[head][k]));
            }
        }
        worst
    }

    pub fn ls(&self, node: usize) -> &T {
        &self.ls[node]
    }

    /// Weights currently stored on the arrows leaving `head`.
    pub fn ldw(&self, head: usize) -> &[T] {
        &self.ldw[head]
    }

    pub fn trace(&self) -> &[f64] {
        &self.trace
    }

    /// Current DF row: the logic significance collected at each sink.
    pub fn row(&self) -> DfRow<T> {
        let g = self.graph;
        let mut entries: Vec<(usize, NodeRef, T)> = g
            .sinks()
            .filter(|(i, _)| !self.ls[*i].is_zero())
            .map(|(i, r)| (i, r, self.ls[i].clone()))
            .collect();
        entries.sort_by(|a, b| g.name(a.0).cmp(g.name(b.0)).then(a.1.cmp(&b.1)));
        DfRow { endpoint: g.endpoint(), entries: entries.into_iter().map(|(_, r, v)| (r, v)).collect() }
    }
}

/// Computes the DF row of one endpoint from its logic graph.
///
/// Iterates until ε₁ ≤ `eps_threshold`. On an acyclic cone the weights stop
/// changing after at most `max(1, gate depth)` sweeps, at which point ε₁ is
/// exactly 0.
pub fn procedure1<T: Scalar>(
    graph: &LogicGraph<T>,
    eps_threshold: f64,
    max_iters: usize,
) -> Result<(DfRow<T>, ConvergenceReport), SerialError> {
    let mut prop = DfPropagator::new(graph);
    let mut converged = false;
    while prop.trace.len() < max_iters {
        if prop.step() <= eps_threshold {
            converged = true;
            break;
        }
    }
    let report = ConvergenceReport { iterations: prop.trace.len(), eps_trace: prop.trace.clone(), converged };
    if !converged {
        return Err(SerialError::NonConvergence { context: format!("DF of node {:?}", graph.endpoint()), report });
    }
    Ok((prop.row(), report))
}

/// Runs [`procedure1`] for every output and flip-flop of `netlist`.
///
/// Endpoints are processed in parallel on the current rayon pool; the result
/// is ordered like [`Netlist::endpoints`] regardless of scheduling.
pub fn procedure1_all<T: Scalar>(netlist: &Netlist, eps_threshold: f64, max_iters: usize) -> Result<DfMatrix<T>, SerialError> {
    let endpoints: Vec<NodeRef> = netlist.endpoints().collect();
    let results: Vec<Result<(DfRow<T>, ConvergenceReport), SerialError>> = endpoints
        .par_iter()
        .map(|&e| {
            let graph = build_logic_graph::<T>(netlist, e)?;
            procedure1(&graph, eps_threshold, max_iters)
        })
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    let mut reports = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (e, r) in endpoints.iter().zip(results) {
        match r {
            Ok((row, rep)) => {
                rows.push(row);
                reports.push(rep);
            }
            Err(err) => failures.push((netlist.node_name(*e).to_string(), err)),
        }
    }
    if failures.is_empty() {
        Ok(DfMatrix { rows, reports })
    } else if failures.len() == 1 {
        Err(failures.pop().expect("one failure").1)
    } else {
        Err(SerialError::Endpoints(failures))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_bench;

    #[test]
    fn wire_cone_converges_in_one_sweep() {
        let n = parse_bench("INPUT(a)\nOUTPUT(q2)\nq1 = DFF(a)\nq2 = DFF(q1)").unwrap();
        let g = build_logic_graph::<f64>(&n, NodeRef::FlipFlop(1)).unwrap();
        let (row, rep) = procedure1(&g, 0.0, 10).unwrap();
        assert_eq!(row.entries, vec![(NodeRef::FlipFlop(0), 1.0)]);
        assert_eq!(rep.iterations, 1);
        assert_eq!(rep.eps_trace, vec![0.0]);
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        // reconvergent cone needs two sweeps
        let n = parse_bench(
            "INPUT(a)\nINPUT(b)\nOUTPUT(z)\nj = AND(a, b)\nk = AND(j, a)\ni = AND(j, k)\nz = AND(i, b)",
        )
        .unwrap();
        let g = build_logic_graph::<f64>(&n, NodeRef::Output(0)).unwrap();
        let err = procedure1(&g, 0.0, 1).unwrap_err();
        assert!(err.is_non_convergence());
        let (_, rep) = procedure1(&g, 0.0, 10).unwrap();
        assert_eq!(rep.iterations, 2);
    }
}
