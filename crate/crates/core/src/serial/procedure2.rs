use std::collections::VecDeque;

use serde::Serialize;

use super::{ConvergenceReport, SerialError};
use crate::graphs::SignificanceGraph;
use crate::netlist::NodeKind;
use crate::scalar::{relative_change, Scalar};

/// Significance of every node, indexed like the graph's nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SignificanceVector<T> {
    pub values: Vec<T>,
    outputs: usize,
    flip_flops: usize,
}

impl<T: Scalar> SignificanceVector<T> {
    pub(crate) fn new(values: Vec<T>, outputs: usize, flip_flops: usize) -> Self {
        SignificanceVector { values, outputs, flip_flops }
    }

    pub fn get(&self, node: usize) -> &T {
        &self.values[node]
    }

    pub fn outputs(&self) -> &[T] {
        &self.values[..self.outputs]
    }

    pub fn flip_flops(&self) -> &[T] {
        &self.values[self.outputs..self.outputs + self.flip_flops]
    }

    pub fn inputs(&self) -> &[T] {
        &self.values[self.outputs + self.flip_flops..]
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(Scalar::to_f64_lossy).collect()
    }

    /// Largest significance over all nodes.
    pub fn max(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| if *v > m { v.clone() } else { m })
    }
}

/// How output significances are initialised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputWeights {
    /// Every output gets 1.
    #[default]
    Uniform,
    /// Output bit `i` of a bus gets `2^i`; non-bus outputs get 1.
    Pow2,
}

/// Bus bit index encoded in an output name: `sum[3]`, `sum_3` or `sum.3`.
pub fn output_bit_index(name: &str) -> Option<u32> {
    let digits = if let Some(inner) = name.strip_suffix(']') {
        let open = inner.rfind('[')?;
        &inner[open + 1..]
    } else {
        let cut = name.rfind(['_', '.'])?;
        if cut == 0 {
            return None;
        }
        &name[cut + 1..]
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// Initial significances of the graph's outputs, in node order.
pub fn initial_output_significance<T: Scalar>(graph: &SignificanceGraph<T>, weights: OutputWeights) -> Vec<T> {
    graph
        .output_range()
        .map(|i| match weights {
            OutputWeights::Uniform => T::one(),
            OutputWeights::Pow2 => match output_bit_index(&graph.node(i).name) {
                Some(bit) => (0..bit).fold(T::one(), |acc, _| acc * (T::one() + T::one())),
                None => T::one(),
            },
        })
        .collect()
}

/// Iterative state of the significance propagation.
///
/// Outputs keep their initial significance; every other node starts at 0.
/// A tail absorbs `confidence * delta` of each update on an incoming arrow.
#[derive(Debug, Clone)]
pub struct SignificancePropagator<'g, T> {
    graph: &'g SignificanceGraph<T>,
    s: Vec<T>,
    dw: Vec<Vec<T>>,
    trace: Vec<f64>,
}

impl<'g, T: Scalar> SignificancePropagator<'g, T> {
    pub fn new(graph: &'g SignificanceGraph<T>, s_out_init: &[T]) -> Result<Self, SerialError> {
        if s_out_init.len() != graph.output_count() {
            return Err(SerialError::OutputCount { expected: graph.output_count(), got: s_out_init.len() });
        }
        let mut s = vec![T::zero(); graph.node_count()];
        s[..s_out_init.len()].clone_from_slice(s_out_init);
        let dw = (0..graph.node_count()).map(|h| vec![T::zero(); graph.arrows(h).len()]).collect();
        Ok(SignificancePropagator { graph, s, dw, trace: Vec::new() })
    }

    /// One breadth-first sweep starting from all outputs; returns ε₂.
    pub fn step(&mut self) -> f64 {
        let g = self.graph;
        let mut visited = vec![false; g.node_count()];
        let mut queue: VecDeque<usize> = g.output_range().collect();
        for i in g.output_range() {
            visited[i] = true;
        }
        while let Some(head) = queue.pop_front() {
            let s_head = self.s[head].clone();
            for (k, arrow) in g.arrows(head).iter().enumerate() {
                let target = s_head.clone() * arrow.df.clone();
                let delta = target.clone() - self.dw[head][k].clone();
                self.dw[head][k] = target;
                if !delta.is_zero() {
                    self.s[arrow.tail] = self.s[arrow.tail].clone() + arrow.confidence.clone() * delta;
                }
                if g.kind(arrow.tail) != NodeKind::Input && !visited[arrow.tail] {
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
                let pending = self.s[head].clone() * arrow.df.clone() - self.dw[head][k].clone();
                worst = worst.max(relative_change(&pending, &self.dw[head][k]));
            }
        }
        worst
    }

    pub fn s(&self, node: usize) -> &T {
        &self.s[node]
    }

    pub fn dw(&self, head: usize) -> &[T] {
        &self.dw[head]
    }

    pub fn trace(&self) -> &[f64] {
        &self.trace
    }

    pub fn significance(&self) -> SignificanceVector<T> {
        SignificanceVector::new(self.s.clone(), self.graph.output_count(), self.graph.flip_flop_count())
    }
}

/// Propagates output significance through the graph until ε₂ ≤
/// `eps_threshold`.
pub fn procedure2<T: Scalar>(
    graph: &SignificanceGraph<T>,
    s_out_init: &[T],
    eps_threshold: f64,
    max_iters: usize,
) -> Result<(SignificanceVector<T>, ConvergenceReport), SerialError> {
    let mut prop = SignificancePropagator::new(graph, s_out_init)?;
    let mut converged = false;
    while prop.trace.len() < max_iters {
        if prop.step() <= eps_threshold {
            converged = true;
            break;
        }
    }
    let report = ConvergenceReport { iterations: prop.trace.len(), eps_trace: prop.trace.clone(), converged };
    if !converged {
        return Err(SerialError::NonConvergence { context: "significance propagation".into(), report });
    }
    Ok((prop.significance(), report))
}
