use std::cmp::Ordering;

use thiserror::Error;

use super::SignificanceVector;
use crate::graphs::SignificanceGraph;
use crate::netlist::{Netlist, NodeKind, NodeRef};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct RankEntry<T> {
    pub node: NodeRef,
    pub name: String,
    pub significance: T,
}

/// Flip-flops and inputs in descending significance, ties broken by name.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking<T> {
    pub entries: Vec<RankEntry<T>>,
}

#[derive(Debug, Error)]
pub enum RankingError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("ranking names unknown {kind} `{name}`")]
    UnknownNode { kind: &'static str, name: String },
}

/// Sorts all flip-flops and input ports by significance.
pub fn rank<T: Scalar>(graph: &SignificanceGraph<T>, s: &SignificanceVector<T>) -> Ranking<T> {
    let mut entries: Vec<RankEntry<T>> = graph
        .flip_flop_range()
        .chain(graph.input_range())
        .map(|i| RankEntry { node: graph.node(i).node, name: graph.node(i).name.clone(), significance: s.values[i].clone() })
        .collect();
    entries.sort_by(|a, b| {
        b.significance
            .partial_cmp(&a.significance)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.name.cmp(&b.name))
            .then_with(|| a.node.kind().cmp(&b.node.kind()))
    });
    Ranking { entries }
}

impl<T: Scalar> Ranking<T> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Node order, for order comparisons.
    pub fn order(&self) -> Vec<NodeRef> {
        self.entries.iter().map(|e| e.node).collect()
    }

    /// `(rank, flip-flop index)` for flip-flops only, rank 1-based over the
    /// whole ranking.
    pub fn flip_flops(&self) -> Vec<(usize, usize)> {
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(pos, e)| match e.node {
                NodeRef::FlipFlop(f) => Some((pos + 1, f)),
                _ => None,
            })
            .collect()
    }

    /// `rank,node,kind,significance`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("rank,node,kind,significance\n");
        for (pos, e) in self.entries.iter().enumerate() {
            s.push_str(&format!("{},{},{},{}\n", pos + 1, e.name, e.node.kind().as_str(), e.significance.to_f64_lossy()));
        }
        s
    }
}

impl Ranking<f64> {
    /// Reads a ranking written by [`Ranking::to_csv`], resolving names
    /// against `netlist`. Rows keep file order.
    pub fn from_csv(text: &str, netlist: &Netlist) -> Result<Self, RankingError> {
        let mut entries = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.trim();
            if line.is_empty() || (idx == 0 && line.starts_with("rank")) {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(RankingError::Parse { line: line_no, reason: "expected 4 fields".into() });
            }
            let (name, kind) = (fields[1], fields[2]);
            let significance: f64 = fields[3]
                .parse()
                .map_err(|_| RankingError::Parse { line: line_no, reason: format!("bad significance `{}`", fields[3]) })?;
            let node = match kind {
                k if k == NodeKind::FlipFlop.as_str() => netlist
                    .flip_flop_by_name(name)
                    .map(NodeRef::FlipFlop)
                    .ok_or(RankingError::UnknownNode { kind: "flip-flop", name: name.into() })?,
                k if k == NodeKind::Input.as_str() => netlist
                    .input_by_name(name)
                    .map(NodeRef::Input)
                    .ok_or(RankingError::UnknownNode { kind: "input", name: name.into() })?,
                other => return Err(RankingError::Parse { line: line_no, reason: format!("unknown kind `{other}`") }),
            };
            entries.push(RankEntry { node, name: name.to_string(), significance });
        }
        Ok(Ranking { entries })
    }
}
