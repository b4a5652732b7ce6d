//! Logic graphs (one per endpoint) and the significance graph.
//!
//! Both graphs point against the signal flow: arrows go from a consumer to
//! the nodes that feed it, which is the direction significance travels.

use std::collections::{BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::netlist::{Driver, Netlist, NetlistError, NodeKind, NodeRef};
use crate::scalar::Scalar;
use crate::serial::ConvergenceReport;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("node `{0}` has no fan-in cone")]
    EmptyCone(String),
    #[error("invalid arrow {head} -> {tail}: {reason}")]
    InvalidArrow { head: String, tail: String, reason: &'static str },
    #[error("node `{0}` appears twice")]
    DuplicateNode(String),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogicNode {
    /// The endpoint whose DF row is being computed.
    Source(NodeRef),
    /// Index into [`Netlist::gates`].
    Gate(usize),
    /// A flip-flop output or input port terminating the cone.
    Sink(NodeRef),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogicArrow<T> {
    pub tail: usize,
    pub ldf: T,
}

/// Reversed fan-in cone of one endpoint. Node 0 is the source.
#[derive(Debug, Clone)]
pub struct LogicGraph<T> {
    endpoint: NodeRef,
    nodes: Vec<LogicNode>,
    names: Vec<String>,
    arrows: Vec<Vec<LogicArrow<T>>>,
}

impl<T: Scalar> LogicGraph<T> {
    pub fn endpoint(&self) -> NodeRef {
        self.endpoint
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, i: usize) -> LogicNode {
        self.nodes[i]
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    /// Local index of the node with the given name (gate output net or
    /// sink name).
    pub fn find(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn arrows(&self, head: usize) -> &[LogicArrow<T>] {
        &self.arrows[head]
    }

    pub fn arrow_count(&self) -> usize {
        self.arrows.iter().map(Vec::len).sum()
    }

    pub fn gate_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, LogicNode::Gate(_))).count()
    }

    pub fn is_gate(&self, i: usize) -> bool {
        matches!(self.nodes[i], LogicNode::Gate(_))
    }

    /// Local indices of the sink nodes.
    pub fn sinks(&self) -> impl Iterator<Item = (usize, NodeRef)> + '_ {
        self.nodes.iter().enumerate().filter_map(|(i, n)| match n {
            LogicNode::Sink(r) => Some((i, *r)),
            _ => None,
        })
    }

    /// Largest number of gates on a source-to-sink path.
    pub fn gate_depth(&self) -> usize {
        let n = self.nodes.len();
        let mut indegree = vec![0usize; n];
        for out in &self.arrows {
            for a in out {
                indegree[a.tail] += 1;
            }
        }
        // longest path in gates, Kahn order from the source
        let mut depth = vec![0usize; n];
        let mut ready = vec![0usize];
        let mut best = 0;
        while let Some(v) = ready.pop() {
            let here = depth[v] + usize::from(self.is_gate(v));
            best = best.max(here);
            for a in &self.arrows[v] {
                depth[a.tail] = depth[a.tail].max(here);
                indegree[a.tail] -= 1;
                if indegree[a.tail] == 0 {
                    ready.push(a.tail);
                }
            }
        }
        best
    }
}

/// Extracts the reversed fan-in cone of `endpoint`.
///
/// Each gate pin becomes one arrow labelled with the pin's ldf. Pins with
/// zero ldf are dropped. Arrows of every node are ordered by tail name.
pub fn build_logic_graph<T: Scalar>(netlist: &Netlist, endpoint: NodeRef) -> Result<LogicGraph<T>, GraphError> {
    if endpoint.kind() == NodeKind::Input {
        return Err(GraphError::EmptyCone(netlist.node_name(endpoint).to_string()));
    }
    let mut nodes = vec![LogicNode::Source(endpoint)];
    let mut names = vec![netlist.node_name(endpoint).to_string()];
    let mut arrows: Vec<Vec<LogicArrow<T>>> = vec![Vec::new()];
    let mut gate_local: HashMap<usize, usize> = HashMap::new();
    let mut sink_local: HashMap<NodeRef, usize> = HashMap::new();
    let mut queue = VecDeque::new();

    let mut local_for = |net: usize,
                         nodes: &mut Vec<LogicNode>,
                         names: &mut Vec<String>,
                         arrows: &mut Vec<Vec<LogicArrow<T>>>,
                         queue: &mut VecDeque<(usize, usize)>|
     -> usize {
        match netlist.driver(net) {
            Driver::Gate(g) => *gate_local.entry(g).or_insert_with(|| {
                nodes.push(LogicNode::Gate(g));
                names.push(netlist.gate_name(g).to_string());
                arrows.push(Vec::new());
                queue.push_back((g, nodes.len() - 1));
                nodes.len() - 1
            }),
            _ => {
                let r = netlist.source_node(net).expect("non-gate driver");
                *sink_local.entry(r).or_insert_with(|| {
                    nodes.push(LogicNode::Sink(r));
                    names.push(netlist.node_name(r).to_string());
                    arrows.push(Vec::new());
                    nodes.len() - 1
                })
            }
        }
    };

    let first = local_for(netlist.data_net(endpoint), &mut nodes, &mut names, &mut arrows, &mut queue);
    arrows[0].push(LogicArrow { tail: first, ldf: T::one() });
    while let Some((g, head)) = queue.pop_front() {
        let gate = &netlist.gates()[g];
        let inf = gate.kind.influence(gate.inputs.len());
        for (pin, &net) in gate.inputs.iter().enumerate() {
            if *inf.ldf[pin].numer() == 0 {
                continue;
            }
            let tail = local_for(net, &mut nodes, &mut names, &mut arrows, &mut queue);
            arrows[head].push(LogicArrow { tail, ldf: T::from_ratio(&inf.ldf[pin]) });
        }
    }
    for out in &mut arrows {
        out.sort_by(|a, b| names[a.tail].cmp(&names[b.tail]).then(nodes_order(&nodes[a.tail], &nodes[b.tail])));
    }
    Ok(LogicGraph { endpoint, nodes, names, arrows })
}

fn nodes_order(a: &LogicNode, b: &LogicNode) -> std::cmp::Ordering {
    let key = |n: &LogicNode| match n {
        LogicNode::Source(_) => 0,
        LogicNode::Gate(_) => 1,
        LogicNode::Sink(r) => 2 + r.kind() as u8,
    };
    key(a).cmp(&key(b))
}

/// Distribution factors of one endpoint: `(tail, df)`, zero entries omitted.
#[derive(Debug, Clone, PartialEq)]
pub struct DfRow<T> {
    pub endpoint: NodeRef,
    pub entries: Vec<(NodeRef, T)>,
}

impl<T: Scalar> DfRow<T> {
    pub fn get(&self, tail: NodeRef) -> T {
        self.entries.iter().find(|(n, _)| *n == tail).map(|(_, v)| v.clone()).unwrap_or_else(T::zero)
    }

    pub fn sum(&self) -> T {
        self.entries.iter().fold(T::zero(), |acc, (_, v)| acc + v.clone())
    }
}

/// The DF transfer matrix, stored per head (column) in
/// [`Netlist::endpoints`] order, together with each column's
/// convergence report.
#[derive(Debug, Clone)]
pub struct DfMatrix<T> {
    pub rows: Vec<DfRow<T>>,
    pub reports: Vec<ConvergenceReport>,
}

impl<T: Scalar> DfMatrix<T> {
    pub fn row(&self, endpoint: NodeRef) -> Option<&DfRow<T>> {
        self.rows.iter().find(|r| r.endpoint == endpoint)
    }

    /// Sum of distribution factors leaving each head.
    pub fn column_sums(&self) -> Vec<T> {
        self.rows.iter().map(DfRow::sum).collect()
    }

    pub fn nonzero_count(&self) -> usize {
        self.rows.iter().map(|r| r.entries.len()).sum()
    }

    /// Sparse dump, `head,tail,df` with heads in endpoint order.
    pub fn to_csv(&self, netlist: &Netlist) -> String {
        let mut s = String::from("head,tail,df\n");
        for row in &self.rows {
            for (tail, v) in &row.entries {
                s.push_str(&format!(
                    "{},{},{}\n",
                    netlist.node_name(row.endpoint),
                    netlist.node_name(*tail),
                    v.to_f64_lossy()
                ));
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigNode {
    pub node: NodeRef,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigArrow<T> {
    pub tail: usize,
    pub df: T,
    /// Fraction of the distributed significance the tail absorbs.
    pub confidence: T,
}

/// Significance graph over outputs (sources), flip-flops (internal) and
/// inputs (sinks).
///
/// Nodes are indexed outputs first, then flip-flops, then inputs; each class
/// is sorted by name. Arrows of every head are sorted by tail name.
#[derive(Debug, Clone)]
pub struct SignificanceGraph<T> {
    nodes: Vec<SigNode>,
    index: HashMap<NodeRef, usize>,
    outputs: usize,
    flip_flops: usize,
    arrows: Vec<Vec<SigArrow<T>>>,
}

impl<T: Scalar> SignificanceGraph<T> {
    /// Builds a graph from explicit nodes and `(head, tail, df, confidence)`
    /// arrows.
    pub fn from_parts(mut nodes: Vec<SigNode>, arrows: Vec<(NodeRef, NodeRef, T, T)>) -> Result<Self, GraphError> {
        nodes.sort_by(|a, b| a.node.kind().cmp(&b.node.kind()).then_with(|| a.name.cmp(&b.name)).then(a.node.cmp(&b.node)));
        let mut index = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.node, i).is_some() {
                return Err(GraphError::DuplicateNode(n.name.clone()));
            }
        }
        let count = |k: NodeKind| nodes.iter().filter(|n| n.node.kind() == k).count();
        let outputs = count(NodeKind::Output);
        let flip_flops = count(NodeKind::FlipFlop);
        let mut out: Vec<Vec<SigArrow<T>>> = vec![Vec::new(); nodes.len()];
        let mut seen = BTreeSet::new();
        for (head, tail, df, confidence) in arrows {
            let bad = |reason| {
                let name = |r: NodeRef| format!("{r:?}");
                GraphError::InvalidArrow { head: name(head), tail: name(tail), reason }
            };
            let (&h, &t) = match (index.get(&head), index.get(&tail)) {
                (Some(h), Some(t)) => (h, t),
                _ => return Err(bad("unknown node")),
            };
            if head.kind() == NodeKind::Input {
                return Err(bad("inputs have no outgoing arrows"));
            }
            if tail.kind() == NodeKind::Output {
                return Err(bad("outputs have no incoming arrows"));
            }
            if !seen.insert((h, t)) {
                return Err(bad("duplicate arrow"));
            }
            if df.is_zero() {
                continue;
            }
            out[h].push(SigArrow { tail: t, df, confidence });
        }
        for list in &mut out {
            list.sort_by(|a, b| nodes[a.tail].name.cmp(&nodes[b.tail].name).then(a.tail.cmp(&b.tail)));
        }
        Ok(SignificanceGraph { nodes, index, outputs, flip_flops, arrows: out })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn output_count(&self) -> usize {
        self.outputs
    }

    pub fn flip_flop_count(&self) -> usize {
        self.flip_flops
    }

    pub fn input_count(&self) -> usize {
        self.nodes.len() - self.outputs - self.flip_flops
    }

    pub fn node(&self, i: usize) -> &SigNode {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> &[SigNode] {
        &self.nodes
    }

    pub fn kind(&self, i: usize) -> NodeKind {
        self.nodes[i].node.kind()
    }

    pub fn index_of(&self, node: NodeRef) -> Option<usize> {
        self.index.get(&node).copied()
    }

    /// Index of the node with the given name and kind.
    pub fn find(&self, name: &str, kind: NodeKind) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name && n.node.kind() == kind)
    }

    pub fn arrows(&self, head: usize) -> &[SigArrow<T>] {
        &self.arrows[head]
    }

    pub fn arrow_count(&self) -> usize {
        self.arrows.iter().map(Vec::len).sum()
    }

    /// Index range of the output (source) nodes.
    pub fn output_range(&self) -> std::ops::Range<usize> {
        0..self.outputs
    }

    pub fn flip_flop_range(&self) -> std::ops::Range<usize> {
        self.outputs..self.outputs + self.flip_flops
    }

    pub fn input_range(&self) -> std::ops::Range<usize> {
        self.outputs + self.flip_flops..self.nodes.len()
    }

    /// Mean number of tails per output or flip-flop.
    pub fn degree_node(&self) -> f64 {
        let heads = self.outputs + self.flip_flops;
        if heads == 0 {
            0.0
        } else {
            self.arrow_count() as f64 / heads as f64
        }
    }

    /// Sum of outgoing df for every node.
    pub fn outgoing_df_sums(&self) -> Vec<T> {
        self.arrows.iter().map(|a| a.iter().fold(T::zero(), |acc, x| acc + x.df.clone())).collect()
    }
}

/// Assembles the significance graph of `netlist` from its DF matrix.
///
/// Arrows into the inputs named in `hardened` (clock, reset) get
/// confidence 0; all other arrows get confidence 1.
pub fn build_significance_graph<T: Scalar, S: AsRef<str>>(
    netlist: &Netlist,
    df: &DfMatrix<T>,
    hardened: &[S],
) -> Result<SignificanceGraph<T>, GraphError> {
    let hardened = netlist.resolve_inputs(hardened)?;
    let nodes = (0..netlist.outputs().len())
        .map(NodeRef::Output)
        .chain((0..netlist.flip_flops().len()).map(NodeRef::FlipFlop))
        .chain((0..netlist.inputs().len()).map(NodeRef::Input))
        .map(|node| SigNode { node, name: netlist.node_name(node).to_string() })
        .collect();
    let mut arrows = Vec::with_capacity(df.nonzero_count());
    for row in &df.rows {
        for (tail, v) in &row.entries {
            let confidence = match tail {
                NodeRef::Input(i) if hardened.contains(i) => T::zero(),
                _ => T::one(),
            };
            arrows.push((row.endpoint, *tail, v.clone(), confidence));
        }
    }
    SignificanceGraph::from_parts(nodes, arrows)
}
