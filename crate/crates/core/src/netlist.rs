//! Structural gate-level netlists with D flip-flops.
//!
//! Netlists are read from an ISCAS-style `.bench` dialect:
//!
//! ```text
//! INPUT(a)
//! OUTPUT(z)
//! q = DFF(d)
//! z = AND(a, q)
//! ```
//!
//! Fan-out is implicit (a net name may be read any number of times). Gates
//! outside the built-in set come from a JSON gate library, see
//! [`GateLibrary`].

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;
use serde::Deserialize;
use thiserror::Error;

use crate::influence::{self, InfluenceVector, TruthTable, TruthTableError};

pub type NetId = usize;

/// Fan-in limit for the built-in gate kinds (raw influence is kept exact in `u64`).
pub const MAX_BUILTIN_FANIN: usize = 64;

#[derive(Debug, Error)]
pub enum NetlistError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("combinational cycle through gates {0:?}")]
    Cycle(Vec<String>),
    #[error("net `{0}` is read but never driven")]
    DanglingNet(String),
    #[error("gate library: {0}")]
    Library(String),
    #[error("unknown input port `{0}`")]
    UnknownInput(String),
}

fn parse_err(line: usize, reason: impl Into<String>) -> NetlistError {
    NetlistError::Parse { line, reason: reason.into() }
}

/// A truth-table gate from a gate library.
#[derive(Debug, PartialEq, Eq)]
pub struct CustomGate {
    pub name: String,
    pub table: TruthTable,
    influence: InfluenceVector,
}

impl CustomGate {
    pub fn new(name: impl Into<String>, table: TruthTable) -> Self {
        let influence = influence::influence(&table);
        CustomGate { name: name.into(), table, influence }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GateKind {
    And,
    Nand,
    Or,
    Nor,
    Xor,
    Xnor,
    Not,
    Buf,
    /// `MUX(select, in0, in1)`: `in0` when select is 0.
    Mux,
    Custom(Arc<CustomGate>),
}

impl GateKind {
    pub const BUILTIN: [GateKind; 9] = [
        GateKind::And,
        GateKind::Nand,
        GateKind::Or,
        GateKind::Nor,
        GateKind::Xor,
        GateKind::Xnor,
        GateKind::Not,
        GateKind::Buf,
        GateKind::Mux,
    ];

    pub fn name(&self) -> &str {
        match self {
            GateKind::And => "AND",
            GateKind::Nand => "NAND",
            GateKind::Or => "OR",
            GateKind::Nor => "NOR",
            GateKind::Xor => "XOR",
            GateKind::Xnor => "XNOR",
            GateKind::Not => "NOT",
            GateKind::Buf => "BUF",
            GateKind::Mux => "MUX",
            GateKind::Custom(g) => &g.name,
        }
    }

    pub fn from_builtin_name(name: &str) -> Option<GateKind> {
        Some(match name.to_ascii_uppercase().as_str() {
            "AND" => GateKind::And,
            "NAND" => GateKind::Nand,
            "OR" => GateKind::Or,
            "NOR" => GateKind::Nor,
            "XOR" => GateKind::Xor,
            "XNOR" => GateKind::Xnor,
            "NOT" | "INV" => GateKind::Not,
            "BUF" | "BUFF" => GateKind::Buf,
            "MUX" => GateKind::Mux,
            _ => return None,
        })
    }

    /// Checks the fan-in against the kind's arity rule.
    pub fn check_fanin(&self, fanin: usize) -> Result<(), String> {
        let ok = match self {
            GateKind::Not | GateKind::Buf => fanin == 1,
            GateKind::Mux => fanin == 3,
            GateKind::Custom(g) => fanin == g.table.fanin(),
            _ => (1..=MAX_BUILTIN_FANIN).contains(&fanin),
        };
        if ok {
            Ok(())
        } else {
            Err(format!("{} gate cannot take {} input(s)", self.name(), fanin))
        }
    }

    /// True when all inputs of the gate are interchangeable.
    pub fn is_symmetric(&self) -> bool {
        !matches!(self, GateKind::Mux | GateKind::Custom(_))
    }

    /// Influence vector for a gate of this kind with `fanin` inputs.
    ///
    /// Built-in kinds use closed forms; library gates use the exhaustive
    /// result computed when the gate was loaded.
    pub fn influence(&self, fanin: usize) -> InfluenceVector {
        match self {
            GateKind::And | GateKind::Nand | GateKind::Or | GateKind::Nor => {
                // toggling one input matters only when all others are at the
                // non-controlling value: 2 of 2^n rows
                influence::uniform_influence(fanin, Ratio::new(1, 1u64 << (fanin - 1)))
            }
            GateKind::Xor | GateKind::Xnor | GateKind::Not | GateKind::Buf => {
                influence::uniform_influence(fanin, Ratio::from_integer(1))
            }
            GateKind::Mux => InfluenceVector {
                raw: vec![Ratio::new(1, 2); 3],
                ldf: vec![Ratio::new(1, 3); 3],
            },
            GateKind::Custom(g) => g.influence.clone(),
        }
    }

    /// Truth table of this kind at the given fan-in.
    pub fn truth_table(&self, fanin: usize) -> Result<TruthTable, TruthTableError> {
        match self {
            GateKind::Custom(g) => Ok(g.table.clone()),
            kind => TruthTable::from_fn(fanin, |a| kind.eval(a)),
        }
    }

    /// Evaluates the gate on Boolean arguments.
    pub fn eval(&self, args: &[bool]) -> bool {
        match self {
            GateKind::And => args.iter().all(|&a| a),
            GateKind::Nand => !args.iter().all(|&a| a),
            GateKind::Or => args.iter().any(|&a| a),
            GateKind::Nor => !args.iter().any(|&a| a),
            GateKind::Xor => args.iter().fold(false, |acc, &a| acc ^ a),
            GateKind::Xnor => !args.iter().fold(false, |acc, &a| acc ^ a),
            GateKind::Not => !args[0],
            GateKind::Buf => args[0],
            GateKind::Mux => {
                if args[0] {
                    args[2]
                } else {
                    args[1]
                }
            }
            GateKind::Custom(g) => g.table.eval(args),
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Deserialize)]
struct LibraryEntry {
    name: String,
    inputs: usize,
    truth_table: String,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum LibraryFile {
    Many(Vec<LibraryEntry>),
    Wrapped { gates: Vec<LibraryEntry> },
    One(LibraryEntry),
}

/// Set of named truth-table gates usable in `.bench` files.
#[derive(Debug, Default, Clone)]
pub struct GateLibrary {
    gates: HashMap<String, Arc<CustomGate>>,
}

impl GateLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Loads a library from JSON: one gate object, an array of them, or
    /// `{"gates": [...]}`. Each gate is
    /// `{"name": "AOI21", "inputs": 3, "truth_table": "10101000"}`.
    pub fn from_json(text: &str) -> Result<Self, NetlistError> {
        let file: LibraryFile = serde_json::from_str(text).map_err(|e| NetlistError::Library(e.to_string()))?;
        let entries = match file {
            LibraryFile::Many(v) | LibraryFile::Wrapped { gates: v } => v,
            LibraryFile::One(e) => vec![e],
        };
        let mut lib = GateLibrary::new();
        for e in entries {
            let table = TruthTable::from_bitstring(e.inputs, &e.truth_table)
                .map_err(|err| NetlistError::Library(format!("gate `{}`: {err}", e.name)))?;
            lib.insert(CustomGate::new(e.name, table))?;
        }
        Ok(lib)
    }

    pub fn insert(&mut self, gate: CustomGate) -> Result<(), NetlistError> {
        if !is_valid_name(&gate.name) {
            return Err(NetlistError::Library(format!("invalid gate name `{}`", gate.name)));
        }
        if GateKind::from_builtin_name(&gate.name).is_some() || gate.name.eq_ignore_ascii_case("DFF") {
            return Err(NetlistError::Library(format!("`{}` shadows a built-in kind", gate.name)));
        }
        if self.gates.contains_key(&gate.name) {
            return Err(NetlistError::Library(format!("duplicate gate `{}`", gate.name)));
        }
        self.gates.insert(gate.name.clone(), Arc::new(gate));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<GateKind> {
        self.gates.get(name).map(|g| GateKind::Custom(g.clone()))
    }

    /// Library gates sorted by name.
    pub fn gates(&self) -> Vec<Arc<CustomGate>> {
        let mut v: Vec<_> = self.gates.values().cloned().collect();
        v.sort_by(|a, b| a.name.cmp(&b.name));
        v
    }
}

#[derive(Debug, Clone)]
pub struct Gate {
    pub kind: GateKind,
    pub inputs: Vec<NetId>,
    pub output: NetId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlipFlop {
    pub d: NetId,
    pub q: NetId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Driver {
    Input(usize),
    Gate(usize),
    FlipFlop(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Output,
    #[serde(rename = "ff")]
    FlipFlop,
    Input,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Output => "output",
            NodeKind::FlipFlop => "ff",
            NodeKind::Input => "input",
        }
    }
}

/// An I/O port or flip-flop; the nodes of a significance graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeRef {
    Output(usize),
    FlipFlop(usize),
    Input(usize),
}

impl NodeRef {
    pub fn kind(self) -> NodeKind {
        match self {
            NodeRef::Output(_) => NodeKind::Output,
            NodeRef::FlipFlop(_) => NodeKind::FlipFlop,
            NodeRef::Input(_) => NodeKind::Input,
        }
    }
}

/// Validated netlist. Immutable once built.
#[derive(Debug, Clone)]
pub struct Netlist {
    nets: Vec<String>,
    net_ids: HashMap<String, NetId>,
    drivers: Vec<Driver>,
    inputs: Vec<NetId>,
    outputs: Vec<NetId>,
    gates: Vec<Gate>,
    flip_flops: Vec<FlipFlop>,
}

impl Netlist {
    pub fn net_name(&self, net: NetId) -> &str {
        &self.nets[net]
    }

    pub fn net_id(&self, name: &str) -> Option<NetId> {
        self.net_ids.get(name).copied()
    }

    pub fn net_count(&self) -> usize {
        self.nets.len()
    }

    pub fn driver(&self, net: NetId) -> Driver {
        self.drivers[net]
    }

    pub fn inputs(&self) -> &[NetId] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[NetId] {
        &self.outputs
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn flip_flops(&self) -> &[FlipFlop] {
        &self.flip_flops
    }

    pub fn gate_name(&self, gate: usize) -> &str {
        self.net_name(self.gates[gate].output)
    }

    pub fn node_name(&self, node: NodeRef) -> &str {
        match node {
            NodeRef::Output(i) => self.net_name(self.outputs[i]),
            NodeRef::FlipFlop(i) => self.net_name(self.flip_flops[i].q),
            NodeRef::Input(i) => self.net_name(self.inputs[i]),
        }
    }

    /// Net feeding an endpoint: the output port's net or a flip-flop's D.
    ///
    /// Panics for input nodes, which have no fan-in cone.
    pub fn data_net(&self, endpoint: NodeRef) -> NetId {
        match endpoint {
            NodeRef::Output(i) => self.outputs[i],
            NodeRef::FlipFlop(i) => self.flip_flops[i].d,
            NodeRef::Input(_) => panic!("input ports have no data cone"),
        }
    }

    /// Endpoints with a fan-in cone: outputs then flip-flops, in file order.
    pub fn endpoints(&self) -> impl Iterator<Item = NodeRef> + '_ {
        (0..self.outputs.len()).map(NodeRef::Output).chain((0..self.flip_flops.len()).map(NodeRef::FlipFlop))
    }

    pub fn flip_flop_by_name(&self, name: &str) -> Option<usize> {
        let net = self.net_id(name)?;
        match self.drivers[net] {
            Driver::FlipFlop(i) => Some(i),
            _ => None,
        }
    }

    pub fn input_by_name(&self, name: &str) -> Option<usize> {
        let net = self.net_id(name)?;
        match self.drivers[net] {
            Driver::Input(i) => Some(i),
            _ => None,
        }
    }

    /// Resolves input-port names (e.g. clock and reset) to input indices.
    pub fn resolve_inputs<S: AsRef<str>>(&self, names: &[S]) -> Result<BTreeSet<usize>, NetlistError> {
        names
            .iter()
            .map(|n| self.input_by_name(n.as_ref()).ok_or_else(|| NetlistError::UnknownInput(n.as_ref().to_string())))
            .collect()
    }

    /// Sink node reached when a cone traversal hits a non-gate driver.
    pub fn source_node(&self, net: NetId) -> Option<NodeRef> {
        match self.drivers[net] {
            Driver::Input(i) => Some(NodeRef::Input(i)),
            Driver::FlipFlop(i) => Some(NodeRef::FlipFlop(i)),
            Driver::Gate(_) => None,
        }
    }

    /// Writes the netlist back in `.bench` syntax.
    pub fn to_bench(&self) -> String {
        let mut s = String::new();
        for &i in &self.inputs {
            s.push_str(&format!("INPUT({})\n", self.nets[i]));
        }
        for &o in &self.outputs {
            s.push_str(&format!("OUTPUT({})\n", self.nets[o]));
        }
        for ff in &self.flip_flops {
            s.push_str(&format!("{} = DFF({})\n", self.nets[ff.q], self.nets[ff.d]));
        }
        for g in &self.gates {
            let args: Vec<&str> = g.inputs.iter().map(|&n| self.nets[n].as_str()).collect();
            s.push_str(&format!("{} = {}({})\n", self.nets[g.output], g.kind.name(), args.join(", ")));
        }
        s
    }

    /// Gate, node and connectivity counts.
    pub fn stats(&self) -> NetlistStats {
        let endpoints: Vec<NodeRef> = self.endpoints().collect();
        let adjacent: usize = endpoints.iter().map(|&e| self.cone_sinks(e).len()).sum();
        NetlistStats {
            gate_count: self.gates.len(),
            node_count: self.inputs.len() + self.outputs.len() + self.flip_flops.len(),
            degree_node: if endpoints.is_empty() { 0.0 } else { adjacent as f64 / endpoints.len() as f64 },
        }
    }

    /// Distinct flip-flops and inputs reachable from an endpoint through pins
    /// with non-zero ldf, i.e. its significance-graph neighbours.
    pub fn cone_sinks(&self, endpoint: NodeRef) -> BTreeSet<NodeRef> {
        let mut sinks = BTreeSet::new();
        let mut seen = vec![false; self.gates.len()];
        let mut stack = vec![self.data_net(endpoint)];
        while let Some(net) = stack.pop() {
            match self.drivers[net] {
                Driver::Gate(g) => {
                    if std::mem::replace(&mut seen[g], true) {
                        continue;
                    }
                    let gate = &self.gates[g];
                    let inf = gate.kind.influence(gate.inputs.len());
                    for (pin, &n) in gate.inputs.iter().enumerate() {
                        if *inf.ldf[pin].numer() != 0 {
                            stack.push(n);
                        }
                    }
                }
                _ => {
                    sinks.insert(self.source_node(net).expect("non-gate driver"));
                }
            }
        }
        sinks
    }
}

/// Size and connectivity figures of a netlist.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct NetlistStats {
    pub gate_count: usize,
    /// Inputs + outputs + flip-flops.
    pub node_count: usize,
    /// Mean number of distinct significance-graph tails per endpoint
    /// (output port or flip-flop).
    pub degree_node: f64,
}

/// Per-gate logic level; flip-flop and input drivers are level 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Levelization {
    pub levels: Vec<u32>,
    pub max_depth: u32,
    /// Gates sorted by (level, index): a valid evaluation order.
    pub order: Vec<usize>,
}

/// Assigns every gate its combinational depth.
pub fn levelize(netlist: &Netlist) -> Levelization {
    let n = netlist.gates.len();
    let mut levels = vec![0u32; n];
    let mut done = vec![false; n];
    // explicit stack: netlists can be deep
    for root in 0..n {
        if done[root] {
            continue;
        }
        let mut stack = vec![(root, false)];
        while let Some((g, expanded)) = stack.pop() {
            if done[g] {
                continue;
            }
            if expanded {
                let lvl = netlist.gates[g]
                    .inputs
                    .iter()
                    .map(|&net| match netlist.drivers[net] {
                        Driver::Gate(h) => levels[h],
                        _ => 0,
                    })
                    .max()
                    .unwrap_or(0);
                levels[g] = lvl + 1;
                done[g] = true;
            } else {
                stack.push((g, true));
                for &net in &netlist.gates[g].inputs {
                    if let Driver::Gate(h) = netlist.drivers[net] {
                        if !done[h] {
                            stack.push((h, false));
                        }
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&g| (levels[g], g));
    let max_depth = levels.iter().copied().max().unwrap_or(0);
    Levelization { levels, max_depth, order }
}

/// Incremental netlist construction; [`NetlistBuilder::build`] validates.
#[derive(Debug, Default)]
pub struct NetlistBuilder {
    nets: Vec<String>,
    net_ids: HashMap<String, NetId>,
    drivers: Vec<Option<Driver>>,
    first_use: Vec<usize>,
    inputs: Vec<NetId>,
    outputs: Vec<NetId>,
    output_set: BTreeSet<NetId>,
    gates: Vec<Gate>,
    flip_flops: Vec<FlipFlop>,
}

impl NetlistBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn net(&mut self, name: &str, line: usize) -> Result<NetId, NetlistError> {
        if let Some(&id) = self.net_ids.get(name) {
            return Ok(id);
        }
        if !is_valid_name(name) {
            return Err(parse_err(line, format!("invalid net name `{name}`")));
        }
        let id = self.nets.len();
        self.nets.push(name.to_string());
        self.net_ids.insert(name.to_string(), id);
        self.drivers.push(None);
        self.first_use.push(line);
        Ok(id)
    }

    fn drive(&mut self, net: NetId, driver: Driver, line: usize) -> Result<(), NetlistError> {
        if self.drivers[net].is_some() {
            return Err(parse_err(line, format!("net `{}` has more than one driver", self.nets[net])));
        }
        self.drivers[net] = Some(driver);
        Ok(())
    }

    pub fn add_input(&mut self, name: &str, line: usize) -> Result<NetId, NetlistError> {
        let net = self.net(name, line)?;
        self.drive(net, Driver::Input(self.inputs.len()), line)?;
        self.inputs.push(net);
        Ok(net)
    }

    pub fn add_output(&mut self, name: &str, line: usize) -> Result<NetId, NetlistError> {
        let net = self.net(name, line)?;
        if !self.output_set.insert(net) {
            return Err(parse_err(line, format!("output `{name}` declared twice")));
        }
        self.outputs.push(net);
        Ok(net)
    }

    pub fn add_gate(&mut self, output: &str, kind: GateKind, inputs: &[&str], line: usize) -> Result<NetId, NetlistError> {
        kind.check_fanin(inputs.len()).map_err(|e| parse_err(line, e))?;
        let out = self.net(output, line)?;
        let ins = inputs.iter().map(|n| self.net(n, line)).collect::<Result<Vec<_>, _>>()?;
        self.drive(out, Driver::Gate(self.gates.len()), line)?;
        self.gates.push(Gate { kind, inputs: ins, output: out });
        Ok(out)
    }

    pub fn add_dff(&mut self, q: &str, d: &str, line: usize) -> Result<NetId, NetlistError> {
        let qn = self.net(q, line)?;
        let dn = self.net(d, line)?;
        self.drive(qn, Driver::FlipFlop(self.flip_flops.len()), line)?;
        self.flip_flops.push(FlipFlop { d: dn, q: qn });
        Ok(qn)
    }

    pub fn build(self) -> Result<Netlist, NetlistError> {
        let mut drivers = Vec::with_capacity(self.drivers.len());
        for (id, d) in self.drivers.iter().enumerate() {
            match d {
                Some(d) => drivers.push(*d),
                None => return Err(NetlistError::DanglingNet(self.nets[id].clone())),
            }
        }
        let netlist = Netlist {
            nets: self.nets,
            net_ids: self.net_ids,
            drivers,
            inputs: self.inputs,
            outputs: self.outputs,
            gates: self.gates,
            flip_flops: self.flip_flops,
        };
        if let Some(cycle) = find_cycle(&netlist) {
            return Err(NetlistError::Cycle(cycle.into_iter().map(|g| netlist.gate_name(g).to_string()).collect()));
        }
        warn_unread(&netlist);
        Ok(netlist)
    }
}

fn warn_unread(netlist: &Netlist) {
    let mut read = vec![false; netlist.nets.len()];
    for g in &netlist.gates {
        for &n in &g.inputs {
            read[n] = true;
        }
    }
    for ff in &netlist.flip_flops {
        read[ff.d] = true;
    }
    for &o in &netlist.outputs {
        read[o] = true;
    }
    for (net, r) in read.iter().enumerate() {
        if !r && matches!(netlist.drivers[net], Driver::Gate(_) | Driver::FlipFlop(_)) {
            log::warn!("net `{}` is driven but never read", netlist.nets[net]);
        }
    }
}

/// Returns the gates of one combinational cycle in signal order, if any.
fn find_cycle(netlist: &Netlist) -> Option<Vec<usize>> {
    const WHITE: u8 = 0;
    const GREY: u8 = 1;
    const BLACK: u8 = 2;
    let n = netlist.gates.len();
    let mut color = vec![WHITE; n];
    for root in 0..n {
        if color[root] != WHITE {
            continue;
        }
        // (gate, next pin to explore)
        let mut path: Vec<(usize, usize)> = vec![(root, 0)];
        color[root] = GREY;
        while let Some(&mut (g, ref mut pin)) = path.last_mut() {
            let inputs = &netlist.gates[g].inputs;
            if *pin < inputs.len() {
                let net = inputs[*pin];
                *pin += 1;
                if let Driver::Gate(h) = netlist.drivers[net] {
                    match color[h] {
                        WHITE => {
                            color[h] = GREY;
                            path.push((h, 0));
                        }
                        GREY => {
                            let start = path.iter().position(|&(x, _)| x == h).expect("grey gate on path");
                            // path runs against signal flow; reverse it
                            let mut cycle: Vec<usize> = path[start..].iter().map(|&(x, _)| x).collect();
                            cycle.reverse();
                            return Some(cycle);
                        }
                        _ => {}
                    }
                }
            } else {
                color[g] = BLACK;
                path.pop();
            }
        }
    }
    None
}

pub fn is_valid_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

/// Parses a `.bench` netlist using built-in gate kinds only.
pub fn parse_bench(text: &str) -> Result<Netlist, NetlistError> {
    parse_bench_with_library(text, &GateLibrary::new())
}

/// Parses a `.bench` netlist, resolving unknown kinds in `library`.
pub fn parse_bench_with_library(text: &str, library: &GateLibrary) -> Result<Netlist, NetlistError> {
    let mut b = NetlistBuilder::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("");
        let s = squeeze(body).ok_or_else(|| parse_err(line, format!("whitespace inside a name in `{}`", raw.trim())))?;
        if s.is_empty() {
            continue;
        }
        if let Some((lhs, rhs)) = s.split_once('=') {
            let (kind, args) = split_call(rhs).ok_or_else(|| parse_err(line, format!("malformed gate `{}`", raw.trim())))?;
            if args.iter().any(|a| a.is_empty()) {
                return Err(parse_err(line, "empty gate argument"));
            }
            if kind.eq_ignore_ascii_case("DFF") {
                if args.len() != 1 {
                    return Err(parse_err(line, "DFF takes exactly one input"));
                }
                b.add_dff(lhs, args[0], line)?;
            } else {
                let gk = library
                    .get(kind)
                    .or_else(|| GateKind::from_builtin_name(kind))
                    .ok_or_else(|| parse_err(line, format!("unknown gate kind `{kind}`")))?;
                b.add_gate(lhs, gk, &args, line)?;
            }
        } else {
            let (kw, args) = split_call(&s).ok_or_else(|| parse_err(line, format!("unrecognized statement `{}`", raw.trim())))?;
            if args.len() != 1 || args[0].is_empty() {
                return Err(parse_err(line, format!("{kw} takes exactly one name")));
            }
            if kw.eq_ignore_ascii_case("INPUT") {
                b.add_input(args[0], line)?;
            } else if kw.eq_ignore_ascii_case("OUTPUT") {
                b.add_output(args[0], line)?;
            } else {
                return Err(parse_err(line, format!("unknown declaration `{kw}`")));
            }
        }
    }
    b.build()
}

/// Drops whitespace around punctuation; `None` if it separates two name
/// characters.
fn squeeze(body: &str) -> Option<String> {
    let mut out = String::with_capacity(body.len());
    let mut gap = false;
    for c in body.chars() {
        if c.is_whitespace() {
            gap = true;
            continue;
        }
        let word = |c: char| !matches!(c, '(' | ')' | ',' | '=');
        if gap && word(c) && out.chars().last().is_some_and(word) {
            return None;
        }
        gap = false;
        out.push(c);
    }
    Some(out)
}

/// Splits `NAME(a,b,c)` into `("NAME", ["a","b","c"])`.
fn split_call(s: &str) -> Option<(&str, Vec<&str>)> {
    let open = s.find('(')?;
    let inner = s[open + 1..].strip_suffix(')')?;
    if inner.contains('(') || inner.contains(')') {
        return None;
    }
    let name = &s[..open];
    if name.is_empty() {
        return None;
    }
    let args = if inner.is_empty() { vec![] } else { inner.split(',').collect() };
    Some((name, args))
}
