//! Independent cross-checks of the main algorithms.
//!
//! * DF rows against explicit path enumeration (sum over all cone paths of
//!   the product of ldf), with ldf taken from exhaustive truth-table
//!   enumeration and exact rational arithmetic.
//! * Iterative significance propagation against the direct linear solve.
//! * The bit-parallel simulator against a one-bit-at-a-time reference that
//!   evaluates nets on demand and follows the same random-stream contract.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use serde::Serialize;
use thiserror::Error;

use crate::faultsim::{simulate, FaultConfig, InitialState, MismatchReport, SimConfig, SimError, Stimulus};
use crate::graphs::build_logic_graph;
use crate::influence::influence;
use crate::netlist::{Driver, Netlist, NodeRef};
use crate::serial::{analyze, direct_solve, procedure1, RankOptions, SerialError};
use crate::Exact;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleLimits {
    /// Circuits with more flip-flops + inputs are skipped.
    pub max_unknowns: usize,
    /// Circuits with more gates are skipped.
    pub max_gates: usize,
    /// Cones above this gate count are left out of path enumeration.
    pub max_cone_gates: usize,
    pub sim_cycles: u64,
    pub sim_flip_rate: f64,
    pub seed: u64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits { max_unknowns: 5000, max_gates: 20_000, max_cone_gates: 20, sim_cycles: 2000, sim_flip_rate: 0.01, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub name: &'static str,
    pub passed: bool,
    pub max_deviation: f64,
    pub tolerance: f64,
    /// Items compared (cones, nodes or lanes) and items skipped.
    pub compared: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub checks: Vec<OracleCheck>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("oracle skipped: {what} = {size} exceeds limit {limit}")]
    OracleSkipped { what: &'static str, size: usize, limit: usize },
    #[error(transparent)]
    Serial(#[from] SerialError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Runs all oracles on `netlist`.
pub fn oracle_check(netlist: &Netlist, limits: &OracleLimits) -> Result<OracleReport, OracleError> {
    let unknowns = netlist.flip_flops().len() + netlist.inputs().len();
    if unknowns > limits.max_unknowns {
        return Err(OracleError::OracleSkipped { what: "flip-flops + inputs", size: unknowns, limit: limits.max_unknowns });
    }
    if netlist.gates().len() > limits.max_gates {
        return Err(OracleError::OracleSkipped { what: "gates", size: netlist.gates().len(), limit: limits.max_gates });
    }
    Ok(OracleReport { checks: vec![check_paths(netlist, limits)?, check_direct(netlist)?, check_simulator(netlist, limits)?] })
}

fn check_paths(netlist: &Netlist, limits: &OracleLimits) -> Result<OracleCheck, OracleError> {
    let tolerance = 1e-9;
    let (mut worst, mut compared, mut skipped) = (0.0f64, 0, 0);
    for endpoint in netlist.endpoints() {
        let graph = build_logic_graph::<f64>(netlist, endpoint).map_err(SerialError::from)?;
        if graph.gate_count() > limits.max_cone_gates {
            skipped += 1;
            continue;
        }
        let (row, _) = procedure1(&graph, 0.0, graph.gate_depth().max(1) + 1)?;
        let expected = path_enumeration_df(netlist, endpoint);
        let mut keys: Vec<NodeRef> = expected.keys().copied().collect();
        keys.extend(row.entries.iter().map(|(n, _)| *n));
        for k in keys {
            let e = expected.get(&k).and_then(|v| v.to_f64()).unwrap_or(0.0);
            worst = worst.max((row.get(k) - e).abs());
        }
        compared += 1;
    }
    Ok(OracleCheck { name: "df-vs-path-enumeration", passed: worst <= tolerance, max_deviation: worst, tolerance, compared, skipped })
}

/// Exact DF row of `endpoint`: for every sink, the sum over all paths from
/// the endpoint's data net of the product of per-pin ldf.
pub fn path_enumeration_df(netlist: &Netlist, endpoint: NodeRef) -> BTreeMap<NodeRef, Exact> {
    let mut ldf_cache: HashMap<usize, Vec<Exact>> = HashMap::new();
    let mut out: BTreeMap<NodeRef, Exact> = BTreeMap::new();
    let mut stack = vec![(netlist.data_net(endpoint), Exact::one())];
    while let Some((net, w)) = stack.pop() {
        match netlist.driver(net) {
            Driver::Gate(g) => {
                let gate = &netlist.gates()[g];
                let ldf = ldf_cache.entry(g).or_insert_with(|| {
                    let table = gate.kind.truth_table(gate.inputs.len()).expect("validated gate");
                    influence(&table)
                        .ldf
                        .iter()
                        .map(|r| Exact::new((*r.numer()).into(), (*r.denom()).into()))
                        .collect()
                });
                for (pin, &input) in gate.inputs.iter().enumerate() {
                    if !ldf[pin].is_zero() {
                        stack.push((input, w.clone() * ldf[pin].clone()));
                    }
                }
            }
            _ => {
                let sink = netlist.source_node(net).expect("non-gate driver");
                let e = out.entry(sink).or_insert_with(Exact::zero);
                *e += w;
            }
        }
    }
    out
}

fn check_direct(netlist: &Netlist) -> Result<OracleCheck, OracleError> {
    let tolerance = 1e-6;
    let opts = RankOptions { eps2: 1e-13, max_iters2: 100_000, ..RankOptions::default() };
    let a = analyze::<f64>(netlist, &opts)?;
    let s_out: Vec<f64> = a.significance.outputs().to_vec();
    let exact = direct_solve(&a.graph, &s_out)?;
    let worst = relative_deviation(&a.significance.values, &exact.values);
    Ok(OracleCheck {
        name: "propagation-vs-direct-solve",
        passed: worst <= tolerance,
        max_deviation: worst,
        tolerance,
        compared: a.graph.node_count(),
        skipped: 0,
    })
}

/// Largest `|a - b| / |b|` (absolute where `b` is 0).
pub fn relative_deviation(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| if *y == 0.0 { x.abs() } else { ((x - y) / y).abs() }).fold(0.0, f64::max)
}

fn check_simulator(netlist: &Netlist, limits: &OracleLimits) -> Result<OracleCheck, OracleError> {
    let sim = SimConfig { initial_state: InitialState::Random, ..SimConfig::new(limits.sim_cycles, limits.seed) };
    let fault = FaultConfig::all(netlist, limits.sim_flip_rate, limits.seed)?;
    let fast = simulate(netlist, &sim, Some(&fault))?;
    let (trace, slow) = reference_simulate(netlist, &sim, Some(&fault))?;
    let mut worst = (fast.report.output_bit_mismatch_rate - slow.output_bit_mismatch_rate).abs();
    if fast.trace != trace || fast.report.flips_injected != slow.flips_injected {
        worst = worst.max(1.0);
    }
    for (a, b) in fast.report.per_output.iter().zip(&slow.per_output) {
        worst = worst.max((a - b).abs());
    }
    Ok(OracleCheck { name: "simulator-vs-reference", passed: worst == 0.0, max_deviation: worst, tolerance: 0.0, compared: 1, skipped: 0 })
}

struct RefMachine<'n> {
    netlist: &'n Netlist,
    state: Vec<bool>,
}

impl RefMachine<'_> {
    /// Values of all nets for the given inputs, evaluated on demand.
    fn nets(&self, inputs: &[bool]) -> Vec<bool> {
        let n = self.netlist;
        let mut value: Vec<Option<bool>> = vec![None; n.net_count()];
        for net in 0..n.net_count() {
            let mut stack = vec![net];
            while let Some(&top) = stack.last() {
                if value[top].is_some() {
                    stack.pop();
                    continue;
                }
                match n.driver(top) {
                    Driver::Input(i) => {
                        value[top] = Some(inputs[i]);
                        stack.pop();
                    }
                    Driver::FlipFlop(f) => {
                        value[top] = Some(self.state[f]);
                        stack.pop();
                    }
                    Driver::Gate(g) => {
                        let gate = &n.gates()[g];
                        let missing: Vec<usize> = gate.inputs.iter().copied().filter(|&i| value[i].is_none()).collect();
                        if missing.is_empty() {
                            let args: Vec<bool> = gate.inputs.iter().map(|&i| value[i].unwrap()).collect();
                            value[top] = Some(gate.kind.eval(&args));
                            stack.pop();
                        } else {
                            stack.extend(missing);
                        }
                    }
                }
            }
        }
        value.into_iter().map(Option::unwrap).collect()
    }

    fn clock(&mut self, nets: &[bool]) {
        for (f, ff) in self.netlist.flip_flops().iter().enumerate() {
            self.state[f] = nets[ff.d];
        }
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(id);
    r
}

/// Scalar reference simulator: golden and faulty machines stepped side by
/// side, one Boolean per net.
pub fn reference_simulate(
    netlist: &Netlist,
    sim: &SimConfig,
    fault: Option<&FaultConfig>,
) -> Result<(Vec<Vec<bool>>, MismatchReport), SimError> {
    let nin = netlist.inputs().len();
    let nff = netlist.flip_flops().len();
    let mut init = vec![false; nff];
    if sim.initial_state == InitialState::Random {
        let mut r = stream(sim.seed, 1);
        for b in init.iter_mut() {
            *b = r.random::<bool>();
        }
    }
    let mut golden = RefMachine { netlist, state: init.clone() };
    let mut faulty = RefMachine { netlist, state: init };
    let mut input_rng = stream(sim.seed, 0);

    // next flip time per victim
    let mut clocks: Vec<(usize, u64, Geometric, ChaCha8Rng)> = Vec::new();
    let mut forced: Vec<(u64, usize)> = Vec::new();
    if let Some(fc) = fault {
        if !(0.0..=1.0).contains(&fc.flip_rate) {
            return Err(SimError::FlipRate(fc.flip_rate));
        }
        if fc.flip_rate > 0.0 {
            for &f in &fc.victims {
                if f >= nff {
                    return Err(SimError::UnknownFlipFlop(f));
                }
                let mut r = stream(fc.seed, 2 + f as u64);
                let g = Geometric::new(fc.flip_rate).expect("valid rate");
                let first = g.sample(&mut r);
                clocks.push((f, first, g, r));
            }
        }
        forced = fc.forced.clone();
    }

    let nout = netlist.outputs().len();
    let mut mismatches = vec![0u64; nout];
    let mut flips = 0u64;
    let mut trace = Vec::new();
    let mut inputs = vec![false; nin];
    for cycle in 0..sim.cycles {
        match &sim.stimulus {
            Stimulus::Uniform => {
                let words: Vec<u64> = (0..nin.div_ceil(64)).map(|_| input_rng.next_u64()).collect();
                for (i, b) in inputs.iter_mut().enumerate() {
                    *b = (words[i / 64] >> (i % 64)) & 1 == 1;
                }
            }
            Stimulus::Trace(rows) => {
                let row = rows.get(cycle as usize).ok_or(SimError::TraceTooShort { cycles: sim.cycles, rows: rows.len() })?;
                inputs.clone_from(row);
            }
        }
        let g = golden.nets(&inputs);
        let f = faulty.nets(&inputs);
        let outs: Vec<bool> = netlist.outputs().iter().map(|&o| g[o]).collect();
        for (k, &o) in netlist.outputs().iter().enumerate() {
            if g[o] != f[o] {
                mismatches[k] += 1;
            }
        }
        trace.push(outs);
        golden.clock(&g);
        faulty.clock(&f);
        for (ff, next, dist, rng) in clocks.iter_mut() {
            if *next == cycle {
                faulty.state[*ff] = !faulty.state[*ff];
                flips += 1;
                *next = cycle + 1 + dist.sample(rng);
            }
        }
        for &(c, ff) in &forced {
            if c == cycle {
                faulty.state[ff] = !faulty.state[ff];
                flips += 1;
            }
        }
    }
    let total: u64 = mismatches.iter().sum();
    let cells = sim.cycles as f64 * nout as f64;
    let report = MismatchReport {
        output_bit_mismatch_rate: if cells == 0.0 { 0.0 } else { total as f64 / cells },
        per_output: mismatches.iter().map(|&m| if sim.cycles == 0 { 0.0 } else { m as f64 / sim.cycles as f64 }).collect(),
        flips_injected: flips,
        mismatched_bits: total,
        cycles: sim.cycles,
    };
    Ok((trace, report))
}
