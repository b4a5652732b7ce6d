//! 64-lane bit-parallel simulator. Lane 0 is the golden run; every other
//! lane carries its own victim set and sees the same inputs and, per FF,
//! the same flip times.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};

use super::{InitialState, SimConfig, SimError, Stimulus};
use crate::netlist::{levelize, GateKind, Netlist};

pub(crate) const LANES: usize = 64;

const INPUT_STREAM: u64 = 0;
const STATE_STREAM: u64 = 1;

/// Stream of flip-flop `f`'s flip times.
pub(crate) fn flip_stream(f: usize) -> u64 {
    2 + f as u64
}

pub(crate) fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// One faulty lane.
#[derive(Debug, Clone, Default)]
pub(crate) struct Lane {
    pub victims: Vec<usize>,
    /// `(cycle, ff)` flips applied regardless of `flip_rate`.
    pub forced: Vec<(u64, usize)>,
}

#[derive(Debug, Clone)]
pub(crate) struct LaneResult {
    pub mismatches: Vec<u64>,
    pub flips: u64,
}

#[derive(Debug, Clone)]
pub(crate) struct BatchResult {
    pub lanes: Vec<LaneResult>,
    /// Golden outputs per cycle, if requested.
    pub trace: Option<Vec<Vec<bool>>>,
}

struct FlipClock {
    next: u64,
    dist: Option<Geometric>,
    rng: ChaCha8Rng,
}

impl FlipClock {
    fn new(rate: f64, seed: u64, ff: usize) -> Self {
        let mut rng = rng(seed, flip_stream(ff));
        let dist = if rate > 0.0 { Some(Geometric::new(rate).expect("rate checked")) } else { None };
        let next = match &dist {
            Some(d) => d.sample(&mut rng),
            None => u64::MAX,
        };
        FlipClock { next, dist, rng }
    }

    fn advance(&mut self, now: u64) {
        self.next = match &self.dist {
            Some(d) => now.saturating_add(1).saturating_add(d.sample(&mut self.rng)),
            None => u64::MAX,
        };
    }
}

struct Op {
    code: u8,
    gate: u32,
    out: u32,
    start: u32,
    end: u32,
}

const OP_AND: u8 = 0;
const OP_NAND: u8 = 1;
const OP_OR: u8 = 2;
const OP_NOR: u8 = 3;
const OP_XOR: u8 = 4;
const OP_XNOR: u8 = 5;
const OP_NOT: u8 = 6;
const OP_BUF: u8 = 7;
const OP_MUX: u8 = 8;
const OP_CUSTOM: u8 = 9;

fn opcode(kind: &GateKind) -> u8 {
    match kind {
        GateKind::And => OP_AND,
        GateKind::Nand => OP_NAND,
        GateKind::Or => OP_OR,
        GateKind::Nor => OP_NOR,
        GateKind::Xor => OP_XOR,
        GateKind::Xnor => OP_XNOR,
        GateKind::Not => OP_NOT,
        GateKind::Buf => OP_BUF,
        GateKind::Mux => OP_MUX,
        GateKind::Custom(_) => OP_CUSTOM,
    }
}

fn eval_word(kind: &GateKind, args: &[u64]) -> u64 {
    match kind {
        GateKind::And => args.iter().fold(!0, |a, &b| a & b),
        GateKind::Nand => !args.iter().fold(!0, |a, &b| a & b),
        GateKind::Or => args.iter().fold(0, |a, &b| a | b),
        GateKind::Nor => !args.iter().fold(0, |a, &b| a | b),
        GateKind::Xor => args.iter().fold(0, |a, &b| a ^ b),
        GateKind::Xnor => !args.iter().fold(0, |a, &b| a ^ b),
        GateKind::Not => !args[0],
        GateKind::Buf => args[0],
        GateKind::Mux => (args[0] & args[2]) | (!args[0] & args[1]),
        GateKind::Custom(g) => {
            let mut out = 0u64;
            let mut bits = vec![false; args.len()];
            for lane in 0..LANES {
                for (b, a) in bits.iter_mut().zip(args) {
                    *b = (a >> lane) & 1 == 1;
                }
                if g.table.eval(&bits) {
                    out |= 1 << lane;
                }
            }
            out
        }
    }
}

/// Runs up to 63 faulty lanes against one golden lane.
pub(crate) fn run_batch(
    netlist: &Netlist,
    config: &SimConfig,
    flip_rate: f64,
    fault_seed: u64,
    lanes: &[Lane],
    record_trace: bool,
) -> Result<BatchResult, SimError> {
    assert!(lanes.len() < LANES, "at most {} faulty lanes per batch", LANES - 1);
    if !(0.0..=1.0).contains(&flip_rate) {
        return Err(SimError::FlipRate(flip_rate));
    }
    let nff = netlist.flip_flops().len();
    let nin = netlist.inputs().len();
    let nout = netlist.outputs().len();
    for lane in lanes {
        if let Some(&f) = lane.victims.iter().chain(lane.forced.iter().map(|(_, f)| f)).find(|&&f| f >= nff) {
            return Err(SimError::UnknownFlipFlop(f));
        }
    }
    if let Stimulus::Trace(rows) = &config.stimulus {
        if (rows.len() as u64) < config.cycles {
            return Err(SimError::TraceTooShort { cycles: config.cycles, rows: rows.len() });
        }
        if let Some(r) = rows.iter().position(|r| r.len() != nin) {
            return Err(SimError::TraceWidth { row: r, expected: nin });
        }
    }

    let gates = netlist.gates();
    // flattened evaluation program in level order
    // within a level any order is valid; grouping by kind keeps the
    // dispatch branch predictable
    let lv = levelize(netlist);
    let mut order = lv.order;
    order.sort_by_key(|&g| (lv.levels[g], opcode(&gates[g].kind), g));
    let mut pins: Vec<u32> = Vec::new();
    let program: Vec<Op> = order
        .iter()
        .map(|&g| {
            let start = pins.len() as u32;
            pins.extend(gates[g].inputs.iter().map(|&n| n as u32));
            Op { code: opcode(&gates[g].kind), gate: g as u32, out: gates[g].output as u32, start, end: pins.len() as u32 }
        })
        .collect();
    let mut nets = vec![0u64; netlist.net_count()];

    // victim lanes per FF
    let mut victim_mask = vec![0u64; nff];
    for (l, lane) in lanes.iter().enumerate() {
        for &f in &lane.victims {
            victim_mask[f] |= 1 << (l + 1);
        }
    }
    let mut forced: Vec<(u64, usize, usize)> =
        lanes.iter().enumerate().flat_map(|(l, lane)| lane.forced.iter().map(move |&(c, f)| (c, f, l + 1))).collect();
    forced.sort_unstable();
    let mut forced_at = 0;

    let mut clocks: Vec<Option<FlipClock>> = (0..nff)
        .map(|f| (victim_mask[f] != 0 && flip_rate > 0.0).then(|| FlipClock::new(flip_rate, fault_seed, f)))
        .collect();

    let mut q = vec![0u64; nff];
    if config.initial_state == InitialState::Random {
        let mut r = rng(config.seed, STATE_STREAM);
        for w in q.iter_mut() {
            *w = if r.random::<bool>() { !0 } else { 0 };
        }
    }
    let mut input_rng = rng(config.seed, INPUT_STREAM);
    let mut input_bits = vec![0u64; nin.div_ceil(64)];

    let mut results: Vec<LaneResult> = lanes.iter().map(|_| LaneResult { mismatches: vec![0; nout], flips: 0 }).collect();
    let mut trace = record_trace.then(|| Vec::with_capacity(config.cycles as usize));
    let mut args: Vec<u64> = Vec::new();

    for cycle in 0..config.cycles {
        match &config.stimulus {
            Stimulus::Uniform => {
                for w in input_bits.iter_mut() {
                    *w = input_rng.next_u64();
                }
                for (i, &net) in netlist.inputs().iter().enumerate() {
                    nets[net] = 0u64.wrapping_sub((input_bits[i / 64] >> (i % 64)) & 1);
                }
            }
            Stimulus::Trace(rows) => {
                for (i, &net) in netlist.inputs().iter().enumerate() {
                    nets[net] = if rows[cycle as usize][i] { !0 } else { 0 };
                }
            }
        }
        for (f, ff) in netlist.flip_flops().iter().enumerate() {
            nets[ff.q] = q[f];
        }
        for op in &program {
            let ins = &pins[op.start as usize..op.end as usize];
            let x = |k: usize| nets[ins[k] as usize];
            let v = match op.code {
                OP_AND => ins.iter().fold(!0, |acc, &n| acc & nets[n as usize]),
                OP_NAND => !ins.iter().fold(!0, |acc, &n| acc & nets[n as usize]),
                OP_OR => ins.iter().fold(0, |acc, &n| acc | nets[n as usize]),
                OP_NOR => !ins.iter().fold(0, |acc, &n| acc | nets[n as usize]),
                OP_XOR => ins.iter().fold(0, |acc, &n| acc ^ nets[n as usize]),
                OP_XNOR => !ins.iter().fold(0, |acc, &n| acc ^ nets[n as usize]),
                OP_NOT => !x(0),
                OP_BUF => x(0),
                OP_MUX => (x(0) & x(2)) | (!x(0) & x(1)),
                _ => {
                    args.clear();
                    args.extend(ins.iter().map(|&n| nets[n as usize]));
                    eval_word(&gates[op.gate as usize].kind, &args)
                }
            };
            nets[op.out as usize] = v;
        }
        if let Some(t) = trace.as_mut() {
            t.push(netlist.outputs().iter().map(|&n| nets[n] & 1 == 1).collect());
        }
        for (o, &net) in netlist.outputs().iter().enumerate() {
            let w = nets[net];
            let mut diff = w ^ 0u64.wrapping_sub(w & 1);
            while diff != 0 {
                let lane = diff.trailing_zeros() as usize;
                results[lane - 1].mismatches[o] += 1;
                diff &= diff - 1;
            }
        }
        // capture, then flip
        for (f, ff) in netlist.flip_flops().iter().enumerate() {
            q[f] = nets[ff.d];
        }
        for (f, clock) in clocks.iter_mut().enumerate() {
            if let Some(c) = clock {
                if c.next == cycle {
                    q[f] ^= victim_mask[f];
                    let mut m = victim_mask[f];
                    while m != 0 {
                        results[m.trailing_zeros() as usize - 1].flips += 1;
                        m &= m - 1;
                    }
                    c.advance(cycle);
                }
            }
        }
        while forced_at < forced.len() && forced[forced_at].0 == cycle {
            let (_, f, lane) = forced[forced_at];
            q[f] ^= 1 << lane;
            results[lane - 1].flips += 1;
            forced_at += 1;
        }
        while forced_at < forced.len() && forced[forced_at].0 < cycle {
            forced_at += 1;
        }
    }
    Ok(BatchResult { lanes: results, trace })
}

