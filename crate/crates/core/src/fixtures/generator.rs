//! Seeded synthetic sequential circuits.
//!
//! Every endpoint (output port or flip-flop D pin) gets its own fan-in cone
//! over `degree` distinct leaves (inputs and flip-flop outputs). Because no
//! built-in gate has a dead pin, the measured degree_node equals the mean
//! leaf count. Cones are reduced with 2- to 4-input gates; spare gate budget
//! goes into inverters, buffers and reconvergent gates that re-read a net
//! already inside the cone. Gates only read leaves or earlier gates of the
//! same cone, so the combinational core is acyclic by construction and
//! every loop passes through a flip-flop.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::{GateKind, Netlist, NetlistBuilder};

const MAX_FANIN: usize = 4;

/// Relative weights of the multi-input gate kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateMix {
    pub and: u32,
    pub nand: u32,
    pub or: u32,
    pub nor: u32,
    pub xor: u32,
    pub xnor: u32,
    pub mux: u32,
}

impl Default for GateMix {
    fn default() -> Self {
        GateMix { and: 3, nand: 3, or: 3, nor: 3, xor: 1, xnor: 1, mux: 1 }
    }
}

impl GateMix {
    fn pick(&self, fanin: usize, rng: &mut ChaCha8Rng) -> GateKind {
        let mut opts = vec![
            (GateKind::And, self.and),
            (GateKind::Nand, self.nand),
            (GateKind::Or, self.or),
            (GateKind::Nor, self.nor),
            (GateKind::Xor, self.xor),
            (GateKind::Xnor, self.xnor),
        ];
        if fanin == 3 {
            opts.push((GateKind::Mux, self.mux));
        }
        let total: u32 = opts.iter().map(|o| o.1).sum();
        if total == 0 {
            return GateKind::And;
        }
        let mut x = rng.random_range(0..total);
        for (k, w) in opts {
            if x < w {
                return k;
            }
            x -= w;
        }
        unreachable!()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub inputs: usize,
    pub outputs: usize,
    pub flip_flops: usize,
    pub gates: usize,
    #[serde(default)]
    pub gate_mix: GateMix,
    pub target_degree: f64,
    #[serde(default = "default_true")]
    pub loops: bool,
    pub seed: u64,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Error, PartialEq)]
pub enum InfeasibleSpec {
    #[error("a circuit needs at least one output and one input or flip-flop")]
    NoEndpoints,
    #[error("a loop-free circuit with flip-flops needs at least one input")]
    NoInputs,
    #[error("target degree {0} must be at least 1")]
    Degree(f64),
    #[error("{needed} gates needed for the requested degree, only {gates} allowed")]
    GateBudget { needed: usize, gates: usize },
}

/// Gates needed to reduce `leaves` nets to one endpoint net.
fn min_gates(leaves: usize) -> usize {
    (leaves.saturating_sub(1)).div_ceil(MAX_FANIN - 1).max(1)
}

struct Cone<'a> {
    rng: &'a mut ChaCha8Rng,
    mix: &'a GateMix,
    gates: Vec<(String, GateKind, Vec<String>)>,
    counter: &'a mut usize,
}

impl Cone<'_> {
    fn emit(&mut self, kind: GateKind, inputs: Vec<String>, name: Option<&str>) -> String {
        let out = match name {
            Some(n) => n.to_string(),
            None => {
                *self.counter += 1;
                format!("g{}", *self.counter)
            }
        };
        self.gates.push((out.clone(), kind, inputs));
        out
    }

    /// Reduces `pool` to `root` with exactly `budget` gates.
    fn reduce(&mut self, mut pool: Vec<String>, mut budget: usize, root: &str) {
        let mut internal: Vec<String> = Vec::new();
        while budget > 0 {
            let p = pool.len();
            let feasible: Vec<usize> =
                (2..=MAX_FANIN.min(p)).filter(|&f| budget > (p - f).div_ceil(MAX_FANIN - 1)).collect();
            let spare_ok = budget > (p - 1).div_ceil(MAX_FANIN - 1);
            let spare = p == 1 || (spare_ok && self.rng.random_bool(0.35));
            let name = (budget == 1).then_some(root);
            if spare || feasible.is_empty() {
                let i = self.rng.random_range(0..p);
                let x = pool.swap_remove(i);
                let y = if !internal.is_empty() && self.rng.random_bool(0.5) {
                    Some(internal[self.rng.random_range(0..internal.len())].clone())
                } else {
                    None
                };
                let out = match y {
                    Some(y) if y != x => {
                        let kind = self.mix.pick(2, self.rng);
                        self.emit(kind, vec![x.clone(), y], name)
                    }
                    _ => {
                        let kind = if self.rng.random_bool(0.5) { GateKind::Not } else { GateKind::Buf };
                        self.emit(kind, vec![x.clone()], name)
                    }
                };
                internal.push(x);
                pool.push(out);
            } else {
                let f = feasible[self.rng.random_range(0..feasible.len())];
                pool.shuffle(self.rng);
                let args: Vec<String> = pool.drain(p - f..).collect();
                let kind = self.mix.pick(f, self.rng);
                let out = self.emit(kind, args.clone(), name);
                internal.extend(args);
                pool.push(out);
            }
            budget -= 1;
        }
        debug_assert_eq!(pool, vec![root.to_string()]);
    }
}

/// Builds a circuit from `spec`; identical specs give identical netlists.
pub fn generate(spec: &GeneratorSpec) -> Result<Netlist, InfeasibleSpec> {
    let sources = spec.inputs + spec.flip_flops;
    if spec.outputs == 0 || sources == 0 {
        return Err(InfeasibleSpec::NoEndpoints);
    }
    if spec.target_degree.is_nan() || spec.target_degree < 1.0 {
        return Err(InfeasibleSpec::Degree(spec.target_degree));
    }
    if !spec.loops && spec.flip_flops > 0 && spec.inputs == 0 {
        return Err(InfeasibleSpec::NoInputs);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let in_names: Vec<String> = (0..spec.inputs).map(|i| format!("in{i}")).collect();
    let ff_names: Vec<String> = (0..spec.flip_flops).map(|i| format!("ff{i}")).collect();
    let out_names: Vec<String> = (0..spec.outputs).map(|i| format!("out{i}")).collect();
    let endpoints = spec.outputs + spec.flip_flops;

    // allowed leaves per endpoint: outputs see everything; without loops a
    // flip-flop only reads inputs and lower-numbered flip-flops
    let allowed = |e: usize| -> usize {
        if e < spec.outputs || spec.loops {
            sources
        } else {
            spec.inputs + (e - spec.outputs)
        }
    };
    // leaf counts with error diffusion so the mean hits the target
    let mut degrees = Vec::with_capacity(endpoints);
    let mut carry = 0.0;
    for e in 0..endpoints {
        let want = spec.target_degree + carry;
        let d = (want.round() as usize).max(1);
        carry = want - d as f64;
        let lo = if e >= spec.outputs && spec.loops && spec.flip_flops >= 2 { 2 } else { 1 };
        degrees.push(d.max(lo).min(allowed(e)));
    }
    let needed: usize = degrees.iter().map(|&d| min_gates(d)).sum();
    if needed > spec.gates {
        return Err(InfeasibleSpec::GateBudget { needed, gates: spec.gates });
    }
    let mut budgets: Vec<usize> = (0..endpoints).map(|e| min_gates(degrees[e])).collect();
    let mut spare = spec.gates - needed;
    let share = spare / endpoints;
    for b in budgets.iter_mut() {
        *b += share;
    }
    spare -= share * endpoints;
    for b in budgets.iter_mut().take(spare) {
        *b += 1;
    }

    let source_name = |s: usize| if s < spec.inputs { in_names[s].clone() } else { ff_names[s - spec.inputs].clone() };
    let mut gates = Vec::with_capacity(spec.gates);
    let mut counter = 0usize;
    let mut b = NetlistBuilder::new();
    for n in &in_names {
        b.add_input(n, 0).expect("fresh name");
    }
    for n in &out_names {
        b.add_output(n, 0).expect("fresh name");
    }
    for n in &ff_names {
        b.add_dff(n, &format!("{n}_d"), 0).expect("fresh name");
    }

    for e in 0..endpoints {
        let limit = allowed(e);
        let root = if e < spec.outputs { out_names[e].clone() } else { format!("{}_d", ff_names[e - spec.outputs]) };
        let d = degrees[e];
        let mut chosen: Vec<usize> = Vec::with_capacity(d);
        let take = |s: usize, chosen: &mut Vec<usize>| {
            if s < limit && !chosen.contains(&s) && chosen.len() < d {
                chosen.push(s);
            }
        };
        if spec.loops && spec.flip_flops >= 2 && e >= spec.outputs && e - spec.outputs < 2 {
            // ff0 and ff1 read each other
            take(spec.inputs + 1 - (e - spec.outputs), &mut chosen);
        }
        // half the leaves from a window around the endpoint's position
        let centre = e * limit / endpoints;
        let local = d / 2;
        let mut off = 0;
        while chosen.len() < local && off < limit {
            take((centre + off) % limit, &mut chosen);
            off += 1;
        }
        while chosen.len() < d {
            take(rng.random_range(0..limit), &mut chosen);
        }
        chosen.sort_unstable();
        let pool: Vec<String> = chosen.iter().map(|&s| source_name(s)).collect();
        let mut cone = Cone { rng: &mut rng, mix: &spec.gate_mix, gates: Vec::new(), counter: &mut counter };
        cone.reduce(pool, budgets[e], &root);
        gates.extend(cone.gates);
    }
    for (out, kind, inputs) in &gates {
        let args: Vec<&str> = inputs.iter().map(String::as_str).collect();
        b.add_gate(out, kind.clone(), &args, 0).expect("generated gate is valid");
    }
    Ok(b.build().expect("generated netlist is valid"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(gates: usize, degree: f64) -> GeneratorSpec {
        GeneratorSpec {
            inputs: 6,
            outputs: 4,
            flip_flops: 10,
            gates,
            gate_mix: GateMix::default(),
            target_degree: degree,
            loops: true,
            seed: 3,
        }
    }

    #[test]
    fn exact_gate_count() {
        for g in [60, 61, 97, 200] {
            assert_eq!(generate(&spec(g, 4.0)).unwrap().gates().len(), g);
        }
    }

    #[test]
    fn budget_too_small() {
        assert!(matches!(generate(&spec(5, 4.0)), Err(InfeasibleSpec::GateBudget { .. })));
    }

    #[test]
    fn single_leaf_cones_are_buffers() {
        let n = generate(&spec(14, 1.0)).unwrap();
        assert_eq!(n.gates().len(), 14);
    }
}
