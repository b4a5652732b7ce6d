//! Bundled benchmark circuits and the synthetic generator.

mod generator;

pub use generator::{generate, GateMix, GeneratorSpec, InfeasibleSpec};

use crate::netlist::{parse_bench, Netlist};

pub const SHIFT_REGISTER: &str = include_str!("../../fixtures/shift_register.bench");
pub const COUNTER2: &str = include_str!("../../fixtures/counter2.bench");
pub const RECONVERGENT: &str = include_str!("../../fixtures/reconvergent.bench");
pub const LOOP: &str = include_str!("../../fixtures/loop.bench");
pub const S27: &str = include_str!("../../fixtures/s27.bench");

#[derive(Debug, Clone, Copy)]
enum Source {
    Bench(&'static str),
    Generated(fn() -> GeneratorSpec),
}

/// A named bundled circuit.
#[derive(Debug, Clone, Copy)]
pub struct Fixture {
    pub name: &'static str,
    /// Whether some flip-flop feeds back into itself.
    pub sequential_loops: bool,
    source: Source,
}

impl Fixture {
    pub fn netlist(&self) -> Netlist {
        match self.source {
            Source::Bench(text) => parse_bench(text).expect("bundled fixture parses"),
            Source::Generated(spec) => generate(&spec()).expect("bundled spec is feasible"),
        }
    }

    pub fn is_generated(&self) -> bool {
        matches!(self.source, Source::Generated(_))
    }
}

// Parity gates inside sequential loops keep a single upset alive
// indefinitely. The presets leave them out and use seeds whose
// single-flip error lifetime is short, so mismatch stays linear in the
// flip rate.
const NO_PARITY: GateMix = GateMix { and: 3, nand: 3, or: 3, nor: 3, xor: 0, xnor: 0, mux: 1 };

/// Small generated circuit: 24 flip-flops, 200 gates.
pub fn gen_small_spec() -> GeneratorSpec {
    GeneratorSpec {
        inputs: 8,
        outputs: 8,
        flip_flops: 24,
        gates: 200,
        gate_mix: NO_PARITY,
        target_degree: 4.0,
        loops: true,
        seed: 3,
    }
}

/// Medium generated circuit: 96 flip-flops, 1200 gates.
pub fn gen_medium_spec() -> GeneratorSpec {
    GeneratorSpec {
        inputs: 16,
        outputs: 16,
        flip_flops: 96,
        gates: 1200,
        gate_mix: NO_PARITY,
        target_degree: 6.0,
        loops: true,
        seed: 2,
    }
}

pub const FIXTURES: &[Fixture] = &[
    Fixture { name: "shift_register", sequential_loops: false, source: Source::Bench(SHIFT_REGISTER) },
    Fixture { name: "counter2", sequential_loops: true, source: Source::Bench(COUNTER2) },
    Fixture { name: "reconvergent", sequential_loops: false, source: Source::Bench(RECONVERGENT) },
    Fixture { name: "loop", sequential_loops: true, source: Source::Bench(LOOP) },
    Fixture { name: "s27", sequential_loops: true, source: Source::Bench(S27) },
    Fixture { name: "gen_small", sequential_loops: true, source: Source::Generated(gen_small_spec) },
    Fixture { name: "gen_medium", sequential_loops: true, source: Source::Generated(gen_medium_spec) },
];

pub fn fixture(name: &str) -> Option<&'static Fixture> {
    FIXTURES.iter().find(|f| f.name == name)
}

pub fn all() -> &'static [Fixture] {
    FIXTURES
}
