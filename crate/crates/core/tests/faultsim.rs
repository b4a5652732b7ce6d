use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serial_core::faultsim::{
    group_experiment, rank_correlation, simulate, simulate_sets, CorrelationError, FaultConfig, InitialState, SimConfig,
    Stimulus,
};
use serial_core::fixtures::{self, generate, GateMix, GeneratorSpec};
use serial_core::netlist::parse_bench;
use serial_core::oracle::reference_simulate;
use serial_core::serial::{analyze, RankOptions};

/// The 2-bit saturating counter written out by hand, with its own
/// random source.
fn counter_by_hand(cycles: u64, p: f64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xC0FFEE);
    let next = |q0: bool, q1: bool, inc: bool, rst: bool| {
        let en = inc && !(q0 && q1);
        ((q0 ^ en) && !rst, (q1 ^ (q0 && en)) && !rst)
    };
    let (mut g, mut f) = ((false, false), (false, false));
    let mut bad = 0u64;
    for _ in 0..cycles {
        let (inc, rst) = (rng.random::<bool>(), rng.random::<bool>());
        bad += (g.0 != f.0) as u64 + (g.1 != f.1) as u64;
        g = next(g.0, g.1, inc, rst);
        f = next(f.0, f.1, inc, rst);
        if rng.random_bool(p) {
            f.0 = !f.0;
        }
        if rng.random_bool(p) {
            f.1 = !f.1;
        }
    }
    bad as f64 / (2 * cycles) as f64
}

#[test]
fn counter_matches_hand_written_simulator() {
    let n = parse_bench(fixtures::COUNTER2).unwrap();
    let cycles = 1_000_000;
    let fast = simulate(&n, &SimConfig::new(cycles, 11), Some(&FaultConfig::all(&n, 1e-3, 11).unwrap())).unwrap();
    let slow = counter_by_hand(cycles, 1e-3, 11);
    let r = fast.report.output_bit_mismatch_rate;
    assert!((r - slow).abs() <= 0.2 * slow, "{r} vs {slow}");
}

#[test]
fn forced_flips_reach_the_output_after_the_register_delay() {
    let n = parse_bench(fixtures::SHIFT_REGISTER).unwrap();
    let mismatches = |ff: usize, cycles: u64| {
        let fc = FaultConfig::new([], 0.0, 0).unwrap().forced(5, ff);
        simulate(&n, &SimConfig::new(cycles, 3), Some(&fc)).unwrap().report.mismatched_bits
    };
    // FF2 drives the output: a flip after cycle 5's capture shows at cycle 6
    assert_eq!(mismatches(1, 6), 0);
    assert_eq!(mismatches(1, 7), 1);
    assert_eq!(mismatches(1, 40), 1);
    // FF1 needs one more capture
    assert_eq!(mismatches(0, 7), 0);
    assert_eq!(mismatches(0, 8), 1);
    assert_eq!(mismatches(0, 40), 1);
}

#[test]
fn zero_rate_means_zero_mismatch() {
    for fx in fixtures::all() {
        let n = fx.netlist();
        let out = simulate(&n, &SimConfig::new(2000, 1), Some(&FaultConfig::all(&n, 0.0, 1).unwrap())).unwrap();
        assert_eq!(out.report.flips_injected, 0);
        assert_eq!(out.report.output_bit_mismatch_rate, 0.0);
    }
}

const DEAD: &str = "INPUT(a)\nOUTPUT(z)\nq = DFF(a)\nz = BUF(q)\ndead = DFF(x)\nx = XOR(dead, a)\n";

#[test]
fn flips_outside_every_output_cone_are_invisible() {
    let n = parse_bench(DEAD).unwrap();
    let sim = SimConfig::new(20_000, 4);
    let dead = n.flip_flop_by_name("dead").unwrap();
    let live = n.flip_flop_by_name("q").unwrap();
    let only_dead = simulate(&n, &sim, Some(&FaultConfig::new([dead], 0.05, 4).unwrap())).unwrap().report;
    assert!(only_dead.flips_injected > 0);
    assert_eq!(only_dead.mismatched_bits, 0);
    let live_only = simulate(&n, &sim, Some(&FaultConfig::new([live], 0.01, 4).unwrap())).unwrap().report;
    let both = simulate(&n, &sim, Some(&FaultConfig::new([live, dead], 0.01, 4).unwrap())).unwrap().report;
    assert_eq!(live_only.output_bit_mismatch_rate, both.output_bit_mismatch_rate);

    let a = analyze::<f64>(&n, &RankOptions::default()).unwrap();
    let groups = group_experiment(&n, &a.ranking, 1, 0.01, &sim, &[1, 2, 3]).unwrap();
    let g = groups.iter().find(|g| g.members == vec![dead]).unwrap();
    assert_eq!(g.mean_rate, 0.0);
    assert!(g.flips_injected > 0);
}

#[test]
fn mismatch_grows_with_flip_rate() {
    let seeds: Vec<u64> = (0..10).collect();
    for fx in fixtures::all() {
        let n = fx.netlist();
        let all: Vec<usize> = (0..n.flip_flops().len()).collect();
        let mut last = -1.0;
        for rate in [0.0, 1e-4, 1e-3, 1e-2] {
            let r = simulate_sets(&n, &SimConfig::new(20_000, 0), std::slice::from_ref(&all), rate, &seeds).unwrap();
            let mean = r[0].iter().map(|x| x.output_bit_mismatch_rate).sum::<f64>() / seeds.len() as f64;
            assert!(mean >= last, "{} at {rate}: {mean} < {last}", fx.name);
            last = mean;
        }
    }
}

#[test]
fn mismatch_is_linear_at_low_rates() {
    let seeds: Vec<u64> = (0..20).collect();
    for fx in fixtures::all() {
        let n = fx.netlist();
        let nff = n.flip_flops().len();
        let all: Vec<usize> = (0..nff).collect();
        // enough cycles for roughly 1500 flips at the lower rate
        let cycles = (1500.0 / (5e-5 * nff as f64 * seeds.len() as f64)) as u64;
        let mean = |rate: f64| {
            let r = simulate_sets(&n, &SimConfig::new(cycles, 0), std::slice::from_ref(&all), rate, &seeds).unwrap();
            r[0].iter().map(|x| x.output_bit_mismatch_rate).sum::<f64>() / seeds.len() as f64
        };
        let (lo, hi) = (mean(5e-5), mean(1e-4));
        let ratio = hi / lo;
        assert!((ratio - 2.0).abs() <= 0.6, "{}: {lo} -> {hi}", fx.name);
    }
}

#[test]
fn golden_run_is_deterministic_across_threads() {
    let n = fixtures::fixture("gen_small").unwrap().netlist();
    let sim = SimConfig { initial_state: InitialState::Random, ..SimConfig::new(3000, 9) };
    let a = simulate(&n, &sim, None).unwrap();
    let b = simulate(&n, &sim, None).unwrap();
    assert_eq!(a, b);
    let ranking = analyze::<f64>(&n, &RankOptions::default()).unwrap().ranking;
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| group_experiment(&n, &ranking, 3, 1e-3, &sim, &[1, 2, 3, 4]).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn batched_sets_equal_single_runs() {
    let n = fixtures::fixture("s27").unwrap().netlist();
    let sim = SimConfig::new(5000, 21);
    let sets = vec![vec![0], vec![1, 2], vec![0, 1, 2]];
    let batched = simulate_sets(&n, &sim, &sets, 0.01, &[21]).unwrap();
    for (set, reports) in sets.iter().zip(&batched) {
        let single = simulate(&n, &sim, Some(&FaultConfig::new(set.clone(), 0.01, 21).unwrap())).unwrap();
        assert_eq!(single.report, reports[0]);
    }
}

#[test]
fn replayed_stimulus_is_used_verbatim() {
    let n = parse_bench(fixtures::SHIFT_REGISTER).unwrap();
    let rows: Vec<Vec<bool>> = [true, false, true, true, false, false].iter().map(|&b| vec![b]).collect();
    let sim = SimConfig { stimulus: Stimulus::Trace(rows), ..SimConfig::new(6, 0) };
    let out = simulate(&n, &sim, None).unwrap();
    let got: Vec<bool> = out.trace.iter().map(|r| r[0]).collect();
    assert_eq!(got, vec![false, false, true, false, true, true]);
    let short = SimConfig { cycles: 7, ..sim };
    assert!(simulate(&n, &short, None).is_err());
}

fn brute_spearman(x: &[f64], y: &[f64]) -> f64 {
    let ranks = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|a| {
                let below = v.iter().filter(|b| *b < a).count() as f64;
                let equal = v.iter().filter(|b| *b == a).count() as f64;
                below + (equal + 1.0) / 2.0
            })
            .collect()
    };
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

#[test]
fn spearman_five_points() {
    // ranks x = 1..5, ranks y = 2,1,4,3,5 -> d^2 = 4 -> rho = 1 - 6*4/120 = 0.8
    let x = [10.0, 20.0, 30.0, 40.0, 50.0];
    let y = [0.2, 0.1, 0.4, 0.3, 0.5];
    assert!((rank_correlation(&x, &y).unwrap() - 0.8).abs() < 1e-12);
    assert!((brute_spearman(&x, &y) - 0.8).abs() < 1e-12);
    assert_eq!(rank_correlation(&x, &[1.0; 5]), Err(CorrelationError::DegenerateInput));
}

proptest! {
    #[test]
    fn spearman_matches_brute_force(pairs in prop::collection::vec((0u8..6, 0u8..6), 3..12)) {
        let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
        match rank_correlation(&x, &y) {
            Ok(rho) => prop_assert!((rho - brute_spearman(&x, &y)).abs() < 1e-9),
            Err(e) => prop_assert_eq!(e, CorrelationError::DegenerateInput),
        }
    }

    #[test]
    fn engine_matches_reference_simulator(seed in 0u64..1000, rate in 0.0f64..0.05, forced_at in 0u64..200) {
        let spec = GeneratorSpec {
            inputs: 3, outputs: 3, flip_flops: 5, gates: 40,
            gate_mix: GateMix::default(), target_degree: 3.0, loops: true, seed,
        };
        let n = generate(&spec).unwrap();
        let sim = SimConfig { initial_state: InitialState::Random, ..SimConfig::new(200, seed) };
        let fc = FaultConfig::new([0, 2, 3], rate, seed + 1).unwrap().forced(forced_at, 4);
        let fast = simulate(&n, &sim, Some(&fc)).unwrap();
        let (trace, slow) = reference_simulate(&n, &sim, Some(&fc)).unwrap();
        prop_assert_eq!(fast.trace, trace);
        prop_assert_eq!(fast.report, slow);
    }
}
