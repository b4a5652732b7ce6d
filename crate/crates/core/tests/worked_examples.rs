//! Hand-worked numbers on the bundled micro circuits.

use num_rational::Ratio;
use num_traits::ToPrimitive;
use serial_core::fixtures;
use serial_core::graphs::{build_logic_graph, build_significance_graph, LogicGraph};
use serial_core::influence::{influence, influence_symmetric, TruthTable};
use serial_core::netlist::{levelize, parse_bench, NodeKind, NodeRef};
use serial_core::serial::{
    direct_solve, estimate_cost, procedure1, procedure1_all, procedure2, rank, DfPropagator, SignificancePropagator,
};
use serial_core::{Exact, Scalar};

fn loop_graph<T: Scalar>() -> serial_core::graphs::SignificanceGraph<T> {
    let n = parse_bench(fixtures::LOOP).unwrap();
    let df = procedure1_all::<T>(&n, 0.0, 100).unwrap();
    build_significance_graph::<T, &str>(&n, &df, &[]).unwrap()
}

#[test]
fn and3_ldf_is_one_third() {
    let t = TruthTable::from_fn(3, |a| a.iter().all(|&x| x)).unwrap();
    let inf = influence(&t);
    assert_eq!(inf.raw, vec![Ratio::new(1, 4); 3]);
    assert_eq!(inf.ldf, vec![Ratio::new(1, 3); 3]);
    assert_eq!(influence_symmetric(3), vec![Ratio::new(1, 3); 3]);
}

#[test]
fn loop_significance_iterates_as_a_geometric_series() {
    let g = loop_graph::<f64>();
    let f7 = g.find("F7", NodeKind::FlipFlop).unwrap();
    let mut p = SignificancePropagator::new(&g, &[1.0, 2.0]).unwrap();
    p.step();
    assert_eq!(*p.s(f7), 1.25);
    p.step();
    assert_eq!(*p.s(f7), 1.3125);
    for _ in 0..60 {
        p.step();
    }
    assert!((p.s(f7) - 4.0 / 3.0).abs() <= 1e-12);
}

#[test]
fn loop_limit_is_exactly_four_thirds() {
    let g = loop_graph::<Exact>();
    let one = Exact::from_integer(1.into());
    let s = direct_solve(&g, &[one.clone(), one.clone() + one.clone()]).unwrap();
    let f7 = g.find("F7", NodeKind::FlipFlop).unwrap();
    assert_eq!(s.values[f7], Exact::new(4.into(), 3.into()));

    // exact iteration reproduces the partial sums 1 + 1/4 + 1/16 + ...
    let mut p = SignificancePropagator::new(&g, &[one.clone(), one.clone() + one]).unwrap();
    let mut expected = Exact::from_integer(1.into());
    let mut term = Exact::new(1.into(), 4.into());
    for _ in 0..6 {
        p.step();
        expected += term.clone();
        term /= Exact::from_integer(4.into());
        assert_eq!(p.s(f7), &expected);
    }
}

#[test]
fn internal_node_outranks_sources_in_the_loop() {
    let g = loop_graph::<f64>();
    let (s, _) = procedure2(&g, &[1.0, 2.0], 1e-12, 1000).unwrap();
    let r = rank(&g, &s);
    let pos = r.entries.iter().position(|e| e.name == "F7").unwrap();
    assert!(r.entries[pos].significance > 1.0);
    for (i, e) in r.entries.iter().enumerate() {
        if e.significance <= 1.0 {
            assert!(i > pos, "{} = {}", e.name, e.significance);
        }
    }
    // F6 collects 2 * 1/2 from O2 plus 4/3 * 1/2 through the AND into F7
    assert!((r.entries[0].significance - 5.0 / 3.0).abs() < 1e-9);
}

#[test]
fn reconvergent_node_is_unbalanced_after_first_sweep() {
    let n = parse_bench(fixtures::RECONVERGENT).unwrap();
    let ff_b = NodeRef::FlipFlop(n.flip_flop_by_name("FF_b").unwrap());
    let g: LogicGraph<f64> = build_logic_graph(&n, ff_b).unwrap();
    let j = g.find("n_j").unwrap();
    let mut p = DfPropagator::new(&g);
    p.step();
    assert_eq!(*p.ls(j), 0.375);
    assert_eq!(p.ldw(j).iter().sum::<f64>(), 0.25);
    assert!(p.mismatch() > 0.0);
    assert_eq!(p.step(), 0.0);
    assert_eq!(p.ldw(j).iter().sum::<f64>(), 0.375);

    let row = p.row();
    let get = |name: &str| row.get(NodeRef::FlipFlop(n.flip_flop_by_name(name).unwrap()));
    assert_eq!((get("FF_d"), get("FF_e"), get("FF_f"), get("FF_g")), (0.125, 0.1875, 0.4375, 0.25));
}

#[test]
fn procedure1_error_hits_zero_within_logic_depth() {
    for fx in fixtures::all() {
        let n = fx.netlist();
        let depth = levelize(&n).max_depth as usize;
        for e in n.endpoints() {
            let g: LogicGraph<f64> = build_logic_graph(&n, e).unwrap();
            let (_, report) = procedure1(&g, 0.0, depth.max(1)).unwrap();
            assert_eq!(report.final_eps(), Some(0.0), "{} {:?}", fx.name, e);
            assert!(report.iterations <= g.gate_depth().max(1));
        }
    }
}

#[test]
fn shift_register_chain() {
    let n = parse_bench(fixtures::SHIFT_REGISTER).unwrap();
    let df = procedure1_all::<f64>(&n, 0.0, 10).unwrap();
    assert_eq!(df.nonzero_count(), 3);
    assert!(df.rows.iter().all(|r| r.entries.iter().all(|(_, v)| *v == 1.0)));
    let g = build_significance_graph::<f64, &str>(&n, &df, &[]).unwrap();
    let s = direct_solve(&g, &[1.0]).unwrap();
    assert_eq!(s.flip_flops(), &[1.0, 1.0]);
    assert_eq!(s.inputs(), &[1.0]);
}

#[test]
fn s27_columns_are_normalised() {
    let n = parse_bench(fixtures::S27).unwrap();
    assert_eq!(levelize(&n).max_depth, 6);
    let df = procedure1_all::<f64>(&n, 0.0, 100).unwrap();
    for (i, sum) in df.column_sums().iter().enumerate() {
        assert!((sum - 1.0).abs() <= 1e-9, "row {i}: {sum}");
    }
    let exact = procedure1_all::<Exact>(&n, 0.0, 100).unwrap();
    for sum in exact.column_sums() {
        assert_eq!(sum.to_f64(), Some(1.0));
    }
}

#[test]
fn clock_input_keeps_zero_significance() {
    let text = "INPUT(clk)\nINPUT(a)\nOUTPUT(z)\nq = DFF(d)\nd = AND(a, clk, q)\nz = BUF(q)";
    let n = parse_bench(text).unwrap();
    let df = procedure1_all::<f64>(&n, 0.0, 10).unwrap();
    let g = build_significance_graph(&n, &df, &["clk"]).unwrap();
    let clk = g.find("clk", NodeKind::Input).unwrap();
    let mut p = SignificancePropagator::new(&g, &[1.0]).unwrap();
    for _ in 0..20 {
        p.step();
        assert_eq!(*p.s(clk), 0.0);
    }
    assert!(*p.s(g.find("a", NodeKind::Input).unwrap()) > 0.0);
}

#[test]
fn cost_model_scaling() {
    let n = parse_bench(fixtures::S27).unwrap();
    let mut stats = n.stats();
    let base = estimate_cost(&stats, 3.0, 10.0);
    stats.degree_node *= 2.0;
    let dense = estimate_cost(&stats, 3.0, 10.0);
    assert_eq!(dense.t1_units, 4.0 * base.t1_units);
    assert_eq!(dense.t2_units, 2.0 * base.t2_units);
}
