use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serial_core::faultsim::{
    group_experiment, group_rank_correlation, simulate_sets, InitialState, SimConfig,
};
use serial_core::fixtures::{self, generate, GateMix, GeneratorSpec};
use serial_core::graphs::build_significance_graph;
use serial_core::hardening::{sweep, sweep_to_csv, Policy};
use serial_core::netlist::{levelize, parse_bench_with_library, GateKind, GateLibrary, Netlist, NetlistStats};
use serial_core::oracle::{oracle_check, OracleError, OracleLimits, OracleReport};
use serial_core::serial::{
    initial_output_significance, procedure1_all, rank, residual, OutputWeights, Ranking, SerialError,
    SignificancePropagator,
};

use crate::args::*;
use crate::manifest::Run;

/// Why a command failed; decides the exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad input files or flag values (exit 2).
    Validation(anyhow::Error),
    /// An iteration limit was hit (exit 3).
    NonConvergence(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 2,
            Failure::NonConvergence(_) => 3,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Validation(e) | Failure::NonConvergence(e) => e,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Validation(e)
    }
}

fn serial_failure(e: SerialError) -> Failure {
    if e.is_non_convergence() {
        Failure::NonConvergence(e.into())
    } else {
        Failure::Validation(e.into())
    }
}

fn load_library(run: &mut Run, path: Option<&Path>) -> Result<GateLibrary> {
    match path {
        Some(p) => {
            let text = run.read(p)?;
            GateLibrary::from_json(&text).with_context(|| format!("gate library {}", p.display()))
        }
        None => Ok(GateLibrary::new()),
    }
}

fn load_netlist(run: &mut Run, input: &NetlistArgs) -> Result<Netlist> {
    let library = load_library(run, input.library.as_deref())?;
    let text = run.read(&input.netlist)?;
    parse_bench_with_library(&text, &library).with_context(|| format!("netlist {}", input.netlist.display()))
}

fn load_ranking(run: &mut Run, path: &Path, netlist: &Netlist) -> Result<Ranking<f64>> {
    let text = run.read(path)?;
    Ranking::from_csv(&text, netlist).with_context(|| format!("ranking {}", path.display()))
}

fn sim_config(args: &SimArgs, run: &mut Run) -> (SimConfig, Vec<u64>) {
    let seeds: Vec<u64> = (args.seed_base..args.seed_base + args.seeds).collect();
    run.seeds = seeds.clone();
    let initial_state = match args.initial_state {
        Init::Zero => InitialState::Zero,
        Init::Random => InitialState::Random,
    };
    (SimConfig { initial_state, ..SimConfig::new(args.cycles, args.seed_base) }, seeds)
}

#[derive(Serialize)]
struct StatsReport {
    inputs: usize,
    outputs: usize,
    flip_flops: usize,
    max_depth: u32,
    #[serde(flatten)]
    stats: NetlistStats,
}

pub fn stats(args: &StatsArgs, run: &mut Run) -> Result<(), Failure> {
    let n = load_netlist(run, &args.input)?;
    let report = StatsReport {
        inputs: n.inputs().len(),
        outputs: n.outputs().len(),
        flip_flops: n.flip_flops().len(),
        max_depth: levelize(&n).max_depth,
        stats: n.stats(),
    };
    println!("{}", serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?);
    run.write_json("stats.json", &report)?;
    Ok(())
}

fn resolve_kind(name: &str, library: &GateLibrary) -> Result<GateKind> {
    GateKind::from_builtin_name(&name.to_ascii_uppercase())
        .or_else(|| library.get(name))
        .ok_or_else(|| anyhow!("unknown gate kind `{name}`"))
}

pub fn ldf_table(args: &LdfArgs, run: &mut Run) -> Result<(), Failure> {
    let library = load_library(run, args.library.as_deref())?;
    let kinds: Vec<GateKind> = if args.kinds.is_empty() {
        GateKind::BUILTIN.iter().cloned().chain(library.gates().into_iter().map(GateKind::Custom)).collect()
    } else {
        args.kinds.iter().map(|k| resolve_kind(k, &library)).collect::<Result<_>>()?
    };
    let mut csv = String::from("kind,fanin,input_index,raw,ldf\n");
    for kind in &kinds {
        let fanins: Vec<usize> = match kind {
            GateKind::Custom(c) => vec![c.table.fanin()],
            GateKind::Not | GateKind::Buf => vec![1],
            GateKind::Mux => vec![3],
            _ => args.fanins.clone(),
        };
        for fanin in fanins {
            kind.check_fanin(fanin).map_err(|e| anyhow!("{kind}: {e}"))?;
            let inf = kind.influence(fanin);
            for (i, (raw, ldf)) in inf.raw_f64().iter().zip(inf.ldf_f64()).enumerate() {
                writeln!(csv, "{},{fanin},{i},{raw},{ldf}", kind.name()).expect("string write");
            }
        }
    }
    run.write("ldf.csv", &csv)?;
    Ok(())
}

pub fn df(args: &DfArgs, run: &mut Run) -> Result<(), Failure> {
    let n = load_netlist(run, &args.input)?;
    let df = procedure1_all::<f64>(&n, args.p1.eps1, args.p1.max_iters1).map_err(serial_failure)?;
    run.write("df.csv", &df.to_csv(&n))?;
    Ok(())
}

#[derive(Serialize)]
struct ConvergenceJson {
    iterations: usize,
    eps_trace: Vec<f64>,
    residual: f64,
    converged: bool,
    eps: f64,
}

pub fn rank_cmd(args: &RankArgs, run: &mut Run) -> Result<(), Failure> {
    if args.eps.is_nan() || args.eps < 0.0 {
        return Err(anyhow!("--eps must be non-negative").into());
    }
    let n = load_netlist(run, &args.input)?;
    let pinned: Vec<&str> =
        args.clk.iter().chain(args.reset.iter()).chain(args.pinned.iter()).map(String::as_str).collect();
    let df = procedure1_all::<f64>(&n, args.p1.eps1, args.p1.max_iters1).map_err(serial_failure)?;
    let graph = build_significance_graph(&n, &df, &pinned).map_err(anyhow::Error::from)?;
    let weights = match args.weights {
        Weights::Uniform => OutputWeights::Uniform,
        Weights::Pow2 => OutputWeights::Pow2,
    };
    let s_out = initial_output_significance(&graph, weights);
    let mut prop = SignificancePropagator::new(&graph, &s_out).map_err(serial_failure)?;
    let mut converged = false;
    while prop.trace().len() < args.max_iters {
        if prop.step() <= args.eps {
            converged = true;
            break;
        }
    }
    let s = prop.significance();
    let report = ConvergenceJson {
        iterations: prop.trace().len(),
        eps_trace: prop.trace().to_vec(),
        residual: residual(&graph, &s),
        converged,
        eps: args.eps,
    };
    run.write_json("convergence.json", &report)?;
    if !converged {
        return Err(Failure::NonConvergence(anyhow!(
            "significance propagation did not reach eps {} within {} iteration(s) (last eps {})",
            args.eps,
            args.max_iters,
            report.eps_trace.last().map_or("none".to_string(), |e| format!("{e:.3e}"))
        )));
    }
    run.write("ranking.csv", &rank(&graph, &s).to_csv())?;
    Ok(())
}

fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rate) {
        bail!("flip rate {rate} outside [0, 1]");
    }
    Ok(())
}

#[derive(Serialize)]
struct GroupJson {
    group_index: usize,
    first_rank: usize,
    last_rank: usize,
    members: Vec<String>,
    mean_rate: f64,
    flips_injected: u64,
    per_seed_rate: Vec<f64>,
}

#[derive(Serialize)]
struct SimulateSummary {
    flip_rate: f64,
    /// Spearman correlation between group order and mismatch rate.
    spearman_rho: Option<f64>,
    groups: Vec<GroupJson>,
}

pub fn simulate(args: &SimulateArgs, run: &mut Run) -> Result<(), Failure> {
    check_rate(args.flip_rate)?;
    let n = load_netlist(run, &args.input)?;
    let (sim, seeds) = sim_config(&args.sim, run);
    let mut csv = String::from("group_index,first_rank,last_rank,mismatch_rate,flips_injected\n");
    let summary = if let Some(path) = &args.victims {
        let text = run.read(path)?;
        let mut victims = BTreeSet::new();
        for (i, line) in text.lines().enumerate() {
            let name = line.trim();
            if name.is_empty() || name.starts_with('#') {
                continue;
            }
            let f = n
                .flip_flop_by_name(name)
                .ok_or_else(|| anyhow!("{} line {}: unknown flip-flop `{name}`", path.display(), i + 1))?;
            victims.insert(f);
        }
        let set: Vec<usize> = victims.into_iter().collect();
        let reports = simulate_sets(&n, &sim, std::slice::from_ref(&set), args.flip_rate, &seeds).map_err(anyhow::Error::from)?;
        let rates: Vec<f64> = reports[0].iter().map(|r| r.output_bit_mismatch_rate).collect();
        let mean_rate = rates.iter().sum::<f64>() / rates.len().max(1) as f64;
        let flips: u64 = reports[0].iter().map(|r| r.flips_injected).sum();
        writeln!(csv, "0,,,{mean_rate},{flips}").expect("string write");
        SimulateSummary {
            flip_rate: args.flip_rate,
            spearman_rho: None,
            groups: vec![GroupJson {
                group_index: 0,
                first_rank: 0,
                last_rank: 0,
                members: set.iter().map(|&f| n.node_name(serial_core::netlist::NodeRef::FlipFlop(f)).to_string()).collect(),
                mean_rate,
                flips_injected: flips,
                per_seed_rate: rates,
            }],
        }
    } else {
        let path = args.group_from_ranking.as_ref().expect("clap enforces one source");
        let ranking = load_ranking(run, path, &n)?;
        let size = args.group_size.expect("clap requires --group-size");
        let groups =
            group_experiment(&n, &ranking, size, args.flip_rate, &sim, &seeds).map_err(anyhow::Error::from)?;
        for g in &groups {
            writeln!(csv, "{},{},{},{},{}", g.group_index, g.first_rank, g.last_rank, g.mean_rate, g.flips_injected)
                .expect("string write");
        }
        SimulateSummary {
            flip_rate: args.flip_rate,
            spearman_rho: group_rank_correlation(&groups).ok(),
            groups: groups
                .iter()
                .map(|g| GroupJson {
                    group_index: g.group_index,
                    first_rank: g.first_rank,
                    last_rank: g.last_rank,
                    members: g
                        .members
                        .iter()
                        .map(|&f| n.node_name(serial_core::netlist::NodeRef::FlipFlop(f)).to_string())
                        .collect(),
                    mean_rate: g.mean_rate,
                    flips_injected: g.flips_injected,
                    per_seed_rate: g.per_seed.iter().map(|r| r.output_bit_mismatch_rate).collect(),
                })
                .collect(),
        }
    };
    run.write("simulate.csv", &csv)?;
    run.write_json("summary.json", &summary)?;
    Ok(())
}

pub fn harden(args: &HardenArgs, run: &mut Run) -> Result<(), Failure> {
    for &r in &args.flip_rate {
        check_rate(r)?;
    }
    let policies: Vec<Policy> =
        args.policy.iter().map(|p| p.parse::<Policy>()).collect::<Result<_, _>>().map_err(anyhow::Error::from)?;
    let n = load_netlist(run, &args.input)?;
    let ranking = load_ranking(run, &args.ranking, &n)?;
    let (sim, seeds) = sim_config(&args.sim, run);
    let rows = sweep(&n, &ranking, &policies, &args.coverage, &args.flip_rate, &sim, &seeds).map_err(anyhow::Error::from)?;
    run.write("harden.csv", &sweep_to_csv(&rows))?;
    Ok(())
}

#[derive(Serialize)]
struct OracleJson {
    passed: bool,
    limits: OracleLimits,
    #[serde(flatten)]
    report: OracleReport,
}

pub fn oracle(args: &OracleArgs, run: &mut Run) -> Result<(), Failure> {
    let n = load_netlist(run, &args.input)?;
    let limits = OracleLimits {
        max_unknowns: args.max_unknowns,
        max_gates: args.max_gates,
        max_cone_gates: args.max_cone_gates,
        sim_cycles: args.sim_cycles,
        sim_flip_rate: args.sim_flip_rate,
        seed: args.seed,
    };
    run.seeds = vec![args.seed];
    let report = match oracle_check(&n, &limits) {
        Ok(r) => r,
        Err(OracleError::Serial(e)) => return Err(serial_failure(e)),
        Err(e) => return Err(anyhow::Error::from(e).into()),
    };
    for c in &report.checks {
        println!(
            "{:<28} {}  max deviation {:.3e} (tolerance {:.0e}, {} compared, {} skipped)",
            c.name,
            if c.passed { "pass" } else { "FAIL" },
            c.max_deviation,
            c.tolerance,
            c.compared,
            c.skipped
        );
    }
    let passed = report.passed();
    run.write_json("oracle.json", &OracleJson { passed, limits, report })?;
    if !passed {
        return Err(anyhow!("at least one oracle disagrees; see oracle.json").into());
    }
    Ok(())
}

pub fn generate_cmd(args: &GenerateArgs, run: &mut Run) -> Result<(), Failure> {
    let spec: GeneratorSpec = if let Some(path) = &args.spec {
        let text = run.read(path)?;
        serde_json::from_str(&text).with_context(|| format!("generator spec {}", path.display()))?
    } else if let Some(name) = &args.preset {
        match name.as_str() {
            "gen_small" => fixtures::gen_small_spec(),
            "gen_medium" => fixtures::gen_medium_spec(),
            _ => return Err(anyhow!("unknown preset `{name}` (expected gen_small or gen_medium)").into()),
        }
    } else {
        let mut gate_mix = GateMix::default();
        if args.no_parity {
            gate_mix.xor = 0;
            gate_mix.xnor = 0;
        }
        GeneratorSpec {
            inputs: args.inputs,
            outputs: args.outputs,
            flip_flops: args.flip_flops,
            gates: args.gates,
            gate_mix,
            target_degree: args.degree,
            loops: !args.no_loops,
            seed: args.seed,
        }
    };
    if args.name.contains(['/', '\\']) {
        return Err(anyhow!("--name must be a plain file name").into());
    }
    run.seeds = vec![spec.seed];
    let n = generate(&spec).map_err(anyhow::Error::from)?;
    run.write(&args.name, &n.to_bench())?;
    run.write_json("spec.json", &spec)?;
    Ok(())
}
