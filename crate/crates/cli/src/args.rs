use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Flip-flop significance ranking, fault injection and selective hardening
/// for gate-level netlists.
#[derive(Debug, Parser, Serialize)]
#[command(name = "serial-rank", version, arg_required_else_help = true)]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "SERIAL_RANK_THREADS")]
    pub threads: Option<usize>,
    /// Output directory; receives manifest.json and the command's CSV/JSON files.
    #[arg(short, long, global = true, default_value = "serial-out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Parse a netlist and report gate count, node count and degree_node.
    Stats(StatsArgs),
    /// Influence vector of gate kinds as CSV: kind,fanin,input_index,raw,ldf.
    LdfTable(LdfArgs),
    /// Distribution-factor matrix as sparse CSV: head,tail,df.
    Df(DfArgs),
    /// Significance ranking of flip-flops and inputs.
    Rank(RankArgs),
    /// Fault-injection experiment on victim flip-flops or ranked groups.
    Simulate(SimulateArgs),
    /// Evaluate selective-hardening policies over coverages and flip rates.
    Harden(HardenArgs),
    /// Cross-check the analysis and the simulator against reference implementations.
    OracleCheck(OracleArgs),
    /// Write a seeded synthetic sequential circuit.
    Generate(GenerateArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct NetlistArgs {
    /// Netlist in .bench format.
    pub netlist: PathBuf,
    /// JSON gate library for CUSTOM gates.
    #[arg(long)]
    pub library: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct StatsArgs {
    #[command(flatten)]
    pub input: NetlistArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct LdfArgs {
    /// Gate kinds to tabulate (built-in names or library gates); default all.
    #[arg(long = "kind", value_delimiter = ',')]
    pub kinds: Vec<String>,
    /// Fan-ins for variadic built-ins.
    #[arg(long = "fanin", value_delimiter = ',', default_values_t = [2usize, 3, 4])]
    pub fanins: Vec<usize>,
    #[arg(long)]
    pub library: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct Procedure1Args {
    /// ε₁ threshold of the DF computation. Cones are acyclic, so 0 is reachable.
    #[arg(long, default_value_t = 0.0)]
    pub eps1: f64,
    /// Sweep cap of the DF computation.
    #[arg(long, default_value_t = 10_000)]
    pub max_iters1: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct DfArgs {
    #[command(flatten)]
    pub input: NetlistArgs,
    #[command(flatten)]
    pub p1: Procedure1Args,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Weights {
    Uniform,
    Pow2,
}

#[derive(Debug, Args, Serialize)]
pub struct RankArgs {
    #[command(flatten)]
    pub input: NetlistArgs,
    /// Clock input, pinned to zero significance.
    #[arg(long)]
    pub clk: Option<String>,
    /// Reset input, pinned to zero significance.
    #[arg(long)]
    pub reset: Option<String>,
    /// Further inputs pinned to zero significance.
    #[arg(long = "pin", value_delimiter = ',')]
    pub pinned: Vec<String>,
    /// ε₂ threshold of significance propagation.
    #[arg(long, default_value_t = 0.01)]
    pub eps: f64,
    /// Iteration cap of significance propagation.
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    /// Initial output significance.
    #[arg(long, value_enum, default_value_t = Weights::Uniform)]
    pub weights: Weights,
    #[command(flatten)]
    pub p1: Procedure1Args,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    Zero,
    Random,
}

#[derive(Debug, Args, Serialize)]
pub struct SimArgs {
    /// Clock cycles per run.
    #[arg(long, default_value_t = 100_000)]
    pub cycles: u64,
    /// Number of seeds; seeds are seed-base .. seed-base + seeds.
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    #[arg(long, default_value_t = 1)]
    pub seed_base: u64,
    /// Flip-flop state at cycle 0.
    #[arg(long, value_enum, default_value_t = Init::Zero)]
    pub initial_state: Init,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub input: NetlistArgs,
    /// Per-cycle flip probability of each victim flip-flop.
    #[arg(long)]
    pub flip_rate: f64,
    /// File with one victim flip-flop name per line.
    #[arg(long, conflicts_with = "group_from_ranking", required_unless_present = "group_from_ranking")]
    pub victims: Option<PathBuf>,
    /// Ranking CSV; its flip-flops are injected group by group.
    #[arg(long, requires = "group_size")]
    pub group_from_ranking: Option<PathBuf>,
    #[arg(long)]
    pub group_size: Option<usize>,
    #[command(flatten)]
    pub sim: SimArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct HardenArgs {
    #[command(flatten)]
    pub input: NetlistArgs,
    /// Ranking CSV produced by `rank`.
    #[arg(long)]
    pub ranking: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub coverage: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub flip_rate: Vec<f64>,
    /// serial, random or random:SEED; comma-separated for several.
    #[arg(long, value_delimiter = ',', default_value = "serial")]
    pub policy: Vec<String>,
    #[command(flatten)]
    pub sim: SimArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct OracleArgs {
    #[command(flatten)]
    pub input: NetlistArgs,
    /// Skip circuits with more flip-flops + inputs.
    #[arg(long, default_value_t = 5000)]
    pub max_unknowns: usize,
    #[arg(long, default_value_t = 20_000)]
    pub max_gates: usize,
    /// Cones above this size are left out of path enumeration.
    #[arg(long, default_value_t = 20)]
    pub max_cone_gates: usize,
    #[arg(long, default_value_t = 2000)]
    pub sim_cycles: u64,
    #[arg(long, default_value_t = 0.01)]
    pub sim_flip_rate: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    /// GeneratorSpec as JSON; replaces the size flags.
    #[arg(long, conflicts_with = "preset")]
    pub spec: Option<PathBuf>,
    /// Bundled preset: gen_small or gen_medium.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, default_value_t = 8)]
    pub inputs: usize,
    #[arg(long, default_value_t = 8)]
    pub outputs: usize,
    #[arg(long, default_value_t = 32)]
    pub flip_flops: usize,
    #[arg(long, default_value_t = 400)]
    pub gates: usize,
    /// Target degree_node.
    #[arg(long, default_value_t = 4.0)]
    pub degree: f64,
    /// Build the flip-flop graph without cycles.
    #[arg(long)]
    pub no_loops: bool,
    /// Leave XOR/XNOR out of the gate mix.
    #[arg(long)]
    pub no_parity: bool,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// File name of the netlist inside the output directory.
    #[arg(long, default_value = "circuit.bench")]
    pub name: String,
}
