//! Cycle-accurate fault-injection simulation.
//!
//! Every cycle evaluates the combinational logic from the current flip-flop
//! values and inputs, compares outputs against a golden twin, captures D
//! into Q and finally flips each victim Q with probability `flip_rate`.
//!
//! Random streams (ChaCha8, seeded with `seed`, selected with `set_stream`):
//! stream 0 drives inputs, stream 1 the random initial state and stream
//! `2 + f` the flip times of flip-flop `f`. Changing the victim set never
//! perturbs another flip-flop's flips, and runs that share a seed share
//! their input stream.

mod engine;

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::netlist::{Netlist, NodeRef};
use crate::scalar::Scalar;
use crate::serial::Ranking;

use engine::{run_batch, Lane, LANES};

#[derive(Debug, Clone, PartialEq)]
pub enum Stimulus {
    /// Independent fair bits per input and cycle.
    Uniform,
    /// One row of input values per cycle, in netlist input order.
    Trace(Vec<Vec<bool>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    #[default]
    Zero,
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub cycles: u64,
    pub stimulus: Stimulus,
    pub initial_state: InitialState,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(cycles: u64, seed: u64) -> Self {
        SimConfig { cycles, stimulus: Stimulus::Uniform, initial_state: InitialState::Zero, seed }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        SimConfig { seed, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaultConfig {
    pub victims: BTreeSet<usize>,
    pub flip_rate: f64,
    pub seed: u64,
    /// Deterministic `(cycle, ff)` flips on top of the random ones.
    pub forced: Vec<(u64, usize)>,
}

impl FaultConfig {
    pub fn new(victims: impl IntoIterator<Item = usize>, flip_rate: f64, seed: u64) -> Result<Self, SimError> {
        if !(0.0..=1.0).contains(&flip_rate) {
            return Err(SimError::FlipRate(flip_rate));
        }
        Ok(FaultConfig { victims: victims.into_iter().collect(), flip_rate, seed, forced: Vec::new() })
    }

    /// Every flip-flop of `netlist` is a victim.
    pub fn all(netlist: &Netlist, flip_rate: f64, seed: u64) -> Result<Self, SimError> {
        Self::new(0..netlist.flip_flops().len(), flip_rate, seed)
    }

    pub fn forced(mut self, cycle: u64, ff: usize) -> Self {
        self.forced.push((cycle, ff));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MismatchReport {
    /// Fraction of (output, cycle) pairs that differ from the golden run.
    pub output_bit_mismatch_rate: f64,
    pub per_output: Vec<f64>,
    pub flips_injected: u64,
    pub mismatched_bits: u64,
    pub cycles: u64,
}

impl MismatchReport {
    pub(crate) fn from_counts(mismatches: &[u64], flips: u64, cycles: u64) -> Self {
        let per = |m: u64| if cycles == 0 { 0.0 } else { m as f64 / cycles as f64 };
        let total: u64 = mismatches.iter().sum();
        let denom = cycles as f64 * mismatches.len() as f64;
        MismatchReport {
            output_bit_mismatch_rate: if denom == 0.0 { 0.0 } else { total as f64 / denom },
            per_output: mismatches.iter().map(|&m| per(m)).collect(),
            flips_injected: flips,
            mismatched_bits: total,
            cycles,
        }
    }

    fn empty(outputs: usize, cycles: u64) -> Self {
        Self::from_counts(&vec![0; outputs], 0, cycles)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    /// Golden output values per cycle, in netlist output order.
    pub trace: Vec<Vec<bool>>,
    pub report: MismatchReport,
}

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("flip rate {0} outside [0, 1]")]
    FlipRate(f64),
    #[error("flip-flop index {0} out of range")]
    UnknownFlipFlop(usize),
    #[error("stimulus trace has {rows} rows but {cycles} cycles were requested")]
    TraceTooShort { cycles: u64, rows: usize },
    #[error("stimulus row {row} does not have {expected} values")]
    TraceWidth { row: usize, expected: usize },
    #[error("group size must be at least 1")]
    GroupSize,
    #[error("ranking flip-flop index {0} out of range")]
    RankingMismatch(usize),
}

/// Simulates the golden run and, if given, a faulty twin.
pub fn simulate(netlist: &Netlist, sim: &SimConfig, fault: Option<&FaultConfig>) -> Result<SimOutcome, SimError> {
    let (rate, seed, lanes) = match fault {
        Some(fc) => {
            if !(0.0..=1.0).contains(&fc.flip_rate) {
                return Err(SimError::FlipRate(fc.flip_rate));
            }
            (fc.flip_rate, fc.seed, vec![Lane { victims: fc.victims.iter().copied().collect(), forced: fc.forced.clone() }])
        }
        None => (0.0, sim.seed, Vec::new()),
    };
    let batch = run_batch(netlist, sim, rate, seed, &lanes, true)?;
    let report = match batch.lanes.first() {
        Some(l) => MismatchReport::from_counts(&l.mismatches, l.flips, sim.cycles),
        None => MismatchReport::empty(netlist.outputs().len(), sim.cycles),
    };
    Ok(SimOutcome { trace: batch.trace.unwrap_or_default(), report })
}

/// Runs many victim sets against one golden run per seed. Results are
/// indexed `[set][seed]`. Fault seed equals the simulation seed, so a
/// single set reproduces [`simulate`] with `FaultConfig::new(set, rate, seed)`.
pub fn simulate_sets(
    netlist: &Netlist,
    sim: &SimConfig,
    victim_sets: &[Vec<usize>],
    flip_rate: f64,
    seeds: &[u64],
) -> Result<Vec<Vec<MismatchReport>>, SimError> {
    let jobs: Vec<(u64, Vec<Vec<usize>>)> = seeds.iter().map(|&s| (s, victim_sets.to_vec())).collect();
    let per_seed = run_per_seed(netlist, sim, flip_rate, &jobs)?;
    Ok((0..victim_sets.len()).map(|k| per_seed.iter().map(|v| v[k].clone()).collect()).collect())
}

/// Runs, for each seed, a list of victim sets as lanes of one batch.
/// Returns reports indexed `[seed][set]`.
pub(crate) fn run_per_seed(
    netlist: &Netlist,
    sim: &SimConfig,
    flip_rate: f64,
    jobs: &[(u64, Vec<Vec<usize>>)],
) -> Result<Vec<Vec<MismatchReport>>, SimError> {
    let tasks: Vec<(usize, usize)> =
        jobs.iter().enumerate().flat_map(|(j, (_, sets))| (0..sets.len().div_ceil(LANES - 1)).map(move |c| (j, c))).collect();
    let done: Vec<Vec<MismatchReport>> = tasks
        .par_iter()
        .map(|&(j, c)| {
            let (seed, sets) = &jobs[j];
            let lanes: Vec<Lane> = sets
                .chunks(LANES - 1)
                .nth(c)
                .unwrap_or(&[])
                .iter()
                .map(|v| Lane { victims: v.clone(), forced: Vec::new() })
                .collect();
            let b = run_batch(netlist, &sim.with_seed(*seed), flip_rate, *seed, &lanes, false)?;
            Ok(b.lanes.iter().map(|l| MismatchReport::from_counts(&l.mismatches, l.flips, sim.cycles)).collect())
        })
        .collect::<Result<_, SimError>>()?;
    let mut out: Vec<Vec<MismatchReport>> = jobs.iter().map(|_| Vec::new()).collect();
    for (&(j, _), reports) in tasks.iter().zip(done) {
        out[j].extend(reports);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupReport {
    pub group_index: usize,
    /// 1-based ranks (over the whole ranking) of the first and last member.
    pub first_rank: usize,
    pub last_rank: usize,
    pub members: Vec<usize>,
    pub mean_rate: f64,
    pub flips_injected: u64,
    pub per_seed: Vec<MismatchReport>,
}

/// Splits the ranked flip-flops into consecutive groups of `group_size`
/// and injects faults into one group at a time.
pub fn group_experiment<T: Scalar>(
    netlist: &Netlist,
    ranking: &Ranking<T>,
    group_size: usize,
    flip_rate: f64,
    sim: &SimConfig,
    seeds: &[u64],
) -> Result<Vec<GroupReport>, SimError> {
    if group_size == 0 {
        return Err(SimError::GroupSize);
    }
    let ffs: Vec<(usize, usize)> = ranking
        .entries
        .iter()
        .enumerate()
        .filter_map(|(pos, e)| match e.node {
            NodeRef::FlipFlop(f) => Some((pos + 1, f)),
            _ => None,
        })
        .collect();
    if let Some(&(_, f)) = ffs.iter().find(|(_, f)| *f >= netlist.flip_flops().len()) {
        return Err(SimError::RankingMismatch(f));
    }
    let groups: Vec<&[(usize, usize)]> = ffs.chunks(group_size).collect();
    let sets: Vec<Vec<usize>> = groups.iter().map(|g| g.iter().map(|&(_, f)| f).collect()).collect();
    let reports = simulate_sets(netlist, sim, &sets, flip_rate, seeds)?;
    Ok(groups
        .iter()
        .zip(reports)
        .enumerate()
        .map(|(i, (g, per_seed))| GroupReport {
            group_index: i,
            first_rank: g[0].0,
            last_rank: g[g.len() - 1].0,
            members: g.iter().map(|&(_, f)| f).collect(),
            mean_rate: mean(per_seed.iter().map(|r| r.output_bit_mismatch_rate)),
            flips_injected: per_seed.iter().map(|r| r.flips_injected).sum(),
            per_seed,
        })
        .collect())
}

pub(crate) fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CorrelationError {
    #[error("sequences differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 3 points, got {0}")]
    TooShort(usize),
    #[error("degenerate input: all values equal")]
    DegenerateInput,
}

/// 1-based ranks, ties sharing their average rank.
fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rho: Pearson correlation of average ranks.
pub fn rank_correlation(xs: &[f64], ys: &[f64]) -> Result<f64, CorrelationError> {
    if xs.len() != ys.len() {
        return Err(CorrelationError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 3 {
        return Err(CorrelationError::TooShort(xs.len()));
    }
    let (rx, ry) = (average_ranks(xs), average_ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(CorrelationError::DegenerateInput);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho between group position (most significant group scores
/// highest) and mean mismatch rate.
pub fn group_rank_correlation(groups: &[GroupReport]) -> Result<f64, CorrelationError> {
    let g = groups.len() as f64;
    let score: Vec<f64> = groups.iter().map(|r| g - r.group_index as f64).collect();
    let rates: Vec<f64> = groups.iter().map(|r| r.mean_rate).collect();
    rank_correlation(&score, &rates)
}
