//! Selective hardening: protect the most significant flip-flops and score
//! the choice by fault injection.
//!
//! Protected flip-flops never flip; every other flip-flop flips at the
//! configured rate. Hardening one flip-flop doubles its area, so the area
//! overhead relative to the flip-flop area equals the coverage.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::faultsim::{mean, run_per_seed, MismatchReport, SimConfig, SimError};
use crate::netlist::{Netlist, NodeRef};
use crate::scalar::Scalar;
use crate::serial::Ranking;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    SerialTop,
    Random { seed: u64 },
}

impl Policy {
    pub fn label(&self) -> &'static str {
        match self {
            Policy::SerialTop => "serial",
            Policy::Random { .. } => "random",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Policy {
    type Err = HardeningError;

    /// `serial`, `random` (seed 0) or `random:SEED`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "serial" | "serial-top" => Ok(Policy::SerialTop),
            "random" => Ok(Policy::Random { seed: 0 }),
            _ => s
                .strip_prefix("random:")
                .and_then(|n| n.parse().ok())
                .map(|seed| Policy::Random { seed })
                .ok_or_else(|| HardeningError::Policy(s.to_string())),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum HardeningError {
    #[error("coverage {0} outside [0, 1]")]
    Coverage(f64),
    #[error("unknown policy `{0}` (expected serial, random or random:SEED)")]
    Policy(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardeningPlan {
    pub protected: BTreeSet<usize>,
    pub coverage: f64,
    pub policy: Policy,
}

impl HardeningPlan {
    fn victims(&self, netlist: &Netlist) -> Vec<usize> {
        (0..netlist.flip_flops().len()).filter(|f| !self.protected.contains(f)).collect()
    }
}

fn ranked_flip_flops<T: Scalar>(ranking: &Ranking<T>) -> Vec<usize> {
    ranking
        .entries
        .iter()
        .filter_map(|e| match e.node {
            NodeRef::FlipFlop(f) => Some(f),
            _ => None,
        })
        .collect()
}

/// Chooses `round(coverage * #FF)` flip-flops. Inputs are never protected.
pub fn select<T: Scalar>(ranking: &Ranking<T>, coverage: f64, policy: Policy) -> Result<HardeningPlan, HardeningError> {
    if !(0.0..=1.0).contains(&coverage) {
        return Err(HardeningError::Coverage(coverage));
    }
    let ffs = ranked_flip_flops(ranking);
    let k = (coverage * ffs.len() as f64).round() as usize;
    let protected = match policy {
        Policy::SerialTop => ffs[..k].iter().copied().collect(),
        Policy::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            sample(&mut rng, ffs.len(), k).into_iter().map(|i| ffs[i]).collect()
        }
    };
    Ok(HardeningPlan { protected, coverage, policy })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardeningEvaluation {
    pub coverage: f64,
    pub flip_rate: f64,
    pub mean_rate: f64,
    pub stddev: f64,
    pub area_overhead: f64,
    pub per_seed: Vec<MismatchReport>,
}

impl HardeningEvaluation {
    fn new(coverage: f64, flip_rate: f64, per_seed: Vec<MismatchReport>) -> Self {
        let rates: Vec<f64> = per_seed.iter().map(|r| r.output_bit_mismatch_rate).collect();
        let m = mean(rates.iter().copied());
        let stddev = if rates.len() > 1 {
            (rates.iter().map(|r| (r - m) * (r - m)).sum::<f64>() / (rates.len() - 1) as f64).sqrt()
        } else {
            0.0
        };
        HardeningEvaluation { coverage, flip_rate, mean_rate: m, stddev, area_overhead: coverage, per_seed }
    }
}

/// Seed-averaged mismatch rate of `plan`. Simulation and fault seeds are
/// both taken from `seeds`.
pub fn evaluate(
    netlist: &Netlist,
    plan: &HardeningPlan,
    flip_rate: f64,
    sim: &SimConfig,
    seeds: &[u64],
) -> Result<HardeningEvaluation, HardeningError> {
    if let Some(&f) = plan.protected.iter().find(|&&f| f >= netlist.flip_flops().len()) {
        return Err(SimError::UnknownFlipFlop(f).into());
    }
    let victims = plan.victims(netlist);
    let jobs: Vec<(u64, Vec<Vec<usize>>)> = seeds.iter().map(|&s| (s, vec![victims.clone()])).collect();
    let per_seed = run_per_seed(netlist, sim, flip_rate, &jobs)?.into_iter().map(|mut v| v.remove(0)).collect();
    Ok(HardeningEvaluation::new(plan.coverage, flip_rate, per_seed))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub policy: String,
    pub coverage: f64,
    pub flip_rate: f64,
    pub mean_rate: f64,
    pub stddev: f64,
    pub area_overhead: f64,
}

/// Selection seed of a random plan for one (coverage, simulation seed) cell.
fn random_draw_seed(policy_seed: u64, coverage_index: usize, sim_seed: u64) -> u64 {
    let mut z = policy_seed ^ (coverage_index as u64).rotate_left(32) ^ sim_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    // splitmix64 finaliser
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Cross product of policies, coverages and flip rates.
///
/// Within one simulation seed every plan shares the input stream and the
/// per-flip-flop flip times. A random policy draws a fresh selection for
/// every coverage point and simulation seed, so its mean also averages over
/// selections.
pub fn sweep<T: Scalar>(
    netlist: &Netlist,
    ranking: &Ranking<T>,
    policies: &[Policy],
    coverages: &[f64],
    flip_rates: &[f64],
    sim: &SimConfig,
    seeds: &[u64],
) -> Result<Vec<SweepRow>, HardeningError> {
    for &c in coverages {
        if !(0.0..=1.0).contains(&c) {
            return Err(HardeningError::Coverage(c));
        }
    }
    let cells: Vec<(Policy, usize)> = policies.iter().flat_map(|&p| (0..coverages.len()).map(move |c| (p, c))).collect();
    let plan_for = |p: Policy, c: usize, seed: u64| -> Result<HardeningPlan, HardeningError> {
        let p = match p {
            Policy::Random { seed: base } => Policy::Random { seed: random_draw_seed(base, c, seed) },
            other => other,
        };
        select(ranking, coverages[c], p)
    };
    let jobs: Vec<(u64, Vec<Vec<usize>>)> = seeds
        .iter()
        .map(|&s| {
            let sets = cells.iter().map(|&(p, c)| plan_for(p, c, s).map(|plan| plan.victims(netlist))).collect::<Result<_, _>>()?;
            Ok((s, sets))
        })
        .collect::<Result<_, HardeningError>>()?;
    let mut rows = Vec::new();
    for &rate in flip_rates {
        let per_seed = run_per_seed(netlist, sim, rate, &jobs)?;
        for (k, &(p, c)) in cells.iter().enumerate() {
            let reports = per_seed.iter().map(|v| v[k].clone()).collect();
            let e = HardeningEvaluation::new(coverages[c], rate, reports);
            rows.push(SweepRow {
                policy: p.label().to_string(),
                coverage: e.coverage,
                flip_rate: rate,
                mean_rate: e.mean_rate,
                stddev: e.stddev,
                area_overhead: e.area_overhead,
            });
        }
    }
    Ok(rows)
}

/// `policy,coverage,flip_rate,mean_rate,stddev,area_overhead`.
pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("policy,coverage,flip_rate,mean_rate,stddev,area_overhead\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{},{},{}\n", r.policy, r.coverage, r.flip_rate, r.mean_rate, r.stddev, r.area_overhead));
    }
    s
}
