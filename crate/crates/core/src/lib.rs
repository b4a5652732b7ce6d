//! Flip-flop significance ranking for gate-level sequential netlists.
//!
//! The pipeline is: parse a `.bench` netlist ([`netlist`]), compute
//! per-pin logic distribution factors ([`influence`]), build one logic graph
//! per endpoint and propagate them into a DF matrix ([`graphs`],
//! [`serial::procedure1_all`]), assemble the significance graph and
//! propagate output significance back to flip-flops and inputs
//! ([`serial::procedure2`]). [`faultsim`] and [`hardening`] evaluate a
//! ranking by fault injection.
//!
//! Everything numeric is generic over [`Scalar`]; `f64` is the working type
//! and [`Exact`] (big rationals) is used by oracles and tests.

pub mod faultsim;
pub mod fixtures;
pub mod graphs;
pub mod hardening;
pub mod influence;
pub mod netlist;
pub mod oracle;
pub mod scalar;
pub mod serial;

pub use scalar::Scalar;

/// Arbitrary-precision rational scalar.
pub type Exact = num_rational::BigRational;

pub type LogicGraphF64 = graphs::LogicGraph<f64>;
pub type DfMatrixF64 = graphs::DfMatrix<f64>;
pub type SignificanceGraphF64 = graphs::SignificanceGraph<f64>;
pub type SignificanceGraphExact = graphs::SignificanceGraph<Exact>;
pub type SignificanceVectorF64 = serial::SignificanceVector<f64>;
pub type RankingF64 = serial::Ranking<f64>;
