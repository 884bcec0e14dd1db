//! Trace-driven simulation of bandit-based ABR policy selection.
//!
//! A three-arm epsilon-greedy bandit picks, at every chunk boundary, which of
//! three ABR heuristics (throughput, BOLA, hybrid BBA) chooses the next
//! bitrate. Arms are scored per RTT from simulated TCP signals with an
//! integer-only reward, so the decision path is portable to an in-kernel
//! implementation. Sessions are scored offline with a log-utility QoE model.
//!
//! Module map:
//! - [`trace`]: bandwidth traces, the adversarial generator, log import
//! - [`netsim`]: chunk downloads, playout buffer, RTT/delivery-rate synthesis
//! - [`reward`]: fixed-point per-RTT reward
//! - [`bandit`]: arm statistics, selection, shock detection, warm start
//! - [`abr`]: the three arms and the pure buffer-based baseline
//! - [`metrics`]: QoE, aggregates, Wilcoxon signed-rank test
//! - [`harness`]: sessions, experiments, results files

pub mod abr;
pub mod bandit;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod netsim;
pub mod reward;
pub mod trace;

pub use error::{Error, Result};

/// QoE parameters in double precision.
pub type QoeParams = metrics::QoeParams<f64>;
/// Per-chunk QoE breakdown in double precision.
pub type ChunkQoe = metrics::ChunkQoe<f64>;
/// Session/sweep aggregate in double precision.
pub type Aggregate = metrics::Aggregate<f64>;
/// Wilcoxon outcome in double precision.
pub type WilcoxonResult = metrics::WilcoxonResult<f64>;
