//! Per-RTT reward from raw TCP signals, integer-only.
//!
//! The reward blends a latency ratio (`rtt_min / rtt`) and a throughput ratio
//! (`delivery_rate / d_max`), each scaled by [`SCALE`] and truncated before the
//! weighted average:
//!
//! ```text
//! ratio_r = S * rtt_min / rtt
//! ratio_d = S * d / d_max
//! r       = (w_r * ratio_r + w_d * ratio_d) / (w_r + w_d)
//! ```
//!
//! No step uses floating point, so the same code is valid inside a BPF program.

use crate::error::{Error, Result};
use crate::netsim::RttSample;

pub const SCALE: u32 = 1000;
pub const WEIGHT_RTT: u32 = 6;
pub const WEIGHT_DELIVERY: u32 = 4;

/// A reward in `[0, SCALE]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct RewardValue(u32);

impl RewardValue {
    pub const MAX: RewardValue = RewardValue(SCALE);

    pub fn new(value: u32) -> Result<Self> {
        if value > SCALE {
            return Err(Error::Contract(format!("reward {value} exceeds {SCALE}")));
        }
        Ok(RewardValue(value))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

/// Running RTT minimum and delivery-rate maximum for one flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RewardTracker {
    rtt_min_us: u32,
    d_max_kbps: u32,
    initialized: bool,
    pub w_r: u32,
    pub w_d: u32,
    pub scale: u32,
}

impl Default for RewardTracker {
    fn default() -> Self {
        RewardTracker {
            rtt_min_us: u32::MAX,
            d_max_kbps: 0,
            initialized: false,
            w_r: WEIGHT_RTT,
            w_d: WEIGHT_DELIVERY,
            scale: SCALE,
        }
    }
}

impl RewardTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// A tracker with explicit extrema, for tests and replay.
    pub fn with_extrema(rtt_min_us: u32, d_max_kbps: u32) -> Self {
        RewardTracker {
            rtt_min_us,
            d_max_kbps,
            initialized: true,
            ..Default::default()
        }
    }

    pub fn rtt_min_us(&self) -> Option<u32> {
        self.initialized.then_some(self.rtt_min_us)
    }

    pub fn d_max_kbps(&self) -> Option<u32> {
        self.initialized.then_some(self.d_max_kbps)
    }

    pub fn observe(&mut self, sample: &RttSample) {
        self.rtt_min_us = self.rtt_min_us.min(sample.rtt_us);
        self.d_max_kbps = self.d_max_kbps.max(sample.delivery_rate_kbps);
        self.initialized = true;
    }

    /// Scores one RTT sample. The caller observes the sample first, so
    /// `rtt_us >= rtt_min` and `d_kbps <= d_max` hold.
    pub fn compute(&self, rtt_us: u32, d_kbps: u32) -> Result<RewardValue> {
        if !self.initialized {
            return Err(Error::Contract("reward computed before any observation".into()));
        }
        if rtt_us < self.rtt_min_us || d_kbps > self.d_max_kbps || rtt_us == 0 {
            return Err(Error::Contract(format!(
                "sample (rtt {rtt_us} us, {d_kbps} kbps) outside observed extrema"
            )));
        }
        let s = self.scale as u64;
        let ratio_r = s * self.rtt_min_us as u64 / rtt_us as u64;
        let ratio_d = s * d_kbps as u64 / self.d_max_kbps as u64;
        let r = (self.w_r as u64 * ratio_r + self.w_d as u64 * ratio_d)
            / (self.w_r + self.w_d) as u64;
        Ok(RewardValue(r as u32))
    }

    /// Observe-then-compute for one sample.
    pub fn score(&mut self, sample: &RttSample) -> RewardValue {
        self.observe(sample);
        self.compute(sample.rtt_us, sample.delivery_rate_kbps)
            .expect("observed sample lies within extrema")
    }
}
