//! The three bandit arms and the static baselines.
//!
//! Every selector is a pure function of [`PolicyInputs`]: switching arms
//! carries no hidden state across chunks. Decision-time arithmetic is integer
//! only; BOLA's log-utility table is precomputed once in [`BolaParams`].

use std::cmp::Ordering;

use crate::bandit::Arm;
use crate::error::{Error, Result};

/// Available bitrates, strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitrateLadder(Vec<u32>);

impl Default for BitrateLadder {
    fn default() -> Self {
        BitrateLadder(vec![300, 750, 1200, 1850, 2850, 4300])
    }
}

impl BitrateLadder {
    pub fn new(rungs_kbps: Vec<u32>) -> Result<Self> {
        if rungs_kbps.len() < 2 {
            return Err(Error::validation("ladder", "needs at least two rungs"));
        }
        if rungs_kbps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation("ladder", "rungs must strictly increase"));
        }
        if rungs_kbps[0] < 150 {
            return Err(Error::validation("ladder", "lowest rung must be at least 150 kbps"));
        }
        Ok(BitrateLadder(rungs_kbps))
    }

    pub fn rungs(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn lowest(&self) -> u32 {
        self.0[0]
    }

    pub fn highest(&self) -> u32 {
        *self.0.last().unwrap()
    }

    pub fn contains(&self, kbps: u32) -> bool {
        self.0.binary_search(&kbps).is_ok()
    }

    /// Highest rung not above `limit_kbps`, or the lowest rung if none is.
    pub fn highest_at_most(&self, limit_kbps: u64) -> u32 {
        self.0
            .iter()
            .rev()
            .find(|&&r| r as u64 <= limit_kbps)
            .copied()
            .unwrap_or(self.0[0])
    }
}

/// What the client can see when choosing the next chunk.
#[derive(Debug, Clone, Copy)]
pub struct PolicyInputs<'a> {
    pub buffer_us: u64,
    /// Per-chunk measured throughput, most recent last.
    pub throughput_samples: &'a [u32],
    pub prev_bitrate_kbps: Option<u32>,
    pub chunk_duration_us: u64,
}

/// Harmonic mean of the last `window` samples in integer kbps.
///
/// Reciprocals are summed at a scale of 10^6, each at least 1, so rates
/// beyond 10^6 kbps saturate.
pub fn harmonic_mean(samples: &[u32], window: usize) -> Result<u32> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("harmonic mean needs at least one sample"));
    }
    if window == 0 {
        return Err(Error::validation("window", "must be at least 1"));
    }
    const RECIP_SCALE: u64 = 1_000_000;
    let tail = &samples[samples.len().saturating_sub(window)..];
    let recip_sum: u64 = tail
        .iter()
        .map(|&x| (RECIP_SCALE / x.max(1) as u64).max(1))
        .sum();
    Ok((tail.len() as u64 * RECIP_SCALE / recip_sum) as u32)
}

/// Constants of the BOLA utility objective, in fixed point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BolaParams {
    /// `ln(rung / lowest)` per rung, scaled by 10^6.
    pub utility_micro: Vec<i64>,
    /// `gamma * p`, scaled by 10^6.
    pub gamma_micro: i64,
    /// Lyapunov weight V in milliseconds of buffer per unit utility.
    pub v_ms: i64,
    pub startup_threshold_us: u64,
}

impl BolaParams {
    /// BOLA-BASIC parameters placing the lowest→second rung switch at
    /// `reservoir_us` of buffer and the switch to the top rung at `target_us`.
    pub fn derive(
        ladder: &BitrateLadder,
        reservoir_us: u64,
        target_us: u64,
        startup_threshold_us: u64,
    ) -> Result<Self> {
        if target_us <= reservoir_us {
            return Err(Error::validation(
                "bola_target_s",
                "must exceed the BOLA reservoir",
            ));
        }
        let rungs: Vec<f64> = ladder.rungs().iter().map(|&r| r as f64).collect();
        let utils: Vec<f64> = rungs.iter().map(|r| (r / rungs[0]).ln()).collect();
        let m = rungs.len() - 1;
        let q_lo = reservoir_us as f64 / 1e6;
        let q_hi = target_us as f64 / 1e6;
        // Rungs i and i+1 score equally at buffer V * (gamma - offset(i)).
        let offset = |i: usize| {
            (rungs[i] * utils[i + 1] - rungs[i + 1] * utils[i]) / (rungs[i + 1] - rungs[i])
        };
        let (v, gamma) = if m == 1 {
            let gamma = 2.0 * offset(0);
            ((q_lo + q_hi) / 2.0 / (gamma - offset(0)), gamma)
        } else {
            let (a_lo, a_hi) = (offset(0), offset(m - 1));
            let v = (q_hi - q_lo) / (a_lo - a_hi);
            (v, q_lo / v + a_lo)
        };
        if !(v.is_finite() && v > 0.0 && gamma.is_finite()) {
            return Err(Error::validation("ladder", "cannot derive BOLA parameters"));
        }
        Ok(BolaParams {
            utility_micro: utils.iter().map(|u| (u * 1e6).round() as i64).collect(),
            gamma_micro: (gamma * 1e6).round() as i64,
            v_ms: (v * 1e3).round() as i64,
            startup_threshold_us,
        })
    }

    /// Objective numerator `V (v_m + gamma p) - Q` in 10^-9 s units.
    fn numerator(&self, rung_idx: usize, buffer_us: u64) -> i128 {
        self.v_ms as i128 * (self.utility_micro[rung_idx] + self.gamma_micro) as i128
            - buffer_us as i128 * 1000
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbrConfig {
    pub ladder: BitrateLadder,
    pub harmonic_window: usize,
    pub safety_permille: u32,
    pub cap_permille: u32,
    pub reservoir_us: u64,
    pub cushion_top_us: u64,
    pub bola: BolaParams,
}

impl Default for AbrConfig {
    fn default() -> Self {
        let ladder = BitrateLadder::default();
        let bola = BolaParams::derive(&ladder, 10_000_000, 55_000_000, 10_000_000)
            .expect("default ladder admits BOLA parameters");
        AbrConfig {
            ladder,
            harmonic_window: 3,
            safety_permille: 900,
            cap_permille: 1250,
            reservoir_us: 5_000_000,
            cushion_top_us: 30_000_000,
            bola,
        }
    }
}

impl AbrConfig {
    pub fn validate(&self) -> Result<()> {
        if self.harmonic_window == 0 {
            return Err(Error::validation("harmonic_window", "must be at least 1"));
        }
        if self.cushion_top_us <= self.reservoir_us {
            return Err(Error::validation("cushion_top_s", "must exceed the reservoir"));
        }
        if self.bola.utility_micro.len() != self.ladder.len() {
            return Err(Error::validation("bola", "utility table does not match the ladder"));
        }
        Ok(())
    }

    fn estimate(&self, inputs: &PolicyInputs) -> Option<u64> {
        harmonic_mean(inputs.throughput_samples, self.harmonic_window)
            .ok()
            .map(u64::from)
    }
}

/// Highest rung within 0.9x (configurable) of the harmonic-mean estimate.
pub fn throughput_select(inputs: &PolicyInputs, cfg: &AbrConfig) -> u32 {
    match cfg.estimate(inputs) {
        Some(est) => cfg
            .ladder
            .highest_at_most(est * cfg.safety_permille as u64 / 1000),
        None => cfg.ladder.lowest(),
    }
}

/// Maximizes `(V (v_m + gamma p) - Q) / S_m`; lowest rung on ties. Below the
/// startup threshold the choice is also capped by the throughput estimate.
pub fn bola_select(inputs: &PolicyInputs, cfg: &AbrConfig) -> u32 {
    let rungs = cfg.ladder.rungs();
    let mut best = 0;
    let mut best_num = cfg.bola.numerator(0, inputs.buffer_us);
    for m in 1..rungs.len() {
        let num = cfg.bola.numerator(m, inputs.buffer_us);
        // num_m / S_m > best_num / S_best, with chunk sizes proportional to rungs
        let lhs = num * rungs[best] as i128;
        let rhs = best_num * rungs[m] as i128;
        if lhs.cmp(&rhs) == Ordering::Greater {
            best = m;
            best_num = num;
        }
    }
    let choice = rungs[best];
    if inputs.buffer_us < cfg.bola.startup_threshold_us {
        if let Some(est) = cfg.estimate(inputs) {
            return choice.min(cfg.ladder.highest_at_most(est));
        }
    }
    choice
}

/// Linear buffer-to-rung map: lowest at or below the reservoir, highest at or
/// above the cushion top, rung index rounded down in between.
fn bba_rung(inputs: &PolicyInputs, cfg: &AbrConfig) -> u32 {
    let rungs = cfg.ladder.rungs();
    let b = inputs.buffer_us;
    if b <= cfg.reservoir_us {
        return rungs[0];
    }
    if b >= cfg.cushion_top_us {
        return *rungs.last().unwrap();
    }
    let span = cfg.cushion_top_us - cfg.reservoir_us;
    let idx = (rungs.len() as u64 - 1) * (b - cfg.reservoir_us) / span;
    rungs[idx as usize]
}

/// Plain buffer-based rate adaptation, no bandwidth gate.
pub fn pure_buffer_select(inputs: &PolicyInputs, cfg: &AbrConfig) -> u32 {
    bba_rung(inputs, cfg)
}

/// Buffer-based choice gated by 1.25x (configurable) of the throughput estimate.
pub fn hybrid_select(inputs: &PolicyInputs, cfg: &AbrConfig) -> u32 {
    let bba = bba_rung(inputs, cfg);
    match cfg.estimate(inputs) {
        Some(est) => bba.min(
            cfg.ladder
                .highest_at_most(est * cfg.cap_permille as u64 / 1000),
        ),
        None => bba,
    }
}

/// Dispatches to the selector behind a bandit arm.
pub fn select_for_arm(arm: Arm, inputs: &PolicyInputs, cfg: &AbrConfig) -> u32 {
    match arm {
        Arm::Throughput => throughput_select(inputs, cfg),
        Arm::Bola => bola_select(inputs, cfg),
        Arm::HybridBba => hybrid_select(inputs, cfg),
    }
}
