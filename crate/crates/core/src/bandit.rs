//! Three-arm epsilon-greedy bandit with integer-only state.
//!
//! Each arm is a `<pull_count, total_reward>` pair. Means are never formed:
//! arms are ranked by cross-multiplying totals and counts. Randomness comes
//! from a xorshift32 generator standing in for the kernel's
//! `bpf_get_prandom_u32()`, so a seed fully determines a run.
//!
//! A shock detector sits in front of the exploration step. When the newer
//! 2-chunk throughput average exceeds the older one by more than the
//! threshold, the Throughput arm is forced for a cooldown window.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::reward::{RewardValue, SCALE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Arm {
    Throughput = 0,
    Bola = 1,
    HybridBba = 2,
}

impl Arm {
    pub const ALL: [Arm; 3] = [Arm::Throughput, Arm::Bola, Arm::HybridBba];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Arm> {
        Arm::ALL
            .get(i)
            .copied()
            .ok_or_else(|| Error::Contract(format!("arm id {i} out of range")))
    }

    pub fn name(self) -> &'static str {
        match self {
            Arm::Throughput => "throughput",
            Arm::Bola => "bola",
            Arm::HybridBba => "hybrid",
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ArmStats {
    pub pull_count: u32,
    pub total_reward: u64,
}

impl ArmStats {
    pub fn new(pull_count: u32, total_reward: u64) -> Self {
        ArmStats {
            pull_count,
            total_reward,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.total_reward <= self.pull_count as u64 * SCALE as u64
            && (self.pull_count > 0 || self.total_reward == 0)
    }

    pub fn record(&mut self, r: RewardValue) {
        self.pull_count += 1;
        self.total_reward += r.get() as u64;
    }

    /// Mean rounded half-up. `None` for an unpulled arm.
    pub fn mean_rounded(&self) -> Option<u64> {
        let n = self.pull_count as u64;
        (n > 0).then(|| (2 * self.total_reward + n) / (2 * n))
    }
}

/// Ranks two arms by mean reward without dividing. `Greater` means `a` wins.
///
/// An unpulled arm beats any pulled arm; two unpulled arms tie.
pub fn better_arm(a: &ArmStats, b: &ArmStats) -> Ordering {
    match (a.pull_count, b.pull_count) {
        (0, 0) => Ordering::Equal,
        (0, _) => Ordering::Greater,
        (_, 0) => Ordering::Less,
        (na, nb) => {
            let lhs = a.total_reward as u128 * nb as u128;
            let rhs = b.total_reward as u128 * na as u128;
            lhs.cmp(&rhs)
        }
    }
}

/// xorshift32 (13, 17, 5).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Xorshift32 {
    state: u32,
}

impl Xorshift32 {
    pub fn new(seed: u32) -> Result<Self> {
        if seed == 0 {
            return Err(Error::validation("seed", "xorshift32 state must be nonzero"));
        }
        Ok(Xorshift32 { state: seed })
    }

    pub fn state(&self) -> u32 {
        self.state
    }

    pub fn next_u32(&mut self) -> u32 {
        let mut x = self.state;
        x ^= x << 13;
        x ^= x >> 17;
        x ^= x << 5;
        self.state = x;
        x
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShockState {
    recent_bw: [u32; 4],
    filled: usize,
    pub cooldown_remaining: u32,
    pub threshold_permille: u32,
    pub cooldown_len: u32,
}

impl Default for ShockState {
    fn default() -> Self {
        ShockState::new(2500, 5)
    }
}

impl ShockState {
    pub fn new(threshold_permille: u32, cooldown_len: u32) -> Self {
        ShockState {
            recent_bw: [0; 4],
            filled: 0,
            cooldown_remaining: 0,
            threshold_permille,
            cooldown_len,
        }
    }

    /// Up to the last four measurements, oldest first.
    pub fn recent(&self) -> &[u32] {
        &self.recent_bw[4 - self.filled..]
    }

    /// Pushes one per-chunk throughput and reports whether a shock fired.
    pub fn detect(&mut self, chunk_bw_kbps: u32) -> bool {
        self.recent_bw.rotate_left(1);
        self.recent_bw[3] = chunk_bw_kbps.max(1);
        self.filled = (self.filled + 1).min(4);
        if self.filled < 4 {
            return false;
        }
        let [b3, b2, b1, b0] = self.recent_bw.map(u64::from);
        let fired = 1000 * (b0 + b1) > self.threshold_permille as u64 * (b2 + b3);
        if fired {
            self.cooldown_remaining = self.cooldown_len;
        }
        fired
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionKind {
    /// Forced by the shock detector's cooldown.
    Shock,
    Explore,
    Exploit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Selection {
    pub arm: Arm,
    pub kind: SelectionKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BanditState {
    pub arms: [ArmStats; 3],
    eps_permille: u32,
    prng: Xorshift32,
    pub active_arm: Arm,
    pub shock: ShockState,
    draws: u64,
}

impl BanditState {
    pub fn new(eps_permille: u32, seed: u32, shock: ShockState) -> Result<Self> {
        if eps_permille > 1000 {
            return Err(Error::validation("epsilon_permille", "must be at most 1000"));
        }
        Ok(BanditState {
            arms: [ArmStats::default(); 3],
            eps_permille,
            prng: Xorshift32::new(seed)?,
            active_arm: Arm::Throughput,
            shock,
            draws: 0,
        })
    }

    pub fn eps_permille(&self) -> u32 {
        self.eps_permille
    }

    /// Number of PRNG draws consumed so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }

    fn draw(&mut self) -> u32 {
        self.draws += 1;
        self.prng.next_u32()
    }

    /// Greedy arm; ties go to the lowest id. Unrolled over the three arms.
    pub fn greedy_arm(&self) -> Arm {
        let [a0, a1, a2] = &self.arms;
        let mut best = Arm::Throughput;
        let mut best_stats = a0;
        if better_arm(a1, best_stats) == Ordering::Greater {
            best = Arm::Bola;
            best_stats = a1;
        }
        if better_arm(a2, best_stats) == Ordering::Greater {
            best = Arm::HybridBba;
        }
        best
    }

    /// Elects the arm for the next chunk.
    pub fn select_arm(&mut self) -> Selection {
        let selection = if self.shock.cooldown_remaining > 0 {
            self.shock.cooldown_remaining -= 1;
            Selection {
                arm: Arm::Throughput,
                kind: SelectionKind::Shock,
            }
        } else if self.draw() % 1000 < self.eps_permille {
            let arm = Arm::ALL[(self.draw() % 3) as usize];
            Selection {
                arm,
                kind: SelectionKind::Explore,
            }
        } else {
            Selection {
                arm: self.greedy_arm(),
                kind: SelectionKind::Exploit,
            }
        };
        self.active_arm = selection.arm;
        selection
    }

    pub fn record_reward(&mut self, arm: Arm, r: RewardValue) {
        self.arms[arm.index()].record(r);
    }

    /// Feeds one per-chunk throughput measurement to the shock detector.
    pub fn observe_chunk_throughput(&mut self, kbps: u32) -> bool {
        self.shock.detect(kbps)
    }
}

/// Seeds a fresh bandit with calibration means at a fixed prior weight.
pub fn warm_start(
    calibration: &[ArmStats; 3],
    prior_pulls: u32,
    mut fresh: BanditState,
) -> Result<BanditState> {
    if prior_pulls == 0 {
        return Err(Error::validation("prior_pulls", "must be at least 1"));
    }
    for (arm, stats) in Arm::ALL.iter().zip(calibration) {
        let mean = stats.mean_rounded().ok_or_else(|| {
            Error::Contract(format!("calibration never pulled arm `{arm}`"))
        })?;
        fresh.arms[arm.index()] = ArmStats::new(prior_pulls, mean * prior_pulls as u64);
    }
    Ok(fresh)
}

/// Renders per-arm stats as `arm_id pull_count total_reward` lines.
pub fn format_priors(arms: &[ArmStats; 3]) -> String {
    let mut out = String::from("# arm_id pull_count total_reward\n");
    for (i, a) in arms.iter().enumerate() {
        out.push_str(&format!("{i} {} {}\n", a.pull_count, a.total_reward));
    }
    out
}

pub fn parse_priors(text: &str) -> Result<[ArmStats; 3]> {
    let mut arms: [Option<ArmStats>; 3] = [None; 3];
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [id, pulls, total] = fields[..] else {
            return Err(Error::parse(line_no, "expected `arm_id pull_count total_reward`"));
        };
        let num = |s: &str| {
            u64::from_str(s).map_err(|_| Error::parse(line_no, format!("bad number `{s}`")))
        };
        let id = num(id)? as usize;
        let pulls = u32::try_from(num(pulls)?)
            .map_err(|_| Error::parse(line_no, "pull_count exceeds 32 bits"))?;
        let stats = ArmStats::new(pulls, num(total)?);
        if !stats.is_consistent() {
            return Err(Error::parse(line_no, "total_reward exceeds 1000 per pull"));
        }
        let slot = arms
            .get_mut(id)
            .ok_or_else(|| Error::parse(line_no, format!("arm id {id} out of range")))?;
        if slot.replace(stats).is_some() {
            return Err(Error::parse(line_no, format!("duplicate arm id {id}")));
        }
    }
    let mut out = [ArmStats::default(); 3];
    for (i, slot) in arms.into_iter().enumerate() {
        out[i] = slot.ok_or_else(|| Error::parse(0, format!("missing arm id {i}")))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rv(v: u32) -> RewardValue {
        RewardValue::new(v).unwrap()
    }

    #[test]
    fn cross_multiplication() {
        let a = ArmStats::new(10, 100);
        let b = ArmStats::new(9, 99);
        assert_eq!(better_arm(&a, &b), Ordering::Less);
        assert_eq!(better_arm(&b, &a), Ordering::Greater);
        assert_eq!(
            better_arm(&ArmStats::new(5, 500), &ArmStats::new(10, 1000)),
            Ordering::Equal
        );
        assert_eq!(
            better_arm(&ArmStats::new(0, 0), &ArmStats::new(100, 90_000)),
            Ordering::Greater
        );
        assert_eq!(
            better_arm(&ArmStats::default(), &ArmStats::default()),
            Ordering::Equal
        );
    }

    #[test]
    fn xorshift_vectors() {
        let mut p = Xorshift32::new(1).unwrap();
        assert_eq!(p.next_u32(), 270_369);
        let mut p = Xorshift32::new(2_463_534_242).unwrap();
        assert_eq!(p.next_u32(), 723_471_715);
        assert!(Xorshift32::new(0).is_err());
        let a: Vec<u32> = {
            let mut p = Xorshift32::new(99).unwrap();
            (0..50).map(|_| p.next_u32()).collect()
        };
        let b: Vec<u32> = {
            let mut p = Xorshift32::new(99).unwrap();
            (0..50).map(|_| p.next_u32()).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn record_updates() {
        let mut a = ArmStats::default();
        a.record(rv(700));
        assert_eq!(a, ArmStats::new(1, 700));
        let mut a = ArmStats::new(5, 2500);
        a.record(rv(0));
        assert_eq!(a, ArmStats::new(6, 2500));
        let mut a = ArmStats::new(5, 2500);
        a.record(rv(1000));
        assert_eq!(a, ArmStats::new(6, 3500));
        assert!(Arm::from_index(3).is_err());
    }

    #[test]
    fn shock_thresholds() {
        let mut s = ShockState::default();
        assert!(!s.detect(1000));
        assert!(!s.detect(1000));
        assert!(!s.detect(2600));
        assert!(s.detect(2600));
        assert_eq!(s.cooldown_remaining, 5);

        let mut s = ShockState::default();
        for bw in [1000, 1000, 2000, 2000] {
            assert!(!s.detect(bw));
        }
        let mut s = ShockState::default();
        assert!((0..100).all(|_| !s.detect(3000)));
        assert_eq!(s.recent(), &[3000; 4]);
    }

    #[test]
    fn greedy_without_exploration() {
        let mut b = BanditState::new(0, 7, ShockState::default()).unwrap();
        b.arms = [
            ArmStats::new(10, 9000),
            ArmStats::new(10, 5000),
            ArmStats::new(10, 5000),
        ];
        for _ in 0..100 {
            assert_eq!(b.select_arm().arm, Arm::Throughput);
        }
        b.arms[2] = ArmStats::new(10, 9000);
        assert_eq!(b.greedy_arm(), Arm::Throughput, "ties go to the lowest id");
    }

    #[test]
    fn cooldown_forces_throughput() {
        let mut b = BanditState::new(1000, 7, ShockState::default()).unwrap();
        b.arms[1] = ArmStats::new(1, 1000);
        b.shock.cooldown_remaining = 3;
        let s = b.select_arm();
        assert_eq!((s.arm, s.kind), (Arm::Throughput, SelectionKind::Shock));
        assert_eq!(b.shock.cooldown_remaining, 2);
        assert_eq!(b.draws(), 0);
    }

    #[test]
    fn warm_start_preserves_means() {
        let calib = [
            ArmStats::new(3, 1800),
            ArmStats::new(4, 3000),
            ArmStats::new(2, 1000),
        ];
        let fresh = BanditState::new(0, 1, ShockState::default()).unwrap();
        let warm = warm_start(&calib, 100, fresh.clone()).unwrap();
        assert_eq!(
            warm.arms,
            [
                ArmStats::new(100, 60_000),
                ArmStats::new(100, 75_000),
                ArmStats::new(100, 50_000)
            ]
        );
        assert_eq!(warm.greedy_arm(), Arm::Bola);
        let unit = warm_start(&calib, 1, fresh.clone()).unwrap();
        assert_eq!(
            unit.arms,
            [ArmStats::new(1, 600), ArmStats::new(1, 750), ArmStats::new(1, 500)]
        );
        // half-up rounding
        let calib = [ArmStats::new(2, 1001), ArmStats::new(2, 1000), ArmStats::new(1, 0)];
        let w = warm_start(&calib, 1, fresh.clone()).unwrap();
        assert_eq!(w.arms[0].total_reward, 501);
        let calib = [ArmStats::new(2, 1001), ArmStats::default(), ArmStats::new(1, 0)];
        assert!(matches!(warm_start(&calib, 1, fresh.clone()), Err(Error::Contract(_))));
        assert!(warm_start(&[ArmStats::new(1, 1); 3], 0, fresh).is_err());
    }

    #[test]
    fn prior_file_roundtrip() {
        let arms = [ArmStats::new(100, 60_000), ArmStats::new(7, 10), ArmStats::new(1, 0)];
        let text = format_priors(&arms);
        assert_eq!(parse_priors(&text).unwrap(), arms);
        assert!(parse_priors("0 1 10\n1 1 10\n").is_err());
        assert!(parse_priors("0 1 10\n1 1 10\n2 1 2000\n").is_err());
        assert!(parse_priors("0 1 10\n1 1 10\n1 1 10\n").is_err());
        assert!(parse_priors("0 1 10\n1 1 10\n3 1 10\n").is_err());
    }
}
