//! Experiment configuration and its flat `key = value` file form.
//!
//! The file is TOML restricted to top-level keys; every key is optional and
//! falls back to the defaults below. See the README for the full key list.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;

use crate::abr::{AbrConfig, BitrateLadder, BolaParams};
use crate::bandit::{Arm, ShockState};
use crate::error::{Error, Result};
use crate::metrics::QoeParams;
use crate::netsim::NetConfig;
use crate::trace::AdversarialSpec;

/// A policy under evaluation: a static heuristic or the bandit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PolicyKind {
    Throughput,
    Buffer,
    Hybrid,
    BanditCold,
    BanditWarm,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::Throughput,
        PolicyKind::Buffer,
        PolicyKind::Hybrid,
        PolicyKind::BanditCold,
        PolicyKind::BanditWarm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Throughput => "throughput",
            PolicyKind::Buffer => "buffer",
            PolicyKind::Hybrid => "hybrid",
            PolicyKind::BanditCold => "bandit_cold",
            PolicyKind::BanditWarm => "bandit_warm",
        }
    }

    pub fn is_bandit(self) -> bool {
        matches!(self, PolicyKind::BanditCold | PolicyKind::BanditWarm)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::validation("policy", format!("unknown policy `{s}`")))
    }
}

/// Fixed-arm policies a session can run without the bandit. `Bola` appears
/// only as a calibration arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StaticPolicy {
    Throughput,
    Bola,
    Hybrid,
    PureBuffer,
}

impl From<Arm> for StaticPolicy {
    fn from(arm: Arm) -> Self {
        match arm {
            Arm::Throughput => StaticPolicy::Throughput,
            Arm::Bola => StaticPolicy::Bola,
            Arm::HybridBba => StaticPolicy::Hybrid,
        }
    }
}

/// Everything a single session needs besides its trace, policy and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    pub chunks: u32,
    pub epsilon_permille: u32,
    pub prior_pulls: u32,
    pub shock_threshold_permille: u32,
    pub cooldown_chunks: u32,
    pub net: NetConfig,
    pub abr: AbrConfig,
    pub qoe: QoeParams<f64>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            chunks: 180,
            epsilon_permille: 50,
            prior_pulls: 100,
            shock_threshold_permille: 2500,
            cooldown_chunks: 5,
            net: NetConfig::default(),
            abr: AbrConfig::default(),
            qoe: QoeParams::default(),
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chunks == 0 {
            return Err(Error::validation("chunks", "must be positive"));
        }
        if self.epsilon_permille > 1000 {
            return Err(Error::validation("epsilon_permille", "must be at most 1000"));
        }
        if self.prior_pulls == 0 {
            return Err(Error::validation("prior_pulls", "must be at least 1"));
        }
        if (self.abr.ladder.lowest() as f64) < self.qoe.base_kbps {
            return Err(Error::validation("ladder", "lowest rung is below the QoE base"));
        }
        self.net.validate()?;
        self.abr.validate()?;
        self.qoe.validate()
    }

    pub fn shock_state(&self) -> ShockState {
        ShockState::new(self.shock_threshold_permille, self.cooldown_chunks)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceSelection {
    Adversarial(AdversarialSpec),
    /// Files, or directories whose files are taken in name order.
    Paths(Vec<PathBuf>),
}

impl TraceSelection {
    pub fn is_adversarial(&self) -> bool {
        matches!(self, TraceSelection::Adversarial(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub policies: Vec<PolicyKind>,
    pub seeds: Vec<u32>,
    pub traces: TraceSelection,
    pub calibration_traces: Vec<PathBuf>,
    /// When no calibration traces are listed, withhold this many evaluation
    /// traces (in name order) for warm-start calibration.
    pub calibration_holdout: usize,
    /// A prior file from `calibrate`, used instead of calibrating in-process.
    pub priors: Option<PathBuf>,
    pub session: SessionConfig,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            policies: vec![
                PolicyKind::Throughput,
                PolicyKind::Buffer,
                PolicyKind::Hybrid,
                PolicyKind::BanditCold,
            ],
            seeds: (1..=10).collect(),
            traces: TraceSelection::Adversarial(AdversarialSpec::default()),
            calibration_traces: Vec::new(),
            calibration_holdout: 8,
            priors: None,
            session: SessionConfig::default(),
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.policies.is_empty() {
            return Err(Error::validation("policies", "must not be empty"));
        }
        if self.seeds.is_empty() {
            return Err(Error::validation("seeds", "must not be empty"));
        }
        if self.seeds.contains(&0) {
            return Err(Error::validation("seeds", "seed 0 is not a valid PRNG state"));
        }
        if self.policies.contains(&PolicyKind::BanditWarm)
            && self.priors.is_none()
            && self.calibration_traces.is_empty()
            && (self.traces.is_adversarial() || self.calibration_holdout == 0)
        {
            return Err(Error::validation(
                "calibration_traces",
                "bandit_warm needs calibration traces or a prior file",
            ));
        }
        if let TraceSelection::Adversarial(spec) = &self.traces {
            spec.validate()?;
        }
        self.session.validate()
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses config text; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map_or(0, |s| text[..s.start].matches('\n').count() + 1);
            Error::parse(line, e.message().to_string())
        })?;
        raw.into_config(base_dir)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    policies: Option<Vec<String>>,
    epsilon_permille: Option<u32>,
    seeds: Option<u32>,
    seed_list: Option<Vec<u32>>,
    traces: Option<String>,
    calibration_traces: Option<Vec<String>>,
    calibration_holdout: Option<usize>,
    priors: Option<String>,
    output: Option<String>,

    chunks: Option<u32>,
    prior_pulls: Option<u32>,
    shock_threshold_permille: Option<u32>,
    cooldown_chunks: Option<u32>,

    chunk_duration_s: Option<f64>,
    buffer_cap_s: Option<f64>,
    base_rtt_us: Option<u32>,
    max_rtt_inflation_permille: Option<u32>,

    ladder_kbps: Option<Vec<u32>>,
    harmonic_window: Option<usize>,
    safety_permille: Option<u32>,
    cap_permille: Option<u32>,
    reservoir_s: Option<f64>,
    cushion_top_s: Option<f64>,
    bola_reservoir_s: Option<f64>,
    bola_target_s: Option<f64>,
    bola_startup_threshold_s: Option<f64>,

    qoe_base_kbps: Option<f64>,
    qoe_lambda: Option<f64>,
    qoe_mu: Option<f64>,

    jitter_high_kbps: Option<u32>,
    jitter_low_kbps: Option<u32>,
    jitter_period_chunks: Option<u32>,
    cliff_kbps: Option<u32>,
    rocket_kbps: Option<u32>,
}

fn seconds_to_us(field: &'static str, s: f64) -> Result<u64> {
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::validation(field, "must be a non-negative number of seconds"));
    }
    Ok((s * 1e6).round() as u64)
}

impl RawConfig {
    fn into_config(self, base_dir: &Path) -> Result<ExperimentConfig> {
        let defaults = ExperimentConfig::default();
        let resolve = |p: &str| {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                base_dir.join(p)
            }
        };

        let mut spec = AdversarialSpec::default();
        if let Some(v) = self.jitter_high_kbps {
            spec.jitter_high_kbps = v;
        }
        if let Some(v) = self.jitter_low_kbps {
            spec.jitter_low_kbps = v;
        }
        if let Some(v) = self.jitter_period_chunks {
            spec.jitter_period_chunks = v;
        }
        if let Some(v) = self.cliff_kbps {
            spec.cliff_kbps = v;
        }
        if let Some(v) = self.rocket_kbps {
            spec.rocket_kbps = v;
        }

        let mut net = NetConfig::default();
        if let Some(s) = self.chunk_duration_s {
            net.chunk_duration_us = seconds_to_us("chunk_duration_s", s)?;
            spec.chunk_duration_us = net.chunk_duration_us;
        }
        if let Some(s) = self.buffer_cap_s {
            net.buffer_cap_us = seconds_to_us("buffer_cap_s", s)?;
        }
        if let Some(v) = self.base_rtt_us {
            net.base_rtt_us = v;
        }
        if let Some(v) = self.max_rtt_inflation_permille {
            net.max_rtt_inflation_permille = v;
        }

        let traces = match self.traces.as_deref() {
            None | Some("adversarial") => TraceSelection::Adversarial(spec),
            Some(list) => TraceSelection::Paths(
                list.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(resolve)
                    .collect(),
            ),
        };

        let mut abr = AbrConfig::default();
        let ladder_changed = self.ladder_kbps.is_some();
        if let Some(rungs) = self.ladder_kbps {
            abr.ladder = BitrateLadder::new(rungs)?;
        }
        if let Some(v) = self.harmonic_window {
            abr.harmonic_window = v;
        }
        if let Some(v) = self.safety_permille {
            abr.safety_permille = v;
        }
        if let Some(v) = self.cap_permille {
            abr.cap_permille = v;
        }
        if let Some(s) = self.reservoir_s {
            abr.reservoir_us = seconds_to_us("reservoir_s", s)?;
        }
        if let Some(s) = self.cushion_top_s {
            abr.cushion_top_us = seconds_to_us("cushion_top_s", s)?;
        }
        if ladder_changed
            || self.bola_reservoir_s.is_some()
            || self.bola_target_s.is_some()
            || self.bola_startup_threshold_s.is_some()
        {
            abr.bola = BolaParams::derive(
                &abr.ladder,
                seconds_to_us("bola_reservoir_s", self.bola_reservoir_s.unwrap_or(10.0))?,
                seconds_to_us("bola_target_s", self.bola_target_s.unwrap_or(55.0))?,
                seconds_to_us(
                    "bola_startup_threshold_s",
                    self.bola_startup_threshold_s.unwrap_or(10.0),
                )?,
            )?;
        }

        let mut qoe = QoeParams::default();
        if let Some(v) = self.qoe_base_kbps {
            qoe.base_kbps = v;
        }
        if let Some(v) = self.qoe_lambda {
            qoe.lambda = v;
        }
        if let Some(v) = self.qoe_mu {
            qoe.mu = v;
        }

        let default_eps = if traces.is_adversarial() { 50 } else { 100 };
        let d = &defaults.session;
        let session = SessionConfig {
            chunks: self.chunks.unwrap_or(d.chunks),
            epsilon_permille: self.epsilon_permille.unwrap_or(default_eps),
            prior_pulls: self.prior_pulls.unwrap_or(d.prior_pulls),
            shock_threshold_permille: self
                .shock_threshold_permille
                .unwrap_or(d.shock_threshold_permille),
            cooldown_chunks: self.cooldown_chunks.unwrap_or(d.cooldown_chunks),
            net,
            abr,
            qoe,
        };

        let policies = match self.policies {
            Some(names) => names
                .iter()
                .map(|n| n.parse())
                .collect::<Result<Vec<PolicyKind>>>()?,
            None => defaults.policies,
        };
        let seeds = match (self.seed_list, self.seeds) {
            (Some(list), _) => list,
            (None, Some(n)) => (1..=n).collect(),
            (None, None) => defaults.seeds,
        };

        Ok(ExperimentConfig {
            policies,
            seeds,
            traces,
            calibration_traces: self
                .calibration_traces
                .unwrap_or_default()
                .iter()
                .map(|p| resolve(p))
                .collect(),
            calibration_holdout: self
                .calibration_holdout
                .unwrap_or(defaults.calibration_holdout),
            priors: self.priors.as_deref().map(resolve),
            session,
            output: self.output.as_deref().map(resolve),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_adversarial_defaults() {
        let cfg = ExperimentConfig::parse("", Path::new(".")).unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn real_trace_mode_defaults_to_ten_percent() {
        let text = r#"
            traces = "hsdpa/"
            policies = ["throughput", "bandit_warm"]
            seeds = 3
        "#;
        let cfg = ExperimentConfig::parse(text, Path::new("/data")).unwrap();
        assert_eq!(cfg.session.epsilon_permille, 100);
        assert_eq!(cfg.seeds, vec![1, 2, 3]);
        assert_eq!(cfg.traces, TraceSelection::Paths(vec![PathBuf::from("/data/hsdpa/")]));
        cfg.validate().unwrap();
    }

    #[test]
    fn overrides_apply() {
        let text = r#"
            epsilon_permille = 200
            seed_list = [7, 9]
            chunk_duration_s = 4.0
            ladder_kbps = [200, 400, 800]
            cliff_kbps = 100
            qoe_lambda = 1.5
        "#;
        let cfg = ExperimentConfig::parse(text, Path::new(".")).unwrap();
        assert_eq!(cfg.session.epsilon_permille, 200);
        assert_eq!(cfg.seeds, vec![7, 9]);
        assert_eq!(cfg.session.net.chunk_duration_us, 4_000_000);
        assert_eq!(cfg.session.abr.bola.utility_micro.len(), 3);
        assert_eq!(cfg.session.qoe.lambda, 1.5);
        match cfg.traces {
            TraceSelection::Adversarial(spec) => {
                assert_eq!(spec.cliff_kbps, 100);
                assert_eq!(spec.chunk_duration_us, 4_000_000);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            ExperimentConfig::parse("bogus = 1", Path::new(".")),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(ExperimentConfig::parse("policies = [\"nope\"]", Path::new(".")).is_err());
        let warm = ExperimentConfig::parse("policies = [\"bandit_warm\"]", Path::new(".")).unwrap();
        assert!(matches!(
            warm.validate(),
            Err(Error::Validation { field: "calibration_traces", .. })
        ));
        let no_seeds = ExperimentConfig::parse("seed_list = []", Path::new(".")).unwrap();
        assert!(no_seeds.validate().is_err());
    }
}
