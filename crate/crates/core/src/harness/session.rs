use crate::abr::{self, PolicyInputs};
use crate::bandit::{warm_start, Arm, ArmStats, BanditState, SelectionKind};
use crate::error::{Error, Result};
use crate::harness::config::{PolicyKind, SessionConfig, StaticPolicy};
use crate::metrics::chunk_qoe;
use crate::netsim::{download_chunk, SessionState};
use crate::reward::RewardTracker;
use crate::trace::BandwidthTrace;

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkRecord {
    /// 1-based.
    pub chunk: u32,
    pub arm: Option<Arm>,
    pub selection: Option<SelectionKind>,
    pub bitrate_kbps: u32,
    pub rebuffer_us: u64,
    pub reward_samples: u32,
    pub reward_total: u64,
    pub qoe: f64,
    pub request_clock_us: u64,
    pub download_us: u64,
    pub buffer_after_us: u64,
    pub measured_throughput_kbps: u32,
    pub shock_fired: bool,
}

impl ChunkRecord {
    pub fn rebuffer_s(&self) -> f64 {
        self.rebuffer_us as f64 / 1e6
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionResult {
    pub trace: String,
    pub policy: PolicyKind,
    pub seed: u32,
    pub records: Vec<ChunkRecord>,
    pub cumulative_qoe: f64,
    pub mean_qoe: f64,
    /// Bandit state at session end (`None` for static policies).
    pub final_bandit: Option<BanditState>,
    /// Reward pulls earned in this session, per arm (excludes warm-start priors).
    pub arm_pulls: [u32; 3],
    pub arm_chunks: [u32; 3],
}

impl SessionResult {
    pub fn total_rebuffer_s(&self) -> f64 {
        self.records.iter().map(ChunkRecord::rebuffer_s).sum()
    }

    pub fn total_rtt_samples(&self) -> u64 {
        self.records.iter().map(|r| r.reward_samples as u64).sum()
    }

    pub fn prng_draws(&self) -> u64 {
        self.final_bandit.as_ref().map_or(0, BanditState::draws)
    }
}

enum Driver {
    Static(StaticPolicy),
    Bandit(Box<BanditState>),
}

fn static_select(policy: StaticPolicy, inputs: &PolicyInputs, cfg: &SessionConfig) -> u32 {
    match policy {
        StaticPolicy::Throughput => abr::throughput_select(inputs, &cfg.abr),
        StaticPolicy::Bola => abr::bola_select(inputs, &cfg.abr),
        StaticPolicy::Hybrid => abr::hybrid_select(inputs, &cfg.abr),
        StaticPolicy::PureBuffer => abr::pure_buffer_select(inputs, &cfg.abr),
    }
}

/// Runs one session. `priors` are raw calibration stats and are required for
/// [`PolicyKind::BanditWarm`].
pub fn run_session(
    trace: &BandwidthTrace,
    policy: PolicyKind,
    seed: u32,
    cfg: &SessionConfig,
    priors: Option<&[ArmStats; 3]>,
) -> Result<SessionResult> {
    let driver = match policy {
        PolicyKind::Throughput => Driver::Static(StaticPolicy::Throughput),
        PolicyKind::Buffer => Driver::Static(StaticPolicy::PureBuffer),
        PolicyKind::Hybrid => Driver::Static(StaticPolicy::Hybrid),
        PolicyKind::BanditCold => Driver::Bandit(Box::new(BanditState::new(
            cfg.epsilon_permille,
            seed,
            cfg.shock_state(),
        )?)),
        PolicyKind::BanditWarm => {
            let priors = priors.ok_or_else(|| {
                Error::validation("calibration_traces", "bandit_warm needs warm-start priors")
            })?;
            let fresh = BanditState::new(cfg.epsilon_permille, seed, cfg.shock_state())?;
            Driver::Bandit(Box::new(warm_start(priors, cfg.prior_pulls, fresh)?))
        }
    };
    let mut result = simulate(trace, driver, cfg)?;
    result.policy = policy;
    result.seed = seed;
    Ok(result)
}

fn simulate(trace: &BandwidthTrace, mut driver: Driver, cfg: &SessionConfig) -> Result<SessionResult> {
    cfg.validate()?;
    let initial_arms = match &driver {
        Driver::Bandit(b) => b.arms,
        Driver::Static(_) => [ArmStats::default(); 3],
    };
    let mut state = SessionState::new();
    let mut tracker = RewardTracker::new();
    let mut records = Vec::with_capacity(cfg.chunks as usize);
    let mut arm_chunks = [0u32; 3];
    let mut cumulative = 0.0;

    for chunk in 1..=cfg.chunks {
        let inputs = PolicyInputs {
            buffer_us: state.buffer_us,
            throughput_samples: &state.throughput_samples,
            prev_bitrate_kbps: state.prev_bitrate_kbps,
            chunk_duration_us: cfg.net.chunk_duration_us,
        };
        let (selection, bitrate) = match &mut driver {
            Driver::Static(p) => (None, static_select(*p, &inputs, cfg)),
            Driver::Bandit(bandit) => {
                let sel = bandit.select_arm();
                arm_chunks[sel.arm.index()] += 1;
                (Some(sel), abr::select_for_arm(sel.arm, &inputs, &cfg.abr))
            }
        };
        debug_assert!(cfg.abr.ladder.contains(bitrate));
        let prev = state.prev_bitrate_kbps;

        let chunk_result = download_chunk(&mut state, bitrate, trace, &cfg.net);
        debug_assert!(state.buffer_us <= cfg.net.buffer_cap_us);

        let mut reward_total = 0u64;
        for sample in &chunk_result.rtt_samples {
            let r = tracker.score(sample);
            reward_total += r.get() as u64;
            if let (Driver::Bandit(bandit), Some(sel)) = (&mut driver, selection) {
                bandit.record_reward(sel.arm, r);
            }
        }
        let shock_fired = match &mut driver {
            Driver::Bandit(bandit) => {
                bandit.observe_chunk_throughput(chunk_result.measured_throughput_kbps)
            }
            Driver::Static(_) => false,
        };

        let qoe = chunk_qoe(
            bitrate as f64,
            prev.map(f64::from),
            chunk_result.rebuffer_s(),
            &cfg.qoe,
        )?
        .total;
        cumulative += qoe;

        records.push(ChunkRecord {
            chunk,
            arm: selection.map(|s| s.arm),
            selection: selection.map(|s| s.kind),
            bitrate_kbps: bitrate,
            rebuffer_us: chunk_result.rebuffer_us,
            reward_samples: chunk_result.rtt_samples.len() as u32,
            reward_total,
            qoe,
            request_clock_us: chunk_result.request_clock_us,
            download_us: chunk_result.download_us,
            buffer_after_us: state.buffer_us,
            measured_throughput_kbps: chunk_result.measured_throughput_kbps,
            shock_fired,
        });
    }

    let (final_bandit, arm_pulls) = match driver {
        Driver::Bandit(b) => {
            let mut pulls = [0u32; 3];
            for (i, p) in pulls.iter_mut().enumerate() {
                *p = b.arms[i].pull_count - initial_arms[i].pull_count;
            }
            (Some(*b), pulls)
        }
        Driver::Static(_) => (None, [0; 3]),
    };

    Ok(SessionResult {
        trace: trace.name().to_string(),
        policy: PolicyKind::Throughput,
        seed: 0,
        mean_qoe: cumulative / records.len() as f64,
        cumulative_qoe: cumulative,
        records,
        final_bandit,
        arm_pulls,
        arm_chunks,
    })
}

/// Runs each arm as a static policy over every calibration trace and sums the
/// rewards it earns, one pull per RTT sample.
pub fn calibrate_warm_start(traces: &[BandwidthTrace], cfg: &SessionConfig) -> Result<[ArmStats; 3]> {
    if traces.is_empty() {
        return Err(Error::EmptyInput("calibration needs at least one trace"));
    }
    let mut stats = [ArmStats::default(); 3];
    for arm in Arm::ALL {
        for trace in traces {
            let session = simulate(trace, Driver::Static(arm.into()), cfg)?;
            let s = &mut stats[arm.index()];
            for rec in &session.records {
                s.pull_count += rec.reward_samples;
                s.total_reward += rec.reward_total;
            }
        }
    }
    Ok(stats)
}
