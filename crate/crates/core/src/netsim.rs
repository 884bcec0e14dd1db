//! Chunk-level network simulation: transfer time against a bandwidth trace,
//! playout-buffer dynamics, and the per-RTT TCP signals seen by the reward.
//!
//! Clock and buffer are integer microseconds and transfers are integrated
//! exactly over the piecewise-constant trace, so a session replays
//! bit-identically on every platform.

use crate::trace::BandwidthTrace;

#[derive(Debug, Clone, PartialEq)]
pub struct NetConfig {
    pub chunk_duration_us: u64,
    pub buffer_cap_us: u64,
    pub base_rtt_us: u32,
    /// Upper bound of RTT inflation, per-mille of the base RTT.
    pub max_rtt_inflation_permille: u32,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig {
            chunk_duration_us: 2_500_000,
            buffer_cap_us: 60_000_000,
            base_rtt_us: 80_000,
            max_rtt_inflation_permille: 10_000,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> crate::Result<()> {
        use crate::Error;
        if self.chunk_duration_us == 0 {
            return Err(Error::validation("chunk_duration_s", "must be positive"));
        }
        if self.buffer_cap_us < self.chunk_duration_us {
            return Err(Error::validation(
                "buffer_cap_s",
                "must hold at least one chunk",
            ));
        }
        if self.base_rtt_us == 0 {
            return Err(Error::validation("base_rtt_us", "must be positive"));
        }
        if self.max_rtt_inflation_permille < 1000 {
            return Err(Error::validation(
                "max_rtt_inflation_permille",
                "must be at least 1000",
            ));
        }
        Ok(())
    }

    pub fn chunk_duration_ms(&self) -> u64 {
        self.chunk_duration_us / 1000
    }
}

/// Client-side playback state carried from chunk to chunk.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SessionState {
    pub buffer_us: u64,
    pub clock_us: u64,
    pub prev_bitrate_kbps: Option<u32>,
    /// Measured per-chunk throughput, most recent last.
    pub throughput_samples: Vec<u32>,
    /// Index of the next chunk to request, 1-based.
    pub chunk_index: u32,
}

impl SessionState {
    pub fn new() -> Self {
        SessionState {
            chunk_index: 1,
            ..Default::default()
        }
    }

    pub fn buffer_s(&self) -> f64 {
        self.buffer_us as f64 / 1e6
    }

    pub fn clock_s(&self) -> f64 {
        self.clock_us as f64 / 1e6
    }
}

/// What the kernel sees on one RTT callback.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RttSample {
    pub rtt_us: u32,
    pub delivery_rate_kbps: u32,
    pub at_us: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkResult {
    pub bitrate_kbps: u32,
    pub request_clock_us: u64,
    pub buffer_before_us: u64,
    pub download_us: u64,
    pub rebuffer_us: u64,
    /// Time spent waiting for room in a full buffer after the download.
    pub idle_us: u64,
    pub measured_throughput_kbps: u32,
    pub rtt_samples: Vec<RttSample>,
}

impl ChunkResult {
    pub fn download_s(&self) -> f64 {
        self.download_us as f64 / 1e6
    }

    pub fn rebuffer_s(&self) -> f64 {
        self.rebuffer_us as f64 / 1e6
    }
}

/// Maps demand and capacity to a smoothed RTT.
pub trait RttModel {
    fn rtt_us(&self, bitrate_kbps: u32, bandwidth_kbps: u32) -> u32;
}

/// RTT grows with the demand/capacity ratio, floored at the base RTT and
/// capped at `max_permille` of it.
#[derive(Debug, Clone, Copy)]
pub struct QueueInflation {
    pub base_rtt_us: u32,
    pub max_permille: u32,
}

impl From<&NetConfig> for QueueInflation {
    fn from(cfg: &NetConfig) -> Self {
        QueueInflation {
            base_rtt_us: cfg.base_rtt_us,
            max_permille: cfg.max_rtt_inflation_permille,
        }
    }
}

impl RttModel for QueueInflation {
    fn rtt_us(&self, bitrate_kbps: u32, bandwidth_kbps: u32) -> u32 {
        let load = 1000 * bitrate_kbps as u64 / bandwidth_kbps.max(1) as u64;
        let load = load.clamp(1000, self.max_permille as u64);
        (self.base_rtt_us as u64 * load / 1000) as u32
    }
}

/// One sample per completed RTT across `[t0_us, t1_us]`, starting at `t0_us`;
/// always at least one.
pub fn synth_rtt_samples(
    t0_us: u64,
    t1_us: u64,
    bitrate_kbps: u32,
    trace: &BandwidthTrace,
    model: &impl RttModel,
) -> Vec<RttSample> {
    let mut samples = Vec::new();
    let mut t = t0_us;
    loop {
        let delivery_rate_kbps = trace.bandwidth_at_us(t);
        let rtt_us = model.rtt_us(bitrate_kbps, delivery_rate_kbps).max(1);
        // a measurement needs its round trip to finish inside the interval
        if !samples.is_empty() && t + rtt_us as u64 > t1_us {
            break samples;
        }
        samples.push(RttSample {
            rtt_us,
            delivery_rate_kbps,
            at_us: t,
        });
        t += rtt_us as u64;
        if t >= t1_us {
            break samples;
        }
    }
}

/// Time to move `bits` starting at `start_us`, integrating the trace exactly.
pub fn transfer_time_us(trace: &BandwidthTrace, start_us: u64, bits: u64) -> u64 {
    // Work in bit*ms/s ("millibits") so a segment's transfer is an integer
    // product of kbps and microseconds.
    let mut remaining = bits as u128 * 1000;
    let mut t = start_us;
    loop {
        let (kbps, span_us) = trace.segment_at_us(t);
        let capacity = kbps as u128 * span_us as u128;
        if capacity >= remaining {
            return t - start_us + remaining.div_ceil(kbps as u128) as u64;
        }
        remaining -= capacity;
        t += span_us;
    }
}

/// Requests one chunk at `bitrate_kbps` and advances the session past it.
pub fn download_chunk(
    state: &mut SessionState,
    bitrate_kbps: u32,
    trace: &BandwidthTrace,
    cfg: &NetConfig,
) -> ChunkResult {
    download_chunk_with(state, bitrate_kbps, trace, cfg, &QueueInflation::from(cfg))
}

pub fn download_chunk_with(
    state: &mut SessionState,
    bitrate_kbps: u32,
    trace: &BandwidthTrace,
    cfg: &NetConfig,
    model: &impl RttModel,
) -> ChunkResult {
    let request_clock_us = state.clock_us;
    let buffer_before_us = state.buffer_us;
    let bits = bitrate_kbps as u64 * cfg.chunk_duration_ms();
    let download_us = transfer_time_us(trace, request_clock_us, bits).max(1);
    let rtt_samples = synth_rtt_samples(
        request_clock_us,
        request_clock_us + download_us,
        bitrate_kbps,
        trace,
        model,
    );

    let rebuffer_us = download_us.saturating_sub(buffer_before_us);
    let mut buffer = buffer_before_us.saturating_sub(download_us) + cfg.chunk_duration_us;
    buffer = buffer.min(cfg.buffer_cap_us);

    // A full buffer idles the client until one chunk fits again.
    let headroom = cfg.buffer_cap_us - cfg.chunk_duration_us;
    let idle_us = buffer.saturating_sub(headroom);
    buffer -= idle_us;

    let measured = (bits as u128 * 1000 + download_us as u128 / 2) / download_us as u128;
    let measured_throughput_kbps = measured.clamp(1, u32::MAX as u128) as u32;

    state.buffer_us = buffer;
    state.clock_us = request_clock_us + download_us + idle_us;
    state.prev_bitrate_kbps = Some(bitrate_kbps);
    state.throughput_samples.push(measured_throughput_kbps);
    state.chunk_index += 1;

    ChunkResult {
        bitrate_kbps,
        request_clock_us,
        buffer_before_us,
        download_us,
        rebuffer_us,
        idle_us,
        measured_throughput_kbps,
        rtt_samples,
    }
}
