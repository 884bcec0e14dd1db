//! Bandwidth traces: the normalized representation every session runs against,
//! the three-phase adversarial generator, and importers for raw logs.
//!
//! Time is kept in integer microseconds so that the network simulation built
//! on top stays exact and platform-independent. Bandwidth is integer kbps and
//! never below 1.

use std::fmt::Write as _;

use crate::error::{Error, Result};

pub const MICROS_PER_SEC: u64 = 1_000_000;

/// One step of a piecewise-constant bandwidth process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceSample {
    pub time_us: u64,
    pub bandwidth_kbps: u32,
}

impl TraceSample {
    pub fn time_s(&self) -> f64 {
        self.time_us as f64 / MICROS_PER_SEC as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceSource {
    Synthetic,
    Imported,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    HsdpaLog,
    NormalizedCsv,
}

impl TraceFormat {
    /// `.csv` files are normalized traces, anything else is treated as an HSDPA log.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => TraceFormat::NormalizedCsv,
            _ => TraceFormat::HsdpaLog,
        }
    }
}

/// Time-indexed available bandwidth, replayed with wraparound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BandwidthTrace {
    name: String,
    source: TraceSource,
    samples: Vec<TraceSample>,
    duration_us: u64,
}

impl BandwidthTrace {
    /// Builds a trace from samples. Zero bandwidth is clamped to 1 kbps.
    ///
    /// The first sample must sit at time 0 and times must strictly increase.
    pub fn new(
        name: impl Into<String>,
        source: TraceSource,
        samples: Vec<TraceSample>,
    ) -> Result<Self> {
        let name = name.into();
        let Some(first) = samples.first() else {
            return Err(Error::EmptyTrace(name));
        };
        if first.time_us != 0 {
            return Err(Error::validation("samples", "first sample must be at time 0"));
        }
        if let Some(w) = samples.windows(2).find(|w| w[1].time_us <= w[0].time_us) {
            return Err(Error::validation(
                "samples",
                format!("time {} us does not increase", w[1].time_us),
            ));
        }
        let samples: Vec<TraceSample> = samples
            .into_iter()
            .map(|s| TraceSample {
                bandwidth_kbps: s.bandwidth_kbps.max(1),
                ..s
            })
            .collect();
        let duration_us = samples.last().unwrap().time_us + median_gap_us(&samples);
        Ok(BandwidthTrace {
            name,
            source,
            samples,
            duration_us,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn source(&self) -> TraceSource {
        self.source
    }

    pub fn samples(&self) -> &[TraceSample] {
        &self.samples
    }

    /// Last sample time plus one median inter-sample gap.
    pub fn duration_us(&self) -> u64 {
        self.duration_us
    }

    pub fn duration_s(&self) -> f64 {
        self.duration_us as f64 / MICROS_PER_SEC as f64
    }

    /// Overrides the replay period. Must not cut off any sample.
    pub fn with_duration_us(mut self, duration_us: u64) -> Result<Self> {
        if duration_us <= self.samples.last().unwrap().time_us {
            return Err(Error::validation(
                "duration",
                "must exceed the time of the last sample",
            ));
        }
        self.duration_us = duration_us;
        Ok(self)
    }

    fn index_at(&self, t_us: u64) -> (usize, u64) {
        let t = t_us % self.duration_us;
        let idx = self.samples.partition_point(|s| s.time_us <= t) - 1;
        (idx, t)
    }

    /// Zero-order hold with wraparound.
    pub fn bandwidth_at_us(&self, t_us: u64) -> u32 {
        self.samples[self.index_at(t_us).0].bandwidth_kbps
    }

    pub fn bandwidth_at(&self, t_s: f64) -> u32 {
        self.bandwidth_at_us((t_s.max(0.0) * MICROS_PER_SEC as f64).round() as u64)
    }

    /// Bandwidth at `t_us` together with how long it stays constant from there.
    pub fn segment_at_us(&self, t_us: u64) -> (u32, u64) {
        let (idx, t) = self.index_at(t_us);
        let end = self
            .samples
            .get(idx + 1)
            .map_or(self.duration_us, |s| s.time_us);
        (self.samples[idx].bandwidth_kbps, end - t)
    }

    /// Serializes as normalized CSV, one `time_s,bandwidth_kbps` pair per line.
    pub fn to_normalized_csv(&self) -> String {
        let mut out = String::with_capacity(self.samples.len() * 12);
        for s in &self.samples {
            let _ = writeln!(out, "{},{}", format_micros(s.time_us), s.bandwidth_kbps);
        }
        out
    }
}

fn median_gap_us(samples: &[TraceSample]) -> u64 {
    if samples.len() < 2 {
        return MICROS_PER_SEC;
    }
    let mut gaps: Vec<u64> = samples
        .windows(2)
        .map(|w| w[1].time_us - w[0].time_us)
        .collect();
    gaps.sort_unstable();
    let mid = gaps.len() / 2;
    if gaps.len() % 2 == 1 {
        gaps[mid]
    } else {
        (gaps[mid - 1] + gaps[mid]) / 2
    }
}

/// Exact decimal rendering of a microsecond count in seconds ("2.5", "0", "1.000001").
fn format_micros(us: u64) -> String {
    let whole = us / MICROS_PER_SEC;
    let frac = us % MICROS_PER_SEC;
    if frac == 0 {
        return whole.to_string();
    }
    let digits = format!("{frac:06}");
    format!("{whole}.{}", digits.trim_end_matches('0'))
}

/// Parses a non-negative decimal seconds value into microseconds without going
/// through floating point.
fn parse_seconds_us(text: &str) -> Option<u64> {
    let (whole, frac) = match text.split_once('.') {
        Some((w, f)) => (w, f),
        None => (text, ""),
    };
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    let all_digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    if !all_digits(whole) || !all_digits(frac) || frac.len() > 6 {
        return None;
    }
    let whole: u64 = if whole.is_empty() { 0 } else { whole.parse().ok()? };
    let frac_us: u64 = if frac.is_empty() {
        0
    } else {
        format!("{frac:0<6}").parse().ok()?
    };
    whole.checked_mul(MICROS_PER_SEC)?.checked_add(frac_us)
}

/// Parameters of the jitter → cliff → rocket trace. Chunk ranges are 1-based
/// and inclusive.
#[derive(Debug, Clone, PartialEq)]
pub struct AdversarialSpec {
    pub jitter_high_kbps: u32,
    pub jitter_low_kbps: u32,
    pub jitter_chunks: (u32, u32),
    pub cliff_kbps: u32,
    pub cliff_chunks: (u32, u32),
    pub rocket_kbps: u32,
    pub rocket_chunks: (u32, u32),
    pub chunk_duration_us: u64,
    /// Square-wave period in chunks: first half high, second half low.
    pub jitter_period_chunks: u32,
}

impl Default for AdversarialSpec {
    fn default() -> Self {
        AdversarialSpec {
            jitter_high_kbps: 4500,
            jitter_low_kbps: 800,
            jitter_chunks: (1, 40),
            cliff_kbps: 200,
            cliff_chunks: (41, 120),
            rocket_kbps: 9000,
            rocket_chunks: (121, 180),
            chunk_duration_us: 2_500_000,
            jitter_period_chunks: 4,
        }
    }
}

/// Which of the three adversarial phases a chunk (or trace instant) falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Jitter,
    Cliff,
    Rocket,
}

impl AdversarialSpec {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("jitter_high_kbps", self.jitter_high_kbps),
            ("jitter_low_kbps", self.jitter_low_kbps),
            ("cliff_kbps", self.cliff_kbps),
            ("rocket_kbps", self.rocket_kbps),
            ("jitter_period_chunks", self.jitter_period_chunks),
        ] {
            if v == 0 {
                return Err(Error::validation(field, "must be positive"));
            }
        }
        if self.chunk_duration_us == 0 {
            return Err(Error::validation("chunk_duration_s", "must be positive"));
        }
        let phases = [
            ("jitter_chunks", self.jitter_chunks),
            ("cliff_chunks", self.cliff_chunks),
            ("rocket_chunks", self.rocket_chunks),
        ];
        let mut expected_start = 1;
        for (field, (start, end)) in phases {
            if start != expected_start {
                return Err(Error::validation(
                    field,
                    format!("starts at chunk {start}, expected {expected_start} (gap or overlap)"),
                ));
            }
            if end < start {
                return Err(Error::validation(field, "ends before it starts"));
            }
            expected_start = end + 1;
        }
        Ok(())
    }

    pub fn total_chunks(&self) -> u32 {
        self.rocket_chunks.1
    }

    /// Phase of a 1-based chunk index.
    pub fn phase_of_chunk(&self, chunk: u32) -> Option<Phase> {
        let within = |(a, b): (u32, u32)| (a..=b).contains(&chunk);
        if within(self.jitter_chunks) {
            Some(Phase::Jitter)
        } else if within(self.cliff_chunks) {
            Some(Phase::Cliff)
        } else if within(self.rocket_chunks) {
            Some(Phase::Rocket)
        } else {
            None
        }
    }

    /// Phase of a trace instant, wrapping like [`BandwidthTrace::bandwidth_at_us`].
    pub fn phase_at_us(&self, t_us: u64) -> Phase {
        let period = self.chunk_duration_us * self.total_chunks() as u64;
        let chunk = ((t_us % period) / self.chunk_duration_us) as u32 + 1;
        self.phase_of_chunk(chunk).expect("phases partition the trace")
    }

    /// Trace time at which the first chunk of `phase` begins.
    pub fn phase_start_us(&self, phase: Phase) -> u64 {
        let first = match phase {
            Phase::Jitter => self.jitter_chunks.0,
            Phase::Cliff => self.cliff_chunks.0,
            Phase::Rocket => self.rocket_chunks.0,
        };
        (first as u64 - 1) * self.chunk_duration_us
    }
}

/// One sample per chunk interval; sample `i` (0-based) covers chunk `i + 1`.
pub fn generate_adversarial(spec: &AdversarialSpec) -> Result<BandwidthTrace> {
    spec.validate()?;
    let half = spec.jitter_period_chunks.div_ceil(2);
    let samples = (1..=spec.total_chunks())
        .map(|chunk| {
            let bandwidth_kbps = match spec.phase_of_chunk(chunk).unwrap() {
                Phase::Jitter => {
                    let offset = (chunk - spec.jitter_chunks.0) % spec.jitter_period_chunks;
                    if offset < half {
                        spec.jitter_high_kbps
                    } else {
                        spec.jitter_low_kbps
                    }
                }
                Phase::Cliff => spec.cliff_kbps,
                Phase::Rocket => spec.rocket_kbps,
            };
            TraceSample {
                time_us: (chunk as u64 - 1) * spec.chunk_duration_us,
                bandwidth_kbps,
            }
        })
        .collect();
    BandwidthTrace::new("adversarial", TraceSource::Synthetic, samples)
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Imports a raw trace. HSDPA rows are `timestamp_ms bytes_received`, where the
/// byte count covers the interval ending at that timestamp; each interval
/// becomes one sample at its start time.
pub fn import_trace(name: &str, raw: &[u8], format: TraceFormat) -> Result<BandwidthTrace> {
    let text = std::str::from_utf8(raw).map_err(|e| Error::parse(0, format!("not UTF-8: {e}")))?;
    let samples = match format {
        TraceFormat::NormalizedCsv => parse_normalized_csv(text)?,
        TraceFormat::HsdpaLog => parse_hsdpa(text)?,
    };
    BandwidthTrace::new(name, TraceSource::Imported, samples)
}

fn parse_normalized_csv(text: &str) -> Result<Vec<TraceSample>> {
    let mut samples = Vec::new();
    let mut prev: Option<u64> = None;
    for (line, row) in data_lines(text) {
        let (t, bw) = row
            .split_once(',')
            .ok_or_else(|| Error::parse(line, "expected `time_s,bandwidth_kbps`"))?;
        let time_us = parse_seconds_us(t.trim())
            .ok_or_else(|| Error::parse(line, format!("bad time `{}`", t.trim())))?;
        let bandwidth_kbps: u32 = bw
            .trim()
            .parse()
            .map_err(|_| Error::parse(line, format!("bad bandwidth `{}`", bw.trim())))?;
        if prev.is_none() && time_us != 0 {
            return Err(Error::parse(line, "first sample must be at time 0"));
        }
        if prev.is_some_and(|p| time_us <= p) {
            return Err(Error::parse(line, "time does not increase"));
        }
        prev = Some(time_us);
        samples.push(TraceSample {
            time_us,
            bandwidth_kbps,
        });
    }
    Ok(samples)
}

fn parse_hsdpa(text: &str) -> Result<Vec<TraceSample>> {
    let mut rows: Vec<(usize, u64, u64)> = Vec::new();
    for (line, row) in data_lines(text) {
        let fields: Vec<&str> = row.split_whitespace().collect();
        let [ts, bytes] = fields[..] else {
            return Err(Error::parse(line, "expected `timestamp_ms bytes_received`"));
        };
        let ts: i64 = ts
            .parse()
            .map_err(|_| Error::parse(line, format!("bad timestamp `{ts}`")))?;
        let bytes: i64 = bytes
            .parse()
            .map_err(|_| Error::parse(line, format!("bad byte count `{bytes}`")))?;
        if ts < 0 {
            return Err(Error::parse(line, "negative timestamp"));
        }
        if bytes < 0 {
            return Err(Error::parse(line, "negative byte count"));
        }
        if let Some(&(_, prev, _)) = rows.last() {
            if ts as u64 <= prev {
                return Err(Error::parse(line, "timestamp does not increase"));
            }
        }
        rows.push((line, ts as u64, bytes as u64));
    }
    let origin = rows.first().map_or(0, |r| r.1);
    Ok(rows
        .windows(2)
        .map(|w| {
            let (_, start, _) = w[0];
            let (_, end, bytes) = w[1];
            let interval_ms = end - start;
            // bytes * 8 bits / ms == kbit/s
            let kbps = (bytes * 8 + interval_ms / 2) / interval_ms;
            TraceSample {
                time_us: (start - origin) * 1000,
                bandwidth_kbps: kbps.min(u32::MAX as u64) as u32,
            }
        })
        .collect())
}

/// Reads a trace file, picking the format from its extension.
pub fn load_trace(path: &std::path::Path) -> Result<BandwidthTrace> {
    let raw = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
    import_trace(&name, &raw, TraceFormat::from_path(path)).map_err(|e| match e {
        Error::Parse { line, reason } => Error::Parse {
            line,
            reason: format!("{}: {reason}", path.display()),
        },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_step() -> BandwidthTrace {
        BandwidthTrace::new(
            "t",
            TraceSource::Synthetic,
            vec![
                TraceSample { time_us: 0, bandwidth_kbps: 100 },
                TraceSample { time_us: 10_000_000, bandwidth_kbps: 200 },
            ],
        )
        .unwrap()
    }

    #[test]
    fn adversarial_phases() {
        let trace = generate_adversarial(&AdversarialSpec::default()).unwrap();
        assert_eq!(trace.samples().len(), 180);
        let at_chunk = |c: usize| trace.samples()[c - 1].bandwidth_kbps;
        assert_eq!(at_chunk(50), 200);
        assert_eq!(at_chunk(150), 9000);
        assert_eq!(trace.samples()[49].time_us, 49 * 2_500_000);
        let jitter: Vec<u32> = (1..=8).map(at_chunk).collect();
        assert_eq!(jitter, [4500, 4500, 800, 800, 4500, 4500, 800, 800]);
        assert!((41..=120).all(|c| at_chunk(c) == 200));
        assert!((121..=180).all(|c| at_chunk(c) == 9000));
        assert_eq!(trace.duration_us(), 450_000_000);
    }

    #[test]
    fn degenerate_jitter_is_constant() {
        let spec = AdversarialSpec {
            jitter_high_kbps: 1000,
            jitter_low_kbps: 1000,
            ..Default::default()
        };
        let trace = generate_adversarial(&spec).unwrap();
        assert!(trace.samples()[..40].iter().all(|s| s.bandwidth_kbps == 1000));
    }

    #[test]
    fn invalid_spec_names_field() {
        let spec = AdversarialSpec {
            cliff_chunks: (40, 120),
            ..Default::default()
        };
        match generate_adversarial(&spec) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "cliff_chunks"),
            other => panic!("unexpected {other:?}"),
        }
        let spec = AdversarialSpec {
            rocket_kbps: 0,
            ..Default::default()
        };
        match generate_adversarial(&spec) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "rocket_kbps"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_order_hold_and_wrap() {
        let trace = two_step();
        assert_eq!(trace.duration_us(), 20_000_000);
        assert_eq!(trace.bandwidth_at(5.0), 100);
        assert_eq!(trace.bandwidth_at(10.0), 200);
        assert_eq!(trace.bandwidth_at(9.999_999), 100);
        assert_eq!(trace.bandwidth_at(25.0), 100);
        assert_eq!(trace.bandwidth_at(35.0), 200);
        assert_eq!(trace.segment_at_us(4_000_000), (100, 6_000_000));
        assert_eq!(trace.segment_at_us(24_000_000), (100, 6_000_000));
        assert_eq!(trace.segment_at_us(12_000_000), (200, 8_000_000));
    }

    #[test]
    fn hsdpa_conversion() {
        let t = import_trace("h", b"0 0\n1000 125000\n", TraceFormat::HsdpaLog).unwrap();
        assert_eq!(
            t.samples(),
            &[TraceSample { time_us: 0, bandwidth_kbps: 1000 }]
        );
        let t = import_trace("h", b"5000 9\n5500 0\n6500 250\n", TraceFormat::HsdpaLog).unwrap();
        assert_eq!(t.samples()[0].bandwidth_kbps, 1, "zero clamps to 1 kbps");
        assert_eq!(t.samples()[1].time_us, 500_000);
        assert_eq!(t.samples()[1].bandwidth_kbps, 2);
    }

    #[test]
    fn hsdpa_errors_carry_line_numbers() {
        match import_trace("h", b"0 10\n# note\n1000 -5\n", TraceFormat::HsdpaLog) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        match import_trace("h", b"0 10\n0 10\n", TraceFormat::HsdpaLog) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            import_trace("h", b"0 10\n", TraceFormat::HsdpaLog),
            Err(Error::EmptyTrace(_))
        ));
        assert!(matches!(
            import_trace("h", b"", TraceFormat::NormalizedCsv),
            Err(Error::EmptyTrace(_))
        ));
    }

    #[test]
    fn csv_passthrough() {
        let t = import_trace("c", b"0,500\n2.5,500", TraceFormat::NormalizedCsv).unwrap();
        assert_eq!(
            t.samples(),
            &[
                TraceSample { time_us: 0, bandwidth_kbps: 500 },
                TraceSample { time_us: 2_500_000, bandwidth_kbps: 500 },
            ]
        );
        assert_eq!(t.to_normalized_csv(), "0,500\n2.5,500\n");
        match import_trace("c", b"0,500\n# c\n1,-3\n", TraceFormat::NormalizedCsv) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn seconds_parsing() {
        assert_eq!(parse_seconds_us("2.5"), Some(2_500_000));
        assert_eq!(parse_seconds_us(".5"), Some(500_000));
        assert_eq!(parse_seconds_us("3"), Some(3_000_000));
        assert_eq!(parse_seconds_us("0.0000001"), None);
        assert_eq!(parse_seconds_us("-1"), None);
        assert_eq!(format_micros(1_000_001), "1.000001");
        assert_eq!(format_micros(0), "0");
    }
}
