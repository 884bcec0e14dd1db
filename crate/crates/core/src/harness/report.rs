//! Cross-session aggregation and the line-delimited results file.
//!
//! Results file layout (comma-separated, `#` lines are comments):
//!
//! ```text
//! chunk,<policy>,<trace>,<seed>,<chunk_index>,<arm>,<bitrate_kbps>,<rebuffer_s>,<reward_samples>,<qoe>
//! aggregate,<policy>,<sessions>,<cumulative_mean>,<cumulative_std>,<qoe_per_chunk_mean>,<qoe_per_chunk_sem>,<rebuffer_mean_s>,<arm0_chunks>,<arm1_chunks>,<arm2_chunks>
//! wilcoxon,<policy>,<baseline>,<n>,<w>,<p>
//! ```
//!
//! One `chunk` record per (policy, trace, seed, chunk) in sweep order, then the
//! aggregate block. `arm` is the bandit arm id or `-`. `rebuffer_s` has exactly
//! six decimals; `qoe` is the shortest text that parses back to the same `f64`,
//! so `report` re-aggregates a stored file to identical numbers.

use std::fmt::Write as _;

use crate::bandit::Arm;
use crate::error::{Error, Result};
use crate::harness::config::PolicyKind;
use crate::harness::session::SessionResult;
use crate::metrics::{aggregate, wilcoxon_signed_rank, Aggregate};

const HEADER: &str = "# abr-bandit results v1\n\
# chunk,policy,trace,seed,chunk_index,arm,bitrate_kbps,rebuffer_s,reward_samples,qoe\n";

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub chunk: u32,
    pub arm: Option<Arm>,
    pub bitrate_kbps: u32,
    pub rebuffer_us: u64,
    pub reward_samples: u32,
    pub qoe: f64,
}

/// The per-chunk rows of one session, as stored in a results file.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionRows {
    pub policy: PolicyKind,
    pub trace: String,
    pub seed: u32,
    pub rows: Vec<ResultRow>,
}

impl SessionRows {
    pub fn cumulative_qoe(&self) -> f64 {
        self.rows.iter().map(|r| r.qoe).sum()
    }

    pub fn mean_qoe(&self) -> f64 {
        self.cumulative_qoe() / self.rows.len() as f64
    }

    pub fn rebuffer_s(&self) -> f64 {
        self.rows.iter().map(|r| r.rebuffer_us).sum::<u64>() as f64 / 1e6
    }
}

impl From<&SessionResult> for SessionRows {
    fn from(s: &SessionResult) -> Self {
        SessionRows {
            policy: s.policy,
            trace: s.trace.clone(),
            seed: s.seed,
            rows: s
                .records
                .iter()
                .map(|r| ResultRow {
                    chunk: r.chunk,
                    arm: r.arm,
                    bitrate_kbps: r.bitrate_kbps,
                    rebuffer_us: r.rebuffer_us,
                    reward_samples: r.reward_samples,
                    qoe: r.qoe,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicySummary {
    pub policy: PolicyKind,
    /// Cumulative QoE per session; `std` is the spread across sessions.
    pub cumulative: Aggregate<f64>,
    /// Mean QoE per chunk per session; `sem` is across sessions.
    pub per_chunk: Aggregate<f64>,
    pub rebuffer_mean_s: f64,
    pub arm_chunks: [u64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct WilcoxonSummary {
    pub policy: PolicyKind,
    pub baseline: PolicyKind,
    pub n: usize,
    pub w: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub sessions: Vec<SessionRows>,
    pub summaries: Vec<PolicySummary>,
    pub wilcoxon: Option<WilcoxonSummary>,
}

impl Report {
    pub fn build(sessions: Vec<SessionRows>) -> Result<Report> {
        if sessions.is_empty() {
            return Err(Error::EmptyInput("report of no sessions"));
        }
        let mut order: Vec<PolicyKind> = Vec::new();
        for s in &sessions {
            if !order.contains(&s.policy) {
                order.push(s.policy);
            }
        }
        let mut summaries = Vec::with_capacity(order.len());
        for &policy in &order {
            let group: Vec<&SessionRows> = sessions.iter().filter(|s| s.policy == policy).collect();
            let cumulative: Vec<f64> = group.iter().map(|s| s.cumulative_qoe()).collect();
            let per_chunk: Vec<f64> = group.iter().map(|s| s.mean_qoe()).collect();
            let mut arm_chunks = [0u64; 3];
            for row in group.iter().flat_map(|s| &s.rows) {
                if let Some(arm) = row.arm {
                    arm_chunks[arm.index()] += 1;
                }
            }
            summaries.push(PolicySummary {
                policy,
                cumulative: aggregate(&cumulative)?,
                per_chunk: aggregate(&per_chunk)?,
                rebuffer_mean_s: group.iter().map(|s| s.rebuffer_s()).sum::<f64>()
                    / group.len() as f64,
                arm_chunks,
            });
        }
        let wilcoxon = warm_vs_best_static(&sessions, &summaries);
        Ok(Report {
            sessions,
            summaries,
            wilcoxon,
        })
    }

    pub fn summary(&self, policy: PolicyKind) -> Option<&PolicySummary> {
        self.summaries.iter().find(|s| s.policy == policy)
    }

    /// Static policy with the highest mean QoE per chunk.
    pub fn best_static(&self) -> Option<&PolicySummary> {
        best_static(&self.summaries)
    }

    /// Serializes the results file.
    pub fn to_results_file(&self) -> String {
        let mut out = String::from(HEADER);
        for s in &self.sessions {
            let trace = s.trace.replace([',', '\n'], "_");
            for r in &s.rows {
                let arm = r.arm.map_or_else(|| "-".to_string(), |a| a.index().to_string());
                let _ = writeln!(
                    out,
                    "chunk,{},{},{},{},{},{},{}.{:06},{},{}",
                    s.policy,
                    trace,
                    s.seed,
                    r.chunk,
                    arm,
                    r.bitrate_kbps,
                    r.rebuffer_us / 1_000_000,
                    r.rebuffer_us % 1_000_000,
                    r.reward_samples,
                    r.qoe
                );
            }
        }
        out.push_str(
            "# aggregate,policy,sessions,cumulative_mean,cumulative_std,qoe_per_chunk_mean,\
qoe_per_chunk_sem,rebuffer_mean_s,arm0_chunks,arm1_chunks,arm2_chunks\n",
        );
        for a in &self.summaries {
            let _ = writeln!(
                out,
                "aggregate,{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{}",
                a.policy,
                a.cumulative.n,
                a.cumulative.mean,
                a.cumulative.std,
                a.per_chunk.mean,
                a.per_chunk.sem,
                a.rebuffer_mean_s,
                a.arm_chunks[0],
                a.arm_chunks[1],
                a.arm_chunks[2]
            );
        }
        if let Some(w) = &self.wilcoxon {
            out.push_str("# wilcoxon,policy,baseline,n,w,p\n");
            let _ = writeln!(out, "wilcoxon,{},{},{},{},{:.6}", w.policy, w.baseline, w.n, w.w, w.p);
        }
        out
    }

    /// Parses the `chunk` records of a results file and re-aggregates them.
    pub fn from_results_file(text: &str) -> Result<Report> {
        let mut sessions: Vec<SessionRows> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if !line.starts_with("chunk,") {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 10 {
                return Err(Error::parse(line_no, format!("expected 10 fields, got {}", f.len())));
            }
            let num = |s: &str, what: &str| -> Result<u64> {
                s.parse()
                    .map_err(|_| Error::parse(line_no, format!("bad {what} `{s}`")))
            };
            let policy: PolicyKind = f[1].parse().map_err(|_| Error::parse(line_no, "bad policy"))?;
            let seed = num(f[3], "seed")? as u32;
            let arm = match f[5] {
                "-" => None,
                a => Some(Arm::from_index(num(a, "arm")? as usize).map_err(|e| Error::parse(line_no, e.to_string()))?),
            };
            let (whole, frac) = f[7]
                .split_once('.')
                .filter(|(_, fr)| fr.len() == 6)
                .ok_or_else(|| Error::parse(line_no, "bad rebuffer_s"))?;
            let row = ResultRow {
                chunk: num(f[4], "chunk index")? as u32,
                arm,
                bitrate_kbps: num(f[6], "bitrate")? as u32,
                rebuffer_us: num(whole, "rebuffer_s")? * 1_000_000 + num(frac, "rebuffer_s")?,
                reward_samples: num(f[8], "reward_samples")? as u32,
                qoe: f[9]
                    .parse()
                    .map_err(|_| Error::parse(line_no, format!("bad qoe `{}`", f[9])))?,
            };
            match sessions.last_mut() {
                Some(s) if s.policy == policy && s.trace == f[2] && s.seed == seed => s.rows.push(row),
                _ => sessions.push(SessionRows {
                    policy,
                    trace: f[2].to_string(),
                    seed,
                    rows: vec![row],
                }),
            }
        }
        Report::build(sessions)
    }

    /// Plain-text table for the terminal.
    pub fn summary_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<12} {:>8} {:>12} {:>10} {:>11} {:>9} {:>10}  arms(T/B/H)",
            "policy", "sessions", "cum_qoe", "cum_std", "qoe/chunk", "sem", "rebuf_s"
        );
        for a in &self.summaries {
            let arms = if a.policy.is_bandit() {
                format!("{}/{}/{}", a.arm_chunks[0], a.arm_chunks[1], a.arm_chunks[2])
            } else {
                "-".into()
            };
            let _ = writeln!(
                out,
                "{:<12} {:>8} {:>12.3} {:>10.3} {:>11.4} {:>9.4} {:>10.2}  {}",
                a.policy.name(),
                a.cumulative.n,
                a.cumulative.mean,
                a.cumulative.std,
                a.per_chunk.mean,
                a.per_chunk.sem,
                a.rebuffer_mean_s,
                arms
            );
        }
        if let (Some(best), Some(bandit)) = (
            self.best_static(),
            self.summaries.iter().filter(|s| s.policy.is_bandit()).max_by(|a, b| {
                a.cumulative.mean.total_cmp(&b.cumulative.mean)
            }),
        ) {
            let margin = (bandit.cumulative.mean - best.cumulative.mean) / best.cumulative.mean.abs();
            let _ = writeln!(
                out,
                "{} vs best static ({}): {:+.1}% cumulative QoE",
                bandit.policy,
                best.policy,
                100.0 * margin
            );
        }
        if let Some(w) = &self.wilcoxon {
            let _ = writeln!(
                out,
                "wilcoxon {} vs {}: n={} W={} p={:.4}",
                w.policy, w.baseline, w.n, w.w, w.p
            );
        }
        out
    }
}

fn best_static(summaries: &[PolicySummary]) -> Option<&PolicySummary> {
    summaries
        .iter()
        .filter(|s| !s.policy.is_bandit())
        .max_by(|a, b| a.per_chunk.mean.total_cmp(&b.per_chunk.mean))
}

/// Paired test of warm-bandit against the best static policy, matched on
/// (trace, seed) by mean QoE per chunk.
fn warm_vs_best_static(
    sessions: &[SessionRows],
    summaries: &[PolicySummary],
) -> Option<WilcoxonSummary> {
    let policy = PolicyKind::BanditWarm;
    let baseline = best_static(summaries)?.policy;
    let pairs: Vec<(f64, f64)> = sessions
        .iter()
        .filter(|s| s.policy == policy)
        .filter_map(|s| {
            sessions
                .iter()
                .find(|b| b.policy == baseline && b.trace == s.trace && b.seed == s.seed)
                .map(|b| (s.mean_qoe(), b.mean_qoe()))
        })
        .collect();
    let result = wilcoxon_signed_rank(&pairs).ok()?;
    Some(WilcoxonSummary {
        policy,
        baseline,
        n: result.n,
        w: result.w,
        p: result.p_two_sided,
    })
}
