//! Experiment orchestration: resolves a config into traces and priors, runs
//! the policy × trace × seed sweep, and reduces it into a [`Report`].

pub mod config;
pub mod report;
pub mod session;

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::bandit::{parse_priors, ArmStats};
use crate::error::{Error, Result};
use crate::trace::{generate_adversarial, load_trace, BandwidthTrace};

pub use config::{ExperimentConfig, PolicyKind, SessionConfig, StaticPolicy, TraceSelection};
pub use report::{PolicySummary, Report, ResultRow, SessionRows, WilcoxonSummary};
pub use session::{calibrate_warm_start, run_session, ChunkRecord, SessionResult};

/// A fully resolved sweep, ready to run.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub policies: Vec<PolicyKind>,
    pub seeds: Vec<u32>,
    pub traces: Vec<BandwidthTrace>,
    /// Raw calibration stats for the warm bandit.
    pub priors: Option<[ArmStats; 3]>,
    pub session: SessionConfig,
}

/// Expands directories into their files, in name order.
pub fn expand_trace_paths(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| Error::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    f.is_file()
                        && !f
                            .file_name()
                            .is_some_and(|n| n.to_string_lossy().starts_with('.'))
                })
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

pub fn load_traces(paths: &[PathBuf]) -> Result<Vec<BandwidthTrace>> {
    expand_trace_paths(paths)?
        .iter()
        .map(|p| load_trace(p))
        .collect()
}

pub fn read_priors(path: &Path) -> Result<[ArmStats; 3]> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_priors(&text)
}

impl ExperimentConfig {
    /// Loads traces and computes (or reads) warm-start priors.
    pub fn resolve(&self) -> Result<Experiment> {
        self.validate()?;
        let wants_warm = self.policies.contains(&PolicyKind::BanditWarm);
        let (mut traces, from_files) = match &self.traces {
            TraceSelection::Adversarial(spec) => (vec![generate_adversarial(spec)?], false),
            TraceSelection::Paths(paths) => (load_traces(paths)?, true),
        };
        if traces.is_empty() {
            return Err(Error::validation("traces", "no trace files found"));
        }

        let priors = if let Some(path) = &self.priors {
            Some(read_priors(path)?)
        } else if wants_warm {
            let calibration = if !self.calibration_traces.is_empty() {
                load_traces(&self.calibration_traces)?
            } else if from_files {
                let k = self.calibration_holdout;
                if k >= traces.len() {
                    return Err(Error::validation(
                        "calibration_holdout",
                        format!("holding out {k} of {} traces leaves none to evaluate", traces.len()),
                    ));
                }
                traces.drain(..k).collect()
            } else {
                Vec::new()
            };
            Some(calibrate_warm_start(&calibration, &self.session)?)
        } else {
            None
        };

        Ok(Experiment {
            policies: self.policies.clone(),
            seeds: self.seeds.clone(),
            traces,
            priors,
            session: self.session.clone(),
        })
    }
}

/// Runs every (policy, trace, seed) session in parallel and reduces them in
/// sweep order, so output does not depend on scheduling.
pub fn run_experiment(exp: &Experiment) -> Result<Report> {
    let sessions = run_sessions(exp)?;
    Report::build(sessions.iter().map(SessionRows::from).collect())
}

/// Like [`run_experiment`] but keeps the full per-session results, in sweep
/// order. The first failing cell (in sweep order) aborts with its identity.
pub fn run_sessions(exp: &Experiment) -> Result<Vec<SessionResult>> {
    exp.session.validate()?;
    let cells: Vec<(PolicyKind, &BandwidthTrace, u32)> = exp
        .policies
        .iter()
        .flat_map(|&p| {
            exp.traces
                .iter()
                .flat_map(move |t| exp.seeds.iter().map(move |&s| (p, t, s)))
        })
        .collect();
    let results: Vec<Result<SessionResult>> = cells
        .par_iter()
        .map(|&(policy, trace, seed)| {
            run_session(trace, policy, seed, &exp.session, exp.priors.as_ref()).map_err(|e| {
                Error::Session {
                    policy: policy.to_string(),
                    trace: trace.name().to_string(),
                    seed,
                    source: Box::new(e),
                }
            })
        })
        .collect();
    results.into_iter().collect()
}
