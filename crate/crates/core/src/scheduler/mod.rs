//! Execution modes: isolated, fixed-pair multi-programming (EMP) and
//! context-switched multi-programming with optional attack detection.

mod context;
mod mfcs;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuit::Program;
use crate::detection::{DetectionReport, MergeMode, DEFAULT_THRESHOLD};
use crate::error::{Error, Result};
use crate::simulator::{Distribution, NoiseProfile};
use crate::topology::Device;

pub use context::{derive_seed, execute_context, stagger, ContextRun, DEFAULT_BUFFER};
pub use mfcs::{finalize, run_forced, run_qontexts, Finalized, SchedulerState};

pub const DEFAULT_CONTEXTS: u32 = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub program: Program,
    pub trials: u64,
    pub owner: String,
    /// Ground truth for evaluation only; scheduling never reads it.
    #[serde(default)]
    pub is_attacker: bool,
}

impl Job {
    pub fn new(program: Program, owner: impl Into<String>) -> Self {
        let trials = program.requested_trials;
        Job {
            program,
            trials,
            owner: owner.into(),
            is_attacker: false,
        }
    }

    pub fn attacker(program: Program, owner: impl Into<String>) -> Self {
        Job {
            is_attacker: true,
            ..Job::new(program, owner)
        }
    }

    pub fn with_trials(mut self, trials: u64) -> Self {
        self.trials = trials;
        self
    }

    pub fn id(&self) -> &str {
        &self.program.id
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecMode {
    Isolated,
    Emp,
    Qontexts,
    QontextsAd,
}

impl ExecMode {
    pub const ALL: [ExecMode; 4] = [
        ExecMode::Isolated,
        ExecMode::Emp,
        ExecMode::Qontexts,
        ExecMode::QontextsAd,
    ];
}

impl fmt::Display for ExecMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExecMode::Isolated => "isolated",
            ExecMode::Emp => "emp",
            ExecMode::Qontexts => "qontexts",
            ExecMode::QontextsAd => "qontexts_ad",
        })
    }
}

impl FromStr for ExecMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '+'], "_").as_str() {
            "isolated" => Ok(ExecMode::Isolated),
            "emp" => Ok(ExecMode::Emp),
            "qontexts" => Ok(ExecMode::Qontexts),
            "qontexts_ad" | "ad" => Ok(ExecMode::QontextsAd),
            _ => Err(Error::InvalidArgument(format!("unknown execution mode `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchedulerConfig {
    pub contexts: u32,
    pub threshold: f64,
    pub merge: MergeMode,
    /// Minimum hop separation between co-scheduled regions.
    pub buffer: usize,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            contexts: DEFAULT_CONTEXTS,
            threshold: DEFAULT_THRESHOLD,
            merge: MergeMode::InverseNoise,
            buffer: DEFAULT_BUFFER,
        }
    }
}

/// One program's slot in a context.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditMember {
    pub program: String,
    pub owner: String,
    pub qubits: Vec<usize>,
    /// Whether this run counts towards the program's own result.
    pub records: bool,
    pub idle_layers: usize,
}

/// Detection outcome for a program whose last context just finished.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditCompletion {
    pub program: String,
    pub co_runners: Vec<Option<String>>,
    pub report: Option<DetectionReport>,
    pub gal_added: Vec<String>,
    pub reexecution_required: bool,
}

/// One line of the audit log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub mode: ExecMode,
    pub index: usize,
    pub seed: u64,
    pub trials: u64,
    pub members: Vec<AuditMember>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub completions: Vec<AuditCompletion>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgramResult {
    pub distribution: Distribution,
    /// Co-runner of each context that produced this result, `None` for an
    /// isolated context.
    pub co_runners: Vec<Option<String>>,
    /// Contexts discarded by detection.
    pub flagged: Vec<usize>,
    pub reexecution_required: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub results: BTreeMap<String, ProgramResult>,
    pub audit: Vec<AuditRecord>,
    pub gal: BTreeSet<String>,
    pub warnings: Vec<String>,
}

impl RunResult {
    pub fn audit_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.audit {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }
}

fn check_queue(queue: &[Job]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for j in queue {
        if !seen.insert(j.id()) {
            return Err(Error::InvalidArgument(format!("duplicate program id `{}`", j.id())));
        }
        if j.trials == 0 {
            return Err(Error::InvalidArgument(format!("program `{}` requests no trials", j.id())));
        }
    }
    Ok(())
}

fn single_result(dist: Distribution, co_runner: Option<String>) -> ProgramResult {
    ProgramResult {
        distribution: dist,
        co_runners: vec![co_runner],
        flagged: Vec::new(),
        reexecution_required: false,
    }
}

fn member(run: &ContextRun, i: usize, job: &Job, records: bool) -> AuditMember {
    AuditMember {
        program: job.id().to_string(),
        owner: job.owner.clone(),
        qubits: run.mapped[i].qubit_map.clone(),
        records,
        idle_layers: run.idle_layers[i],
    }
}

/// Runs each job alone for its full trial count.
pub fn run_isolated(queue: &[Job], dev: &Device, profile: &NoiseProfile, seed: u64) -> Result<RunResult> {
    check_queue(queue)?;
    let mut out = RunResult::default();
    for (idx, job) in queue.iter().enumerate() {
        let cseed = derive_seed(seed, idx as u64);
        let run = execute_context(&[&job.program], dev, profile, job.trials, cseed, DEFAULT_BUFFER)?;
        out.audit.push(AuditRecord {
            mode: ExecMode::Isolated,
            index: idx,
            seed: cseed,
            trials: job.trials,
            members: vec![member(&run, 0, job, true)],
            completions: Vec::new(),
            warnings: Vec::new(),
        });
        let dist = run.distributions.into_iter().next().expect("one program");
        out.results.insert(job.id().to_string(), single_result(dist, None));
    }
    Ok(out)
}

/// Pairs consecutive queue entries and co-runs each pair for all of its
/// trials. An odd job out runs alone.
pub fn run_emp(queue: &[Job], dev: &Device, profile: &NoiseProfile, seed: u64, buffer: usize) -> Result<RunResult> {
    check_queue(queue)?;
    let mut out = RunResult::default();
    for (idx, pair) in queue.chunks(2).enumerate() {
        let cseed = derive_seed(seed, idx as u64);
        let programs: Vec<&Program> = pair.iter().map(|j| &j.program).collect();
        let trials = pair.iter().map(|j| j.trials).max().expect("non-empty chunk");
        let run = execute_context(&programs, dev, profile, trials, cseed, buffer)?;
        let mut dists = run.distributions.clone();
        // Trial t's randomness does not depend on the trial count, so a
        // shorter request is exactly the prefix of the longer run.
        for (i, job) in pair.iter().enumerate() {
            if job.trials != trials {
                dists[i] = context::resample(&run, i, dev, profile, job.trials, cseed)?;
            }
        }
        out.audit.push(AuditRecord {
            mode: ExecMode::Emp,
            index: idx,
            seed: cseed,
            trials,
            members: pair.iter().enumerate().map(|(i, j)| member(&run, i, j, true)).collect(),
            completions: Vec::new(),
            warnings: Vec::new(),
        });
        for (i, (job, dist)) in pair.iter().zip(dists).enumerate() {
            let other = pair.get(1 - i).map(|j| j.id().to_string());
            out.results.insert(job.id().to_string(), single_result(dist, other));
        }
    }
    Ok(out)
}

/// Dispatches on `mode`; `cfg.contexts` only matters for the context-switched modes.
pub fn run_mode(
    mode: ExecMode,
    queue: &[Job],
    dev: &Device,
    profile: &NoiseProfile,
    cfg: &SchedulerConfig,
    seed: u64,
) -> Result<RunResult> {
    match mode {
        ExecMode::Isolated => run_isolated(queue, dev, profile, seed),
        ExecMode::Emp => run_emp(queue, dev, profile, seed, cfg.buffer),
        ExecMode::Qontexts => run_qontexts(queue, dev, profile, cfg, false, seed),
        ExecMode::QontextsAd => run_qontexts(queue, dev, profile, cfg, true, seed),
    }
}
