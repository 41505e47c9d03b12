//! Context-switched execution. Each program's trials are split over C
//! contexts, each with a different co-runner; when a program's last context
//! finishes, its context results are screened by hold-out detection and
//! merged.

use std::collections::{BTreeMap, BTreeSet};

use log::warn;
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::context::{derive_seed, execute_context};
use super::{
    check_queue, member, AuditCompletion, AuditRecord, ExecMode, Job, ProgramResult, RunResult,
    SchedulerConfig,
};
use crate::circuit::Program;
use crate::detection::{holdout_detect, merge_weighted, DetectionReport};
use crate::error::{Error, Result};
use crate::simulator::{Distribution, NoiseProfile};
use crate::topology::Device;

/// Bookkeeping shared by every program of a run: who each live program has
/// run with, the per-context results, and programs caught attacking.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SchedulerState {
    pub eht: BTreeMap<String, Vec<Option<String>>>,
    pub rt: BTreeMap<String, Vec<(Distribution, Option<String>)>>,
    pub gal: BTreeSet<String>,
}

impl SchedulerState {
    fn record(&mut self, id: &str, dist: Distribution, co: Option<String>) {
        self.eht.entry(id.to_string()).or_default().push(co.clone());
        self.rt.entry(id.to_string()).or_default().push((dist, co));
    }

    fn contexts_done(&self, id: &str) -> usize {
        self.rt.get(id).map_or(0, Vec::len)
    }

    fn has_run_with(&self, id: &str, other: &str) -> bool {
        self.eht
            .get(id)
            .is_some_and(|v| v.iter().any(|c| c.as_deref() == Some(other)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Finalized {
    pub distribution: Distribution,
    pub report: Option<DetectionReport>,
    /// Context indices discarded before merging.
    pub flagged: Vec<usize>,
    /// Co-runners of the discarded contexts.
    pub suspects: Vec<String>,
    pub reexecution_required: bool,
}

/// Merges one program's context results. Without detection the raw counts
/// are pooled. With detection and at least three contexts, flagged contexts
/// are dropped and the rest are weighted; if every context is flagged all of
/// them are kept and re-execution is signalled.
pub fn finalize(
    results: &[(Distribution, Option<String>)],
    cfg: &SchedulerConfig,
    detect: bool,
) -> Result<Finalized> {
    let dists: Vec<Distribution> = results.iter().map(|(d, _)| d.clone()).collect();
    if dists.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    if !detect {
        let parts: Vec<&Distribution> = dists.iter().collect();
        return Ok(Finalized {
            distribution: Distribution::pool(&parts),
            report: None,
            flagged: Vec::new(),
            suspects: Vec::new(),
            reexecution_required: false,
        });
    }
    if dists.len() < 3 {
        let report = DetectionReport::keep_all(&dists, cfg.merge)?;
        return Ok(Finalized {
            distribution: merge_weighted(&dists, &report, cfg.merge)?,
            report: Some(report),
            flagged: Vec::new(),
            suspects: Vec::new(),
            reexecution_required: false,
        });
    }
    let report = holdout_detect(&dists, cfg.threshold)?;
    let flagged = report.attacked.clone();
    let suspects: Vec<String> = flagged
        .iter()
        .filter_map(|&i| results[i].1.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if flagged.len() == dists.len() {
        let keep = DetectionReport::keep_all(&dists, cfg.merge)?;
        return Ok(Finalized {
            distribution: merge_weighted(&dists, &keep, cfg.merge)?,
            report: Some(report),
            flagged,
            suspects,
            reexecution_required: true,
        });
    }
    Ok(Finalized {
        distribution: merge_weighted(&dists, &report, cfg.merge)?,
        report: Some(report),
        flagged,
        suspects,
        reexecution_required: false,
    })
}

fn per_context_trials(job: &Job, contexts: u32) -> Result<u64> {
    if contexts == 0 {
        return Err(Error::InvalidArgument("need at least one context".into()));
    }
    if job.trials % contexts as u64 != 0 {
        return Err(Error::InvalidArgument(format!(
            "program `{}`: {} trials do not split into {contexts} equal contexts",
            job.id(),
            job.trials
        )));
    }
    Ok(job.trials / contexts as u64)
}

enum Pick {
    /// Both programs keep the context result.
    Shared(usize),
    /// The co-runner only occupies the machine.
    Filler(usize),
    Alone,
}

struct Run<'a> {
    queue: &'a [Job],
    dev: &'a Device,
    profile: &'a NoiseProfile,
    cfg: &'a SchedulerConfig,
    detect: bool,
    seed: u64,
    rng: ChaCha8Rng,
    state: SchedulerState,
    slice: Vec<u64>,
    done: BTreeSet<usize>,
    last_used: Vec<usize>,
    out: RunResult,
}

impl<'a> Run<'a> {
    fn unfinished(&self, j: usize) -> bool {
        !self.done.contains(&j)
    }

    fn select(&mut self, i: usize, warnings: &mut Vec<String>) -> Pick {
        let id = self.queue[i].id();
        let eligible: Vec<usize> = (0..self.queue.len())
            .filter(|&j| j != i && !self.state.gal.contains(self.queue[j].id()))
            .collect();
        let fresh: Vec<usize> = eligible
            .iter()
            .copied()
            .filter(|&j| !self.state.has_run_with(id, self.queue[j].id()))
            .collect();
        let sharing: Vec<usize> = fresh
            .iter()
            .copied()
            .filter(|&j| {
                self.unfinished(j)
                    && self.slice[j] == self.slice[i]
                    && !self.state.has_run_with(self.queue[j].id(), id)
            })
            .collect();
        if let Some(&j) = sharing.choose(&mut self.rng) {
            return Pick::Shared(j);
        }
        if let Some(&j) = fresh.choose(&mut self.rng) {
            return Pick::Filler(j);
        }
        if eligible.is_empty() {
            return Pick::Alone;
        }
        let j = *eligible
            .iter()
            .min_by_key(|&&j| (self.last_used[j], j))
            .expect("non-empty");
        let msg = format!(
            "no unused co-runner left for `{id}`; reusing `{}`",
            self.queue[j].id()
        );
        warn!("{msg}");
        warnings.push(msg);
        Pick::Filler(j)
    }

    fn step(&mut self, i: usize) -> Result<()> {
        let mut warnings = Vec::new();
        // A program on the attack list runs the rest of its contexts alone.
        let pick = if self.state.gal.contains(self.queue[i].id()) {
            Pick::Alone
        } else {
            self.select(i, &mut warnings)
        };
        let (partner, shares) = match pick {
            Pick::Shared(j) => (Some(j), true),
            Pick::Filler(j) => (Some(j), false),
            Pick::Alone => (None, false),
        };
        let index = self.out.audit.len();
        let cseed = derive_seed(self.seed, index as u64);
        let queue = self.queue;
        let job = &queue[i];
        let mut programs: Vec<&Program> = vec![&job.program];
        if let Some(j) = partner {
            programs.push(&queue[j].program);
            self.last_used[j] = index + 1;
        }
        let run = execute_context(&programs, self.dev, self.profile, self.slice[i], cseed, self.cfg.buffer)?;

        let mut members = vec![member(&run, 0, job, true)];
        let co_id = partner.map(|j| self.queue[j].id().to_string());
        self.state
            .record(job.id(), run.distributions[0].clone(), co_id.clone());
        if let Some(j) = partner {
            members.push(member(&run, 1, &queue[j], shares));
            if shares {
                self.state
                    .record(queue[j].id(), run.distributions[1].clone(), Some(job.id().to_string()));
            }
        }

        let mut completions = Vec::new();
        let mut finishing = vec![i];
        if shares {
            finishing.extend(partner);
        }
        for k in finishing {
            if self.state.contexts_done(self.queue[k].id()) == self.cfg.contexts as usize {
                completions.push(self.teardown(k)?);
            }
        }
        self.out.warnings.extend(warnings.iter().cloned());
        self.out.audit.push(AuditRecord {
            mode: if self.detect {
                ExecMode::QontextsAd
            } else {
                ExecMode::Qontexts
            },
            index,
            seed: cseed,
            trials: self.slice[i],
            members,
            completions,
            warnings,
        });
        Ok(())
    }

    fn teardown(&mut self, k: usize) -> Result<AuditCompletion> {
        let id = self.queue[k].id().to_string();
        let results = self.state.rt.remove(&id).unwrap_or_default();
        self.state.eht.remove(&id);
        let fin = finalize(&results, self.cfg, self.detect)?;
        let mut gal_added = Vec::new();
        for s in &fin.suspects {
            if self.state.gal.insert(s.clone()) {
                gal_added.push(s.clone());
            }
        }
        let co_runners: Vec<Option<String>> = results.into_iter().map(|(_, c)| c).collect();
        self.out.results.insert(
            id.clone(),
            ProgramResult {
                distribution: fin.distribution,
                co_runners: co_runners.clone(),
                flagged: fin.flagged,
                reexecution_required: fin.reexecution_required,
            },
        );
        self.done.insert(k);
        Ok(AuditCompletion {
            program: id,
            co_runners,
            report: fin.report,
            gal_added,
            reexecution_required: fin.reexecution_required,
        })
    }
}

/// Runs every queued job over `cfg.contexts` contexts. Jobs are driven to
/// completion in queue order; a co-runner that is itself unfinished keeps its
/// share of the context as one of its own contexts.
pub fn run_qontexts(
    queue: &[Job],
    dev: &Device,
    profile: &NoiseProfile,
    cfg: &SchedulerConfig,
    detect: bool,
    seed: u64,
) -> Result<RunResult> {
    check_queue(queue)?;
    let slice = queue
        .iter()
        .map(|j| per_context_trials(j, cfg.contexts))
        .collect::<Result<Vec<_>>>()?;
    let mut run = Run {
        queue,
        dev,
        profile,
        cfg,
        detect,
        seed,
        rng: ChaCha8Rng::seed_from_u64(seed),
        state: SchedulerState::default(),
        slice,
        done: BTreeSet::new(),
        last_used: vec![0; queue.len()],
        out: RunResult::default(),
    };
    for i in 0..queue.len() {
        while run.unfinished(i) {
            run.step(i)?;
        }
    }
    let mut out = run.out;
    out.gal = run.state.gal;
    Ok(out)
}

/// Runs `job` over one context per entry of `co_runners` (`None` = alone)
/// and finalizes the results. Used to reproduce hand-crafted schedules.
pub fn run_forced(
    job: &Job,
    co_runners: &[Option<&Program>],
    dev: &Device,
    profile: &NoiseProfile,
    cfg: &SchedulerConfig,
    detect: bool,
    seed: u64,
) -> Result<(Finalized, Vec<Distribution>)> {
    let slice = per_context_trials(job, co_runners.len() as u32)?;
    let mut results = Vec::with_capacity(co_runners.len());
    for (c, co) in co_runners.iter().enumerate() {
        let mut programs = vec![&job.program];
        programs.extend(co.iter().copied());
        let run = execute_context(&programs, dev, profile, slice, derive_seed(seed, c as u64), cfg.buffer)?;
        results.push((
            run.distributions.into_iter().next().expect("job result"),
            co.map(|p| p.id.clone()),
        ));
    }
    let dists = results.iter().map(|(d, _)| d.clone()).collect();
    Ok((finalize(&results, cfg, detect)?, dists))
}
