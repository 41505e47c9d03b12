//! The subcommands. Each one computes a report and its data files in memory;
//! writing is left to the caller so `report --reproduce` can compare.

use std::collections::{BTreeMap, BTreeSet};

use anyhow::Result;
use log::{info, warn};
use serde::Serialize;

use qontexts_core::analytics::{
    p_at_least, p_baseline, simulate_queue, tau, throughput, LatencyParams, Mode, QueueParams,
};
use qontexts_core::characterize::{link_count_sweep, pair_sweep};
use qontexts_core::scenario::{attack_demo, build_queue, score_runs, FidelityRow};
use qontexts_core::scheduler::{run_mode, ExecMode, Job};
use qontexts_core::simulator::QUBIT_CAP;
use qontexts_core::topology::{allocate_regions, Device};

use crate::config::ExperimentConfig;
use crate::report::*;

pub struct Artifacts {
    pub report: Report,
    /// File name and contents, written next to the report.
    pub files: Vec<(String, String)>,
}

fn csv_of<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn report(cfg: &ExperimentConfig, failures: Vec<Failure>, outcome: Outcome) -> Report {
    Report {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        failures,
        outcome,
    }
}

fn mean(v: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = v.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

#[derive(Serialize)]
struct PairCsv {
    victim_a: usize,
    victim_b: usize,
    attack_a: usize,
    attack_b: usize,
    hops: usize,
    chi: f64,
    rf: f64,
}

pub fn characterize(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let c = &cfg.characterize;
    let dev = cfg.device()?;
    let profile = cfg.profile(&dev, cfg.seed)?;
    info!("sweeping link pairs on {}", dev.name());
    let pairs = pair_sweep(&dev, &profile, c.depth, c.trials, cfg.seed, c.pair_limit)?;

    let mut hops: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for p in &pairs {
        hops.entry(p.hops).or_default().push(p.rf);
    }
    let by_hop: Vec<HopRow> = hops
        .into_iter()
        .map(|(h, rfs)| HopRow {
            hops: h,
            pairs: rfs.len(),
            mean_rf: mean(rfs.iter().copied()),
            fraction_below_one: rfs.iter().filter(|&&r| r < 1.0).count() as f64 / rfs.len() as f64,
        })
        .collect();

    info!("link-count sweep around {:?} over {} profiles", c.count_victim, c.count_seeds);
    let mut per_count: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for s in 0..c.count_seeds.max(1) {
        let seed = cfg.seed.wrapping_add(s);
        let prof = cfg.profile(&dev, seed)?;
        for r in link_count_sweep(&dev, &prof, c.count_victim, c.max_attacks, c.depth, c.trials, seed)? {
            per_count.entry(r.attacks).or_default().push(r.rf);
        }
    }
    let by_link_count: Vec<LinkCountRow> = per_count
        .into_iter()
        .map(|(k, rfs)| LinkCountRow {
            attacks: k,
            mean_rf: mean(rfs.iter().copied()),
            min_rf: rfs.iter().copied().fold(f64::INFINITY, f64::min),
            max_rf: rfs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
        .collect();
    let monotone = by_link_count.windows(2).all(|w| w[1].mean_rf <= w[0].mean_rf);

    let n = pairs.len().max(1) as f64;
    let outcome = CharacterizeOutcome {
        pairs: pairs.len(),
        fraction_chi_nonzero: pairs.iter().filter(|p| p.chi > 0.0).count() as f64 / n,
        fraction_rf_below_one: pairs.iter().filter(|p| p.rf < 1.0).count() as f64 / n,
        by_hop,
        by_link_count,
        link_count_monotone: monotone,
    };
    let pair_rows = pairs.iter().map(|p| PairCsv {
        victim_a: p.victim.0,
        victim_b: p.victim.1,
        attack_a: p.attack.0,
        attack_b: p.attack.1,
        hops: p.hops,
        chi: p.chi,
        rf: p.rf,
    });
    let files = vec![
        ("rf_pairs.csv".into(), csv_of(pair_rows)?),
        ("rf_by_hop.csv".into(), csv_of(&outcome.by_hop)?),
        ("rf_by_link_count.csv".into(), csv_of(&outcome.by_link_count)?),
    ];
    Ok(Artifacts {
        report: report(cfg, Vec::new(), Outcome::Characterize(outcome)),
        files,
    })
}

#[derive(Serialize)]
struct PairOutcomeCsv<'a> {
    seed: u64,
    secret: &'a str,
    attacker: &'a str,
    iso_argmax: &'a str,
    shared_argmax: &'a str,
    iso_correct: f64,
    shared_correct: f64,
    relative_fidelity: f64,
    success: bool,
    tie: bool,
}

pub fn attack_demo_cmd(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let dev = cfg.device()?;
    let d = &cfg.attack_demo;
    let mut seeds = Vec::new();
    for i in 0..d.seeds.max(1) {
        let seed = cfg.seed.wrapping_add(i);
        let profile = cfg.profile(&dev, seed)?;
        let demo = attack_demo(&dev, &profile, d, seed)?;
        info!("seed {seed}: success rate {:.3}", demo.success_rate);
        seeds.push(DemoSeed {
            seed,
            success_rate: demo.success_rate,
            pairs: demo.pairs,
        });
    }
    let all: Vec<_> = seeds.iter().flat_map(|s| &s.pairs).collect();
    let wins = all.iter().filter(|p| p.verdict.success).count();
    let rows = seeds.iter().flat_map(|s| {
        s.pairs.iter().map(move |p| PairOutcomeCsv {
            seed: s.seed,
            secret: &p.secret,
            attacker: &p.attacker,
            iso_argmax: &p.iso_argmax,
            shared_argmax: &p.shared_argmax,
            iso_correct: p.iso_correct,
            shared_correct: p.shared_correct,
            relative_fidelity: p.relative_fidelity,
            success: p.verdict.success,
            tie: p.verdict.tie,
        })
    });
    let files = vec![("attack_pairs.csv".into(), csv_of(rows)?)];
    let outcome = AttackDemoOutcome {
        disguise: d.disguise,
        success_rate: wins as f64 / all.len().max(1) as f64,
        seeds,
    };
    Ok(Artifacts {
        report: report(cfg, Vec::new(), Outcome::AttackDemo(outcome)),
        files,
    })
}

/// Reasons a job cannot run even alone on the device.
fn infeasible(job: &Job, dev: &Device) -> Option<String> {
    let n = job.program.n_qubits;
    if n > QUBIT_CAP {
        return Some(format!("{n} qubits exceeds the simulator cap of {QUBIT_CAP}"));
    }
    allocate_regions(dev, &[n], 0, None).err().map(|e| e.to_string())
}

fn analytic_mode(m: ExecMode) -> Mode {
    match m {
        ExecMode::Isolated => Mode::Isolated,
        ExecMode::Emp => Mode::Emp,
        ExecMode::Qontexts | ExecMode::QontextsAd => Mode::Qontexts,
    }
}

fn benchmark_of(id: &str) -> &str {
    id.split('#').next().unwrap_or(id)
}

#[derive(Serialize)]
struct RowCsv<'a> {
    benchmark: &'a str,
    program: &'a str,
    mode: ExecMode,
    fidelity: f64,
    relative: f64,
    attacked_contexts: usize,
    contexts: usize,
    flagged: usize,
    secure: bool,
}

#[derive(Serialize)]
struct BenchmarkCsv<'a> {
    benchmark: &'a str,
    mode: ExecMode,
    mean_relative: f64,
}

#[derive(Serialize)]
struct SecurityCsv<'a> {
    benchmark: &'a str,
    mode: ExecMode,
    /// Empty when the benchmark never met an attacker in this mode.
    secure: Option<bool>,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let dev = cfg.device()?;
    let profile = cfg.profile(&dev, cfg.seed)?;
    let pool = cfg.benchmarks()?;
    let sched = cfg.scheduler();
    let mut failures = Vec::new();

    let queue: Vec<Job> = build_queue(&cfg.queue, &pool, cfg.seed)?
        .into_iter()
        .filter(|j| match infeasible(j, &dev) {
            None => true,
            Some(error) => {
                warn!("dropping {}: {error}", j.id());
                failures.push(Failure {
                    job: Some(j.id().to_string()),
                    mode: None,
                    error,
                });
                false
            }
        })
        .collect();

    let mut wanted: BTreeSet<ExecMode> = cfg.modes.iter().copied().collect();
    wanted.insert(ExecMode::Isolated);
    let mut runs = BTreeMap::new();
    for m in wanted {
        info!("running {} jobs in mode {m}", queue.len());
        match run_mode(m, &queue, &dev, &profile, &sched, cfg.seed) {
            Ok(r) => {
                runs.insert(m, r);
            }
            Err(e) => {
                warn!("mode {m} failed: {e}");
                failures.push(Failure {
                    job: None,
                    mode: Some(m),
                    error: e.to_string(),
                });
            }
        }
    }

    let mut audit = String::new();
    for r in runs.values() {
        audit.push_str(&r.audit_jsonl()?);
    }
    let (runs, rows): (BTreeMap<ExecMode, _>, Vec<FidelityRow>) = if runs.contains_key(&ExecMode::Isolated) {
        let scored = score_runs(&queue, runs)?;
        (scored.runs, scored.rows)
    } else {
        (runs, Vec::new())
    };

    let lat = LatencyParams {
        trials: cfg.queue.trials,
        contexts: cfg.contexts,
        ..cfg.analytics.latency.clone()
    };
    let modes: Vec<ModeSummary> = runs
        .iter()
        .map(|(&m, r)| {
            let mine: Vec<&FidelityRow> = rows.iter().filter(|row| row.mode == m).collect();
            let attacked: Vec<f64> = mine.iter().filter(|r| r.attacked_contexts > 0).map(|r| r.relative).collect();
            ModeSummary {
                mode: m,
                mean_relative: mean(mine.iter().map(|r| r.relative)),
                mean_relative_attacked: (!attacked.is_empty()).then(|| mean(attacked.iter().copied())),
                secure_jobs: mine.iter().filter(|r| r.secure).count(),
                jobs: mine.len(),
                throughput: throughput(analytic_mode(m), &lat),
                gal: r.gal.iter().cloned().collect(),
                warnings: r.warnings.clone(),
            }
        })
        .collect();

    let mut by_benchmark: BTreeMap<String, BTreeMap<ExecMode, f64>> = BTreeMap::new();
    let mut security: BTreeMap<String, BTreeMap<ExecMode, Option<bool>>> = BTreeMap::new();
    let mut grouped: BTreeMap<(String, ExecMode), Vec<&FidelityRow>> = BTreeMap::new();
    for r in &rows {
        grouped.entry((benchmark_of(&r.program).to_string(), r.mode)).or_default().push(r);
    }
    for ((b, m), rs) in grouped {
        by_benchmark.entry(b.clone()).or_default().insert(m, mean(rs.iter().map(|r| r.relative)));
        let exposed = rs.iter().any(|r| r.attacked_contexts > 0);
        security.entry(b).or_default().insert(m, exposed.then(|| rs.iter().all(|r| r.secure)));
    }
    let security: Vec<SecurityRow> = security
        .into_iter()
        .map(|(benchmark, secure)| SecurityRow { benchmark, secure })
        .collect();

    let fidelity_rows = rows.iter().map(|r| RowCsv {
        benchmark: benchmark_of(&r.program),
        program: &r.program,
        mode: r.mode,
        fidelity: r.fidelity,
        relative: r.relative,
        attacked_contexts: r.attacked_contexts,
        contexts: r.contexts,
        flagged: r.flagged,
        secure: r.secure,
    });
    let files = vec![
        (
            "fidelity.csv".into(),
            csv_of(fidelity_rows)?,
        ),
        (
            "benchmarks.csv".into(),
            csv_of(by_benchmark.iter().flat_map(|(b, per)| {
                per.iter().map(move |(&mode, &v)| BenchmarkCsv {
                    benchmark: b,
                    mode,
                    mean_relative: v,
                })
            }))?,
        ),
        (
            "security.csv".into(),
            csv_of(security.iter().flat_map(|s| {
                s.secure.iter().map(move |(&mode, &secure)| SecurityCsv {
                    benchmark: &s.benchmark,
                    mode,
                    secure,
                })
            }))?,
        ),
        ("audit.jsonl".into(), audit),
    ];
    let outcome = RunOutcome {
        queue: queue.iter().map(|j| j.id().to_string()).collect(),
        attackers: queue.iter().filter(|j| j.is_attacker).map(|j| j.id().to_string()).collect(),
        modes,
        rows,
        by_benchmark,
        security,
    };
    Ok(Artifacts {
        report: report(cfg, failures, Outcome::Run(outcome)),
        files,
    })
}

#[derive(Serialize)]
struct LatencyCsv {
    load_ratio: f64,
    tau_isolated: f64,
    tau_emp: f64,
    tau_qontexts: f64,
    throughput_emp: f64,
    throughput_qontexts: f64,
}

#[derive(Serialize)]
struct ResilienceCsv {
    contexts: u32,
    beta: f64,
    p_at_least: f64,
    ratio_to_baseline: f64,
}

#[derive(Serialize)]
struct QueueCsv {
    arrival_rate: f64,
    mode: Mode,
    mean_completion: f64,
    mean_wait: f64,
    completed: usize,
    utilization: f64,
    saturated: bool,
}

/// Latency, resilience and queueing models. The top-level context count
/// applies to all of them.
pub fn analytics(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let a = &cfg.analytics;
    let lat = LatencyParams {
        contexts: cfg.contexts,
        ..a.latency.clone()
    };
    let rp = a.resilience.with_contexts(cfg.contexts);
    lat.validate()?;
    rp.validate()?;

    let latency_rows: Vec<LatencyCsv> = a
        .load_ratios
        .iter()
        .map(|&r| {
            let l = lat.with_load_ratio(r);
            LatencyCsv {
                load_ratio: r,
                tau_isolated: tau(Mode::Isolated, &l),
                tau_emp: tau(Mode::Emp, &l),
                tau_qontexts: tau(Mode::Qontexts, &l),
                throughput_emp: throughput(Mode::Emp, &l),
                throughput_qontexts: throughput(Mode::Qontexts, &l),
            }
        })
        .collect();

    let mut resilience_rows = Vec::new();
    for c in 1..=a.max_contexts {
        for &beta in &a.betas {
            let p = p_at_least(&rp.with_contexts(c).with_beta(beta));
            resilience_rows.push(ResilienceCsv {
                contexts: c,
                beta,
                p_at_least: p,
                ratio_to_baseline: p_baseline(&rp) / p,
            });
        }
    }

    let mut queue = Vec::new();
    for &rate in &a.arrival_rates {
        let qp = QueueParams {
            arrival_rate: rate,
            ..a.queue.clone()
        };
        for (_, stats) in simulate_queue(&qp, &lat)? {
            queue.push((rate, stats));
        }
    }
    let queue_rows = queue.iter().map(|(rate, q)| QueueCsv {
        arrival_rate: *rate,
        mode: q.mode,
        mean_completion: q.mean_completion,
        mean_wait: q.mean_wait,
        completed: q.completed,
        utilization: q.utilization,
        saturated: q.saturated,
    });
    let files = vec![
        ("latency.csv".into(), csv_of(&latency_rows)?),
        ("resilience.csv".into(), csv_of(&resilience_rows)?),
        ("queue.csv".into(), csv_of(queue_rows)?),
    ];
    let outcome = AnalyticsOutcome {
        p_baseline: p_baseline(&rp),
        p_at_least: a
            .betas
            .iter()
            .map(|&b| (b.to_string(), p_at_least(&rp.with_beta(b))))
            .collect(),
        throughput: Mode::ALL.iter().map(|&m| (m.to_string(), throughput(m, &lat))).collect(),
        queue,
    };
    Ok(Artifacts {
        report: report(cfg, Vec::new(), Outcome::Analytics(outcome)),
        files,
    })
}

/// Recomputes a report from its embedded configuration.
pub fn rerun(cfg: &ExperimentConfig, command: &str) -> Result<Artifacts> {
    match command {
        "characterize" => characterize(cfg),
        "attack-demo" => attack_demo_cmd(cfg),
        "run" => run(cfg),
        "analytics" => analytics(cfg),
        other => anyhow::bail!("unknown command `{other}` in report"),
    }
}
