//! Machine-readable report plus the plain-text summary rendered from it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use qontexts_core::analytics::QueueStats;
use qontexts_core::scenario::{AttackPair, FidelityRow};
use qontexts_core::scheduler::ExecMode;

use crate::config::ExperimentConfig;

pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_FILE: &str = "summary.txt";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    /// Jobs or modes that could not be executed.
    pub failures: Vec<Failure>,
    pub outcome: Outcome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub job: Option<String>,
    pub mode: Option<ExecMode>,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Outcome {
    Characterize(CharacterizeOutcome),
    AttackDemo(AttackDemoOutcome),
    Run(RunOutcome),
    Analytics(AnalyticsOutcome),
}

impl Outcome {
    pub fn command(&self) -> &'static str {
        match self {
            Outcome::Characterize(_) => "characterize",
            Outcome::AttackDemo(_) => "attack-demo",
            Outcome::Run(_) => "run",
            Outcome::Analytics(_) => "analytics",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HopRow {
    pub hops: usize,
    pub pairs: usize,
    pub mean_rf: f64,
    pub fraction_below_one: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkCountRow {
    pub attacks: usize,
    pub mean_rf: f64,
    pub min_rf: f64,
    pub max_rf: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacterizeOutcome {
    pub pairs: usize,
    pub fraction_chi_nonzero: f64,
    pub fraction_rf_below_one: f64,
    pub by_hop: Vec<HopRow>,
    pub by_link_count: Vec<LinkCountRow>,
    /// Mean RF never rises as attack links are added.
    pub link_count_monotone: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoSeed {
    pub seed: u64,
    pub success_rate: f64,
    pub pairs: Vec<AttackPair>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackDemoOutcome {
    pub disguise: bool,
    pub seeds: Vec<DemoSeed>,
    pub success_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub mode: ExecMode,
    pub mean_relative: f64,
    /// Over victims that shared at least one context with an attacker.
    pub mean_relative_attacked: Option<f64>,
    pub secure_jobs: usize,
    pub jobs: usize,
    /// Analytic throughput relative to isolated execution.
    pub throughput: f64,
    pub gal: Vec<String>,
    pub warnings: Vec<String>,
}

/// Security of one benchmark per mode: `None` when no job of it ever met an
/// attacker in that mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecurityRow {
    pub benchmark: String,
    pub secure: BTreeMap<ExecMode, Option<bool>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub queue: Vec<String>,
    pub attackers: Vec<String>,
    pub modes: Vec<ModeSummary>,
    pub rows: Vec<FidelityRow>,
    /// Mean relative fidelity per benchmark and mode.
    pub by_benchmark: BTreeMap<String, BTreeMap<ExecMode, f64>>,
    pub security: Vec<SecurityRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyticsOutcome {
    pub p_baseline: f64,
    /// At-least-beta probability per configured beta.
    pub p_at_least: BTreeMap<String, f64>,
    pub throughput: BTreeMap<String, f64>,
    pub queue: Vec<(f64, QueueStats)>,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(REPORT_FILE);
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} on {} (seed {}, {} contexts, threshold {}, merge {})",
            self.outcome.command(),
            self.config.device,
            self.seed,
            self.config.contexts,
            self.config.threshold,
            self.config.merge
        );
        match &self.outcome {
            Outcome::Characterize(c) => characterize_summary(&mut s, c),
            Outcome::AttackDemo(a) => demo_summary(&mut s, a),
            Outcome::Run(r) => run_summary(&mut s, r),
            Outcome::Analytics(a) => analytics_summary(&mut s, a),
        }
        if !self.failures.is_empty() {
            let _ = writeln!(s, "\nfailures:");
            for f in &self.failures {
                let what = match (&f.job, f.mode) {
                    (Some(j), Some(m)) => format!("{j} [{m}]"),
                    (Some(j), None) => j.clone(),
                    (None, Some(m)) => format!("[{m}]"),
                    (None, None) => "-".into(),
                };
                let _ = writeln!(s, "  {what}: {}", f.error);
            }
        }
        s
    }
}

fn characterize_summary(s: &mut String, c: &CharacterizeOutcome) {
    let _ = writeln!(
        s,
        "{} link pairs: {:.1}% with crosstalk, {:.1}% with RF < 1\n",
        c.pairs,
        100.0 * c.fraction_chi_nonzero,
        100.0 * c.fraction_rf_below_one
    );
    let _ = writeln!(s, "{:>5} {:>7} {:>9} {:>9}", "hops", "pairs", "mean RF", "RF < 1");
    for h in &c.by_hop {
        let _ = writeln!(s, "{:>5} {:>7} {:>9.4} {:>8.1}%", h.hops, h.pairs, h.mean_rf, 100.0 * h.fraction_below_one);
    }
    let _ = writeln!(s, "\n{:>7} {:>9} {:>9} {:>9}", "attacks", "mean RF", "min", "max");
    for r in &c.by_link_count {
        let _ = writeln!(s, "{:>7} {:>9.4} {:>9.4} {:>9.4}", r.attacks, r.mean_rf, r.min_rf, r.max_rf);
    }
    let _ = writeln!(s, "link-count trend monotone: {}", c.link_count_monotone);
}

fn demo_summary(s: &mut String, a: &AttackDemoOutcome) {
    let _ = writeln!(s, "attacker disguised as QAOA: {}\n", a.disguise);
    let _ = writeln!(
        s,
        "{:>6} {:<12} {:<12} {:<12} {:>8} {:>8} {:>7}  attack",
        "seed", "secret", "isolated", "shared", "P(iso)", "P(shr)", "RF"
    );
    for d in &a.seeds {
        for p in &d.pairs {
            let _ = writeln!(
                s,
                "{:>6} {:<12} {:<12} {:<12} {:>8.4} {:>8.4} {:>7.3}  {}",
                d.seed,
                p.secret,
                p.iso_argmax,
                p.shared_argmax,
                p.iso_correct,
                p.shared_correct,
                p.relative_fidelity,
                if p.verdict.success { "succeeded" } else { "failed" }
            );
        }
    }
    let _ = writeln!(s, "\nsuccess rate {:.3}", a.success_rate);
}

fn mark(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "secure",
        Some(false) => "INSECURE",
        None => "-",
    }
}

fn run_summary(s: &mut String, r: &RunOutcome) {
    let _ = writeln!(s, "{} jobs, {} attacker jobs\n", r.queue.len(), r.attackers.len());
    let _ = writeln!(
        s,
        "{:<12} {:>9} {:>9} {:>8} {:>10}  GAL",
        "mode", "rel. fid", "attacked", "secure", "throughput"
    );
    for m in &r.modes {
        let attacked = m.mean_relative_attacked.map_or("-".to_string(), |v| format!("{v:.4}"));
        let _ = writeln!(
            s,
            "{:<12} {:>9.4} {:>9} {:>8} {:>10.3}  {}",
            m.mode.to_string(),
            m.mean_relative,
            attacked,
            format!("{}/{}", m.secure_jobs, m.jobs),
            m.throughput,
            m.gal.len()
        );
    }
    let modes: Vec<ExecMode> = r.modes.iter().map(|m| m.mode).collect();
    let _ = write!(s, "\n{:<10}", "benchmark");
    for m in &modes {
        let _ = write!(s, " {:>12}", m.to_string());
    }
    let _ = writeln!(s);
    for (b, per) in &r.by_benchmark {
        let _ = write!(s, "{b:<10}");
        for m in &modes {
            let _ = write!(s, " {:>12}", per.get(m).map_or("-".into(), |v| format!("{v:.4}")));
        }
        let _ = writeln!(s);
    }
    let _ = writeln!(s, "\nsecurity against crosstalk attacks");
    let _ = write!(s, "{:<10}", "benchmark");
    for m in &modes {
        let _ = write!(s, " {:>12}", m.to_string());
    }
    let _ = writeln!(s);
    for row in &r.security {
        let _ = write!(s, "{:<10}", row.benchmark);
        for m in &modes {
            let _ = write!(s, " {:>12}", mark(row.secure.get(m).copied().flatten()));
        }
        let _ = writeln!(s);
    }
    for m in &r.modes {
        for w in &m.warnings {
            let _ = writeln!(s, "warning [{}]: {w}", m.mode);
        }
    }
}

fn analytics_summary(s: &mut String, a: &AnalyticsOutcome) {
    let _ = writeln!(s, "baseline attack probability {:.4e}", a.p_baseline);
    for (beta, p) in &a.p_at_least {
        let _ = writeln!(s, "P(>= beta of contexts attacked), beta {beta}: {p:.4e}");
    }
    let _ = writeln!(s);
    for (mode, t) in &a.throughput {
        let _ = writeln!(s, "throughput {mode:<10} {t:.3}x");
    }
    let _ = writeln!(s, "\n{:>6} {:<10} {:>14} {:>11}", "rate", "mode", "completion s", "utilization");
    for (rate, q) in &a.queue {
        let _ = writeln!(
            s,
            "{:>6} {:<10} {:>14.6} {:>11.3}{}",
            rate,
            q.mode.to_string(),
            q.mean_completion,
            q.utilization,
            if q.saturated { "  saturated" } else { "" }
        );
    }
}
