//! Benchmark suite, seeded job queues and the experiment scenarios built on
//! top of the scheduler: per-mode fidelity, security verdicts and the BV
//! tampering demo.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{
    disguise_as_qaoa_with, gen_bv, gen_ghz, gen_pea, gen_qaoa_maxcut, gen_zkta, gen_zkta_doubled,
    parse_qasm_named,
    Graph, Program,
};
use crate::detection::{attack_success, fidelity, AttackVerdict, SuccessKind};
use crate::error::{Error, Result};
use crate::scheduler::{derive_seed, execute_context, run_mode, ExecMode, Job, RunResult, SchedulerConfig};
use crate::simulator::{simulate_ideal, Distribution, NoiseProfile};
use crate::topology::Device;

pub const FIXTURE_ENV: &str = "QONTEXT_BENCH_FIXTURES";

const BUNDLED: [(&str, &str); 6] = [
    ("bv_n9", include_str!("../fixtures/benchmarks/bv_n9.qasm")),
    ("bv_n11", include_str!("../fixtures/benchmarks/bv_n11.qasm")),
    ("ghz_n9", include_str!("../fixtures/benchmarks/ghz_n9.qasm")),
    ("ghz_n10", include_str!("../fixtures/benchmarks/ghz_n10.qasm")),
    ("qaoa_n8", include_str!("../fixtures/benchmarks/qaoa_n8.qasm")),
    ("pea_n5", include_str!("../fixtures/benchmarks/pea_n5.qasm")),
];

/// Ring of eight with two chords.
pub fn qaoa_n8_graph() -> Graph {
    let mut e: Vec<(usize, usize)> = (0..8).map(|i| (i, (i + 1) % 8)).collect();
    e.extend([(0, 4), (2, 6)]);
    Graph::new(8, &e).expect("static graph")
}

/// The generators behind the bundled QASM files.
pub fn generate_benchmarks() -> Result<Vec<Program>> {
    Ok(vec![
        gen_bv("11101011")?.with_id("bv_n9"),
        gen_bv("1101011001")?.with_id("bv_n11"),
        gen_ghz(9)?,
        gen_ghz(10)?,
        gen_qaoa_maxcut(&qaoa_n8_graph(), 1, &[0.6], &[0.35])?.with_id("qaoa_n8"),
        gen_pea(4, 5)?,
    ])
}

pub fn bundled_benchmarks() -> Result<Vec<Program>> {
    BUNDLED.iter().map(|(name, text)| parse_qasm_named(text, name)).collect()
}

/// Every `*.qasm` file in `dir`, named by file stem, in name order.
pub fn load_benchmarks(dir: &Path) -> Result<Vec<Program>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|source| Error::File { path: dir.display().to_string(), source })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "qasm"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::InvalidArgument(format!("no .qasm files in {}", dir.display())));
    }
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|source| Error::File {
                path: p.display().to_string(),
                source,
            })?;
            let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("program");
            parse_qasm_named(&text, stem)
        })
        .collect()
}

/// Fixture directory from the environment, falling back to the bundled set.
pub fn benchmarks_from_env() -> Result<Vec<Program>> {
    match std::env::var_os(FIXTURE_ENV) {
        Some(dir) if !dir.is_empty() => load_benchmarks(Path::new(&dir)),
        _ => bundled_benchmarks(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QueueSpec {
    /// Benchmark names drawn round-robin for benign jobs; empty means all.
    pub benchmarks: Vec<String>,
    pub n_programs: usize,
    pub attacker_fraction: f64,
    pub trials: u64,
    pub attacker_qubits: usize,
    pub attacker_depth: usize,
    /// Attackers submit their ZKTA rewritten as a QAOA program.
    pub disguise: bool,
}

impl Default for QueueSpec {
    fn default() -> Self {
        QueueSpec {
            benchmarks: Vec::new(),
            n_programs: 20,
            attacker_fraction: 0.2,
            trials: 8000,
            attacker_qubits: 10,
            attacker_depth: 12,
            disguise: false,
        }
    }
}

impl QueueSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.attacker_fraction) {
            return Err(Error::InvalidArgument(format!(
                "attacker fraction {} outside [0, 1]",
                self.attacker_fraction
            )));
        }
        if self.n_programs == 0 || self.trials == 0 {
            return Err(Error::InvalidArgument("queue needs programs and trials".into()));
        }
        Ok(())
    }

    pub fn attackers(&self) -> usize {
        (self.n_programs as f64 * self.attacker_fraction).round() as usize
    }
}

fn pick<'a>(spec: &QueueSpec, pool: &'a [Program]) -> Result<Vec<&'a Program>> {
    if spec.benchmarks.is_empty() {
        return Ok(pool.iter().collect());
    }
    spec.benchmarks
        .iter()
        .map(|name| {
            pool.iter()
                .find(|p| &p.id == name)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown benchmark `{name}`")))
        })
        .collect()
}

/// Benign jobs cycle through the chosen benchmarks; attacker jobs carry a
/// ZKTA (optionally disguised). The queue order is a seeded shuffle.
pub fn build_queue(spec: &QueueSpec, pool: &[Program], seed: u64) -> Result<Vec<Job>> {
    spec.validate()?;
    let chosen = pick(spec, pool)?;
    let n_att = spec.attackers();
    let n_benign = spec.n_programs - n_att;
    if n_benign > 0 && chosen.is_empty() {
        return Err(Error::InvalidArgument("no benign benchmarks available".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut queue = Vec::with_capacity(spec.n_programs);
    for i in 0..n_benign {
        let p = chosen[i % chosen.len()];
        let prog = p.clone().with_id(format!("{}#{i}", p.id));
        queue.push(Job::new(prog, format!("user{i}")).with_trials(spec.trials));
    }
    // The QAOA rewrite needs CX layers in matching pairs.
    let zkta = if spec.disguise {
        gen_zkta_doubled(spec.attacker_qubits, spec.attacker_depth)?
    } else {
        gen_zkta(spec.attacker_qubits, spec.attacker_depth)?
    };
    for i in 0..n_att {
        let prog = if spec.disguise {
            let (q, _) = disguise_as_qaoa_with(&zkta, rng.random_range(0.1..1.5), rng.random_range(0.1..1.5))?;
            q.with_id(format!("qaoa_zkta#{i}"))
        } else {
            zkta.clone().with_id(format!("zkta#{i}"))
        };
        queue.push(Job::attacker(prog, "attacker").with_trials(spec.trials));
    }
    queue.shuffle(&mut rng);
    Ok(queue)
}

/// Single-answer verdicts for programs whose ideal output is dominated by
/// one outcome, distributional ones otherwise.
pub fn success_kind(ideal: &Distribution) -> SuccessKind {
    let top = ideal.counts.values().copied().fold(0.0, f64::max);
    if top > 0.5 * ideal.total() {
        SuccessKind::SingleAnswer
    } else {
        SuccessKind::Distributional
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityRow {
    pub program: String,
    pub mode: ExecMode,
    pub fidelity: f64,
    /// Fidelity over the isolated fidelity of the same program.
    pub relative: f64,
    /// Contexts that ran next to an attacker job.
    pub attacked_contexts: usize,
    pub contexts: usize,
    pub flagged: usize,
    /// No attacker-induced tampering relative to isolated execution.
    pub secure: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRun {
    pub runs: BTreeMap<ExecMode, RunResult>,
    pub rows: Vec<FidelityRow>,
}

impl ScenarioRun {
    pub fn mean_relative(&self, mode: ExecMode) -> Option<f64> {
        let v: Vec<f64> = self.rows.iter().filter(|r| r.mode == mode).map(|r| r.relative).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    /// Mean relative fidelity over victims that shared at least one context
    /// with an attacker in `mode`.
    pub fn mean_relative_attacked(&self, mode: ExecMode) -> Option<f64> {
        let v: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.mode == mode && r.attacked_contexts > 0)
            .map(|r| r.relative)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// Runs `modes` (isolated is always added as the reference) on one queue
/// with one seed and scores every benign job.
pub fn run_scenario(
    queue: &[Job],
    modes: &[ExecMode],
    dev: &Device,
    profile: &NoiseProfile,
    cfg: &SchedulerConfig,
    seed: u64,
) -> Result<ScenarioRun> {
    let mut wanted: BTreeSet<ExecMode> = modes.iter().copied().collect();
    wanted.insert(ExecMode::Isolated);
    let mut runs = BTreeMap::new();
    for &m in &wanted {
        runs.insert(m, run_mode(m, queue, dev, profile, cfg, seed)?);
    }
    score_runs(queue, runs)
}

/// Scores every benign job of `queue` in each run against its isolated run,
/// which `runs` must contain.
pub fn score_runs(queue: &[Job], runs: BTreeMap<ExecMode, RunResult>) -> Result<ScenarioRun> {
    let wanted: Vec<ExecMode> = runs.keys().copied().collect();
    let iso = runs
        .get(&ExecMode::Isolated)
        .ok_or_else(|| Error::InvalidArgument("scoring needs the isolated run".into()))?;
    let attackers: BTreeSet<&str> = queue.iter().filter(|j| j.is_attacker).map(Job::id).collect();
    let mut rows = Vec::new();
    for job in queue.iter().filter(|j| !j.is_attacker) {
        let ideal = simulate_ideal(&job.program)?;
        let kind = success_kind(&ideal);
        let iso_dist = &iso.results[job.id()].distribution;
        let f_iso = fidelity(&ideal, iso_dist)?;
        for &m in &wanted {
            let r = &runs[&m].results[job.id()];
            let f = fidelity(&ideal, &r.distribution)?;
            let attacked = r
                .co_runners
                .iter()
                .filter(|c| c.as_deref().is_some_and(|id| attackers.contains(id)))
                .count();
            let tampered = attack_success(iso_dist, &r.distribution, &ideal, kind)?.success;
            rows.push(FidelityRow {
                program: job.id().to_string(),
                mode: m,
                fidelity: f,
                relative: if f_iso > 0.0 { f / f_iso } else { 0.0 },
                attacked_contexts: attacked,
                contexts: r.co_runners.len(),
                flagged: r.flagged.len(),
                secure: !(attacked > 0 && tampered),
            });
        }
    }
    Ok(ScenarioRun { runs, rows })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackDemoConfig {
    pub secrets: usize,
    pub secret_bits: usize,
    pub attacker_qubits: usize,
    pub attacker_depth: usize,
    pub trials: u64,
    pub disguise: bool,
    /// Independent repetitions for drivers, each with its own profile and
    /// secrets; [`attack_demo`] itself runs one.
    pub seeds: u64,
}

impl Default for AttackDemoConfig {
    fn default() -> Self {
        AttackDemoConfig {
            secrets: 10,
            secret_bits: 8,
            attacker_qubits: 12,
            attacker_depth: 12,
            trials: 8000,
            disguise: false,
            seeds: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackPair {
    pub secret: String,
    pub attacker: String,
    pub iso_argmax: String,
    pub shared_argmax: String,
    /// Probability of the secret in isolated and shared execution.
    pub iso_correct: f64,
    pub shared_correct: f64,
    pub relative_fidelity: f64,
    pub verdict: AttackVerdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackDemo {
    pub pairs: Vec<AttackPair>,
    pub success_rate: f64,
}

/// Distinct random secrets with at least one set bit.
pub fn random_secrets(n: usize, bits: usize, rng: &mut impl Rng) -> Result<Vec<String>> {
    if bits == 0 || bits >= 63 || (n as u64) >= (1u64 << bits) {
        return Err(Error::InvalidArgument(format!("cannot draw {n} distinct {bits}-bit secrets")));
    }
    let mut seen = BTreeSet::new();
    while seen.len() < n {
        seen.insert(rng.random_range(1..1u64 << bits));
    }
    let mut v: Vec<u64> = seen.into_iter().collect();
    v.shuffle(rng);
    Ok(v.iter()
        .map(|x| (0..bits).map(|i| if x >> i & 1 == 1 { '1' } else { '0' }).collect())
        .collect())
}

/// Each BV victim runs once alone and once next to an attacker, both on the
/// same context seed so the only difference is the co-runner.
pub fn attack_demo(dev: &Device, profile: &NoiseProfile, cfg: &AttackDemoConfig, seed: u64) -> Result<AttackDemo> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let secrets = random_secrets(cfg.secrets, cfg.secret_bits, &mut rng)?;
    let zkta = if cfg.disguise {
        gen_zkta_doubled(cfg.attacker_qubits, cfg.attacker_depth)?
    } else {
        gen_zkta(cfg.attacker_qubits, cfg.attacker_depth)?
    };
    let mut pairs = Vec::with_capacity(secrets.len());
    for (i, secret) in secrets.into_iter().enumerate() {
        let bv = gen_bv(&secret)?;
        let attacker = if cfg.disguise {
            disguise_as_qaoa_with(&zkta, rng.random_range(0.1..1.5), rng.random_range(0.1..1.5))?.0
        } else {
            zkta.clone()
        };
        let cseed = derive_seed(seed, i as u64);
        let ideal = simulate_ideal(&bv)?;
        let iso = execute_context(&[&bv], dev, profile, cfg.trials, cseed, 1)?.distributions.remove(0);
        let shared = execute_context(&[&bv, &attacker], dev, profile, cfg.trials, cseed, 1)?
            .distributions
            .remove(0);
        let f_iso = fidelity(&ideal, &iso)?;
        let argmax = |d: &Distribution| d.argmax().map(|a| a.0).ok_or(Error::EmptyDistribution);
        pairs.push(AttackPair {
            iso_argmax: argmax(&iso)?,
            shared_argmax: argmax(&shared)?,
            iso_correct: iso.probability(&secret),
            shared_correct: shared.probability(&secret),
            relative_fidelity: if f_iso > 0.0 { fidelity(&ideal, &shared)? / f_iso } else { 0.0 },
            verdict: attack_success(&iso, &shared, &ideal, SuccessKind::SingleAnswer)?,
            attacker: attacker.id.clone(),
            secret,
        });
    }
    let wins = pairs.iter().filter(|p| p.verdict.success).count();
    Ok(AttackDemo {
        success_rate: wins as f64 / pairs.len().max(1) as f64,
        pairs,
    })
}
