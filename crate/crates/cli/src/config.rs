//! Experiment configuration: one JSON document, every field optional.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use qontexts_core::analytics::{LatencyParams, QueueParams, ResilienceParams};
use qontexts_core::circuit::Program;
use qontexts_core::detection::{MergeMode, DEFAULT_THRESHOLD};
use qontexts_core::scenario::{
    benchmarks_from_env, load_benchmarks, AttackDemoConfig, QueueSpec, FIXTURE_ENV,
};
use qontexts_core::scheduler::{ExecMode, SchedulerConfig, DEFAULT_BUFFER, DEFAULT_CONTEXTS};
use qontexts_core::simulator::{gen_noise_profile, Calibration, NoiseParams, NoiseProfile};
use qontexts_core::topology::{make_device, Device, Link, Preset};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Preset name, or a topology file as `custom:PATH`.
    pub device: String,
    /// Use the shipped hanoi27 calibration (pinned crosstalk on top of a
    /// seeded random profile). Off means a plain profile from `noise`.
    pub calibrated: bool,
    pub noise: NoiseParams,
    pub queue: QueueSpec,
    pub modes: Vec<ExecMode>,
    pub contexts: u32,
    pub threshold: f64,
    pub merge: MergeMode,
    pub buffer: usize,
    pub seed: u64,
    pub out: PathBuf,
    /// Directory of `*.qasm` benign benchmarks; falls back to the
    /// environment override, then the bundled set.
    pub benchmark_dir: Option<PathBuf>,
    pub characterize: CharacterizeConfig,
    pub attack_demo: AttackDemoConfig,
    pub analytics: AnalyticsConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            device: "hanoi27".into(),
            calibrated: true,
            noise: NoiseParams::default(),
            queue: QueueSpec::default(),
            modes: ExecMode::ALL.to_vec(),
            contexts: DEFAULT_CONTEXTS,
            threshold: DEFAULT_THRESHOLD,
            merge: MergeMode::default(),
            buffer: DEFAULT_BUFFER,
            seed: 0,
            out: PathBuf::from("out"),
            benchmark_dir: None,
            characterize: CharacterizeConfig::default(),
            attack_demo: AttackDemoConfig::default(),
            analytics: AnalyticsConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CharacterizeConfig {
    pub depth: usize,
    pub trials: u64,
    /// Cap on the number of ordered link pairs swept; `None` sweeps all.
    pub pair_limit: Option<usize>,
    pub count_victim: Link,
    pub max_attacks: usize,
    /// Profiles averaged in the link-count sweep.
    pub count_seeds: u64,
}

impl Default for CharacterizeConfig {
    fn default() -> Self {
        CharacterizeConfig {
            depth: 10,
            trials: 2000,
            pair_limit: None,
            count_victim: Link(18, 21),
            max_attacks: 4,
            count_seeds: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticsConfig {
    pub latency: LatencyParams,
    pub resilience: ResilienceParams,
    /// t_load / t_wait ratios for the latency curves.
    pub load_ratios: Vec<f64>,
    pub max_contexts: u32,
    pub betas: Vec<f64>,
    pub queue: QueueParams,
    pub arrival_rates: Vec<f64>,
}

impl Default for AnalyticsConfig {
    fn default() -> Self {
        AnalyticsConfig {
            latency: LatencyParams::default(),
            resilience: ResilienceParams::default(),
            load_ratios: vec![0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0],
            max_contexts: 64,
            betas: vec![0.5, 0.75, 1.0],
            queue: QueueParams::default(),
            arrival_rates: (2..=10).map(f64::from).collect(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub modes: Option<Vec<ExecMode>>,
    pub contexts: Option<u32>,
    pub threshold: Option<f64>,
    pub merge: Option<MergeMode>,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
            }
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(m) = &o.modes {
            self.modes = m.clone();
        }
        if let Some(c) = o.contexts {
            self.contexts = c;
        }
        if let Some(t) = o.threshold {
            self.threshold = t;
        }
        if let Some(m) = o.merge {
            self.merge = m;
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.queue.validate()?;
        self.noise.validate()?;
        if self.modes.is_empty() {
            bail!("no execution mode selected");
        }
        if self.contexts == 0 {
            bail!("contexts must be at least 1");
        }
        if !(self.threshold.is_finite() && self.threshold >= 0.0) {
            bail!("threshold {} must be a non-negative number", self.threshold);
        }
        if let Some(dir) = &self.benchmark_dir {
            if !dir.is_dir() {
                bail!("benchmark directory {} does not exist", dir.display());
            }
        }
        if let Preset::Custom(p) = self.preset()? {
            if !p.is_file() {
                bail!("topology file {} does not exist", p.display());
            }
        }
        if self.calibrated && self.device != "hanoi27" {
            bail!("the shipped calibration covers hanoi27 only; set \"calibrated\": false for `{}`", self.device);
        }
        self.analytics.latency.validate()?;
        self.analytics.resilience.validate()?;
        Ok(())
    }

    pub fn preset(&self) -> Result<Preset> {
        Ok(self.device.parse()?)
    }

    pub fn device(&self) -> Result<Device> {
        Ok(make_device(&self.preset()?)?)
    }

    pub fn profile(&self, dev: &Device, seed: u64) -> Result<NoiseProfile> {
        Ok(if self.calibrated {
            Calibration::hanoi27()?.profile_for_seed(dev, seed)?
        } else {
            gen_noise_profile(dev, seed, &self.noise)?
        })
    }

    pub fn scheduler(&self) -> SchedulerConfig {
        SchedulerConfig {
            contexts: self.contexts,
            threshold: self.threshold,
            merge: self.merge,
            buffer: self.buffer,
        }
    }

    pub fn benchmarks(&self) -> Result<Vec<Program>> {
        match &self.benchmark_dir {
            Some(dir) => Ok(load_benchmarks(dir)?),
            None => benchmarks_from_env().with_context(|| format!("loading benchmarks (${FIXTURE_ENV})")),
        }
    }
}
