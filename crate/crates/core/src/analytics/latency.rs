//! Per-program latency under the three execution modes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Isolated,
    Emp,
    Qontexts,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Isolated, Mode::Emp, Mode::Qontexts];
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Isolated => "isolated",
            Mode::Emp => "emp",
            Mode::Qontexts => "qontexts",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "isolated" => Ok(Mode::Isolated),
            "emp" => Ok(Mode::Emp),
            "qontexts" => Ok(Mode::Qontexts),
            _ => Err(Error::InvalidArgument(format!("unknown mode `{s}`"))),
        }
    }
}

/// Times are in seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LatencyParams {
    pub trials: u64,
    pub t_trial: f64,
    pub t_wait: f64,
    pub t_load: f64,
    pub concurrency: u32,
    pub contexts: u32,
}

impl Default for LatencyParams {
    fn default() -> Self {
        LatencyParams {
            trials: 10_000,
            t_trial: 100e-6,
            t_wait: 250e-6,
            t_load: 250e-6,
            concurrency: 2,
            contexts: 8,
        }
    }
}

impl LatencyParams {
    pub fn validate(&self) -> Result<()> {
        let times = [self.t_trial, self.t_wait, self.t_load];
        if self.trials == 0
            || self.concurrency == 0
            || self.contexts == 0
            || times.iter().any(|t| !(t.is_finite() && *t > 0.0))
        {
            return Err(Error::InvalidArgument(format!(
                "latency parameters must be positive: {self:?}"
            )));
        }
        Ok(())
    }

    /// Sets t_load as a multiple of t_wait.
    pub fn with_load_ratio(&self, ratio: f64) -> Self {
        LatencyParams {
            t_load: ratio * self.t_wait,
            ..self.clone()
        }
    }

    pub fn t_switch(&self) -> f64 {
        self.t_load.max(self.t_wait)
    }

    fn execution(&self) -> f64 {
        self.trials as f64 * self.t_trial + (self.trials.saturating_sub(1)) as f64 * self.t_wait
    }
}

pub fn tau_isolated(lp: &LatencyParams) -> f64 {
    lp.t_load + lp.execution()
}

pub fn tau_multiprog(lp: &LatencyParams) -> f64 {
    tau_isolated(lp) / lp.concurrency as f64
}

pub fn tau_qontexts(lp: &LatencyParams) -> f64 {
    (lp.contexts as f64 * lp.t_switch() + lp.execution()) / lp.concurrency as f64
}

pub fn tau(mode: Mode, lp: &LatencyParams) -> f64 {
    match mode {
        Mode::Isolated => tau_isolated(lp),
        Mode::Emp => tau_multiprog(lp),
        Mode::Qontexts => tau_qontexts(lp),
    }
}

/// Throughput relative to isolated execution.
pub fn throughput(mode: Mode, lp: &LatencyParams) -> f64 {
    tau_isolated(lp) / tau(mode, lp)
}
