//! Discrete-event simulation of a single machine serving a FIFO job queue.
//!
//! Load is expressed as jobs arriving per isolated execution time. Arrivals
//! are Poisson and are drawn once per seed, so every mode sees the same
//! arrival sequence. Multi-programming modes start a batch with up to S
//! waiting jobs whenever the machine is free.

use std::collections::{BTreeMap, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp};
use serde::{Deserialize, Serialize};

use super::latency::{tau_isolated, tau_qontexts, LatencyParams, Mode};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QueueParams {
    /// New jobs per isolated job execution time.
    pub arrival_rate: f64,
    pub n_jobs: usize,
    pub seed: u64,
}

impl Default for QueueParams {
    fn default() -> Self {
        QueueParams {
            arrival_rate: 4.0,
            n_jobs: 500,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueueStats {
    pub mode: Mode,
    /// Mean of completion minus arrival, seconds.
    pub mean_completion: f64,
    pub mean_wait: f64,
    pub completed: usize,
    /// Offered load over capacity; >= 1 means the backlog grows without bound
    /// and the mean depends on `n_jobs`.
    pub utilization: f64,
    pub saturated: bool,
    /// Whether completed + in-system == arrived held at every event.
    pub conserved: bool,
}

// Jobs per batch and time per batch.
fn service(mode: Mode, lp: &LatencyParams) -> (usize, f64) {
    let s = lp.concurrency as usize;
    match mode {
        Mode::Isolated => (1, tau_isolated(lp)),
        Mode::Emp => (s, tau_isolated(lp)),
        Mode::Qontexts => (s, s as f64 * tau_qontexts(lp)),
    }
}

pub fn arrival_times(qp: &QueueParams, lp: &LatencyParams) -> Result<Vec<f64>> {
    if !(qp.arrival_rate.is_finite() && qp.arrival_rate > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "arrival rate must be positive, got {}",
            qp.arrival_rate
        )));
    }
    lp.validate()?;
    let per_second = qp.arrival_rate / tau_isolated(lp);
    let exp = Exp::new(per_second).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(qp.seed);
    let mut t = 0.0;
    Ok((0..qp.n_jobs)
        .map(|_| {
            t += exp.sample(&mut rng);
            t
        })
        .collect())
}

pub fn simulate_mode(mode: Mode, arrivals: &[f64], qp: &QueueParams, lp: &LatencyParams) -> QueueStats {
    let (batch, batch_time) = service(mode, lp);
    let utilization = qp.arrival_rate * batch_time / (batch as f64 * tau_isolated(lp));

    let mut waiting: VecDeque<usize> = VecDeque::new();
    let mut next_arrival = 0;
    let mut completed = 0;
    let mut in_service = 0;
    let mut conserved = true;
    let mut free_at = 0.0f64;
    let mut sum_completion = 0.0;
    let mut sum_wait = 0.0;

    while completed < arrivals.len() {
        // Admit everything that has arrived by the time the machine frees up;
        // if nothing is waiting, jump to the next arrival.
        if waiting.is_empty() && next_arrival < arrivals.len() {
            free_at = free_at.max(arrivals[next_arrival]);
        }
        while next_arrival < arrivals.len() && arrivals[next_arrival] <= free_at {
            waiting.push_back(next_arrival);
            next_arrival += 1;
            conserved &= completed + in_service + waiting.len() == next_arrival;
        }
        let start = free_at;
        let mut members = Vec::with_capacity(batch);
        while members.len() < batch {
            match waiting.pop_front() {
                Some(j) => members.push(j),
                None => break,
            }
        }
        in_service = members.len();
        conserved &= completed + in_service + waiting.len() == next_arrival;
        let end = start + batch_time;
        for &j in &members {
            sum_wait += start - arrivals[j];
            sum_completion += end - arrivals[j];
        }
        completed += in_service;
        in_service = 0;
        conserved &= completed + waiting.len() == next_arrival;
        free_at = end;
    }

    let n = arrivals.len().max(1) as f64;
    QueueStats {
        mode,
        mean_completion: sum_completion / n,
        mean_wait: sum_wait / n,
        completed,
        utilization,
        saturated: utilization >= 1.0,
        conserved,
    }
}

/// Runs every mode on one shared arrival sequence.
pub fn simulate_queue(qp: &QueueParams, lp: &LatencyParams) -> Result<BTreeMap<Mode, QueueStats>> {
    let arrivals = arrival_times(qp, lp)?;
    Ok(Mode::ALL
        .iter()
        .map(|&m| (m, simulate_mode(m, &arrivals, qp, lp)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn light_load_approaches_service_time() {
        let lp = LatencyParams::default();
        let qp = QueueParams {
            arrival_rate: 1e-4,
            n_jobs: 200,
            seed: 3,
        };
        let out = simulate_queue(&qp, &lp).unwrap();
        for (m, s) in &out {
            let svc = service(*m, &lp).1;
            assert!((s.mean_completion / svc - 1.0).abs() < 1e-2, "{m}: {s:?}");
            assert!(!s.saturated && s.conserved);
        }
    }

    #[test]
    fn heavy_load_is_reported_not_hung() {
        let lp = LatencyParams::default();
        let qp = QueueParams {
            arrival_rate: 10.0,
            n_jobs: 1000,
            seed: 1,
        };
        let out = simulate_queue(&qp, &lp).unwrap();
        assert!(out.values().all(|s| s.saturated && s.completed == 1000 && s.conserved));
        assert!(out[&Mode::Isolated].mean_completion > out[&Mode::Qontexts].mean_completion);
        assert!(out[&Mode::Qontexts].mean_completion >= out[&Mode::Emp].mean_completion);
    }

    #[test]
    fn rejects_bad_rate() {
        let qp = QueueParams {
            arrival_rate: 0.0,
            ..QueueParams::default()
        };
        assert!(simulate_queue(&qp, &LatencyParams::default()).is_err());
    }
}
