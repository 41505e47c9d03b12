use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outcome histogram. Counts are real so that exact (ideal) and merged
/// distributions share the type with sampled ones; `trials` is the nominal
/// number of shots the counts add up to.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub counts: BTreeMap<String, f64>,
    pub trials: u64,
}

impl Distribution {
    pub fn from_counts<I, S>(counts: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut map = BTreeMap::new();
        for (k, v) in counts {
            *map.entry(k.into()).or_insert(0.0) += v;
        }
        let trials = map.values().sum::<f64>().round() as u64;
        Distribution { counts: map, trials }
    }

    /// Scales probabilities to `trials` nominal shots; zero entries are dropped.
    pub fn from_probabilities<I, S>(probs: I, trials: u64) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut counts = BTreeMap::new();
        for (k, p) in probs {
            if p > 0.0 {
                *counts.entry(k.into()).or_insert(0.0) += p * trials as f64;
            }
        }
        Distribution { counts, trials }
    }

    pub fn total(&self) -> f64 {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() <= 0.0
    }

    pub fn probability(&self, outcome: &str) -> f64 {
        let t = self.total();
        if t <= 0.0 {
            return 0.0;
        }
        self.counts.get(outcome).copied().unwrap_or(0.0) / t
    }

    pub fn probabilities(&self) -> Result<BTreeMap<String, f64>> {
        let t = self.total();
        if t <= 0.0 {
            return Err(Error::EmptyDistribution);
        }
        Ok(self
            .counts
            .iter()
            .filter(|(_, &c)| c > 0.0)
            .map(|(k, &c)| (k.clone(), c / t))
            .collect())
    }

    /// Most likely outcome and whether another outcome ties with it. Ties
    /// resolve to the lexicographically smallest bitstring.
    pub fn argmax(&self) -> Option<(String, bool)> {
        let max = self.counts.values().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(max > 0.0) {
            return None;
        }
        let tol = max * 1e-12;
        let mut best = self.counts.iter().filter(|(_, &c)| (c - max).abs() <= tol);
        let (k, _) = best.next()?;
        Some((k.clone(), best.next().is_some()))
    }

    /// Weighted sum of normalized distributions, scaled to `trials`.
    pub fn mix(parts: &[(&Distribution, f64)], trials: u64) -> Result<Distribution> {
        let wsum: f64 = parts.iter().map(|(_, w)| w).sum();
        if parts.is_empty() || wsum <= 0.0 {
            return Err(Error::EmptyDistribution);
        }
        let mut acc: BTreeMap<String, f64> = BTreeMap::new();
        for (d, w) in parts {
            for (k, p) in d.probabilities()? {
                *acc.entry(k).or_insert(0.0) += w / wsum * p;
            }
        }
        Ok(Distribution::from_probabilities(acc, trials))
    }

    /// Sums raw counts of several distributions.
    pub fn pool(parts: &[&Distribution]) -> Distribution {
        let mut counts: BTreeMap<String, f64> = BTreeMap::new();
        let mut trials = 0;
        for d in parts {
            for (k, c) in &d.counts {
                *counts.entry(k.clone()).or_insert(0.0) += c;
            }
            trials += d.trials;
        }
        Distribution { counts, trials }
    }
}
