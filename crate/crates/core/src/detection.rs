//! Distribution distances, the hold-out attack detector, weighted merging of
//! per-context results and attack-success verdicts.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::Distribution;

pub const DEFAULT_THRESHOLD: f64 = 0.3;
/// Distances below this are reported as "similar".
pub const SIMILAR_BELOW: f64 = 0.35;
/// Distances at or above this are reported as "dissimilar".
pub const DISSIMILAR_FROM: f64 = 0.5;
/// Distributional attacks succeed when fidelity drops by more than 12%.
pub const DISTRIBUTIONAL_DROP: f64 = 0.88;
const WEIGHT_EPS: f64 = 1e-6;

fn union_probs(p: &Distribution, q: &Distribution) -> Result<Vec<(f64, f64)>> {
    let (pp, qp) = (p.probabilities()?, q.probabilities()?);
    let keys: BTreeSet<&String> = pp.keys().chain(qp.keys()).collect();
    Ok(keys
        .into_iter()
        .map(|k| {
            (
                pp.get(k).copied().unwrap_or(0.0),
                qp.get(k).copied().unwrap_or(0.0),
            )
        })
        .collect())
}

pub fn hellinger(p: &Distribution, q: &Distribution) -> Result<f64> {
    let bc: f64 = union_probs(p, q)?.iter().map(|(a, b)| (a * b).sqrt()).sum();
    Ok((1.0 - bc).max(0.0).sqrt())
}

/// Total variation distance, half the L1 distance.
pub fn tvd(p: &Distribution, q: &Distribution) -> Result<f64> {
    let l1: f64 = union_probs(p, q)?.iter().map(|(a, b)| (a - b).abs()).sum();
    Ok((0.5 * l1).min(1.0))
}

/// `1 - TVD`, in [0, 1].
pub fn fidelity(p: &Distribution, q: &Distribution) -> Result<f64> {
    Ok((1.0 - tvd(p, q)?).clamp(0.0, 1.0))
}

/// `1 - L1` without the one-half factor; ranges over [-1, 1].
pub fn fidelity_unhalved(p: &Distribution, q: &Distribution) -> Result<f64> {
    Ok(1.0 - 2.0 * tvd(p, q)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaMatrix {
    pub n: usize,
    pub values: Vec<f64>,
}

impl DeltaMatrix {
    pub fn build(dists: &[Distribution]) -> Result<Self> {
        let n = dists.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let d = hellinger(&dists[i], &dists[j])?;
                values[i * n + j] = d;
                values[j * n + i] = d;
            }
        }
        Ok(DeltaMatrix { n, values })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn max_offdiag(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.n.max(1)).map(<[f64]>::to_vec).collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeMode {
    /// W_i = sum of distances to the other kept contexts.
    AsWritten,
    /// W_i = 1 / (eps + sum of distances): noisier contexts weigh less.
    #[default]
    InverseNoise,
}

impl FromStr for MergeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "as_written" => Ok(MergeMode::AsWritten),
            "inverse_noise" => Ok(MergeMode::InverseNoise),
            other => Err(Error::InvalidArgument(format!("unknown merge mode `{other}`"))),
        }
    }
}

impl fmt::Display for MergeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MergeMode::AsWritten => "as_written",
            MergeMode::InverseNoise => "inverse_noise",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub threshold: f64,
    pub delta: DeltaMatrix,
    pub attacked: Vec<usize>,
    /// Comparisons that voted against each context.
    pub votes_against: Vec<usize>,
    /// Comparisons that voted against the other context of a pair containing
    /// this one.
    pub votes_for: Vec<usize>,
    /// All (pair, k) comparisons each context takes part in.
    pub comparisons: Vec<usize>,
    pub similar_pairs: usize,
    pub dissimilar_pairs: usize,
    pub mode: MergeMode,
    pub weights: Vec<f64>,
    pub normalized_weights: Vec<f64>,
}

impl DetectionReport {
    pub fn kept(&self) -> Vec<usize> {
        (0..self.delta.n).filter(|i| !self.attacked.contains(i)).collect()
    }

    /// Report that keeps every context, for runs too small to vote on.
    pub fn keep_all(dists: &[Distribution], mode: MergeMode) -> Result<Self> {
        let delta = DeltaMatrix::build(dists)?;
        let n = delta.n;
        let mut r = DetectionReport {
            threshold: f64::INFINITY,
            delta,
            attacked: Vec::new(),
            votes_against: vec![0; n],
            votes_for: vec![0; n],
            comparisons: vec![0; n],
            similar_pairs: 0,
            dissimilar_pairs: 0,
            mode,
            weights: Vec::new(),
            normalized_weights: Vec::new(),
        };
        r.annotate();
        r.set_weights(mode);
        Ok(r)
    }

    fn annotate(&mut self) {
        let n = self.delta.n;
        for i in 0..n {
            for j in i + 1..n {
                let d = self.delta.get(i, j);
                if d < SIMILAR_BELOW {
                    self.similar_pairs += 1;
                } else if d >= DISSIMILAR_FROM {
                    self.dissimilar_pairs += 1;
                }
            }
        }
    }

    /// Fills `weights` / `normalized_weights` (indexed like `kept()`).
    pub fn set_weights(&mut self, mode: MergeMode) {
        let kept = self.kept();
        let raw: Vec<f64> = kept
            .iter()
            .map(|&i| {
                let s: f64 = kept.iter().map(|&j| self.delta.get(i, j)).sum();
                match mode {
                    MergeMode::AsWritten => s,
                    MergeMode::InverseNoise => 1.0 / (WEIGHT_EPS + s),
                }
            })
            .collect();
        let total: f64 = raw.iter().sum();
        self.normalized_weights = if total > 0.0 {
            raw.iter().map(|w| w / total).collect()
        } else {
            // All kept contexts identical under as_written: fall back to equal weights.
            vec![1.0 / kept.len().max(1) as f64; kept.len()]
        };
        self.weights = raw;
        self.mode = mode;
    }
}

/// Hold-out vote. For every pair (i, j) and every third context k,
/// `D = Δ(j,k) − Δ(i,k)`; `D > th` is a vote against j, `−D > th` a vote
/// against i. A context is flagged when the votes against it outnumber the
/// votes against its partners in the decisive comparisons it took part in.
pub fn holdout_detect(dists: &[Distribution], threshold: f64) -> Result<DetectionReport> {
    let n = dists.len();
    if n < 3 {
        return Err(Error::TooFewContexts(n));
    }
    let delta = DeltaMatrix::build(dists)?;
    let mut against = vec![0usize; n];
    let mut support = vec![0usize; n];
    for i in 0..n {
        for j in i + 1..n {
            for k in (0..n).filter(|&k| k != i && k != j) {
                let d = delta.get(j, k) - delta.get(i, k);
                if d > threshold {
                    against[j] += 1;
                    support[i] += 1;
                } else if -d > threshold {
                    against[i] += 1;
                    support[j] += 1;
                }
            }
        }
    }
    let attacked: Vec<usize> = (0..n).filter(|&c| against[c] > support[c]).collect();
    let mut r = DetectionReport {
        threshold,
        delta,
        attacked,
        votes_against: against,
        votes_for: support,
        comparisons: vec![(n - 1) * (n - 2); n],
        similar_pairs: 0,
        dissimilar_pairs: 0,
        mode: MergeMode::InverseNoise,
        weights: Vec::new(),
        normalized_weights: Vec::new(),
    };
    r.annotate();
    r.set_weights(MergeMode::InverseNoise);
    Ok(r)
}

/// Weighted mixture of the kept contexts. Returns the merged distribution
/// scaled to the summed trials of the kept contexts.
pub fn merge_weighted(dists: &[Distribution], report: &DetectionReport, mode: MergeMode) -> Result<Distribution> {
    let mut r = report.clone();
    r.set_weights(mode);
    let kept = r.kept();
    if kept.is_empty() {
        return Err(Error::AllContextsFlagged);
    }
    let trials = kept.iter().map(|&i| dists[i].trials).sum();
    let parts: Vec<(&Distribution, f64)> = kept
        .iter()
        .zip(&r.normalized_weights)
        .map(|(&i, &w)| (&dists[i], w))
        .collect();
    Distribution::mix(&parts, trials)
}

/// Correct over incorrect mass; infinite when nothing incorrect was seen.
pub fn ci_ratio(d: &Distribution, correct: &BTreeSet<String>) -> Result<f64> {
    if correct.is_empty() {
        return Err(Error::InvalidArgument("empty correct set".into()));
    }
    let (mut good, mut bad) = (0.0, 0.0);
    for (k, &c) in &d.counts {
        if correct.contains(k) {
            good += c;
        } else {
            bad += c;
        }
    }
    Ok(if bad == 0.0 { f64::INFINITY } else { good / bad })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuccessKind {
    SingleAnswer,
    Distributional,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackVerdict {
    pub success: bool,
    /// Some argmax involved was tied and resolved lexicographically.
    pub tie: bool,
}

pub fn attack_success(
    iso: &Distribution,
    shared: &Distribution,
    ideal: &Distribution,
    kind: SuccessKind,
) -> Result<AttackVerdict> {
    match kind {
        SuccessKind::SingleAnswer => {
            let (a_ideal, t0) = ideal.argmax().ok_or(Error::EmptyDistribution)?;
            let (a_iso, t1) = iso.argmax().ok_or(Error::EmptyDistribution)?;
            let (a_shared, t2) = shared.argmax().ok_or(Error::EmptyDistribution)?;
            Ok(AttackVerdict {
                success: a_iso == a_ideal && a_shared != a_ideal,
                tie: t0 || t1 || t2,
            })
        }
        SuccessKind::Distributional => {
            let f_iso = fidelity(ideal, iso)?;
            let f_shared = fidelity(ideal, shared)?;
            Ok(AttackVerdict {
                success: f_shared < DISTRIBUTIONAL_DROP * f_iso,
                tie: false,
            })
        }
    }
}

/// Per-context distances from a reference distribution, handy for reports.
pub fn distances_to(reference: &Distribution, dists: &[Distribution]) -> Result<Vec<f64>> {
    dists.iter().map(|d| hellinger(reference, d)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist<const N: usize>(pairs: [(&str, f64); N]) -> Distribution {
        Distribution::from_probabilities(pairs.map(|(k, v)| (k.to_string(), v)), 1000)
    }

    #[test]
    fn hellinger_examples() {
        let p = dist([("a", 0.5), ("b", 0.5)]);
        assert_eq!(hellinger(&p, &p).unwrap(), 0.0);
        assert!((hellinger(&dist([("a", 1.0)]), &dist([("b", 1.0)])).unwrap() - 1.0).abs() < 1e-12);
        let h = hellinger(&p, &dist([("a", 1.0)])).unwrap();
        assert!((h - (1.0 - 0.5f64.sqrt()).sqrt()).abs() < 1e-12);
        assert!((h - 0.5412).abs() < 1e-4);
        assert!(matches!(hellinger(&p, &Distribution::default()), Err(Error::EmptyDistribution)));
    }

    #[test]
    fn fidelity_examples() {
        let p = dist([("a", 0.75), ("b", 0.25)]);
        let q = dist([("a", 0.25), ("b", 0.75)]);
        assert_eq!(fidelity(&p, &p).unwrap(), 1.0);
        assert_eq!(fidelity(&dist([("a", 1.0)]), &dist([("b", 1.0)])).unwrap(), 0.0);
        assert!((fidelity(&p, &q).unwrap() - 0.5).abs() < 1e-12);
        assert!((fidelity_unhalved(&dist([("a", 1.0)]), &dist([("b", 1.0)])).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn holdout_small_cases() {
        let a = dist([("0", 0.9), ("1", 0.1)]);
        let r = holdout_detect(&[a.clone(), a.clone(), a.clone()], DEFAULT_THRESHOLD).unwrap();
        assert!(r.attacked.is_empty());

        let far = dist([("0", 0.1), ("1", 0.9)]);
        let r = holdout_detect(&[a.clone(), far, a.clone()], DEFAULT_THRESHOLD).unwrap();
        assert_eq!(r.attacked, vec![1]);
        assert_eq!(r.votes_against, vec![0, 2, 0]);

        assert!(matches!(
            holdout_detect(&[a.clone(), a], 0.3),
            Err(Error::TooFewContexts(2))
        ));
    }

    #[test]
    fn merge_examples() {
        let a = dist([("0", 0.9), ("1", 0.1)]);
        let r = DetectionReport::keep_all(std::slice::from_ref(&a), MergeMode::InverseNoise).unwrap();
        let m = merge_weighted(std::slice::from_ref(&a), &r, MergeMode::InverseNoise).unwrap();
        assert!((m.probability("0") - 0.9).abs() < 1e-12);

        let two = [a.clone(), a.clone()];
        for mode in [MergeMode::AsWritten, MergeMode::InverseNoise] {
            let mut r = DetectionReport::keep_all(&two, mode).unwrap();
            r.set_weights(mode);
            assert_eq!(r.normalized_weights, vec![0.5, 0.5]);
            let m = merge_weighted(&two, &r, mode).unwrap();
            assert!((m.probability("1") - 0.1).abs() < 1e-12);
        }

        let far = dist([("1", 1.0)]);
        let three = [far.clone(), far.clone(), far];
        let mut r = DetectionReport::keep_all(&three, MergeMode::InverseNoise).unwrap();
        r.attacked = vec![0, 1, 2];
        assert!(matches!(
            merge_weighted(&three, &r, MergeMode::InverseNoise),
            Err(Error::AllContextsFlagged)
        ));
    }

    #[test]
    fn ci_ratio_examples() {
        let correct: BTreeSet<String> = ["00".to_string()].into();
        assert_eq!(ci_ratio(&dist([("00", 1.0)]), &correct).unwrap(), f64::INFINITY);
        let d = dist([("00", 0.25), ("01", 0.75)]);
        assert!((ci_ratio(&d, &correct).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!(ci_ratio(&d, &BTreeSet::new()).is_err());
    }

    #[test]
    fn attack_success_examples() {
        let ideal = dist([("101", 1.0)]);
        let iso = dist([("101", 0.14), ("001", 0.05), ("111", 0.81 / 2.0), ("000", 0.81 / 2.0)]);
        let v = attack_success(&iso, &iso, &ideal, SuccessKind::SingleAnswer).unwrap();
        assert!(!v.success);

        // A histogram over 8-bit strings where the secret peaks at 14% and,
        // under attack, a wrong string peaks at 10%.
        let mut iso_counts = vec![("11101011".to_string(), 0.14)];
        let mut shared_counts = vec![("11101011".to_string(), 0.08), ("01101011".to_string(), 0.10)];
        for i in 0..86 {
            iso_counts.push((format!("x{i:02}"), 0.01));
        }
        for i in 0..82 {
            shared_counts.push((format!("x{i:02}"), 0.01));
        }
        let iso8 = Distribution::from_probabilities(iso_counts, 1000);
        let shared8 = Distribution::from_probabilities(shared_counts, 1000);
        let ideal8 = dist([("11101011", 1.0)]);
        let v = attack_success(&iso8, &shared8, &ideal8, SuccessKind::SingleAnswer).unwrap();
        assert!(v.success && !v.tie);

        // Relative fidelity 0.87 succeeds, 0.89 does not.
        let ideal = dist([("0", 1.0)]);
        let iso = dist([("0", 1.0)]);
        let shared87 = dist([("0", 0.87), ("1", 0.13)]);
        let shared89 = dist([("0", 0.89), ("1", 0.11)]);
        assert!(attack_success(&iso, &shared87, &ideal, SuccessKind::Distributional).unwrap().success);
        assert!(!attack_success(&iso, &shared89, &ideal, SuccessKind::Distributional).unwrap().success);
    }
}
