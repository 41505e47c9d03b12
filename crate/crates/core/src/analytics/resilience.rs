//! Binomial model of how often a program is attacked when its trials are
//! spread over C contexts with independently drawn co-runners.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};

pub const MAX_CONTEXTS: u32 = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResilienceParams {
    /// Programs in the system.
    pub n: u64,
    /// Programs belonging to the attacker.
    pub k: u64,
    /// Probability that a context with an attacker is successfully attacked.
    pub alpha: f64,
    pub contexts: u32,
    /// Fraction of contexts that must be attacked.
    pub beta: f64,
}

impl Default for ResilienceParams {
    fn default() -> Self {
        ResilienceParams {
            n: 100,
            k: 20,
            alpha: 0.4,
            contexts: 8,
            beta: 0.75,
        }
    }
}

impl ResilienceParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k > self.n {
            return Err(Error::InvalidArgument(format!(
                "need 0 <= K <= N and N > 0 (N={}, K={})",
                self.n, self.k
            )));
        }
        if !(0.0..=1.0).contains(&self.alpha) || !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::InvalidArgument("alpha and beta must lie in [0, 1]".into()));
        }
        if self.contexts == 0 {
            return Err(Error::InvalidArgument("need at least one context".into()));
        }
        Ok(())
    }

    pub fn attacker_fraction(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// Per-context probability of a successful attack.
    pub fn q(&self) -> f64 {
        // alpha * K first, so 0.4 * 20 / 100 is exactly 0.08.
        self.alpha * self.k as f64 / self.n as f64
    }

    pub fn with_contexts(&self, c: u32) -> Self {
        ResilienceParams {
            contexts: c,
            ..self.clone()
        }
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        ResilienceParams {
            beta,
            ..self.clone()
        }
    }

    /// Smallest attacked-context count that meets the beta threshold.
    pub fn threshold_count(&self) -> u32 {
        let x = self.beta * self.contexts as f64;
        // Guard against 0.75 * 8 landing a hair above 6.
        (x - 1e-9).ceil().max(0.0) as u32
    }
}

pub fn p_baseline(rp: &ResilienceParams) -> f64 {
    rp.q()
}

// x^e in log space with 0^0 = 1.
fn ln_pow(x: f64, e: u64) -> f64 {
    if e == 0 {
        0.0
    } else {
        e as f64 * x.ln()
    }
}

/// Probability that exactly `m` of the C contexts are successfully attacked
/// and the rest run with benign co-runners.
pub fn p_exactly(rp: &ResilienceParams, m: u32) -> f64 {
    let c = rp.contexts as u64;
    let m = m as u64;
    if m > c {
        return 0.0;
    }
    let ln = ln_binomial(c, m) + ln_pow(rp.q(), m) + ln_pow(1.0 - rp.attacker_fraction(), c - m);
    ln.exp()
}

/// Probability that at least a beta fraction of the contexts are attacked.
pub fn p_at_least(rp: &ResilienceParams) -> f64 {
    (rp.threshold_count()..=rp.contexts).map(|i| p_exactly(rp, i)).sum()
}

/// Baseline attack probability over the at-least-beta probability.
pub fn resilience_ratio(rp: &ResilienceParams) -> f64 {
    p_baseline(rp) / p_at_least(rp)
}

/// Smallest context count, starting from the target's own, at which `new`
/// is at least as resilient as `target`.
pub fn min_contexts(target: &ResilienceParams, new: &ResilienceParams) -> Result<u32> {
    target.validate()?;
    new.validate()?;
    let goal = p_at_least(target);
    let tol = goal * 1e-12;
    (target.contexts..=MAX_CONTEXTS)
        .find(|&c| p_at_least(&new.with_contexts(c)) <= goal + tol)
        .ok_or(Error::NoContextCount(MAX_CONTEXTS as usize))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_examples() {
        let rp = ResilienceParams::default();
        assert_eq!(p_baseline(&rp), 0.08);
        assert_eq!(p_baseline(&ResilienceParams { k: 0, ..rp.clone() }), 0.0);
        assert_eq!(
            p_baseline(&ResilienceParams {
                k: 100,
                alpha: 1.0,
                ..rp
            }),
            1.0
        );
    }

    #[test]
    fn exactly_examples() {
        let rp = ResilienceParams {
            k: 0,
            ..ResilienceParams::default()
        };
        assert!((p_exactly(&rp, 0) - 1.0).abs() < 1e-15);
        let rp = ResilienceParams::default();
        let expect = 28.0 * 0.08f64.powi(6) * 0.8f64.powi(2);
        assert!((p_exactly(&rp, 6) / expect - 1.0).abs() < 1e-12);
        assert!((expect - 4.70e-6).abs() < 1e-8);
    }

    #[test]
    fn threshold_count_uses_ceiling() {
        let rp = ResilienceParams::default();
        assert_eq!(rp.threshold_count(), 6);
        assert_eq!(rp.with_contexts(17).threshold_count(), 13);
        assert_eq!(ResilienceParams { beta: 0.5, ..rp }.threshold_count(), 4);
    }

    #[test]
    fn min_contexts_examples() {
        let target = ResilienceParams::default();
        let heavy = ResilienceParams { k: 80, ..target.clone() };
        assert_eq!(min_contexts(&target, &heavy).unwrap(), 17);
        assert_eq!(min_contexts(&target, &target).unwrap(), 8);
        let unsatisfiable = ResilienceParams {
            k: 100,
            alpha: 1.0,
            ..target.clone()
        };
        assert!(matches!(
            min_contexts(&target, &unsatisfiable),
            Err(Error::NoContextCount(_))
        ));
    }
}
