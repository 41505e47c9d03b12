//! Crosstalk profiling with micro-benchmark pairs: relative fidelity of a
//! victim link with and without concurrent CXs on attack links.

use serde::{Deserialize, Serialize};

use crate::circuit::{gen_microbenchmarks, microbenchmark_layout, MappedProgram};
use crate::error::{Error, Result};
use crate::simulator::{
    relative_fidelity, sample_noisy, simulate_ideal, Calibration, CalibrationScenario,
    ChiEntry, NoiseParams, NoiseProfile,
};
use crate::topology::{hop_distance, Device, Link};

pub const DEFAULT_DEPTH: usize = 10;

/// RF of the victim link when every attack link fires alongside it.
pub fn microbenchmark_rf(
    dev: &Device,
    profile: &NoiseProfile,
    victim: Link,
    attacks: &[Link],
    depth: usize,
    trials: u64,
    seed: u64,
) -> Result<f64> {
    for l in std::iter::once(&victim).chain(attacks) {
        if !dev.has_link(l.0, l.1) {
            return Err(Error::UnknownLink {
                device: dev.name().to_string(),
                link: *l,
            });
        }
    }
    let (ub1, ub2) = gen_microbenchmarks(victim, attacks, depth)?;
    let layout = microbenchmark_layout(victim, attacks);
    let ideal = simulate_ideal(&ub1)?;
    let iso = sample_noisy(
        &[MappedProgram::with_layout(ub1, layout.clone(), "ub1")?],
        dev,
        profile,
        trials,
        seed,
    )?;
    let shared = sample_noisy(
        &[MappedProgram::with_layout(ub2, layout, "ub2")?],
        dev,
        profile,
        trials,
        seed,
    )?;
    relative_fidelity(&iso[0], &shared[0], &ideal)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRf {
    pub victim: Link,
    pub attack: Link,
    pub hops: usize,
    pub chi: f64,
    pub rf: f64,
}

/// RF for every ordered pair of disjoint links, or for `limit` of them
/// taken in device order.
pub fn pair_sweep(
    dev: &Device,
    profile: &NoiseProfile,
    depth: usize,
    trials: u64,
    seed: u64,
    limit: Option<usize>,
) -> Result<Vec<PairRf>> {
    let mut out = Vec::new();
    'outer: for &v in dev.links() {
        for &a in dev.links() {
            if v == a || v.shares_qubit(&a) {
                continue;
            }
            if limit.is_some_and(|n| out.len() >= n) {
                break 'outer;
            }
            out.push(PairRf {
                victim: v,
                attack: a,
                hops: hop_distance(dev, v, a)?,
                chi: profile.chi(v, a),
                rf: microbenchmark_rf(dev, profile, v, &[a], depth, trials, seed)?,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRf {
    pub victim: Link,
    pub attacks: usize,
    pub rf: f64,
}

/// RF of `victim` as attack links are added one by one, nearest first,
/// skipping links that share a qubit with ones already chosen.
pub fn link_count_sweep(
    dev: &Device,
    profile: &NoiseProfile,
    victim: Link,
    max_attacks: usize,
    depth: usize,
    trials: u64,
    seed: u64,
) -> Result<Vec<CountRf>> {
    let mut candidates: Vec<(usize, Link)> = dev
        .links()
        .iter()
        .filter(|l| !l.shares_qubit(&victim))
        .map(|&l| Ok((hop_distance(dev, victim, l)?, l)))
        .collect::<Result<_>>()?;
    candidates.sort();
    let mut chosen: Vec<Link> = Vec::new();
    for (_, l) in candidates {
        if chosen.len() == max_attacks {
            break;
        }
        if chosen.iter().all(|c| !c.shares_qubit(&l)) {
            chosen.push(l);
        }
    }
    (0..=chosen.len())
        .map(|k| {
            Ok(CountRf {
                victim,
                attacks: k,
                rf: microbenchmark_rf(dev, profile, victim, &chosen[..k], depth, trials, seed)?,
            })
        })
        .collect()
}

/// Scenario RF under the calibration's base profile.
pub fn scenario_rf(dev: &Device, cal: &Calibration, sc: &CalibrationScenario, seed: u64) -> Result<f64> {
    let profile = cal.base_profile(dev)?;
    microbenchmark_rf(dev, &profile, sc.victim, &sc.attacks, cal.depth, cal.trials, seed)
}

const FIT_HI: f64 = 0.3;
const FIT_STEPS: usize = 30;

/// Pins crosstalk between each scenario's victim and attack links so the
/// scenario hits its target RF. Scenarios are fitted in order; coefficients
/// pinned by earlier scenarios stay fixed and the remaining attack links of a
/// scenario share one value, found by bisection (RF falls with crosstalk
/// over the bracket).
pub fn fit_calibration(
    dev: &Device,
    params: &NoiseParams,
    base_seed: u64,
    depth: usize,
    trials: u64,
    scenarios: Vec<CalibrationScenario>,
) -> Result<Calibration> {
    params.validate()?;
    let mut cal = Calibration {
        device: dev.name().to_string(),
        params: params.clone(),
        base_seed,
        depth,
        trials,
        scenarios: Vec::new(),
        pinned: Vec::new(),
    };
    for sc in scenarios {
        let free: Vec<Link> = sc
            .attacks
            .iter()
            .copied()
            .filter(|&a| !cal.pinned.iter().any(|e| same_pair(e, sc.victim, a)))
            .collect();
        if free.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "scenario `{}` has no free crosstalk coefficient",
                sc.name
            )));
        }
        let rf_at = |chi: f64| -> Result<f64> {
            let mut trial = cal.clone();
            trial.pinned.extend(free.iter().map(|&a| ChiEntry { a: sc.victim, b: a, chi }));
            scenario_rf(dev, &trial, &sc, base_seed)
        };
        let (mut lo, mut hi) = (0.0, FIT_HI);
        if rf_at(hi)? > sc.target_rf || rf_at(lo)? < sc.target_rf {
            return Err(Error::InvalidArgument(format!(
                "scenario `{}`: target RF {} outside the reachable range",
                sc.name, sc.target_rf
            )));
        }
        for _ in 0..FIT_STEPS {
            let mid = 0.5 * (lo + hi);
            if rf_at(mid)? > sc.target_rf {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let chi = 0.5 * (lo + hi);
        cal.pinned.extend(free.iter().map(|&a| ChiEntry { a: sc.victim, b: a, chi }));
        cal.scenarios.push(sc);
    }
    Ok(cal)
}

fn same_pair(e: &ChiEntry, a: Link, b: Link) -> bool {
    (e.a == a && e.b == b) || (e.a == b && e.b == a)
}
