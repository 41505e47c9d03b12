//! Ideal statevector evaluation and trajectory sampling under the crosstalk
//! error model.
//!
//! Every random decision is a pure function of (seed, trial, layer, physical
//! qubits, purpose), so trials can run in any order or in parallel, and two
//! runs that differ only in crosstalk see the same underlying uniforms: an
//! error fires iff `u < eps_eff`, so raising `eps_eff` only adds errors.
//!
//! A trial whose first error is followed only by Clifford gates is evaluated
//! by propagating a Pauli frame and flipping bits of an ideal sample; other
//! erroneous trials replay the statevector from the last ideal checkpoint.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;

use crate::circuit::{Gate, MappedProgram, Program};
use crate::detection::fidelity;
use crate::error::{Error, Result};
use crate::simulator::distribution::Distribution;
use crate::simulator::noise::NoiseProfile;
use crate::simulator::statevector::{Pauli, StateVector};
use crate::topology::{Device, Link};

pub const QUBIT_CAP: usize = 24;

const CHUNK: u64 = 256;
const CHECKPOINT_BYTES: usize = 64 << 20;
const NO_QUBIT: u64 = 0xFFFF_FFFF;

const STREAM_ERR: u64 = 1;
const STREAM_PAULI: u64 = 2;
const STREAM_READOUT: u64 = 3;
const STREAM_SAMPLE: u64 = 4;

fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn uniform(seed: u64, trial: u64, layer: usize, a: u64, b: u64, stream: u64) -> f64 {
    let mut h = mix64(seed);
    h = mix64(h ^ trial);
    h = mix64(h ^ layer as u64);
    h = mix64(h ^ (a << 32 | b));
    h = mix64(h ^ stream);
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Outcome bit `c` reads logical qubit `src[c]`; unmeasured clbits read 0.
/// A program without measurements reads every qubit.
fn clbit_sources(p: &Program) -> Vec<Option<usize>> {
    let meas = p.measurements();
    if meas.is_empty() {
        return (0..p.n_qubits).map(Some).collect();
    }
    let mut src = vec![None; p.n_clbits];
    for (q, c) in meas {
        src[c] = Some(q);
    }
    src
}

fn bits_to_string(bits: u64, width: usize) -> String {
    (0..width)
        .map(|i| if bits >> i & 1 == 1 { '1' } else { '0' })
        .collect()
}

fn outcome_of(index: usize, src: &[Option<usize>]) -> u64 {
    let mut out = 0u64;
    for (c, q) in src.iter().enumerate() {
        if let Some(q) = q {
            out |= (((index >> q) & 1) as u64) << c;
        }
    }
    out
}

fn check_size(p: &Program) -> Result<()> {
    if p.n_qubits > QUBIT_CAP {
        return Err(Error::QubitCapExceeded {
            requested: p.n_qubits,
            cap: QUBIT_CAP,
        });
    }
    if clbit_sources(p).len() > 64 {
        return Err(Error::InvalidArgument(format!(
            "program `{}` has more than 64 output bits",
            p.id
        )));
    }
    Ok(())
}

fn final_state(p: &Program) -> StateVector {
    let mut s = StateVector::zero(p.n_qubits);
    for g in p.gates() {
        s.apply(g);
    }
    s
}

/// Exact output distribution, scaled to the program's requested trials.
pub fn simulate_ideal(p: &Program) -> Result<Distribution> {
    check_size(p)?;
    p.validate()?;
    let probs = final_state(p).probabilities();
    let src = clbit_sources(p);
    let mut acc: HashMap<u64, f64> = HashMap::new();
    for (i, &pr) in probs.iter().enumerate() {
        if pr > 1e-14 {
            *acc.entry(outcome_of(i, &src)).or_insert(0.0) += pr;
        }
    }
    let total: f64 = acc.values().sum();
    let width = src.len();
    Ok(Distribution::from_probabilities(
        acc.into_iter().map(|(k, v)| (bits_to_string(k, width), v / total)),
        p.requested_trials,
    ))
}

/// Device links a CX on physical qubits (a, b) loads. A CX between
/// non-adjacent qubits stands for the routed chain along the shortest path
/// inside the program's region (falling back to the whole device).
pub fn cx_footprint(dev: &Device, region: &[usize], a: usize, b: usize) -> Result<Vec<usize>> {
    if let Some(i) = dev.link_index(Link::new(a, b)) {
        return Ok(vec![i]);
    }
    let mut allowed = vec![false; dev.n_qubits()];
    for &q in region {
        allowed[q] = true;
    }
    let path = dev
        .path_within(a, b, &allowed)
        .or_else(|| dev.path_within(a, b, &vec![true; dev.n_qubits()]))
        .ok_or_else(|| Error::InvalidArgument(format!("qubits {a} and {b} are disconnected")))?;
    Ok(path
        .windows(2)
        .map(|w| dev.link_index(Link::new(w[0], w[1])).expect("path follows links"))
        .collect())
}

struct Plan<'a> {
    mp: &'a MappedProgram,
    src: Vec<Option<usize>>,
    width: usize,
    ideal_cdf: Vec<f64>,
    checkpoints: Option<Vec<StateVector>>,
    last_non_clifford: Option<usize>,
    cx_eps: Vec<Vec<f64>>,
}

fn cdf(probs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    probs
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

fn draw(cdf: &[f64], u: f64) -> usize {
    let total = *cdf.last().expect("non-empty");
    cdf.partition_point(|&c| c <= u * total).min(cdf.len() - 1)
}

impl<'a> Plan<'a> {
    fn new(mp: &'a MappedProgram) -> Self {
        let p = &mp.program;
        let dim = 1usize << p.n_qubits;
        let keep = dim * 16 * (p.layers.len() + 1) <= CHECKPOINT_BYTES;
        let mut s = StateVector::zero(p.n_qubits);
        let mut checkpoints = keep.then(Vec::new);
        for layer in &p.layers {
            if let Some(c) = checkpoints.as_mut() {
                c.push(s.clone());
            }
            for g in layer {
                s.apply(g);
            }
        }
        let last_non_clifford = p
            .layers
            .iter()
            .rposition(|l| l.iter().any(|g| !g.is_clifford()));
        let src = clbit_sources(p);
        Plan {
            mp,
            width: src.len(),
            src,
            ideal_cdf: cdf(&s.probabilities()),
            checkpoints,
            last_non_clifford,
            cx_eps: Vec::new(),
        }
    }

    fn phys(&self, q: usize) -> u64 {
        self.mp.qubit_map[q] as u64
    }

    fn run_trial(&self, profile: &NoiseProfile, seed: u64, trial: u64) -> u64 {
        let layers = &self.mp.program.layers;
        let mut errors: Vec<(usize, usize, Pauli)> = Vec::new();
        for (l, layer) in layers.iter().enumerate() {
            for (gi, g) in layer.iter().enumerate() {
                match *g {
                    Gate::Cx(c, t) => {
                        let (pc, pt) = (self.phys(c), self.phys(t));
                        if uniform(seed, trial, l, pc, pt, STREAM_ERR) < self.cx_eps[l][gi] {
                            let v = uniform(seed, trial, l, pc, pt, STREAM_PAULI);
                            let k = 1 + ((v * 15.0) as u64).min(14);
                            errors.push((l, c, Pauli::from_index(k & 3)));
                            errors.push((l, t, Pauli::from_index(k >> 2)));
                        }
                    }
                    ref g1 if g1.is_single_qubit_unitary() => {
                        let q = g1.qubits()[0];
                        let pq = self.phys(q);
                        if uniform(seed, trial, l, pq, NO_QUBIT, STREAM_ERR) < profile.eps1 {
                            let v = uniform(seed, trial, l, pq, NO_QUBIT, STREAM_PAULI);
                            let k = 1 + ((v * 3.0) as u64).min(2);
                            errors.push((l, q, Pauli::from_index(k)));
                        }
                    }
                    _ => {}
                }
            }
        }
        errors.retain(|e| e.2 != Pauli::I);

        let anchor = self.phys(0);
        let u = uniform(seed, trial, 0, anchor, NO_QUBIT, STREAM_SAMPLE);
        let index = match errors.first().map(|e| e.0) {
            None => draw(&self.ideal_cdf, u),
            Some(first) if self.last_non_clifford.is_none_or(|nc| first >= nc) => {
                draw(&self.ideal_cdf, u) ^ self.x_frame(first, &errors)
            }
            Some(first) => {
                let mut s = match &self.checkpoints {
                    Some(c) => c[first].clone(),
                    None => {
                        let mut s = StateVector::zero(self.mp.program.n_qubits);
                        layers[..first].iter().flatten().for_each(|g| s.apply(g));
                        s
                    }
                };
                for (l, layer) in layers.iter().enumerate().skip(first) {
                    layer.iter().for_each(|g| s.apply(g));
                    for e in errors.iter().filter(|e| e.0 == l) {
                        s.apply_pauli(e.1, e.2);
                    }
                }
                draw(&cdf(&s.probabilities()), u)
            }
        };

        let mut out = outcome_of(index, &self.src);
        for (c, q) in self.src.iter().enumerate() {
            if let Some(q) = q {
                let r = uniform(seed, trial, 0, self.phys(*q), NO_QUBIT, STREAM_READOUT);
                if r < profile.eps_ro {
                    out ^= 1 << c;
                }
            }
        }
        out
    }

    /// X component of the Pauli frame at the end of the circuit.
    fn x_frame(&self, first: usize, errors: &[(usize, usize, Pauli)]) -> usize {
        let (mut x, mut z) = (0usize, 0usize);
        for (l, layer) in self.mp.program.layers.iter().enumerate().skip(first) {
            for g in layer {
                match *g {
                    Gate::H(q) => {
                        let (xb, zb) = (x >> q & 1, z >> q & 1);
                        x = (x & !(1 << q)) | zb << q;
                        z = (z & !(1 << q)) | xb << q;
                    }
                    Gate::Rz(q, theta) => {
                        let k = (theta / FRAC_PI_2).round() as i64;
                        if k.rem_euclid(2) == 1 {
                            z ^= (x >> q & 1) << q;
                        }
                    }
                    Gate::Cx(c, t) => {
                        x ^= (x >> c & 1) << t;
                        z ^= (z >> t & 1) << c;
                    }
                    _ => {}
                }
            }
            for e in errors.iter().filter(|e| e.0 == l) {
                if e.2.has_x() {
                    x ^= 1 << e.1;
                }
                if e.2.has_z() {
                    z ^= 1 << e.1;
                }
            }
        }
        x
    }
}

/// Samples `trials` shots of each co-scheduled program. Programs are aligned
/// by layer index; a CX's error probability is `eps2` plus, for every other
/// CX in the same global layer, the largest crosstalk coefficient between
/// their link footprints (capped at 1).
pub fn sample_noisy(
    programs: &[MappedProgram],
    dev: &Device,
    profile: &NoiseProfile,
    trials: u64,
    seed: u64,
) -> Result<Vec<Distribution>> {
    if !profile.matches_device(dev) {
        return Err(Error::InvalidArgument(format!(
            "noise profile for `{}` does not match device `{}`",
            profile.device,
            dev.name()
        )));
    }
    let mut owner = vec![usize::MAX; dev.n_qubits()];
    for (pi, mp) in programs.iter().enumerate() {
        check_size(&mp.program)?;
        mp.program.validate()?;
        if mp.qubit_map.len() != mp.program.n_qubits {
            return Err(Error::InvalidArgument(format!(
                "program `{}` has an incomplete qubit map",
                mp.program.id
            )));
        }
        for &q in &mp.qubit_map {
            if q >= dev.n_qubits() {
                return Err(Error::InvalidArgument(format!(
                    "physical qubit {q} not on device `{}`",
                    dev.name()
                )));
            }
            if owner[q] != usize::MAX {
                return Err(Error::OverlappingRegions(q));
            }
            owner[q] = pi;
        }
    }

    let mut plans: Vec<Plan> = programs.iter().map(Plan::new).collect();
    let depth = programs.iter().map(|m| m.program.layers.len()).max().unwrap_or(0);
    for plan in plans.iter_mut() {
        plan.cx_eps = plan.mp.program.layers.iter().map(|l| vec![0.0; l.len()]).collect();
    }
    for l in 0..depth {
        let mut active: Vec<(usize, usize, Vec<usize>)> = Vec::new();
        for (pi, mp) in programs.iter().enumerate() {
            let Some(layer) = mp.program.layers.get(l) else { continue };
            for (gi, g) in layer.iter().enumerate() {
                if let Gate::Cx(c, t) = *g {
                    let fp = cx_footprint(dev, &mp.qubit_map, mp.physical(c), mp.physical(t))?;
                    active.push((pi, gi, fp));
                }
            }
        }
        for (k, (pi, gi, fp)) in active.iter().enumerate() {
            let mut eps = profile.eps2;
            for (k2, (_, _, fp2)) in active.iter().enumerate() {
                if k2 == k {
                    continue;
                }
                let mut worst = 0.0f64;
                for &i in fp {
                    for &j in fp2 {
                        if i != j {
                            worst = worst.max(profile.chi_by_index(i, j));
                        }
                    }
                }
                eps += worst;
            }
            plans[*pi].cx_eps[l][*gi] = eps.min(1.0);
        }
    }

    let n_chunks = trials.div_ceil(CHUNK);
    plans
        .iter()
        .map(|plan| {
            let counts = (0..n_chunks)
                .into_par_iter()
                .map(|c| {
                    let mut local: HashMap<u64, u64> = HashMap::new();
                    for t in c * CHUNK..((c + 1) * CHUNK).min(trials) {
                        *local.entry(plan.run_trial(profile, seed, t)).or_insert(0) += 1;
                    }
                    local
                })
                .reduce(HashMap::new, |mut a, b| {
                    for (k, v) in b {
                        *a.entry(k).or_insert(0) += v;
                    }
                    a
                });
            let counts: BTreeMap<String, f64> = counts
                .into_iter()
                .map(|(k, v)| (bits_to_string(k, plan.width), v as f64))
                .collect();
            Ok(Distribution { counts, trials })
        })
        .collect()
}

/// Fidelity of the shared run over fidelity of the isolated run, both
/// against the ideal distribution.
pub fn relative_fidelity(iso: &Distribution, shared: &Distribution, ideal: &Distribution) -> Result<f64> {
    let f_iso = fidelity(ideal, iso)?;
    if f_iso <= 0.0 {
        return Err(Error::ZeroIsolatedFidelity);
    }
    Ok(fidelity(ideal, shared)? / f_iso)
}
