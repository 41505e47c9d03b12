//! Synthetic error model: depolarizing gate errors, readout flips and a
//! per-link-pair crosstalk table.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{Device, Link};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseParams {
    /// Probability that a link pair has any crosstalk at all.
    pub p_xt: f64,
    /// Magnitude scale for pairs at distance <= 1.
    pub local_scale: f64,
    /// Exponential decay of the local component per hop beyond 1.
    pub hop_decay: f64,
    /// Probability of an additional distance-independent component.
    pub tail_prob: f64,
    pub tail_scale: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub eps_ro: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams {
            p_xt: 0.587,
            local_scale: 0.02,
            hop_decay: 0.5,
            tail_prob: 0.1,
            tail_scale: 0.3,
            eps1: 0.001,
            eps2: 0.01,
            eps_ro: 0.02,
        }
    }
}

impl NoiseParams {
    /// All error sources off.
    pub fn noiseless() -> Self {
        NoiseParams {
            p_xt: 0.0,
            local_scale: 0.0,
            hop_decay: 0.0,
            tail_prob: 0.0,
            tail_scale: 0.0,
            eps1: 0.0,
            eps2: 0.0,
            eps_ro: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("p_xt", self.p_xt),
            ("tail_prob", self.tail_prob),
            ("eps1", self.eps1),
            ("eps2", self.eps2),
            ("eps_ro", self.eps_ro),
        ];
        for (name, v) in probs {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("{name} = {v} outside [0, 1]")));
            }
        }
        for (name, v) in [
            ("local_scale", self.local_scale),
            ("tail_scale", self.tail_scale),
            ("hop_decay", self.hop_decay),
        ] {
            if v.is_nan() || v < 0.0 {
                return Err(Error::InvalidArgument(format!("{name} = {v} must be >= 0")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiEntry {
    pub a: Link,
    pub b: Link,
    pub chi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "ProfileFile", try_from = "ProfileFile")]
pub struct NoiseProfile {
    pub device: String,
    pub seed: u64,
    pub params: NoiseParams,
    pub eps1: f64,
    pub eps2: f64,
    pub eps_ro: f64,
    links: Vec<Link>,
    index: HashMap<Link, usize>,
    chi: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ProfileFile {
    device: String,
    seed: u64,
    params: NoiseParams,
    eps1: f64,
    eps2: f64,
    eps_ro: f64,
    links: Vec<Link>,
    chi: Vec<ChiEntry>,
}

impl From<NoiseProfile> for ProfileFile {
    fn from(p: NoiseProfile) -> Self {
        let chi = p.nonzero_entries();
        ProfileFile {
            device: p.device,
            seed: p.seed,
            params: p.params,
            eps1: p.eps1,
            eps2: p.eps2,
            eps_ro: p.eps_ro,
            links: p.links,
            chi,
        }
    }
}

impl TryFrom<ProfileFile> for NoiseProfile {
    type Error = Error;

    fn try_from(f: ProfileFile) -> Result<Self> {
        let mut p = NoiseProfile::blank(f.device, f.links, f.seed, f.params);
        p.eps1 = f.eps1;
        p.eps2 = f.eps2;
        p.eps_ro = f.eps_ro;
        p.check_rates()?;
        for e in f.chi {
            p.set_chi(e.a, e.b, e.chi)?;
        }
        Ok(p)
    }
}

impl NoiseProfile {
    fn blank(device: String, links: Vec<Link>, seed: u64, params: NoiseParams) -> Self {
        let n = links.len();
        let index = links.iter().enumerate().map(|(i, l)| (*l, i)).collect();
        NoiseProfile {
            device,
            seed,
            eps1: params.eps1,
            eps2: params.eps2,
            eps_ro: params.eps_ro,
            params,
            links,
            index,
            chi: vec![0.0; n * n],
        }
    }

    /// A profile without any error source.
    pub fn noiseless(dev: &Device) -> Self {
        NoiseProfile::blank(
            dev.name().to_string(),
            dev.links().to_vec(),
            0,
            NoiseParams::noiseless(),
        )
    }

    fn check_rates(&self) -> Result<()> {
        for (name, v) in [("eps1", self.eps1), ("eps2", self.eps2), ("eps_ro", self.eps_ro)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("{name} = {v} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn matches_device(&self, dev: &Device) -> bool {
        self.links == dev.links()
    }

    fn idx(&self, l: Link) -> Result<usize> {
        self.index
            .get(&Link::new(l.0, l.1))
            .copied()
            .ok_or_else(|| Error::UnknownLink {
                device: self.device.clone(),
                link: l,
            })
    }

    /// Crosstalk between two links; 0 for unknown links or a link with itself.
    pub fn chi(&self, a: Link, b: Link) -> f64 {
        match (self.idx(a), self.idx(b)) {
            (Ok(i), Ok(j)) => self.chi_by_index(i, j),
            _ => 0.0,
        }
    }

    pub fn chi_by_index(&self, i: usize, j: usize) -> f64 {
        self.chi[i * self.links.len() + j]
    }

    pub fn set_chi(&mut self, a: Link, b: Link, value: f64) -> Result<()> {
        if value.is_nan() || value < 0.0 {
            return Err(Error::InvalidArgument(format!("chi must be >= 0, got {value}")));
        }
        let (i, j) = (self.idx(a)?, self.idx(b)?);
        if i == j {
            return Err(Error::InvalidArgument(format!("chi of {a} with itself")));
        }
        let n = self.links.len();
        self.chi[i * n + j] = value;
        self.chi[j * n + i] = value;
        Ok(())
    }

    pub fn with_rates(mut self, eps1: f64, eps2: f64, eps_ro: f64) -> Result<Self> {
        self.eps1 = eps1;
        self.eps2 = eps2;
        self.eps_ro = eps_ro;
        self.check_rates()?;
        Ok(self)
    }

    /// Copy with every crosstalk coefficient zeroed; base rates are kept.
    pub fn without_crosstalk(&self) -> Self {
        let mut p = self.clone();
        p.chi.iter_mut().for_each(|c| *c = 0.0);
        p
    }

    pub fn nonzero_entries(&self) -> Vec<ChiEntry> {
        let n = self.links.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let c = self.chi[i * n + j];
                if c > 0.0 {
                    out.push(ChiEntry {
                        a: self.links[i],
                        b: self.links[j],
                        chi: c,
                    });
                }
            }
        }
        out
    }

    /// Fraction of unordered link pairs with nonzero crosstalk.
    pub fn fraction_nonzero(&self) -> f64 {
        let n = self.links.len();
        let pairs = n * n.saturating_sub(1) / 2;
        if pairs == 0 {
            return 0.0;
        }
        self.nonzero_entries().len() as f64 / pairs as f64
    }

    /// Per-link weights for error-aware region allocation: base CX error plus
    /// the worst crosstalk the link can suffer.
    pub fn link_error_weights(&self) -> Vec<f64> {
        let n = self.links.len();
        (0..n)
            .map(|i| {
                let worst = (0..n).map(|j| self.chi[i * n + j]).fold(0.0, f64::max);
                self.eps2 + worst
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Draws a crosstalk table for `dev`. Each unordered link pair is nonzero with
/// probability `p_xt`; its magnitude is
/// `local_scale * exp(-hop_decay * max(d - 1, 0)) * E1`, plus
/// `tail_scale * E2` with probability `tail_prob` (E1, E2 ~ Exp(1)).
pub fn gen_noise_profile(dev: &Device, seed: u64, params: &NoiseParams) -> Result<NoiseProfile> {
    params.validate()?;
    let mut p = NoiseProfile::blank(
        dev.name().to_string(),
        dev.links().to_vec(),
        seed,
        params.clone(),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = dev.n_links();
    for i in 0..n {
        for j in i + 1..n {
            // Draw every variate regardless of branch so that changing one
            // parameter does not reshuffle the rest of the table.
            let on: f64 = rng.random();
            let local: f64 = Exp1.sample(&mut rng);
            let tail_on: f64 = rng.random();
            let tail: f64 = Exp1.sample(&mut rng);
            if on >= params.p_xt {
                continue;
            }
            let d = dev.link_distance(i, j);
            let decay = if d <= 1 {
                1.0
            } else {
                (-params.hop_decay * (d - 1) as f64).exp()
            };
            let mut chi = params.local_scale * decay * local;
            if tail_on < params.tail_prob {
                chi += params.tail_scale * tail;
            }
            // Selected pairs always carry some crosstalk.
            let chi = chi.max(1e-12);
            p.chi[i * n + j] = chi;
            p.chi[j * n + i] = chi;
        }
    }
    Ok(p)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationScenario {
    pub name: String,
    pub victim: Link,
    pub attacks: Vec<Link>,
    pub target_rf: f64,
}

/// Noise parameters plus crosstalk coefficients pinned so that the profiling
/// scenarios hit their relative-fidelity targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub device: String,
    pub params: NoiseParams,
    pub base_seed: u64,
    pub depth: usize,
    pub trials: u64,
    pub scenarios: Vec<CalibrationScenario>,
    pub pinned: Vec<ChiEntry>,
}

impl Calibration {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Random profile for `seed` with the pinned coefficients applied on top.
    pub fn profile_for_seed(&self, dev: &Device, seed: u64) -> Result<NoiseProfile> {
        let mut p = gen_noise_profile(dev, seed, &self.params)?;
        for e in &self.pinned {
            p.set_chi(e.a, e.b, e.chi)?;
        }
        Ok(p)
    }

    pub fn base_profile(&self, dev: &Device) -> Result<NoiseProfile> {
        self.profile_for_seed(dev, self.base_seed)
    }

    /// The shipped calibration for the 27-qubit Hanoi preset.
    pub fn hanoi27() -> Result<Self> {
        Calibration::from_json(include_str!("../../fixtures/noise/hanoi27_calibrated.json"))
    }
}
