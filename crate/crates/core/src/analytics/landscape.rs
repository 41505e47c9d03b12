//! Expected MaxCut objective of p=1 QAOA over a (gamma, beta) grid, with the
//! circuit executed under one of the execution modes.

use serde::{Deserialize, Serialize};

use crate::circuit::{gen_qaoa_maxcut, gen_zkta, Graph, Program};
use crate::detection::MergeMode;
use crate::error::{Error, Result};
use crate::scheduler::{execute_context, run_forced, Job, SchedulerConfig, DEFAULT_BUFFER};
use crate::simulator::{Distribution, NoiseProfile};
use crate::topology::Device;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum LandscapeExec {
    Isolated,
    /// The circuit shares the machine with a ZKTA program for all trials.
    EmpWithZkta { attacker_qubits: usize, depth: usize },
    /// The circuit runs over `contexts` contexts, the first
    /// `attacked_contexts` of them next to a ZKTA program and the rest alone.
    Qontexts {
        contexts: u32,
        attacked_contexts: u32,
        attacker_qubits: usize,
        depth: usize,
        detect: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Landscape {
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
    /// `values[g][b]` is the expected cut at `(gammas[g], betas[b])`.
    pub values: Vec<Vec<f64>>,
}

impl Landscape {
    pub fn range(&self) -> f64 {
        let flat = self.values.iter().flatten();
        let max = flat.clone().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = flat.copied().fold(f64::INFINITY, f64::min);
        max - min
    }
}

/// Expected cut weight under the outcome distribution.
pub fn expected_cut(graph: &Graph, d: &Distribution) -> Result<f64> {
    Ok(d.probabilities()?
        .iter()
        .map(|(bits, p)| p * graph.cut_value(bits))
        .sum())
}

fn run_point(
    program: &Program,
    exec: &LandscapeExec,
    dev: &Device,
    profile: &NoiseProfile,
    trials: u64,
    seed: u64,
) -> Result<Distribution> {
    match *exec {
        LandscapeExec::Isolated => {
            let run = execute_context(&[program], dev, profile, trials, seed, DEFAULT_BUFFER)?;
            Ok(run.distributions.into_iter().next().expect("one program"))
        }
        LandscapeExec::EmpWithZkta { attacker_qubits, depth } => {
            let zkta = gen_zkta(attacker_qubits, depth)?;
            let run = execute_context(&[program, &zkta], dev, profile, trials, seed, DEFAULT_BUFFER)?;
            Ok(run.distributions.into_iter().next().expect("victim first"))
        }
        LandscapeExec::Qontexts {
            contexts,
            attacked_contexts,
            attacker_qubits,
            depth,
            detect,
        } => {
            if attacked_contexts > contexts {
                return Err(Error::InvalidArgument(format!(
                    "{attacked_contexts} attacked contexts out of {contexts}"
                )));
            }
            let zkta = gen_zkta(attacker_qubits, depth)?;
            let co: Vec<Option<&Program>> = (0..contexts)
                .map(|c| (c < attacked_contexts).then_some(&zkta))
                .collect();
            let job = Job::new(program.clone(), "landscape").with_trials(trials);
            let cfg = SchedulerConfig {
                contexts,
                merge: MergeMode::InverseNoise,
                ..SchedulerConfig::default()
            };
            Ok(run_forced(&job, &co, dev, profile, &cfg, detect, seed)?.0.distribution)
        }
    }
}

/// Evaluates every grid point with the same seed, so neighbouring points
/// differ only through the circuit.
pub fn landscape_sweep(
    graph: &Graph,
    gammas: &[f64],
    betas: &[f64],
    exec: &LandscapeExec,
    dev: &Device,
    profile: &NoiseProfile,
    trials: u64,
    seed: u64,
) -> Result<Landscape> {
    if gammas.is_empty() || betas.is_empty() {
        return Err(Error::InvalidArgument("landscape grid is empty".into()));
    }
    let mut values = Vec::with_capacity(gammas.len());
    for &g in gammas {
        let mut row = Vec::with_capacity(betas.len());
        for &b in betas {
            let program = gen_qaoa_maxcut(graph, 1, &[g], &[b])?;
            let d = run_point(&program, exec, dev, profile, trials, seed)?;
            row.push(expected_cut(graph, &d)?);
        }
        values.push(row);
    }
    Ok(Landscape {
        gammas: gammas.to_vec(),
        betas: betas.to_vec(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{make_device, Preset};

    #[test]
    fn zero_angles_give_random_cut() {
        let dev = make_device(&Preset::Hanoi27).unwrap();
        let profile = NoiseProfile::noiseless(&dev);
        let g = Graph::triangle();
        let l = landscape_sweep(&g, &[0.0], &[0.0], &LandscapeExec::Isolated, &dev, &profile, 20000, 3).unwrap();
        assert!((l.values[0][0] - g.total_weight() / 2.0).abs() < 0.05);
    }
}
