use crate::circuit::{Gate, MappedProgram, Program};
use crate::error::Result;
use crate::simulator::{sample_noisy, Distribution, NoiseProfile};
use crate::topology::{allocate_regions, Device};

/// Co-scheduled regions are kept more than one hop apart.
pub const DEFAULT_BUFFER: usize = 1;

/// Per-context seed; contexts of one run never share random streams.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug)]
pub struct ContextRun {
    pub mapped: Vec<MappedProgram>,
    pub distributions: Vec<Distribution>,
    /// Idle layers the aligner inserted into each program.
    pub idle_layers: Vec<usize>,
}

fn cx_physical(mp: &MappedProgram, layer: usize) -> Vec<(usize, usize)> {
    mp.program
        .layers
        .get(layer)
        .map(|l| {
            l.iter()
                .filter_map(|g| match *g {
                    Gate::Cx(c, t) => Some((mp.physical(c), mp.physical(t))),
                    _ => None,
                })
                .collect()
        })
        .unwrap_or_default()
}

fn near(dev: &Device, a: (usize, usize), b: (usize, usize)) -> bool {
    [a.0, a.1]
        .iter()
        .any(|&p| [b.0, b.1].iter().any(|&q| dev.qubit_distance(p, q) <= 1))
}

/// Delays later programs so no two programs run CXs at most one hop apart
/// in the same layer. Returns the idle layers added to each program.
pub fn stagger(mapped: &mut [MappedProgram], dev: &Device) -> Vec<usize> {
    let mut added = vec![0; mapped.len()];
    let mut layer = 0;
    loop {
        let depth = mapped.iter().map(|m| m.program.layers.len()).max().unwrap_or(0);
        if layer >= depth {
            break;
        }
        let mut clash = None;
        'outer: for b in 1..mapped.len() {
            let cb = cx_physical(&mapped[b], layer);
            if cb.is_empty() {
                continue;
            }
            for a in 0..b {
                let ca = cx_physical(&mapped[a], layer);
                if ca.iter().any(|&x| cb.iter().any(|&y| near(dev, x, y))) {
                    clash = Some(b);
                    break 'outer;
                }
            }
        }
        match clash {
            // The inserted layer has no CX, so each insertion resolves the
            // clash for program b at this layer and the loop terminates.
            Some(b) => {
                mapped[b].program = mapped[b].program.with_idle_layers(layer, 1);
                added[b] += 1;
            }
            None => layer += 1,
        }
    }
    added
}

/// Allocates buffered regions for `programs` in order, staggers clashing CX
/// layers and samples every member for `trials` shots.
pub fn execute_context(
    programs: &[&Program],
    dev: &Device,
    profile: &NoiseProfile,
    trials: u64,
    seed: u64,
    buffer: usize,
) -> Result<ContextRun> {
    let sizes: Vec<usize> = programs.iter().map(|p| p.n_qubits).collect();
    let regions = allocate_regions(dev, &sizes, buffer, None)?;
    let mut mapped = programs
        .iter()
        .zip(regions)
        .map(|(p, mut r)| {
            r.owner = p.id.clone();
            MappedProgram::place((*p).clone(), r)
        })
        .collect::<Result<Vec<_>>>()?;
    let idle_layers = stagger(&mut mapped, dev);
    let distributions = sample_noisy(&mapped, dev, profile, trials, seed)?;
    Ok(ContextRun {
        mapped,
        distributions,
        idle_layers,
    })
}

pub(crate) fn resample(
    run: &ContextRun,
    i: usize,
    dev: &Device,
    profile: &NoiseProfile,
    trials: u64,
    seed: u64,
) -> Result<Distribution> {
    let mut d = sample_noisy(&run.mapped, dev, profile, trials, seed)?;
    Ok(d.swap_remove(i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{gen_ghz, gen_zkta};
    use crate::topology::{make_device, Preset};

    #[test]
    fn buffered_regions_need_no_stagger() {
        let dev = make_device(&Preset::Hanoi27).unwrap();
        let profile = NoiseProfile::noiseless(&dev);
        let a = gen_ghz(5).unwrap();
        let b = gen_zkta(6, 4).unwrap();
        let run = execute_context(&[&a, &b], &dev, &profile, 64, 1, 1).unwrap();
        assert_eq!(run.idle_layers, vec![0, 0]);
        assert_eq!(run.distributions[0].counts.len(), 2);
    }

    #[test]
    fn adjacent_cx_layers_are_staggered() {
        let dev = make_device(&Preset::Hanoi27).unwrap();
        let a = gen_ghz(2).unwrap();
        let b = gen_ghz(2).unwrap();
        // Q1-Q2 and Q3-Q5 sit one hop apart on the heavy-hex lattice.
        let q = dev.qubit_distance(2, 3);
        assert_eq!(q, 1);
        let mut mapped = vec![
            MappedProgram::with_layout(a, vec![1, 2], "a").unwrap(),
            MappedProgram::with_layout(b, vec![3, 5], "b").unwrap(),
        ];
        let added = stagger(&mut mapped, &dev);
        assert_eq!(added, vec![0, 1]);
        let l0 = cx_physical(&mapped[0], 1);
        let l1 = cx_physical(&mapped[1], 1);
        assert!(l0.is_empty() || l1.is_empty());
    }

    #[test]
    fn derived_seeds_differ() {
        let s: std::collections::BTreeSet<u64> = (0..1000).map(|i| derive_seed(7, i)).collect();
        assert_eq!(s.len(), 1000);
    }
}
