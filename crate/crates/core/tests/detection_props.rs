use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qontexts_core::detection::{fidelity, hellinger, holdout_detect, merge_weighted, tvd, MergeMode, DEFAULT_THRESHOLD};
use qontexts_core::simulator::Distribution;

fn outcome(i: usize) -> String {
    format!("{i:03b}")
}

fn dist() -> impl Strategy<Value = Distribution> {
    prop::collection::vec(0u32..50, 8).prop_filter_map("empty", |c| {
        (c.iter().any(|&x| x > 0)).then(|| Distribution::from_counts(c.iter().enumerate().map(|(i, &x)| (outcome(i), x as f64))))
    })
}

fn contexts() -> impl Strategy<Value = Vec<Distribution>> {
    prop::collection::vec(dist(), 3..9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn fidelity_stays_in_unit_interval(p in dist(), q in dist()) {
        let f = fidelity(&p, &q).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((0.0..=1.0).contains(&hellinger(&p, &q).unwrap()));
        prop_assert!((0.0..=1.0).contains(&tvd(&p, &q).unwrap()));
    }

    #[test]
    fn holdout_is_permutation_equivariant(ds in contexts(), seed in any::<u64>(), th in 0.0f64..0.6) {
        let n = ds.len();
        let mut perm: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut ChaCha8Rng::seed_from_u64(seed));
        // Context i moves to position perm[i].
        let mut moved = vec![Distribution::default(); n];
        for (i, d) in ds.iter().enumerate() {
            moved[perm[i]] = d.clone();
        }
        let a = holdout_detect(&ds, th).unwrap();
        let b = holdout_detect(&moved, th).unwrap();
        let mut mapped: Vec<usize> = a.attacked.iter().map(|&i| perm[i]).collect();
        mapped.sort();
        prop_assert_eq!(mapped, b.attacked);
    }

    #[test]
    fn merge_weights_are_normalized(ds in contexts(), th in 0.0f64..0.6) {
        let r = holdout_detect(&ds, th).unwrap();
        prop_assume!(!r.kept().is_empty());
        for mode in [MergeMode::AsWritten, MergeMode::InverseNoise] {
            let mut r = r.clone();
            r.set_weights(mode);
            let s: f64 = r.normalized_weights.iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-9, "{mode}: {s}");
            prop_assert!(r.normalized_weights.iter().all(|&w| w >= 0.0));
            let merged = merge_weighted(&ds, &r, mode).unwrap();
            let total: f64 = merged.probabilities().unwrap().values().sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
        }
    }
}

fn sample(probs: &[f64], trials: u64, rng: &mut impl Rng) -> Distribution {
    let mut counts = vec![0.0; probs.len()];
    for _ in 0..trials {
        let mut u: f64 = rng.random();
        let mut k = probs.len() - 1;
        for (i, &p) in probs.iter().enumerate() {
            if u < p {
                k = i;
                break;
            }
            u -= p;
        }
        counts[k] += 1.0;
    }
    Distribution::from_counts(counts.into_iter().enumerate().map(|(i, c)| (outcome(i), c)))
}

// A point-mass program seen through moderate noise, and the same program
// next to an attacker: most of the mass smeared towards uniform.
const BENIGN: [f64; 8] = [0.05, 0.04, 0.03, 0.04, 0.03, 0.68, 0.06, 0.07];
const ATTACKED: [f64; 8] = [0.12, 0.11, 0.12, 0.11, 0.12, 0.20, 0.11, 0.11];

#[test]
fn benign_contexts_stay_within_threshold_scale() {
    let mut ok = 0;
    let seeds = 200;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ds: Vec<Distribution> = (0..8).map(|_| sample(&BENIGN, 1000, &mut rng)).collect();
        let r = holdout_detect(&ds, DEFAULT_THRESHOLD).unwrap();
        if r.delta.max_offdiag() <= 0.3 {
            ok += 1;
        }
    }
    assert!(ok as f64 >= 0.95 * seeds as f64, "{ok}/{seeds}");
}

#[test]
fn discarding_a_flagged_minority_helps() {
    let ideal = Distribution::from_counts([(outcome(5), 1.0)]);
    let (mut cases, mut better) = (0, 0);
    for seed in 0..300u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_att = rng.random_range(1..=3);
        let ds: Vec<Distribution> = (0..8)
            .map(|i| sample(if i < n_att { &ATTACKED } else { &BENIGN }, 1000, &mut rng))
            .collect();
        let r = holdout_detect(&ds, DEFAULT_THRESHOLD).unwrap();
        if r.attacked.is_empty() || r.attacked.len() * 2 >= ds.len() {
            continue;
        }
        cases += 1;
        let all = merge_weighted(&ds, &holdout_detect(&ds, f64::INFINITY).unwrap(), MergeMode::InverseNoise).unwrap();
        let kept = merge_weighted(&ds, &r, MergeMode::InverseNoise).unwrap();
        if fidelity(&ideal, &kept).unwrap() >= fidelity(&ideal, &all).unwrap() {
            better += 1;
        }
    }
    assert!(cases >= 100, "only {cases} cases with a flagged minority");
    assert!(better as f64 >= 0.95 * cases as f64, "{better}/{cases}");
}
