use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use qontexts_core::circuit::{gen_bv, gen_ghz, gen_zkta, Program};
use qontexts_core::scheduler::{run_emp, run_qontexts, Job, RunResult, SchedulerConfig};
use qontexts_core::simulator::{Calibration, NoiseProfile};
use qontexts_core::topology::{make_device, Device, Preset};

fn hanoi() -> Device {
    make_device(&Preset::Hanoi27).unwrap()
}

#[derive(Clone, Debug)]
enum Kind {
    Bv(String),
    Ghz(usize),
    Zkta(usize),
}

fn bv() -> impl Strategy<Value = Kind> {
    prop::collection::vec(prop::bool::ANY, 2..6).prop_map(|b| Kind::Bv(b.iter().map(|&x| if x { '1' } else { '0' }).collect()))
}

fn kind() -> impl Strategy<Value = Kind> {
    prop_oneof![4 => bv(), 4 => (2usize..6).prop_map(Kind::Ghz), 1 => (4usize..7).prop_map(Kind::Zkta)]
}

fn queue(max: usize, trials: u64) -> impl Strategy<Value = Vec<Job>> {
    queue_of(kind(), max, trials)
}

fn queue_of(kind: impl Strategy<Value = Kind>, max: usize, trials: u64) -> impl Strategy<Value = Vec<Job>> {
    prop::collection::vec(kind, 1..max).prop_map(move |kinds| {
        kinds
            .into_iter()
            .enumerate()
            .map(|(i, k)| {
                let (mut p, attacker): (Program, bool) = match k {
                    Kind::Bv(s) => (gen_bv(&s).unwrap(), false),
                    Kind::Ghz(n) => (gen_ghz(n).unwrap(), false),
                    Kind::Zkta(n) => (gen_zkta(n, 10).unwrap(), true),
                };
                p.id = format!("{}#{i}", p.id);
                let job = if attacker { Job::attacker(p, "mallory") } else { Job::new(p, "alice") };
                job.with_trials(trials)
            })
            .collect()
    })
}

fn contexts() -> impl Strategy<Value = u32> {
    prop::sample::select(vec![1u32, 2, 4, 8])
}

// Trials each job ran in contexts that count towards its own result.
fn recorded_trials(run: &RunResult) -> BTreeMap<String, u64> {
    let mut out = BTreeMap::new();
    for rec in &run.audit {
        for m in rec.members.iter().filter(|m| m.records) {
            *out.entry(m.program.clone()).or_default() += rec.trials;
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn every_job_runs_c_contexts_and_all_its_trials(
        q in queue(12, 80),
        c in contexts(),
        detect in any::<bool>(),
        seed in 0u64..1000,
    ) {
        let dev = hanoi();
        let profile = Calibration::hanoi27().unwrap().profile_for_seed(&dev, seed).unwrap();
        let cfg = SchedulerConfig { contexts: c, ..SchedulerConfig::default() };
        let out = run_qontexts(&q, &dev, &profile, &cfg, detect, seed).unwrap();
        let trials = recorded_trials(&out);
        for job in &q {
            prop_assert_eq!(trials.get(job.id()).copied(), Some(job.trials), "{}", job.id());
            let r = &out.results[job.id()];
            prop_assert_eq!(r.co_runners.len(), c as usize);
            prop_assert!(r.distribution.total() > 0.0);
            // Co-runners repeat only when the queue (or, with detection,
            // the attack list) leaves too few, and that is always logged.
            let named: Vec<&String> = r.co_runners.iter().flatten().collect();
            let unique: BTreeSet<&&String> = named.iter().collect();
            if unique.len() != named.len() {
                let warned = out.warnings.iter().any(|w| w.contains(&format!("`{}`", job.id())));
                prop_assert!(warned, "{} repeats {:?} silently", job.id(), r.co_runners);
            }
            prop_assert!(!named.iter().any(|n| n.as_str() == job.id()));
        }
        if q.len() > c as usize && !detect {
            prop_assert!(out.warnings.is_empty(), "{:?}", out.warnings);
        }
    }

    #[test]
    fn attack_list_only_grows(q in queue(12, 80), seed in 0u64..1000) {
        let dev = hanoi();
        let profile = Calibration::hanoi27().unwrap().profile_for_seed(&dev, seed).unwrap();
        let cfg = SchedulerConfig::default();
        let out = run_qontexts(&q, &dev, &profile, &cfg, true, seed).unwrap();
        let mut gal: BTreeSet<String> = BTreeSet::new();
        for rec in &out.audit {
            // A listed program never shares a context again.
            if rec.members.len() > 1 {
                prop_assert!(rec.members.iter().all(|m| !gal.contains(&m.program)), "context {}", rec.index);
            }
            for done in &rec.completions {
                for g in &done.gal_added {
                    prop_assert!(gal.insert(g.clone()), "{} listed twice", g);
                }
            }
        }
        prop_assert_eq!(gal, out.gal);
    }

    #[test]
    fn single_context_pairs_match_emp(q in queue(3, 80).prop_filter("pair", |q| q.len() == 2), seed in 0u64..1000) {
        let dev = hanoi();
        let profile = Calibration::hanoi27().unwrap().profile_for_seed(&dev, seed).unwrap();
        let one = SchedulerConfig { contexts: 1, ..SchedulerConfig::default() };
        let emp = run_emp(&q, &dev, &profile, seed, one.buffer).unwrap();
        let qx = run_qontexts(&q, &dev, &profile, &one, false, seed).unwrap();
        for j in &q {
            prop_assert_eq!(&emp.results[j.id()].distribution, &qx.results[j.id()].distribution);
        }
    }

    // Without noise every context of a deterministic program agrees, so
    // detection never flags anything and the merge is the ideal outcome.
    #[test]
    fn noiseless_runs_flag_nothing(q in queue_of(bv(), 10, 80), c in contexts(), seed in 0u64..1000) {
        let dev = hanoi();
        let profile = NoiseProfile::noiseless(&dev);
        let cfg = SchedulerConfig { contexts: c, ..SchedulerConfig::default() };
        let out = run_qontexts(&q, &dev, &profile, &cfg, true, seed).unwrap();
        prop_assert!(out.gal.is_empty());
        for job in &q {
            let r = &out.results[job.id()];
            prop_assert!(r.flagged.is_empty());
            prop_assert_eq!(r.distribution.counts.len(), 1, "{}", job.id());
        }
    }
}
