use proptest::prelude::*;

use qontexts_core::analytics::{
    arrival_times, p_at_least, p_exactly, simulate_mode, tau_multiprog, tau_qontexts, LatencyParams, Mode,
    QueueParams, ResilienceParams,
};

fn resilience() -> impl Strategy<Value = ResilienceParams> {
    (10u64..200, 0.0f64..1.0, 0.0f64..=1.0, 1u32..40, 0.0f64..=1.0).prop_map(|(n, frac, alpha, c, beta)| {
        ResilienceParams {
            n,
            k: ((n as f64 * frac).round() as u64).min(n),
            alpha,
            contexts: c,
            beta,
        }
    })
}

// Among contexts that are either attacked or benign, the attacked share
// stays below the threshold fraction. The model's mass is
// (q + 1 - K/N)^C times a binomial tail at that share, so this is where the
// tail shrinks with C.
fn below_threshold(rp: &ResilienceParams) -> bool {
    let q = rp.q();
    q / (q + 1.0 - rp.attacker_fraction()) < rp.beta
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn p_at_least_is_non_increasing_in_beta(rp in resilience(), b1 in 0.0f64..=1.0, b2 in 0.0f64..=1.0) {
        let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
        let p_lo = p_at_least(&rp.with_beta(lo));
        let p_hi = p_at_least(&rp.with_beta(hi));
        prop_assert!(p_hi <= p_lo * (1.0 + 1e-12) + 1e-300, "{p_hi} > {p_lo}");
    }

    // Along context counts where beta*C is a whole number the threshold
    // fraction is exact; elsewhere the ceiling makes the curve a sawtooth.
    #[test]
    fn p_at_least_falls_with_contexts_at_exact_thresholds(
        rp in resilience(),
        step in 1u32..5,
        num in 1u32..=4,
    ) {
        // beta = num / 4 and C a multiple of 4 keeps beta*C whole.
        let base = rp.with_beta(num as f64 / 4.0);
        prop_assume!(below_threshold(&base));
        let c1 = 4 * step;
        let c2 = 4 * (step + 1);
        let p1 = p_at_least(&base.with_contexts(c1));
        let p2 = p_at_least(&base.with_contexts(c2));
        prop_assert!(p2 <= p1 * (1.0 + 1e-12), "C={c1}: {p1}, C={c2}: {p2}");
    }

    #[test]
    fn p_exactly_terms_sum_to_at_most_one(rp in resilience()) {
        let total: f64 = (0..=rp.contexts).map(|m| p_exactly(&rp, m)).sum();
        prop_assert!(total <= 1.0 + 1e-9);
        prop_assert!((0..=rp.contexts).all(|m| p_exactly(&rp, m) >= 0.0));
    }

    #[test]
    fn qontexts_never_beats_plain_multiprogramming_latency(
        t_wait in 1e-6f64..1e-3,
        ratio in 0.01f64..50.0,
        c in 1u32..64,
        s in 1u32..5,
        trials in 1u64..20_000,
    ) {
        let lp = LatencyParams {
            trials,
            t_trial: 100e-6,
            t_wait,
            t_load: ratio * t_wait,
            concurrency: s,
            contexts: c,
        };
        let (q, m) = (tau_qontexts(&lp), tau_multiprog(&lp));
        prop_assert!(q >= m * (1.0 - 1e-12), "{q} < {m}");
    }

    #[test]
    fn queue_simulation_conserves_jobs(rate in 0.1f64..12.0, seed in 0u64..1000, n in 1usize..300) {
        let qp = QueueParams { arrival_rate: rate, n_jobs: n, seed };
        let lp = LatencyParams::default();
        let arrivals = arrival_times(&qp, &lp).unwrap();
        for mode in Mode::ALL {
            let st = simulate_mode(mode, &arrivals, &qp, &lp);
            prop_assert!(st.conserved);
            prop_assert_eq!(st.completed, n);
        }
    }
}

#[test]
fn latency_equality_exactly_when_switching_equals_loading() {
    let base = LatencyParams::default();
    // C * t_switch = t_load needs t_wait <= t_load = C * t_load / C.
    let eq = LatencyParams {
        contexts: 1,
        t_load: 400e-6,
        t_wait: 250e-6,
        ..base.clone()
    };
    assert_eq!(tau_qontexts(&eq), tau_multiprog(&eq));
    let ne = LatencyParams { contexts: 2, ..eq };
    assert!(tau_qontexts(&ne) > tau_multiprog(&ne));
}

/// The ceiling in the threshold count makes p_at_least rise between some
/// consecutive context counts, e.g. from 7 to 8 at beta = 0.75 where both
/// need six attacked contexts.
#[test]
fn p_at_least_is_a_sawtooth_between_exact_thresholds() {
    let rp = ResilienceParams::default();
    let p7 = p_at_least(&rp.with_contexts(7));
    let p8 = p_at_least(&rp.with_contexts(8));
    assert_eq!(rp.with_contexts(7).threshold_count(), 6);
    assert_eq!(rp.with_contexts(8).threshold_count(), 6);
    assert!(p8 > p7);
}

/// Doubling the arrival rate never shortens mean completion, on shared
/// seeds.
#[test]
fn doubling_load_never_helps() {
    let lp = LatencyParams::default();
    for seed in 0..10 {
        for rate in [0.25, 0.5, 1.0, 2.0, 4.0] {
            let at = |r: f64| {
                let qp = QueueParams { arrival_rate: r, n_jobs: 300, seed };
                let arrivals = arrival_times(&qp, &lp).unwrap();
                Mode::ALL.map(|m| simulate_mode(m, &arrivals, &qp, &lp).mean_completion)
            };
            let (a, b) = (at(rate), at(2.0 * rate));
            for i in 0..3 {
                assert!(b[i] >= a[i] * (1.0 - 1e-12), "seed {seed} rate {rate} mode {i}: {} -> {}", a[i], b[i]);
            }
        }
    }
}

/// Up to K/N = 0.5 the chance of a strong attack grows with the attacker
/// share at the thresholds of interest (half or more of C). Past that the
/// all-benign factor takes over: at beta = 0.5 the curve peaks between
/// K/N = 0.52 and 0.58 depending on C.
#[test]
fn p_at_least_grows_with_attacker_share() {
    for c in [4u32, 8, 16, 32] {
        for beta in [0.5, 0.75, 1.0] {
            let mut prev = 0.0;
            for k in 0..=50u64 {
                let rp = ResilienceParams { n: 100, k, alpha: 0.4, contexts: c, beta };
                let p = p_at_least(&rp);
                assert!(p >= prev * (1.0 - 1e-12), "C={c} beta={beta} K={k}: {p} < {prev}");
                prev = p;
            }
        }
    }
}

/// Attacks rarer than benign contexts is not enough for the context count
/// to help: with K/N = 0.4, alpha = 1 and beta = 0.25 the attacked share
/// (0.4) exceeds beta and the tail grows with C.
#[test]
fn more_contexts_hurt_when_attacks_exceed_the_threshold_share() {
    let rp = ResilienceParams { n: 10, k: 4, alpha: 1.0, contexts: 4, beta: 0.25 };
    assert!(rp.q() < 1.0 - rp.attacker_fraction());
    assert!(p_at_least(&rp.with_contexts(8)) > p_at_least(&rp));
}

/// At a low threshold, or a high attacker share, the all-benign factor
/// dominates and the chance falls as K/N grows.
#[test]
fn all_benign_factor_can_dominate() {
    let at = |k, beta| p_at_least(&ResilienceParams { n: 100, k, alpha: 0.4, contexts: 4, beta });
    assert!(at(34, 0.25) < at(33, 0.25));
    assert!(at(60, 0.5) < at(58, 0.5));
}

/// With beta = 0 every context count qualifies and the model reduces to the
/// chance that no context meets an attacker that fails, which shrinks as
/// K/N grows.
#[test]
fn zero_beta_falls_with_attacker_share() {
    let at = |k| p_at_least(&ResilienceParams { k, beta: 0.0, ..ResilienceParams::default() });
    assert!(at(40) < at(20));
}
