use std::collections::BTreeSet;

use proptest::prelude::*;

use qontexts_core::circuit::{
    disguise_as_qaoa_with, emit_qasm, gen_bv, gen_ghz, gen_pea, gen_qaoa_maxcut, gen_zkta, gen_zkta_doubled, parse_qasm,
    Gate, Graph, Program,
};
use qontexts_core::scenario::{bundled_benchmarks, generate_benchmarks};

mod common;
use common::random_program;

fn layers_disjoint(p: &Program) -> bool {
    p.layers.iter().all(|layer| {
        let mut seen = BTreeSet::new();
        layer
            .iter()
            .filter(|g| !matches!(g, Gate::Barrier(_)))
            .flat_map(Gate::qubits)
            .all(|q| seen.insert(q))
    })
}

fn secret() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::bool::ANY, 1..12).prop_map(|b| b.iter().map(|&x| if x { '1' } else { '0' }).collect())
}

fn graph() -> impl Strategy<Value = Graph> {
    (3usize..7).prop_flat_map(|n| {
        prop::collection::btree_set((0..n, 0..n).prop_filter("loop", |(a, b)| a < b), 1..8)
            .prop_map(move |e| Graph::new(n, &e.into_iter().collect::<Vec<_>>()).unwrap())
    })
}

// CX gates per layer, as (control, target) sets.
fn cx_layers(p: &Program) -> Vec<BTreeSet<(usize, usize)>> {
    p.layers
        .iter()
        .map(|l| {
            l.iter()
                .filter_map(|g| match g {
                    Gate::Cx(c, t) => Some((*c, *t)),
                    _ => None,
                })
                .collect::<BTreeSet<_>>()
        })
        .filter(|s| !s.is_empty())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn builder_layers_are_disjoint(p in random_program()) {
        prop_assert!(layers_disjoint(&p));
    }

    #[test]
    fn random_programs_round_trip_through_qasm(p in random_program()) {
        let back = parse_qasm(&emit_qasm(&p)).unwrap();
        prop_assert!(back.structurally_eq(&p), "{}", emit_qasm(&p));
        prop_assert!(layers_disjoint(&back));
    }

    #[test]
    fn bv_uses_one_cx_per_set_bit(s in secret()) {
        let p = gen_bv(&s).unwrap();
        prop_assert_eq!(p.cx_count(), s.chars().filter(|&c| c == '1').count());
        prop_assert!(layers_disjoint(&p));
    }

    #[test]
    fn ghz_uses_n_minus_one_cx(n in 2usize..20) {
        let p = gen_ghz(n).unwrap();
        prop_assert_eq!(p.cx_count(), n - 1);
        prop_assert!(layers_disjoint(&p));
    }

    #[test]
    fn qaoa_and_pea_layers_are_disjoint(g in graph(), gamma in -3.0f64..3.0, beta in -3.0f64..3.0, bits in 1usize..6, k in 0u64..32) {
        let q = gen_qaoa_maxcut(&g, 1, &[gamma], &[beta]).unwrap();
        prop_assert!(layers_disjoint(&q));
        let k = k % (1 << bits);
        let p = gen_pea(bits, k).unwrap();
        prop_assert!(layers_disjoint(&p));
    }

    #[test]
    fn zkta_layers_are_disjoint(n in 4usize..16, depth in 1usize..20) {
        prop_assert!(layers_disjoint(&gen_zkta(n, depth).unwrap()));
    }

    #[test]
    fn disguise_keeps_the_cx_layers(n in 4usize..14, half in 1usize..8, gamma in 0.1f64..1.5, beta in 0.1f64..1.5) {
        let z = gen_zkta_doubled(n, 2 * half).unwrap();
        let (q, _) = disguise_as_qaoa_with(&z, gamma, beta).unwrap();
        prop_assert!(layers_disjoint(&q));
        let mut a = cx_layers(&z);
        let mut b = cx_layers(&q);
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn bundled_benchmarks_round_trip() {
    for p in bundled_benchmarks().unwrap() {
        assert!(layers_disjoint(&p), "{}", p.id);
        let back = parse_qasm(&emit_qasm(&p)).unwrap();
        assert!(back.structurally_eq(&p), "{}", p.id);
    }
    for p in generate_benchmarks().unwrap() {
        assert!(layers_disjoint(&p), "{}", p.id);
    }
}
