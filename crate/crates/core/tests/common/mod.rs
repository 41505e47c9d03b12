use proptest::prelude::*;

use qontexts_core::circuit::{Program, ProgramBuilder};

#[derive(Clone, Debug)]
enum Op {
    H(usize),
    X(usize),
    Rz(usize, f64),
    Cx(usize, usize),
    Barrier,
}

pub fn random_program() -> impl Strategy<Value = Program> {
    (1usize..7).prop_flat_map(|n| {
        let op = prop_oneof![
            (0..n).prop_map(Op::H),
            (0..n).prop_map(Op::X),
            ((0..n), -7.0f64..7.0).prop_map(|(q, t)| Op::Rz(q, t)),
            ((0..n), (0..n)).prop_map(|(a, b)| Op::Cx(a, b)),
            Just(Op::Barrier),
        ];
        prop::collection::vec(op, 0..40).prop_map(move |ops| {
            let mut b = ProgramBuilder::new(n, n);
            for op in ops {
                match op {
                    Op::H(q) => b.h(q).map(|_| ()),
                    Op::X(q) => b.x(q).map(|_| ()),
                    Op::Rz(q, t) => b.rz(q, t).map(|_| ()),
                    Op::Cx(c, t) if c != t => b.cx(c, t).map(|_| ()),
                    Op::Cx(..) => Ok(()),
                    Op::Barrier => b.barrier_all().map(|_| ()),
                }
                .unwrap();
            }
            for q in 0..n {
                b.measure(q, q).unwrap();
            }
            b.build("random").unwrap()
        })
    })
}
