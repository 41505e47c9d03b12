//! Benchmark, micro-benchmark and attack circuit generators.

use std::collections::BTreeSet;

use crate::circuit::graph::{Edge, Graph};
use crate::circuit::ir::{Gate, Program, ProgramBuilder};
use crate::error::{Error, Result};
use crate::topology::Link;

/// Angle of the RZ applied after H when preparing the micro-benchmark state.
pub const DEFAULT_PREP_THETA: f64 = 0.7;
pub const DEFAULT_DISGUISE_GAMMA: f64 = 0.6;
pub const DEFAULT_DISGUISE_BETA: f64 = 0.35;

/// Bernstein–Vazirani for `secret`; data qubit and clbit `i` carry character
/// `i`, the ancilla is the last qubit. The ideal outcome is `secret` itself.
pub fn gen_bv(secret: &str) -> Result<Program> {
    if secret.is_empty() {
        return Err(Error::InvalidArgument("empty BV secret".into()));
    }
    if let Some(c) = secret.chars().find(|c| *c != '0' && *c != '1') {
        return Err(Error::InvalidArgument(format!("BV secret has non-bit `{c}`")));
    }
    let n = secret.len();
    let anc = n;
    let mut b = ProgramBuilder::new(n + 1, n);
    for q in 0..n {
        b.h(q)?;
    }
    b.x(anc)?.h(anc)?;
    for (i, c) in secret.chars().enumerate() {
        if c == '1' {
            b.cx(i, anc)?;
        }
    }
    for q in 0..n {
        b.h(q)?.measure(q, q)?;
    }
    b.build(format!("bv_{secret}"))
}

pub fn gen_ghz(n: usize) -> Result<Program> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("GHZ needs n >= 2, got {n}")));
    }
    let mut b = ProgramBuilder::new(n, n);
    b.h(0)?;
    for q in 0..n - 1 {
        b.cx(q, q + 1)?;
    }
    for q in 0..n {
        b.measure(q, q)?;
    }
    b.build(format!("ghz_n{n}"))
}

fn cphase(b: &mut ProgramBuilder, c: usize, t: usize, theta: f64) -> Result<()> {
    b.rz(c, theta / 2.0)?.cx(c, t)?.rz(t, -theta / 2.0)?.cx(c, t)?.rz(t, theta / 2.0)?;
    Ok(())
}

fn swap(b: &mut ProgramBuilder, x: usize, y: usize) -> Result<()> {
    b.cx(x, y)?.cx(y, x)?.cx(x, y)?;
    Ok(())
}

/// Phase estimation of the phase `k / 2^bits` of a single-qubit phase gate
/// on its |1> eigenstate. Counting qubit `j` controls the `2^j`-th power; the
/// ideal outcome is `k` written little-endian (character `j` is bit `j`).
pub fn gen_pea(bits: usize, k: u64) -> Result<Program> {
    if bits == 0 || bits > 16 || k >> bits != 0 {
        return Err(Error::InvalidArgument(format!(
            "phase estimation needs 1..=16 counting bits and k < 2^bits (bits={bits}, k={k})"
        )));
    }
    let n = bits + 1;
    let eig = bits;
    let phase = std::f64::consts::TAU * k as f64 / (1u64 << bits) as f64;
    let mut b = ProgramBuilder::new(n, bits);
    b.x(eig)?;
    for j in 0..bits {
        b.h(j)?;
    }
    for j in 0..bits {
        cphase(&mut b, j, eig, phase * (1u64 << j) as f64)?;
    }
    // Inverse QFT on the counting register, most significant qubit first.
    let msb = |m: usize| bits - 1 - m;
    for m in 0..bits / 2 {
        swap(&mut b, msb(m), msb(bits - 1 - m))?;
    }
    for m in (0..bits).rev() {
        for l in (m + 1..bits).rev() {
            let theta = -std::f64::consts::PI / (1u64 << (l - m)) as f64;
            cphase(&mut b, msb(l), msb(m), theta)?;
        }
        b.h(msb(m))?;
    }
    for j in 0..bits {
        b.measure(j, j)?;
    }
    b.build(format!("pea_n{n}"))
}

/// `p`-layer QAOA for MaxCut. Each layer applies exp(-i gamma w ZZ) per edge
/// as CX, RZ(2 gamma w) on the target, CX, then exp(-i beta X) per node as
/// H, RZ(2 beta), H.
pub fn gen_qaoa_maxcut(graph: &Graph, p: usize, gamma: &[f64], beta: &[f64]) -> Result<Program> {
    graph.validate()?;
    if graph.is_empty() {
        return Err(Error::InvalidArgument("QAOA graph has no edges".into()));
    }
    if p == 0 || gamma.len() != p || beta.len() != p {
        return Err(Error::InvalidArgument(format!(
            "QAOA needs p >= 1 and p angles each (p={p}, |gamma|={}, |beta|={})",
            gamma.len(),
            beta.len()
        )));
    }
    let n = graph.n_nodes;
    let mut b = ProgramBuilder::new(n, n);
    for q in 0..n {
        b.h(q)?;
    }
    for layer in 0..p {
        for &Edge { u, v, w } in &graph.edges {
            b.cx(u, v)?.rz(v, 2.0 * gamma[layer] * w)?.cx(u, v)?;
        }
        for q in 0..n {
            b.h(q)?.rz(q, 2.0 * beta[layer])?.h(q)?;
        }
    }
    for q in 0..n {
        b.measure(q, q)?;
    }
    b.build(format!("qaoa_n{n}_p{p}"))
}

fn check_disjoint(victim: Link, attacks: &[Link]) -> Result<()> {
    let all: Vec<Link> = std::iter::once(victim).chain(attacks.iter().copied()).collect();
    for l in &all {
        if l.0 == l.1 {
            return Err(Error::OverlappingLinks(format!("degenerate link {l}")));
        }
    }
    for (i, a) in all.iter().enumerate() {
        for b in &all[i + 1..] {
            if a.shares_qubit(b) {
                return Err(Error::OverlappingLinks(format!("{a} and {b} share a qubit")));
            }
        }
    }
    Ok(())
}

/// Physical layout for the micro-benchmark pair: victim qubits first, then
/// each attack link's two qubits.
pub fn microbenchmark_layout(victim: Link, attacks: &[Link]) -> Vec<usize> {
    let mut v = vec![victim.0, victim.1];
    for a in attacks {
        v.extend([a.0, a.1]);
    }
    v
}

pub fn gen_microbenchmarks(victim: Link, attacks: &[Link], depth: usize) -> Result<(Program, Program)> {
    gen_microbenchmarks_with(victim, attacks, depth, DEFAULT_PREP_THETA)
}

/// Builds (µb1, µb2) on logical qubits laid out as [`microbenchmark_layout`].
/// Both prepare qubit 0 with H then RZ(`prep_theta`), run `depth` CX layers
/// on the victim pair and measure it; µb2 also drives every attack pair with
/// a CX in each of those layers.
pub fn gen_microbenchmarks_with(
    victim: Link,
    attacks: &[Link],
    depth: usize,
    prep_theta: f64,
) -> Result<(Program, Program)> {
    check_disjoint(victim, attacks)?;
    if depth == 0 {
        return Err(Error::InvalidArgument("micro-benchmark depth must be >= 1".into()));
    }
    let n = 2 + 2 * attacks.len();
    let build = |with_attack: bool, id: &str| -> Result<Program> {
        let mut b = ProgramBuilder::new(n, 2);
        b.h(0)?.rz(0, prep_theta)?;
        b.barrier_all()?;
        for _ in 0..depth {
            b.cx(0, 1)?;
            if with_attack {
                for k in 0..attacks.len() {
                    b.cx(2 + 2 * k, 3 + 2 * k)?;
                }
            }
        }
        b.measure(0, 0)?.measure(1, 1)?;
        b.build(id)
    };
    let tag = format!("{}_{}", victim.0, victim.1);
    Ok((build(false, &format!("ub1_{tag}"))?, build(true, &format!("ub2_{tag}"))?))
}

fn matching(n: usize, offset: usize) -> Vec<(usize, usize)> {
    (offset..n.saturating_sub(1)).step_by(2).map(|i| (i, i + 1)).collect()
}

fn zkta_from_patterns(n_qubits: usize, patterns: &[usize], id: String) -> Result<Program> {
    if n_qubits < 4 {
        return Err(Error::InvalidArgument(format!(
            "attack circuit needs >= 4 qubits, got {n_qubits}"
        )));
    }
    let mut b = ProgramBuilder::new(n_qubits, n_qubits);
    for &offset in patterns {
        for (c, t) in matching(n_qubits, offset) {
            b.cx(c, t)?;
        }
    }
    for q in 0..n_qubits {
        b.measure(q, q)?;
    }
    b.build(id)
}

/// `depth` cycles alternating the even-offset matching (0,1),(2,3),... with
/// the odd-offset one (1,2),(3,4),...
pub fn gen_zkta(n_qubits: usize, depth: usize) -> Result<Program> {
    let patterns: Vec<usize> = (0..depth).map(|c| c % 2).collect();
    zkta_from_patterns(n_qubits, &patterns, format!("zkta_n{n_qubits}_d{depth}"))
}

/// Like [`gen_zkta`] but every cycle is repeated once (A, A, B, B, ...), so
/// consecutive CX pairs can be rewritten as RZZ blocks. `depth` counts CX
/// layers and must be even.
pub fn gen_zkta_doubled(n_qubits: usize, depth: usize) -> Result<Program> {
    if depth % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "doubled attack circuit needs an even depth, got {depth}"
        )));
    }
    let patterns: Vec<usize> = (0..depth).map(|c| (c / 2) % 2).collect();
    zkta_from_patterns(n_qubits, &patterns, format!("zkta2_n{n_qubits}_d{depth}"))
}

pub fn disguise_as_qaoa(p: &Program) -> Result<(Program, Graph)> {
    disguise_as_qaoa_with(p, DEFAULT_DISGUISE_GAMMA, DEFAULT_DISGUISE_BETA)
}

/// Rewrites a CX-only circuit as a QAOA-looking one. Consecutive CX layers
/// must match pairwise; each pair becomes CX, RZ(2 gamma) on the targets, CX.
/// An H layer is prepended and an H, RZ(2 beta), H mixer appended before
/// measuring every qubit.
pub fn disguise_as_qaoa_with(p: &Program, gamma: f64, beta: f64) -> Result<(Program, Graph)> {
    let mut cx_layers: Vec<Vec<(usize, usize)>> = Vec::new();
    for (li, layer) in p.layers.iter().enumerate() {
        let mut cx = Vec::new();
        for g in layer {
            match g {
                Gate::Cx(c, t) => cx.push((*c, *t)),
                Gate::Measure { .. } | Gate::Barrier(_) => {}
                other => {
                    return Err(Error::NotDisguisable(format!(
                        "layer {li} holds non-CX gate {other:?}"
                    )))
                }
            }
        }
        if !cx.is_empty() {
            cx_layers.push(cx);
        }
    }
    if cx_layers.len() % 2 != 0 {
        return Err(Error::NotDisguisable(format!(
            "{} CX layers cannot be paired",
            cx_layers.len()
        )));
    }
    let mut edges = BTreeSet::new();
    for (k, pair) in cx_layers.chunks(2).enumerate() {
        let mut a = pair[0].clone();
        let mut b = pair[1].clone();
        a.sort_unstable();
        b.sort_unstable();
        if a != b {
            return Err(Error::NotDisguisable(format!(
                "CX layers {} and {} differ",
                2 * k,
                2 * k + 1
            )));
        }
        for &(c, t) in &a {
            edges.insert((c.min(t), c.max(t)));
        }
    }

    let n = p.n_qubits;
    let mut layers: Vec<Vec<Gate>> = Vec::new();
    let all = |f: &dyn Fn(usize) -> Gate| (0..n).map(f).collect::<Vec<_>>();
    if n > 0 {
        layers.push(all(&Gate::H));
    }
    for pair in cx_layers.chunks(2) {
        let cx: Vec<Gate> = pair[0].iter().map(|&(c, t)| Gate::Cx(c, t)).collect();
        let rz: Vec<Gate> = pair[0].iter().map(|&(_, t)| Gate::Rz(t, 2.0 * gamma)).collect();
        layers.push(cx.clone());
        layers.push(rz);
        layers.push(pair[1].iter().map(|&(c, t)| Gate::Cx(c, t)).collect());
    }
    if n > 0 {
        layers.push(all(&Gate::H));
        layers.push(all(&|q| Gate::Rz(q, 2.0 * beta)));
        layers.push(all(&Gate::H));
        layers.push(all(&|q| Gate::Measure { qubit: q, clbit: q }));
    }
    let out = Program {
        id: format!("{}_qaoa", p.id),
        n_qubits: n,
        n_clbits: n,
        layers,
        requested_trials: p.requested_trials,
    };
    out.validate()?;
    let graph = Graph {
        n_nodes: n,
        edges: edges.into_iter().map(|(u, v)| Edge { u, v, w: 1.0 }).collect(),
    };
    Ok((out, graph))
}
