pub mod generators;
pub mod graph;
pub mod ir;
pub mod qasm;

pub use generators::{
    disguise_as_qaoa, disguise_as_qaoa_with, gen_bv, gen_ghz, gen_microbenchmarks,
    gen_microbenchmarks_with, gen_pea, gen_qaoa_maxcut, gen_zkta, gen_zkta_doubled, microbenchmark_layout,
};
pub use graph::{Edge, Graph};
pub use ir::{Gate, MappedProgram, Program, ProgramBuilder, DEFAULT_TRIALS};
pub use qasm::{emit_qasm, parse_qasm, parse_qasm_named};
