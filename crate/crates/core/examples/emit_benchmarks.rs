//! Writes the bundled benchmark QASM files from their generators.

use std::path::Path;

use qontexts_core::circuit::emit_qasm;
use qontexts_core::scenario::generate_benchmarks;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/benchmarks");
    std::fs::create_dir_all(&dir)?;
    for p in generate_benchmarks()? {
        let path = dir.join(format!("{}.qasm", p.id));
        std::fs::write(&path, emit_qasm(&p))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
