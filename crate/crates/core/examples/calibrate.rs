//! Regenerates the bundled Hanoi calibration.
//!
//! cargo run --release -p qontexts-core --example calibrate [OUT]

use qontexts_core::characterize::{fit_calibration, scenario_rf, DEFAULT_DEPTH};
use qontexts_core::simulator::{CalibrationScenario, NoiseParams};
use qontexts_core::topology::{make_device, Link, Preset};

fn scenario(name: &str, victim: Link, attacks: &[Link], target_rf: f64) -> CalibrationScenario {
    CalibrationScenario {
        name: name.into(),
        victim,
        attacks: attacks.to_vec(),
        target_rf,
    }
}

fn main() -> qontexts_core::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/noise/hanoi27_calibrated.json").into());
    let dev = make_device(&Preset::Hanoi27)?;
    // The pair and quadruple scenarios share the (18-21, 23-24) coefficient,
    // so the pair goes first and the quadruple fits only its other links.
    let scenarios = vec![
        scenario("pair", Link(18, 21), &[Link(23, 24)], 0.89),
        scenario("triple", Link(12, 15), &[Link(13, 14), Link(17, 18)], 0.75),
        scenario(
            "quadruple",
            Link(23, 24),
            &[Link(22, 25), Link(18, 21), Link(16, 19)],
            0.64,
        ),
    ];
    let cal = fit_calibration(&dev, &NoiseParams::default(), 2024, DEFAULT_DEPTH, 8000, scenarios)?;
    for sc in &cal.scenarios {
        println!("{:<10} rf {:.4} (target {})", sc.name, scenario_rf(&dev, &cal, sc, cal.base_seed)?, sc.target_rf);
    }
    for e in &cal.pinned {
        println!("pinned {} x {} = {:.5}", e.a, e.b, e.chi);
    }
    std::fs::write(&out, cal.to_json()? + "\n")?;
    println!("wrote {out}");
    Ok(())
}
