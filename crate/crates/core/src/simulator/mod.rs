pub mod distribution;
pub mod noise;
pub mod sampler;
pub mod statevector;

pub use distribution::Distribution;
pub use noise::{gen_noise_profile, Calibration, CalibrationScenario, ChiEntry, NoiseParams, NoiseProfile};
pub use sampler::{cx_footprint, relative_fidelity, sample_noisy, simulate_ideal, QUBIT_CAP};
pub use statevector::{Pauli, StateVector};
