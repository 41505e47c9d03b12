//! Closed-form security and latency models, a job-queue simulation and QAOA
//! landscape sweeps.

pub mod landscape;
pub mod latency;
pub mod queue;
pub mod resilience;

pub use landscape::{expected_cut, landscape_sweep, Landscape, LandscapeExec};
pub use latency::{tau, tau_isolated, tau_multiprog, tau_qontexts, throughput, LatencyParams, Mode};
pub use queue::{arrival_times, simulate_mode, simulate_queue, QueueParams, QueueStats};
pub use resilience::{
    min_contexts, p_at_least, p_baseline, p_exactly, resilience_ratio, ResilienceParams, MAX_CONTEXTS,
};
