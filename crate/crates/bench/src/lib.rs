//! Shared inputs for the pipeline benchmarks.

use schedtrace_core::synthgen::{generate_trace, random_scenario, RandomParams};

/// A synthetic trace of roughly `runs * 2.15` events, deterministic in `seed`.
pub fn synthetic_trace(seed: u64, runs: usize) -> String {
    let params = RandomParams { n_tasks: 16, n_runs: runs, ..RandomParams::default() };
    generate_trace(&random_scenario(seed, &params)).expect("random scenarios are valid").0
}
