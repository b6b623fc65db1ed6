//! Fixtures shared by the benchmarks.

use tracebo_core::cocabo::pattern_space;
use tracebo_core::gp::GpDataset;
use tracebo_core::harness::execute;
use tracebo_core::ExperimentSpec;

/// The dataset a baseline run has seen after `n` trials (`n >= 5`).
pub fn run_dataset(n: usize, seed: u64) -> GpDataset {
    let mut spec = ExperimentSpec::baseline().with_seed(seed);
    spec.config.n_iter = n.saturating_sub(spec.config.n_init);
    let result = execute(&spec).expect("baseline run");
    let inputs = result.history.iter().map(|r| r.input.clone()).collect();
    let targets = result.history.iter().map(|r| r.normalized_reward).collect();
    GpDataset::from_parts(pattern_space(), inputs, targets).expect("valid dataset")
}
