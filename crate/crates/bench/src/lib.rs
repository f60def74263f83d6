//! Shared fixtures for the benchmarks.

use pcsmri::phantom::{simulate_case, Case};
use pcsmri::{CaseSpec, Organ};

/// Noisy brain-preset case on a `size x size` grid.
pub fn fixture(size: usize) -> Case {
    let mut spec = CaseSpec::preset(Organ::Brain, size, 1);
    spec.noise_sigma = 0.01;
    simulate_case(&spec).expect("fixture case")
}
