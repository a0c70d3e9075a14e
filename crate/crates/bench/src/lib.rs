//! Fixtures shared by the benchmarks.

use mildcone::eigensolver::sine_start;
use mildcone::problem::presets::heat_example;
use mildcone::{ProblemInstance, Trajectory};

/// The heat example at grid `(n, m)` with its sine starting iterate.
pub fn example(n: usize, m: usize) -> (ProblemInstance, Trajectory) {
    let p = heat_example(n, m, 1.0).expect("odd n");
    let y = sine_start(p.grid.length, n, m, 1.0).expect("valid grid");
    (p, y)
}
