//! Fixtures shared by the benchmarks.

use bmfix::scenarios::{random_finite, squared_line_example};
use bmfix::{BMetricSpace, Instance, Point, PointSet};

pub fn squared_line_instance() -> Instance {
    squared_line_example()
        .build()
        .expect("built-in scenario is valid")
}

pub fn generated_instance(seed: u64, n: usize) -> Instance {
    random_finite(seed, n, 2.0, 0.7)
        .and_then(|g| g.scenario.build())
        .expect("generator succeeds")
}

/// Two interleaved grids of `n` points on the squared line.
pub fn grid_sets(n: usize) -> (BMetricSpace, PointSet, PointSet) {
    let space = BMetricSpace::power(1, 2.0).expect("valid space");
    let a = (0..n).map(|i| Point::scalar(i as f64 / n as f64)).collect();
    let b = (0..n)
        .map(|i| Point::scalar((i as f64 + 0.5) / n as f64))
        .collect();
    let a = PointSet::new(&space, a).expect("distinct");
    let b = PointSet::new(&space, b).expect("distinct");
    (space, a, b)
}
