//! Finite point sets, point-to-set distance and the Hausdorff–Pompeiu
//! distance.
//!
//! Finite nonempty sets are closed and bounded, so every infimum and supremum
//! below is attained and computed by exhaustive scan.

use serde::{Deserialize, Serialize};

use crate::bspace::{BMetricSpace, Point};
use crate::error::{Error, Result};

/// A finite nonempty set of distinct points of some space. Element order is
/// preserved and used for tie-breaking.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointSet {
    elements: Vec<Point>,
}

/// Result of a point-to-set distance query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Nearest {
    pub distance: f64,
    /// Index of the first element attaining the minimum.
    pub index: usize,
}

impl PointSet {
    /// Validates membership in `space`, nonemptiness, and that no two
    /// elements are at distance zero.
    pub fn new(space: &BMetricSpace, elements: Vec<Point>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::EmptySet);
        }
        for x in &elements {
            space.check_point(x)?;
        }
        for (i, x) in elements.iter().enumerate() {
            for (j, y) in elements.iter().enumerate().skip(i + 1) {
                if space.dist(x, y) == 0.0 {
                    return Err(Error::DuplicateElement(i, j));
                }
            }
        }
        Ok(Self { elements })
    }

    /// Like [`PointSet::new`] but silently drops elements at distance zero
    /// from an earlier one.
    pub fn dedup(space: &BMetricSpace, elements: Vec<Point>) -> Result<Self> {
        let mut kept: Vec<Point> = Vec::with_capacity(elements.len());
        for x in elements {
            space.check_point(&x)?;
            if kept.iter().all(|k| space.dist(k, &x) != 0.0) {
                kept.push(x);
            }
        }
        Self::new(space, kept)
    }

    pub fn singleton(space: &BMetricSpace, x: Point) -> Result<Self> {
        Self::new(space, vec![x])
    }

    pub fn elements(&self) -> &[Point] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Exact membership: some element at distance zero from `x`.
    pub fn contains(&self, space: &BMetricSpace, x: &Point) -> bool {
        self.elements.iter().any(|e| space.dist(x, e) == 0.0)
    }
}

/// `d(x, C) = min_{c in C} d(x, c)`, with the attaining index (smallest on
/// ties).
pub fn dist_point_set(space: &BMetricSpace, x: &Point, set: &PointSet) -> Nearest {
    let mut best = Nearest {
        distance: f64::INFINITY,
        index: 0,
    };
    for (i, c) in set.elements.iter().enumerate() {
        let d = space.dist(x, c);
        if d < best.distance {
            best = Nearest {
                distance: d,
                index: i,
            };
        }
    }
    best
}

/// `sup_{a in A} d(a, B)`.
pub fn directed_hausdorff(space: &BMetricSpace, a: &PointSet, b: &PointSet) -> f64 {
    a.elements
        .iter()
        .map(|x| dist_point_set(space, x, b).distance)
        .fold(0.0, f64::max)
}

/// Hausdorff–Pompeiu distance `h(A, B)`; exactly symmetric.
pub fn hausdorff(space: &BMetricSpace, a: &PointSet, b: &PointSet) -> f64 {
    directed_hausdorff(space, a, b).max(directed_hausdorff(space, b, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(space: &BMetricSpace, xs: &[f64]) -> PointSet {
        PointSet::new(space, xs.iter().copied().map(Point::scalar).collect()).unwrap()
    }

    #[test]
    fn construction_invariants() {
        let sp = BMetricSpace::power(1, 2.0).unwrap();
        assert_eq!(PointSet::new(&sp, vec![]), Err(Error::EmptySet));
        assert_eq!(
            PointSet::new(
                &sp,
                vec![Point::scalar(1.0), Point::scalar(2.0), Point::scalar(1.0)]
            ),
            Err(Error::DuplicateElement(0, 2))
        );
        assert!(PointSet::new(&sp, vec![Point::Id(0)]).is_err());
        let d = PointSet::dedup(&sp, vec![Point::scalar(1.0), Point::scalar(1.0)]).unwrap();
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn point_to_set() {
        let metric = BMetricSpace::power(1, 1.0).unwrap();
        let c = set(&metric, &[1.0, 2.0]);
        assert_eq!(
            dist_point_set(&metric, &Point::scalar(0.0), &c),
            Nearest {
                distance: 1.0,
                index: 0
            }
        );
        assert_eq!(
            dist_point_set(&metric, &Point::scalar(2.0), &c).distance,
            0.0
        );

        let sq = BMetricSpace::power(1, 2.0).unwrap();
        let c = set(&sq, &[0.0, 0.9]);
        let near = dist_point_set(&sq, &Point::scalar(1.0), &c);
        assert_eq!(near.index, 1);
        assert!((near.distance - 0.01).abs() < 1e-15);
    }

    #[test]
    fn ties_break_on_smallest_index() {
        let metric = BMetricSpace::power(1, 1.0).unwrap();
        let c = set(&metric, &[2.0, 0.0]);
        assert_eq!(dist_point_set(&metric, &Point::scalar(1.0), &c).index, 0);
    }

    #[test]
    fn hausdorff_examples() {
        let metric = BMetricSpace::power(1, 1.0).unwrap();
        let a = set(&metric, &[0.0, 1.0]);
        let b = set(&metric, &[0.0, 2.0]);
        assert_eq!(hausdorff(&metric, &a, &a), 0.0);
        assert_eq!(hausdorff(&metric, &a, &b), 1.0);

        let sq = BMetricSpace::power(1, 2.0).unwrap();
        assert_eq!(hausdorff(&sq, &set(&sq, &[0.0]), &set(&sq, &[1.0])), 1.0);
    }

    #[test]
    fn containment_gives_zero_directed_distance() {
        let sq = BMetricSpace::power(1, 2.0).unwrap();
        let a = set(&sq, &[0.5, 1.5]);
        let b = set(&sq, &[0.5, 1.5, 3.0]);
        assert_eq!(directed_hausdorff(&sq, &a, &b), 0.0);
        assert!(directed_hausdorff(&sq, &b, &a) > 0.0);
    }
}
