//! b-metric spaces: a distance that satisfies identity and symmetry, with the
//! triangle inequality relaxed to `d(x, y) <= s * (d(x, z) + d(z, y))` for a
//! fixed coefficient `s >= 1`.
//!
//! Two kinds of space are supported:
//!
//! * **power spaces** on `R^k`, where `d(x, y) = |x - y|^p` (Euclidean norm).
//!   For `p >= 1` the coefficient is `2^(p-1)`; for `p < 1` the distance is a
//!   metric and `s = 1`.
//! * **matrix spaces** on `{0, .., n-1}`, where the distance is read from an
//!   explicit symmetric matrix. These carry every exhaustive test in the crate.
//!
//! Axioms are never assumed for matrix spaces; call
//! [`BMetricSpace::verify_axioms`] to check them on a sample.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Coordinate tolerance used when deciding whether two real-vector points
/// coincide.
pub const COORD_TOL: f64 = 1e-12;

/// Default relative slack used by comparisons on formula-backed distances.
pub const REL_TOL: f64 = 1e-12;

/// A point of a space: either coordinates in `R^k` or an index into a finite
/// point list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Point {
    Id(usize),
    Coords(Vec<f64>),
}

impl Point {
    pub fn scalar(x: f64) -> Self {
        Point::Coords(vec![x])
    }

    pub fn as_id(&self) -> Option<usize> {
        match self {
            Point::Id(i) => Some(*i),
            Point::Coords(_) => None,
        }
    }

    pub fn as_coords(&self) -> Option<&[f64]> {
        match self {
            Point::Id(_) => None,
            Point::Coords(c) => Some(c),
        }
    }
}

impl fmt::Display for Point {
    /// Ids print as the bare index, coordinates semicolon-joined.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Id(i) => write!(f, "{i}"),
            Point::Coords(c) => {
                for (k, x) in c.iter().enumerate() {
                    if k > 0 {
                        f.write_str(";")?;
                    }
                    f.write_str(&crate::fmt::sig17(*x))?;
                }
                Ok(())
            }
        }
    }
}

/// The carrier set and distance formula of a space.
#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    /// `R^dim` with `d(x, y) = |x - y|^p`.
    Power { dim: usize, p: f64 },
    /// `{0, .., n-1}` with a row-major `n * n` distance table.
    Matrix { n: usize, table: Vec<f64> },
}

/// JSON carrier for matrix spaces: `{"n": int, "s": float, "d": [[...]]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub n: usize,
    pub s: f64,
    pub d: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BMetricSpace {
    domain: Domain,
    s: f64,
}

/// Which axiom a violation refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axiom {
    Identity,
    Symmetry,
    RelaxedTriangle,
}

/// One failed axiom instance. For the relaxed triangle the witnesses are
/// `(x, y, z)` with `z` the intermediate point; `lhs = d(x, y)` and
/// `rhs = s * (d(x, z) + d(z, y))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomViolation {
    pub axiom: Axiom,
    pub witnesses: Vec<Point>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub passed: bool,
    pub violations: Vec<AxiomViolation>,
}

impl BMetricSpace {
    /// Real-vector space of the given dimension with `d(x, y) = |x - y|^p`.
    pub fn power(dim: usize, p: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "dimension must be positive"));
        }
        if !(p.is_finite() && p > 0.0) {
            return Err(invalid("p", format!("exponent must be positive, got {p}")));
        }
        let s = if p > 1.0 { (p - 1.0).exp2() } else { 1.0 };
        Ok(Self {
            domain: Domain::Power { dim, p },
            s,
        })
    }

    /// Finite space on `{0, .., n-1}` reading distances from `matrix`.
    ///
    /// The matrix must be square, symmetric (bit-exact), have a zero diagonal
    /// and strictly positive off-diagonal entries. The relaxed triangle
    /// inequality is *not* checked here.
    pub fn matrix(matrix: &[Vec<f64>], s: f64) -> Result<Self> {
        check_s(s)?;
        let n = matrix.len();
        if n == 0 {
            return Err(invalid("n", "matrix space needs at least one point"));
        }
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(Error::MatrixShape {
                    row: i,
                    expected: n,
                    found: row.len(),
                });
            }
        }
        for i in 0..n {
            for j in 0..n {
                let v = matrix[i][j];
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::NegativeEntry(i, j));
                }
                if i == j {
                    if v != 0.0 {
                        return Err(Error::NonzeroDiagonal(i));
                    }
                    continue;
                }
                if i < j {
                    if v != matrix[j][i] {
                        return Err(Error::Asymmetric(i, j));
                    }
                    if v == 0.0 {
                        return Err(Error::ZeroOffDiagonal(i, j));
                    }
                }
            }
        }
        let table = matrix.iter().flatten().copied().collect();
        Ok(Self {
            domain: Domain::Matrix { n, table },
            s,
        })
    }

    pub fn from_matrix_spec(spec: &MatrixSpec) -> Result<Self> {
        if spec.d.len() != spec.n {
            return Err(invalid(
                "n",
                format!(
                    "declared {} points but matrix has {} rows",
                    spec.n,
                    spec.d.len()
                ),
            ));
        }
        Self::matrix(&spec.d, spec.s)
    }

    pub fn from_matrix_json(json: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(json);
        let spec: MatrixSpec = serde_path_to_error::deserialize(de).map_err(|e| Error::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        Self::from_matrix_spec(&spec)
    }

    pub fn to_matrix_spec(&self) -> Option<MatrixSpec> {
        match &self.domain {
            Domain::Matrix { n, table } => Some(MatrixSpec {
                n: *n,
                s: self.s,
                d: table.chunks(*n).map(<[f64]>::to_vec).collect(),
            }),
            Domain::Power { .. } => None,
        }
    }

    /// Same distance, different declared coefficient.
    pub fn with_s(mut self, s: f64) -> Result<Self> {
        check_s(s)?;
        self.s = s;
        Ok(self)
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.domain, Domain::Matrix { .. })
    }

    /// Number of points of a finite space.
    pub fn len(&self) -> Option<usize> {
        match self.domain {
            Domain::Matrix { n, .. } => Some(n),
            Domain::Power { .. } => None,
        }
    }

    /// Every point of a finite space, in id order.
    pub fn points(&self) -> Option<Vec<Point>> {
        self.len().map(|n| (0..n).map(Point::Id).collect())
    }

    /// Checks that `x` is a well-formed point of this space.
    pub fn check_point(&self, x: &Point) -> Result<()> {
        let outside = |reason: String| Error::PointOutsideSpace {
            point: x.to_string(),
            reason,
        };
        match (&self.domain, x) {
            (Domain::Matrix { n, .. }, Point::Id(i)) => {
                if i < n {
                    Ok(())
                } else {
                    Err(outside(format!("id out of range 0..{n}")))
                }
            }
            (Domain::Power { dim, .. }, Point::Coords(c)) => {
                if c.len() != *dim {
                    Err(outside(format!(
                        "expected {dim} coordinates, found {}",
                        c.len()
                    )))
                } else if c.iter().any(|v| !v.is_finite()) {
                    Err(outside("coordinates must be finite".into()))
                } else {
                    Ok(())
                }
            }
            (Domain::Matrix { .. }, Point::Coords(_)) => {
                Err(outside("finite space expects a point id".into()))
            }
            (Domain::Power { .. }, Point::Id(_)) => {
                Err(outside("real-vector space expects coordinates".into()))
            }
        }
    }

    /// Distance between two points of this space.
    ///
    /// # Panics
    ///
    /// Panics if the points do not match the domain kind; construct points
    /// through [`BMetricSpace::check_point`] or the validated containers.
    pub fn dist(&self, x: &Point, y: &Point) -> f64 {
        match (&self.domain, x, y) {
            (Domain::Matrix { n, table }, Point::Id(i), Point::Id(j)) => table[i * n + j],
            (Domain::Power { p, .. }, Point::Coords(a), Point::Coords(b)) => {
                // (a - b)^2 == (b - a)^2 bit-for-bit, so this is exactly symmetric.
                let sq: f64 = a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum();
                power_of_squared(sq, *p)
            }
            _ => panic!("point kind does not match the space: {x} vs {y}"),
        }
    }

    /// Whether two points are the same point: equal ids, or coordinates equal
    /// within [`COORD_TOL`].
    pub fn same_point(&self, x: &Point, y: &Point) -> bool {
        match (x, y) {
            (Point::Id(i), Point::Id(j)) => i == j,
            (Point::Coords(a), Point::Coords(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(u, v)| (u - v).abs() <= COORD_TOL)
            }
            _ => false,
        }
    }

    /// Checks identity, symmetry and the relaxed triangle inequality over
    /// every ordered pair and triple of `sample`. `tol` is an additive slack
    /// on the triangle comparison. All violations are reported, in
    /// lexicographic index order.
    pub fn verify_axioms(&self, sample: &[Point], tol: f64) -> AxiomReport {
        let n = sample.len();
        let mut violations = Vec::new();
        let d: Vec<f64> = sample
            .iter()
            .flat_map(|x| sample.iter().map(move |y| (x, y)))
            .map(|(x, y)| self.dist(x, y))
            .collect();
        let at = |i: usize, j: usize| d[i * n + j];

        for i in 0..n {
            for j in 0..n {
                let dij = at(i, j);
                let identical = sample[i] == sample[j];
                let coincide = self.same_point(&sample[i], &sample[j]);
                // equal points must be at distance exactly 0; distance 0
                // forces the points to coincide.
                if (identical && dij != 0.0) || (dij == 0.0 && !coincide) {
                    violations.push(AxiomViolation {
                        axiom: Axiom::Identity,
                        witnesses: vec![sample[i].clone(), sample[j].clone()],
                        lhs: dij,
                        rhs: 0.0,
                    });
                }
                if i < j && dij != at(j, i) {
                    violations.push(AxiomViolation {
                        axiom: Axiom::Symmetry,
                        witnesses: vec![sample[i].clone(), sample[j].clone()],
                        lhs: dij,
                        rhs: at(j, i),
                    });
                }
            }
        }

        for i in 0..n {
            for j in 0..n {
                let lhs = at(i, j);
                for k in 0..n {
                    let rhs = self.s * (at(i, k) + at(k, j));
                    if lhs > rhs + tol {
                        violations.push(AxiomViolation {
                            axiom: Axiom::RelaxedTriangle,
                            witnesses: vec![
                                sample[i].clone(),
                                sample[j].clone(),
                                sample[k].clone(),
                            ],
                            lhs,
                            rhs,
                        });
                    }
                }
            }
        }

        AxiomReport {
            passed: violations.is_empty(),
            violations,
        }
    }

    /// Smallest `s` for which the relaxed triangle inequality holds on
    /// `sample`, clamped below at 1.
    pub fn estimate_min_s(&self, sample: &[Point]) -> Result<f64> {
        let n = sample.len();
        let d: Vec<f64> = sample
            .iter()
            .flat_map(|x| sample.iter().map(move |y| (x, y)))
            .map(|(x, y)| self.dist(x, y))
            .collect();
        if !d.iter().any(|&v| v > 0.0) {
            return Err(Error::DegenerateSample);
        }
        let mut best = 1.0_f64;
        for i in 0..n {
            for j in 0..n {
                let num = d[i * n + j];
                if i == j || num == 0.0 {
                    continue;
                }
                for k in 0..n {
                    let den = d[i * n + k] + d[k * n + j];
                    if den > 0.0 {
                        best = best.max(num / den);
                    }
                }
            }
        }
        Ok(best)
    }

    /// `REL_TOL` times the largest pairwise distance in `sample`.
    pub fn relative_tolerance(&self, sample: &[Point]) -> f64 {
        let mut max = 0.0_f64;
        for (i, x) in sample.iter().enumerate() {
            for y in &sample[i + 1..] {
                max = max.max(self.dist(x, y));
            }
        }
        REL_TOL * max
    }
}

fn check_s(s: f64) -> Result<()> {
    if s.is_finite() && s >= 1.0 {
        Ok(())
    } else {
        Err(invalid(
            "s",
            format!("relaxation coefficient must be >= 1, got {s}"),
        ))
    }
}

fn power_of_squared(sq: f64, p: f64) -> f64 {
    if p == 2.0 {
        sq
    } else if p == 1.0 {
        sq.sqrt()
    } else {
        sq.powf(0.5 * p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> Vec<Point> {
        xs.iter().copied().map(Point::scalar).collect()
    }

    #[test]
    fn power_space_coefficients() {
        assert_eq!(BMetricSpace::power(1, 2.0).unwrap().s(), 2.0);
        assert_eq!(BMetricSpace::power(1, 1.0).unwrap().s(), 1.0);
        assert_eq!(BMetricSpace::power(2, 3.0).unwrap().s(), 4.0);
        assert_eq!(BMetricSpace::power(1, 0.5).unwrap().s(), 1.0);
        assert!(BMetricSpace::power(1, 0.0).is_err());
        assert!(BMetricSpace::power(1, -1.0).is_err());
        assert!(BMetricSpace::power(0, 2.0).is_err());
    }

    #[test]
    fn squared_distance_on_the_line() {
        let sp = BMetricSpace::power(1, 2.0).unwrap();
        assert_eq!(sp.dist(&Point::scalar(1.0), &Point::scalar(3.0)), 4.0);
    }

    #[test]
    fn matrix_space_validation() {
        assert!(BMetricSpace::matrix(&[vec![0.0, 1.0], vec![1.0, 0.0]], 1.0).is_ok());
        let line = vec![
            vec![0.0, 1.0, 4.0],
            vec![1.0, 0.0, 1.0],
            vec![4.0, 1.0, 0.0],
        ];
        let sp = BMetricSpace::matrix(&line, 2.0).unwrap();
        assert!(sp.verify_axioms(&sp.points().unwrap(), 0.0).passed);

        assert_eq!(
            BMetricSpace::matrix(&[vec![0.0, 1.0], vec![2.0, 0.0]], 1.0),
            Err(Error::Asymmetric(0, 1))
        );
        assert_eq!(
            BMetricSpace::matrix(&[vec![0.0, -1.0], vec![-1.0, 0.0]], 1.0),
            Err(Error::NegativeEntry(0, 1))
        );
        assert_eq!(
            BMetricSpace::matrix(&[vec![0.0, 1.0], vec![1.0, 0.5]], 1.0),
            Err(Error::NonzeroDiagonal(1))
        );
        assert_eq!(
            BMetricSpace::matrix(&[vec![0.0, 0.0], vec![0.0, 0.0]], 1.0),
            Err(Error::ZeroOffDiagonal(0, 1))
        );
        assert!(matches!(
            BMetricSpace::matrix(&[vec![0.0, 1.0], vec![1.0]], 1.0),
            Err(Error::MatrixShape { row: 1, .. })
        ));
        assert!(BMetricSpace::matrix(&[vec![0.0]], 0.5).is_err());
    }

    #[test]
    fn matrix_json() {
        let sp = BMetricSpace::from_matrix_json(r#"{"n": 2, "s": 1.0, "d": [[0, 1.5], [1.5, 0]]}"#)
            .unwrap();
        assert_eq!(sp.dist(&Point::Id(0), &Point::Id(1)), 1.5);
        let err = BMetricSpace::from_matrix_json(r#"{"n": 2, "d": [[0, 1], [1, 0]]}"#);
        assert!(matches!(err, Err(Error::Schema { .. })));
        let err = BMetricSpace::from_matrix_json(r#"{"n": 3, "s": 1, "d": [[0, 1], [1, 0]]}"#);
        assert!(err.is_err());
    }

    #[test]
    fn axioms_squared_line() {
        let sp = BMetricSpace::power(1, 2.0).unwrap();
        let sample = line(&[0.0, 1.0, 2.0]);
        assert!(sp.verify_axioms(&sample, 0.0).passed);

        let tight = sp.with_s(1.9).unwrap();
        let report = tight.verify_axioms(&sample, 0.0);
        assert!(!report.passed);
        let v = &report.violations[0];
        assert_eq!(v.axiom, Axiom::RelaxedTriangle);
        assert_eq!(
            v.witnesses,
            vec![Point::scalar(0.0), Point::scalar(2.0), Point::scalar(1.0)]
        );
        assert_eq!(v.lhs, 4.0);
        assert!((v.rhs - 3.8).abs() < 1e-15);
    }

    #[test]
    fn singleton_sample_passes() {
        let sp = BMetricSpace::power(3, 0.7).unwrap();
        let report = sp.verify_axioms(&[Point::Coords(vec![1.0, 2.0, 3.0])], 0.0);
        assert!(report.passed);
    }

    #[test]
    fn identity_violation_detected() {
        // (1e-11)^30 underflows, so distinct points sit at distance 0
        let sp = BMetricSpace::power(1, 30.0).unwrap();
        let report = sp.verify_axioms(&line(&[0.0, 1e-11]), 0.0);
        assert!(!report.passed);
        assert_eq!(report.violations[0].axiom, Axiom::Identity);
    }

    #[test]
    fn min_s_examples() {
        let metric = BMetricSpace::power(1, 1.0).unwrap();
        assert_eq!(metric.estimate_min_s(&line(&[0.0, 1.0, 2.0])).unwrap(), 1.0);

        let sq = BMetricSpace::power(1, 2.0).unwrap();
        assert_eq!(sq.estimate_min_s(&line(&[0.0, 1.0, 2.0])).unwrap(), 2.0);
        let s = sq.estimate_min_s(&line(&[0.0, 1.0, 10.0])).unwrap();
        assert_eq!(s, 100.0 / 82.0);

        assert_eq!(
            sq.estimate_min_s(&line(&[3.0, 3.0])),
            Err(Error::DegenerateSample)
        );
        assert_eq!(
            sq.estimate_min_s(&line(&[3.0])),
            Err(Error::DegenerateSample)
        );
    }

    #[test]
    fn check_point_rejects_mismatches() {
        let sp = BMetricSpace::power(2, 2.0).unwrap();
        assert!(sp.check_point(&Point::Coords(vec![0.0, 1.0])).is_ok());
        assert!(sp.check_point(&Point::Coords(vec![0.0])).is_err());
        assert!(sp.check_point(&Point::Coords(vec![0.0, f64::NAN])).is_err());
        assert!(sp.check_point(&Point::Id(0)).is_err());
        let fin = BMetricSpace::matrix(&[vec![0.0, 1.0], vec![1.0, 0.0]], 1.0).unwrap();
        assert!(fin.check_point(&Point::Id(1)).is_ok());
        assert!(fin.check_point(&Point::Id(2)).is_err());
    }

    #[test]
    fn point_display() {
        assert_eq!(Point::Id(4).to_string(), "4");
        assert_eq!(
            Point::Coords(vec![0.5, -1.0]).to_string(),
            "0.50000000000000000;-1.0000000000000000"
        );
    }
}
