//! Set-valued maps, the quasi-contraction functional `N_{c,q}` and
//! contraction certificates.
//!
//! For a map `T` and coefficients `c, q in [0, 1]`,
//!
//! ```text
//! N_{c,q}(x, y) = max{ d(x,y), c d(x,T(x)), c d(y,T(y)), (q/2)(d(x,T(y)) + d(y,T(x))) }
//! ```
//!
//! and `T` is a quasi-contraction when `h(T(x), T(y)) <= alpha N_{c,q}(x, y)`
//! for all `x, y`. The coefficient `q` is often written `d` in the
//! literature; reports print it as `q`.
//!
//! A certificate records the smallest `alpha` that works on the supplied
//! pairs, alongside the smallest `alpha` for the five-term condition
//! `h(T(x),T(y)) <= alpha max{d(x,y), d(x,T(x)), d(y,T(y)), d(x,T(y)), d(y,T(x))}`.

use std::borrow::Cow;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bspace::{BMetricSpace, Point};
use crate::error::{invalid, Error, Result};
use crate::orbit::{default_beta, gamma_of};
use crate::setops::{dist_point_set, hausdorff, PointSet};

/// Slack allowed when comparing a candidate `alpha` against a computed
/// `alpha_min`.
pub const ALPHA_SLACK: f64 = 1e-12;

/// One affine branch `x -> A x + b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineBranch {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl AffineBranch {
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>) -> Self {
        Self { a, b }
    }

    pub fn scalar(a: f64, b: f64) -> Self {
        Self::new(vec![vec![a]], vec![b])
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(row, bi)| row.iter().zip(x).map(|(aij, xj)| aij * xj).sum::<f64>() + bi)
            .collect()
    }
}

/// A map `T: X -> B(X)` with finite images.
#[derive(Clone, Debug, PartialEq)]
pub enum SetValuedMap {
    /// Finite domain: `images[i]` is `T(i)`.
    Table(Vec<PointSet>),
    /// Real-vector domain: `T(x)` is the set of branch outputs.
    Branches(Vec<AffineBranch>),
}

impl SetValuedMap {
    /// Table map over a finite space. Every point id must have a nonempty
    /// image.
    pub fn table(space: &BMetricSpace, images: &BTreeMap<usize, Vec<usize>>) -> Result<Self> {
        let n = space
            .len()
            .ok_or_else(|| Error::InvalidMap("table maps need a finite space".into()))?;
        if let Some(&bad) = images.keys().find(|&&k| k >= n) {
            return Err(Error::InvalidMap(format!(
                "image given for unknown point {bad}"
            )));
        }
        let sets = (0..n)
            .map(|i| {
                let ids = images
                    .get(&i)
                    .ok_or_else(|| Error::InvalidMap(format!("point {i} has no image")))?;
                PointSet::new(space, ids.iter().copied().map(Point::Id).collect())
                    .map_err(|e| Error::InvalidMap(format!("image of {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SetValuedMap::Table(sets))
    }

    pub fn branches(space: &BMetricSpace, branches: Vec<AffineBranch>) -> Result<Self> {
        let dim = match space.domain() {
            crate::bspace::Domain::Power { dim, .. } => *dim,
            crate::bspace::Domain::Matrix { .. } => {
                return Err(Error::InvalidMap(
                    "branch maps need a real-vector space".into(),
                ))
            }
        };
        if branches.is_empty() {
            return Err(Error::InvalidMap("at least one branch is required".into()));
        }
        for (k, br) in branches.iter().enumerate() {
            let square = br.a.len() == dim && br.a.iter().all(|r| r.len() == dim);
            if !square || br.b.len() != dim {
                return Err(Error::InvalidMap(format!(
                    "branch {k} must have a {dim}x{dim} matrix and a length-{dim} offset"
                )));
            }
            if br.a.iter().flatten().chain(&br.b).any(|v| !v.is_finite()) {
                return Err(Error::InvalidMap(format!(
                    "branch {k} has non-finite entries"
                )));
            }
        }
        Ok(SetValuedMap::Branches(branches))
    }

    /// `T(x)`.
    pub fn image(&self, space: &BMetricSpace, x: &Point) -> Result<Cow<'_, PointSet>> {
        match (self, x) {
            (SetValuedMap::Table(sets), Point::Id(i)) => sets
                .get(*i)
                .map(Cow::Borrowed)
                .ok_or_else(|| Error::InvalidMap(format!("point {i} outside the table"))),
            (SetValuedMap::Branches(brs), Point::Coords(c)) => {
                let outs = brs.iter().map(|b| Point::Coords(b.apply(c))).collect();
                PointSet::dedup(space, outs).map(Cow::Owned)
            }
            _ => Err(Error::PointOutsideSpace {
                point: x.to_string(),
                reason: "point kind does not match the map".into(),
            }),
        }
    }

    /// The id -> ids table of a finite map.
    pub fn table_images(&self) -> Option<BTreeMap<usize, Vec<usize>>> {
        match self {
            SetValuedMap::Table(sets) => Some(
                sets.iter()
                    .enumerate()
                    .map(|(i, s)| (i, s.elements().iter().filter_map(Point::as_id).collect()))
                    .collect(),
            ),
            SetValuedMap::Branches(_) => None,
        }
    }

    /// Every `u` with `u in T(u)`, by brute force over a finite space.
    pub fn fixed_points(&self, space: &BMetricSpace) -> Result<Vec<Point>> {
        let pts = space
            .points()
            .ok_or_else(|| invalid("space", "fixed-point enumeration needs a finite space"))?;
        let mut out = Vec::new();
        for u in pts {
            if self.image(space, &u)?.contains(space, &u) {
                out.push(u);
            }
        }
        Ok(out)
    }
}

/// Parameters of a quasi-contraction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiParams {
    pub c: f64,
    pub q: f64,
    pub alpha: f64,
}

impl QuasiParams {
    pub fn new(c: f64, q: f64, alpha: f64) -> Result<Self> {
        check_unit("c", c)?;
        check_unit("q", q)?;
        if !(0.0..1.0).contains(&alpha) {
            return Err(invalid("alpha", format!("must lie in [0, 1), got {alpha}")));
        }
        Ok(Self { c, q, alpha })
    }
}

pub(crate) fn check_unit(name: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(invalid(name, format!("must lie in [0, 1], got {v}")))
    }
}

/// The five set distances entering both functionals for a pair.
#[derive(Clone, Copy, Debug)]
struct PairDistances {
    xy: f64,
    x_tx: f64,
    y_ty: f64,
    x_ty: f64,
    y_tx: f64,
}

impl PairDistances {
    fn compute(space: &BMetricSpace, x: &Point, tx: &PointSet, y: &Point, ty: &PointSet) -> Self {
        Self {
            xy: space.dist(x, y),
            x_tx: dist_point_set(space, x, tx).distance,
            y_ty: dist_point_set(space, y, ty).distance,
            x_ty: dist_point_set(space, x, ty).distance,
            y_tx: dist_point_set(space, y, tx).distance,
        }
    }

    fn n_value(&self, c: f64, q: f64) -> f64 {
        self.xy
            .max(c * self.x_tx)
            .max(c * self.y_ty)
            .max(0.5 * q * (self.x_ty + self.y_tx))
    }

    fn five_term(&self) -> f64 {
        self.xy
            .max(self.x_tx)
            .max(self.y_ty)
            .max(self.x_ty)
            .max(self.y_tx)
    }
}

/// `N_{c,q}(x, y)` with precomputed images.
pub(crate) fn n_value_with_images(
    space: &BMetricSpace,
    c: f64,
    q: f64,
    x: &Point,
    tx: &PointSet,
    y: &Point,
    ty: &PointSet,
) -> f64 {
    PairDistances::compute(space, x, tx, y, ty).n_value(c, q)
}

/// `N_{c,q}(x, y)`.
pub fn n_functional(
    space: &BMetricSpace,
    map: &SetValuedMap,
    c: f64,
    q: f64,
    x: &Point,
    y: &Point,
) -> Result<f64> {
    check_unit("c", c)?;
    check_unit("q", q)?;
    let tx = map.image(space, x)?;
    let ty = map.image(space, y)?;
    Ok(n_value_with_images(space, c, q, x, &tx, y, &ty))
}

/// `max{d(x,y), d(x,T(x)), d(y,T(y)), d(x,T(y)), d(y,T(x))}`.
pub fn five_term_max(
    space: &BMetricSpace,
    map: &SetValuedMap,
    x: &Point,
    y: &Point,
) -> Result<f64> {
    let tx = map.image(space, x)?;
    let ty = map.image(space, y)?;
    Ok(PairDistances::compute(space, x, &tx, y, &ty).five_term())
}

/// Whether a certificate covers the whole space or only sampled pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coverage {
    Exhaustive,
    Empirical,
}

/// Status of a hypothesis that cannot be decided from finitely many samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Assumption {
    #[serde(rename = "holds (finite space)")]
    HoldsFiniteSpace,
    #[serde(rename = "assumed")]
    Assumed,
}

impl Assumption {
    pub fn for_space(space: &BMetricSpace) -> Self {
        if space.is_finite() {
            Assumption::HoldsFiniteSpace
        } else {
            Assumption::Assumed
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assumptions {
    /// Closed-graph continuity of `T`.
    pub map_continuity: Assumption,
    /// Continuity of `x -> d(x, A)` along convergent sequences.
    pub star_continuity: Assumption,
}

/// Verdicts evaluated at `alpha = alpha_min`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateVerdicts {
    /// `alpha q s < 1`: the Picard orbit construction applies.
    #[serde(rename = "thm21_feasible")]
    pub orbit_feasible: bool,
    /// `max{alpha c s, alpha q s} < 1`.
    #[serde(rename = "thm33")]
    pub quasi_contraction: bool,
    /// `s gamma < 1` for the orbit ratio `gamma`, once one is supplied.
    #[serde(rename = "lemma41")]
    pub classical_cauchy: Option<bool>,
    /// `alpha41_min <= 1 / (s + s^2)`.
    #[serde(rename = "thm41")]
    pub five_term: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionCertificate {
    /// `max h(T(x),T(y)) / N_{c,q}(x,y)` over the pairs.
    pub alpha_min: f64,
    /// `max h(T(x),T(y)) / five_term(x,y)` over the pairs.
    #[serde(rename = "alpha41_min")]
    pub alpha_five_term_min: f64,
    pub worst_pair: (Point, Point),
    #[serde(rename = "worst_pair41")]
    pub worst_pair_five_term: (Point, Point),
    pub pairs_checked: usize,
    pub coverage: Coverage,
    pub s: f64,
    pub c: f64,
    pub q: f64,
    pub verdicts: CertificateVerdicts,
    pub assumptions: Assumptions,
}

/// `1 / (s + s^2)`.
pub fn five_term_threshold(s: f64) -> f64 {
    1.0 / (s + s * s)
}

fn verdicts_at(alpha: f64, alpha41: f64, s: f64, c: f64, q: f64) -> CertificateVerdicts {
    let below_one = alpha < 1.0;
    CertificateVerdicts {
        orbit_feasible: below_one && alpha * q * s < 1.0,
        quasi_contraction: below_one && (alpha * c * s).max(alpha * q * s) < 1.0,
        classical_cauchy: None,
        five_term: alpha41 <= five_term_threshold(s),
    }
}

impl ContractionCertificate {
    /// Records the `s gamma < 1` verdict for an orbit ratio.
    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.verdicts.classical_cauchy = Some(self.s * gamma < 1.0);
        self
    }

    /// Recomputes the verdicts from the stored numbers.
    pub fn recomputed_verdicts(&self) -> CertificateVerdicts {
        let mut v = verdicts_at(
            self.alpha_min,
            self.alpha_five_term_min,
            self.s,
            self.c,
            self.q,
        );
        v.classical_cauchy = self.verdicts.classical_cauchy;
        v
    }
}

/// All unordered pairs `(points[i], points[j])` with `i < j`.
pub fn all_pairs(points: &[Point]) -> Vec<(Point, Point)> {
    let mut out = Vec::with_capacity(points.len() * points.len().saturating_sub(1) / 2);
    for (i, x) in points.iter().enumerate() {
        for y in &points[i + 1..] {
            out.push((x.clone(), y.clone()));
        }
    }
    out
}

/// Smallest feasible `alpha` over `pairs` for both the `N_{c,q}` and the
/// five-term conditions. Ties keep the first pair.
pub fn certify(
    space: &BMetricSpace,
    map: &SetValuedMap,
    pairs: &[(Point, Point)],
    c: f64,
    q: f64,
) -> Result<ContractionCertificate> {
    check_unit("c", c)?;
    check_unit("q", q)?;
    if pairs.is_empty() {
        return Err(Error::NoPairs);
    }
    let mut alpha_min = f64::NEG_INFINITY;
    let mut alpha41 = f64::NEG_INFINITY;
    let mut worst = 0;
    let mut worst41 = 0;
    for (k, (x, y)) in pairs.iter().enumerate() {
        space.check_point(x)?;
        space.check_point(y)?;
        if space.same_point(x, y) || space.dist(x, y) == 0.0 {
            return Err(Error::EqualPair(k));
        }
        let tx = map.image(space, x)?;
        let ty = map.image(space, y)?;
        let h = hausdorff(space, &tx, &ty);
        let pd = PairDistances::compute(space, x, &tx, y, &ty);
        let ratio = h / pd.n_value(c, q);
        if ratio > alpha_min {
            alpha_min = ratio;
            worst = k;
        }
        let ratio41 = h / pd.five_term();
        if ratio41 > alpha41 {
            alpha41 = ratio41;
            worst41 = k;
        }
    }

    let s = space.s();
    let coverage = if covers_all_pairs(space, pairs) {
        Coverage::Exhaustive
    } else {
        Coverage::Empirical
    };
    let assumption = Assumption::for_space(space);
    Ok(ContractionCertificate {
        alpha_min,
        alpha_five_term_min: alpha41,
        worst_pair: pairs[worst].clone(),
        worst_pair_five_term: pairs[worst41].clone(),
        pairs_checked: pairs.len(),
        coverage,
        s,
        c,
        q,
        verdicts: verdicts_at(alpha_min, alpha41, s, c, q),
        assumptions: Assumptions {
            map_continuity: assumption,
            star_continuity: assumption,
        },
    })
}

/// [`certify`] over every pair of a finite space.
pub fn certify_exhaustive(
    space: &BMetricSpace,
    map: &SetValuedMap,
    c: f64,
    q: f64,
) -> Result<ContractionCertificate> {
    let pts = space
        .points()
        .ok_or_else(|| invalid("space", "exhaustive certification needs a finite space"))?;
    if pts.len() < 2 {
        return Err(Error::NoPairs);
    }
    certify(space, map, &all_pairs(&pts), c, q)
}

fn covers_all_pairs(space: &BMetricSpace, pairs: &[(Point, Point)]) -> bool {
    let Some(n) = space.len() else {
        return false;
    };
    let mut seen = vec![false; n * n];
    for (x, y) in pairs {
        if let (Some(i), Some(j)) = (x.as_id(), y.as_id()) {
            let (lo, hi) = (i.min(j), i.max(j));
            seen[lo * n + hi] = true;
        }
    }
    (0..n).all(|i| (i + 1..n).all(|j| seen[i * n + j]))
}

/// Per-result applicability for a concrete `alpha`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisVerdicts {
    pub alpha: f64,
    pub s: f64,
    pub c: f64,
    pub q: f64,
    /// `alpha in [0, 1)` and `alpha >= alpha_min`.
    pub contraction_holds: bool,
    /// `alpha q s`.
    pub orbit_product: f64,
    /// `max{alpha c s, alpha q s}`.
    pub quasi_product: f64,
    /// `1 / (s + s^2)`.
    pub five_term_threshold: f64,
    pub alpha41_min: f64,
    /// Orbit ratio for the default `beta`, when the orbit construction applies.
    pub gamma: Option<f64>,
    #[serde(rename = "thm31")]
    pub continuous_map: bool,
    #[serde(rename = "thm32")]
    pub star_continuous: bool,
    #[serde(rename = "thm33")]
    pub quasi_contraction: bool,
    #[serde(rename = "lemma41")]
    pub classical_cauchy: Option<bool>,
    #[serde(rename = "thm41")]
    pub five_term: bool,
    pub assumptions: Assumptions,
}

/// Evaluates the fixed-point hypotheses for a concrete `alpha` against a
/// certificate computed with the same `c` and `q`.
pub fn check_hypotheses(
    cert: &ContractionCertificate,
    s: f64,
    c: f64,
    q: f64,
    alpha: f64,
) -> HypothesisVerdicts {
    let contraction_holds = (0.0..1.0).contains(&alpha) && cert.alpha_min <= alpha + ALPHA_SLACK;
    let orbit_product = alpha * q * s;
    let quasi_product = (alpha * c * s).max(orbit_product);
    let orbit_ok = contraction_holds && orbit_product < 1.0;
    let gamma = if orbit_ok {
        gamma_of(default_beta(alpha, q, s), q, s).ok()
    } else {
        None
    };
    let threshold = five_term_threshold(s);
    HypothesisVerdicts {
        alpha,
        s,
        c,
        q,
        contraction_holds,
        orbit_product,
        quasi_product,
        five_term_threshold: threshold,
        alpha41_min: cert.alpha_five_term_min,
        gamma,
        // finite spaces make both continuity notions automatic; otherwise
        // the caller asserts them and the record says so.
        continuous_map: orbit_ok,
        star_continuous: orbit_ok,
        quasi_contraction: contraction_holds && quasi_product < 1.0,
        classical_cauchy: gamma.map(|g| s * g < 1.0),
        five_term: cert.alpha_five_term_min <= threshold,
        assumptions: cert.assumptions,
    }
}
