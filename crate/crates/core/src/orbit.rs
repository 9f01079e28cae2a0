//! Picard-style orbits of set-valued quasi-contractions and their
//! convergence certificates.
//!
//! Given `alpha` with `alpha q s < 1`, pick `beta in (alpha, min(1, 1/(q s)))`.
//! Each step chooses `x_{n+1} in T(x_n)` nearest to `x_n`; under the
//! contraction hypothesis this choice satisfies
//! `d(x_n, x_{n+1}) < beta N_{c,q}(x_{n-1}, x_n)`, which forces
//!
//! ```text
//! d_n <= gamma d_{n-1},   gamma = max{beta, q s beta / (2 - q s beta)} < 1.
//! ```
//!
//! Geometric decay alone makes the orbit Cauchy in any b-metric space, even
//! when `s gamma >= 1`: for all `m, k`,
//!
//! ```text
//! d(x_{m+1}, x_{m+k}) <= gamma^m d(x_0, x_1) S / (1 - gamma),
//! S = sum_{n >= 1} s^{2n} gamma^{2^{n-1}}.
//! ```

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::bspace::{BMetricSpace, Point};
use crate::error::{invalid, Error, Result};
use crate::fmt::sig17;
use crate::quasicontraction::{check_unit, n_value_with_images, SetValuedMap};
use crate::setops::{dist_point_set, PointSet};

/// Relative slack on the per-step decay check.
pub const DECAY_SLACK: f64 = 1e-12;

const SERIES_MAX_TERMS: usize = 64;
const SERIES_REL_CUTOFF: f64 = 1e-16;

/// `min(1, 1/(q s))`, the open upper end of the admissible `beta` range.
pub fn beta_upper(q: f64, s: f64) -> f64 {
    let qs = q * s;
    if qs <= 1.0 {
        1.0
    } else {
        1.0 / qs
    }
}

/// Midpoint of `(alpha, min(1, 1/(q s)))`.
pub fn default_beta(alpha: f64, q: f64, s: f64) -> f64 {
    0.5 * (alpha + beta_upper(q, s))
}

/// `gamma = max{beta, q s beta / (2 - q s beta)}`.
pub fn gamma_of(beta: f64, q: f64, s: f64) -> Result<f64> {
    let upper = beta_upper(q, s);
    if !(beta > 0.0 && beta < upper) {
        return Err(invalid(
            "beta",
            format!("must lie in (0, {}), got {beta}", sig17(upper)),
        ));
    }
    let t = q * s * beta;
    Ok(beta.max(t / (2.0 - t)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitStatus {
    Converged,
    MaxIter,
    /// The step from `x_step` broke the contraction ratio or the decay
    /// bound.
    RatioViolation {
        step: usize,
        step_distance: f64,
        bound: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitTrace {
    pub points: Vec<Point>,
    /// `steps[n] = d(x_n, x_{n+1})`.
    pub steps: Vec<f64>,
    pub beta: f64,
    pub gamma: f64,
    pub s: f64,
    pub tol: f64,
    pub status: OrbitStatus,
    pub fixed_point: Option<Point>,
    /// `d(x_N, T(x_N))` at the last point.
    pub residual: f64,
}

impl OrbitTrace {
    pub fn iterations(&self) -> usize {
        self.steps.len()
    }

    pub fn converged(&self) -> bool {
        self.status == OrbitStatus::Converged
    }

    pub fn last(&self) -> &Point {
        self.points.last().expect("trace holds at least x0")
    }

    /// Cauchy certificate for this trace, if it made at least one step.
    pub fn cauchy_certificate(&self) -> Option<CauchyCertificate> {
        let d01 = *self.steps.first()?;
        cauchy_series(self.gamma, self.s)
            .ok()
            .map(|c| c.with_d01(d01))
    }
}

/// Orbit parameters. `beta` and `x1` default as described on
/// [`run_orbit`].
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitConfig {
    pub c: f64,
    pub q: f64,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub x1: Option<Point>,
    pub tol: f64,
    pub max_iter: usize,
}

impl OrbitConfig {
    pub fn new(c: f64, q: f64, alpha: f64) -> Self {
        Self {
            c,
            q,
            alpha,
            beta: None,
            x1: None,
            tol: 1e-9,
            max_iter: 1000,
        }
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn beta(mut self, beta: f64) -> Self {
        self.beta = Some(beta);
        self
    }

    pub fn start(mut self, x1: Point) -> Self {
        self.x1 = Some(x1);
        self
    }
}

/// Nearest element of `T(x_cur)`, checked against
/// `d(x_cur, next) < beta N_{c,q}(x_prev, x_cur)` (or `next == x_cur`).
pub fn select_next(
    space: &BMetricSpace,
    map: &SetValuedMap,
    x_prev: &Point,
    x_cur: &Point,
    beta: f64,
    c: f64,
    q: f64,
) -> Result<Point> {
    let t_prev = map.image(space, x_prev)?;
    let t_cur = map.image(space, x_cur)?;
    let (next, step, bound) = select_with_images(space, x_prev, &t_prev, x_cur, &t_cur, beta, c, q);
    if step == 0.0 || step < bound {
        Ok(next)
    } else {
        Err(Error::RatioViolation {
            step_distance: step,
            bound,
        })
    }
}

#[allow(clippy::too_many_arguments)]
fn select_with_images(
    space: &BMetricSpace,
    x_prev: &Point,
    t_prev: &PointSet,
    x_cur: &Point,
    t_cur: &PointSet,
    beta: f64,
    c: f64,
    q: f64,
) -> (Point, f64, f64) {
    let near = dist_point_set(space, x_cur, t_cur);
    let next = t_cur.elements()[near.index].clone();
    let bound = beta * n_value_with_images(space, c, q, x_prev, t_prev, x_cur, t_cur);
    (next, near.distance, bound)
}

/// Builds an orbit `x_0, x_1, ...` with `x_{n+1} in T(x_n)`.
///
/// * `beta` defaults to the midpoint of `(alpha, min(1, 1/(q s)))`.
/// * `x1` defaults to the element of `T(x0)` nearest `x0`; a supplied `x1`
///   must belong to `T(x0)`.
///
/// Stops with [`OrbitStatus::Converged`] once `d(x_n, T(x_n)) <= tol`, with
/// [`OrbitStatus::MaxIter`] after `max_iter` steps, or with
/// [`OrbitStatus::RatioViolation`] when a step breaks the contraction ratio
/// or the decay `d_n <= gamma d_{n-1}`.
pub fn run_orbit(
    space: &BMetricSpace,
    map: &SetValuedMap,
    x0: &Point,
    cfg: &OrbitConfig,
) -> Result<OrbitTrace> {
    let s = space.s();
    check_unit("c", cfg.c)?;
    check_unit("q", cfg.q)?;
    if !(0.0..1.0).contains(&cfg.alpha) {
        return Err(invalid(
            "alpha",
            format!("must lie in [0, 1), got {}", cfg.alpha),
        ));
    }
    if cfg.alpha * cfg.q * s >= 1.0 {
        return Err(invalid(
            "alpha",
            format!(
                "alpha * q * s = {} must be below 1",
                sig17(cfg.alpha * cfg.q * s)
            ),
        ));
    }
    if !(cfg.tol.is_finite() && cfg.tol > 0.0) {
        return Err(invalid("tol", format!("must be positive, got {}", cfg.tol)));
    }
    if cfg.max_iter == 0 {
        return Err(invalid("max_iter", "must be at least 1"));
    }
    let beta = cfg
        .beta
        .unwrap_or_else(|| default_beta(cfg.alpha, cfg.q, s));
    if beta <= cfg.alpha {
        return Err(invalid(
            "beta",
            format!("must exceed alpha = {}, got {beta}", cfg.alpha),
        ));
    }
    let gamma = gamma_of(beta, cfg.q, s)?;
    space.check_point(x0)?;

    let mut trace = OrbitTrace {
        points: vec![x0.clone()],
        steps: Vec::new(),
        beta,
        gamma,
        s,
        tol: cfg.tol,
        status: OrbitStatus::MaxIter,
        fixed_point: None,
        residual: f64::NAN,
    };

    let mut t_cur = map.image(space, x0)?.into_owned();
    let near0 = dist_point_set(space, x0, &t_cur);
    let x1 = match &cfg.x1 {
        Some(x1) => {
            space.check_point(x1)?;
            if !t_cur.contains(space, x1) {
                return Err(Error::StartNotInImage);
            }
            x1.clone()
        }
        None => {
            if near0.distance <= cfg.tol {
                trace.status = OrbitStatus::Converged;
                trace.fixed_point = Some(x0.clone());
                trace.residual = near0.distance;
                return Ok(trace);
            }
            t_cur.elements()[near0.index].clone()
        }
    };
    trace.steps.push(space.dist(x0, &x1));
    trace.points.push(x1);
    let mut t_prev = std::mem::replace(&mut t_cur, map.image(space, trace.last())?.into_owned());

    loop {
        let n = trace.steps.len();
        let x_cur = &trace.points[n];
        let residual = dist_point_set(space, x_cur, &t_cur).distance;
        trace.residual = residual;
        if residual <= cfg.tol {
            trace.status = OrbitStatus::Converged;
            trace.fixed_point = Some(x_cur.clone());
            break;
        }
        if n >= cfg.max_iter {
            trace.status = OrbitStatus::MaxIter;
            break;
        }

        let x_prev = &trace.points[n - 1];
        let (next, step, bound) =
            select_with_images(space, x_prev, &t_prev, x_cur, &t_cur, beta, cfg.c, cfg.q);
        if !(step == 0.0 || step < bound) {
            trace.status = OrbitStatus::RatioViolation {
                step: n,
                step_distance: step,
                bound,
            };
            break;
        }
        let prev_step = trace.steps[n - 1];
        let decay_bound = gamma * prev_step + DECAY_SLACK * prev_step;
        if step > decay_bound {
            trace.status = OrbitStatus::RatioViolation {
                step: n,
                step_distance: step,
                bound: decay_bound,
            };
            break;
        }

        trace.steps.push(step);
        let t_next = map.image(space, &next)?.into_owned();
        trace.points.push(next);
        t_prev = std::mem::replace(&mut t_cur, t_next);
    }
    Ok(trace)
}

/// `s^n * sum(steps)` with `n = ceil(log2 k)`, `k = steps.len()`: the
/// tightest dyadic chaining bound on `d(x_0, x_k)`.
pub fn chaining_bound(steps: &[f64], s: f64) -> Result<f64> {
    if steps.is_empty() {
        return Err(Error::EmptySteps);
    }
    if !(s.is_finite() && s >= 1.0) {
        return Err(invalid("s", format!("must be >= 1, got {s}")));
    }
    let k = steps.len();
    let levels = usize::BITS - (k - 1).leading_zeros();
    let total: f64 = steps.iter().sum();
    Ok(s.powi(levels as i32) * total)
}

/// Summed Cauchy series for a decay ratio `gamma` in a space with
/// coefficient `s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchyCertificate {
    pub gamma: f64,
    pub s: f64,
    /// `sum_{n>=1} s^{2n} gamma^{2^{n-1}}`.
    #[serde(rename = "S")]
    pub sum: f64,
    /// `d(x_0, x_1)`; 1 unless set, which makes bounds relative to the
    /// first step.
    pub d01: f64,
    pub terms_used: usize,
}

impl CauchyCertificate {
    pub fn with_d01(mut self, d01: f64) -> Self {
        self.d01 = d01;
        self
    }

    /// Bounds for `m = 0..count`, each `gamma` times the previous.
    pub fn bounds(&self, count: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(count);
        let mut b = self.d01 * self.sum / (1.0 - self.gamma);
        for _ in 0..count {
            out.push(b);
            b *= self.gamma;
        }
        out
    }
}

/// Sums `s^{2n} gamma^{2^{n-1}}` until a term drops below `1e-16` of the
/// partial sum or underflows, capped at 64 terms.
pub fn cauchy_series(gamma: f64, s: f64) -> Result<CauchyCertificate> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(invalid("gamma", format!("must lie in [0, 1), got {gamma}")));
    }
    if !(s.is_finite() && s >= 1.0) {
        return Err(invalid("s", format!("must be >= 1, got {s}")));
    }
    let ln_s = s.ln();
    let ln_g = gamma.ln();
    let mut sum = 0.0;
    let mut terms_used = 0;
    for n in 1..=SERIES_MAX_TERMS {
        // log domain: exact powers of two keep the exponent accurate, and
        // s^{2n} overflowing against a vanishing gamma power is harmless.
        let exponent = 2.0 * n as f64 * ln_s + ((n - 1) as f64).exp2() * ln_g;
        let term = exponent.exp();
        sum += term;
        terms_used = n;
        if term < f64::MIN_POSITIVE || term < SERIES_REL_CUTOFF * sum {
            break;
        }
    }
    Ok(CauchyCertificate {
        gamma,
        s,
        sum,
        d01: 1.0,
        terms_used,
    })
}

/// `gamma^m d01 S / (1 - gamma)`, a bound on `d(x_{m+1}, x_{m+k})` for all
/// `k`. Computed by repeated multiplication, so
/// `cauchy_bound(m + 1) == gamma * cauchy_bound(m)` exactly.
pub fn cauchy_bound(m: usize, cert: &CauchyCertificate) -> f64 {
    let mut b = cert.d01 * cert.sum / (1.0 - cert.gamma);
    for _ in 0..m {
        if b == 0.0 {
            break;
        }
        b *= cert.gamma;
    }
    b
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointCheck {
    pub residual: f64,
    pub pass: bool,
}

/// `d(u, T(u))` and whether it is within `tol`.
pub fn verify_fixed_point(
    space: &BMetricSpace,
    map: &SetValuedMap,
    u: &Point,
    tol: f64,
) -> Result<FixedPointCheck> {
    space.check_point(u)?;
    let residual = dist_point_set(space, u, &*map.image(space, u)?).distance;
    Ok(FixedPointCheck {
        residual,
        pass: residual <= tol,
    })
}

/// Worst observed ratios of actual distances to their certified bounds along
/// a trace. Values at most `1` mean the bounds held.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundAudit {
    /// `max_{m,k} d(x_{m+1}, x_{m+k}) / cauchy_bound(m)`.
    pub cauchy_ratio_max: f64,
    /// `max_k d(x_0, x_k) / chaining_bound(d_0..d_{k-1})`.
    pub chaining_ratio_max: f64,
    /// Largest `d_n / (gamma d_{n-1})`.
    pub decay_ratio_max: f64,
}

fn bound_ratio(actual: f64, bound: f64) -> f64 {
    if actual == 0.0 {
        0.0
    } else {
        actual / bound
    }
}

/// Compares every in-range distance of `trace` with its chaining and Cauchy
/// bounds.
pub fn audit_trace(space: &BMetricSpace, trace: &OrbitTrace) -> BoundAudit {
    let pts = &trace.points;
    let big_n = trace.steps.len();
    let mut audit = BoundAudit {
        cauchy_ratio_max: 0.0,
        chaining_ratio_max: 0.0,
        decay_ratio_max: 0.0,
    };
    for k in 1..=big_n {
        let bound = chaining_bound(&trace.steps[..k], trace.s).expect("k >= 1");
        let r = bound_ratio(space.dist(&pts[0], &pts[k]), bound);
        audit.chaining_ratio_max = audit.chaining_ratio_max.max(r);
    }
    for n in 1..big_n {
        let r = bound_ratio(trace.steps[n], trace.gamma * trace.steps[n - 1]);
        audit.decay_ratio_max = audit.decay_ratio_max.max(r);
    }
    if let Some(cert) = trace.cauchy_certificate() {
        let bounds = cert.bounds(big_n);
        for (m, bound) in bounds.iter().enumerate() {
            for j in m + 2..=big_n {
                let r = bound_ratio(space.dist(&pts[m + 1], &pts[j]), *bound);
                audit.cauchy_ratio_max = audit.cauchy_ratio_max.max(r);
            }
        }
    }
    audit
}

/// Writes the trace as CSV with columns
/// `n,point,d_n,ratio,gamma,cauchy_bound_at_n`. Cells that do not apply are
/// left empty.
pub fn write_trace_csv<W: Write>(trace: &OrbitTrace, mut out: W) -> io::Result<()> {
    writeln!(out, "n,point,d_n,ratio,gamma,cauchy_bound_at_n")?;
    let bounds = trace
        .cauchy_certificate()
        .map(|c| c.bounds(trace.points.len()))
        .unwrap_or_default();
    let cell = |v: Option<f64>| v.map(sig17).unwrap_or_default();
    for (n, p) in trace.points.iter().enumerate() {
        let d_n = trace.steps.get(n).copied();
        let ratio = match (d_n, n.checked_sub(1).map(|i| trace.steps[i])) {
            (Some(d), Some(prev)) if prev > 0.0 => Some(d / prev),
            _ => None,
        };
        writeln!(
            out,
            "{n},{p},{},{},{},{}",
            cell(d_n),
            cell(ratio),
            sig17(trace.gamma),
            cell(bounds.get(n).copied()),
        )?;
    }
    Ok(())
}
