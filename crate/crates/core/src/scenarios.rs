//! Declarative problem instances: built-in examples, a seeded generator of
//! certified finite instances, and JSON (de)serialization.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use crate::bspace::{BMetricSpace, MatrixSpec, Point};
use crate::error::{invalid, Error, Result};
use crate::orbit::{gamma_of, OrbitConfig};
use crate::quasicontraction::{
    all_pairs, certify, certify_exhaustive, AffineBranch, ContractionCertificate, QuasiParams,
    SetValuedMap,
};
use crate::rng::SplitMix64;

/// Largest number of points a sampling grid may expand to.
pub const MAX_SAMPLE_POINTS: usize = 20_000;

/// Rejections before [`random_finite`] gives up.
pub const MAX_REJECTIONS: usize = 1000;

pub const BUILTIN_NAMES: &[&str] = &["squared-line", "paper-example", "metric-example"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SpaceSpec {
    Power { dim: usize, p: f64 },
    Matrix { n: usize, s: f64, d: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MapSpec {
    Branches {
        branches: Vec<AffineBranch>,
    },
    Table {
        #[serde(deserialize_with = "id_keyed_map")]
        images: BTreeMap<usize, Vec<usize>>,
    },
}

// JSON object keys are strings; buffered tagged content will not coerce
// them to integers on its own.
fn id_keyed_map<'de, D>(de: D) -> std::result::Result<BTreeMap<usize, Vec<usize>>, D::Error>
where
    D: Deserializer<'de>,
{
    let raw = BTreeMap::<String, Vec<usize>>::deserialize(de)?;
    raw.into_iter()
        .map(|(k, v)| {
            k.parse::<usize>()
                .map(|id| (id, v))
                .map_err(|_| serde::de::Error::custom(format!("image key `{k}` is not a point id")))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SampleSpec {
    /// `lo, lo + step, ..., hi` along every coordinate.
    Grid {
        lo: f64,
        hi: f64,
        step: f64,
    },
    Points {
        pts: Vec<Point>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub c: f64,
    pub q: f64,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub space: SpaceSpec,
    pub map: MapSpec,
    pub params: ParamsSpec,
    pub x0: Point,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x1: Option<Point>,
    pub tol: f64,
    pub max_iter: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Pairs to certify over. Finite spaces default to every pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<SampleSpec>,
}

/// A validated scenario with its space and map constructed.
#[derive(Clone, Debug)]
pub struct Instance {
    pub space: BMetricSpace,
    pub map: SetValuedMap,
    pub params: QuasiParams,
    pub beta: Option<f64>,
    pub x0: Point,
    pub x1: Option<Point>,
    pub tol: f64,
    pub max_iter: usize,
    /// Certification points; every point for finite spaces without a sample.
    pub sample: Vec<Point>,
}

impl Instance {
    pub fn orbit_config(&self) -> OrbitConfig {
        OrbitConfig {
            c: self.params.c,
            q: self.params.q,
            alpha: self.params.alpha,
            beta: self.beta,
            x1: self.x1.clone(),
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }

    pub fn certify(&self) -> Result<ContractionCertificate> {
        certify(
            &self.space,
            &self.map,
            &all_pairs(&self.sample),
            self.params.c,
            self.params.q,
        )
    }
}

impl SpaceSpec {
    pub fn build(&self) -> Result<BMetricSpace> {
        match self {
            SpaceSpec::Power { dim, p } => BMetricSpace::power(*dim, *p),
            SpaceSpec::Matrix { n, s, d } => BMetricSpace::from_matrix_spec(&MatrixSpec {
                n: *n,
                s: *s,
                d: d.clone(),
            }),
        }
    }
}

impl MapSpec {
    pub fn build(&self, space: &BMetricSpace) -> Result<SetValuedMap> {
        match self {
            MapSpec::Branches { branches } => SetValuedMap::branches(space, branches.clone()),
            MapSpec::Table { images } => SetValuedMap::table(space, images),
        }
    }
}

impl SampleSpec {
    pub fn points(&self, space: &BMetricSpace) -> Result<Vec<Point>> {
        let pts = match self {
            SampleSpec::Points { pts } => pts.clone(),
            SampleSpec::Grid { lo, hi, step } => {
                let dim = match space.domain() {
                    crate::bspace::Domain::Power { dim, .. } => *dim,
                    crate::bspace::Domain::Matrix { .. } => {
                        return Err(invalid("sample", "grids apply to coordinate spaces only"))
                    }
                };
                let axis = grid_axis(*lo, *hi, *step)?;
                let total = (axis.len() as f64).powi(dim as i32);
                if total > MAX_SAMPLE_POINTS as f64 {
                    return Err(invalid(
                        "sample",
                        format!("grid expands to {total} points, limit is {MAX_SAMPLE_POINTS}"),
                    ));
                }
                cartesian(&axis, dim)
            }
        };
        for x in &pts {
            space.check_point(x)?;
        }
        Ok(pts)
    }
}

fn grid_axis(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(invalid(
            "sample",
            format!("need finite lo <= hi, got [{lo}, {hi}]"),
        ));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(invalid(
            "sample",
            format!("step must be positive, got {step}"),
        ));
    }
    let n = ((hi - lo) / step + 1e-9).floor();
    if n + 1.0 > MAX_SAMPLE_POINTS as f64 {
        return Err(invalid("sample", "grid has too many points"));
    }
    // lo + i*step rather than accumulation keeps the nodes reproducible.
    Ok((0..=n as usize).map(|i| lo + i as f64 * step).collect())
}

fn cartesian(axis: &[f64], dim: usize) -> Vec<Point> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out.into_iter().map(Point::Coords).collect()
}

impl Scenario {
    /// Validates every field and constructs the space and map.
    pub fn build(&self) -> Result<Instance> {
        let space = self.space.build()?;
        let map = self.map.build(&space)?;
        let params = QuasiParams::new(self.params.c, self.params.q, self.params.alpha)?;
        if let Some(beta) = self.params.beta {
            if beta <= params.alpha {
                return Err(invalid(
                    "beta",
                    format!("must exceed alpha = {}", params.alpha),
                ));
            }
            gamma_of(beta, params.q, space.s())?;
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(invalid(
                "tol",
                format!("must be positive, got {}", self.tol),
            ));
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter", "must be at least 1"));
        }
        space.check_point(&self.x0)?;
        if let Some(x1) = &self.x1 {
            space.check_point(x1)?;
        }
        let sample = match &self.sample {
            Some(spec) => spec.points(&space)?,
            None => space
                .points()
                .ok_or_else(|| invalid("sample", "required for coordinate spaces"))?,
        };
        Ok(Instance {
            space,
            map,
            params,
            beta: self.params.beta,
            x0: self.x0.clone(),
            x1: self.x1.clone(),
            tol: self.tol,
            max_iter: self.max_iter,
            sample,
        })
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(json);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Schema {
                path,
                message: e.into_inner().to_string(),
            }
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

pub fn load(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Scenario::from_json(&text)
}

pub fn save(scenario: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, scenario.to_json() + "\n").map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// The squared line `d(x, y) = (x - y)^2` (s = 2) with `T(x) = {0.9 x}`,
/// certified on the grid `-1.0, -0.9, ..., 1.0`.
///
/// The run tolerance is `1e-10`: the residual at `x` is `0.01 x^2`, so
/// `1e-9` would stop near `|x| = 3.2e-4`, short of `|u| <= 1e-4`.
pub fn squared_line_example() -> Scenario {
    Scenario {
        space: SpaceSpec::Power { dim: 1, p: 2.0 },
        map: MapSpec::Branches {
            branches: vec![AffineBranch::scalar(0.9, 0.0)],
        },
        params: ParamsSpec {
            c: 0.0,
            q: 0.0,
            alpha: 0.9,
            beta: None,
        },
        x0: Point::scalar(1.0),
        x1: None,
        tol: 1e-10,
        max_iter: 1000,
        seed: None,
        sample: Some(SampleSpec::Grid {
            lo: -1.0,
            hi: 1.0,
            step: 0.1,
        }),
    }
}

/// The real line with its usual metric (s = 1) and `T(x) = {0.1 x}`, c = q = 1.
pub fn metric_example() -> Scenario {
    Scenario {
        space: SpaceSpec::Power { dim: 1, p: 1.0 },
        map: MapSpec::Branches {
            branches: vec![AffineBranch::scalar(0.1, 0.0)],
        },
        params: ParamsSpec {
            c: 1.0,
            q: 1.0,
            alpha: 0.1,
            beta: None,
        },
        x0: Point::scalar(1.0),
        x1: None,
        tol: 1e-9,
        max_iter: 1000,
        seed: None,
        sample: Some(SampleSpec::Grid {
            lo: -1.0,
            hi: 1.0,
            step: 0.1,
        }),
    }
}

pub fn builtin(name: &str) -> Option<Scenario> {
    match name {
        "squared-line" | "paper-example" => Some(squared_line_example()),
        "metric-example" => Some(metric_example()),
        _ => None,
    }
}

/// `n` uniform points in the unit square under `d = |x - y|^p` (Euclidean
/// norm), a b-metric with `s = 2^(p-1)`. Fails if two points coincide.
pub fn random_plane_space(rng: &mut SplitMix64, n: usize, p: f64) -> Result<BMetricSpace> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(invalid("p", format!("must be >= 1, got {p}")));
    }
    let pts: Vec<[f64; 2]> = (0..n).map(|_| [rng.next_f64(), rng.next_f64()]).collect();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let r = (pts[i][0] - pts[j][0]).hypot(pts[i][1] - pts[j][1]);
            let v = r.powf(p);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    BMetricSpace::matrix(&d, (p - 1.0).exp2())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeneratedScenario {
    pub scenario: Scenario,
    pub certificate: ContractionCertificate,
    /// Candidates drawn, including the accepted one.
    pub attempts: usize,
}

/// Seeded generator of finite instances that pass the quasi-contraction
/// check with `alpha = alpha_min <= alpha_cap`.
///
/// Every image contains a root set `R` of one or two points, so each root is
/// a fixed point. Roots and their nearest neighbours map onto `R`; the other
/// points map onto `R` plus a random subset of those neighbours. `c` and `q`
/// are drawn uniformly. Rejected candidates are redrawn from a seed derived
/// from `seed`.
pub fn random_finite(
    seed: u64,
    n_points: usize,
    p: f64,
    alpha_cap: f64,
) -> Result<GeneratedScenario> {
    if n_points < 3 {
        return Err(invalid(
            "n_points",
            format!("must be at least 3, got {n_points}"),
        ));
    }
    if !(p.is_finite() && p >= 1.0) {
        return Err(invalid("p", format!("must be >= 1, got {p}")));
    }
    if !(alpha_cap > 0.0 && alpha_cap < 1.0) {
        return Err(invalid(
            "alpha_cap",
            format!("must lie in (0, 1), got {alpha_cap}"),
        ));
    }
    let mut seeds = SplitMix64::new(seed);
    let mut candidate_seed = seed;
    for attempt in 1..=MAX_REJECTIONS {
        if let Some((scenario, certificate)) = candidate(candidate_seed, n_points, p, alpha_cap)? {
            let scenario = Scenario {
                seed: Some(seed),
                ..scenario
            };
            return Ok(GeneratedScenario {
                scenario,
                certificate,
                attempts: attempt,
            });
        }
        candidate_seed = seeds.next_u64();
    }
    Err(Error::GeneratorExhausted {
        seed,
        attempts: MAX_REJECTIONS,
    })
}

fn candidate(
    seed: u64,
    n: usize,
    p: f64,
    alpha_cap: f64,
) -> Result<Option<(Scenario, ContractionCertificate)>> {
    let mut rng = SplitMix64::new(seed);
    let space = match random_plane_space(&mut rng, n, p) {
        Ok(sp) => sp,
        Err(Error::ZeroOffDiagonal(..)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let spec = space.to_matrix_spec().expect("matrix space");
    let c = rng.next_f64();
    let q = rng.next_f64();

    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let root_count = 1 + rng.below(2);
    let roots: Vec<usize> = order[..root_count].to_vec();
    let to_roots = |i: usize| {
        roots
            .iter()
            .map(|&r| spec.d[i][r])
            .fold(f64::INFINITY, f64::min)
    };
    let mut rest: Vec<usize> = order[root_count..].to_vec();
    rest.sort_by(|&a, &b| to_roots(a).total_cmp(&to_roots(b)).then(a.cmp(&b)));
    let core_count = (1 + rng.below(2)).min(rest.len() - 1);
    let core: Vec<usize> = rest[..core_count].to_vec();

    let mut images = BTreeMap::new();
    for i in 0..n {
        let mut img = roots.clone();
        if !roots.contains(&i) && !core.contains(&i) {
            for &k in &core {
                if rng.bernoulli(0.5) {
                    img.push(k);
                }
            }
        }
        img.sort_unstable();
        images.insert(i, img);
    }
    let x0 = rng.below(n);

    let map = SetValuedMap::table(&space, &images)?;
    let cert = certify_exhaustive(&space, &map, c, q)?;
    if !(cert.alpha_min <= alpha_cap && cert.verdicts.quasi_contraction) {
        return Ok(None);
    }
    let scenario = Scenario {
        space: SpaceSpec::Matrix {
            n,
            s: spec.s,
            d: spec.d,
        },
        map: MapSpec::Table { images },
        params: ParamsSpec {
            c,
            q,
            alpha: cert.alpha_min,
            beta: None,
        },
        x0: Point::Id(x0),
        x1: None,
        tol: 1e-9,
        max_iter: 1000,
        seed: Some(seed),
        sample: None,
    };
    Ok(Some((scenario, cert)))
}
