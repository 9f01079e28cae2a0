//! Fixed-point engine for set-valued quasi-contractions on b-metric spaces.
//!
//! * [`bspace`]: b-metric spaces (power spaces `|x - y|^p` and finite
//!   distance matrices) with axiom checks.
//! * [`setops`]: point-to-set and Hausdorff–Pompeiu distances on finite sets.
//! * [`quasicontraction`]: set-valued maps, the `N_{c,q}` functional and
//!   contraction certificates.
//! * [`orbit`]: orbit construction, chaining and Cauchy bounds.
//! * [`scenarios`]: declarative instances and a seeded generator.

pub mod bspace;
pub mod error;
pub mod fmt;
pub mod orbit;
pub mod quasicontraction;
pub mod rng;
pub mod scenarios;
pub mod setops;

pub use bspace::{Axiom, AxiomReport, AxiomViolation, BMetricSpace, Domain, MatrixSpec, Point};
pub use error::{Error, Result};
pub use orbit::{
    audit_trace, cauchy_bound, cauchy_series, chaining_bound, default_beta, gamma_of, run_orbit,
    select_next, verify_fixed_point, BoundAudit, CauchyCertificate, FixedPointCheck, OrbitConfig,
    OrbitStatus, OrbitTrace,
};
pub use quasicontraction::{
    certify, certify_exhaustive, check_hypotheses, five_term_max, n_functional, AffineBranch,
    ContractionCertificate, HypothesisVerdicts, QuasiParams, SetValuedMap,
};
pub use rng::SplitMix64;
pub use scenarios::{Instance, Scenario};
pub use setops::{directed_hausdorff, dist_point_set, hausdorff, Nearest, PointSet};
