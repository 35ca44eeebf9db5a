//! Numerical laboratory for quasi-symmetriser energy estimates of weakly
//! hyperbolic Cauchy problems with time-dependent coefficients.
//!
//! The crate is organised around the pipeline
//! coefficients -> characteristic roots -> quasi-symmetriser -> mode evolution:
//!
//! * [`coeff`]: tiny expression language for time-dependent coefficients,
//!   including piecewise definitions with jump points.
//! * [`symalg`]: signed elementary symmetric polynomials, companion matrices
//!   and the small dense linear algebra the energy method runs on.
//! * [`symmetriser`]: the quasi-symmetriser family, its epsilon-power
//!   decomposition and numerical verification of its structural properties.
//! * [`spectrum`]: problem descriptions, characteristic roots and root
//!   separation (Levi condition on the principal symbol).
//! * [`levi`]: first-order system matrices and lower-order-term conditions.
//! * [`evolve`]: adaptive mode integration, energy bounds, analytic partitions
//!   and physical-space reconstruction.
//! * [`gevrey`]: spectral data synthesis and growth/decay model fitting.
//! * [`scenario`], [`report`], [`runner`]: configuration, JSON/CSV reporting
//!   and the check orchestration used by the command-line tool.

pub mod coeff;
pub mod evolve;
pub mod gevrey;
pub mod levi;
pub mod report;
pub mod runner;
pub mod scenario;
pub mod spectrum;
pub mod symalg;
pub mod symmetriser;

pub use coeff::CoefficientExpr;
pub use spectrum::{ProblemSpec, Regularity};
