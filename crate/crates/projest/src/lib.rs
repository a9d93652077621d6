//! Joint estimation of a probability density and its distribution function on
//! Ω = [-1, 1] by randomized projection onto the normalized Legendre basis.
//!
//! The crate provides:
//!
//! - [`legendre`]: evaluation of standardized and normalized Legendre
//!   polynomials, explicit coefficients, truncated series, and the
//!   antiderivative transform that turns density expansion coefficients into
//!   distribution-function coefficients.
//! - [`testfam`]: a two-parameter family of piecewise-polynomial test
//!   densities with tunable smoothness, together with exact expansion
//!   coefficients, exact squared norms and exact truncation errors.
//! - [`sampler`]: reproducible counter-based uniform streams and
//!   inverse-transform samplers for the test family (closed forms for the
//!   two small-parameter cases, safeguarded Newton/bisection otherwise).
//! - [`estimator`]: the two coefficient-estimation routes (moment-based and
//!   direct recurrence evaluation) and the error split against exact truth.
//! - [`analysis`]: mean-square error bounds, the conditionally optimal
//!   (expansion length, sample size) calculator, bound-constant fitting and
//!   empirical convergence-rate estimation.
//!
//! Supporting numerics live in [`quad`] (Gauss-Legendre rules, used mainly as
//! an independent oracle in tests), [`stats`] (compensated summation and the
//! Kolmogorov-Smirnov statistic) and [`special`] (log-gamma).

pub mod analysis;
pub mod estimator;
pub mod legendre;
pub mod quad;
pub mod sampler;
pub mod special;
pub mod stats;
pub mod testfam;

pub use analysis::{BoundConstants, BoundFlavor, ErrorPoint, OptimizationPlan};
pub use estimator::{Algorithm, ErrorReport, MomentVector, ProjectionEstimate, Target};
pub use legendre::{BasisEval, CoeffKind, CoeffVector, EvalMode};
pub use sampler::{Provenance, RngStream, SampleBatch};
pub use testfam::{QTable, SlobodetskijIntegral, TestFamilyParams};
