//! Mean-square error bounds for the projection estimates and the
//! conditional-optimization calculator built on them.
//!
//! The bound for a density of Sobolev smoothness s is
//!
//!   B²(n, N) <= C1 n / N + C2 / n^{2s}
//!
//! (exponent 2s+2 for the distribution function, whose smoothness is one
//! higher). The gamma-ratio flavor replaces the power-law deterministic term
//! with C2 Γ(n-s+2)/Γ(n+s+2), the sharper weighted-Sobolev form.
//!
//! Conditional optimization picks the cheapest (n, N) meeting a target
//! accuracy γ by balancing the two terms: n_opt is the smallest length whose
//! deterministic term fits inside γ²/2, and N_opt then equates the
//! stochastic term with the deterministic term actually achieved at n_opt,
//! which keeps N_opt proportional to n_opt^{2s+1} (resp. n_opt^{2s+3})
//! without the integer rounding of n_opt distorting the relation.

use thiserror::Error;

use crate::special::ln_gamma;
use crate::stats::KahanSum;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("bound constants must be positive and finite (c1={c1}, c2={c2}, s={s})")]
    InvalidConstants { c1: f64, c2: f64, s: f64 },
    #[error("bound arguments must satisfy n >= 1 and N >= 1")]
    InvalidArguments,
    #[error("gamma-ratio bound undefined: n - s + 2 = {value} is not positive")]
    GammaRatioDomain { value: f64 },
    #[error("required accuracy must be positive, got {gamma}")]
    InvalidGamma { gamma: f64 },
    #[error("optimization needs the power-law flavor; the gamma-ratio relation is diagnostic only")]
    UnsupportedFlavor,
    #[error("fit grid needs at least two distinct n and two distinct N")]
    DegenerateGrid,
    #[error("rate estimation needs at least 3 points with strictly increasing n")]
    TooFewPoints,
    #[error("rate estimation needs positive errors")]
    NonPositiveError,
}

/// Deterministic-term shape of the error bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundFlavor {
    PowerLaw,
    GammaRatio,
}

/// Constants (C1, C2) of the bound at smoothness s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    pub c1: f64,
    pub c2: f64,
    pub s: f64,
    pub flavor: BoundFlavor,
}

impl BoundConstants {
    pub fn new(c1: f64, c2: f64, s: f64, flavor: BoundFlavor) -> Result<Self, AnalysisError> {
        if !(c1 > 0.0 && c1.is_finite() && c2 > 0.0 && c2.is_finite() && s > 0.0 && s.is_finite()) {
            return Err(AnalysisError::InvalidConstants { c1, c2, s });
        }
        Ok(Self { c1, c2, s, flavor })
    }
}

/// Estimation target for bounds and plans.
pub use crate::estimator::Target;

/// Mean-square error bound B(n, N) = sqrt(stochastic + deterministic).
pub fn error_bound(
    c: &BoundConstants,
    n: usize,
    sample_size: u64,
    target: Target,
) -> Result<f64, AnalysisError> {
    if n < 1 || sample_size < 1 {
        return Err(AnalysisError::InvalidArguments);
    }
    let nf = n as f64;
    let stochastic = c.c1 * nf / sample_size as f64;
    let deterministic = match c.flavor {
        BoundFlavor::PowerLaw => {
            let exponent = match target {
                Target::Density => 2.0 * c.s,
                Target::Distribution => 2.0 * c.s + 2.0,
            };
            c.c2 * nf.powf(-exponent)
        }
        BoundFlavor::GammaRatio => {
            let s_eff = match target {
                Target::Density => c.s,
                Target::Distribution => c.s + 1.0,
            };
            let low = nf - s_eff + 2.0;
            if low <= 0.0 {
                return Err(AnalysisError::GammaRatioDomain { value: low });
            }
            c.c2 * (ln_gamma(low) - ln_gamma(nf + s_eff + 2.0)).exp()
        }
    };
    Ok((stochastic + deterministic).sqrt())
}

/// Conditionally optimal (n, N) pair for a target accuracy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizationPlan {
    pub gamma_target: f64,
    pub n_opt: usize,
    pub sample_size_opt: u64,
    /// N_opt grows like n_opt to this power: 2s+1 for the density target,
    /// 2s+3 for the distribution target.
    pub relation_exponent: f64,
}

/// Ceiling that tolerates ~1 ulp of upward noise in an exactly-integer
/// solution.
fn ceil_guarded(x: f64) -> f64 {
    (x * (1.0 - 1e-12)).ceil()
}

/// Solve the balance problem: deterministic term <= γ²/2 with the smallest
/// integer n, then the matching N.
pub fn optimize(
    c: &BoundConstants,
    gamma: f64,
    target: Target,
) -> Result<OptimizationPlan, AnalysisError> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(AnalysisError::InvalidGamma { gamma });
    }
    if c.flavor != BoundFlavor::PowerLaw {
        return Err(AnalysisError::UnsupportedFlavor);
    }
    let exponent = match target {
        Target::Density => 2.0 * c.s,
        Target::Distribution => 2.0 * c.s + 2.0,
    };
    let gamma_sq = gamma * gamma;
    let n_real = (2.0 * c.c2 / gamma_sq).powf(1.0 / exponent);
    let n_opt = ceil_guarded(n_real).max(1.0);
    // Equate the stochastic term with the deterministic term achieved at the
    // integer n: N = (c1/c2) n^{exponent+1}. Both terms then sit at or below
    // γ²/2 and the total stays within γ.
    let sample_real = c.c1 / c.c2 * n_opt.powf(exponent + 1.0);
    let sample_opt = ceil_guarded(sample_real).max(1.0);
    Ok(OptimizationPlan {
        gamma_target: gamma,
        n_opt: n_opt as usize,
        sample_size_opt: sample_opt as u64,
        relation_exponent: exponent + 1.0,
    })
}

/// The gamma-ratio analogue of the optimal relation,
/// N ~ n Γ(n+s+2)/Γ(n-s+2), exposed as a diagnostic curve.
pub fn gamma_ratio_relation(s: f64, n: usize) -> Result<f64, AnalysisError> {
    let nf = n as f64;
    let low = nf - s + 2.0;
    if low <= 0.0 {
        return Err(AnalysisError::GammaRatioDomain { value: low });
    }
    Ok(nf * (ln_gamma(nf + s + 2.0) - ln_gamma(low)).exp())
}

/// One measured error cell of an (n, N) grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorPoint {
    pub n: usize,
    pub sample_size: u64,
    pub eps: f64,
}

/// Least-squares fit of (C1, C2) to measured errors at fixed smoothness.
///
/// The model sqrt(C1 n/N + C2 n^{-2s}) is linear in the constants inside the
/// square root, so the squared errors give the initial point in closed form;
/// one Gauss-Newton step then refines against the unsquared objective.
/// Constants are clamped to be non-negative.
pub fn fit_constants(points: &[ErrorPoint], s: f64) -> Result<BoundConstants, AnalysisError> {
    let mut ns: Vec<usize> = points.iter().map(|p| p.n).collect();
    ns.sort_unstable();
    ns.dedup();
    let mut sizes: Vec<u64> = points.iter().map(|p| p.sample_size).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if ns.len() < 2 || sizes.len() < 2 {
        return Err(AnalysisError::DegenerateGrid);
    }

    let covariates: Vec<(f64, f64, f64)> = points
        .iter()
        .map(|p| {
            let x = p.n as f64 / p.sample_size as f64;
            let y = (p.n as f64).powf(-2.0 * s);
            (x, y, p.eps)
        })
        .collect();

    // Linear least squares on eps².
    let (mut sxx, mut sxy, mut syy, mut sxz, mut syz) =
        (KahanSum::new(), KahanSum::new(), KahanSum::new(), KahanSum::new(), KahanSum::new());
    for &(x, y, e) in &covariates {
        let z = e * e;
        sxx.add(x * x);
        sxy.add(x * y);
        syy.add(y * y);
        sxz.add(x * z);
        syz.add(y * z);
    }
    let (sxx, sxy, syy, sxz, syz) = (sxx.value(), sxy.value(), syy.value(), sxz.value(), syz.value());
    let det = sxx * syy - sxy * sxy;
    if det.abs() <= 1e-300 || !det.is_finite() {
        return Err(AnalysisError::DegenerateGrid);
    }
    let mut c1 = (sxz * syy - syz * sxy) / det;
    let mut c2 = (syz * sxx - sxz * sxy) / det;
    if c1 < 0.0 {
        c1 = 0.0;
        c2 = (syz / syy).max(0.0);
    } else if c2 < 0.0 {
        c2 = 0.0;
        c1 = (sxz / sxx).max(0.0);
    }

    // One Gauss-Newton step on the unsquared residuals.
    let (mut jaa, mut jab, mut jbb, mut jar, mut jbr) =
        (KahanSum::new(), KahanSum::new(), KahanSum::new(), KahanSum::new(), KahanSum::new());
    let mut usable = 0usize;
    for &(x, y, e) in &covariates {
        let model_sq = c1 * x + c2 * y;
        if model_sq <= 0.0 {
            continue;
        }
        usable += 1;
        let m = model_sq.sqrt();
        let (a, b) = (x / (2.0 * m), y / (2.0 * m));
        let r = m - e;
        jaa.add(a * a);
        jab.add(a * b);
        jbb.add(b * b);
        jar.add(a * r);
        jbr.add(b * r);
    }
    if usable >= 2 {
        let det = jaa.value() * jbb.value() - jab.value() * jab.value();
        if det.abs() > 1e-300 {
            let d1 = (-jar.value() * jbb.value() + jbr.value() * jab.value()) / det;
            let d2 = (-jbr.value() * jaa.value() + jar.value() * jab.value()) / det;
            c1 = (c1 + d1).max(0.0);
            c2 = (c2 + d2).max(0.0);
        }
    }

    BoundConstants::new(c1.max(f64::MIN_POSITIVE), c2.max(f64::MIN_POSITIVE), s, BoundFlavor::PowerLaw)
}

/// Least-squares decay exponent: the negated slope of log eps against log n.
pub fn empirical_rate(points: &[(usize, f64)]) -> Result<f64, AnalysisError> {
    if points.len() < 3 {
        return Err(AnalysisError::TooFewPoints);
    }
    for w in points.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(AnalysisError::TooFewPoints);
        }
    }
    if points.iter().any(|&(_, e)| e <= 0.0 || e.is_nan()) {
        return Err(AnalysisError::NonPositiveError);
    }
    let logs: Vec<(f64, f64)> =
        points.iter().map(|&(n, e)| ((n as f64).ln(), e.ln())).collect();
    let count = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / count;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / count;
    let mut num = 0.0;
    let mut den = 0.0;
    for &(x, y) in &logs {
        num += (x - mean_x) * (y - mean_y);
        den += (x - mean_x) * (x - mean_x);
    }
    Ok(-num / den)
}
