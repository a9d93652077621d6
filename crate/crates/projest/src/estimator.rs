//! Randomized projection estimates of the density and distribution function
//! from a sample batch.
//!
//! Two algebraically identical routes estimate the density coefficients
//! Ḡ_i = (1/N) Σ_l P̂_i(ξ_l):
//!
//! - the moment route expands P̂_i in monomials and combines sample moments
//!   M̄_k with the explicit factorial weights (numerically unstable as the
//!   degree grows: the weights reach ~2^i while the result stays O(1));
//! - the direct route runs one basis recurrence sweep per sample and is the
//!   production default.
//!
//! Distribution coefficients F̄_0..F̄_n follow from Ḡ_0..Ḡ_{n+1} through the
//! antiderivative transform, which is why every estimate carries one extra
//! density coefficient.
//!
//! Accumulation is compensated and chunked with a fixed chunk size, and
//! chunk partials combine in index order, so results are bit-identical no
//! matter how many threads participate.

use rayon::prelude::*;
use thiserror::Error;

use crate::legendre::{
    antiderivative_transform, explicit_coefficient, norm_factor, CoeffVector, LegendreError,
};
use crate::sampler::{sample, Provenance, RngStream, SampleBatch, SamplerError};
use crate::stats::KahanSum;
use crate::testfam::{
    deterministic_errors, exact_density_coeffs, exact_distribution_coeffs, TestFamilyError,
    TestFamilyParams,
};

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("cannot estimate from an empty batch")]
    EmptyBatch,
    #[error("moment vector of length {len} too short for degree {degree}")]
    MomentsTooShort { len: usize, degree: usize },
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Legendre(#[from] LegendreError),
    #[error(transparent)]
    Family(#[from] TestFamilyError),
}

/// Which function an error report refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Density,
    Distribution,
}

impl Target {
    /// Single-letter label used in table output.
    pub fn label(&self) -> &'static str {
        match self {
            Target::Density => "g",
            Target::Distribution => "f",
        }
    }
}

/// Coefficient estimation route.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Moment combination route (algorithm 1).
    Moment,
    /// Direct recurrence evaluation route (algorithm 2, the default).
    Direct,
}

impl Algorithm {
    pub fn id(&self) -> u8 {
        match self {
            Algorithm::Moment => 1,
            Algorithm::Direct => 2,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            1 => Some(Algorithm::Moment),
            2 => Some(Algorithm::Direct),
            _ => None,
        }
    }
}

/// Estimated initial moments M̄_0..M̄_k with M̄_0 = 1 by definition.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    moments: Vec<f64>,
}

impl MomentVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.moments
    }

    pub fn len(&self) -> usize {
        self.moments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moments.is_empty()
    }
}

const CHUNK: usize = 1 << 14;

/// Accumulate `width` compensated sums over the batch, using fixed chunking
/// and in-order combination so the result is independent of parallelism.
fn chunked_accumulate<F>(values: &[f64], width: usize, per_sample: F) -> Vec<f64>
where
    F: Fn(f64, &mut [KahanSum]) + Sync,
{
    let partials: Vec<Vec<f64>> = if values.len() >= 2 * CHUNK {
        values
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut acc = vec![KahanSum::new(); width];
                for &x in chunk {
                    per_sample(x, &mut acc);
                }
                acc.into_iter().map(|a| a.value()).collect()
            })
            .collect()
    } else {
        values
            .chunks(CHUNK)
            .map(|chunk| {
                let mut acc = vec![KahanSum::new(); width];
                for &x in chunk {
                    per_sample(x, &mut acc);
                }
                acc.into_iter().map(|a| a.value()).collect()
            })
            .collect()
    };
    let mut combined = vec![KahanSum::new(); width];
    for partial in &partials {
        for (acc, &v) in combined.iter_mut().zip(partial) {
            acc.add(v);
        }
    }
    combined.into_iter().map(|a| a.value()).collect()
}

/// Sample moments M̄_k = (1/N) Σ_l ξ_l^k for k = 1..=kmax, with M̄_0 = 1.
pub fn estimate_moments(batch: &SampleBatch, kmax: usize) -> Result<MomentVector, EstimatorError> {
    if batch.is_empty() {
        return Err(EstimatorError::EmptyBatch);
    }
    assert!(kmax >= 1, "kmax must be at least 1");
    let sums = chunked_accumulate(batch.values(), kmax + 1, |x, acc| {
        let mut power = 1.0;
        for slot in acc.iter_mut().skip(1) {
            power *= x;
            slot.add(power);
        }
    });
    let n = batch.len() as f64;
    let mut moments = vec![1.0];
    moments.extend(sums.into_iter().skip(1).map(|s| s / n));
    Ok(MomentVector { moments })
}

/// Density coefficient estimates from moments:
/// Ḡ_i = sqrt((2i+1)/2) Σ_k c_{i,k} M̄_{i-2k} with c_{i,k} the explicit
/// Legendre monomial coefficients.
pub fn coeffs_from_moments(m: &MomentVector, n: usize) -> Result<CoeffVector, EstimatorError> {
    if m.len() < n + 1 {
        return Err(EstimatorError::MomentsTooShort { len: m.len(), degree: n });
    }
    let mut coeffs = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let mut acc = KahanSum::new();
        for k in 0..=(i / 2) {
            let c = explicit_coefficient(i as u32, k as u32).expect("k <= i/2");
            acc.add(c * m.as_slice()[i - 2 * k]);
        }
        coeffs.push(norm_factor(i) * acc.value());
    }
    Ok(CoeffVector::density(coeffs))
}

/// Density coefficient estimates by direct evaluation:
/// Ḡ_i = (1/N) Σ_l P̂_i(ξ_l), one recurrence sweep per sample.
///
/// P̂_0 is constant, so Ḡ_0 is 1/sqrt(2) with zero variance; it is set
/// directly rather than averaged.
pub fn coeffs_direct(batch: &SampleBatch, n: usize) -> Result<CoeffVector, EstimatorError> {
    if batch.is_empty() {
        return Err(EstimatorError::EmptyBatch);
    }
    let norms: Vec<f64> = (0..=n).map(norm_factor).collect();
    let sums = chunked_accumulate(batch.values(), n + 1, |x, acc| {
        if acc.len() > 1 {
            acc[1].add(norms[1] * x);
        }
        let mut p_prev = 1.0;
        let mut p = x;
        for k in 1..acc.len().saturating_sub(1) {
            let kf = k as f64;
            let next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
            p_prev = p;
            p = next;
            acc[k + 1].add(norms[k + 1] * p);
        }
    });
    let count = batch.len() as f64;
    let mut coeffs: Vec<f64> = sums.into_iter().map(|s| s / count).collect();
    coeffs[0] = std::f64::consts::FRAC_1_SQRT_2;
    Ok(CoeffVector::density(coeffs))
}

/// Joint projection estimate: density coefficients to degree n+1 and the
/// derived distribution coefficients to degree n.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionEstimate {
    g_coeffs: CoeffVector,
    f_coeffs: CoeffVector,
    n: usize,
    sample_size: usize,
    algorithm: Algorithm,
    provenance: Provenance,
}

impl ProjectionEstimate {
    /// Build from already-estimated density coefficients of length n + 2.
    pub fn from_density_coeffs(
        g_coeffs: CoeffVector,
        sample_size: usize,
        algorithm: Algorithm,
        provenance: Provenance,
    ) -> Result<Self, EstimatorError> {
        let f_coeffs = antiderivative_transform(&g_coeffs)?;
        debug_assert_eq!(f_coeffs.len() + 1, g_coeffs.len());
        let n = g_coeffs.len() - 2;
        Ok(Self { g_coeffs, f_coeffs, n, sample_size, algorithm, provenance })
    }

    pub fn from_batch(
        batch: &SampleBatch,
        n: usize,
        algorithm: Algorithm,
    ) -> Result<Self, EstimatorError> {
        let g = match algorithm {
            Algorithm::Direct => coeffs_direct(batch, n + 1)?,
            Algorithm::Moment => {
                let moments = estimate_moments(batch, n + 1)?;
                coeffs_from_moments(&moments, n + 1)?
            }
        };
        Self::from_density_coeffs(g, batch.len(), algorithm, batch.provenance())
    }

    /// Density coefficients Ḡ_0..Ḡ_{n+1}.
    pub fn g_coeffs(&self) -> &CoeffVector {
        &self.g_coeffs
    }

    /// Distribution coefficients F̄_0..F̄_n.
    pub fn f_coeffs(&self) -> &CoeffVector {
        &self.f_coeffs
    }

    pub fn expansion_length(&self) -> usize {
        self.n
    }

    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }
}

/// Algorithm 1: sample, estimate moments to order n+1, combine into Ḡ, then
/// transform into F̄.
pub fn run_algorithm_1(
    p: &TestFamilyParams,
    n: usize,
    sample_size: usize,
    rng: &RngStream,
) -> Result<ProjectionEstimate, EstimatorError> {
    let batch = sample(p, rng, sample_size)?;
    ProjectionEstimate::from_batch(&batch, n, Algorithm::Moment)
}

/// Algorithm 2: sample, estimate Ḡ by recurrence sweeps, transform into F̄.
pub fn run_algorithm_2(
    p: &TestFamilyParams,
    n: usize,
    sample_size: usize,
    rng: &RngStream,
) -> Result<ProjectionEstimate, EstimatorError> {
    let batch = sample(p, rng, sample_size)?;
    ProjectionEstimate::from_batch(&batch, n, Algorithm::Direct)
}

/// Error of an estimate against exact truth, split by Parseval into the
/// truncation part and the coefficient-estimation part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub target: Target,
    pub n: usize,
    pub sample_size: usize,
    pub eps_det: f64,
    pub eps_stoch: f64,
    pub eps_total: f64,
    pub provenance: Provenance,
}

/// ε̄² = (‖u‖² - Σ_{i<=n} U_i²) + Σ_{i<=n} (U_i - Ū_i)² for u = g and u = f.
pub fn estimate_error_vs_truth(
    est: &ProjectionEstimate,
    p: &TestFamilyParams,
) -> Result<(ErrorReport, ErrorReport), EstimatorError> {
    let n = est.expansion_length();
    let (det_g, det_f) = deterministic_errors(p, n)?;
    let exact_g = exact_density_coeffs(p, n);
    let exact_f = exact_distribution_coeffs(p, n);

    let stoch_sq = |exact: &CoeffVector, got: &CoeffVector| {
        KahanSum::sum_iter(
            exact
                .as_slice()
                .iter()
                .zip(got.as_slice())
                .map(|(e, g)| (e - g) * (e - g)),
        )
    };
    // Sums run over i = 0..=n; the estimate's extra density coefficient is
    // only a transform input.
    let sg = stoch_sq(&exact_g, est.g_coeffs());
    let sf = stoch_sq(&exact_f, est.f_coeffs());

    let report = |target, det: f64, stoch_sq: f64| ErrorReport {
        target,
        n,
        sample_size: est.sample_size(),
        eps_det: det,
        eps_stoch: stoch_sq.sqrt(),
        eps_total: (det * det + stoch_sq).sqrt(),
        provenance: est.provenance(),
    };
    Ok((
        report(Target::Density, det_g, sg),
        report(Target::Distribution, det_f, sf),
    ))
}
