//! Reproducible sampling of the test-family random variable by the inverse
//! function method: ξ = f⁻¹(α) with α uniform on (0, 1).
//!
//! Uniforms come from a counter-based stream (splitmix-style output function
//! indexed by sample position), so a batch is a pure function of
//! (seed, stream id, index) and can be partitioned across threads without
//! changing a single bit of the result.
//!
//! The two families used in the experiments, (ν1, ν2) = (1, 2) and (3, 2),
//! have closed-form inverses: a quadratic branch plus a Cardano cubic branch
//! for the first, and a Ferrari quartic branch plus a Cardano branch for the
//! second. Every other parameter choice goes through a safeguarded
//! Newton/bisection solve of f(ξ) = α on the bracketing half-interval.

use num::complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::testfam::TestFamilyParams;

#[derive(Debug, Error, PartialEq)]
pub enum SamplerError {
    #[error("root finder failed to converge for alpha = {alpha} after {iterations} iterations")]
    RootFindFailed { alpha: f64, iterations: u32 },
    #[error("sample count must be at least 1")]
    EmptyRequest,
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Identifies where a batch came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub seed: u64,
    pub stream_id: u64,
}

/// Counter-based uniform stream on (0, 1).
///
/// `uniform_at(k)` depends only on (seed, stream_id, k): distinct stream ids
/// give decorrelated streams, and the output never hits 0 or 1 exactly
/// (52 random bits centered inside the unit interval).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    key: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let key = mix64(mix64(seed).wrapping_add(stream_id.wrapping_mul(GOLDEN_GAMMA)));
        Self { seed, stream_id, key }
    }

    pub fn provenance(&self) -> Provenance {
        Provenance { seed: self.seed, stream_id: self.stream_id }
    }

    /// The k-th uniform of the stream, strictly inside (0, 1).
    #[inline]
    pub fn uniform_at(&self, index: u64) -> f64 {
        let bits = mix64(self.key.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)));
        const SCALE: f64 = 1.0 / (1u64 << 52) as f64;
        ((bits >> 12) as f64 + 0.5) * SCALE
    }

    /// First `count` uniforms, in counter order.
    pub fn uniforms(&self, count: usize) -> Vec<f64> {
        if count >= PAR_THRESHOLD {
            (0..count as u64).into_par_iter().map(|k| self.uniform_at(k)).collect()
        } else {
            (0..count as u64).map(|k| self.uniform_at(k)).collect()
        }
    }
}

const PAR_THRESHOLD: usize = 1 << 16;

/// Realizations ξ_1..ξ_N of the family random variable, with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    values: Vec<f64>,
    params: TestFamilyParams,
    provenance: Provenance,
}

impl SampleBatch {
    fn new(values: Vec<f64>, params: TestFamilyParams, provenance: Provenance) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite() && v.abs() < 1.0));
        Self { values, params, provenance }
    }

    /// Wrap realizations produced by an external sampler.
    ///
    /// Values must lie in [-1, 1]; streams produced by this crate stay
    /// strictly inside the open interval.
    pub fn from_values(values: Vec<f64>, params: TestFamilyParams, provenance: Provenance) -> Self {
        assert!(
            values.iter().all(|v| v.is_finite() && v.abs() <= 1.0),
            "sample values must lie in [-1, 1]"
        );
        Self { values, params, provenance }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn params(&self) -> &TestFamilyParams {
        &self.params
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Scalar inverse CDFs
// ---------------------------------------------------------------------------

/// Generic inverse by safeguarded Newton within a maintained bracket.
///
/// The density vanishes at the outer endpoints, so a raw Newton step can
/// escape; any step leaving the bracket falls back to bisection. Stops at
/// |f(x) - alpha| <= 1e-13 or bracket width <= 1e-14.
pub fn inverse_cdf_generic(p: &TestFamilyParams, alpha: f64) -> Result<f64, SamplerError> {
    debug_assert!(alpha > 0.0 && alpha < 1.0);
    let (mut lo, mut hi) = if alpha < p.f_at_zero() { (-1.0, 0.0) } else { (0.0, 1.0) };
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let residual = p.distribution(x) - alpha;
        if residual.abs() <= 1e-13 {
            return Ok(x);
        }
        if residual > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        if hi - lo <= 1e-14 {
            return Ok(0.5 * (lo + hi));
        }
        let slope = p.density(x);
        let newton = x - residual / slope;
        x = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(SamplerError::RootFindFailed { alpha, iterations: 200 })
}

/// Cardano branch shared by both closed forms: the middle real root of
/// x³ + p x + q with p = -3 and A = (-q/2 + sqrt((q/2)² - 1))^{1/3}.
///
/// The cube root argument sits in the second quadrant, so arg A lies in
/// (π/6, π/3) and the root -Re A + sqrt(3) Im A falls in (0, 1).
#[inline]
fn cardano_root(half_q: f64) -> f64 {
    let z = Complex64::new(-half_q, (1.0 - half_q * half_q).max(0.0).sqrt());
    let a = z.cbrt();
    debug_assert!(
        a.arg() > std::f64::consts::FRAC_PI_6 - 1e-9 && a.arg() < std::f64::consts::FRAC_PI_3 + 1e-9,
        "cube root argument {} outside (pi/6, pi/3)",
        a.arg()
    );
    -a.re + 3f64.sqrt() * a.im
}

/// Closed-form inverse for (ν1, ν2) = (1, 2).
#[inline]
pub fn inverse_cdf_12(alpha: f64) -> f64 {
    debug_assert!(alpha > 0.0 && alpha < 1.0);
    if alpha < 3.0 / 7.0 {
        (7.0 * alpha / 3.0).sqrt() - 1.0
    } else {
        cardano_root((7.0 * alpha - 3.0) / 4.0)
    }
}

/// Closed-form inverse for (ν1, ν2) = (3, 2).
///
/// The left branch solves the quartic x⁴ + 4x + 3 - 17α/3 = 0 by Ferrari's
/// formulas with the real cube root in the resolvent; the argument of the
/// inner square root stays positive because |17α - 9|³ < 729 on this branch.
#[inline]
pub fn inverse_cdf_32(alpha: f64) -> f64 {
    debug_assert!(alpha > 0.0 && alpha < 1.0);
    if alpha < 9.0 / 17.0 {
        let u = 17.0 * alpha - 9.0;
        let omega = (1.0 + (1.0 + u * u * u / 729.0).max(0.0).sqrt()).cbrt();
        let y = omega - u / (9.0 * omega);
        -(y / 2.0).sqrt() + (-y / 2.0 + (2.0 / y).sqrt()).max(0.0).sqrt()
    } else {
        cardano_root((17.0 * alpha - 9.0) / 8.0)
    }
}

// ---------------------------------------------------------------------------
// Batch samplers
// ---------------------------------------------------------------------------

fn batch_with<F: Fn(f64) -> f64 + Sync>(
    params: TestFamilyParams,
    rng: &RngStream,
    count: usize,
    inverse: F,
) -> Result<SampleBatch, SamplerError> {
    if count == 0 {
        return Err(SamplerError::EmptyRequest);
    }
    let values: Vec<f64> = if count >= PAR_THRESHOLD {
        (0..count as u64).into_par_iter().map(|k| inverse(rng.uniform_at(k))).collect()
    } else {
        (0..count as u64).map(|k| inverse(rng.uniform_at(k))).collect()
    };
    Ok(SampleBatch::new(values, params, rng.provenance()))
}

/// Sample any family through the generic root finder.
pub fn sample_generic(
    p: &TestFamilyParams,
    rng: &RngStream,
    count: usize,
) -> Result<SampleBatch, SamplerError> {
    if count == 0 {
        return Err(SamplerError::EmptyRequest);
    }
    let solve = |k: u64| inverse_cdf_generic(p, rng.uniform_at(k));
    let values: Result<Vec<f64>, SamplerError> = if count >= PAR_THRESHOLD {
        (0..count as u64).into_par_iter().map(solve).collect()
    } else {
        (0..count as u64).map(solve).collect()
    };
    Ok(SampleBatch::new(values?, *p, rng.provenance()))
}

/// Sample the (1, 2) family by its closed form.
pub fn sample_closed_12(rng: &RngStream, count: usize) -> Result<SampleBatch, SamplerError> {
    let p = TestFamilyParams::new(1, 2).expect("valid parameters");
    batch_with(p, rng, count, inverse_cdf_12)
}

/// Sample the (3, 2) family by its closed form.
pub fn sample_closed_32(rng: &RngStream, count: usize) -> Result<SampleBatch, SamplerError> {
    let p = TestFamilyParams::new(3, 2).expect("valid parameters");
    batch_with(p, rng, count, inverse_cdf_32)
}

/// Sample a family, using the closed form when one exists.
pub fn sample(
    p: &TestFamilyParams,
    rng: &RngStream,
    count: usize,
) -> Result<SampleBatch, SamplerError> {
    match (p.nu1(), p.nu2()) {
        (1, 2) => sample_closed_12(rng, count),
        (3, 2) => sample_closed_32(rng, count),
        _ => sample_generic(p, rng, count),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ks_statistic;

    fn fam(nu1: u32, nu2: u32) -> TestFamilyParams {
        TestFamilyParams::new(nu1, nu2).unwrap()
    }

    #[test]
    fn stream_is_deterministic_and_streams_differ() {
        let a = RngStream::new(42, 0);
        let b = RngStream::new(42, 0);
        let c = RngStream::new(42, 1);
        for k in 0..100 {
            assert_eq!(a.uniform_at(k).to_bits(), b.uniform_at(k).to_bits());
        }
        assert!((0..100).any(|k| a.uniform_at(k) != c.uniform_at(k)));
    }

    #[test]
    fn uniforms_strictly_inside_unit_interval() {
        let rng = RngStream::new(0, 0);
        for k in 0..100_000u64 {
            let u = rng.uniform_at(k);
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn quadratic_branch_known_value() {
        // f_{1,2}(-1/2) = 3/28, so alpha = 3/28 must map back to -1/2.
        let xi = inverse_cdf_12(3.0 / 28.0);
        assert!((xi + 0.5).abs() < 1e-12);
        assert!((fam(1, 2).distribution(-0.5) - 3.0 / 28.0).abs() < 1e-15);
    }

    #[test]
    fn branch_point_continuity_12() {
        let at = 3.0 / 7.0;
        assert!(inverse_cdf_12(at).abs() < 1e-12);
        assert!(inverse_cdf_12(at - 1e-12).abs() < 1e-6);
        assert!(inverse_cdf_12(at - 1e-12) < 0.0);
    }

    #[test]
    fn branch_point_continuity_32() {
        let at = 9.0 / 17.0;
        assert!(inverse_cdf_32(at).abs() < 1e-11);
        assert!(inverse_cdf_32(at - 1e-12) < 0.0);
        assert!(inverse_cdf_32(at + 1e-12) >= 0.0);
    }

    #[test]
    fn closed_forms_match_generic_on_grid() {
        let p12 = fam(1, 2);
        let p32 = fam(3, 2);
        for j in 0..1000 {
            let alpha = (j as f64 + 0.5) / 1000.0;
            let g12 = inverse_cdf_generic(&p12, alpha).unwrap();
            let g32 = inverse_cdf_generic(&p32, alpha).unwrap();
            assert!((inverse_cdf_12(alpha) - g12).abs() <= 1e-10, "alpha={alpha}");
            assert!((inverse_cdf_32(alpha) - g32).abs() <= 1e-10, "alpha={alpha}");
        }
        assert!((inverse_cdf_12(0.9) - inverse_cdf_generic(&p12, 0.9).unwrap()).abs() < 1e-11);
    }

    #[test]
    fn tiny_alpha_stays_inside_support() {
        let xi = inverse_cdf_12(1e-9);
        let want = (7e-9f64 / 3.0).sqrt() - 1.0;
        assert!(xi > -1.0);
        assert!((xi - want).abs() < 1e-12);
    }

    #[test]
    fn generic_hits_split_point() {
        let xi = inverse_cdf_generic(&fam(3, 2), 9.0 / 17.0).unwrap();
        assert!(xi.abs() < 1e-11);
    }

    #[test]
    fn inverse_property_high_alpha() {
        let xi = inverse_cdf_32(0.99);
        assert!(xi > 0.0 && xi < 1.0);
        assert!((fam(3, 2).distribution(xi) - 0.99).abs() < 1e-11);
    }

    #[test]
    fn inverse_property_on_batches() {
        for (nu1, nu2) in [(1, 2), (3, 2), (4, 5)] {
            let p = fam(nu1, nu2);
            let rng = RngStream::new(314, 7);
            let batch = sample(&p, &rng, 4096).unwrap();
            for (k, &xi) in batch.values().iter().enumerate() {
                let alpha = rng.uniform_at(k as u64);
                assert!(
                    (p.distribution(xi) - alpha).abs() <= 1e-10,
                    "({nu1},{nu2}) k={k}"
                );
            }
        }
    }

    #[test]
    fn batches_are_bit_reproducible() {
        let p = fam(3, 2);
        let a = sample(&p, &RngStream::new(9, 3), 10_000).unwrap();
        let b = sample(&p, &RngStream::new(9, 3), 10_000).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.provenance(), Provenance { seed: 9, stream_id: 3 });
    }

    #[test]
    fn empty_requests_are_rejected() {
        let p = fam(1, 2);
        assert_eq!(sample(&p, &RngStream::new(0, 0), 0), Err(SamplerError::EmptyRequest));
        assert_eq!(
            sample_generic(&p, &RngStream::new(0, 0), 0),
            Err(SamplerError::EmptyRequest)
        );
    }

    #[test]
    fn ks_smoke_test() {
        let n = 100_000;
        for (nu1, nu2) in [(1, 2), (3, 2)] {
            let p = fam(nu1, nu2);
            let mut values = sample(&p, &RngStream::new(2024, 0), n).unwrap().values().to_vec();
            values.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            let d = ks_statistic(&values, |x| p.distribution(x));
            assert!(d < 1.63 / (n as f64).sqrt(), "({nu1},{nu2}): D={d}");
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(256))]

            #[test]
            fn uniform_stays_inside_open_interval(seed: u64, stream: u64, index: u64) {
                let u = RngStream::new(seed, stream).uniform_at(index);
                prop_assert!(u > 0.0 && u < 1.0);
            }

            #[test]
            fn closed_forms_strictly_monotone(
                alpha in 1e-6f64..0.999,
                gap in 1e-9f64..1e-3,
            ) {
                let a2 = (alpha + gap).min(0.9999999);
                prop_assume!(a2 > alpha);
                prop_assert!(inverse_cdf_12(alpha) < inverse_cdf_12(a2));
                prop_assert!(inverse_cdf_32(alpha) < inverse_cdf_32(a2));
            }

            #[test]
            fn generic_inverse_round_trips(
                alpha in 1e-6f64..0.999999,
                nu1 in 1u32..6,
                nu2 in 1u32..6,
            ) {
                prop_assume!(nu1 != nu2);
                let p = TestFamilyParams::new(nu1, nu2).unwrap();
                let xi = inverse_cdf_generic(&p, alpha).unwrap();
                prop_assert!(xi > -1.0 && xi < 1.0);
                prop_assert!((p.distribution(xi) - alpha).abs() <= 1e-10);
            }
        }
    }
}
