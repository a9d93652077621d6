//! Two-parameter family of test densities on Ω = [-1, 1].
//!
//! For natural numbers ν1 ≠ ν2 the density is
//!
//!   g(x) = γ (1 - (-x)^ν1) on [-1, 0),  γ (1 - x^ν2) on [0, 1],  0 elsewhere,
//!
//! with γ the normalizing constant. Varying min{ν1, ν2} tunes the Sobolev
//! smoothness of g at the gluing point x = 0, which makes the family a
//! sharp test bed for projection-estimate convergence rates.
//!
//! Expansion coefficients of both g and its distribution function come from
//! the recurrences for Q±_{ν,i} = ∫ x^ν P_i(x) dx over the half-intervals.
//! Everything that enters a reported error value (squared norms, partial
//! coefficient sums) is evaluated in exact rational arithmetic and rounded
//! once at the end: the truncation residual at large n loses all but the
//! last couple of significant digits to cancellation in plain f64.

use num::bigint::BigInt;
use num::rational::Ratio;
use num::traits::ToPrimitive;
use num::{BigRational, One, Signed, Zero};
use thiserror::Error;

use crate::legendre::{norm_factor, CoeffVector};

#[derive(Debug, Error, PartialEq)]
pub enum TestFamilyError {
    #[error("invalid family parameters (nu1={nu1}, nu2={nu2}): need natural numbers with nu1 != nu2")]
    InvalidParameters { nu1: u32, nu2: u32 },
    #[error("negative truncation radicand {value:e} signals a coefficient bug")]
    NegativeRadicand { value: f64 },
    #[error("sigma must lie in (0, 1), got {sigma}")]
    SigmaOutOfRange { sigma: f64 },
}

/// Parameters (ν1, ν2) with the derived normalizer γ and split point value
/// f(0) = γ ν1/(ν1+1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestFamilyParams {
    nu1: u32,
    nu2: u32,
    gamma: f64,
    f_at_zero: f64,
}

impl TestFamilyParams {
    pub fn new(nu1: u32, nu2: u32) -> Result<Self, TestFamilyError> {
        if nu1 == 0 || nu2 == 0 || nu1 == nu2 {
            return Err(TestFamilyError::InvalidParameters { nu1, nu2 });
        }
        let (n1, n2) = (nu1 as f64, nu2 as f64);
        let gamma = 1.0 / (n1 / (n1 + 1.0) + n2 / (n2 + 1.0));
        // f(0) = γ ν1/(ν1+1) = ν1(ν2+1) / (ν1 + 2 ν1 ν2 + ν2), evaluated in
        // the integer form to keep the branch threshold exact.
        let f_at_zero = (n1 * (n2 + 1.0)) / (n1 + 2.0 * n1 * n2 + n2);
        Ok(Self { nu1, nu2, gamma, f_at_zero })
    }

    pub fn nu1(&self) -> u32 {
        self.nu1
    }

    pub fn nu2(&self) -> u32 {
        self.nu2
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn f_at_zero(&self) -> f64 {
        self.f_at_zero
    }

    /// Largest integer smoothness: g lies in the order-min{ν1,ν2} Sobolev
    /// space on Ω.
    pub fn integer_smoothness(&self) -> u32 {
        self.nu1.min(self.nu2)
    }

    /// Supremum of admissible fractional smoothness, min{ν1,ν2} + 1/2.
    pub fn smoothness_sup(&self) -> f64 {
        self.integer_smoothness() as f64 + 0.5
    }

    /// g is continuously differentiable exactly this many times at x = 0.
    pub fn continuity_order(&self) -> u32 {
        self.integer_smoothness() - 1
    }

    /// Density value at x (zero outside Ω).
    pub fn density(&self, x: f64) -> f64 {
        if !(-1.0..=1.0).contains(&x) {
            return 0.0;
        }
        if x < 0.0 {
            self.gamma * (1.0 - (-x).powi(self.nu1 as i32))
        } else {
            self.gamma * (1.0 - x.powi(self.nu2 as i32))
        }
    }

    /// Distribution function value at x (0 below Ω, 1 above).
    pub fn distribution(&self, x: f64) -> f64 {
        if x < -1.0 {
            return 0.0;
        }
        if x > 1.0 {
            return 1.0;
        }
        let n1 = self.nu1 as f64;
        let head = n1 / (n1 + 1.0);
        if x < 0.0 {
            self.gamma * (head + x + (-x).powi(self.nu1 as i32 + 1) / (n1 + 1.0))
        } else {
            let n2 = self.nu2 as f64;
            self.gamma * (head + x - x.powi(self.nu2 as i32 + 1) / (n2 + 1.0))
        }
    }
}

/// Table of the half-interval moments Q±_{ν,i} = ∫ x^ν P_i(x) dx taken over
/// [-1, 0] (minus) and [0, 1] (plus).
///
/// Built bottom-up from the ν = 0 row; level ν consumes index i+1 of level
/// ν-1, so row ν is built one column shorter than row ν-1. Requesting
/// (numax, imax) therefore allocates imax + numax columns at the base.
#[derive(Debug, Clone)]
pub struct QTable {
    numax: usize,
    imax: usize,
    minus: Vec<Vec<f64>>,
    plus: Vec<Vec<f64>>,
}

impl QTable {
    pub fn build(numax: usize, imax: usize) -> Self {
        let mut minus = Vec::with_capacity(numax + 1);
        let mut plus = Vec::with_capacity(numax + 1);
        let base_len = imax + numax + 1;
        minus.push(base_row(base_len, -0.5));
        plus.push(base_row(base_len, 0.5));
        for nu in 1..=numax {
            let len = base_len - nu;
            minus.push(recurrence_row(&minus[nu - 1], len));
            plus.push(recurrence_row(&plus[nu - 1], len));
        }
        Self { numax, imax, minus, plus }
    }

    pub fn numax(&self) -> usize {
        self.numax
    }

    pub fn imax(&self) -> usize {
        self.imax
    }

    pub fn minus(&self, nu: usize, i: usize) -> f64 {
        self.minus[nu][i]
    }

    pub fn plus(&self, nu: usize, i: usize) -> f64 {
        self.plus[nu][i]
    }
}

/// ν = 0 row: Q_{0,0} = 1, Q_{0,1} = ±1/2, zero for even i >= 2 and the odd
/// tail Q_{0,i} = (2-i)/(i+1) Q_{0,i-2}.
fn base_row(len: usize, q01: f64) -> Vec<f64> {
    let mut row = vec![0.0; len];
    row[0] = 1.0;
    if len > 1 {
        row[1] = q01;
    }
    let mut i = 3;
    while i < len {
        row[i] = (2.0 - i as f64) / (i as f64 + 1.0) * row[i - 2];
        i += 2;
    }
    row
}

/// Q_{ν,i} = ((i+1) Q_{ν-1,i+1} + i Q_{ν-1,i-1}) / (2i+1), with Q_{ν,-1} = 0.
fn recurrence_row(prev: &[f64], len: usize) -> Vec<f64> {
    let mut row = vec![0.0; len];
    for i in 0..len {
        let up = (i as f64 + 1.0) * prev[i + 1];
        let down = if i == 0 { 0.0 } else { i as f64 * prev[i - 1] };
        row[i] = (up + down) / (2.0 * i as f64 + 1.0);
    }
    row
}

/// Density combination: S_i = Q⁻_{0,i} - (-1)^ν1 Q⁻_{ν1,i} + Q⁺_{0,i} - Q⁺_{ν2,i}.
fn density_combination(p: &TestFamilyParams, q: &QTable, i: usize) -> f64 {
    let sign = if p.nu1 % 2 == 0 { 1.0 } else { -1.0 };
    q.minus(0, i) - sign * q.minus(p.nu1 as usize, i) + q.plus(0, i) - q.plus(p.nu2 as usize, i)
}

/// Distribution combination: the six Q± terms obtained by integrating the
/// piecewise antiderivative against P_i.
fn distribution_combination(p: &TestFamilyParams, q: &QTable, i: usize) -> f64 {
    let n1 = p.nu1 as f64;
    let head = n1 / (n1 + 1.0);
    let sign = if p.nu1 % 2 == 0 { -1.0 } else { 1.0 }; // (-1)^(ν1+1)
    head * q.minus(0, i)
        + q.minus(1, i)
        + sign / (n1 + 1.0) * q.minus(p.nu1 as usize + 1, i)
        + head * q.plus(0, i)
        + q.plus(1, i)
        - q.plus(p.nu2 as usize + 1, i) / (p.nu2 as f64 + 1.0)
}

/// Exact expansion coefficients of the density up to degree n.
pub fn exact_density_coeffs(p: &TestFamilyParams, n: usize) -> CoeffVector {
    let q = QTable::build(p.nu1.max(p.nu2) as usize, n);
    let coeffs = (0..=n)
        .map(|i| p.gamma * norm_factor(i) * density_combination(p, &q, i))
        .collect();
    CoeffVector::density(coeffs)
}

/// Exact expansion coefficients of the distribution function up to degree n.
pub fn exact_distribution_coeffs(p: &TestFamilyParams, n: usize) -> CoeffVector {
    let q = QTable::build(p.nu1.max(p.nu2) as usize + 1, n);
    let coeffs = (0..=n)
        .map(|i| p.gamma * norm_factor(i) * distribution_combination(p, &q, i))
        .collect();
    CoeffVector::distribution(coeffs)
}

// ---------------------------------------------------------------------------
// Exact rational arithmetic
// ---------------------------------------------------------------------------

fn ratio(n: i64, d: i64) -> BigRational {
    Ratio::new(BigInt::from(n), BigInt::from(d))
}

fn gamma_ratio_exact(nu1: u32, nu2: u32) -> BigRational {
    let inv = ratio(nu1 as i64, nu1 as i64 + 1) + ratio(nu2 as i64, nu2 as i64 + 1);
    inv.recip()
}

/// Rational mirror of [`QTable`].
struct QTableExact {
    minus: Vec<Vec<BigRational>>,
    plus: Vec<Vec<BigRational>>,
}

impl QTableExact {
    fn build(numax: usize, imax: usize) -> Self {
        let base_len = imax + numax + 1;
        let mut minus = vec![base_row_exact(base_len, ratio(-1, 2))];
        let mut plus = vec![base_row_exact(base_len, ratio(1, 2))];
        for nu in 1..=numax {
            let len = base_len - nu;
            minus.push(recurrence_row_exact(&minus[nu - 1], len));
            plus.push(recurrence_row_exact(&plus[nu - 1], len));
        }
        Self { minus, plus }
    }
}

fn base_row_exact(len: usize, q01: BigRational) -> Vec<BigRational> {
    let mut row = vec![BigRational::zero(); len];
    row[0] = BigRational::one();
    if len > 1 {
        row[1] = q01;
    }
    let mut i = 3;
    while i < len {
        row[i] = ratio(2 - i as i64, i as i64 + 1) * row[i - 2].clone();
        i += 2;
    }
    row
}

fn recurrence_row_exact(prev: &[BigRational], len: usize) -> Vec<BigRational> {
    let mut row = Vec::with_capacity(len);
    for i in 0..len {
        let mut cell = ratio(i as i64 + 1, 1) * prev[i + 1].clone();
        if i > 0 {
            cell += ratio(i as i64, 1) * prev[i - 1].clone();
        }
        row.push(cell / ratio(2 * i as i64 + 1, 1));
    }
    row
}

/// Exact ∫ g² over Ω: per half-interval, ∫ (1 - t^ν)² dt = 2ν²/((ν+1)(2ν+1)).
pub fn squared_norms_exact(p: &TestFamilyParams) -> (BigRational, BigRational) {
    let gamma = gamma_ratio_exact(p.nu1, p.nu2);
    let gamma_sq = gamma.clone() * gamma;

    let h = |nu: i64| ratio(2 * nu * nu, (nu + 1) * (2 * nu + 1));
    let norm_g = gamma_sq.clone() * (h(p.nu1 as i64) + h(p.nu2 as i64));

    // f on the left half is γ(a - t + t^p/p) in t = -x with p = ν1+1 and
    // a = ν1/(ν1+1); on the right half γ(a + x - x^q/q) with q = ν2+1.
    let a = ratio(p.nu1 as i64, p.nu1 as i64 + 1);
    let pp = p.nu1 as i64 + 1;
    let qq = p.nu2 as i64 + 1;
    let third = ratio(1, 3);
    let left = a.clone() * a.clone() + third.clone() + ratio(1, pp * pp * (2 * pp + 1))
        - a.clone()
        + ratio(2, pp * (pp + 1)) * a.clone()
        - ratio(2, pp * (pp + 2));
    let right = a.clone() * a.clone() + third + ratio(1, qq * qq * (2 * qq + 1)) + a.clone()
        - ratio(2, qq * (qq + 1)) * a
        - ratio(2, qq * (qq + 2));
    let norm_f = gamma_sq * (left + right);

    (norm_g, norm_f)
}

/// Squared L2 norms (∫ g², ∫ f²) as floats.
pub fn squared_norms(p: &TestFamilyParams) -> (f64, f64) {
    let (g, f) = squared_norms_exact(p);
    (ratio_to_f64(&g), ratio_to_f64(&f))
}

/// Convert a big rational to f64 with ~1 ulp accuracy regardless of how
/// large the reduced numerator and denominator have grown.
fn ratio_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let negative = r.is_negative();
    let numer = r.numer().abs();
    let denom = r.denom().abs();
    let shift = 64i64 - (numer.bits() as i64 - denom.bits() as i64);
    let quotient: BigInt = if shift >= 0 {
        (numer << shift as u64) / denom
    } else {
        numer / (denom << (-shift) as u64)
    };
    let q = quotient.to_f64().expect("quotient has ~64 bits");
    let magnitude = q * 2f64.powi(-shift as i32);
    if negative {
        -magnitude
    } else {
        magnitude
    }
}

/// Truncation errors (ε_g, ε_f) at expansion length n:
/// ε = sqrt(‖u‖² - Σ_{i<=n} U_i²).
///
/// The radicand is assembled in exact rational arithmetic, so the only
/// rounding is the final conversion; the clamp below is the documented
/// contract for radicands within -1e-14 of zero.
pub fn deterministic_errors(p: &TestFamilyParams, n: usize) -> Result<(f64, f64), TestFamilyError> {
    let (rad_g, rad_f) = truncation_radicands(p, n);
    Ok((clamped_sqrt(ratio_to_f64(&rad_g))?, clamped_sqrt(ratio_to_f64(&rad_f))?))
}

fn clamped_sqrt(radicand: f64) -> Result<f64, TestFamilyError> {
    if radicand < -1e-14 {
        return Err(TestFamilyError::NegativeRadicand { value: radicand });
    }
    Ok(radicand.max(0.0).sqrt())
}

fn truncation_radicands(p: &TestFamilyParams, n: usize) -> (BigRational, BigRational) {
    let q = QTableExact::build(p.nu1.max(p.nu2) as usize + 1, n);
    let gamma = gamma_ratio_exact(p.nu1, p.nu2);
    let gamma_sq = gamma.clone() * gamma;
    let (norm_g, norm_f) = squared_norms_exact(p);

    let n1 = p.nu1 as i64;
    let n2 = p.nu2 as i64;
    let head = ratio(n1, n1 + 1);
    let sign_g = if p.nu1 % 2 == 0 { ratio(1, 1) } else { ratio(-1, 1) };
    let sign_f = -sign_g.clone();

    let mut sum_g = BigRational::zero();
    let mut sum_f = BigRational::zero();
    for i in 0..=n {
        // G_i² = γ² (2i+1)/2 S_i², F_i² = γ² (2i+1)/2 T_i²: the square of the
        // irrational normalization factor is rational.
        let weight = ratio(2 * i as i64 + 1, 2);
        let s = q.minus[0][i].clone() - sign_g.clone() * q.minus[n1 as usize][i].clone()
            + q.plus[0][i].clone()
            - q.plus[n2 as usize][i].clone();
        sum_g += gamma_sq.clone() * weight.clone() * s.clone() * s;
        let t = head.clone() * q.minus[0][i].clone()
            + q.minus[1][i].clone()
            + sign_f.clone() * q.minus[n1 as usize + 1][i].clone() / ratio(n1 + 1, 1)
            + head.clone() * q.plus[0][i].clone()
            + q.plus[1][i].clone()
            - q.plus[n2 as usize + 1][i].clone() / ratio(n2 + 1, 1);
        sum_f += gamma_sq.clone() * weight * t.clone() * t;
    }
    (norm_g - sum_g, norm_f - sum_f)
}

/// Outcome of the Slobodetskij seminorm integral for the step function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SlobodetskijIntegral {
    Finite(f64),
    Divergent,
}

/// Double integral of |η(x) - η(y)|² / |x - y|^{1+2σ} over Ω² for the
/// indicator η of (0, ∞), in closed form: 2 (2^{-2σ} - 1) / (σ (2σ - 1)).
///
/// Finite exactly for σ < 1/2; the integral diverges for σ >= 1/2, which is
/// what pins the fractional smoothness of the family at min{ν1,ν2} + 1/2.
pub fn indicator_slobodetskij_integral(sigma: f64) -> Result<SlobodetskijIntegral, TestFamilyError> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(TestFamilyError::SigmaOutOfRange { sigma });
    }
    if sigma >= 0.5 {
        return Ok(SlobodetskijIntegral::Divergent);
    }
    let value = 2.0 * ((-2.0 * sigma).exp2() - 1.0) / (sigma * (2.0 * sigma - 1.0));
    Ok(SlobodetskijIntegral::Finite(value))
}
