//! Legendre polynomials on Ω = [-1, 1].
//!
//! Standardized polynomials P_i satisfy P_i(1) = 1 and the three-term
//! recurrence (i+1) P_{i+1}(x) = (2i+1) x P_i(x) - i P_{i-1}(x) with
//! P_0 = 1, P_1 = x. The normalized family P̂_i = sqrt((2i+1)/2) P_i is
//! orthonormal in L2(Ω). The recurrence is the default evaluation path;
//! the explicit monomial form is kept for cross-validation at low degree,
//! where machine arithmetic keeps its factorial weights representable.

use num::bigint::BigUint;
use num::traits::ToPrimitive;
use num::One;
use thiserror::Error;

use crate::stats::KahanSum;

#[derive(Debug, Error, PartialEq)]
pub enum LegendreError {
    #[error("term index {k} out of range for degree {i} (max {})", i / 2)]
    TermIndexOutOfRange { i: u32, k: u32 },
    #[error("coefficient vector of length {len} too short: the transform consumes one degree")]
    InputTooShort { len: usize },
    #[error("antiderivative transform expects density coefficients")]
    NotADensity,
}

/// sqrt((2i+1)/2), the L2 normalization of P_i.
#[inline]
pub fn norm_factor(i: usize) -> f64 {
    ((2 * i + 1) as f64 / 2.0).sqrt()
}

/// P_i(x) by the three-term recurrence. Total function: out-of-range x is
/// permitted (the polynomials are entire).
pub fn eval_standardized(i: usize, x: f64) -> f64 {
    if i == 0 {
        return 1.0;
    }
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 1..i {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = next;
    }
    p
}

/// P̂_i(x) = sqrt((2i+1)/2) P_i(x).
pub fn eval_normalized(i: usize, x: f64) -> f64 {
    norm_factor(i) * eval_standardized(i, x)
}

/// All of P̂_0(x) .. P̂_n(x) in one recurrence sweep.
///
/// Element i is bit-identical to `eval_normalized(i, x)`: both paths run the
/// same recurrence arithmetic in the same order.
pub fn eval_normalized_all(n: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(norm_factor(0));
    if n == 0 {
        return out;
    }
    out.push(norm_factor(1) * x);
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = next;
        out.push(norm_factor(k + 1) * p);
    }
    out
}

/// Exact binomial coefficient.
fn binomial(n: u32, k: u32) -> BigUint {
    let k = k.min(n - k.min(n));
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for j in 0..k {
        num *= BigUint::from(n - j);
        den *= BigUint::from(j + 1);
    }
    num / den
}

/// Coefficient of x^{i-2k} in P_i: (1/2^i) (-1)^k (2i-2k)! / (k! (i-k)! (i-2k)!).
///
/// The factorial ratio equals C(2i-2k, i-k) * C(i-k, k); it is computed as an
/// exact integer and rounded once, so the result is accurate to ~1 ulp for
/// any degree where the value is representable. Very large degrees fall back
/// to log-gamma (the ratio itself overflows f64 near i = 1030).
pub fn explicit_coefficient(i: u32, k: u32) -> Result<f64, LegendreError> {
    if k > i / 2 {
        return Err(LegendreError::TermIndexOutOfRange { i, k });
    }
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    if i <= 300 {
        let ratio = binomial(2 * i - 2 * k, i - k) * binomial(i - k, k);
        let ratio = ratio.to_f64().expect("binomial product fits in f64 range");
        Ok(sign * ratio * 2f64.powi(-(i as i32)))
    } else {
        let ln = crate::special::ln_gamma((2 * i - 2 * k) as f64 + 1.0)
            - crate::special::ln_gamma(k as f64 + 1.0)
            - crate::special::ln_gamma((i - k) as f64 + 1.0)
            - crate::special::ln_gamma((i - 2 * k) as f64 + 1.0)
            - i as f64 * std::f64::consts::LN_2;
        Ok(sign * ln.exp())
    }
}

// Double-double helpers for the explicit evaluation path. The monomial terms
// of P_i reach ~2^i while the value stays O(1), so plain f64 term formation
// already costs ~1e-10 at degree 20 near the endpoints; carrying the products
// and the sum in ~106-bit arithmetic keeps the validation path trustworthy.
#[derive(Clone, Copy)]
struct TwoFloat {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> TwoFloat {
    let hi = a + b;
    let bb = hi - a;
    let lo = (a - (hi - bb)) + (b - bb);
    TwoFloat { hi, lo }
}

#[inline]
fn two_prod(a: f64, b: f64) -> TwoFloat {
    let hi = a * b;
    let lo = a.mul_add(b, -hi);
    TwoFloat { hi, lo }
}

impl TwoFloat {
    #[inline]
    fn from(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    #[inline]
    fn add(self, other: TwoFloat) -> Self {
        let s = two_sum(self.hi, other.hi);
        let lo = s.lo + self.lo + other.lo;
        let hi = s.hi + lo;
        Self { hi, lo: lo - (hi - s.hi) }
    }

    #[inline]
    fn mul(self, other: TwoFloat) -> Self {
        let p = two_prod(self.hi, other.hi);
        let lo = p.lo + self.hi * other.lo + self.lo * other.hi;
        let hi = p.hi + lo;
        Self { hi, lo: lo - (hi - p.hi) }
    }

    #[inline]
    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// P_i(x) from the explicit monomial formula. Cross-validation path; the
/// recurrence is preferred for production evaluation.
pub fn eval_explicit(i: u32, x: f64) -> f64 {
    let xx = TwoFloat::from(x);
    let mut acc = TwoFloat::from(0.0);
    let mut power = TwoFloat::from(1.0);
    let mut exponent = 0u32;
    for k in (0..=(i / 2)).rev() {
        let target = i - 2 * k;
        while exponent < target {
            power = power.mul(xx);
            exponent += 1;
        }
        let c = explicit_coefficient(i, k).expect("k in range");
        acc = acc.add(power.mul(TwoFloat::from(c)));
    }
    acc.value()
}

/// Which of the two expansion targets a coefficient vector represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffKind {
    Density,
    Distribution,
}

/// Ordered Fourier-Legendre coefficients c_0..c_n of a function on Ω.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVector {
    kind: CoeffKind,
    coeffs: Vec<f64>,
}

impl CoeffVector {
    pub fn density(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "coefficient vector cannot be empty");
        Self { kind: CoeffKind::Density, coeffs }
    }

    pub fn distribution(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "coefficient vector cannot be empty");
        Self { kind: CoeffKind::Distribution, coeffs }
    }

    pub fn kind(&self) -> CoeffKind {
        self.kind
    }

    /// Highest represented degree, i.e. len - 1.
    pub fn max_degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    /// Partial Parseval sum: sum of c_i^2 for i <= n.
    pub fn partial_square_sum(&self, n: usize) -> f64 {
        KahanSum::sum_iter(self.coeffs.iter().take(n + 1).map(|c| c * c))
    }
}

/// Evaluate the truncated series Σ c_i P̂_i(x).
///
/// Outside Ω the represented functions are known: a density vanishes and a
/// distribution function is 0 left of Ω and 1 right of it.
pub fn eval_series(c: &CoeffVector, x: f64) -> f64 {
    if x < -1.0 {
        return match c.kind {
            CoeffKind::Density => 0.0,
            CoeffKind::Distribution => 0.0,
        };
    }
    if x > 1.0 {
        return match c.kind {
            CoeffKind::Density => 0.0,
            CoeffKind::Distribution => 1.0,
        };
    }
    let basis = eval_normalized_all(c.max_degree(), x);
    let mut acc = KahanSum::new();
    for (ci, pi) in c.coeffs.iter().zip(&basis) {
        acc.add(ci * pi);
    }
    acc.value()
}

/// Distribution coefficients from density coefficients.
///
/// With G_0..G_{n+1} given, returns F_0..F_n where
/// F_0 = G_0 - G_1/sqrt(3) and
/// F_i = G_{i-1}/sqrt((2i-1)(2i+1)) - G_{i+1}/sqrt((2i+1)(2i+3)).
/// One input degree is consumed, so estimating a distribution to degree n
/// requires density coefficients to degree n+1.
pub fn antiderivative_transform(c: &CoeffVector) -> Result<CoeffVector, LegendreError> {
    if c.kind != CoeffKind::Density {
        return Err(LegendreError::NotADensity);
    }
    if c.len() < 2 {
        return Err(LegendreError::InputTooShort { len: c.len() });
    }
    let g = &c.coeffs;
    let out_len = g.len() - 1;
    let mut f = Vec::with_capacity(out_len);
    f.push(g[0] - g[1] / 3f64.sqrt());
    for i in 1..out_len {
        let lo = ((2 * i - 1) as f64 * (2 * i + 1) as f64).sqrt();
        let hi = ((2 * i + 1) as f64 * (2 * i + 3) as f64).sqrt();
        f.push(g[i - 1] / lo - g[i + 1] / hi);
    }
    Ok(CoeffVector::distribution(f))
}

/// Evaluation strategy selector for [`BasisEval`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    Recurrence,
    Explicit,
}

/// Evaluation context for the normalized basis up to a fixed degree.
#[derive(Debug, Clone)]
pub struct BasisEval {
    max_degree: usize,
    mode: EvalMode,
}

impl BasisEval {
    pub fn new(max_degree: usize, mode: EvalMode) -> Self {
        Self { max_degree, mode }
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn mode(&self) -> EvalMode {
        self.mode
    }

    /// P̂_0(x) .. P̂_n(x) under the selected strategy.
    pub fn values(&self, x: f64) -> Vec<f64> {
        match self.mode {
            EvalMode::Recurrence => eval_normalized_all(self.max_degree, x),
            EvalMode::Explicit => (0..=self.max_degree)
                .map(|i| norm_factor(i) * eval_explicit(i as u32, x))
                .collect(),
        }
    }
}
