//! Chebyshev polynomials of the first kind and the window polynomial `C_m`.
//!
//! `C_m(x) = T_t(y(x)) / T_t(y(0))` with `t = ⌈√m⌉` and the affine map
//! `y(x) = (x - (m+1)/2) / ((m-1)/2)`, which sends the window `[1, m]` onto
//! `[-1, 1]` and `x = 0` to `-(m+1)/(m-1) < -1`. Hence `C_m(0) = 1` while
//! `|C_m(x)| ≤ 1/|T_t(y(0))|` on the window.

use num_bigint::BigInt;
use num_integer::Roots;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest degree whose coefficients are kept as exact rationals.
pub const EXACT_DEGREE_LIMIT: usize = 20;

/// `T_n(x)` by the three-term recurrence.
pub fn chebyshev_t_recurrence(n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if n == 0 {
        return prev;
    }
    for _ in 1..n {
        let next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `T_n(x)`: the recurrence on `[-1, 1]`, `sign(x)^n cosh(n arccosh|x|)`
/// outside.
pub fn chebyshev_t(n: usize, x: f64) -> f64 {
    if x.abs() <= 1.0 || n < 2 {
        return chebyshev_t_recurrence(n, x);
    }
    let mag = (n as f64 * x.abs().acosh()).cosh();
    if x < 0.0 && n % 2 == 1 {
        -mag
    } else {
        mag
    }
}

/// Integer monomial coefficients of `T_n`, lowest power first.
pub fn chebyshev_coefficients(n: usize) -> Vec<BigInt> {
    let mut prev = vec![BigInt::one()];
    if n == 0 {
        return prev;
    }
    let mut cur = vec![BigInt::zero(), BigInt::one()];
    for _ in 1..n {
        let mut next = vec![BigInt::zero(); cur.len() + 1];
        for (k, c) in cur.iter().enumerate() {
            next[k + 1] += c * 2;
        }
        for (k, c) in prev.iter().enumerate() {
            next[k] -= c;
        }
        prev = std::mem::replace(&mut cur, next);
    }
    cur
}

/// Roots `cos(π(2k-1)/(2n))`, `k = 1..n`.
pub fn chebyshev_roots(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| (std::f64::consts::PI * (2 * k - 1) as f64 / (2 * n) as f64).cos())
        .collect()
}

/// `T_n(x) = 2^(n-1) Π_k (x - x_k)` for `n ≥ 1`.
pub fn chebyshev_t_product(n: usize, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    chebyshev_roots(n).iter().fold(2f64.powi(n as i32 - 1), |acc, r| acc * (x - r))
}

/// Something that can be evaluated at a real point.
pub trait Polynomial {
    fn eval(&self, x: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

impl Polynomial for Constant {
    fn eval(&self, _x: f64) -> f64 {
        self.0
    }
}

/// `p(x)^q`.
#[derive(Debug, Clone)]
pub struct Powered<P> {
    pub inner: P,
    pub q: u32,
}

impl<P: Polynomial> Polynomial for Powered<P> {
    fn eval(&self, x: f64) -> f64 {
        self.inner.eval(x).powi(self.q as i32)
    }
}

impl<P: Polynomial + ?Sized> Polynomial for &P {
    fn eval(&self, x: f64) -> f64 {
        (**self).eval(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Coefficients {
    Exact(Vec<BigRational>),
    Float(Vec<f64>),
}

impl Coefficients {
    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            Coefficients::Exact(v) => v.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect(),
            Coefficients::Float(v) => v.clone(),
        }
    }
}

/// Mapped and rescaled window polynomial `C_m`.
#[derive(Debug, Clone)]
pub struct WindowPolynomial {
    pub m: usize,
    pub degree: usize,
    /// `Ĉ_m(0) = T_t(-(m+1)/(m-1))`.
    pub normalizer: f64,
    pub normalizer_exact: BigRational,
    /// Monomial coefficients of `C_m` in `x`, lowest power first.
    pub coefficients: Coefficients,
}

/// `⌈√m⌉`.
pub fn window_degree(m: usize) -> usize {
    let r = m.sqrt();
    if r * r == m {
        r
    } else {
        r + 1
    }
}

pub fn window_polynomial(m: usize) -> Result<WindowPolynomial> {
    if m < 2 {
        return Err(Error::OutOfRange(format!("window size must be at least 2, got {m}")));
    }
    let degree = window_degree(m);
    let denom = BigInt::from(m - 1);
    let a = BigRational::new(BigInt::from(2), denom.clone());
    let b = BigRational::new(-BigInt::from(m + 1), denom);
    let t = chebyshev_coefficients(degree);

    // Horner in the polynomial ring: p(x) = Σ t_k (a x + b)^k.
    let mut poly: Vec<BigRational> = vec![BigRational::zero()];
    for c in t.iter().rev() {
        let mut next = vec![BigRational::zero(); poly.len() + 1];
        for (k, p) in poly.iter().enumerate() {
            next[k + 1] += p * &a;
            next[k] += p * &b;
        }
        next[0] += BigRational::from_integer(c.clone());
        poly = next;
    }
    while poly.len() > degree + 1 {
        poly.pop();
    }
    let normalizer_exact = poly[0].clone();
    let scaled: Vec<BigRational> = poly.iter().map(|c| c / &normalizer_exact).collect();
    let coefficients = if degree <= EXACT_DEGREE_LIMIT {
        Coefficients::Exact(scaled)
    } else {
        Coefficients::Float(scaled.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect())
    };
    let normalizer = chebyshev_t(degree, -((m + 1) as f64) / ((m - 1) as f64));
    Ok(WindowPolynomial { m, degree, normalizer, normalizer_exact, coefficients })
}

impl WindowPolynomial {
    pub fn mapped(&self, x: f64) -> f64 {
        let m = self.m as f64;
        (x - (m + 1.0) / 2.0) / ((m - 1.0) / 2.0)
    }

    /// Stable evaluation through `T_t` at the mapped argument.
    pub fn eval_stable(&self, x: f64) -> f64 {
        chebyshev_t(self.degree, self.mapped(x)) / self.normalizer
    }

    /// Horner evaluation of the monomial coefficients.
    pub fn eval_monomial(&self, x: f64) -> f64 {
        self.coefficients.to_f64().iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// Exact value at a rational point, when exact coefficients are stored.
    pub fn eval_exact(&self, x: &BigRational) -> Option<BigRational> {
        match &self.coefficients {
            Coefficients::Exact(c) => {
                Some(c.iter().rev().fold(BigRational::zero(), |acc, k| acc * x + k))
            }
            Coefficients::Float(_) => None,
        }
    }
}

impl Polynomial for WindowPolynomial {
    fn eval(&self, x: f64) -> f64 {
        self.eval_stable(x)
    }
}

/// Pointwise evaluation; no clamping outside the window.
pub fn apply_polynomial<P: Polynomial + ?Sized>(poly: &P, eigenvalues: &[f64]) -> Vec<f64> {
    eigenvalues.iter().map(|&x| poly.eval(x)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct WindowBoundsReport {
    pub m: usize,
    pub degree: usize,
    pub normalizer: f64,
    pub value_at_zero: f64,
    pub max_abs_on_window: f64,
    pub pass: bool,
}

/// CSV projection of [`WindowBoundsReport`].
#[derive(Debug, Clone, Serialize)]
pub struct WindowBoundsRow {
    pub m: usize,
    pub degree: usize,
    pub normalizer: f64,
    pub max_abs_on_window: f64,
    pub pass: bool,
}

impl WindowBoundsReport {
    pub fn row(&self) -> WindowBoundsRow {
        WindowBoundsRow {
            m: self.m,
            degree: self.degree,
            normalizer: self.normalizer,
            max_abs_on_window: self.max_abs_on_window,
            pass: self.pass,
        }
    }
}

pub fn verify_window_bounds(m: usize) -> Result<WindowBoundsReport> {
    let poly = window_polynomial(m)?;
    let value_at_zero = poly.eval_stable(0.0);
    let max_abs_on_window =
        (1..=m).map(|x| poly.eval_stable(x as f64).abs()).fold(0.0, f64::max);
    let pass = (value_at_zero - 1.0).abs() <= 1e-12
        && max_abs_on_window <= 1.0 / 3.0 + 1e-12
        && poly.normalizer.abs() >= 3.0;
    Ok(WindowBoundsReport {
        m,
        degree: poly.degree,
        normalizer: poly.normalizer,
        value_at_zero,
        max_abs_on_window,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn low_degree_values() {
        for x in [-3.0, -0.4, 0.0, 0.9, 5.0] {
            assert_eq!(chebyshev_t(0, x), 1.0);
            assert_eq!(chebyshev_t(1, x), x);
        }
        assert!((chebyshev_t(3, 2.0) - 26.0).abs() < 1e-12);
        assert_eq!(chebyshev_t_recurrence(3, 2.0), 26.0);
    }

    #[test]
    fn hyperbolic_form_matches_recurrence() {
        for n in 0..=30 {
            for &x in &[-2.5, -1.3, -1.0001, 1.0001, 1.7, 3.0] {
                let a = chebyshev_t(n, x);
                let b = chebyshev_t_recurrence(n, x);
                assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "n={n} x={x}");
            }
        }
    }

    #[test]
    fn bounded_on_interval() {
        for n in 0..=50 {
            for i in 0..=1000 {
                let x = -1.0 + 2.0 * i as f64 / 1000.0;
                assert!(chebyshev_t(n, x).abs() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn root_product_form() {
        for n in 1..=12 {
            for &x in &[-1.5, -0.3, 0.2, 0.77, 1.2] {
                let a = chebyshev_t(n, x);
                let b = chebyshev_t_product(n, x);
                assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0));
            }
            for r in chebyshev_roots(n) {
                assert!(chebyshev_t(n, r).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exact_leading_coefficient() {
        for n in 1..=30 {
            let c = chebyshev_coefficients(n);
            assert_eq!(c.len(), n + 1);
            assert_eq!(c[n], BigInt::from(2).pow(n as u32 - 1));
        }
    }

    #[test]
    fn window_four_closed_form() {
        let p = window_polynomial(4).unwrap();
        assert_eq!(p.degree, 2);
        assert_eq!(p.normalizer_exact, rat(41, 9));
        assert!((p.normalizer - 41.0 / 9.0).abs() < 1e-13);
        let exact: Vec<BigRational> =
            (0..=4).map(|x| p.eval_exact(&rat(x, 1)).unwrap()).collect();
        assert_eq!(exact, vec![rat(1, 1), rat(9, 41), rat(-7, 41), rat(-7, 41), rat(9, 41)]);
        let vals = apply_polynomial(&p, &[0.0, 1.0, 2.0, 3.0, 4.0]);
        for (v, e) in vals.iter().zip(&exact) {
            assert!((v - e.to_f64().unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn monomial_and_stable_agree() {
        for m in [4, 9, 16, 25, 36, 49, 64, 100, 144] {
            let p = window_polynomial(m).unwrap();
            assert!(p.degree <= 12);
            for i in 0..=(4 * m) {
                let x = i as f64 / 4.0;
                let a = p.eval_stable(x);
                let b = p.eval_monomial(x);
                assert!((a - b).abs() <= 1e-7 * a.abs().max(1.0), "m={m} x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn non_square_window_rounds_degree_up() {
        assert_eq!(window_degree(10), 4);
        assert_eq!(window_polynomial(36).unwrap().degree, 6);
        let r = verify_window_bounds(10).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn wrappers() {
        assert_eq!(apply_polynomial(&Constant(1.0), &[-4.0, 0.0, 1e9]), vec![1.0; 3]);
        let p = Powered { inner: window_polynomial(4).unwrap(), q: 2 };
        assert!((p.eval(1.0) - (9.0f64 / 41.0).powi(2)).abs() < 1e-15);
        let outside = apply_polynomial(&window_polynomial(9).unwrap(), &[-5.0, 20.0]);
        assert!(outside.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn rejects_tiny_window() {
        assert!(window_polynomial(1).is_err());
    }
}
