//! Truncated Taylor series ("jets") of a scalar function.
//!
//! A [`Jet`] of order `m` about `center` stores `coeffs[k] = g^(k)(center) / k!`
//! for `k = 0..=m`. Arithmetic truncates at the common order and never
//! extends it.

use crate::error::{Error, Result};

/// Largest order accepted by composition and by the series builders.
pub const MAX_ORDER: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    center: f64,
    coeffs: Vec<f64>,
}

impl Jet {
    /// The identity function's jet: `[center, 1, 0, ...]`.
    pub fn variable(center: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = center;
        if order >= 1 {
            coeffs[1] = 1.0;
        }
        Jet { center, coeffs }
    }

    pub fn constant(center: f64, value: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = value;
        Jet { center, coeffs }
    }

    /// Builds a jet from normalized Taylor coefficients. Panics on an empty vector.
    pub fn from_coeffs(center: f64, coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "a jet needs at least one coefficient");
        Jet { center, coeffs }
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// `k`-th derivative at the center, `k! * coeffs[k]`.
    pub fn derivative_at_center(&self, k: usize) -> f64 {
        self.coeffs[k] * factorial(k)
    }

    /// Horner evaluation of the Taylor polynomial at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        let u = x - self.center;
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * u + c)
    }

    /// Term-wise derivative of the polynomial; the order drops by one.
    pub fn derivative(&self) -> Jet {
        if self.order() == 0 {
            return Jet::constant(self.center, 0.0, 0);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| k as f64 * c)
            .collect();
        Jet {
            center: self.center,
            coeffs,
        }
    }

    /// Keeps the first `order + 1` coefficients, padding with zeros if needed.
    pub fn with_order(&self, order: usize) -> Jet {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(order + 1, 0.0);
        Jet {
            center: self.center,
            coeffs,
        }
    }

    fn check_compatible(&self, other: &Jet) -> Result<()> {
        if self.center != other.center {
            return Err(Error::CenterMismatch(format!(
                "centers {} and {}",
                self.center, other.center
            )));
        }
        if self.order() != other.order() {
            return Err(Error::CenterMismatch(format!(
                "orders {} and {}",
                self.order(),
                other.order()
            )));
        }
        Ok(())
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Jet {
        Jet {
            center: self.center,
            coeffs: self.coeffs.iter().map(|&c| f(c)).collect(),
        }
    }

    pub fn neg(&self) -> Jet {
        self.map(|c| -c)
    }

    pub fn scale(&self, s: f64) -> Jet {
        self.map(|c| c * s)
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    pub fn add(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        Ok(Jet {
            center: self.center,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        Ok(Jet {
            center: self.center,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Truncated Cauchy product.
    pub fn mul(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Jet) -> Jet {
        let n = self.coeffs.len();
        let a = &self.coeffs;
        let b = &other.coeffs;
        let coeffs = (0..n)
            .map(|k| (0..=k).map(|j| a[j] * b[k - j]).sum())
            .collect();
        Jet {
            center: self.center,
            coeffs,
        }
    }

    /// Series division `self / other`; requires `other.coeffs[0] != 0`.
    pub fn div(&self, other: &Jet) -> Result<Jet> {
        self.check_compatible(other)?;
        let b = &other.coeffs;
        if b[0] == 0.0 {
            return Err(Error::DivisionByZero);
        }
        let a = &self.coeffs;
        let mut q = vec![0.0; a.len()];
        for k in 0..a.len() {
            let s: f64 = (1..=k).map(|j| b[j] * q[k - j]).sum();
            q[k] = (a[k] - s) / b[0];
        }
        Ok(Jet {
            center: self.center,
            coeffs: q,
        })
    }

    /// Integer power by binary exponentiation; negative exponents divide.
    pub fn powi(&self, exponent: i64) -> Result<Jet> {
        if exponent < 0 {
            let one = Jet::constant(self.center, 1.0, self.order());
            return one.div(&self.powi(-exponent)?);
        }
        let mut result = Jet::constant(self.center, 1.0, self.order());
        let mut base = self.clone();
        let mut e = exponent as u64;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul_unchecked(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_unchecked(&base);
            }
        }
        Ok(result)
    }

    /// Real power `a^p` for a jet with positive constant term.
    ///
    /// Uses `k a0 b_k = sum_{j=1..k} (p j - (k - j)) a_j b_{k-j}`.
    pub fn powf(&self, p: f64) -> Result<Jet> {
        if p.fract() == 0.0 && p.abs() <= i64::MAX as f64 {
            return self.powi(p as i64);
        }
        let a = &self.coeffs;
        if !(a[0] > 0.0) {
            return Err(Error::Domain(format!(
                "non-integer power {p} of a series with constant term {}",
                a[0]
            )));
        }
        let mut b = vec![0.0; a.len()];
        b[0] = a[0].powf(p);
        for k in 1..a.len() {
            let s: f64 = (1..=k)
                .map(|j| (p * j as f64 - (k - j) as f64) * a[j] * b[k - j])
                .sum();
            b[k] = s / (k as f64 * a[0]);
        }
        Ok(Jet {
            center: self.center,
            coeffs: b,
        })
    }

    /// Rational power `a^(num/den)`.
    pub fn powq(&self, num: i64, den: i64) -> Result<Jet> {
        if den == 0 {
            return Err(Error::DivisionByZero);
        }
        if num % den == 0 {
            return self.powi(num / den);
        }
        self.powf(num as f64 / den as f64)
    }

    pub fn sqrt(&self) -> Result<Jet> {
        let a = &self.coeffs;
        if !(a[0] > 0.0) {
            return Err(Error::Domain(format!(
                "square root of a series with constant term {}",
                a[0]
            )));
        }
        let mut s = vec![0.0; a.len()];
        s[0] = a[0].sqrt();
        for k in 1..a.len() {
            let cross: f64 = (1..k).map(|j| s[j] * s[k - j]).sum();
            s[k] = (a[k] - cross) / (2.0 * s[0]);
        }
        Ok(Jet {
            center: self.center,
            coeffs: s,
        })
    }

    /// Taylor coefficients of `outer ∘ inner` about `inner.center`.
    ///
    /// `inner.coeffs[0]` must equal `outer.center`. Horner evaluation of
    /// `outer`'s polynomial at the shifted inner jet, O(m³).
    pub fn compose(outer: &Jet, inner: &Jet) -> Result<Jet> {
        if inner.coeffs[0] != outer.center {
            return Err(Error::CenterMismatch(format!(
                "inner value {} differs from outer center {}",
                inner.coeffs[0], outer.center
            )));
        }
        if inner.order() != outer.order() {
            return Err(Error::CenterMismatch(format!(
                "orders {} and {}",
                outer.order(),
                inner.order()
            )));
        }
        if outer.order() > MAX_ORDER {
            return Err(Error::OrderTooHigh {
                order: outer.order(),
                max: MAX_ORDER,
            });
        }
        let mut shifted = inner.clone();
        shifted.coeffs[0] = 0.0;
        let m = outer.order();
        let mut acc = Jet::constant(inner.center, outer.coeffs[m], m);
        for k in (0..m).rev() {
            acc = acc.mul_unchecked(&shifted);
            acc.coeffs[0] += outer.coeffs[k];
        }
        Ok(acc)
    }
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}
