//! Finite real coefficient sequences `a_0 + a_1 z + ... + a_d z^d`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A polynomial with real coefficients stored in ascending order.
///
/// The stored degree is `coeffs.len() - 1`; trailing zeros are kept so that
/// `z^k f` style shifts keep their index layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RealPoly {
    coeffs: Vec<f64>,
}

impl RealPoly {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Domain(
                "a polynomial needs at least one coefficient".into(),
            ));
        }
        if let Some(bad) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::Domain(format!("non-finite coefficient {bad}")));
        }
        Ok(Self { coeffs })
    }

    pub fn from_slice(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.to_vec())
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn zero(degree: usize) -> Self {
        Self {
            coeffs: vec![0.0; degree + 1],
        }
    }

    /// The monomial `z^k`.
    pub fn monomial(k: usize) -> Self {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = 1.0;
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Storage degree (index of the last stored coefficient).
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient of `z^k`, zero past the stored degree.
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs[self.coeffs.len() - 1]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * z + c)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    /// Coefficientwise sum; the result has the larger storage degree.
    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self {
            coeffs: (0..n).map(|k| self.coeff(k) + other.coeff(k)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// Cauchy product of coefficient sequences.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self { coeffs: out }
    }

    /// `z^k f(z)`.
    pub fn shift(&self, k: usize) -> Self {
        let mut coeffs = vec![0.0; k];
        coeffs.extend_from_slice(&self.coeffs);
        Self { coeffs }
    }

    /// `f(-z)`, the real rotation by pi.
    pub fn reflect(&self) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| if k % 2 == 1 { -c } else { c })
                .collect(),
        }
    }

    /// Polynomial with coefficients `|a_k|`.
    pub fn abs_coeffs(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c.abs()).collect(),
        }
    }

    /// `(1 - t z) f(z)`.
    pub fn times_one_minus(&self, t: f64) -> Self {
        let d = self.degree();
        let mut out = Vec::with_capacity(d + 2);
        out.push(self.coeffs[0]);
        for k in 1..=d {
            out.push(self.coeffs[k] - t * self.coeffs[k - 1]);
        }
        out.push(-t * self.coeffs[d]);
        Self { coeffs: out }
    }

    /// `(z - z0) f(z)`.
    pub fn times_linear(&self, z0: f64) -> Self {
        self.shift(1).sub(&self.scale(z0))
    }

    /// Synthetic division by `(z - z0)`: returns the quotient and the remainder `f(z0)`.
    pub fn deflate(&self, z0: f64) -> (Self, f64) {
        let d = self.degree();
        if d == 0 {
            return (Self::constant(0.0), self.coeffs[0]);
        }
        let mut q = vec![0.0; d];
        let mut carry = self.coeffs[d];
        for k in (0..d).rev() {
            q[k] = carry;
            carry = self.coeffs[k] + carry * z0;
        }
        (Self { coeffs: q }, carry)
    }

    /// Drop trailing zero coefficients (keeps at least one).
    pub fn trimmed(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        while coeffs.len() > 1 && coeffs[coeffs.len() - 1] == 0.0 {
            coeffs.pop();
        }
        Self { coeffs }
    }

    /// Real roots in `[lo, hi]` located by a sign-change scan over `samples`
    /// subintervals and refined by bisection. Roots of even multiplicity that do
    /// not change sign are only reported if a grid point hits them exactly.
    pub fn real_roots(&self, lo: f64, hi: f64, samples: usize) -> Vec<f64> {
        let t = self.trimmed();
        if t.degree() == 0 {
            return Vec::new();
        }
        if t.degree() == 1 {
            let r = -t.coeffs[0] / t.coeffs[1];
            return if (lo..=hi).contains(&r) {
                vec![r]
            } else {
                Vec::new()
            };
        }
        let samples = samples.max(1);
        let step = (hi - lo) / samples as f64;
        let mut roots: Vec<f64> = Vec::new();
        let mut x0 = lo;
        let mut f0 = t.eval(x0);
        for i in 1..=samples {
            let x1 = if i == samples {
                hi
            } else {
                lo + step * i as f64
            };
            let f1 = t.eval(x1);
            if f0 == 0.0 {
                roots.push(x0);
            } else if f0 * f1 < 0.0 {
                let (mut a, mut b, mut fa) = (x0, x1, f0);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    if m <= a || m >= b {
                        break;
                    }
                    let fm = t.eval(m);
                    if fm == 0.0 {
                        a = m;
                        b = m;
                        break;
                    }
                    if (fm < 0.0) == (fa < 0.0) {
                        a = m;
                        fa = fm;
                    } else {
                        b = m;
                    }
                }
                roots.push(0.5 * (a + b));
            }
            x0 = x1;
            f0 = f1;
        }
        if f0 == 0.0 {
            roots.push(x0);
        }
        roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
        roots
    }
}

impl TryFrom<Vec<f64>> for RealPoly {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<RealPoly> for Vec<f64> {
    fn from(p: RealPoly) -> Self {
        p.coeffs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_nonfinite() {
        assert!(RealPoly::new(vec![]).is_err());
        assert!(RealPoly::new(vec![1.0, f64::NAN]).is_err());
        assert!(RealPoly::new(vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn trailing_zeros_keep_storage_degree() {
        let f = RealPoly::new(vec![1.0, 2.0, 0.0]).unwrap();
        assert_eq!(f.degree(), 2);
        assert_eq!(f.trimmed().degree(), 1);
    }

    #[test]
    fn one_minus_tz_matches_convolution() {
        let f = RealPoly::new(vec![1.0, 2.0, -0.5]).unwrap();
        let t = 0.7;
        let direct = f.times_one_minus(t);
        let conv = f.mul(&RealPoly::new(vec![1.0, -t]).unwrap());
        for (a, b) in direct.coeffs().iter().zip(conv.coeffs()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn deflation_inverts_linear_factor() {
        let f = RealPoly::new(vec![0.3, -1.0, 2.0, 0.25]).unwrap();
        let g = f.times_linear(1.7);
        let (q, r) = g.deflate(1.7);
        assert!(r.abs() < 1e-12);
        for (a, b) in q.coeffs().iter().zip(f.coeffs()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn real_roots_of_cubic() {
        // (z - 1)(z + 2)(z - 3.5)
        let f = RealPoly::new(vec![1.0, -1.0])
            .unwrap()
            .scale(-1.0)
            .mul(&RealPoly::new(vec![2.0, 1.0]).unwrap())
            .mul(&RealPoly::new(vec![-3.5, 1.0]).unwrap());
        let roots = f.real_roots(-10.0, 10.0, 1000);
        assert_eq!(roots.len(), 3);
        for (r, e) in roots.iter().zip([-2.0, 1.0, 3.5]) {
            assert!((r - e).abs() < 1e-12, "{r} vs {e}");
        }
    }

    #[test]
    fn reflect_flips_odd_coefficients() {
        let f = RealPoly::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(f.reflect().coeffs(), &[1.0, -2.0, 3.0, -4.0]);
        assert!((f.reflect().eval(0.3) - f.eval(-0.3)).abs() < 1e-15);
    }
}
