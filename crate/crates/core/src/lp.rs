//! Signed powers, `l^p` norms and the Birkhoff-James semi-inner product.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::RealPoly;

/// A validated exponent `1 < p < inf` together with its Hölder conjugate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PNorm {
    p: f64,
    p_conj: f64,
}

impl PNorm {
    pub fn new(p: f64) -> Result<Self> {
        if !p.is_finite() || p <= 1.0 {
            return Err(Error::InvalidExponent(p));
        }
        Ok(Self {
            p,
            p_conj: p / (p - 1.0),
        })
    }

    #[inline]
    pub fn p(&self) -> f64 {
        self.p
    }

    /// `p' = p / (p - 1)`.
    #[inline]
    pub fn conj(&self) -> f64 {
        self.p_conj
    }

    /// True when `|p - 2| <= band`.
    pub fn near_two(&self, band: f64) -> bool {
        (self.p - 2.0).abs() <= band
    }
}

impl TryFrom<f64> for PNorm {
    type Error = Error;

    fn try_from(p: f64) -> Result<Self> {
        Self::new(p)
    }
}

impl From<PNorm> for f64 {
    fn from(p: PNorm) -> Self {
        p.p
    }
}

/// `sign(x) |x|^s` with the convention that the result is exactly zero at `x = 0`.
pub fn signed_power(x: f64, s: f64) -> Result<f64> {
    if !x.is_finite() || !s.is_finite() {
        return Err(Error::Domain(format!("signed_power({x}, {s})")));
    }
    if s < 0.0 {
        return Err(Error::Domain(format!("negative exponent {s}")));
    }
    Ok(spow(x, s))
}

/// Unchecked [`signed_power`] for inner loops.
#[inline]
pub(crate) fn spow(x: f64, s: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if x > 0.0 {
        x.powf(s)
    } else {
        -(-x).powf(s)
    }
}

/// `sum |a_k|^p`.
pub fn lp_norm_pow(f: &RealPoly, p: PNorm) -> f64 {
    f.coeffs().iter().map(|a| a.abs().powf(p.p())).sum()
}

/// `(sum |a_k|^p)^(1/p)`, computed after rescaling by the largest modulus.
pub fn lp_norm(f: &RealPoly, p: PNorm) -> f64 {
    let m = f.coeffs().iter().fold(0.0_f64, |m, a| m.max(a.abs()));
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = f.coeffs().iter().map(|a| (a.abs() / m).powf(p.p())).sum();
    m * s.powf(1.0 / p.p())
}

/// `sum a_k^<p-1> b_k` over the shared index range.
pub fn semi_inner(f: &RealPoly, g: &RealPoly, p: PNorm) -> f64 {
    f.coeffs()
        .iter()
        .zip(g.coeffs())
        .map(|(&a, &b)| spow(a, p.p() - 1.0) * b)
        .sum()
}

/// Birkhoff-James orthogonality `f ⊥_p g`, judged relative to `‖f‖^(p-1) ‖g‖`.
pub fn is_bj_orthogonal(f: &RealPoly, g: &RealPoly, p: PNorm, tol: f64) -> bool {
    let scale = (lp_norm(f, p).powf(p.p() - 1.0) * lp_norm(g, p)).max(1.0);
    semi_inner(f, g, p).abs() <= tol * scale
}
