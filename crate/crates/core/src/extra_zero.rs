//! Explicit polynomial families whose linear approximant has a zero inside
//! the unit disk, one family for each side of `p = 2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{spow, PNorm};
use crate::opa::{h_prime, solve_linear_opa, SolverConfig};
use crate::poly::RealPoly;

pub const DEFAULT_CAP: usize = 5000;
/// `p` within this distance of 2 is rejected.
pub const GUARD_BAND: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtraZeroWitness {
    pub k: usize,
    pub f: RealPoly,
    pub t_f: f64,
    pub zero: f64,
    pub inside_disk: bool,
}

/// `sum_{j=0}^k (j + 1) z^j`.
pub fn family_small_p(k: usize) -> Result<RealPoly> {
    if k < 1 {
        return Err(Error::Domain(
            "family parameter k must be at least 1".into(),
        ));
    }
    RealPoly::new((0..=k).map(|j| (j + 1) as f64).collect())
}

/// `1 + sum_{j=1}^{2k} (2 - (j - 1)/k) z^j`.
pub fn family_large_p(k: usize) -> Result<RealPoly> {
    if k < 1 {
        return Err(Error::Domain(
            "family parameter k must be at least 1".into(),
        ));
    }
    let kf = k as f64;
    let mut c = vec![1.0];
    c.extend((1..=2 * k).map(|j| 2.0 - (j as f64 - 1.0) / kf));
    RealPoly::new(c)
}

/// `sum_{j=1}^k ((j+1) - t j)^<p-1> j + (-t(k+1))^<p-1> (k+1)`, which is
/// `-h'(t)/p` for [`family_small_p`]`(k)`.
pub fn g_of_t(k: usize, p: PNorm, t: f64) -> f64 {
    let e = p.p() - 1.0;
    let kf = k as f64;
    let s: f64 = (1..=k)
        .map(|j| {
            let j = j as f64;
            spow(j + 1.0 - t * j, e) * j
        })
        .sum();
    s + spow(-t * (kf + 1.0), e) * (kf + 1.0)
}

/// Smallest `k` for which the family on the relevant side of `p = 2` has a
/// linear-approximant zero inside the unit disk.
///
/// Since `h'` is increasing, `t_f > 1` exactly when `h'(1) < 0`; the scan uses
/// that test and then solves the witness from scratch.
pub fn find_min_k_extra_zero(p: PNorm, cap: usize, cfg: &SolverConfig) -> Result<ExtraZeroWitness> {
    if p.near_two(GUARD_BAND) {
        return Err(Error::UnsupportedExponent(p.p()));
    }
    let family = if p.p() < 2.0 {
        family_small_p
    } else {
        family_large_p
    };
    for k in 1..=cap {
        let f = family(k)?;
        if h_prime(&f, p, 1.0) >= 0.0 {
            continue;
        }
        let lin = solve_linear_opa(&f, p, cfg)?;
        let zero = lin.zero.ok_or(Error::Degenerate(lin.t_f))?;
        return Ok(ExtraZeroWitness {
            k,
            f,
            t_f: lin.t_f,
            zero,
            inside_disk: zero.abs() < 1.0,
        });
    }
    Err(Error::CapExceeded(cap))
}
