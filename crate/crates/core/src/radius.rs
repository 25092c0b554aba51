//! Radii of zero-free disks: the elementary exclusion radius and the
//! critical constant `tau_p` where `Phi(xi_1) = Phi(xi_2)`.

use serde::{Deserialize, Serialize};

use crate::dynamics::{fixed_roots_with_gap, phi, psi, PhiPsiParams, GUARD_BAND};
use crate::error::{Error, Result};
use crate::extremal::{solve_tdp_chain, ExtremalConfig};
use crate::lp::PNorm;
use crate::numeric::bisect;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExclusionResult {
    pub p: PNorm,
    pub s_min: f64,
    pub r: f64,
}

/// Smallest `s` with `(s-1)^p + s^p/(2^(p-1) - 1) >= 1` for `p >= 2`, and
/// `(2/p)^(1/p)` for `p < 2`. No zero of an approximant lies in `|z| < 1/s`.
pub fn exclusion_radius(p: PNorm) -> ExclusionResult {
    let pp = p.p();
    let s_min = if pp < 2.0 {
        (2.0 / pp).powf(1.0 / pp)
    } else {
        let c = 2f64.powf(pp - 1.0) - 1.0;
        let g = |s: f64| (s - 1.0).powf(pp) + s.powf(pp) / c - 1.0;
        // g(1) <= 0 <= g(2) for every p >= 2, with g(1) = 0 only at p = 2
        match bisect("exclusion boundary", g, 1.0, 2.0, 0.0) {
            Ok((a, b)) => 0.5 * (a + b),
            Err(_) => 1.0,
        }
    };
    ExclusionResult {
        p,
        s_min,
        r: 1.0 / s_min,
    }
}

fn check_p(p: PNorm) -> Result<()> {
    if p.near_two(GUARD_BAND) {
        Err(Error::UnsupportedExponent(p.p()))
    } else {
        Ok(())
    }
}

/// The two positive solutions of `x^(p-1) (pt - x) = p - 1`, in `(0, t)` and
/// `(t, pt)`.
pub fn xi_pair(p: PNorm, t: f64) -> Result<(f64, f64)> {
    check_p(p)?;
    if t == 1.0 {
        // xi_1 merges with the fixed point x = t
        return Err(Error::Degenerate(t));
    }
    if !(t > 1.0) || !t.is_finite() {
        return Err(Error::OutOfRange {
            value: t,
            reason: "two distinct roots need t > 1",
        });
    }
    let (xi1, xi2, _) = fixed_roots_with_gap(p.p(), t);
    if !(xi1 < t && t < xi2) {
        return Err(Error::Degenerate(t));
    }
    Ok((xi1, xi2))
}

/// `ln Phi(xi_1) - ln Phi(xi_2)` at parameter `t > 1`.
pub fn tau_objective(p: PNorm, t: f64) -> Result<f64> {
    check_p(p)?;
    if !(t > 1.0) {
        return Err(Error::OutOfRange {
            value: t,
            reason: "the objective is defined for t > 1",
        });
    }
    let pp = p.p();
    let (xi1, xi2, u) = fixed_roots_with_gap(pp, t);
    let left = (pp * t - xi1).ln() + (pp - 2.0) * (t - xi1).ln();
    let right = u.ln() + (pp - 2.0) * (xi2 - t).ln();
    Ok(left - right)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauResult {
    pub p: PNorm,
    pub tau: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub bracket_width: f64,
}

pub const TAU_BRACKET: (f64, f64) = (1.0 + 1e-6, 2.0);

/// The unique `t` in `(1, 2)` with `Phi(xi_1) = Phi(xi_2)`.
pub fn solve_tau(p: PNorm) -> Result<TauResult> {
    check_p(p)?;
    let g = |t: f64| tau_objective(p, t).unwrap_or(f64::NAN);
    let (lo, hi) = bisect(
        "ln Phi(xi1) - ln Phi(xi2)",
        g,
        TAU_BRACKET.0,
        TAU_BRACKET.1,
        1e-13,
    )?;
    let tau = 0.5 * (lo + hi);
    let (xi1, xi2) = xi_pair(p, tau)?;
    Ok(TauResult {
        p,
        tau,
        xi1,
        xi2,
        bracket_width: hi - lo,
    })
}

/// `tau_p - T_{d,p}` for `d = 2..=d_max`.
pub fn tau_vs_tdp_gap(p: PNorm, d_max: usize, cfg: &ExtremalConfig) -> Result<Vec<f64>> {
    let tau = solve_tau(p)?.tau;
    Ok(solve_tdp_chain(p, d_max, cfg)?
        .iter()
        .map(|s| tau - s.t)
        .collect())
}

/// `Psi(pt) - Phi(xi_1)`. Its root in `t` is a diagnostic only.
pub fn threshold_residual(p: PNorm, t: f64) -> Result<f64> {
    let pr = PhiPsiParams::new(p, t)?;
    let (xi1, _) = xi_pair(p, t)?;
    Ok(psi(&pr, p.p() * t)? - phi(&pr, xi1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pn(p: f64) -> PNorm {
        PNorm::new(p).unwrap()
    }

    #[test]
    fn exclusion_examples() {
        for (p, s, r) in [
            (1.5, 1.21141, 0.825482),
            (4.0, 1.57890, 0.633368),
            (16.0, 1.89367, 0.528076),
        ] {
            let e = exclusion_radius(pn(p));
            // the printed s at p = 4 is 4e-5 off its own printed r
            assert!((e.s_min - s).abs() < 5e-5, "p={p} s={}", e.s_min);
            assert!((e.r - r).abs() < 5e-6);
            assert!((1.0 / r - e.s_min).abs() < 5e-6);
        }
        let two = exclusion_radius(pn(2.0));
        assert_eq!(two.s_min, 1.0);
        assert_eq!(two.r, 1.0);
    }

    #[test]
    fn exclusion_boundary_identity_and_trend() {
        let mut prev = 1.0;
        for p in [4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0] {
            let s = exclusion_radius(pn(p)).s_min;
            let g = (s - 1.0).powf(p) + s.powf(p) / (2f64.powf(p - 1.0) - 1.0);
            assert!((g - 1.0).abs() <= 1e-12);
            assert!(s > prev);
            prev = s;
        }
        for p in [2.05, 2.5, 3.0, 7.5] {
            let e = exclusion_radius(pn(p));
            assert!(e.s_min >= 1.0 && e.r <= 1.0);
        }
    }

    #[test]
    fn xi_pair_examples() {
        let (a, b) = xi_pair(pn(4.0), 1.2).unwrap();
        for x in [a, b] {
            let r = x.powi(3) * (4.8 - x) - 3.0;
            assert!(r.abs() <= 1e-12 * x.powi(3).max(1.0));
        }
        let fp = crate::dynamics::fixed_points(&PhiPsiParams::new(pn(4.0), 1.2).unwrap()).unwrap();
        assert!((fp.xi1 - a).abs() <= 1e-12 && (fp.xi2 - b).abs() <= 1e-12);
        assert_eq!(xi_pair(pn(4.0), 1.0).unwrap_err(), Error::Degenerate(1.0));
        assert!(matches!(
            xi_pair(pn(4.0), 0.9),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            xi_pair(pn(2.0), 1.5),
            Err(Error::UnsupportedExponent(_))
        ));
    }

    #[test]
    fn tau_examples() {
        for (p, tau) in [(4.0, 1.21157), (10.0, 1.54974), (20.0, 1.72654)] {
            let r = solve_tau(pn(p)).unwrap();
            assert!((r.tau - tau).abs() < 1e-5, "p={p} tau={}", r.tau);
            assert!(r.bracket_width <= 1e-10);
            assert!(1.0 < r.tau && r.tau < 2.0);
            assert!(0.0 < r.xi1 && r.xi1 < r.xi2);
        }
    }

    #[test]
    fn tau_invariants_in_direct_form() {
        for p in [3.0, 4.0, 6.0, 1.5, 1.75] {
            let r = solve_tau(pn(p)).unwrap();
            let t = r.tau;
            // direct evaluation is accurate enough at these p
            let f = |x: f64| x.powf(p - 1.0) * (p * t - x) - (p - 1.0);
            assert!(f(r.xi1).abs() <= 1e-12 * (p - 1.0).max(1.0));
            assert!(f(r.xi2).abs() <= 1e-10 * (p * t).powf(p - 1.0));
            let pr = PhiPsiParams::new(pn(p), t).unwrap();
            let (a, b) = (phi(&pr, r.xi1).unwrap(), phi(&pr, r.xi2).unwrap());
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "p={p} {a} {b}");
        }
    }

    #[test]
    fn conjugate_exponents_share_tau() {
        for p in [1.5, 1.25, 4.0] {
            let q = pn(p).conj();
            let a = solve_tau(pn(p)).unwrap().tau;
            let b = solve_tau(pn(q)).unwrap().tau;
            assert!((a - b).abs() < 1e-9, "p={p}: {a} vs {b}");
        }
    }

    #[test]
    fn tau_bounds_exclusion() {
        for p in [4.0, 6.0, 8.0, 10.0] {
            let tau = solve_tau(pn(p)).unwrap().tau;
            assert!(exclusion_radius(pn(p)).r <= 1.0 / tau + 1e-9);
            assert!(1.0 / tau < 1.0);
        }
    }

    #[test]
    fn gaps_shrink() {
        let g = tau_vs_tdp_gap(pn(4.0), 6, &ExtremalConfig::double()).unwrap();
        assert_eq!(g.len(), 5);
        assert!(g.iter().all(|&x| x > 0.0));
        assert!(g.windows(2).all(|w| w[1] < w[0]));
        assert!((g[0] - (1.21157 - 1.0 / 1.09638)).abs() < 1e-4);
        assert_eq!(
            tau_vs_tdp_gap(pn(4.0), 2, &ExtremalConfig::double())
                .unwrap()
                .len(),
            1
        );
    }

    #[test]
    fn threshold_is_finite() {
        let r = threshold_residual(pn(4.0), 1.1).unwrap();
        assert!(r.is_finite());
    }
}
