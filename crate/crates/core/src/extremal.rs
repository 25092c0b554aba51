//! The Lagrange system for the extremal constant `T_{d,p} = sup |t_f|` over
//! polynomials of degree `d`: residuals, a Newton solver with continuation in
//! `d`, and a direct maximisation of `t_f` used as an independent check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{invert_phi, psi, Branch, PhiPsiParams};
use crate::error::{Error, Result};
use crate::lp::{spow, PNorm};
use crate::numeric::{
    bisect, check_precision, nelder_mead, solve_dense, with_precision, MpFloat, Real,
};
use crate::opa::{h_prime, solve_linear_opa, SolverConfig};
use crate::poly::RealPoly;

pub const GUARD_BAND: f64 = 1e-6;
/// Floor applied to `|x|` inside `|x|^(p-2)` terms of the Jacobian.
pub const JAC_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremalConfig {
    /// Working precision once `d > mp_above`; 53 keeps everything in `f64`.
    pub precision_bits: u32,
    pub mp_above: usize,
    pub max_iter: usize,
    pub grid: usize,
}

impl Default for ExtremalConfig {
    fn default() -> Self {
        Self {
            precision_bits: 256,
            mp_above: 12,
            max_iter: 200,
            grid: 100,
        }
    }
}

impl ExtremalConfig {
    pub fn double() -> Self {
        Self {
            precision_bits: 53,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagrangeSolution {
    pub p: PNorm,
    pub d: usize,
    pub t: f64,
    pub a: RealPoly,
    /// `residual_0 = a_1 - p t a_0`, then one entry per equation `k = 1..d`.
    pub residuals: Vec<f64>,
    pub hprime_at_t: f64,
    /// `max(1, max_k |a_k|^(p-1))`.
    pub scale: f64,
    pub precision_bits: u32,
    pub iterations: usize,
    /// `d = 2` lies below the degree range of the existence theorem.
    pub below_theorem_degree: bool,
    pub t_exceeds_one: bool,
}

impl LagrangeSolution {
    pub fn residual_max(&self) -> f64 {
        self.residuals.iter().fold(0.0_f64, |m, r| m.max(r.abs()))
    }

    pub fn inv_t(&self) -> f64 {
        1.0 / self.t
    }
}

/// `max(1, max_k |a_k|^(p-1))`.
pub fn residual_scale(p: PNorm, a: &[f64]) -> f64 {
    a.iter()
        .fold(1.0_f64, |m, x| m.max(x.abs().powf(p.p() - 1.0)))
}

/// Residuals of the system
/// `(p t a_k - a_{k+1}) |a_{k+1} - t a_k|^(p-2) = (p-1) a_{k-1} |a_k - t a_{k-1}|^(p-2)`
/// for `k = 1..d` with `a_{d+1} = 0`, preceded by `a_1 - p t a_0`.
pub fn lagrange_residuals(p: PNorm, t: f64, a: &RealPoly) -> Result<Vec<f64>> {
    let c = a.coeffs();
    if c[0] == 0.0 {
        return Err(Error::ZeroAtOrigin);
    }
    let d = a.degree();
    if d < 1 {
        return Err(Error::Domain("the system needs degree at least 1".into()));
    }
    let pp = p.p();
    let w = |u: f64| {
        if u == 0.0 {
            0.0
        } else {
            u.abs().powf(pp - 2.0)
        }
    };
    let at = |k: usize| if k <= d { c[k] } else { 0.0 };
    let mut out = Vec::with_capacity(d + 1);
    out.push(c[1] - pp * t * c[0]);
    for k in 1..=d {
        let lhs = (pp * at(k) * t - at(k + 1)) * w(at(k + 1) - t * at(k));
        let rhs = (pp - 1.0) * at(k - 1) * w(at(k) - t * at(k - 1));
        out.push(lhs - rhs);
    }
    Ok(out)
}

// Unknowns x = (t, a_2, ..., a_d); a_0 = 1 and a_1 = p t.
fn coeffs_of<R: Real>(p: &R, x: &[R]) -> Vec<R> {
    let mut a = Vec::with_capacity(x.len() + 1);
    a.push(R::one());
    a.push(p.clone() * x[0].clone());
    a.extend(x[1..].iter().cloned());
    a
}

struct System<R> {
    p: R,
    pm1: R,
    pm2: R,
    pm3: R,
    floor: R,
}

impl<R: Real> System<R> {
    fn new(p: f64) -> Self {
        Self {
            p: R::from_f64(p),
            pm1: R::from_f64(p - 1.0),
            pm2: R::from_f64(p - 2.0),
            pm3: R::from_f64(p - 3.0),
            floor: R::from_f64(JAC_FLOOR),
        }
    }

    fn w(&self, u: &R) -> R {
        if u.signum_f64() == 0.0 {
            if self.pm2.to_f64() > 0.0 {
                R::zero()
            } else {
                self.floor.powf(&self.pm2)
            }
        } else {
            u.abs().powf(&self.pm2)
        }
    }

    fn dw(&self, u: &R) -> R {
        let s = u.signum_f64();
        if s == 0.0 {
            return R::zero();
        }
        let v = self.pm2.clone() * u.abs_pow(&self.pm3, &self.floor);
        if s > 0.0 {
            v
        } else {
            -v
        }
    }

    fn residuals(&self, x: &[R]) -> Vec<R> {
        let a = coeffs_of(&self.p, x);
        let d = a.len() - 1;
        let t = &x[0];
        let at = |k: usize| if k <= d { a[k].clone() } else { R::zero() };
        (1..=d)
            .map(|k| {
                let uk = at(k + 1) - t.clone() * at(k);
                let um = at(k) - t.clone() * at(k - 1);
                (self.p.clone() * t.clone() * at(k) - at(k + 1)) * self.w(&uk)
                    - self.pm1.clone() * at(k - 1) * self.w(&um)
            })
            .collect()
    }

    /// Residuals and Jacobian with respect to `x`.
    fn jacobian(&self, x: &[R]) -> (Vec<R>, Vec<Vec<R>>) {
        let a = coeffs_of(&self.p, x);
        let d = a.len() - 1;
        let t = x[0].clone();
        let at = |k: usize| if k <= d { a[k].clone() } else { R::zero() };
        let mut e = Vec::with_capacity(d);
        let mut jac = vec![vec![R::zero(); d]; d];
        for k in 1..=d {
            let uk = at(k + 1) - t.clone() * at(k);
            let um = at(k) - t.clone() * at(k - 1);
            let (wk, dwk) = (self.w(&uk), self.dw(&uk));
            let (wm, dwm) = (self.w(&um), self.dw(&um));
            let lead = self.p.clone() * t.clone() * at(k) - at(k + 1);
            e.push(lead.clone() * wk.clone() - self.pm1.clone() * at(k - 1) * wm.clone());
            // partials with every a_j and t treated as independent
            let d_t = self.p.clone() * at(k) * wk.clone() - lead.clone() * dwk.clone() * at(k)
                + self.pm1.clone() * at(k - 1) * dwm.clone() * at(k - 1);
            let d_next = -wk.clone() + lead.clone() * dwk.clone();
            let d_here = self.p.clone() * t.clone() * wk
                - lead * dwk * t.clone()
                - self.pm1.clone() * at(k - 1) * dwm.clone();
            let d_prev = -(self.pm1.clone() * wm) + self.pm1.clone() * at(k - 1) * dwm * t.clone();
            let row = &mut jac[k - 1];
            row[0] = d_t;
            let mut add = |j: usize, v: R| {
                if j == 1 {
                    // a_1 = p t
                    row[0] = row[0].clone() + self.p.clone() * v;
                } else if (2..=d).contains(&j) {
                    row[j - 1] = row[j - 1].clone() + v;
                }
            };
            add(k + 1, d_next);
            add(k, d_here);
            add(k - 1, d_prev);
        }
        (e, jac)
    }
}

fn sumsq<R: Real>(v: &[R]) -> R {
    v.iter().fold(R::zero(), |s, x| s + x.clone() * x.clone())
}

fn max_abs<R: Real>(v: &[R]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs().to_f64()))
}

struct Newton<R> {
    x: Vec<R>,
    iterations: usize,
}

/// Damped Newton with a Levenberg-Marquardt fallback. Stops once the step
/// no longer changes the iterate or the residual reaches `tol * scale`.
fn newton<R: Real>(sys: &System<R>, mut x: Vec<R>, tol: f64, max_iter: usize) -> Option<Newton<R>> {
    let n = x.len();
    let mut mu: Option<f64> = None;
    let mut e = sys.residuals(&x);
    let mut stalls = 0;
    for it in 0..max_iter {
        let a: Vec<f64> = coeffs_of(&sys.p, &x).iter().map(|v| v.to_f64()).collect();
        let scale = a
            .iter()
            .fold(1.0_f64, |m, v| m.max(v.abs().powf(sys.pm1.to_f64())));
        if !a.iter().all(|v| v.is_finite()) {
            return None;
        }
        if max_abs(&e) <= tol * scale {
            return Some(Newton { x, iterations: it });
        }
        let (e0, jac) = sys.jacobian(&x);
        e = e0;
        let f0 = sumsq(&e);
        let mut accepted = false;
        if let Some(step) = solve_dense(jac.clone(), e.iter().map(|v| -v.clone()).collect()) {
            let mut lam = 1.0;
            for _ in 0..30 {
                let l = R::from_f64(lam);
                let xn: Vec<R> = x
                    .iter()
                    .zip(&step)
                    .map(|(xi, si)| xi.clone() + l.clone() * si.clone())
                    .collect();
                let en = sys.residuals(&xn);
                if en.iter().all(|v| v.is_finite())
                    && sumsq(&en) < f0.clone() * R::from_f64(1.0 - 1e-4 * lam)
                {
                    let moved = x.iter().zip(&xn).any(|(u, v)| {
                        (u.clone() - v.clone()).abs() > u.abs() * R::from_f64(1e-300)
                    });
                    x = xn;
                    e = en;
                    accepted = true;
                    if !moved {
                        stalls += 1;
                    }
                    break;
                }
                lam *= 0.5;
            }
        }
        if !accepted {
            // Levenberg-Marquardt on the normal equations
            let jtj: Vec<Vec<R>> = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            jac.iter()
                                .fold(R::zero(), |s, row| s + row[i].clone() * row[j].clone())
                        })
                        .collect()
                })
                .collect();
            let jte: Vec<R> = (0..n)
                .map(|i| {
                    jac.iter()
                        .zip(&e)
                        .fold(R::zero(), |s, (row, ei)| s - row[i].clone() * ei.clone())
                })
                .collect();
            let dmax = (0..n).fold(0.0_f64, |m, i| m.max(jtj[i][i].to_f64()));
            let mut m = mu.unwrap_or(1e-3 * dmax.max(1e-300));
            for _ in 0..40 {
                let mut aug = jtj.clone();
                for (i, row) in aug.iter_mut().enumerate() {
                    row[i] = row[i].clone() + R::from_f64(m);
                }
                if let Some(step) = solve_dense(aug, jte.clone()) {
                    let xn: Vec<R> = x
                        .iter()
                        .zip(&step)
                        .map(|(a, b)| a.clone() + b.clone())
                        .collect();
                    let en = sys.residuals(&xn);
                    if en.iter().all(|v| v.is_finite()) && sumsq(&en) < f0 {
                        x = xn;
                        e = en;
                        accepted = true;
                        m /= 3.0;
                        break;
                    }
                }
                m *= 4.0;
            }
            mu = Some(m);
        }
        if !accepted || stalls >= 3 {
            // no representable improvement left
            return Some(Newton {
                x,
                iterations: it + 1,
            });
        }
    }
    Some(Newton {
        x,
        iterations: max_iter,
    })
}

fn finish(
    p: PNorm,
    d: usize,
    x: &[f64],
    iterations: usize,
    precision_bits: u32,
    mp_residuals: Option<Vec<f64>>,
) -> Result<LagrangeSolution> {
    let t = x[0];
    let a = coeffs_of(&p.p(), x);
    if !a.iter().all(|v| v.is_finite()) {
        return Err(Error::NonConvergence {
            iterations,
            residual: f64::NAN,
            best: x.to_vec(),
        });
    }
    let f = RealPoly::new(a.clone())?;
    let mut residuals = lagrange_residuals(p, t, &f)?;
    if let Some(mp) = mp_residuals {
        // the extended-precision values are the honest ones
        residuals.truncate(1);
        residuals.extend(mp);
    }
    let scale = residual_scale(p, &a);
    let sol = LagrangeSolution {
        p,
        d,
        t,
        hprime_at_t: h_prime(&f, p, t),
        a: f,
        residuals,
        scale,
        precision_bits,
        iterations,
        below_theorem_degree: d == 2,
        t_exceeds_one: t > 1.0,
    };
    if let Some(k) = a.iter().position(|&v| v <= 0.0) {
        return Err(Error::InvalidBranch(format!(
            "coefficient a_{k} = {} is not positive",
            a[k]
        )));
    }
    if a[d] <= 1e-12 {
        return Err(Error::InvalidBranch(format!(
            "leading coefficient {} vanishes",
            a[d]
        )));
    }
    if sol.residual_max() > 1e-9 * scale {
        return Err(Error::NonConvergence {
            iterations,
            residual: sol.residual_max() / scale,
            best: x.to_vec(),
        });
    }
    if p.p() < 2.0 {
        // a difference sitting at the Jacobian floor means a pinned, spurious root
        for k in 1..=d {
            let u = a[k] - t * a[k - 1];
            if u.abs() <= 10.0 * JAC_FLOOR * a[k].abs().max(1.0) {
                return Err(Error::InvalidBranch(format!(
                    "a_{k} - t a_{} sits at the floor",
                    k - 1
                )));
            }
        }
    }
    Ok(sol)
}

fn solve_from(p: PNorm, d: usize, x0: &[f64], cfg: &ExtremalConfig) -> Result<LagrangeSolution> {
    let use_mp = d > cfg.mp_above && cfg.precision_bits > 53;
    if !use_mp {
        let sys = System::<f64>::new(p.p());
        let r = newton(&sys, x0.to_vec(), 1e-14, cfg.max_iter).ok_or(Error::NonConvergence {
            iterations: 0,
            residual: f64::NAN,
            best: x0.to_vec(),
        })?;
        return finish(p, d, &r.x, r.iterations, 53, None);
    }
    let bits = check_precision(cfg.precision_bits)?;
    with_precision(bits, || {
        // refine in doubles first, then polish in extended precision
        let sys64 = System::<f64>::new(p.p());
        let start = newton(&sys64, x0.to_vec(), 1e-14, cfg.max_iter)
            .map(|r| r.x)
            .unwrap_or_else(|| x0.to_vec());
        let sys = System::<MpFloat>::new(p.p());
        let xm: Vec<MpFloat> = start.iter().map(|&v| MpFloat::from_f64(v)).collect();
        let tol = 2f64.powi(-(bits as i32) + 24);
        let r = newton(&sys, xm, tol, cfg.max_iter).ok_or(Error::NonConvergence {
            iterations: 0,
            residual: f64::NAN,
            best: start.clone(),
        })?;
        let res: Vec<f64> = sys.residuals(&r.x).iter().map(|v| v.to_f64()).collect();
        let x: Vec<f64> = r.x.iter().map(|v| v.to_f64()).collect();
        finish(p, d, &x, r.iterations, bits, Some(res))
    })
}

fn check_p(p: PNorm, d: usize) -> Result<()> {
    if p.near_two(GUARD_BAND) {
        return Err(Error::UnsupportedExponent(p.p()));
    }
    if d < 2 {
        return Err(Error::Domain(format!("degree {d} is below 2")));
    }
    Ok(())
}

/// Grid search for `d = 2` over `t in [0.5, 2]`, `a_2 in (0, 3p]`. Every grid
/// local minimum of the residual is refined and the valid root with the
/// largest `t` is kept.
fn solve_d2(p: PNorm, cfg: &ExtremalConfig) -> Result<LagrangeSolution> {
    let sys = System::<f64>::new(p.p());
    let n = cfg.grid.max(4);
    let ts: Vec<f64> = (0..n)
        .map(|i| 0.5 + 1.5 * i as f64 / (n - 1) as f64)
        .collect();
    let amax = 3.0 * p.p();
    let as_: Vec<f64> = (1..=n).map(|j| amax * j as f64 / n as f64).collect();
    let merit = |t: f64, a2: f64| {
        let e = sys.residuals(&[t, a2]);
        let s = residual_scale(p, &[1.0, p.p() * t, a2]);
        let m = e.iter().fold(0.0_f64, |m, v| m.max(v.abs())) / s;
        if m.is_finite() {
            m
        } else {
            f64::INFINITY
        }
    };
    let grid: Vec<Vec<f64>> = ts
        .iter()
        .map(|&t| as_.iter().map(|&a| merit(t, a)).collect())
        .collect();
    let mut cells = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let v = grid[i][j];
            let mut is_min = v.is_finite();
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if (di, dj) != (0, 0)
                        && ii >= 0
                        && jj >= 0
                        && (ii as usize) < n
                        && (jj as usize) < n
                        && grid[ii as usize][jj as usize] < v
                    {
                        is_min = false;
                    }
                }
            }
            if is_min {
                cells.push((v, ts[i], as_[j]));
            }
        }
    }
    cells.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best: Option<LagrangeSolution> = None;
    let mut last_err = Error::NonConvergence {
        iterations: 0,
        residual: f64::NAN,
        best: vec![],
    };
    for &(_, t, a2) in cells.iter().take(40) {
        match solve_from(p, 2, &[t, a2], cfg) {
            Ok(sol) => {
                if best.as_ref().is_none_or(|b| sol.t > b.t + 1e-12) {
                    best = Some(sol);
                }
            }
            Err(e) => last_err = e,
        }
    }
    best.ok_or(last_err)
}

/// Seeds for degree `d + 1` from the degree-`d` solution and, when
/// available, the one before it.
fn continuation_seeds(prev: &LagrangeSolution, before: Option<&LagrangeSolution>) -> Vec<Vec<f64>> {
    let tail: Vec<f64> = prev.a.coeffs()[2..].to_vec();
    let ad = prev.a.leading();
    let mut seeds = Vec::new();
    let mut ts = Vec::new();
    if let Some(b) = before {
        let dt = prev.t - b.t;
        ts.push(prev.t + 0.5 * dt);
        ts.push(prev.t + dt);
    }
    ts.push(prev.t);
    ts.push(prev.t * 1.01);
    for &t in &ts {
        for frac in [0.5, 0.25, 0.75, 0.1] {
            let mut x = vec![t];
            x.extend(&tail);
            x.push(frac * ad);
            seeds.push(x);
        }
    }
    seeds
}

/// Shooting along the all-left orbit: from `R_1 = pt`, `R_(k+1)` is the left
/// preimage of `Psi(R_k)`, and the returned value is `Psi(R_d) - p t^(p-1)`,
/// which vanishes when the orbit reaches the exit point after `d` moves.
/// An orbit that exits early counts as positive; `None` when a preimage is
/// missing for another reason.
fn shoot(p: PNorm, d: usize, t: f64) -> Option<(f64, Vec<f64>)> {
    let pr = PhiPsiParams::new(p, t).ok()?;
    let exit = pr.exit_value();
    let mut r = vec![p.p() * t];
    for k in 1..=d {
        let y = psi(&pr, r[k - 1]).ok()?;
        if k == d {
            return Some((y - exit, r));
        }
        if y >= exit {
            return Some((f64::INFINITY, r));
        }
        r.push(invert_phi(&pr, y, Branch::Left).ok()?);
    }
    None
}

/// Seeds from sign changes of [`shoot`] on `(t_lo, 2)`, largest `t` first.
fn shooting_seeds(p: PNorm, d: usize, t_lo: f64) -> Vec<Vec<f64>> {
    let n = 600;
    let ts: Vec<f64> = (0..=n)
        .map(|i| t_lo + (2.0 - t_lo) * i as f64 / n as f64)
        .collect();
    let vals: Vec<Option<f64>> = ts.iter().map(|&t| shoot(p, d, t).map(|s| s.0)).collect();
    let mut seeds = Vec::new();
    for i in (0..n).rev() {
        let (Some(a), Some(b)) = (vals[i], vals[i + 1]) else {
            continue;
        };
        if !(a < 0.0 && b >= 0.0) && !(a >= 0.0 && b < 0.0) {
            continue;
        }
        let g = |t: f64| shoot(p, d, t).map_or(f64::NAN, |s| s.0);
        let Ok((lo, hi)) = bisect("shooting residual", g, ts[i], ts[i + 1], 1e-15) else {
            continue;
        };
        let t = 0.5 * (lo + hi);
        if let Some((_, r)) = shoot(p, d, t) {
            let mut a = 1.0;
            let mut x = vec![t];
            for &rk in &r {
                a *= rk;
                x.push(a);
            }
            // drop a_1, which is eliminated
            x.remove(1);
            if x.len() == d {
                seeds.push(x);
            }
        }
    }
    seeds
}

fn extend_chain(
    p: PNorm,
    prev: &LagrangeSolution,
    before: Option<&LagrangeSolution>,
    cfg: &ExtremalConfig,
) -> Result<LagrangeSolution> {
    let d = prev.d + 1;
    let mut last_err = None;
    let mut seeds = shooting_seeds(p, d, prev.t);
    seeds.extend(continuation_seeds(prev, before));
    for x0 in seeds {
        match solve_from(p, d, &x0, cfg) {
            Ok(sol) if sol.t > prev.t => return Ok(sol),
            Ok(sol) => {
                last_err = Some(Error::InvalidBranch(format!(
                    "continuation fell back to t = {} below T_(d-1) = {}",
                    sol.t, prev.t
                )))
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or(Error::NonConvergence {
        iterations: 0,
        residual: f64::NAN,
        best: vec![],
    }))
}

/// Solutions for `d = 2..=d_max`, each seeded from the previous ones.
pub fn solve_tdp_chain(
    p: PNorm,
    d_max: usize,
    cfg: &ExtremalConfig,
) -> Result<Vec<LagrangeSolution>> {
    check_p(p, d_max)?;
    let mut out = vec![solve_d2(p, cfg)?];
    while out.len() + 1 < d_max {
        let n = out.len();
        let next = extend_chain(p, &out[n - 1], n.checked_sub(2).map(|i| &out[i]), cfg)?;
        out.push(next);
    }
    Ok(out)
}

/// Solve the degree-`d` system. With `seed` of degree `d - 1` a single
/// continuation step is taken; otherwise the chain is built from `d = 2`.
pub fn solve_tdp(
    p: PNorm,
    d: usize,
    seed: Option<&LagrangeSolution>,
    cfg: &ExtremalConfig,
) -> Result<LagrangeSolution> {
    check_p(p, d)?;
    match seed {
        Some(s) if s.d + 1 == d => extend_chain(p, s, None, cfg),
        Some(s) if s.d == d => {
            let mut x = vec![s.t];
            x.extend(&s.a.coeffs()[2..]);
            solve_from(p, d, &x, cfg)
        }
        Some(s) => Err(Error::Domain(format!(
            "seed of degree {} cannot start degree {d}",
            s.d
        ))),
        None if d == 2 => solve_d2(p, cfg),
        None => Ok(solve_tdp_chain(p, d, cfg)?
            .pop()
            .expect("chain is non-empty")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectMax {
    pub t: f64,
    pub a: RealPoly,
    /// Best `t` of every restart.
    pub restarts: Vec<f64>,
}

/// Multi-start Nelder-Mead over positive coefficient vectors with `a_0 = 1`,
/// maximising `t_f` of the linear approximant.
pub fn direct_maximize_t(p: PNorm, d: usize, restarts: usize, seed: u64) -> Result<DirectMax> {
    check_p(p, d)?;
    let cfg = SolverConfig::default();
    let objective = |v: &[f64]| {
        let mut c = vec![1.0];
        c.extend(v.iter().map(|x| x.exp()));
        match RealPoly::new(c)
            .ok()
            .and_then(|f| solve_linear_opa(&f, p, &cfg).ok())
        {
            Some(r) => -r.t_f,
            None => f64::INFINITY,
        }
    };
    let runs: Vec<(f64, Vec<f64>)> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(seed ^ (r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut a = rng.gen_range(1.0..2.0 * p.p());
            let mut v = Vec::with_capacity(d);
            for _ in 0..d {
                v.push(a.ln());
                a *= rng.gen_range(0.3..1.0);
            }
            let mut best = nelder_mead(objective, &v, 0.3, 1e-15, 20_000);
            // restarting from the incumbent shakes off a collapsed simplex
            for step in [0.05, 0.01] {
                let again = nelder_mead(objective, &best.x, step, 1e-15, 20_000);
                if again.value <= best.value {
                    best = again;
                }
            }
            (-best.value, best.x)
        })
        .collect();
    let (t, v) = runs
        .iter()
        .cloned()
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one restart");
    let mut c = vec![1.0];
    c.extend(v.iter().map(|x| x.exp()));
    Ok(DirectMax {
        t,
        a: RealPoly::new(c)?,
        restarts: runs.iter().map(|r| r.0).collect(),
    })
}

/// `a_0 (1 + t z + ... + t^(m-1) z^(m-1)) + t^m z^m f(z)`.
pub fn extend_solution(sol: &LagrangeSolution, m: usize) -> RealPoly {
    let a = sol.a.coeffs();
    let t = sol.t;
    let mut c: Vec<f64> = (0..m).map(|k| a[0] * t.powi(k as i32)).collect();
    let tm = t.powi(m as i32);
    c.extend(a.iter().map(|&x| tm * x));
    RealPoly::new(c).expect("finite coefficients")
}

/// `(p t - R_{k+1}) |R_{k+1} - t|^(p-2) - (p-1) (1/R_k) |1 - t/R_k|^(p-2)` for
/// the ratios `R_k = a_k / a_{k-1}`, `k = 1..d`, with `R_{d+1} = 0`.
pub fn ratio_residuals(p: PNorm, t: f64, a: &RealPoly) -> Vec<f64> {
    let c = a.coeffs();
    let d = a.degree();
    let pp = p.p();
    let mut r: Vec<f64> = (1..=d).map(|k| c[k] / c[k - 1]).collect();
    r.push(0.0);
    (0..d)
        .map(|i| {
            let (rk, rn) = (r[i], r[i + 1]);
            (pp * t - rn) * spow((rn - t).abs(), pp - 2.0)
                - (pp - 1.0) / rk * spow((1.0 - t / rk).abs(), pp - 2.0)
        })
        .collect()
}
