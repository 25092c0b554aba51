//! Cross-module invariant batteries with a pass/fail matrix.
//!
//! Every numeric check measures a worst-case error and compares it with a
//! tolerance; `VerifyConfig::tol` replaces all of them at once. Ordering
//! checks (sign and monotonicity conditions) have no tolerance.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    fixed_points, iterate_orbit, phi, psi, Branch, BranchPolicy, OrbitStatus, PhiPsiParams,
};
use crate::extra_zero::{
    family_large_p, family_small_p, find_min_k_extra_zero, g_of_t, DEFAULT_CAP,
};
use crate::extremal::{direct_maximize_t, residual_scale, solve_tdp_chain, ExtremalConfig};
use crate::lp::{lp_norm, semi_inner, signed_power, PNorm};
use crate::opa::{h_prime, h_value, remove_root_opa, solve_linear_opa, solve_opa, SolverConfig};
use crate::poly::RealPoly;
use crate::radius::{exclusion_radius, solve_tau};
use crate::reference::{EXCLUSION, EXTREMAL, TAU};

const DEFAULT_PS: [f64; 5] = [1.5, 2.0, 3.0, 4.0, 6.0];
const EXTREMAL_PS: [f64; 4] = [4.0, 6.0, 8.0, 10.0];
const EXTRA_ZERO_PS: [f64; 5] = [1.5, 1.75, 3.0, 4.0, 6.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    /// Restrict to these exponents; `None` runs the full suite.
    pub ps: Option<Vec<f64>>,
    /// Overrides every numeric tolerance.
    pub tol: Option<f64>,
    pub seed: u64,
    pub precision_bits: u32,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            ps: None,
            tol: None,
            seed: 2024,
            precision_bits: 53,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub suite: String,
    pub name: String,
    pub passed: bool,
    /// Worst error observed, or the number of violations for ordering checks.
    pub worst: f64,
    pub tol: Option<f64>,
    pub samples: usize,
    pub seconds: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn matrix(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let tol = c.tol.map_or("-".to_string(), |t| format!("{t:.1e}"));
            let _ = writeln!(
                s,
                "[{}] {:<10} {:<28} worst={:<10.3e} tol={:<8} n={:<4} {:.2}s {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.suite,
                c.name,
                c.worst,
                tol,
                c.samples,
                c.seconds,
                c.detail
            );
        }
        let fails = self.failures().count();
        let _ = writeln!(s, "{} checks, {} failed", self.checks.len(), fails);
        s
    }
}

struct Runner<'a> {
    cfg: &'a VerifyConfig,
    report: VerifyReport,
}

/// What a check body returns: worst error, sample count, free-form detail.
type Measured = (f64, usize, String);

impl Runner<'_> {
    fn numeric(
        &mut self,
        suite: &str,
        name: &str,
        tol: f64,
        body: impl FnOnce() -> Result<Measured, String>,
    ) {
        let tol = self.cfg.tol.unwrap_or(tol);
        self.run(suite, name, Some(tol), body, |w| w <= tol);
    }

    fn ordering(
        &mut self,
        suite: &str,
        name: &str,
        body: impl FnOnce() -> Result<Measured, String>,
    ) {
        self.run(suite, name, None, body, |w| w == 0.0);
    }

    fn run(
        &mut self,
        suite: &str,
        name: &str,
        tol: Option<f64>,
        body: impl FnOnce() -> Result<Measured, String>,
        ok: impl Fn(f64) -> bool,
    ) {
        let start = Instant::now();
        let out = body();
        let seconds = start.elapsed().as_secs_f64();
        let (passed, worst, samples, detail) = match out {
            Ok((w, n, d)) => (ok(w) && w.is_finite(), w, n, d),
            Err(e) => (false, f64::NAN, 0, e),
        };
        self.report.checks.push(CheckOutcome {
            suite: suite.into(),
            name: name.into(),
            passed,
            worst,
            tol,
            samples,
            seconds,
            detail,
        });
    }
}

fn pn(p: f64) -> Result<PNorm, String> {
    PNorm::new(p).map_err(|e| e.to_string())
}

fn random_poly(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> RealPoly {
    let d = rng.gen_range(lo..=hi);
    let mut c = vec![1.0];
    c.extend((0..d).map(|_| rng.gen_range(-2.0..2.0)));
    RealPoly::new(c).expect("finite")
}

/// Minimiser of `‖(1 - tz) f‖_2^2`.
fn p2_oracle(f: &RealPoly) -> f64 {
    let a = f.coeffs();
    let num: f64 = a.windows(2).map(|w| w[0] * w[1]).sum();
    let den: f64 = a.iter().map(|x| x * x).sum();
    num / den
}

fn bj_residual(f: &RealPoly, t: f64, p: PNorm) -> f64 {
    let j = f.times_one_minus(t);
    let zf = f.shift(1);
    let scale = lp_norm(&j, p).powf(p.p() - 1.0) * lp_norm(&zf, p);
    semi_inner(&j, &zf, p).abs() / scale
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    let m = b.iter().fold(0.0_f64, |m, x| m.max(x.abs())).max(1e-300);
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / m)
        .fold(0.0, f64::max)
}

pub fn run_verify(cfg: &VerifyConfig) -> VerifyReport {
    let mut r = Runner {
        cfg,
        report: VerifyReport::default(),
    };
    let generic: Vec<f64> = cfg.ps.clone().unwrap_or_else(|| DEFAULT_PS.to_vec());
    let selected = |list: &[f64]| -> Vec<f64> {
        match &cfg.ps {
            None => list.to_vec(),
            Some(ps) => list
                .iter()
                .copied()
                .filter(|p| ps.iter().any(|q| (q - p).abs() < 1e-12))
                .collect(),
        }
    };
    let has_two = generic.iter().any(|&p| p == 2.0);
    let seed = cfg.seed;
    let scfg = SolverConfig::default();

    r.numeric("lp", "signed-power-inverse", 1e-12, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0_f64;
        let mut n = 0;
        for &p in &generic {
            let q = pn(p)?.conj();
            for _ in 0..100 {
                let x: f64 = rng.gen_range(-50.0..50.0);
                let y = signed_power(
                    signed_power(x, p - 1.0).map_err(|e| e.to_string())?,
                    q - 1.0,
                )
                .map_err(|e| e.to_string())?;
                worst = worst.max((y - x).abs() / x.abs().max(1.0));
                n += 1;
            }
        }
        Ok((worst, n, String::new()))
    });

    r.numeric("lp", "norm-homogeneity", 1e-12, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
        let mut worst = 0.0_f64;
        let mut n = 0;
        for &p in &generic {
            let p = pn(p)?;
            for _ in 0..50 {
                let f = random_poly(&mut rng, 1, 8);
                let c: f64 = rng.gen_range(-10.0..10.0);
                let lhs = lp_norm(&f.scale(c), p);
                let rhs = c.abs() * lp_norm(&f, p);
                worst = worst.max((lhs - rhs).abs() / rhs.max(1e-300));
                n += 1;
            }
        }
        Ok((worst, n, String::new()))
    });

    r.numeric("opa", "h-prime-vs-difference", 1e-6, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 2);
        let mut worst = 0.0_f64;
        let per = 500 / generic.len().max(1) + 1;
        let mut n = 0;
        for &p in &generic {
            let p = pn(p)?;
            for _ in 0..per {
                let f = random_poly(&mut rng, 1, 6);
                let t: f64 = rng.gen_range(-2.0..2.0);
                let h = 1e-5 * t.abs().max(1.0);
                let fd = (h_value(&f, p, t + h) - h_value(&f, p, t - h)) / (2.0 * h);
                let exact = h_prime(&f, p, t);
                // relative to the size of h itself, so cancellation near the minimum is not penalised
                let scale = exact.abs().max(h_value(&f, p, t));
                worst = worst.max((fd - exact).abs() / scale);
                n += 1;
            }
        }
        Ok((worst, n, String::new()))
    });

    r.numeric("opa", "bj-orthogonality", 1e-7, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 3);
        let mut worst = 0.0_f64;
        let mut n = 0;
        for &p in &generic {
            let p = pn(p)?;
            for _ in 0..(200 / generic.len().max(1) + 1) {
                let f = random_poly(&mut rng, 1, 6);
                let lin = solve_linear_opa(&f, p, &scfg).map_err(|e| e.to_string())?;
                worst = worst.max(bj_residual(&f, lin.t_f, p));
                n += 1;
            }
        }
        Ok((worst, n, String::new()))
    });

    if has_two {
        r.numeric("opa", "p2-closed-form", 1e-10, || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 4);
            let p = pn(2.0)?;
            let mut worst = 0.0_f64;
            for _ in 0..200 {
                let f = random_poly(&mut rng, 1, 8);
                let lin = solve_linear_opa(&f, p, &scfg).map_err(|e| e.to_string())?;
                worst = worst.max((lin.t_f - p2_oracle(&f)).abs());
            }
            Ok((worst, 200, String::new()))
        });

        r.ordering("opa", "p2-no-interior-zero", || {
            let p = pn(2.0)?;
            let mut bad = 0;
            let mut n = 0;
            for k in 1..40 {
                for f in [family_small_p(k), family_large_p(k)] {
                    let f = f.map_err(|e| e.to_string())?;
                    let lin = solve_linear_opa(&f, p, &scfg).map_err(|e| e.to_string())?;
                    if lin.t_f.abs() >= 1.0 {
                        bad += 1;
                    }
                    n += 1;
                }
            }
            Ok((bad as f64, n, String::new()))
        });
    }

    r.numeric("opa", "deflation-identity", 1e-7, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 5);
        let mut worst = 0.0_f64;
        let mut n = 0;
        for &p in &generic {
            let p = pn(p)?;
            for _ in 0..(50 / generic.len().max(1) + 1) {
                let f = random_poly(&mut rng, 1, 4);
                let base = solve_opa(&f, p, 1, &scfg).map_err(|e| e.to_string())?;
                let q = base.q.coeffs();
                if q[1] == 0.0 {
                    continue;
                }
                let z0 = -q[0] / q[1];
                let g = remove_root_opa(&f, p, 1, z0, &scfg).map_err(|e| e.to_string())?;
                let lhs = g.q.times_linear(z0);
                worst = worst.max(max_rel(lhs.coeffs(), q));
                n += 1;
            }
        }
        Ok((worst, n, String::new()))
    });

    r.numeric("opa", "t-continuity", 1e-4, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 6);
        let f = RealPoly::new(vec![1.0, 1.5, -0.7, 0.4]).expect("finite");
        let mut worst = 0.0_f64;
        let mut n = 0;
        for &p in &generic {
            let p = pn(p)?;
            let t0 = solve_linear_opa(&f, p, &scfg)
                .map_err(|e| e.to_string())?
                .t_f;
            for _ in 0..(100 / generic.len().max(1) + 1) {
                let mut e: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let en = lp_norm(&RealPoly::new(e.clone()).expect("finite"), p);
                e.iter_mut().for_each(|x| *x *= 1e-6 / en);
                let g = f.add(&RealPoly::new(e).expect("finite"));
                let t = solve_linear_opa(&g, p, &scfg)
                    .map_err(|e| e.to_string())?
                    .t_f;
                worst = worst.max((t - t0).abs());
                n += 1;
            }
        }
        Ok((worst, n, String::new()))
    });

    for p in selected(&EXTRA_ZERO_PS) {
        r.ordering("extra-zero", &format!("witness-p{p}"), || {
            let pp = pn(p)?;
            let w = find_min_k_extra_zero(pp, DEFAULT_CAP, &scfg).map_err(|e| e.to_string())?;
            let fresh = solve_linear_opa(&w.f, pp, &scfg).map_err(|e| e.to_string())?;
            let mut bad = 0;
            if !(fresh.t_f.abs() > 1.0) {
                bad += 1;
            }
            if p < 2.0 {
                if !(g_of_t(w.k, pp, 1.0) > 0.0 && g_of_t(w.k, pp, 2.0) < 0.0) {
                    bad += 1;
                }
            } else if !(h_prime(&w.f, pp, 1.0) < 0.0) {
                bad += 1;
            }
            Ok((
                bad as f64,
                1,
                format!("k={} zero={:.6}", w.k, 1.0 / fresh.t_f),
            ))
        });
    }

    let ecfg = ExtremalConfig {
        precision_bits: cfg.precision_bits,
        ..ExtremalConfig::double()
    };
    let ext_ps = selected(&EXTREMAL_PS);
    let mut chains = Vec::new();
    for &p in &ext_ps {
        if let Ok(pp) = PNorm::new(p) {
            chains.push((p, solve_tdp_chain(pp, 6, &ecfg)));
        }
    }
    if !chains.is_empty() {
        r.numeric("extremal", "table-inv-t", 1e-3, || {
            let mut worst = 0.0_f64;
            let mut n = 0;
            for row in EXTREMAL.iter() {
                let Some((_, Ok(chain))) = chains.iter().find(|(p, _)| *p == row.p) else {
                    continue;
                };
                let s = &chain[row.d - 2];
                worst = worst.max((s.inv_t() - row.inv_t).abs());
                n += 1;
            }
            Ok((worst, n, String::new()))
        });
        r.numeric("extremal", "table-coefficients", 2e-3, || {
            let mut worst = 0.0_f64;
            let mut n = 0;
            for row in EXTREMAL.iter() {
                let Some((_, Ok(chain))) = chains.iter().find(|(p, _)| *p == row.p) else {
                    continue;
                };
                let s = &chain[row.d - 2];
                for (a, b) in s.a.coeffs().iter().zip(row.coeffs) {
                    worst = worst.max((a - b).abs() / b.abs());
                }
                n += 1;
            }
            Ok((worst, n, String::new()))
        });
        r.numeric("extremal", "a1-equals-pt", 1e-9, || {
            let mut worst = 0.0_f64;
            let mut n = 0;
            for (p, chain) in &chains {
                for s in chain.as_ref().map_err(|e| format!("p={p}: {e}"))? {
                    worst = worst.max((s.a.coeff(1) - p * s.t).abs());
                    n += 1;
                }
            }
            Ok((worst, n, String::new()))
        });
        r.numeric("extremal", "lagrange-residuals", 1e-9, || {
            let mut worst = 0.0_f64;
            let mut n = 0;
            for (p, chain) in &chains {
                for s in chain.as_ref().map_err(|e| format!("p={p}: {e}"))? {
                    worst = worst.max(s.residual_max() / s.scale);
                    n += 1;
                }
            }
            Ok((worst, n, String::new()))
        });
        r.numeric("extremal", "hprime-vanishes", 1e-8, || {
            let mut worst = 0.0_f64;
            let mut n = 0;
            for (p, chain) in &chains {
                let pp = pn(*p)?;
                for s in chain.as_ref().map_err(|e| format!("p={p}: {e}"))? {
                    let hp = h_prime(&s.a, pp, s.t);
                    worst = worst.max(hp.abs() / residual_scale(pp, s.a.coeffs()));
                    n += 1;
                }
            }
            Ok((worst, n, String::new()))
        });
        r.ordering("extremal", "t-increasing-in-d", || {
            let mut bad = 0;
            let mut n = 0;
            for (p, chain) in &chains {
                let chain = chain.as_ref().map_err(|e| format!("p={p}: {e}"))?;
                for w in chain.windows(2) {
                    if !(w[1].t > w[0].t + 1e-9) {
                        bad += 1;
                    }
                    n += 1;
                }
            }
            Ok((bad as f64, n, String::new()))
        });
        if ext_ps.contains(&4.0) {
            r.numeric("extremal", "direct-maximisation", 1e-4, || {
                let pp = pn(4.0)?;
                let (_, chain) = chains
                    .iter()
                    .find(|(p, _)| *p == 4.0)
                    .expect("p = 4 is selected");
                let chain = chain.as_ref().map_err(|e| e.to_string())?;
                let mut worst = 0.0_f64;
                for d in [2, 3] {
                    let dm = direct_maximize_t(pp, d, 4, seed).map_err(|e| e.to_string())?;
                    worst = worst.max((dm.t - chain[d - 2].t).abs());
                }
                Ok((worst, 2, String::new()))
            });
            r.numeric("dynamics", "orbit-matches-ratios", 1e-6, || {
                let pp = pn(4.0)?;
                let (_, chain) = chains
                    .iter()
                    .find(|(p, _)| *p == 4.0)
                    .expect("p = 4 is selected");
                let chain = chain.as_ref().map_err(|e| e.to_string())?;
                let mut worst = 0.0_f64;
                for d in [3, 4] {
                    let s = &chain[d - 2];
                    let params = PhiPsiParams::new(pp, s.t).map_err(|e| e.to_string())?;
                    let tr =
                        iterate_orbit(&params, 4.0 * s.t, &BranchPolicy::Fixed(Branch::Left), d)
                            .map_err(|e| e.to_string())?;
                    let a = s.a.coeffs();
                    for k in 1..=d {
                        let ratio = a[k] / a[k - 1];
                        worst = worst.max((tr.ratios[k - 1] - ratio).abs() / ratio);
                    }
                    // the orbit must reach the exit in exactly d steps
                    if tr.status != OrbitStatus::TerminatedAtExit {
                        worst = worst.max((tr.ratios[d]).abs());
                    }
                }
                Ok((worst, 2, String::new()))
            });
        }
    }

    let fp_ps: Vec<f64> = generic
        .iter()
        .copied()
        .filter(|&p| (p - 2.0).abs() > 1e-6)
        .collect();
    if !fp_ps.is_empty() {
        r.numeric("dynamics", "fixed-point-identity", 1e-10, || {
            let mut worst = 0.0_f64;
            let mut n = 0;
            for &p in &fp_ps {
                for t in [1.05, 1.2, 1.5] {
                    let params = PhiPsiParams::new(pn(p)?, t).map_err(|e| e.to_string())?;
                    let fp = fixed_points(&params).map_err(|e| e.to_string())?;
                    for x in [fp.xi1, fp.xi2] {
                        let a = phi(&params, x).map_err(|e| e.to_string())?;
                        let b = psi(&params, x).map_err(|e| e.to_string())?;
                        worst = worst.max((a - b).abs() / a.abs().max(1.0));
                        n += 1;
                    }
                }
            }
            Ok((worst, n, String::new()))
        });
    }

    let excl: Vec<_> = EXCLUSION
        .iter()
        .filter(|row| {
            cfg.ps
                .as_ref()
                .map_or(true, |ps| ps.iter().any(|q| (q - row.p).abs() < 1e-12))
        })
        .collect();
    if !excl.is_empty() {
        r.numeric("radius", "exclusion-table", 5e-5, || {
            let mut worst = 0.0_f64;
            for row in &excl {
                let e = exclusion_radius(pn(row.p)?);
                worst = worst.max((e.s_min - row.s).abs()).max((e.r - row.r).abs());
            }
            Ok((worst, excl.len(), String::new()))
        });
    }
    if has_two {
        r.numeric("radius", "exclusion-p2", 1e-15, || {
            let e = exclusion_radius(pn(2.0)?);
            Ok((
                (e.r - 1.0).abs().max((e.s_min - 1.0).abs()),
                1,
                String::new(),
            ))
        });
    }
    let taus: Vec<_> = TAU
        .iter()
        .filter(|row| {
            cfg.ps
                .as_ref()
                .map_or(true, |ps| ps.iter().any(|q| (q - row.p).abs() < 1e-12))
        })
        .collect();
    if !taus.is_empty() {
        r.numeric("radius", "tau-table", 2e-4, || {
            let mut worst = 0.0_f64;
            for row in &taus {
                let t = solve_tau(pn(row.p)?).map_err(|e| e.to_string())?;
                worst = worst.max((t.tau - row.tau).abs());
            }
            Ok((worst, taus.len(), String::new()))
        });
    }
    if !chains.is_empty() {
        r.ordering("radius", "sandwich", || {
            let mut bad = 0;
            let mut n = 0;
            for (p, chain) in &chains {
                let pp = pn(*p)?;
                let rr = exclusion_radius(pp).r;
                let tau = solve_tau(pp).map_err(|e| e.to_string())?.tau;
                for s in chain.as_ref().map_err(|e| format!("p={p}: {e}"))? {
                    if !(rr < 1.0 / tau - 1e-9 && 1.0 / tau < s.inv_t() - 1e-9) {
                        bad += 1;
                    }
                    n += 1;
                }
            }
            Ok((bad as f64, n, String::new()))
        });
    }

    r.report
}
