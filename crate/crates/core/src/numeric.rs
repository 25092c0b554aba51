//! Scalar abstraction, extended-precision floats and the small numerical
//! kernels (bisection, dense solves, Nelder-Mead) shared by the solvers.

use std::cell::{Cell, RefCell};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use astro_float::{BigFloat, Consts, RoundingMode};

use crate::error::{Error, Result};

/// Arithmetic needed by the generic Newton solver.
pub trait Real:
    Clone
    + PartialOrd
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn abs(&self) -> Self;
    /// `self^e` for `self > 0`.
    fn powf(&self, e: &Self) -> Self;
    fn is_finite(&self) -> bool;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }

    /// `|x|^e`, evaluated at `max(|x|, floor)` so that negative exponents stay finite.
    fn abs_pow(&self, e: &Self, floor: &Self) -> Self {
        let a = self.abs();
        let a = if a < *floor { floor.clone() } else { a };
        a.powf(e)
    }

    fn signum_f64(&self) -> f64 {
        let v = self.to_f64();
        if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            0.0
        }
    }
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn powf(&self, e: &Self) -> Self {
        f64::powf(*self, *e)
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static WORKING_BITS: Cell<usize> = const { Cell::new(256) };
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constant cache"));
}

/// Precisions accepted on the command line and by the extremal solver.
pub const SUPPORTED_PRECISIONS: [u32; 4] = [53, 128, 256, 512];

pub fn check_precision(bits: u32) -> Result<u32> {
    if SUPPORTED_PRECISIONS.contains(&bits) {
        Ok(bits)
    } else {
        Err(Error::Precision(bits))
    }
}

/// Run `f` with the thread's working precision for [`MpFloat`] set to `bits`.
pub fn with_precision<T>(bits: u32, f: impl FnOnce() -> T) -> T {
    let prev = WORKING_BITS.with(|w| w.replace(bits as usize));
    let out = f();
    WORKING_BITS.with(|w| w.set(prev));
    out
}

fn bits() -> usize {
    WORKING_BITS.with(|w| w.get())
}

/// Binary floating point number with the thread's working precision.
#[derive(Clone)]
pub struct MpFloat(BigFloat);

impl MpFloat {
    pub fn inner(&self) -> &BigFloat {
        &self.0
    }
}

impl fmt::Debug for MpFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl PartialEq for MpFloat {
    fn eq(&self, other: &Self) -> bool {
        self.0.cmp(&other.0) == Some(0)
    }
}

impl PartialOrd for MpFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.cmp(&other.0).map(|c| c.cmp(&0))
    }
}

macro_rules! mp_binop {
    ($tr:ident, $method:ident) => {
        impl $tr for MpFloat {
            type Output = MpFloat;
            fn $method(self, rhs: MpFloat) -> MpFloat {
                MpFloat(self.0.$method(&rhs.0, bits(), RM))
            }
        }
    };
}

mp_binop!(Add, add);
mp_binop!(Sub, sub);
mp_binop!(Mul, mul);
mp_binop!(Div, div);

impl Neg for MpFloat {
    type Output = MpFloat;
    fn neg(self) -> MpFloat {
        MpFloat(self.0.neg())
    }
}

impl Real for MpFloat {
    fn from_f64(x: f64) -> Self {
        MpFloat(BigFloat::from_f64(x, bits()))
    }

    fn to_f64(&self) -> f64 {
        if self.0.is_zero() {
            return 0.0;
        }
        if self.0.is_nan() {
            return f64::NAN;
        }
        if self.0.is_inf_pos() {
            return f64::INFINITY;
        }
        if self.0.is_inf_neg() {
            return f64::NEG_INFINITY;
        }
        // decimal round trip keeps 17+ significant digits
        format!("{}", self.0).parse().unwrap_or(f64::NAN)
    }

    fn abs(&self) -> Self {
        MpFloat(self.0.abs())
    }

    // BigFloat::pow loops forever when the result is exactly representable
    // (e.g. 1.2345^2 at 128 bits), so integer exponents go through powi and
    // the rest through exp(e ln x) with guard bits
    fn powf(&self, e: &Self) -> Self {
        let ef = e.to_f64();
        if ef.fract() == 0.0 && ef.abs() <= 1e6 {
            let r = self.0.powi(ef.abs() as usize, bits(), RM);
            return if ef < 0.0 {
                MpFloat(r.reciprocal(bits(), RM))
            } else {
                MpFloat(r)
            };
        }
        if self.0.is_zero() {
            return MpFloat(if ef > 0.0 {
                BigFloat::new(bits())
            } else {
                BigFloat::from_f64(f64::INFINITY, bits())
            });
        }
        let g = bits() + 64;
        CONSTS.with(|cc| {
            let cc = &mut cc.borrow_mut();
            let l = self.0.ln(g, RM, cc);
            let mut y = l.mul(&e.0, g, RM).exp(g, RM, cc);
            // only fails for a zero precision, which bits() never is
            let _ = y.set_precision(bits(), RM);
            MpFloat(y)
        })
    }

    fn is_finite(&self) -> bool {
        !(self.0.is_nan() || self.0.is_inf())
    }
}

/// Solve `A x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` for a numerically singular matrix.
pub fn solve_dense<R: Real>(mut a: Vec<Vec<R>>, mut b: Vec<R>) -> Option<Vec<R>> {
    let n = b.len();
    for col in 0..n {
        let mut piv = col;
        for row in col + 1..n {
            if a[row][col].abs() > a[piv][col].abs() {
                piv = row;
            }
        }
        if a[piv][col].abs().to_f64() == 0.0 || !a[piv][col].is_finite() {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let factor = a[row][col].clone() / a[col][col].clone();
            if factor.to_f64() == 0.0 {
                continue;
            }
            for k in col..n {
                let v = a[row][k].clone() - factor.clone() * a[col][k].clone();
                a[row][k] = v;
            }
            let v = b[row].clone() - factor * b[col].clone();
            b[row] = v;
        }
    }
    let mut x = vec![R::zero(); n];
    for row in (0..n).rev() {
        let mut s = b[row].clone();
        for k in row + 1..n {
            s = s - a[row][k].clone() * x[k].clone();
        }
        x[row] = s / a[row][row].clone();
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

/// Bisection for a sign change of `f` on `[lo, hi]`, stopping once the bracket
/// is narrower than `xtol` (or cannot be split further in floating point).
/// Returns the final bracket.
pub fn bisect(
    what: &'static str,
    mut f: impl FnMut(f64) -> f64,
    lo: f64,
    hi: f64,
    xtol: f64,
) -> Result<(f64, f64)> {
    let (mut a, mut b) = (lo, hi);
    let fa0 = f(a);
    let fb0 = f(b);
    if fa0 == 0.0 {
        return Ok((a, a));
    }
    if fb0 == 0.0 {
        return Ok((b, b));
    }
    if !(fa0.is_finite() && fb0.is_finite()) || (fa0 < 0.0) == (fb0 < 0.0) {
        return Err(Error::BracketFailure {
            what,
            lo,
            hi,
            f_lo: fa0,
            f_hi: fb0,
        });
    }
    let neg_at_a = fa0 < 0.0;
    for _ in 0..2000 {
        if b - a <= xtol {
            break;
        }
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok((m, m));
        }
        if (fm < 0.0) == neg_at_a {
            a = m;
        } else {
            b = m;
        }
    }
    Ok((a, b))
}

/// Outcome of a Nelder-Mead run.
#[derive(Debug, Clone)]
pub struct Simplex {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Derivative-free Nelder-Mead minimisation with the standard coefficients.
pub fn nelder_mead(
    f: impl Fn(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    ftol: f64,
    max_iter: usize,
) -> Simplex {
    let n = x0.len();
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += if x[i].abs() > 1e-8 {
            step * x[i].abs().max(1.0)
        } else {
            step
        };
        pts.push(x);
    }
    let mut vals: Vec<f64> = pts.iter().map(|x| f(x)).collect();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(Ordering::Equal));
        pts = idx.iter().map(|&i| pts[i].clone()).collect();
        vals = idx.iter().map(|&i| vals[i]).collect();
        let spread = (vals[n] - vals[0]).abs();
        let size = pts[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread <= ftol * (vals[0].abs() + ftol)
            && size <= 1e-10 * (1.0 + pts[0].iter().fold(0.0, |m: f64, v| m.max(v.abs())))
        {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |c: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&pts[n])
                .map(|(m, w)| m + c * (w - m))
                .collect()
        };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
        } else {
            let (xc, fc) = if fr < vals[n] {
                let xc = along(-0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < vals[n].min(fr) {
                pts[n] = xc;
                vals[n] = fc;
            } else {
                let best = pts[0].clone();
                for i in 1..=n {
                    pts[i] = pts[i]
                        .iter()
                        .zip(&best)
                        .map(|(a, b)| b + 0.5 * (a - b))
                        .collect();
                    vals[i] = f(&pts[i]);
                }
            }
        }
    }
    let (bi, _) = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(Ordering::Equal))
        .unwrap();
    Simplex {
        x: pts[bi].clone(),
        value: vals[bi],
        iterations,
        converged,
    }
}
