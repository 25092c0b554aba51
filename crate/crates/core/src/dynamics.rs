//! The implicit map `Phi(x_{k+1}) = Psi(x_k)` on coefficient ratios, its fixed
//! points, orbit search over the monotone pieces of `Phi`, and cobweb export.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::PNorm;

/// `p` within this distance of 2 is rejected.
pub const GUARD_BAND: f64 = 1e-6;
pub const EXIT_TOL: f64 = 1e-6;
pub const DEFAULT_BUDGET: usize = 40;
/// Step size below which a step counts towards fixed-point convergence.
pub const FIXED_TOL: f64 = 1e-12;
/// Nodes visited by the exhaustive branch search before it gives up.
pub const NODE_CAP: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiPsiParams {
    pub p: PNorm,
    pub t: f64,
}

impl PhiPsiParams {
    pub fn new(p: PNorm, t: f64) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::OutOfRange {
                value: t,
                reason: "t must be positive and finite",
            });
        }
        if p.near_two(GUARD_BAND) {
            return Err(Error::UnsupportedExponent(p.p()));
        }
        Ok(Self { p, t })
    }

    fn pp(&self) -> f64 {
        self.p.p()
    }

    /// `(p - 1) t`, the critical point shared by `Phi` and `Psi`.
    pub fn critical(&self) -> f64 {
        (self.pp() - 1.0) * self.t
    }

    /// `Phi(0) = p t^(p-1)`, ordinate of the exit point.
    pub fn exit_value(&self) -> f64 {
        self.pp() * self.t.powf(self.pp() - 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Left,
    Middle,
    Right,
}

impl Branch {
    pub const ALL: [Branch; 3] = [Branch::Left, Branch::Middle, Branch::Right];

    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Left => "left",
            Branch::Middle => "middle",
            Branch::Right => "right",
        }
    }
}

impl std::str::FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Branch::Left),
            "middle" => Ok(Branch::Middle),
            "right" => Ok(Branch::Right),
            other => Err(Error::Domain(format!("unknown branch {other:?}"))),
        }
    }
}

/// `(pt - x) |x - t|^(p-2)`.
pub fn phi(params: &PhiPsiParams, x: f64) -> Result<f64> {
    let (p, t) = (params.pp(), params.t);
    if p < 2.0 && x == t {
        return Err(Error::Singularity("Phi", x));
    }
    Ok(phi_raw(p, t, x))
}

fn phi_raw(p: f64, t: f64, x: f64) -> f64 {
    let d = (x - t).abs();
    let w = if d == 0.0 { 0.0 } else { d.powf(p - 2.0) };
    (p * t - x) * w
}

/// `(p - 1) (1/x) |1 - t/x|^(p-2)`.
pub fn psi(params: &PhiPsiParams, x: f64) -> Result<f64> {
    let (p, t) = (params.pp(), params.t);
    if x == 0.0 {
        return Err(Error::PoleAtZero);
    }
    if p < 2.0 && x == t {
        return Err(Error::Singularity("Psi", x));
    }
    let d = (1.0 - t / x).abs();
    let w = if d == 0.0 { 0.0 } else { d.powf(p - 2.0) };
    Ok((p - 1.0) / x * w)
}

/// The x-interval of a monotone piece of `Phi`. Left and right pieces are
/// decreasing, the middle one increasing. For `p < 2` the pole at `t` is
/// excluded from both adjacent pieces.
pub fn branch_interval(params: &PhiPsiParams, b: Branch) -> (f64, f64) {
    let (t, c) = (params.t, params.critical());
    let (a, m) = if params.pp() > 2.0 { (t, c) } else { (c, t) };
    match b {
        Branch::Left => (f64::NEG_INFINITY, a),
        Branch::Middle => (a, m),
        Branch::Right => (m, f64::INFINITY),
    }
}

/// The monotone piece containing `x`. Breakpoints belong to the piece on
/// their left.
pub fn branch_of(params: &PhiPsiParams, x: f64) -> Branch {
    for b in [Branch::Left, Branch::Middle] {
        if x <= branch_interval(params, b).1 {
            return b;
        }
    }
    Branch::Right
}

/// Closed range `[lo, hi]` of `Phi` on a branch.
fn branch_range(params: &PhiPsiParams, b: Branch) -> (f64, f64) {
    let (p, t) = (params.pp(), params.t);
    let at_c = phi_raw(p, t, params.critical());
    if p > 2.0 {
        match b {
            Branch::Left => (0.0, f64::INFINITY),
            Branch::Middle => (0.0, at_c),
            Branch::Right => (f64::NEG_INFINITY, at_c),
        }
    } else {
        match b {
            Branch::Left | Branch::Middle => (at_c, f64::INFINITY),
            Branch::Right => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }
}

/// The unique `x` on a monotone piece of `Phi` with `Phi(x) = y`.
pub fn invert_phi(params: &PhiPsiParams, y: f64, branch: Branch) -> Result<f64> {
    let (p, t) = (params.pp(), params.t);
    let (rlo, rhi) = branch_range(params, branch);
    if !y.is_finite() || y < rlo || y > rhi {
        return Err(Error::BranchMiss {
            y,
            branch: branch.as_str(),
        });
    }
    let f = |x: f64| phi_raw(p, t, x) - y;
    let (mut lo, mut hi) = branch_interval(params, branch);
    let width = t.max(1.0);
    // replace infinite ends and the pole by finite points with the right sign
    if lo == f64::NEG_INFINITY {
        let mut step = width;
        lo = hi - step;
        while f(lo) < 0.0 {
            step *= 2.0;
            lo = hi - step;
        }
    }
    if hi == f64::INFINITY {
        let mut step = width;
        hi = lo + step;
        while f(hi) > 0.0 {
            step *= 2.0;
            hi = lo + step;
        }
    }
    if p < 2.0 {
        let mut eps = 0.25 * t;
        if branch == Branch::Middle {
            let base = lo;
            hi = t - eps;
            while f(hi) < 0.0 {
                eps *= 0.5;
                hi = t - eps;
                if hi <= base {
                    break;
                }
            }
        } else if branch == Branch::Right {
            let top = hi;
            lo = t + eps;
            while f(lo) < 0.0 {
                eps *= 0.5;
                lo = t + eps;
                if lo >= top {
                    break;
                }
            }
        }
    }
    // orient so that f(a) <= 0 <= f(b)
    let (mut a, mut b) = if f(lo) <= 0.0 { (lo, hi) } else { (hi, lo) };
    if f(a) == 0.0 {
        return Ok(a);
    }
    if f(b) == 0.0 {
        return Ok(b);
    }
    for _ in 0..2000 {
        let m = 0.5 * (a + b);
        if m == a || m == b || (a - b).abs() <= 1e-15 * m.abs().max(1e-2) {
            break;
        }
        let v = f(m);
        if v == 0.0 {
            return Ok(m);
        }
        if v < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPoints {
    pub xi1: f64,
    pub t: f64,
    pub xi2: f64,
}

/// The solutions of `Phi(x) = Psi(x)` other than `x = t`, i.e. the roots of
/// `x^(p-1) (pt - x) = p - 1`.
pub fn fixed_points(params: &PhiPsiParams) -> Result<FixedPoints> {
    let t = params.t;
    if t < 1.0 {
        return Err(Error::OutOfRange {
            value: t,
            reason: "fixed points are only analysed for t >= 1",
        });
    }
    let (xi1, xi2) = fixed_roots(params.pp(), t);
    Ok(FixedPoints { xi1, t, xi2 })
}

// Both roots are found in log form. The right one is solved for the gap
// u = pt - xi2, which underflows in the direct form for large p.
pub(crate) fn fixed_roots(p: f64, t: f64) -> (f64, f64) {
    let (xi1, xi2, _) = fixed_roots_with_gap(p, t);
    (xi1, xi2)
}

/// As [`fixed_roots`], also returning the gap `pt - xi2`.
pub(crate) fn fixed_roots_with_gap(p: f64, t: f64) -> (f64, f64, f64) {
    let lp1 = (p - 1.0).ln();
    let xi1 = if t == 1.0 {
        1.0
    } else {
        let g = |x: f64| (p - 1.0) * x.ln() + (p * t - x).ln() - lp1;
        bisect_collapse(g, 0.0, t)
    };
    let m = |v: f64| {
        let u = v.exp();
        v + (p - 1.0) * (p * t - u).ln() - lp1
    };
    let hi = ((p - 1.0) * t).ln();
    let mut lo = lp1 - (p - 1.0) * (p * t).ln() - 8.0;
    while m(lo) > 0.0 {
        lo -= 8.0;
    }
    let u = bisect_collapse(m, lo, hi).exp();
    (xi1, p * t - u, u)
}

/// Bisection for an increasing sign change on `[a, b]`, run until the bracket
/// cannot shrink further. `a` may be a point where `g` is `-inf`.
fn bisect_collapse(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    for _ in 0..2100 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if g(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrbitStatus {
    TerminatedAtExit,
    ConvergedToFixedPoint,
    BudgetExhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepKind {
    /// From `(x, Phi(x))` up or down to `(x, Psi(x))`.
    VerticalToPsi,
    /// From `(x, y)` across to the point of `Phi` at height `y`.
    HorizontalToPhi,
}

/// A cobweb vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitPoint {
    pub x: f64,
    pub y: f64,
    pub kind: StepKind,
    pub branch: Branch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitTrace {
    pub params: PhiPsiParams,
    /// `(x_1, Phi(x_1))`.
    pub start: (f64, f64),
    pub points: Vec<OrbitPoint>,
    pub status: OrbitStatus,
    /// `x_1, x_2, ...`; for a terminated orbit these are the ratios
    /// `a_k / a_(k-1)` followed by the exit abscissa.
    pub ratios: Vec<f64>,
}

impl OrbitTrace {
    /// Number of horizontal moves.
    pub fn steps(&self) -> usize {
        self.points
            .iter()
            .filter(|pt| pt.kind == StepKind::HorizontalToPhi)
            .count()
    }

    pub fn branches(&self) -> Vec<Branch> {
        self.points
            .iter()
            .filter(|pt| pt.kind == StepKind::HorizontalToPhi)
            .map(|pt| pt.branch)
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchPolicy {
    /// Depth-first search over all branch choices, left first, returning the
    /// first orbit that reaches the exit point.
    #[default]
    Exhaustive,
    Fixed(Branch),
    /// The k-th step uses the k-th entry; the last entry repeats.
    Sequence(Vec<Branch>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitFailure {
    pub error: Error,
    pub partial: OrbitTrace,
}

impl std::fmt::Display for OrbitFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} after {} steps", self.error, self.partial.steps())
    }
}

impl std::error::Error for OrbitFailure {}

/// One move of the recurrence from `x`: the vertical vertex, then the
/// inverse of `Phi` on `b`.
fn step(params: &PhiPsiParams, x: f64, b: Branch) -> Result<(f64, f64)> {
    let y = psi(params, x)?;
    let nx = invert_phi(params, y, b)?;
    Ok((y, nx))
}

fn is_exit(params: &PhiPsiParams, x: f64, y: f64) -> bool {
    x.abs() <= EXIT_TOL && (y - params.exit_value()).abs() <= EXIT_TOL
}

struct Walk {
    points: Vec<OrbitPoint>,
    ratios: Vec<f64>,
    small: usize,
}

impl Walk {
    fn push(&mut self, params: &PhiPsiParams, y: f64, nx: f64, b: Branch) {
        let x = *self.ratios.last().expect("walk has a start");
        self.points.push(OrbitPoint {
            x,
            y,
            kind: StepKind::VerticalToPsi,
            branch: branch_of(params, x),
        });
        self.points.push(OrbitPoint {
            x: nx,
            y,
            kind: StepKind::HorizontalToPhi,
            branch: b,
        });
        self.small = if (nx - x).abs() < FIXED_TOL {
            self.small + 1
        } else {
            0
        };
        self.ratios.push(nx);
    }

    fn pop(&mut self) {
        self.points.truncate(self.points.len() - 2);
        self.ratios.pop();
        // `small` only matters on the way down; recomputing keeps it exact
        self.small = self
            .ratios
            .windows(2)
            .rev()
            .take_while(|w| (w[1] - w[0]).abs() < FIXED_TOL)
            .count();
    }

    /// Close an unfinished orbit with its last vertical move.
    fn finish(
        mut self,
        params: &PhiPsiParams,
        start: (f64, f64),
        status: OrbitStatus,
    ) -> OrbitTrace {
        if status != OrbitStatus::TerminatedAtExit {
            let x = *self.ratios.last().expect("walk has a start");
            if let Ok(y) = psi(params, x) {
                self.points.push(OrbitPoint {
                    x,
                    y,
                    kind: StepKind::VerticalToPsi,
                    branch: branch_of(params, x),
                });
            }
        }
        OrbitTrace {
            params: *params,
            start,
            points: self.points,
            status,
            ratios: self.ratios,
        }
    }
}

/// Iterate `x_{k+1} = Phi^{-1}(Psi(x_k))` from `x1`.
///
/// The orbit stops at the exit point `(0, p t^(p-1))`, after [`FIXED_TOL`]-sized
/// steps three times in a row, or when `budget` moves have been made.
pub fn iterate_orbit(
    params: &PhiPsiParams,
    x1: f64,
    policy: &BranchPolicy,
    budget: usize,
) -> std::result::Result<OrbitTrace, Box<OrbitFailure>> {
    let start_y = phi_raw(params.pp(), params.t, x1);
    let walk = Walk {
        points: Vec::new(),
        ratios: vec![x1],
        small: 0,
    };
    let fail = |error: Error, walk: Walk| {
        Box::new(OrbitFailure {
            error,
            partial: OrbitTrace {
                params: *params,
                start: (x1, start_y),
                points: walk.points,
                status: OrbitStatus::BudgetExhausted,
                ratios: walk.ratios,
            },
        })
    };
    if !(x1 > 0.0 && x1.is_finite()) {
        return Err(fail(
            Error::OutOfRange {
                value: x1,
                reason: "orbits start at a positive abscissa",
            },
            walk,
        ));
    }
    match policy {
        BranchPolicy::Exhaustive => search(params, x1, start_y, budget, walk, fail),
        BranchPolicy::Fixed(b) => follow(params, x1, start_y, budget, walk, |_| *b, fail),
        BranchPolicy::Sequence(seq) => {
            if seq.is_empty() {
                return Err(fail(Error::Domain("empty branch sequence".into()), walk));
            }
            follow(
                params,
                x1,
                start_y,
                budget,
                walk,
                |k| seq[k.min(seq.len() - 1)],
                fail,
            )
        }
    }
}

fn follow(
    params: &PhiPsiParams,
    x1: f64,
    start_y: f64,
    budget: usize,
    mut walk: Walk,
    choose: impl Fn(usize) -> Branch,
    fail: impl Fn(Error, Walk) -> Box<OrbitFailure>,
) -> std::result::Result<OrbitTrace, Box<OrbitFailure>> {
    for k in 0..budget {
        let x = *walk.ratios.last().expect("walk has a start");
        let b = choose(k);
        let (y, nx) = match step(params, x, b) {
            Ok(v) => v,
            Err(e) => return Err(fail(e, walk)),
        };
        walk.push(params, y, nx, b);
        if is_exit(params, nx, y) {
            return Ok(walk.finish(params, (x1, start_y), OrbitStatus::TerminatedAtExit));
        }
        if walk.small >= 3 {
            return Ok(walk.finish(params, (x1, start_y), OrbitStatus::ConvergedToFixedPoint));
        }
    }
    Ok(walk.finish(params, (x1, start_y), OrbitStatus::BudgetExhausted))
}

enum Found {
    Exit,
    Leaf(OrbitStatus),
}

fn search(
    params: &PhiPsiParams,
    x1: f64,
    start_y: f64,
    budget: usize,
    mut walk: Walk,
    fail: impl Fn(Error, Walk) -> Box<OrbitFailure>,
) -> std::result::Result<OrbitTrace, Box<OrbitFailure>> {
    if budget == 0 {
        return Ok(walk.finish(params, (x1, start_y), OrbitStatus::BudgetExhausted));
    }
    let pt = params.pp() * params.t;
    let mut nodes = 0usize;
    // the first leaf reached is reported when nothing terminates
    let mut first_leaf: Option<(Vec<OrbitPoint>, Vec<f64>, OrbitStatus)> = None;

    fn dfs(
        params: &PhiPsiParams,
        pt: f64,
        budget: usize,
        walk: &mut Walk,
        nodes: &mut usize,
        first_leaf: &mut Option<(Vec<OrbitPoint>, Vec<f64>, OrbitStatus)>,
    ) -> Option<Found> {
        let depth = walk.ratios.len() - 1;
        if depth >= budget {
            return Some(Found::Leaf(OrbitStatus::BudgetExhausted));
        }
        let x = *walk.ratios.last().expect("walk has a start");
        for b in Branch::ALL {
            if *nodes >= NODE_CAP {
                return None;
            }
            *nodes += 1;
            let Ok((y, nx)) = step(params, x, b) else {
                continue;
            };
            let exit = is_exit(params, nx, y);
            if !exit && !(nx > 0.0 && nx <= pt * (1.0 + 1e-12)) {
                continue;
            }
            walk.push(params, y, nx, b);
            let res = if exit {
                Some(Found::Exit)
            } else if walk.small >= 3 {
                Some(Found::Leaf(OrbitStatus::ConvergedToFixedPoint))
            } else {
                dfs(params, pt, budget, walk, nodes, first_leaf)
            };
            match res {
                Some(Found::Exit) => return Some(Found::Exit),
                Some(Found::Leaf(status)) => {
                    if first_leaf.is_none() {
                        *first_leaf = Some((walk.points.clone(), walk.ratios.clone(), status));
                    }
                }
                None => {}
            }
            walk.pop();
        }
        None
    }

    match dfs(params, pt, budget, &mut walk, &mut nodes, &mut first_leaf) {
        Some(Found::Exit) => Ok(walk.finish(params, (x1, start_y), OrbitStatus::TerminatedAtExit)),
        _ => match first_leaf {
            Some((points, ratios, status)) => {
                let leaf = Walk {
                    points,
                    ratios,
                    small: 0,
                };
                Ok(leaf.finish(params, (x1, start_y), status))
            }
            None => {
                let x = x1;
                let y = psi(params, x).unwrap_or(f64::NAN);
                Err(fail(Error::BranchMiss { y, branch: "any" }, walk))
            }
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub x: f64,
    pub phi: f64,
    pub psi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub kind: StepKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CobwebData {
    pub curves: Vec<CurveSample>,
    pub segments: Vec<Segment>,
}

pub const CURVE_SAMPLES: usize = 400;

/// Sampled curves on `(0, 1.1 max(pt, x))` and the cobweb segments of `trace`.
pub fn export_cobweb(trace: Option<&OrbitTrace>, params: &PhiPsiParams) -> CobwebData {
    let mut right = params.pp() * params.t;
    if let Some(tr) = trace {
        for &x in &tr.ratios {
            if x.is_finite() {
                right = right.max(x);
            }
        }
    }
    let right = 1.1 * right;
    let h = right / CURVE_SAMPLES as f64;
    let curves = (0..CURVE_SAMPLES)
        .filter_map(|i| {
            let x = (i as f64 + 0.5) * h;
            let phi = phi(params, x).ok()?;
            let psi = psi(params, x).ok()?;
            Some(CurveSample { x, phi, psi })
        })
        .collect();
    let mut segments = Vec::new();
    if let Some(tr) = trace {
        let (mut cx, mut cy) = tr.start;
        for pt in &tr.points {
            segments.push(Segment {
                x0: cx,
                y0: cy,
                x1: pt.x,
                y1: pt.y,
                kind: pt.kind,
            });
            cx = pt.x;
            cy = pt.y;
        }
    }
    CobwebData { curves, segments }
}

impl CobwebData {
    pub fn curves_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(vec![]);
        for c in &self.curves {
            w.serialize(c).map_err(|e| Error::Domain(e.to_string()))?;
        }
        if self.curves.is_empty() {
            w.write_record(["x", "phi", "psi"])
                .map_err(|e| Error::Domain(e.to_string()))?;
        }
        finish_csv(w)
    }

    pub fn segments_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(vec![]);
        w.write_record(["x0", "y0", "x1", "y1", "kind"])
            .map_err(|e| Error::Domain(e.to_string()))?;
        for s in &self.segments {
            let kind = match s.kind {
                StepKind::VerticalToPsi => "vertical-to-psi",
                StepKind::HorizontalToPhi => "horizontal-to-phi",
            };
            w.write_record([
                s.x0.to_string(),
                s.y0.to_string(),
                s.x1.to_string(),
                s.y1.to_string(),
                kind.to_string(),
            ])
            .map_err(|e| Error::Domain(e.to_string()))?;
        }
        finish_csv(w)
    }
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Domain(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Domain(e.to_string()))
}
