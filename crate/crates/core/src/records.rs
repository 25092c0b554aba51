//! Flat JSON and CSV records for solver output.
//!
//! Floats are written in shortest round-trip form, so parsing a record and
//! writing it again reproduces the same bytes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extremal::LagrangeSolution;
use crate::opa::{Convergence, LinearOpaResult, OpaResult};
use crate::radius::{ExclusionResult, TauResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremalRecord {
    pub p: f64,
    pub d: usize,
    pub t: f64,
    pub inv_t: f64,
    pub coeffs: Vec<f64>,
    pub residual_max: f64,
}

impl From<&LagrangeSolution> for ExtremalRecord {
    fn from(s: &LagrangeSolution) -> Self {
        Self {
            p: s.p.p(),
            d: s.d,
            t: s.t,
            inv_t: s.inv_t(),
            coeffs: s.a.coeffs().to_vec(),
            residual_max: s.residual_max(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauRecord {
    pub p: f64,
    pub tau: f64,
    pub xi1: f64,
    pub xi2: f64,
}

impl From<&TauResult> for TauRecord {
    fn from(r: &TauResult) -> Self {
        Self {
            p: r.p.p(),
            tau: r.tau,
            xi1: r.xi1,
            xi2: r.xi2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExclusionRecord {
    pub p: f64,
    pub s: f64,
    pub r: f64,
}

impl From<&ExclusionResult> for ExclusionRecord {
    fn from(e: &ExclusionResult) -> Self {
        Self {
            p: e.p.p(),
            s: e.s_min,
            r: e.r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpaRecord {
    pub p: f64,
    pub degree: usize,
    pub f: Vec<f64>,
    pub q: Vec<f64>,
    pub residual_norm: f64,
    pub zeros: Vec<f64>,
    pub orth_residuals: Vec<f64>,
    /// Present for degree 1.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub linear: Option<LinearRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRecord {
    pub t_f: f64,
    pub zero: Option<f64>,
    pub c: f64,
    pub j1_norm: f64,
    pub residual: f64,
    pub converged: Convergence,
}

impl From<&LinearOpaResult> for LinearRecord {
    fn from(r: &LinearOpaResult) -> Self {
        Self {
            t_f: r.t_f,
            zero: r.zero,
            c: r.c,
            j1_norm: r.j1_norm,
            residual: r.residual,
            converged: r.converged,
        }
    }
}

impl OpaRecord {
    pub fn new(
        p: f64,
        f: &[f64],
        n: usize,
        r: &OpaResult,
        linear: Option<&LinearOpaResult>,
    ) -> Self {
        Self {
            p,
            degree: n,
            f: f.to_vec(),
            q: r.q.coeffs().to_vec(),
            residual_norm: r.residual_norm,
            zeros: r.zeros.clone(),
            orth_residuals: r.orth_residuals.clone(),
            linear: linear.map(LinearRecord::from),
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string(value).map_err(|e| Error::Domain(e.to_string()))
}

pub fn from_json<T: for<'de> Deserialize<'de>>(s: &str) -> Result<T> {
    serde_json::from_str(s).map_err(|e| Error::Domain(e.to_string()))
}

/// Shortest round-trip decimal, switching to exponent form for very small or
/// large magnitudes. Non-finite values print as `NaN`, `inf` and `-inf`.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        serde_json::to_string(&x).expect("finite floats serialize")
    } else {
        x.to_string()
    }
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Domain(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Domain(e.to_string()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Domain(e.to_string())
}

/// Header `p,s,r`.
pub fn exclusion_csv(rows: &[ExclusionRecord]) -> Result<String> {
    let mut w = writer();
    w.write_record(["p", "s", "r"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([r.p, r.s, r.r].map(fmt_float))
            .map_err(csv_err)?;
    }
    into_string(w)
}

/// Header `p,tau,xi1,xi2`.
pub fn tau_csv(rows: &[TauRecord]) -> Result<String> {
    let mut w = writer();
    w.write_record(["p", "tau", "xi1", "xi2"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([r.p, r.tau, r.xi1, r.xi2].map(fmt_float))
            .map_err(csv_err)?;
    }
    into_string(w)
}

/// Header `d,p,inv_t,t,residual_max,a0,...,aD` with `D` the largest degree;
/// shorter rows leave trailing cells empty.
pub fn extremal_csv(rows: &[ExtremalRecord]) -> Result<String> {
    let dmax = rows.iter().map(|r| r.coeffs.len()).max().unwrap_or(1);
    let mut w = writer();
    let mut header: Vec<String> = ["d", "p", "inv_t", "t", "residual_max"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..dmax).map(|k| format!("a{k}")));
    w.write_record(&header).map_err(csv_err)?;
    for r in rows {
        let mut rec = vec![
            r.d.to_string(),
            fmt_float(r.p),
            fmt_float(r.inv_t),
            fmt_float(r.t),
            fmt_float(r.residual_max),
        ];
        rec.extend((0..dmax).map(|k| r.coeffs.get(k).map_or(String::new(), |&v| fmt_float(v))));
        w.write_record(&rec).map_err(csv_err)?;
    }
    into_string(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn csv_layouts() {
        let rows = vec![
            ExtremalRecord {
                p: 4.0,
                d: 2,
                t: 0.9,
                inv_t: 1.0 / 0.9,
                coeffs: vec![1.0, 3.6, 1.9],
                residual_max: 1e-15,
            },
            ExtremalRecord {
                p: 4.0,
                d: 3,
                t: 1.05,
                inv_t: 1.0 / 1.05,
                coeffs: vec![1.0, 4.2, 3.0, 1.6],
                residual_max: 0.0,
            },
        ];
        let s = extremal_csv(&rows).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "d,p,inv_t,t,residual_max,a0,a1,a2,a3");
        assert!(lines[1].ends_with(",1.9,"));
        assert!(lines[1].contains(",1e-15,"));
        assert!(!s.contains('\r'));
        let t = tau_csv(&[TauRecord {
            p: 4.0,
            tau: 1.2,
            xi1: 0.8,
            xi2: 4.7,
        }])
        .unwrap();
        assert_eq!(t, "p,tau,xi1,xi2\n4.0,1.2,0.8,4.7\n");
        assert_eq!(fmt_float(f64::NAN), "NaN");
        assert_eq!(fmt_float(1.6342482922482304e-13), "1.6342482922482304e-13");
        let e = exclusion_csv(&[]).unwrap();
        assert_eq!(e, "p,s,r\n");
    }

    proptest! {
        #[test]
        fn json_round_trip_is_bit_exact(
            p in 1.01..30.0f64, t in 1e-3..3.0f64,
            c in prop::collection::vec(-1e6..1e6f64, 1..8),
            r in 0.0..1e-3f64,
        ) {
            let rec = ExtremalRecord { p, d: c.len(), t, inv_t: 1.0 / t, coeffs: c, residual_max: r };
            let s = to_json(&rec).unwrap();
            let back: ExtremalRecord = from_json(&s).unwrap();
            prop_assert_eq!(&back, &rec);
            for (a, b) in back.coeffs.iter().zip(&rec.coeffs) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
            prop_assert_eq!(to_json(&back).unwrap(), s);
        }

        #[test]
        fn csv_floats_round_trip(v in prop::collection::vec(-1e9..1e9f64, 1..5)) {
            let rows: Vec<TauRecord> = v.iter().map(|&x| TauRecord { p: x, tau: x / 3.0, xi1: x * 7.0, xi2: -x }).collect();
            let s = tau_csv(&rows).unwrap();
            let mut rd = csv::Reader::from_reader(s.as_bytes());
            for (rec, row) in rd.records().zip(&rows) {
                let rec = rec.unwrap();
                let tau: f64 = rec[1].parse().unwrap();
                prop_assert_eq!(tau.to_bits(), row.tau.to_bits());
            }
        }
    }
}
