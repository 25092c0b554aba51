//! Reference table values used by the golden tests and `verify`.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExclusionRow {
    /// The row label as printed.
    pub label: &'static str,
    pub p: f64,
    pub s: f64,
    pub r: f64,
}

/// The rows printed as 1.66 and 1.83 are 5/3 and 11/6; see the README.
pub const EXCLUSION: [ExclusionRow; 13] = [
    ExclusionRow {
        label: "1.50",
        p: 1.5,
        s: 1.21141,
        r: 0.825482,
    },
    ExclusionRow {
        label: "1.66",
        p: 5.0 / 3.0,
        s: 1.11560,
        r: 0.896378,
    },
    ExclusionRow {
        label: "1.75",
        p: 1.75,
        s: 1.07929,
        r: 0.926535,
    },
    ExclusionRow {
        label: "1.80",
        p: 1.8,
        s: 1.06028,
        r: 0.943147,
    },
    ExclusionRow {
        label: "1.83",
        p: 11.0 / 6.0,
        s: 1.04861,
        r: 0.953648,
    },
    ExclusionRow {
        label: "2.1",
        p: 2.1,
        s: 1.06436,
        r: 0.939533,
    },
    ExclusionRow {
        label: "4",
        p: 4.0,
        s: 1.57890,
        r: 0.633368,
    },
    ExclusionRow {
        label: "6",
        p: 6.0,
        s: 1.72617,
        r: 0.579318,
    },
    ExclusionRow {
        label: "8",
        p: 8.0,
        s: 1.79348,
        r: 0.557577,
    },
    ExclusionRow {
        label: "10",
        p: 10.0,
        s: 1.83319,
        r: 0.545498,
    },
    ExclusionRow {
        label: "12",
        p: 12.0,
        s: 1.85983,
        r: 0.537682,
    },
    ExclusionRow {
        label: "14",
        p: 14.0,
        s: 1.87908,
        r: 0.532175,
    },
    ExclusionRow {
        label: "16",
        p: 16.0,
        s: 1.89367,
        r: 0.528076,
    },
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremalRow {
    pub d: usize,
    pub p: f64,
    pub inv_t: f64,
    /// `a_0 .. a_d`.
    pub coeffs: &'static [f64],
}

pub const EXTREMAL: [ExtremalRow; 12] = [
    ExtremalRow {
        d: 2,
        p: 4.0,
        inv_t: 1.09638,
        coeffs: &[1.0, 3.64836, 1.92310],
    },
    ExtremalRow {
        d: 2,
        p: 6.0,
        inv_t: 0.95629,
        coeffs: &[1.0, 6.27424, 3.36907],
    },
    ExtremalRow {
        d: 2,
        p: 8.0,
        inv_t: 0.88193,
        coeffs: &[1.0, 9.07101, 4.96676],
    },
    ExtremalRow {
        d: 2,
        p: 10.0,
        inv_t: 0.83568,
        coeffs: &[1.0, 11.9663, 6.65305],
    },
    ExtremalRow {
        d: 3,
        p: 4.0,
        inv_t: 0.94921,
        coeffs: &[1.0, 4.21406, 3.01393, 1.65036],
    },
    ExtremalRow {
        d: 3,
        p: 6.0,
        inv_t: 0.82606,
        coeffs: &[1.0, 7.26338, 5.34352, 3.00715],
    },
    ExtremalRow {
        d: 3,
        p: 8.0,
        inv_t: 0.76236,
        coeffs: &[1.0, 10.4938, 7.89188, 4.54074],
    },
    ExtremalRow {
        d: 3,
        p: 10.0,
        inv_t: 0.72322,
        coeffs: &[1.0, 13.8270, 10.57437, 6.18409],
    },
    ExtremalRow {
        d: 4,
        p: 4.0,
        inv_t: 0.89213,
        coeffs: &[1.0, 4.48365, 3.59236, 2.59647, 1.44035],
    },
    ExtremalRow {
        d: 4,
        p: 6.0,
        inv_t: 0.77760,
        coeffs: &[1.0, 7.71608, 6.35232, 4.74328, 2.71501],
    },
    ExtremalRow {
        d: 4,
        p: 8.0,
        inv_t: 0.71878,
        coeffs: &[1.0, 11.13000, 9.37221, 7.14758, 4.18719],
    },
    ExtremalRow {
        d: 4,
        p: 10.0,
        inv_t: 0.68277,
        coeffs: &[1.0, 14.6463, 12.51665, 9.69994, 5.77764],
    },
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauRow {
    pub p: f64,
    pub tau: f64,
}

pub const TAU: [TauRow; 9] = [
    TauRow {
        p: 4.0,
        tau: 1.21157,
    },
    TauRow {
        p: 6.0,
        tau: 1.37386,
    },
    TauRow {
        p: 8.0,
        tau: 1.47757,
    },
    TauRow {
        p: 10.0,
        tau: 1.54974,
    },
    TauRow {
        p: 12.0,
        tau: 1.60310,
    },
    TauRow {
        p: 14.0,
        tau: 1.64431,
    },
    TauRow {
        p: 16.0,
        tau: 1.67719,
    },
    TauRow {
        p: 18.0,
        tau: 1.70408,
    },
    TauRow {
        p: 20.0,
        tau: 1.72654,
    },
];
