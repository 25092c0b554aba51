//! Shared fixtures for the solver benchmarks.

use opa_lab::{PNorm, RealPoly};

pub fn pnorm(p: f64) -> PNorm {
    PNorm::new(p).expect("valid exponent")
}

/// The `d = 2, p = 4` extremal polynomial, rounded.
pub fn table_row() -> RealPoly {
    RealPoly::from_slice(&[1.0, 3.64836, 1.92310]).expect("finite")
}

/// A mixed-sign polynomial of degree `d` with `f(0) = 1`.
pub fn mixed(d: usize) -> RealPoly {
    let mut c = vec![1.0];
    c.extend((1..=d).map(|k| {
        if k % 2 == 0 {
            0.5 / k as f64
        } else {
            -1.5 / k as f64
        }
    }));
    RealPoly::new(c).expect("finite")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_well_formed() {
        assert_eq!(mixed(5).degree(), 5);
        assert_eq!(mixed(5).coeff(0), 1.0);
        assert_eq!(table_row().degree(), 2);
        assert_eq!(pnorm(4.0).p(), 4.0);
    }
}
