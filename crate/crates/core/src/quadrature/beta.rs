use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Euler's beta function `B(a, b)` for positive arguments.
pub fn beta(a: f64, b: f64) -> f64 {
    ln_beta(a, b).exp()
}

/// `∫_0^{s0} s^a (s0 - s)^b ds = B(a+1, b+1) s0^{a+b+1}`.
pub fn beta_integral(a: f64, b: f64, s0: f64) -> Result<f64> {
    if !(a > -1.0) || !(b > -1.0) {
        return Err(Error::Domain(format!(
            "beta integral diverges for a={a}, b={b} (need both > -1)"
        )));
    }
    if s0 < 0.0 {
        return Err(Error::Domain(format!("s0={s0} must be >= 0")));
    }
    Ok(beta(a + 1.0, b + 1.0) * s0.powf(a + b + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn examples() {
        assert!((beta_integral(0.0, 0.0, 2.5).unwrap() - 2.5).abs() < 1e-14);
        assert!((beta_integral(-0.5, -0.5, 3.0).unwrap() - PI).abs() < 1e-13);
        assert!((beta_integral(1.0, 1.0, 1.0).unwrap() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        assert!(beta_integral(-1.0, 0.0, 1.0).is_err());
        assert!(beta_integral(0.0, -1.5, 1.0).is_err());
    }

    #[test]
    fn symmetric() {
        for &(a, b) in &[(0.3, 1.7), (-0.4, 2.0), (5.5, -0.2)] {
            let x = beta_integral(a, b, 1.3).unwrap();
            let y = beta_integral(b, a, 1.3).unwrap();
            assert!((x - y).abs() <= 1e-13 * x.abs());
        }
    }
}
