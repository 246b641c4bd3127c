use std::f64::consts::PI;

use super::adaptive::{integrate, Tolerance};
use super::bessel::bessel_k;
use crate::error::{Error, Result};

/// `∫_0^∞ (4πt)^{-N/2} exp(-(t + d²/(4t))) dt`.
///
/// Split at `t = 1`; the tail is mapped onto `(0, 1]` by `t = 1/τ`, so both
/// pieces are finite-interval integrals with integrands vanishing at 0.
pub fn heat_kernel_integral(n: u32, d: f64) -> Result<f64> {
    if n < 1 || !(d > 0.0) {
        return Err(Error::Domain(format!("heat kernel integral needs N >= 1, d > 0 (N={n}, d={d})")));
    }
    let half_n = f64::from(n) / 2.0;
    let norm = (4.0 * PI).powf(-half_n);
    let d2 = d * d / 4.0;
    let tol = Tolerance {
        abs: 1e-15,
        rel: 1e-14,
        max_intervals: 4000,
    };
    let head = |t: f64| {
        if t <= 0.0 {
            0.0
        } else {
            norm * t.powf(-half_n) * (-(t + d2 / t)).exp()
        }
    };
    let tail = |tau: f64| {
        if tau <= 0.0 {
            0.0
        } else {
            norm * tau.powf(half_n - 2.0) * (-(1.0 / tau + d2 * tau)).exp()
        }
    };
    let a = integrate(head, 0.0, 1.0, tol)?;
    let b = integrate(tail, 0.0, 1.0, tol)?;
    let value = a.value + b.value;
    let error = a.error + b.error;
    if error > 1e-12 {
        return Err(Error::NonConvergence { achieved: error, requested: 1e-12 });
    }
    Ok(value)
}

/// Closed form `2 (4π)^{-N/2} (d/2)^{1-N/2} K_{N/2-1}(d)` of the same integral.
pub fn heat_kernel_bessel(n: u32, d: f64) -> Result<f64> {
    let half_n = f64::from(n) / 2.0;
    let nu = (half_n - 1.0).abs();
    Ok(2.0 * (4.0 * PI).powf(-half_n) * (d / 2.0).powf(1.0 - half_n) * bessel_k(nu, d)?)
}
