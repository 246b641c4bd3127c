//! The double integral `∫_0^s ∫_σ^{s0} ξ^{-a} (s0-ξ)^{-b} dξ dσ` and its
//! scaling against `s0^{-b} s^{2-a}`.

use super::adaptive::{integrate, Tolerance};
use crate::error::{Error, Result};

fn check(a: f64, b: f64, s0: f64) -> Result<()> {
    if !(a > 1.0 && a < 2.0) {
        return Err(Error::Domain(format!("exponent a={a} outside (1, 2)")));
    }
    if !(0.0..1.0).contains(&b) {
        return Err(Error::Domain(format!("exponent b={b} outside [0, 1)")));
    }
    if !(s0 > 0.0) {
        return Err(Error::Domain(format!("s0={s0} must be positive")));
    }
    Ok(())
}

/// Left-hand side at one `s ∈ (0, s0)`.
///
/// Swapping the order of integration gives
/// `∫_0^s ξ^{1-a} (s0-ξ)^{-b} dξ + s ∫_s^{s0} ξ^{-a} (s0-ξ)^{-b} dξ`;
/// each endpoint singularity is removed by a power substitution.
pub fn lemma38_lhs(a: f64, b: f64, s0: f64, s: f64) -> Result<f64> {
    check(a, b, s0)?;
    if !(s > 0.0 && s < s0) {
        return Err(Error::Domain(format!("s={s} outside (0, {s0})")));
    }
    let tol = Tolerance {
        abs: 0.0,
        rel: 1e-12,
        max_intervals: 4000,
    };
    let q1 = 1.0 / (2.0 - a);
    let inner = integrate(|t: f64| (s0 - s * t.powf(q1)).powf(-b), 0.0, 1.0, tol)?;
    let first = s.powf(2.0 - a) * q1 * inner.value;

    // ∫_s^{s0}: logarithmic variable on [s, s0/2], power substitution near s0.
    let split = s.max(0.5 * s0);
    let near = s0 - split;
    let q2 = 1.0 / (1.0 - b);
    let upper = integrate(|t: f64| (s0 - near * t.powf(q2)).powf(-a), 0.0, 1.0, tol)?;
    let mut tail = near.powf(1.0 - b) * q2 * upper.value;
    if split > s {
        let lower = integrate(
            |y: f64| {
                let xi = y.exp();
                xi.powf(1.0 - a) * (s0 - xi).powf(-b)
            },
            s.ln(),
            split.ln(),
            tol,
        )?;
        tail += lower.value;
    }
    let second = s * tail;
    Ok(first + second)
}

/// Largest sampled ratio `LHS(s) / (s0^{-b} s^{2-a})` over `samples`
/// geometrically spaced points in `[1e-8 s0, s0)`.
pub fn lemma38_ratio(a: f64, b: f64, s0: f64, samples: usize) -> Result<f64> {
    check(a, b, s0)?;
    if samples == 0 {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let lo = 1e-8f64.ln();
    let mut worst = 0.0f64;
    for i in 0..samples {
        let s = s0 * (lo * (1.0 - i as f64 / samples as f64)).exp();
        let ratio = lemma38_lhs(a, b, s0, s)? / (s0.powf(-b) * s.powf(2.0 - a));
        worst = worst.max(ratio);
    }
    Ok(worst)
}
