//! Parameter arithmetic for the blow-up regime.
//!
//! Everything here is a pure function of the model parameters: the
//! admissible `(m, k)` region, the envelope exponent `p(eps)`, the
//! window of moment exponents `gamma`, the derived exponents `alpha` and
//! `theta1`, the lower bound `eta` for the signal, and the blow-up time
//! implied by a quadratic differential inequality.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma as gamma_fn;

use crate::error::{Error, Result};
use crate::quadrature::heat_kernel_integral;

/// Physical and analytic parameters of the radial system on `B_R(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Space dimension `N`.
    pub dim: u32,
    /// Ball radius `R`.
    pub radius: f64,
    /// Diffusion exponent `m` in `Δ(u+1)^m`.
    pub m: f64,
    /// Sensitivity amplitude `χ₀`.
    pub chi0: f64,
    /// Sensitivity shift `a` in `χ₀ (a+v)^{-k}`.
    pub a: f64,
    /// Sensitivity decay exponent `k`.
    pub k: f64,
    /// Total mass `M₀ = ∫u₀`.
    pub total_mass: f64,
    /// Inner mass threshold `M₁`.
    pub inner_mass: f64,
    /// Amplitude `L` of the initial decay envelope `L r^{-p}`.
    pub envelope: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 3 {
            return Err(Error::Scope(format!(
                "dimension N={} is below 3; the blow-up theory requires N >= 3",
                self.dim
            )));
        }
        let checks = [
            (self.radius > 0.0, "radius R must be positive"),
            (self.m >= 1.0, "diffusion exponent m must be >= 1"),
            (self.chi0 > 0.0, "chi0 must be positive"),
            (self.a >= 0.0, "sensitivity shift a must be >= 0"),
            (self.k > 0.0, "sensitivity exponent k must be positive"),
            (self.total_mass > 0.0, "total mass M0 must be positive"),
            (
                self.inner_mass > 0.0 && self.inner_mass < self.total_mass,
                "inner mass M1 must lie in (0, M0)",
            ),
            (self.envelope > 0.0, "envelope amplitude L must be positive"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::InvalidParameter(msg.to_string()));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> f64 {
        f64::from(self.dim)
    }

    /// `R^N`, the right end of the volume coordinate.
    pub fn volume_extent(&self) -> f64 {
        self.radius.powi(self.dim as i32)
    }

    /// `w(R^N) = M₀ / ω_{N-1}`.
    pub fn w_total(&self) -> f64 {
        self.total_mass / sphere_measure(self.dim)
    }
}

/// `(N-1)`-dimensional measure of the unit sphere, `2 π^{N/2} / Γ(N/2)`.
pub fn sphere_measure(dim: u32) -> f64 {
    let half = f64::from(dim) / 2.0;
    2.0 * std::f64::consts::PI.powf(half) / gamma_fn(half)
}

/// Supremum of admissible `eps0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Eps0Max {
    /// `m = 1`: any positive `eps0` works.
    Unbounded,
    Finite(f64),
}

impl Eps0Max {
    pub fn admits(&self, eps0: f64) -> bool {
        match *self {
            Eps0Max::Unbounded => eps0 > 0.0,
            Eps0Max::Finite(sup) => eps0 > 0.0 && eps0 < sup * (1.0 - EDGE),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub admissible: bool,
    /// `2 - 2/N`.
    pub m_upper: f64,
    /// `min{2/(N-2), (N-2-N(m-1)) / (((m-1)N+1)(N-2))}`; nonpositive when `m >= m_upper`.
    pub k_upper: f64,
    pub eps0_max: Option<Eps0Max>,
    /// Interval for `gamma` at the default `eps0`, when one exists.
    pub gamma_interval: Option<(f64, f64)>,
    pub messages: Vec<String>,
}

/// Derived analytic quantities that govern one moment functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentConfig {
    pub eps0: f64,
    pub p: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub theta1: f64,
    pub s0: f64,
}

impl MomentConfig {
    /// Resolve a full configuration for admissible parameters. `gamma = None`
    /// picks the midpoint of the admissible interval.
    pub fn resolve(params: &ModelParams, gamma: Option<f64>, s0: f64) -> Result<Self> {
        params.validate()?;
        let (n, m, k) = (params.dim, params.m, params.k);
        let eps0 = default_eps0(n, m, k)?;
        let (lo, hi) = gamma_interval(n, m, k, eps0)?;
        let gamma = gamma.unwrap_or(0.5 * (lo + hi));
        if !(gamma > lo && gamma < hi) {
            return Err(Error::InvalidParameter(format!(
                "gamma={gamma} outside the admissible interval ({lo}, {hi})"
            )));
        }
        let extent = params.volume_extent();
        if !(s0 > 0.0 && s0 < extent) {
            return Err(Error::InvalidParameter(format!(
                "s0={s0} must lie in (0, R^N={extent})"
            )));
        }
        Ok(Self {
            eps0,
            p: p_of_eps(n, m, eps0),
            gamma,
            alpha: alpha_of_gamma(gamma, n, k)?,
            theta1: theta1_of(n, m, k, eps0),
            s0,
        })
    }
}

// Relative slack for the strict inequalities of the admissible region, so
// boundary cases such as m = 4/3 in N = 3 are excluded despite rounding.
const EDGE: f64 = 1e-12;

fn require_dim(n: u32) -> Result<f64> {
    if n < 3 {
        return Err(Error::Scope(format!(
            "dimension N={n} is below 3; the blow-up theory requires N >= 3"
        )));
    }
    Ok(f64::from(n))
}

/// The second bracket term of the `k` threshold. Nonpositive iff `m >= 2 - 2/N`.
fn k_bracket(n: f64, m: f64) -> f64 {
    (n - 2.0 - n * (m - 1.0)) / (((m - 1.0) * n + 1.0) * (n - 2.0))
}

pub fn check_conditions(params: &ModelParams) -> Result<AdmissibilityReport> {
    let n = require_dim(params.dim)?;
    params.validate()?;
    let (m, k) = (params.m, params.k);
    let m_upper = 2.0 - 2.0 / n;
    let k_upper = (2.0 / (n - 2.0)).min(k_bracket(n, m));
    let mut messages = Vec::new();
    if m >= m_upper * (1.0 - EDGE) {
        messages.push(format!("m={m} violates 1 <= m < 2-2/N = {m_upper}"));
    }
    if !(k > 0.0 && k < k_upper * (1.0 - EDGE)) {
        messages.push(format!("k={k} violates 0 < k < {k_upper}"));
    }
    let admissible = messages.is_empty();
    let (eps0_max_v, gamma_int) = if admissible {
        let sup = eps0_max(params.dim, m, k)?;
        let eps0 = default_eps0(params.dim, m, k)?;
        (Some(sup), gamma_interval(params.dim, m, k, eps0).ok())
    } else {
        (None, None)
    };
    Ok(AdmissibilityReport {
        admissible,
        m_upper,
        k_upper,
        eps0_max: eps0_max_v,
        gamma_interval: gamma_int,
        messages,
    })
}

pub fn k_threshold(n: u32, m: f64) -> Result<f64> {
    let nf = require_dim(n)?;
    if m < 1.0 {
        return Err(Error::InvalidParameter(format!("m={m} must be >= 1")));
    }
    let bracket = k_bracket(nf, m);
    if m >= (2.0 - 2.0 / nf) * (1.0 - EDGE) || bracket <= 0.0 {
        return Err(Error::Inadmissible(format!(
            "m={m} >= 2-2/N leaves no admissible k"
        )));
    }
    Ok((2.0 / (nf - 2.0)).min(bracket))
}

/// `p(eps) = N(N-1)/((m-1)N+1) + eps`.
pub fn p_of_eps(n: u32, m: f64, eps: f64) -> f64 {
    let nf = f64::from(n);
    nf * (nf - 1.0) / ((m - 1.0) * nf + 1.0) + eps
}

pub fn eps0_max(n: u32, m: f64, k: f64) -> Result<Eps0Max> {
    let nf = require_dim(n)?;
    let upper = k_threshold(n, m)?;
    if !(k > 0.0 && k < upper * (1.0 - EDGE)) {
        return Err(Error::Inadmissible(format!(
            "k={k} outside (0, {upper}); no valid eps0"
        )));
    }
    if m == 1.0 {
        return Ok(Eps0Max::Unbounded);
    }
    let sup = (nf - 2.0) / (m - 1.0) * (k_bracket(nf, m) - k);
    if sup <= 0.0 {
        return Err(Error::EmptyInterval(format!("eps0 range is empty (sup={sup})")));
    }
    Ok(Eps0Max::Finite(sup))
}

/// `1` for `m = 1`, else `min(1, eps0_max / 2)`.
pub fn default_eps0(n: u32, m: f64, k: f64) -> Result<f64> {
    Ok(match eps0_max(n, m, k)? {
        Eps0Max::Unbounded => 1.0,
        Eps0Max::Finite(sup) => (0.5 * sup).min(1.0),
    })
}

pub fn gamma_interval(n: u32, m: f64, k: f64, eps0: f64) -> Result<(f64, f64)> {
    let nf = require_dim(n)?;
    let sup = eps0_max(n, m, k)?;
    if !sup.admits(eps0) {
        return Err(Error::EmptyInterval(format!(
            "eps0={eps0} not below eps0_max={sup:?}"
        )));
    }
    let p = p_of_eps(n, m, eps0);
    let lo = 1.0 - 2.0 / nf - p / nf * (m - 1.0);
    let hi = (2.0 - 4.0 / nf - 2.0 * p / nf * (m - 1.0) - (1.0 - 2.0 / nf) * k).min(1.0);
    if !(lo < hi) {
        return Err(Error::EmptyInterval(format!("gamma interval ({lo}, {hi})")));
    }
    Ok((lo, hi))
}

/// `alpha = gamma - (1 - 2/N) k`, required to lie in `(0, 1)`.
pub fn alpha_of_gamma(gamma: f64, n: u32, k: f64) -> Result<f64> {
    let nf = f64::from(n);
    let alpha = gamma - (1.0 - 2.0 / nf) * k;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha={alpha} outside (0, 1)")));
    }
    Ok(alpha)
}

pub fn theta1_of(n: u32, m: f64, k: f64, eps0: f64) -> f64 {
    let nf = f64::from(n);
    let p = p_of_eps(n, m, eps0);
    let tk = (1.0 - 2.0 / nf) * k;
    let a = 4.0 / nf + 2.0 * p / nf * (m - 1.0) + tk;
    let b = 2.0 - 4.0 / nf + tk;
    a.max(b).max(2.0 / nf)
}

/// `eta = M0 ∫_0^∞ (4πt)^{-N/2} exp(-(t + diam²/(4t))) dt`.
pub fn eta_lower_bound(total_mass: f64, n: u32, diam: f64) -> Result<f64> {
    if !(total_mass > 0.0) || !(diam > 0.0) {
        return Err(Error::InvalidParameter(
            "eta needs positive mass and diameter".into(),
        ));
    }
    Ok(total_mass * heat_kernel_integral(n, diam)?)
}

/// Upper bound on the blow-up time of `y' >= c1 y² - c2`, `y(0) = phi0`.
///
/// `None` when `phi0 <= sqrt(c2/c1)`: the comparison yields no finite bound.
pub fn blowup_time_bound(phi0: f64, c1: f64, c2: f64) -> Option<f64> {
    if !(c1 > 0.0) || c2 < 0.0 {
        return None;
    }
    if c2 == 0.0 {
        return (phi0 > 0.0).then(|| 1.0 / (c1 * phi0));
    }
    let c = (c2 / c1).sqrt();
    if phi0 <= c {
        return None;
    }
    Some(((phi0 + c) / (phi0 - c)).ln() / (2.0 * c1 * c))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    fn params(n: u32, m: f64, k: f64) -> ModelParams {
        ModelParams {
            dim: n,
            radius: 1.0,
            m,
            chi0: 1.0,
            a: 0.0,
            k,
            total_mass: 1.0,
            inner_mass: 0.5,
            envelope: 1.0,
        }
    }

    #[test]
    fn conditions_examples() {
        let r = check_conditions(&params(3, 1.0, 0.9)).unwrap();
        assert!(r.admissible);
        assert_eq!(r.k_upper, 1.0);

        let r = check_conditions(&params(3, 4.0 / 3.0, 0.1)).unwrap();
        assert!(!r.admissible);

        let r = check_conditions(&params(3, 1.2, 0.3)).unwrap();
        assert!(!r.admissible);
        assert!(close(r.k_upper, 0.25, 1e-14));

        assert!(matches!(
            check_conditions(&params(2, 1.0, 0.5)),
            Err(Error::Scope(_))
        ));
    }

    #[test]
    fn thresholds() {
        assert_eq!(k_threshold(3, 1.0).unwrap(), 1.0);
        assert_eq!(k_threshold(4, 1.0).unwrap(), 1.0);
        assert!(close(k_threshold(5, 1.0).unwrap(), 2.0 / 3.0, 1e-15));
        assert!(k_threshold(3, 4.0 / 3.0).is_err());
        assert!(k_threshold(3, 1.5).is_err());
    }

    #[test]
    fn p_examples() {
        assert_eq!(p_of_eps(3, 1.0, 0.0), 6.0);
        assert_eq!(p_of_eps(3, 1.0, 0.5), 6.5);
        assert!(close(p_of_eps(3, 1.5, 0.0), 2.4, 1e-15));
    }

    #[test]
    fn eps0_examples() {
        assert_eq!(eps0_max(3, 1.0, 0.5).unwrap(), Eps0Max::Unbounded);
        match eps0_max(3, 1.2, 0.2).unwrap() {
            Eps0Max::Finite(v) => assert!(close(v, 0.25, 1e-12)),
            other => panic!("{other:?}"),
        }
        assert!(eps0_max(3, 1.2, 0.25).is_err());
    }

    #[test]
    fn gamma_examples() {
        let (lo, hi) = gamma_interval(3, 1.0, 0.5, 0.7).unwrap();
        assert!(close(lo, 1.0 / 3.0, 1e-15) && close(hi, 0.5, 1e-15));
        let (lo, hi) = gamma_interval(3, 1.0, 1e-12, 3.0).unwrap();
        assert!(close(lo, 1.0 / 3.0, 1e-10) && close(hi, 2.0 / 3.0, 1e-10));
        assert!(gamma_interval(3, 1.2, 0.2, 0.25).is_err());
    }

    #[test]
    fn alpha_and_theta() {
        assert!(close(alpha_of_gamma(0.5, 3, 0.5).unwrap(), 1.0 / 3.0, 1e-15));
        assert!(close(alpha_of_gamma(0.4, 3, 0.5).unwrap(), 0.4 - 1.0 / 6.0, 1e-15));
        assert!(close(theta1_of(3, 1.0, 0.5, 0.3), 1.5, 1e-15));
        assert!(close(theta1_of(3, 1.0, 1e-12, 0.3), 4.0 / 3.0, 1e-10));
        assert!(alpha_of_gamma(0.1, 3, 0.5).is_err());
    }

    #[test]
    fn eta_closed_form_n3() {
        let eta = eta_lower_bound(1.0, 3, 2.0).unwrap();
        let exact = (-2.0f64).exp() / (8.0 * std::f64::consts::PI);
        assert!((eta - exact).abs() / exact < 1e-10);
        let scaled = eta_lower_bound(3.5, 3, 2.0).unwrap();
        assert!((scaled - 3.5 * eta).abs() / scaled < 1e-14);
    }

    #[test]
    fn time_bound_examples() {
        assert_eq!(blowup_time_bound(1.0, 1.0, 0.0), Some(1.0));
        let t = blowup_time_bound(2.0, 1.0, 1.0).unwrap();
        assert!(close(t, 0.5 * 3f64.ln(), 1e-15));
        assert_eq!(blowup_time_bound(0.5, 1.0, 1.0), None);
        assert_eq!(blowup_time_bound(1.0, 1.0, 1.0), None);
    }

    #[test]
    fn sphere_measure_values() {
        assert!(close(sphere_measure(3), 4.0 * std::f64::consts::PI, 1e-14));
        assert!(close(sphere_measure(4), 2.0 * std::f64::consts::PI.powi(2), 1e-14));
    }

    #[test]
    fn moment_config_defaults_to_midpoint() {
        let mut p = params(3, 1.0, 0.5);
        p.total_mass = 2.0;
        let mc = MomentConfig::resolve(&p, None, 0.5).unwrap();
        assert!(close(mc.gamma, (1.0 / 3.0 + 0.5) / 2.0, 1e-15));
        assert_eq!(mc.eps0, 1.0);
        assert_eq!(mc.p, 7.0);
        assert!(MomentConfig::resolve(&p, Some(0.6), 0.5).is_err());
        assert!(MomentConfig::resolve(&p, None, 1.0).is_err());
    }
}
