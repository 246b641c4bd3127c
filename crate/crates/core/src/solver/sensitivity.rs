use crate::params::ModelParams;

/// Chemotactic sensitivity `χ(v)`.
pub trait Sensitivity: Send + Sync {
    fn chi(&self, v: f64) -> f64;
}

/// `χ(v) = χ₀ (a + v)^{-k}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub chi0: f64,
    pub a: f64,
    pub k: f64,
}

impl PowerLaw {
    pub fn from_params(params: &ModelParams) -> Self {
        Self { chi0: params.chi0, a: params.a, k: params.k }
    }
}

impl Sensitivity for PowerLaw {
    fn chi(&self, v: f64) -> f64 {
        self.chi0 * (self.a + v).powf(-self.k)
    }
}

/// `χ ≡ 0`: the system decouples into pure nonlinear diffusion.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NoTaxis;

impl Sensitivity for NoTaxis {
    fn chi(&self, _v: f64) -> f64 {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_values() {
        let chi = PowerLaw { chi0: 10.0, a: 0.0, k: 0.5 };
        assert!((chi.chi(4.0) - 5.0).abs() < 1e-15);
        let shifted = PowerLaw { chi0: 2.0, a: 1.0, k: 1.0 };
        assert!((shifted.chi(3.0) - 0.5).abs() < 1e-15);
        assert_eq!(NoTaxis.chi(1.0), 0.0);
    }
}
