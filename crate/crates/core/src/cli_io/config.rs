use std::fmt;
use std::path::Path;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::diagnostics::MomentSpec;
use crate::error::{Error, Result};
use crate::params::{default_eps0, p_of_eps, MomentConfig, ModelParams};
use crate::solver::{RadialGrid, StepControl};

/// `gamma` of a moment window: a number, or `"auto"` for the midpoint of the
/// admissible interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaSpec {
    Auto,
    Value(f64),
}

impl Serialize for GammaSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            GammaSpec::Auto => s.serialize_str("auto"),
            GammaSpec::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for GammaSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = GammaSpec;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or \"auto\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<GammaSpec, E> {
                Ok(GammaSpec::Value(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<GammaSpec, E> {
                Ok(GammaSpec::Value(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<GammaSpec, E> {
                Ok(GammaSpec::Value(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<GammaSpec, E> {
                if v == "auto" {
                    Ok(GammaSpec::Auto)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub dim: u32,
    pub radius: f64,
    pub m: f64,
    pub chi0: f64,
    #[serde(default)]
    pub a: f64,
    pub k: f64,
    pub total_mass: f64,
    pub inner_mass: f64,
    pub envelope: f64,
    /// `r₁`, the radius of the ball that must hold `M₁` initially.
    pub inner_radius: f64,
    /// Decay exponent `p` of the initial envelope; defaults to `p(ε₀)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope_exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps0: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub cells: usize,
    #[serde(default = "default_grading")]
    pub grading: f64,
}

fn default_grading() -> f64 {
    2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSection {
    #[serde(default = "d_dt_init")]
    pub dt_init: f64,
    #[serde(default = "d_dt_min")]
    pub dt_min: f64,
    #[serde(default = "d_dt_max")]
    pub dt_max: f64,
    #[serde(default = "d_cfl")]
    pub cfl_safety: f64,
    #[serde(default = "d_growth")]
    pub c_growth: f64,
    #[serde(default = "d_dt_growth")]
    pub dt_growth: f64,
    #[serde(default = "d_u_blow")]
    pub u_blow: f64,
    #[serde(default = "d_max_steps")]
    pub max_steps: usize,
    pub t_end: f64,
    #[serde(default = "d_bounded")]
    pub bounded_factor: f64,
}

fn d_dt_init() -> f64 {
    1e-4
}
fn d_dt_min() -> f64 {
    1e-10
}
fn d_dt_max() -> f64 {
    1e-3
}
fn d_cfl() -> f64 {
    0.5
}
fn d_growth() -> f64 {
    0.1
}
fn d_dt_growth() -> f64 {
    2.0
}
fn d_u_blow() -> f64 {
    1e6
}
fn d_max_steps() -> usize {
    1_000_000
}
fn d_bounded() -> f64 {
    10.0
}

impl ControlSection {
    pub fn to_control(&self) -> StepControl {
        StepControl {
            dt_init: self.dt_init,
            dt_min: self.dt_min,
            dt_max: self.dt_max,
            cfl_safety: self.cfl_safety,
            c_growth: self.c_growth,
            dt_growth: self.dt_growth,
            u_blow: self.u_blow,
            max_steps: self.max_steps,
            t_end: self.t_end,
            bounded_factor: self.bounded_factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentEntry {
    pub gamma: GammaSpec,
    /// `s₀` as a fraction of `R^N`.
    pub s0_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default = "d_dir")]
    pub dir: String,
    #[serde(default)]
    pub seed: u64,
}

fn d_dir() -> String {
    "out".into()
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { snapshot_times: Vec::new(), dir: d_dir(), seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseSection {
    /// Fraction `η ∈ (0,1)` placing the inner-mass ball at volume `(1−η)s₀`.
    #[serde(default = "d_eta_frac")]
    pub eta_frac: f64,
    #[serde(default = "d_samples")]
    pub lem35_samples: usize,
    /// The identity check uses the records with `u_max ≤ factor · u_max(0)`.
    #[serde(default = "d_window")]
    pub identity_window_factor: f64,
    #[serde(default = "d_identity_tol")]
    pub identity_tolerance: f64,
}

fn d_eta_frac() -> f64 {
    0.5
}
fn d_samples() -> usize {
    64
}
fn d_window() -> f64 {
    10.0
}
fn d_identity_tol() -> f64 {
    0.05
}

impl Default for DiagnoseSection {
    fn default() -> Self {
        Self {
            eta_frac: d_eta_frac(),
            lem35_samples: d_samples(),
            identity_window_factor: d_window(),
            identity_tolerance: d_identity_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub m_range: [f64; 2],
    pub k_range: [f64; 2],
    pub m_points: usize,
    pub k_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefineSection {
    /// Cell counts, each twice the previous.
    pub levels: Vec<usize>,
    /// End of the smooth window used for the time-dependent studies.
    pub t_end: f64,
    /// Time step at the coarsest level; halved with every spatial level.
    pub dt: f64,
}

/// Full run description, read from and written to TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub grid: GridSection,
    pub control: ControlSection,
    #[serde(default)]
    pub moments: Vec<MomentEntry>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub diagnose: DiagnoseSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refine: Option<RefineSection>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn params(&self) -> ModelParams {
        let m = &self.model;
        ModelParams {
            dim: m.dim,
            radius: m.radius,
            m: m.m,
            chi0: m.chi0,
            a: m.a,
            k: m.k,
            total_mass: m.total_mass,
            inner_mass: m.inner_mass,
            envelope: m.envelope,
        }
    }

    pub fn build_grid(&self) -> Result<RadialGrid> {
        RadialGrid::new(self.model.dim, self.model.radius, self.grid.cells, self.grid.grading)
    }

    /// `ε₀`: configured, or the default for admissible `(m, k)`, or 1 when
    /// no admissible value exists (contrast runs outside the blow-up regime).
    pub fn eps0(&self) -> f64 {
        self.model
            .eps0
            .or_else(|| default_eps0(self.model.dim, self.model.m, self.model.k).ok())
            .unwrap_or(1.0)
    }

    /// Decay exponent of the initial envelope and of the tracked `K_emp`.
    pub fn envelope_exponent(&self) -> f64 {
        self.model
            .envelope_exponent
            .unwrap_or_else(|| p_of_eps(self.model.dim, self.model.m, self.eps0()))
    }

    /// Resolves every moment window; `"auto"` requires admissible parameters.
    pub fn moment_specs(&self) -> Result<Vec<MomentSpec>> {
        let params = self.params();
        let extent = params.volume_extent();
        self.moments
            .iter()
            .map(|e| {
                let s0 = e.s0_fraction * extent;
                if !(e.s0_fraction > 0.0 && e.s0_fraction <= 1.0) {
                    return Err(Error::Config(format!("s0_fraction={} must lie in (0, 1]", e.s0_fraction)));
                }
                let gamma = match e.gamma {
                    GammaSpec::Value(g) => g,
                    GammaSpec::Auto => MomentConfig::resolve(&params, None, s0.min(extent * (1.0 - 1e-12)))
                        .map_err(|err| Error::Config(format!("gamma = \"auto\" cannot be resolved: {err}")))?
                        .gamma,
                };
                if !(gamma > 0.0 && gamma < 1.0) {
                    return Err(Error::Config(format!("gamma={gamma} must lie in (0, 1)")));
                }
                Ok(MomentSpec { gamma, s0 })
            })
            .collect()
    }

    /// Checks everything a run needs before any work starts.
    pub fn validate(&self) -> Result<()> {
        self.params().validate()?;
        self.build_grid()?;
        self.control.to_control().validate()?;
        self.moment_specs()?;
        let r1 = self.model.inner_radius;
        if !(r1 > 0.0 && r1 < self.model.radius) {
            return Err(Error::Config(format!("inner_radius={r1} must lie in (0, radius)")));
        }
        if self.output.snapshot_times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::Config("snapshot times must be finite and nonnegative".into()));
        }
        Ok(())
    }
}
