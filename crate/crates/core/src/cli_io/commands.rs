use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    check_i2_lower, check_identity, check_initial_moment, check_lem35, default_lem35_samples, dphi_fd,
    empirical_envelopes, identity_floor, observed_order, odi_fit, CheckEntry, MomentSpec, MomentTerms, OdiFit,
};
use crate::error::{Error, Result};
use crate::params::{
    alpha_of_gamma, check_conditions, eta_lower_bound, theta1_of, AdmissibilityReport,
};
use crate::quadrature::lemma38_ratio;
use crate::solver::{
    build_initial_data, detect_blowup, manufactured_elliptic_error, run, BlowupReport, PowerLaw, RadialGrid, RunOutcome, RunSetup,
    State, StepControl, Termination, TimeSeries, Verdict,
};

use super::config::{GammaSpec, RunConfig};
use super::output::{csv_err, fmt_num, read_snapshot, read_timeseries, write_json, write_snapshot, write_timeseries};

/// Process exit code for an error: 1 for configuration and input problems,
/// 2 for numerical failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::StepRejected(_) | Error::SingularMatrix(_) | Error::NonConvergence { .. } => 2,
        _ => 1,
    }
}

// ---------------------------------------------------------------- check

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentExponents {
    pub gamma: f64,
    pub s0: f64,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub report: AdmissibilityReport,
    /// Lower bound for `v` from the heat kernel with diameter `2R`.
    pub eta: f64,
    pub eps0: f64,
    pub p: f64,
    pub theta1: Option<f64>,
    pub moments: Vec<MomentExponents>,
}

impl CheckSummary {
    pub fn render(&self) -> String {
        let r = &self.report;
        let mut out = String::new();
        out.push_str(&format!("admissible:      {}\n", r.admissible));
        out.push_str(&format!("m_upper:         {}\n", r.m_upper));
        out.push_str(&format!("k_upper:         {}\n", r.k_upper));
        let eps = match r.eps0_max {
            Some(crate::params::Eps0Max::Unbounded) => "unbounded".to_string(),
            Some(crate::params::Eps0Max::Finite(x)) => x.to_string(),
            None => "-".to_string(),
        };
        out.push_str(&format!("eps0_max:        {eps}\n"));
        match r.gamma_interval {
            Some((lo, hi)) => out.push_str(&format!("gamma_interval:  ({lo}, {hi})\n")),
            None => out.push_str("gamma_interval:  empty\n"),
        }
        out.push_str(&format!("eta:             {}\n", self.eta));
        out.push_str(&format!("eps0:            {}\n", self.eps0));
        out.push_str(&format!("p:               {}\n", self.p));
        if let Some(t) = self.theta1 {
            out.push_str(&format!("theta1:          {t}\n"));
        }
        for (i, m) in self.moments.iter().enumerate() {
            let a = m.alpha.map_or("-".to_string(), |a| a.to_string());
            out.push_str(&format!("moment {i}:        gamma={} s0={} alpha={a}\n", m.gamma, m.s0));
        }
        for msg in &r.messages {
            out.push_str(&format!("violation:       {msg}\n"));
        }
        out
    }
}

/// Admissibility of the configured parameters and the derived exponents.
pub fn cmd_check(cfg: &RunConfig) -> Result<CheckSummary> {
    let params = cfg.params();
    let report = check_conditions(&params)?;
    let eta = eta_lower_bound(params.total_mass, params.dim, 2.0 * params.radius)?;
    let eps0 = cfg.eps0();
    let extent = params.volume_extent();
    let moments = cfg
        .moments
        .iter()
        .filter_map(|e| {
            let gamma = match e.gamma {
                GammaSpec::Value(g) => Some(g),
                GammaSpec::Auto => report.gamma_interval.map(|(lo, hi)| 0.5 * (lo + hi)),
            }?;
            Some(MomentExponents {
                gamma,
                s0: e.s0_fraction * extent,
                alpha: alpha_of_gamma(gamma, params.dim, params.k).ok(),
            })
        })
        .collect();
    Ok(CheckSummary {
        theta1: report.admissible.then(|| theta1_of(params.dim, params.m, params.k, eps0)),
        report,
        eta,
        eps0,
        p: cfg.envelope_exponent(),
        moments,
    })
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub gamma: f64,
    pub s0: f64,
    pub identity_max_rel_deviation: Option<f64>,
    pub identity_window_samples: usize,
    pub odi: Option<OdiFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mass_drift_max: f64,
    pub v_min_min: f64,
    pub eta: f64,
    pub k_emp_growth_max: f64,
    pub moments: Vec<MomentSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    #[serde(flatten)]
    pub blowup: BlowupReport,
    pub termination: Termination,
    pub steps: usize,
    pub rejections: usize,
    pub cells: usize,
    pub diagnostics: RunSummary,
}

fn moment_terms(series: &TimeSeries, i: usize) -> Vec<MomentTerms> {
    series.records.iter().map(|r| r.moments[i]).collect()
}

/// Records used for the identity check: the prefix with
/// `u_max ≤ factor · u_max(0)`, minus a final step shortened to hit `t_end`.
fn identity_window(series: &TimeSeries, factor: f64, dt_min: f64) -> usize {
    let recs = &series.records;
    let u0 = recs.first().map_or(0.0, |r| r.u_max);
    let mut n = recs.iter().take_while(|r| r.u_max <= factor * u0).count();
    if n == recs.len() && n > 1 && recs[n - 1].dt < dt_min {
        n -= 1;
    }
    n
}

pub fn summarize(cfg: &RunConfig, specs: &[MomentSpec], series: &TimeSeries) -> Result<RunSummary> {
    let params = cfg.params();
    let recs = &series.records;
    let eta = eta_lower_bound(params.total_mass, params.dim, 2.0 * params.radius)?;
    let m0 = params.total_mass;
    let mass_drift_max = recs.iter().map(|r| (r.mass_u - m0).abs() / m0).fold(0.0, f64::max);
    let v_min_min = recs.iter().map(|r| r.v_min).fold(f64::INFINITY, f64::min);
    let k0 = recs.first().map_or(0.0, |r| r.k_emp);
    let k_emp_growth_max = recs.iter().map(|r| r.k_emp / k0).fold(0.0, f64::max);
    let window = identity_window(series, cfg.diagnose.identity_window_factor, cfg.control.dt_min);
    let times = series.times();
    let theta1 = theta1_of(params.dim, params.m, params.k, cfg.eps0());
    let mut moments = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        let terms = moment_terms(series, i);
        let identity = check_identity(&times[..window], &terms[..window], identity_floor(m0, spec.gamma, spec.s0))
            .ok()
            .map(|r| r.max_rel_deviation);
        let phi: Vec<f64> = terms.iter().map(|t| t.phi).collect();
        let odi = dphi_fd(&times, &phi).ok().map(|d| {
            odi_fit(&phi[1..phi.len() - 1], &d, times[1], spec.gamma, spec.s0, params.dim, params.k, theta1)
        });
        moments.push(MomentSummary {
            gamma: spec.gamma,
            s0: spec.s0,
            identity_max_rel_deviation: identity,
            identity_window_samples: window,
            odi,
        });
    }
    Ok(RunSummary { mass_drift_max, v_min_min, eta, k_emp_growth_max, moments })
}

/// Builds the initial state of a configuration.
pub fn initial_state(cfg: &RunConfig, grid: &RadialGrid) -> Result<State> {
    let (st, _) = build_initial_data(&cfg.params(), cfg.envelope_exponent(), cfg.model.inner_radius, grid)?;
    Ok(st)
}

fn run_config(cfg: &RunConfig, grid: &RadialGrid, control: &StepControl, specs: &[MomentSpec]) -> Result<RunOutcome> {
    let params = cfg.params();
    let st = initial_state(cfg, grid)?;
    let chi = PowerLaw::from_params(&params);
    let setup = RunSetup {
        params: &params,
        grid,
        control,
        moments: specs,
        envelope_p: cfg.envelope_exponent(),
        snapshot_times: &cfg.output.snapshot_times,
        chi: &chi,
    };
    run(st, &setup)
}

/// Runs the configured simulation and writes `config.toml`,
/// `timeseries.csv`, `snapshots/` and `report.json` into `out`.
pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Result<SimulateReport> {
    cfg.validate()?;
    let specs = cfg.moment_specs()?;
    let grid = cfg.build_grid()?;
    let control = cfg.control.to_control();
    std::fs::create_dir_all(out.join("snapshots"))?;
    std::fs::write(out.join("config.toml"), cfg.to_toml()?)?;

    let outcome = run_config(cfg, &grid, &control, &specs)?;
    write_timeseries(&out.join("timeseries.csv"), &outcome.series, specs.len())?;
    let mut index = csv::Writer::from_path(out.join("snapshots").join("index.csv")).map_err(csv_err)?;
    index.write_record(["requested_t", "t", "file"]).map_err(csv_err)?;
    for (k, (req, st)) in outcome.snapshots.iter().enumerate() {
        let name = format!("snapshot_{k:03}.csv");
        write_snapshot(&out.join("snapshots").join(&name), st, &grid)?;
        index
            .write_record([fmt_num(*req), fmt_num(st.t), name])
            .map_err(csv_err)?;
    }
    index.flush()?;
    write_snapshot(&out.join("snapshots").join("final.csv"), &outcome.final_state, &grid)?;

    let report = SimulateReport {
        blowup: outcome.report.clone(),
        termination: outcome.termination.clone(),
        steps: outcome.steps,
        rejections: outcome.rejections,
        cells: grid.cells(),
        diagnostics: summarize(cfg, &specs, &outcome.series)?,
    };
    write_json(&out.join("report.json"), &report)?;
    Ok(report)
}

/// Whether a finished simulation counts as a solver failure.
pub fn simulate_failed(report: &SimulateReport) -> bool {
    matches!(report.termination, Termination::Stalled(_)) && report.blowup.verdict != Verdict::Blowup
}

// ---------------------------------------------------------------- diagnose

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdiEntry {
    pub gamma: f64,
    pub s0: f64,
    pub fit: OdiFit,
    pub observed_t_last: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub all_pass: bool,
    pub checks: Vec<CheckEntry>,
    pub odi: Vec<OdiEntry>,
}

fn entry(name: String, pass: bool, value: f64, tolerance: f64) -> CheckEntry {
    CheckEntry { name, pass, margin_or_ratio: value, tolerance, refinement_order_observed: None }
}

/// States available in a run directory: the rebuilt initial state and every
/// stored snapshot, reconstructed from their `w` column.
fn stored_states(dir: &Path, cfg: &RunConfig, grid: &RadialGrid) -> Result<Vec<State>> {
    let tol = 1e-12 * cfg.model.total_mass;
    let mut states = vec![initial_state(cfg, grid)?];
    let snap_dir = dir.join("snapshots");
    let index = snap_dir.join("index.csv");
    let mut files: Vec<(f64, PathBuf)> = Vec::new();
    if index.exists() {
        let mut rd = csv::Reader::from_path(&index).map_err(csv_err)?;
        for rec in rd.records() {
            let rec = rec.map_err(csv_err)?;
            let t: f64 = rec[1].parse().map_err(|_| Error::Io(format!("bad time in {}", index.display())))?;
            files.push((t, snap_dir.join(&rec[2])));
        }
    }
    let final_path = snap_dir.join("final.csv");
    if final_path.exists() {
        files.push((f64::NAN, final_path));
    }
    for (t, path) in files {
        let cols = read_snapshot(&path)?;
        if cols.s.len() != grid.s_nodes.len() || cols.s.iter().zip(&grid.s_nodes).any(|(a, b)| a != b) {
            return Err(Error::Io(format!("{} does not match the configured grid", path.display())));
        }
        states.push(State::from_w(if t.is_nan() { 0.0 } else { t }, cols.w, grid, tol)?);
    }
    Ok(states)
}

/// Re-evaluates every check on a directory written by [`cmd_simulate`] and
/// writes `diagnostics.json` there.
pub fn cmd_diagnose(dir: &Path) -> Result<DiagnosticsReport> {
    let cfg_path = dir.join("config.toml");
    let ts_path = dir.join("timeseries.csv");
    for p in [&cfg_path, &ts_path] {
        if !p.exists() {
            return Err(Error::Io(format!("{} not found; not a run directory", p.display())));
        }
    }
    let cfg = RunConfig::load(&cfg_path)?;
    let specs = cfg.moment_specs()?;
    let series = read_timeseries(&ts_path)?;
    if series.is_empty() {
        return Err(Error::Io(format!("{} has no records", ts_path.display())));
    }
    if series.records[0].moments.len() != specs.len() {
        return Err(Error::Io("time series does not match the configured moments".into()));
    }
    let params = cfg.params();
    let grid = cfg.build_grid()?;
    let states = stored_states(dir, &cfg, &grid)?;
    let summary = summarize(&cfg, &specs, &series)?;
    let dg = cfg.diagnose;
    let mut checks = Vec::new();

    checks.push(entry("mass_conservation".into(), summary.mass_drift_max <= 1e-4, summary.mass_drift_max, 1e-4));
    let v_margin = summary.v_min_min - summary.eta;
    checks.push(entry("v_lower_bound".into(), v_margin >= 0.0, v_margin, 0.0));
    let min_du = states
        .iter()
        .flat_map(|s| s.w.windows(2).map(|p| p[1] - p[0]))
        .fold(f64::INFINITY, f64::min);
    checks.push(entry("w_nondecreasing".into(), min_du >= 0.0, min_du, 0.0));

    let n = grid.n();
    for (i, spec) in specs.iter().enumerate() {
        let (g, s0) = (spec.gamma, spec.s0);
        match summary.moments[i].identity_max_rel_deviation {
            Some(dev) => checks.push(entry(format!("identity_{i}"), dev <= dg.identity_tolerance, dev, dg.identity_tolerance)),
            None => checks.push(entry(format!("identity_{i}"), false, f64::NAN, dg.identity_tolerance)),
        }

        let mut i2_margin = f64::INFINITY;
        let mut lem_ratio: f64 = 0.0;
        let samples = default_lem35_samples(s0, dg.lem35_samples);
        for st in &states {
            let env = empirical_envelopes(st, &grid, cfg.envelope_exponent());
            i2_margin = i2_margin.min(check_i2_lower(st, &grid, g, s0, &params, env.cv_emp)?);
            lem_ratio = lem_ratio.max(check_lem35(st, &grid, g, s0, params.dim, params.k, &samples)?);
        }
        checks.push(entry(format!("i2_lower_{i}"), i2_margin >= 0.0, i2_margin, 0.0));
        checks.push(entry(format!("lem35_{i}"), lem_ratio <= 1.01, lem_ratio, 1.01));

        match check_initial_moment(&states[0], &grid, g, s0, dg.eta_frac, params.inner_mass) {
            Ok(m) => checks.push(entry(format!("initial_moment_{i}"), m >= 0.0, m, 0.0)),
            Err(_) => checks.push(entry(format!("initial_moment_{i}"), false, f64::NAN, 0.0)),
        }

        let alpha = alpha_of_gamma(g, params.dim, params.k)?;
        let a = 2.0 - 2.0 / n - alpha / 2.0;
        let coarse = lemma38_ratio(a, 0.5, s0, 64)?;
        let fine = lemma38_ratio(a, 0.5, s0, 128)?;
        let change = (fine / coarse - 1.0).abs();
        checks.push(CheckEntry {
            name: format!("lemma38_{i}"),
            pass: fine.is_finite() && change <= 1e-2,
            margin_or_ratio: fine,
            tolerance: 1e-2,
            refinement_order_observed: None,
        });
    }
    // The uniform envelope is a statement about the approach to blow-up; in a
    // bounded run mass legitimately spreads towards the boundary.
    if detect_blowup(&series, &cfg.control.to_control()).verdict == Verdict::Blowup {
        let k_growth = summary.k_emp_growth_max;
        checks.push(entry("envelope_k_growth".into(), k_growth < 10.0, k_growth, 10.0));
    }

    let t_last = series.last().map_or(0.0, |r| r.t);
    let odi = summary
        .moments
        .iter()
        .filter_map(|m| m.odi.map(|fit| OdiEntry { gamma: m.gamma, s0: m.s0, fit, observed_t_last: t_last }))
        .collect();
    let report = DiagnosticsReport { all_pass: checks.iter().all(|c| c.pass), checks, odi };
    write_json(&dir.join("diagnostics.json"), &report)?;
    Ok(report)
}

// ---------------------------------------------------------------- sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub m: f64,
    pub k: f64,
    pub admissible: bool,
    pub verdict: String,
    pub t_last: Option<f64>,
    pub u_max_last: Option<f64>,
}

fn linspace(range: [f64; 2], points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![range[0]];
    }
    (0..points)
        .map(|i| range[0] + (range[1] - range[0]) * i as f64 / (points - 1) as f64)
        .collect()
}

fn sweep_cell(cfg: &RunConfig, m: f64, k: f64, dir: &Path) -> PhaseRow {
    let mut cell = cfg.clone();
    cell.model.m = m;
    cell.model.k = k;
    cell.sweep = None;
    cell.refine = None;
    // Windows with "auto" gamma only exist for admissible cells.
    let probe = cell.clone();
    cell.moments.retain(|e| {
        let mut one = probe.clone();
        one.moments = vec![*e];
        one.moment_specs().is_ok()
    });
    let admissible = check_conditions(&cell.params()).map(|r| r.admissible).unwrap_or(false);
    match cmd_simulate(&cell, dir) {
        Ok(rep) => PhaseRow {
            m,
            k,
            admissible,
            verdict: serde_json::to_value(rep.blowup.verdict)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default(),
            t_last: Some(rep.blowup.t_last),
            u_max_last: Some(rep.blowup.u_max_last),
        },
        Err(e) => {
            let _ = std::fs::create_dir_all(dir).and_then(|_| std::fs::write(dir.join("error.txt"), e.to_string()));
            PhaseRow { m, k, admissible, verdict: "error".into(), t_last: None, u_max_last: None }
        }
    }
}

/// Runs one simulation per `(m, k)` cell, in parallel, and writes
/// `phase.csv`. Each cell writes only inside its own subdirectory.
pub fn cmd_sweep(cfg: &RunConfig, out: &Path, threads: Option<usize>) -> Result<Vec<PhaseRow>> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| Error::Config("sweep needs a [sweep] section".into()))?;
    let cells: Vec<(usize, usize, f64, f64)> = linspace(sweep.m_range, sweep.m_points)
        .into_iter()
        .enumerate()
        .flat_map(|(i, m)| {
            linspace(sweep.k_range, sweep.k_points).into_iter().enumerate().map(move |(j, k)| (i, j, m, k))
        })
        .collect();
    std::fs::create_dir_all(out)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;
    let rows: Vec<PhaseRow> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(i, j, m, k)| sweep_cell(cfg, m, k, &out.join(format!("cell_{i:02}_{j:02}"))))
            .collect()
    });
    let mut w = csv::Writer::from_path(out.join("phase.csv")).map_err(csv_err)?;
    w.write_record(["m", "k", "admissible", "verdict", "t_last", "u_max_last"])
        .map_err(csv_err)?;
    for r in &rows {
        let opt = |x: Option<f64>| x.map(fmt_num).unwrap_or_default();
        w.write_record([fmt_num(r.m), fmt_num(r.k), r.admissible.to_string(), r.verdict.clone(), opt(r.t_last), opt(r.u_max_last)])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(rows)
}

// ---------------------------------------------------------------- refine

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub study: String,
    pub cells: usize,
    pub dt: f64,
    pub error: f64,
    /// Order against the previous row of the same study.
    pub observed_order: Option<f64>,
}

fn fixed_dt_run(cfg: &RunConfig, cells: usize, dt: f64, t_end: f64, specs: &[MomentSpec]) -> Result<RunOutcome> {
    let grid = RadialGrid::new(cfg.model.dim, cfg.model.radius, cells, cfg.grid.grading)?;
    let control = StepControl {
        dt_init: dt,
        dt_min: dt,
        dt_max: dt,
        t_end,
        max_steps: usize::MAX,
        u_blow: f64::INFINITY,
        ..cfg.control.to_control()
    };
    let mut quiet = cfg.clone();
    quiet.output.snapshot_times.clear();
    let out = run_config(&quiet, &grid, &control, specs)?;
    if let Termination::Stalled(why) = &out.termination {
        return Err(Error::StepRejected(format!("refinement run at {cells} cells stalled: {why}")));
    }
    Ok(out)
}

fn with_orders(study: &str, rows: Vec<(usize, f64, f64)>) -> Vec<ConvergenceRow> {
    let mut out: Vec<ConvergenceRow> = Vec::new();
    for (i, (cells, dt, error)) in rows.iter().copied().enumerate() {
        let observed_order = (i > 0).then(|| observed_order(out[i - 1].error, error));
        out.push(ConvergenceRow { study: study.into(), cells, dt, error, observed_order });
    }
    out
}

/// Worst identity deviation over a fixed-step run.
fn identity_deviation(out: &RunOutcome, spec: &MomentSpec, total_mass: f64) -> Result<f64> {
    let t = out.series.times();
    let terms = moment_terms(&out.series, 0);
    Ok(check_identity(&t, &terms, identity_floor(total_mass, spec.gamma, spec.s0))?.max_rel_deviation)
}

/// Grid and time-step refinement studies on the smooth early window.
pub fn refine_studies(cfg: &RunConfig, threads: Option<usize>) -> Result<Vec<ConvergenceRow>> {
    let rf = cfg
        .refine
        .as_ref()
        .ok_or_else(|| Error::Config("refine needs a [refine] section".into()))?;
    if rf.levels.len() < 2 || rf.levels.windows(2).any(|p| p[1] != 2 * p[0]) {
        return Err(Error::Config("refine levels must double, with at least two levels".into()));
    }
    let spec = cfg
        .moment_specs()?
        .first()
        .copied()
        .ok_or_else(|| Error::Config("refine needs at least one [[moments]] entry".into()))?;
    let m0 = cfg.model.total_mass;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;
    let coarse = rf.levels[0];
    let finest_dt = rf.dt / (1u64 << (rf.levels.len() - 1)) as f64;

    pool.install(|| -> Result<Vec<ConvergenceRow>> {
        let mut rows = Vec::new();

        let elliptic = rf
            .levels
            .par_iter()
            .map(|&j| {
                let grid = RadialGrid::new(cfg.model.dim, cfg.model.radius, j, cfg.grid.grading)?;
                Ok((j, 0.0, manufactured_elliptic_error(&grid)?))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(with_orders("elliptic_manufactured", elliptic));

        // Self-convergence in dt on the coarsest grid: differences of
        // successive halvings.
        let dts: Vec<f64> = (0..=rf.levels.len()).map(|i| rf.dt / (1u64 << i) as f64).collect();
        let finals = dts
            .par_iter()
            .map(|&dt| Ok(fixed_dt_run(cfg, coarse, dt, rf.t_end, &[spec])?.final_state.w))
            .collect::<Result<Vec<_>>>()?;
        let dt_rows = (1..finals.len())
            .map(|i| {
                let e = finals[i].iter().zip(&finals[i - 1]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                (coarse, dts[i - 1], e)
            })
            .collect();
        rows.extend(with_orders("parabolic_dt", dt_rows));

        // Self-convergence in space at a fixed small step; nested grids share
        // the coarse nodes.
        let mut levels = rf.levels.clone();
        levels.push(2 * levels[levels.len() - 1]);
        let space = levels
            .par_iter()
            .map(|&j| Ok(fixed_dt_run(cfg, j, finest_dt, rf.t_end, &[spec])?.final_state.w))
            .collect::<Result<Vec<_>>>()?;
        let space_rows = (1..space.len())
            .map(|i| {
                let e = space[i - 1]
                    .iter()
                    .enumerate()
                    .map(|(j, a)| (a - space[i][2 * j]).abs())
                    .fold(0.0, f64::max);
                (levels[i - 1], finest_dt, e)
            })
            .collect();
        rows.extend(with_orders("parabolic_space", space_rows));

        // Identity residual with dt proportional to the cell width.
        let ident = rf
            .levels
            .par_iter()
            .enumerate()
            .map(|(i, &j)| {
                let dt = rf.dt / (1u64 << i) as f64;
                let out = fixed_dt_run(cfg, j, dt, rf.t_end, &[spec])?;
                Ok((j, dt, identity_deviation(&out, &spec, m0)?))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(with_orders("identity_residual", ident));
        Ok(rows)
    })
}

/// Runs [`refine_studies`] and writes `convergence.csv`.
pub fn cmd_refine(cfg: &RunConfig, out: &Path, threads: Option<usize>) -> Result<Vec<ConvergenceRow>> {
    let rows = refine_studies(cfg, threads)?;
    std::fs::create_dir_all(out)?;
    let mut w = csv::Writer::from_path(out.join("convergence.csv")).map_err(csv_err)?;
    w.write_record(["study", "cells", "dt", "error", "observed_order"])
        .map_err(csv_err)?;
    for r in &rows {
        w.write_record([
            r.study.clone(),
            r.cells.to_string(),
            fmt_num(r.dt),
            fmt_num(r.error),
            r.observed_order.map(fmt_num).unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(rows)
}
