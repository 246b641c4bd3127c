use serde::{Deserialize, Serialize};

use crate::diagnostics::{empirical_envelopes, MomentEvaluator, MomentSpec, MomentTerms};
use crate::error::{Error, Result};
use crate::params::{sphere_measure, ModelParams};

use super::grid::RadialGrid;
use super::sensitivity::Sensitivity;
use super::state::State;
use super::step::Stepper;

/// Number of trailing accepted steps examined by the blow-up test.
pub const DETECTION_WINDOW: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub cfl_safety: f64,
    /// Growth-limiting constant in `dt ≤ c_growth / (1 + u_max)`.
    pub c_growth: f64,
    /// Largest ratio between consecutive step sizes.
    pub dt_growth: f64,
    pub u_blow: f64,
    pub max_steps: usize,
    pub t_end: f64,
    /// A run that reaches `t_end` is bounded when `u_max ≤ bounded_factor · u_max(0)`.
    pub bounded_factor: f64,
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        let ok = self.dt_min > 0.0
            && self.dt_min <= self.dt_init
            && self.dt_init <= self.dt_max
            && self.cfl_safety > 0.0
            && self.cfl_safety < 1.0
            && self.c_growth > 0.0
            && self.dt_growth > 1.0
            && self.u_blow > 0.0
            && self.t_end > 0.0
            && self.bounded_factor >= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "step control needs 0 < dt_min <= dt_init <= dt_max, cfl_safety in (0,1), positive c_growth, dt_growth > 1, positive u_blow, t_end and bounded_factor >= 1: {self:?}"
            )))
        }
    }

    /// `clamp(cfl_safety · min(dt_stab, c_growth/(1+u_max)), dt_min, dt_max)`.
    pub fn next_dt(&self, dt_stab: f64, u_max: f64) -> f64 {
        (self.cfl_safety * dt_stab.min(self.c_growth / (1.0 + u_max))).clamp(self.dt_min, self.dt_max)
    }
}

/// Scalar observables after one accepted step (or at `t = 0`, with `dt = 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub t: f64,
    pub dt: f64,
    pub u_max: f64,
    pub mass_u: f64,
    pub mass_v: f64,
    pub v_min: f64,
    pub moments: Vec<MomentTerms>,
    pub k_emp: f64,
    pub cv_emp: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub records: Vec<Record>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn last(&self) -> Option<&Record> {
        self.records.last()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Blowup,
    Bounded,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub verdict: Verdict,
    pub t_last: f64,
    pub u_max_last: f64,
    /// Zero of the least-squares line through `(t, 1/u_max)` over the final window.
    pub t_star_estimate: Option<f64>,
    /// RMS residual of that fit, relative to the mean of `1/u_max`.
    pub fit_residual: Option<f64>,
    pub evidence: Vec<String>,
}

/// Least-squares line `y = a + b t`; returns `(a, b, rms residual)`.
fn linear_fit(t: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let stt: f64 = t.iter().map(|x| (x - tm) * (x - tm)).sum();
    let sty: f64 = t.iter().zip(y).map(|(x, v)| (x - tm) * (v - ym)).sum();
    let b = if stt > 0.0 { sty / stt } else { 0.0 };
    let a = ym - b * tm;
    let rss: f64 = t.iter().zip(y).map(|(x, v)| (v - a - b * x).powi(2)).sum();
    (a, b, (rss / n).sqrt())
}

/// Classifies a finished series.
pub fn detect_blowup(series: &TimeSeries, control: &StepControl) -> BlowupReport {
    let recs = &series.records;
    let Some(last) = recs.last() else {
        return BlowupReport {
            verdict: Verdict::Inconclusive,
            t_last: 0.0,
            u_max_last: 0.0,
            t_star_estimate: None,
            fit_residual: None,
            evidence: vec!["empty series".into()],
        };
    };
    let mut evidence = Vec::new();
    // Accepted steps carry dt > 0; the initial record does not.
    let steps: Vec<&Record> = recs.iter().filter(|r| r.dt > 0.0).collect();
    let window: Vec<&Record> = steps.iter().rev().take(DETECTION_WINDOW).rev().copied().collect();

    let (mut t_star, mut residual) = (None, None);
    if window.len() >= 2 {
        let t: Vec<f64> = window.iter().map(|r| r.t).collect();
        let y: Vec<f64> = window.iter().map(|r| 1.0 / r.u_max).collect();
        let (a, b, rms) = linear_fit(&t, &y);
        if b < 0.0 {
            t_star = Some(-a / b);
        }
        let ym = y.iter().sum::<f64>() / y.len() as f64;
        residual = Some(rms / ym);
    }

    let above = last.u_max >= control.u_blow;
    let full = window.len() == DETECTION_WINDOW;
    let collapsed = full && window.iter().all(|r| r.dt <= control.dt_min * (1.0 + 1e-12));
    let monotone = full && window.windows(2).all(|p| p[1].u_max > p[0].u_max);
    evidence.push(format!("u_max_last = {:e} against U_blow = {:e}", last.u_max, control.u_blow));
    evidence.push(format!(
        "dt at dt_min over the final {DETECTION_WINDOW} steps: {collapsed}; u_max increasing over them: {monotone}"
    ));

    let verdict = if above && collapsed && monotone {
        Verdict::Blowup
    } else {
        let reached = last.t >= control.t_end * (1.0 - 1e-12);
        let u0 = recs[0].u_max;
        let peak = recs.iter().map(|r| r.u_max).fold(0.0, f64::max);
        evidence.push(format!(
            "t_end reached: {reached}; peak u_max / initial = {:e} (bound {})",
            peak / u0,
            control.bounded_factor
        ));
        if reached && peak <= control.bounded_factor * u0 {
            Verdict::Bounded
        } else {
            Verdict::Inconclusive
        }
    };
    BlowupReport {
        verdict,
        t_last: last.t,
        u_max_last: last.u_max,
        t_star_estimate: if verdict == Verdict::Blowup { t_star } else { None },
        fit_residual: if verdict == Verdict::Blowup { residual } else { None },
        evidence,
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "detail")]
pub enum Termination {
    EndTime,
    MaxSteps,
    BlowupDetected,
    /// A step at `dt_min` was rejected; the last good state is kept.
    Stalled(String),
}

/// Everything a run needs besides its initial state.
pub struct RunSetup<'a> {
    pub params: &'a ModelParams,
    pub grid: &'a RadialGrid,
    pub control: &'a StepControl,
    pub moments: &'a [MomentSpec],
    /// Exponent `p` of the envelope `u ≤ K r^{−p}` tracked each step.
    pub envelope_p: f64,
    pub snapshot_times: &'a [f64],
    pub chi: &'a dyn Sensitivity,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub series: TimeSeries,
    pub report: BlowupReport,
    /// `(requested time, state)`: the first accepted state at or after each
    /// requested time.
    pub snapshots: Vec<(f64, State)>,
    pub final_state: State,
    pub termination: Termination,
    pub steps: usize,
    pub rejections: usize,
}

struct Recorder<'a> {
    setup: &'a RunSetup<'a>,
    evaluators: Vec<MomentEvaluator>,
    omega: f64,
}

impl Recorder<'_> {
    fn record(&self, st: &State, dt: f64) -> Record {
        let s = self.setup;
        let env = empirical_envelopes(st, s.grid, s.envelope_p);
        Record {
            t: st.t,
            dt,
            u_max: st.u_max(),
            mass_u: st.mass_u(s.grid, self.omega),
            mass_v: st.mass_v(s.grid, self.omega),
            v_min: env.v_min,
            moments: self.evaluators.iter().map(|e| e.terms(st, s.grid, s.params.m, s.chi)).collect(),
            k_emp: env.k_emp,
            cv_emp: env.cv_emp,
        }
    }
}

/// Advances `initial` until `t_end`, `max_steps`, blow-up detection, or a
/// rejected step at `dt_min`.
pub fn run(initial: State, setup: &RunSetup) -> Result<RunOutcome> {
    run_with(initial, setup, |_, _| {})
}

/// [`run`], calling `observe` on the initial state and after every accepted step.
pub fn run_with<F: FnMut(&State, &Record)>(initial: State, setup: &RunSetup, mut observe: F) -> Result<RunOutcome> {
    let control = setup.control;
    control.validate()?;
    let evaluators = setup
        .moments
        .iter()
        .map(|m| MomentEvaluator::new(setup.grid, *m))
        .collect::<Result<Vec<_>>>()?;
    let recorder = Recorder { setup, evaluators, omega: sphere_measure(setup.params.dim) };
    let stepper = Stepper::new(setup.params, setup.grid, setup.chi);

    let mut snap_times: Vec<f64> = setup.snapshot_times.to_vec();
    snap_times.sort_by(f64::total_cmp);
    let mut next_snap = 0;
    let mut snapshots = Vec::new();
    let mut take_snapshots = |st: &State, next: &mut usize| {
        while *next < snap_times.len() && st.t >= snap_times[*next] {
            snapshots.push((snap_times[*next], st.clone()));
            *next += 1;
        }
    };

    let mut state = initial;
    let mut series = TimeSeries { records: vec![recorder.record(&state, 0.0)] };
    observe(&state, &series.records[0]);
    take_snapshots(&state, &mut next_snap);
    let (mut steps, mut rejections) = (0usize, 0usize);
    let mut prev_dt: Option<f64> = None;
    let termination = loop {
        if state.t >= control.t_end {
            break Termination::EndTime;
        }
        if steps >= control.max_steps {
            break Termination::MaxSteps;
        }
        let mut dt = control.next_dt(stepper.transport_dt_limit(&state), state.u_max());
        dt = match prev_dt {
            None => dt.min(control.dt_init),
            Some(p) => dt.min(control.dt_growth * p),
        }
        .max(control.dt_min);
        let remaining = control.t_end - state.t;
        let mut last_step = false;
        // A remainder within rounding of dt is absorbed rather than left as a
        // sliver step.
        if dt * (1.0 + 1e-9) >= remaining {
            dt = remaining;
            last_step = true;
        }
        let next = loop {
            match stepper.step(&state, dt) {
                Ok(st) => break Ok(st),
                Err(Error::StepRejected(_) | Error::SingularMatrix(_)) if dt > control.dt_min => {
                    rejections += 1;
                    dt = (0.5 * dt).max(control.dt_min);
                    last_step = false;
                }
                Err(e) => break Err(e),
            }
        };
        let next = match next {
            Ok(st) => st,
            Err(e) => break Termination::Stalled(format!("at t={}, dt={dt:e}: {e}", state.t)),
        };
        steps += 1;
        if !last_step {
            prev_dt = Some(dt);
        }
        state = next;
        if last_step {
            state.t = control.t_end;
        }
        series.records.push(recorder.record(&state, dt));
        observe(&state, series.records.last().unwrap());
        take_snapshots(&state, &mut next_snap);
        if state.u_max() >= control.u_blow && detect_blowup(&series, control).verdict == Verdict::Blowup {
            break Termination::BlowupDetected;
        }
    };
    let report = detect_blowup(&series, control);
    Ok(RunOutcome { series, report, snapshots, final_state: state, termination, steps, rejections })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{build_initial_data, NoTaxis, PowerLaw};

    fn control() -> StepControl {
        StepControl {
            dt_init: 1e-3,
            dt_min: 1e-3,
            dt_max: 1e-3,
            cfl_safety: 0.5,
            c_growth: 0.1,
            dt_growth: 2.0,
            u_blow: 1e6,
            max_steps: 100_000,
            t_end: 0.999,
            bounded_factor: 10.0,
        }
    }

    fn record(t: f64, dt: f64, u_max: f64) -> Record {
        Record { t, dt, u_max, mass_u: 1.0, mass_v: 1.0, v_min: 0.0, moments: vec![], k_emp: 0.0, cv_emp: 0.0 }
    }

    #[test]
    fn synthetic_blowup_series() {
        let mut records = vec![record(0.9, 0.0, 10.0)];
        let n = 99;
        for i in 1..=n {
            let t = 0.9 + 0.099 * i as f64 / n as f64;
            records.push(record(t, 1e-3, 1.0 / (1.0 - t)));
        }
        let mut c = control();
        c.u_blow = 900.0;
        let rep = detect_blowup(&TimeSeries { records }, &c);
        assert_eq!(rep.verdict, Verdict::Blowup);
        assert!((rep.t_star_estimate.unwrap() - 1.0).abs() < 1e-3);
        assert!(rep.fit_residual.unwrap() < 1e-10);
    }

    #[test]
    fn constant_series_is_bounded() {
        let records: Vec<Record> = (0..=20).map(|i| record(i as f64 * 0.999 / 20.0, 0.05, 3.0)).collect();
        let rep = detect_blowup(&TimeSeries { records }, &control());
        assert_eq!(rep.verdict, Verdict::Bounded);
        assert!(rep.t_star_estimate.is_none());
    }

    #[test]
    fn mid_growth_is_inconclusive() {
        let records: Vec<Record> = (0..=20).map(|i| record(i as f64 * 0.02, 1e-3, 1.0 + 100.0 * i as f64)).collect();
        let rep = detect_blowup(&TimeSeries { records }, &control());
        assert_eq!(rep.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn next_dt_is_clamped() {
        let c = StepControl { dt_min: 1e-6, dt_max: 1e-2, ..control() };
        assert_eq!(c.next_dt(f64::INFINITY, 0.0), 1e-2);
        assert_eq!(c.next_dt(1e-9, 0.0), 1e-6);
        assert!((c.next_dt(1.0, 999.0) - 0.5 * 1e-4).abs() < 1e-18);
    }

    fn params(m: f64) -> ModelParams {
        ModelParams {
            dim: 3,
            radius: 1.0,
            m,
            chi0: 1.0,
            a: 0.0,
            k: 0.5,
            total_mass: 2.0,
            inner_mass: 1.0,
            envelope: 1.0,
        }
    }

    #[test]
    fn diffusion_only_run_conserves_and_records() {
        let p = params(1.5);
        let grid = RadialGrid::new(3, 1.0, 128, 3.0).unwrap();
        let (st, _) = build_initial_data(&p, 7.0, 0.4, &grid).unwrap();
        let c = StepControl { dt_init: 1e-4, dt_min: 1e-7, dt_max: 1e-3, t_end: 0.05, ..control() };
        let moments = [MomentSpec { gamma: 0.45, s0: 0.5 }];
        let setup = RunSetup {
            params: &p,
            grid: &grid,
            control: &c,
            moments: &moments,
            envelope_p: 7.0,
            snapshot_times: &[0.0, 0.01, 1.0],
            chi: &NoTaxis,
        };
        let out = run(st, &setup).unwrap();
        assert_eq!(out.termination, Termination::EndTime);
        assert_eq!(out.report.verdict, Verdict::Bounded);
        assert_eq!(out.snapshots.len(), 2);
        assert_eq!(out.final_state.t, 0.05);
        let t = out.series.times();
        assert!(t.windows(2).all(|p| p[1] > p[0]));
        for r in &out.series.records {
            assert!((r.mass_u - 2.0).abs() < 1e-10);
            assert!((r.mass_v - 2.0).abs() < 1e-10);
            assert_eq!(r.moments[0].i2, 0.0);
        }
        // Pure diffusion flattens the profile.
        assert!(out.report.u_max_last < out.series.records[0].u_max);
    }

    #[test]
    fn step_growth_is_capped_and_no_sliver_remains() {
        let p = params(1.5);
        let grid = RadialGrid::new(3, 1.0, 64, 3.0).unwrap();
        let (st, _) = build_initial_data(&p, 7.0, 0.4, &grid).unwrap();
        // 0.3 / 1e-3 leaves a rounding remainder after the fixed steps.
        let c = StepControl { dt_init: 1e-6, dt_min: 1e-9, dt_max: 1e-3, t_end: 0.3, ..control() };
        let setup = RunSetup {
            params: &p,
            grid: &grid,
            control: &c,
            moments: &[],
            envelope_p: 7.0,
            snapshot_times: &[],
            chi: &NoTaxis,
        };
        let out = run(st, &setup).unwrap();
        let dts: Vec<f64> = out.series.records[1..].iter().map(|r| r.dt).collect();
        assert_eq!(dts[0], 1e-6);
        assert!(dts.windows(2).all(|p| p[1] <= 2.0 * p[0] * (1.0 + 1e-12)));
        assert!(dts.iter().all(|&d| d > 1e-3 * 1e-6), "{:e}", dts.iter().copied().fold(1.0, f64::min));
        assert_eq!(out.final_state.t, 0.3);
    }

    #[test]
    fn stalls_when_dt_min_is_too_large() {
        let p = ModelParams { chi0: 50.0, total_mass: 30.0, inner_mass: 25.0, ..params(1.0) };
        let grid = RadialGrid::new(3, 1.0, 128, 3.0).unwrap();
        let (st, _) = build_initial_data(&p, 7.0, 0.2, &grid).unwrap();
        let c = StepControl { dt_init: 0.05, dt_min: 0.05, dt_max: 0.05, t_end: 1.0, ..control() };
        let chi = PowerLaw::from_params(&p);
        let setup = RunSetup {
            params: &p,
            grid: &grid,
            control: &c,
            moments: &[],
            envelope_p: 7.0,
            snapshot_times: &[],
            chi: &chi,
        };
        let out = run(st, &setup).unwrap();
        assert!(matches!(out.termination, Termination::Stalled(_)), "{:?}", out.termination);
        assert_ne!(out.report.verdict, Verdict::Blowup);
    }
}
