//! The `run`, `twin` and `epsilon` experiments.

use std::fs;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::estimates::{norm_panel, phi, GronwallReport};
use crate::fields::{vector_l2, DiagRecord, Params, State};
use crate::presets::twin_perturbation;
use crate::timestepper::{cfl_dt, run, step, Observer, StepConfig, TimeStep};

use super::checkpoint;
use super::config::RunConfig;
use super::csv::{fmt_num, CsvWriter};

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const FINAL_CHECKPOINT: &str = "final.peqc";
pub const TWIN_FILE: &str = "twin.csv";
pub const EPSILON_FILE: &str = "epsilon.csv";
pub const SUMMARY_FILE: &str = "summary.txt";

/// Writes one [`DiagRecord`] row per cadence tick and for the final state.
pub struct DiagnosticsSink {
    csv: CsvWriter,
    params: Params,
    every: usize,
    pub rows: Vec<DiagRecord>,
}

impl DiagnosticsSink {
    pub fn create(path: &std::path::Path, params: Params, every: usize) -> Result<DiagnosticsSink> {
        Ok(DiagnosticsSink {
            csv: CsvWriter::create(path, &DiagRecord::COLUMNS)?,
            params,
            every: every.max(1),
            rows: Vec::new(),
        })
    }
}

impl Observer for DiagnosticsSink {
    fn observe(&mut self, step: usize, state: &State, last: bool) -> Result<()> {
        if step.is_multiple_of(self.every) || last {
            let rec = norm_panel(state, &self.params);
            self.csv.row(&rec.values())?;
            self.rows.push(rec);
        }
        Ok(())
    }

    fn finish(&mut self) -> Result<()> {
        self.csv.flush()
    }
}

/// Periodic checkpoints plus one for the final state.
pub struct CheckpointSink {
    dir: PathBuf,
    params: Params,
    every: usize,
    pub written: Vec<PathBuf>,
}

impl Observer for CheckpointSink {
    fn observe(&mut self, step: usize, state: &State, last: bool) -> Result<()> {
        if self.every > 0 && step > 0 && step.is_multiple_of(self.every) {
            let path = self.dir.join(format!("step_{step:08}.peqc"));
            checkpoint::write(&path, state, &self.params)?;
            self.written.push(path);
        }
        if last {
            let path = self.dir.join(FINAL_CHECKPOINT);
            checkpoint::write(&path, state, &self.params)?;
            self.written.push(path);
        }
        Ok(())
    }
}

fn prepare_output(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.output_dir)?;
    fs::write(cfg.output_dir.join("config.txt"), cfg.to_text())?;
    Ok(())
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub final_state: State,
    pub rows: Vec<DiagRecord>,
    pub checkpoints: Vec<PathBuf>,
}

/// Integrates the configured initial state, writing diagnostics and checkpoints.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunSummary> {
    let mut cfg = cfg.clone();
    let s0 = cfg.initial_state()?;
    cfg.validate()?;
    prepare_output(&cfg)?;
    let mut diag =
        DiagnosticsSink::create(&cfg.output_dir.join(DIAGNOSTICS_FILE), cfg.params, cfg.output_every)?;
    let mut ckpt = CheckpointSink {
        dir: cfg.output_dir.clone(),
        params: cfg.params,
        every: cfg.checkpoint_every,
        written: Vec::new(),
    };
    let step_cfg = StepConfig { t_end: cfg.step.t_end.max(s0.time), ..cfg.step };
    let final_state = run(&s0, &cfg.params, &step_cfg, &mut [&mut diag, &mut ckpt])?;
    Ok(RunSummary { final_state, rows: diag.rows, checkpoints: ckpt.written })
}

/// Step used by the comparison experiments: the configured fixed step, or
/// the CFL step of `s0`, shared by every run so they stay comparable.
pub fn shared_dt(s0: &State, p: &Params, c: &StepConfig) -> f64 {
    match c.dt {
        TimeStep::Fixed(dt) => dt,
        TimeStep::Auto => cfl_dt(s0, p, c),
    }
}

/// Step sizes from `t0` to `t_end` with constant `dt`, the last one shortened.
fn schedule(t0: f64, t_end: f64, dt: f64) -> Vec<f64> {
    let span = t_end - t0;
    if span <= 0.0 {
        return Vec::new();
    }
    let full = (span / dt * (1.0 - 1e-12)).floor() as usize;
    let mut steps = vec![dt; full];
    let rest = span - full as f64 * dt;
    if rest > 1e-12 * span.max(1.0) {
        steps.push(rest);
    }
    steps
}

fn distance_sq(a: &State, b: &State) -> f64 {
    a.combine(1.0, b, -1.0).l2().powi(2)
}

#[derive(Clone, Debug)]
pub struct TwinReport {
    pub delta: f64,
    pub dt: f64,
    pub gronwall: GronwallReport,
}

/// Runs the configured state next to a copy perturbed by `delta` times the
/// fixed twin direction, logging their squared distance `d(t)`, the weight
/// `phi` of the perturbed run, and the fitted Gronwall envelope.
pub fn cmd_twin(cfg: &RunConfig) -> Result<TwinReport> {
    let mut cfg = cfg.clone();
    let a0 = cfg.initial_state()?;
    cfg.validate()?;
    prepare_output(&cfg)?;
    let report = twin(&a0, &cfg.params, &cfg.step, cfg.delta, cfg.output_every)?;

    let mut csv = CsvWriter::create(&cfg.output_dir.join(TWIN_FILE), &["time", "d", "phi", "envelope"])?;
    let g = &report.gronwall;
    for n in 0..g.times.len() {
        csv.row(&[g.times[n], g.measured[n], g.phi[n], g.envelope[n]])?;
    }
    csv.flush()?;
    fs::write(
        cfg.output_dir.join(SUMMARY_FILE),
        format!(
            "delta = {}\ndt = {}\nd0 = {}\nd_end = {}\nC = {}\n",
            fmt_num(report.delta),
            fmt_num(report.dt),
            fmt_num(g.d0),
            fmt_num(*g.measured.last().expect("nonempty")),
            fmt_num(g.c)
        ),
    )?;
    Ok(report)
}

/// Library form of [`cmd_twin`] without file output.
pub fn twin(a0: &State, p: &Params, c: &StepConfig, delta: f64, every: usize) -> Result<TwinReport> {
    if !(delta >= 0.0) {
        return Err(Error::Precondition(format!("delta = {delta} must be >= 0")));
    }
    let b0 = a0.combine(1.0, &twin_perturbation(a0.grid()), delta);
    let dt = shared_dt(a0, p, c);
    let (mut a, mut b) = (a0.clone(), b0);
    let mut times = vec![a.time];
    let mut measured = vec![distance_sq(&a, &b)];
    let mut phis = vec![phi(&b)];
    let steps = schedule(a.time, c.t_end, dt);
    let total = steps.len();
    for (n, h) in steps.into_iter().enumerate() {
        a = step(&a, p, c, h)?;
        b = step(&b, p, c, h)?;
        if (n + 1) % every.max(1) == 0 || n + 1 == total {
            times.push(a.time);
            measured.push(distance_sq(&a, &b));
            phis.push(phi(&b));
        }
    }
    Ok(TwinReport { delta, dt, gronwall: GronwallReport::fit(times, phis, measured)? })
}

#[derive(Clone, Debug)]
pub struct EpsilonReport {
    pub eps: Vec<f64>,
    /// `|v_eps - v_0|_2 + |T_eps - T_0|_2` at the final time.
    pub distance: Vec<f64>,
    /// `sup_t (|v|_{H2}^2 + |T|_{H2}^2)` per run.
    pub sup_h2: Vec<f64>,
    pub panels: Vec<DiagRecord>,
    /// Least-squares slope of `log D` against `log eps` over `eps > 0`.
    pub slope: Option<f64>,
    /// `max / min` of `sup_h2` over the runs.
    pub uniform_ratio: f64,
    pub dt: f64,
}

struct SupH2(f64);

impl Observer for SupH2 {
    fn observe(&mut self, _: usize, state: &State, _: bool) -> Result<()> {
        self.0 = self.0.max(state.h2_sq());
        Ok(())
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Library form of [`cmd_epsilon`] without file output.
pub fn epsilon_study(s0: &State, p: &Params, c: &StepConfig, eps_list: &[f64]) -> Result<EpsilonReport> {
    if eps_list.is_empty() || !eps_list.contains(&0.0) {
        return Err(Error::Config("eps_list must be nonempty and contain 0".into()));
    }
    if eps_list.iter().any(|&e| !(e >= 0.0)) {
        return Err(Error::Config("eps_list values must be >= 0".into()));
    }
    let dt = shared_dt(s0, p, c);
    let fixed = StepConfig { dt: TimeStep::Fixed(dt), ..*c };
    let mut finals = Vec::with_capacity(eps_list.len());
    let mut sup_h2 = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let pe = Params { eps, ..*p };
        let mut sup = SupH2(0.0);
        finals.push((run(s0, &pe, &fixed, &mut [&mut sup])?, pe));
        sup_h2.push(sup.0);
    }
    let base = &finals[eps_list.iter().position(|&e| e == 0.0).expect("checked")].0;
    let distance: Vec<f64> = finals
        .iter()
        .map(|(s, _)| {
            let d = s.combine(1.0, base, -1.0);
            vector_l2(&[&d.v1, &d.v2]) + vector_l2(&[&d.t])
        })
        .collect();
    let panels = finals.iter().map(|(s, pe)| norm_panel(s, pe)).collect();
    let hi = sup_h2.iter().cloned().fold(f64::MIN, f64::max);
    let lo = sup_h2.iter().cloned().fold(f64::MAX, f64::min);
    Ok(EpsilonReport {
        eps: eps_list.to_vec(),
        slope: loglog_slope(eps_list, &distance),
        distance,
        sup_h2,
        panels,
        uniform_ratio: if lo > 0.0 { hi / lo } else { 1.0 },
        dt,
    })
}

/// Runs identical initial data for each regularization value and compares
/// the final states against the unregularized run.
pub fn cmd_epsilon(cfg: &RunConfig) -> Result<EpsilonReport> {
    let mut cfg = cfg.clone();
    let s0 = cfg.initial_state()?;
    cfg.validate()?;
    prepare_output(&cfg)?;
    let report = epsilon_study(&s0, &cfg.params, &cfg.step, &cfg.eps_list)?;

    let mut header = vec!["eps".to_string(), "D".to_string(), "sup_H2_sq".to_string()];
    header.extend(DiagRecord::COLUMNS.iter().map(|c| format!("final_{c}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = CsvWriter::create(&cfg.output_dir.join(EPSILON_FILE), &header)?;
    for n in 0..report.eps.len() {
        let mut row = vec![report.eps[n], report.distance[n], report.sup_h2[n]];
        row.extend(report.panels[n].values());
        csv.row(&row)?;
    }
    csv.flush()?;
    fs::write(
        cfg.output_dir.join(SUMMARY_FILE),
        format!(
            "dt = {}\nslope = {}\nuniform_ratio = {}\n",
            fmt_num(report.dt),
            report.slope.map_or("nan".to_string(), fmt_num),
            fmt_num(report.uniform_ratio)
        ),
    )?;
    Ok(report)
}
