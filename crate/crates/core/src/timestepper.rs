//! Integrating-factor Runge-Kutta time stepping.
//!
//! Viscosity and diffusion are diagonal in coefficient space, so each mode is
//! advanced by its exact exponential `exp(L dt)`; advection, rotation,
//! buoyancy and pressure are explicit. Writing `E = exp(L dt)` and
//! `H = exp(L dt/2)`, the third-order scheme is
//!
//! ```text
//! u2   = H (u + dt/2 N(u))
//! u3   = E u + dt (-E N(u) + 2 H N(u2))
//! u'   = E u + dt/6 (E N(u) + 4 H N(u2) + N(u3))
//! ```
//!
//! Every stage is projected back onto the barotropic constraint.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::dynamics::{project_mean_in_place, rhs, Rhs, SpectralState};
use crate::error::{Error, Result};
use crate::fields::{diagnose_w, h2_weight, weighted_energy, Params, State};
use crate::grid::{Axis, Grid};
use crate::symmetry::symmetrize;

/// Largest step `cfl_dt` will return.
pub const DT_MAX: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    Rk3Imf,
    Rk2Imf,
    EulerImf,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Rk3Imf => "RK3-IMF",
            Scheme::Rk2Imf => "RK2-IMF",
            Scheme::EulerImf => "EULER-IMF",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Scheme> {
        [Scheme::Rk3Imf, Scheme::Rk2Imf, Scheme::EulerImf]
            .into_iter()
            .find(|x| x.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown scheme `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeStep {
    Fixed(f64),
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepConfig {
    pub dt: TimeStep,
    pub t_end: f64,
    pub cfl: f64,
    pub scheme: Scheme,
    /// Apply `symmetrize` after every n-th step; 0 disables it.
    pub resymmetrize_every: usize,
    /// Largest admissible `sqrt(|v|_{H2}^2 + |T|_{H2}^2)`.
    pub blowup_guard: f64,
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig {
            dt: TimeStep::Auto,
            t_end: 1.0,
            cfl: 0.5,
            scheme: Scheme::Rk3Imf,
            resymmetrize_every: 0,
            blowup_guard: 1e8,
        }
    }
}

impl StepConfig {
    pub fn validate(&self) -> Result<()> {
        if let TimeStep::Fixed(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::Config(format!("dt = {dt} must be positive")));
            }
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Config(format!("cfl = {} must lie in (0, 1]", self.cfl)));
        }
        if !self.t_end.is_finite() {
            return Err(Error::Config("t_end must be finite".into()));
        }
        if !(self.blowup_guard > 0.0) {
            return Err(Error::Config("blowup_guard must be positive".into()));
        }
        Ok(())
    }
}

/// Per-mode exponential factors for one step length.
struct Factors {
    v: Vec<f64>,
    t: Vec<f64>,
}

impl Factors {
    fn new(grid: &Grid, p: &Params, tau: f64) -> Factors {
        let (nx, ny, nz) = (grid.nx(), grid.ny(), grid.nz());
        let mut v = Vec::with_capacity(grid.len());
        let mut t = Vec::with_capacity(grid.len());
        for i in 0..nx {
            for j in 0..ny {
                let lap_h = grid.d2(Axis::X, i) + grid.d2(Axis::Y, j);
                for k in 0..nz {
                    let zz = grid.d2(Axis::Z, k);
                    v.push(((p.nu_h * lap_h + p.nu_z * zz) * tau).exp());
                    t.push(((p.kappa_h * lap_h + p.eps * zz) * tau).exp());
                }
            }
        }
        Factors { v, t }
    }
}

/// Builds one field of a stage from `(base factor, base)` and a list of
/// `(weight, factor, rhs)` terms: `F0 u + dt sum w_i F_i N_i`.
fn stage_field(
    base: Option<(&[f64], &[Complex64])>,
    terms: &[(f64, Option<&[f64]>, &[Complex64])],
    dt: f64,
    n: usize,
) -> Vec<Complex64> {
    (0..n)
        .map(|idx| {
            let mut acc = match base {
                Some((f, u)) => u[idx] * f[idx],
                None => Complex64::new(0.0, 0.0),
            };
            for &(w, f, r) in terms {
                let fac = f.map_or(1.0, |f| f[idx]);
                acc += r[idx] * (dt * w * fac);
            }
            acc
        })
        .collect()
}

fn combine(
    u: &SpectralState,
    base: Option<&Factors>,
    terms: &[(f64, Option<&Factors>, &Rhs)],
    dt: f64,
) -> SpectralState {
    let n = u.v1.len();
    let pick = |sel: fn(&Factors) -> &[f64], rsel: fn(&Rhs) -> &[Complex64], us: &[Complex64]| {
        let t: Vec<(f64, Option<&[f64]>, &[Complex64])> =
            terms.iter().map(|&(w, f, r)| (w, f.map(sel), rsel(r))).collect();
        stage_field(base.map(|b| (sel(b), us)), &t, dt, n)
    };
    SpectralState {
        v1: pick(|f| &f.v, |r| &r.v1, &u.v1),
        v2: pick(|f| &f.v, |r| &r.v2, &u.v2),
        t: pick(|f| &f.t, |r| &r.t, &u.t),
    }
}

fn project(grid: &Grid, mut s: SpectralState) -> SpectralState {
    project_mean_in_place(grid, &mut s.v1, &mut s.v2);
    s
}

fn advance(grid: &Grid, u: &SpectralState, p: &Params, scheme: Scheme, dt: f64) -> SpectralState {
    let full = Factors::new(grid, p, dt);
    match scheme {
        Scheme::EulerImf => {
            let n1 = rhs(grid, u, p, false);
            project(grid, combine(u, Some(&full), &[(1.0, Some(&full), &n1)], dt))
        }
        Scheme::Rk2Imf => {
            let n1 = rhs(grid, u, p, false);
            let u2 = project(grid, combine(u, Some(&full), &[(1.0, Some(&full), &n1)], dt));
            let n2 = rhs(grid, &u2, p, false);
            project(
                grid,
                combine(u, Some(&full), &[(0.5, Some(&full), &n1), (0.5, None, &n2)], dt),
            )
        }
        Scheme::Rk3Imf => {
            let half = Factors::new(grid, p, 0.5 * dt);
            let n1 = rhs(grid, u, p, false);
            let u2 = project(grid, combine(u, Some(&half), &[(0.5, Some(&half), &n1)], dt));
            let n2 = rhs(grid, &u2, p, false);
            let u3 = project(
                grid,
                combine(u, Some(&full), &[(-1.0, Some(&full), &n1), (2.0, Some(&half), &n2)], dt),
            );
            let n3 = rhs(grid, &u3, p, false);
            project(
                grid,
                combine(
                    u,
                    Some(&full),
                    &[
                        (1.0 / 6.0, Some(&full), &n1),
                        (4.0 / 6.0, Some(&half), &n2),
                        (1.0 / 6.0, None, &n3),
                    ],
                    dt,
                ),
            )
        }
    }
}

fn h2_sq_spectral(grid: &Grid, s: &SpectralState) -> f64 {
    [&s.v1, &s.v2, &s.t]
        .iter()
        .map(|c| weighted_energy(grid, c, |i, j, k| h2_weight(grid, i, j, k)))
        .sum()
}

/// Advances `s` by `dt` with the configured scheme.
pub fn step(s: &State, p: &Params, c: &StepConfig, dt: f64) -> Result<State> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Precondition(format!("dt = {dt} must be positive")));
    }
    p.check_grid(s.grid())?;
    let grid = s.grid().clone();
    let u = SpectralState::from_state(s);
    let next = advance(&grid, &u, p, c.scheme, dt);
    let time = s.time + dt;
    if !next.is_finite() {
        return Err(Error::BlowUp { time, reason: "non-finite values".into() });
    }
    let h2 = h2_sq_spectral(&grid, &next).sqrt();
    if !(h2 <= c.blowup_guard) {
        return Err(Error::BlowUp {
            time,
            reason: format!("H2 norm {h2:e} exceeds guard {:e}", c.blowup_guard),
        });
    }
    Ok(next.into_state(&grid, time))
}

/// Advective CFL step, capped at [`DT_MAX`].
pub fn cfl_dt(s: &State, _p: &Params, c: &StepConfig) -> f64 {
    let grid = s.grid();
    let w = diagnose_w(&s.v1, &s.v2);
    let mut dt = f64::INFINITY;
    for (axis, umax) in [(Axis::X, s.v1.max_abs()), (Axis::Y, s.v2.max_abs()), (Axis::Z, w.max_abs())] {
        if umax > 0.0 {
            dt = dt.min(grid.spacing(axis) / umax);
        }
    }
    (c.cfl * dt).min(DT_MAX)
}

/// Receives snapshots from [`run`].
pub trait Observer {
    /// Called for the initial state (`step == 0`) and after every step.
    fn observe(&mut self, step: usize, state: &State, last: bool) -> Result<()>;

    /// Called once when the run ends, successfully or not.
    fn finish(&mut self) -> Result<()> {
        Ok(())
    }
}

fn time_left(t: f64, t_end: f64) -> bool {
    t_end - t > 1e-12 * t_end.abs().max(1.0)
}

/// Integrates from `s0` to `c.t_end`, feeding every snapshot to the observers.
pub fn run(
    s0: &State,
    p: &Params,
    c: &StepConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<State> {
    p.validate()?;
    c.validate()?;
    if c.t_end < s0.time {
        return Err(Error::Precondition(format!(
            "t_end = {} precedes the initial time {}",
            c.t_end, s0.time
        )));
    }
    let result = drive(s0, p, c, observers);
    let mut finished = Ok(());
    for o in observers.iter_mut() {
        if let Err(e) = o.finish() {
            finished = Err(e);
        }
    }
    let s = result?;
    finished?;
    Ok(s)
}

fn drive(s0: &State, p: &Params, c: &StepConfig, observers: &mut [&mut dyn Observer]) -> Result<State> {
    let mut s = s0.clone();
    let mut n = 0;
    let mut last = !time_left(s.time, c.t_end);
    for o in observers.iter_mut() {
        o.observe(0, &s, last)?;
    }
    while !last {
        let dt = match c.dt {
            TimeStep::Fixed(dt) => dt,
            TimeStep::Auto => cfl_dt(&s, p, c),
        };
        let remaining = c.t_end - s.time;
        let dt = if dt >= remaining { remaining } else { dt };
        s = step(&s, p, c, dt)?;
        n += 1;
        if c.resymmetrize_every > 0 && n % c.resymmetrize_every == 0 {
            s = symmetrize(&s);
        }
        last = !time_left(s.time, c.t_end);
        if last {
            s.time = c.t_end;
        }
        for o in observers.iter_mut() {
            o.observe(n, &s, last)?;
        }
    }
    Ok(s)
}
