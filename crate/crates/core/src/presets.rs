//! Named initial conditions. Each one anchors a particular check: exact
//! decay, inertial rotation, thermal steady state, or generic smooth data in
//! the invariant class.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::barotropic_project;
use crate::error::{Error, Result};
use crate::fields::{vector_l2, State};
use crate::grid::{Field3, Grid};
use crate::symmetry::symmetrize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Zero velocity and temperature.
    Rest,
    /// Uniform velocity `(U, 0)`.
    Inertial,
    /// `v = (0, U sin 2 pi x)`, a single viscous mode.
    ModeDecay,
    /// `T = U sin(pi z/h) sin(2 pi x)`, `v = 0`.
    Thermal,
    /// Seeded band-limited fields in the invariant class.
    RandomH,
}

impl Preset {
    pub const ALL: [Preset; 5] =
        [Preset::Rest, Preset::Inertial, Preset::ModeDecay, Preset::Thermal, Preset::RandomH];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Rest => "rest",
            Preset::Inertial => "inertial",
            Preset::ModeDecay => "mode-decay",
            Preset::Thermal => "thermal",
            Preset::RandomH => "random-H",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Preset> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown initial-condition preset `{s}`")))
    }
}

/// Settings shared by the presets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PresetOptions {
    pub amplitude: f64,
    pub seed: u64,
    /// Highest mode index per axis for `random-H`.
    pub modes: usize,
}

impl Default for PresetOptions {
    fn default() -> Self {
        PresetOptions { amplitude: 1.0, seed: 0, modes: 2 }
    }
}

pub fn build(grid: &Arc<Grid>, preset: Preset, opts: &PresetOptions) -> Result<State> {
    let u = opts.amplitude;
    let h = grid.h();
    let zero = || Field3::zeros(grid);
    let state = match preset {
        Preset::Rest => State::zeros(grid),
        Preset::Inertial => State::new(Field3::constant(grid, u), zero(), zero(), 0.0)?,
        Preset::ModeDecay => State::new(
            zero(),
            Field3::from_fn(grid, |x, _, _| u * (2.0 * PI * x).sin()),
            zero(),
            0.0,
        )?,
        Preset::Thermal => {
            let t = Field3::from_fn(grid, |x, _, z| u * (PI * z / h).sin() * (2.0 * PI * x).sin());
            symmetrize(&State::new(zero(), zero(), t, 0.0)?)
        }
        Preset::RandomH => random_state_in_h(grid, opts.seed, opts.modes, u)?,
    };
    Ok(state)
}

/// Sum of seeded Fourier modes with `|m| <= modes` per axis and weights
/// `1/(1+|m|^2)`: cosines in z for `v`, sines for `T`. The result is
/// symmetrized, barotropically projected, and scaled to RMS `amplitude`.
pub fn random_state_in_h(grid: &Arc<Grid>, seed: u64, modes: usize, amplitude: f64) -> Result<State> {
    let cut = grid.dealias_cutoff();
    if modes == 0 || cut.iter().any(|&c| modes > c) {
        return Err(Error::Config(format!(
            "random-H modes = {modes} must be in 1..={} on this grid",
            cut.iter().min().unwrap()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = modes as i64;
    let h = grid.h();

    let mut synth = |odd: bool| {
        let mut terms = Vec::new();
        for mx in -m..=m {
            for my in -m..=m {
                for mz in (odd as i64)..=m {
                    let weight = 1.0 / (1.0 + (mx * mx + my * my + mz * mz) as f64);
                    let a: f64 = rng.gen_range(-1.0..1.0);
                    let b: f64 = rng.gen_range(-1.0..1.0);
                    terms.push((mx as f64, my as f64, mz as f64, a * weight, b * weight));
                }
            }
        }
        Field3::from_fn(grid, |x, y, z| {
            terms
                .iter()
                .map(|&(mx, my, mz, a, b)| {
                    let th = 2.0 * PI * (mx * x + my * y);
                    let zz = PI * mz * z / h;
                    let vert = if odd { zz.sin() } else { zz.cos() };
                    (a * th.cos() + b * th.sin()) * vert
                })
                .sum()
        })
    };
    let v1 = synth(false);
    let v2 = synth(false);
    let t = synth(true);

    let s = symmetrize(&State::new(v1, v2, t, 0.0)?);
    let (v1, v2) = barotropic_project(&s.v1, &s.v2);
    let rms = |n: f64| n / grid.volume().sqrt();
    let sv = amplitude / rms(vector_l2(&[&v1, &v2])).max(f64::MIN_POSITIVE);
    let st = amplitude / rms(vector_l2(&[&s.t])).max(f64::MIN_POSITIVE);
    Ok(State { v1: v1.scale(sv), v2: v2.scale(sv), t: s.t.scale(st), time: 0.0 })
}

/// Fixed smooth direction in the invariant class with solenoidal vertical
/// mean, used to perturb twin runs:
/// `v = (cos 2 pi y (1 + cos(pi z/h)), sin 2 pi x cos(pi z/h))`,
/// `T = sin 2 pi x sin(pi z/h)`.
pub fn twin_perturbation(grid: &Arc<Grid>) -> State {
    let h = grid.h();
    let v1 = Field3::from_fn(grid, |_, y, z| (2.0 * PI * y).cos() * (1.0 + (PI * z / h).cos()));
    let v2 = Field3::from_fn(grid, |x, _, z| (2.0 * PI * x).sin() * (PI * z / h).cos());
    let t = Field3::from_fn(grid, |x, _, z| (2.0 * PI * x).sin() * (PI * z / h).sin());
    symmetrize(&State { v1, v2, t, time: 0.0 })
}
