//! Quick invariant suite run by `primeq selftest`.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::dynamics::{barotropic_divergence, rhs, SpectralState};
use crate::error::Result;
use crate::estimates::{energy_identity_residual, u_equation_residual};
use crate::fields::{vector_l2, Params, State};
use crate::grid::{spectral_derivative, Axis, Field3, Grid};
use crate::presets::random_state_in_h;
use crate::symmetry::symmetry_residual;
use crate::timestepper::{step, StepConfig};

use super::checkpoint;

#[derive(Clone, Debug, Default)]
pub struct SelftestOptions {
    pub n: usize,
    /// Replaces the dealiasing cutoff on every axis (fault injection).
    pub corrupt_dealias: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Item {
    pub name: &'static str,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
}

impl Item {
    fn below(name: &'static str, value: f64, tolerance: f64) -> Item {
        Item { name, passed: value < tolerance, value, tolerance }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {:<22} {:.3e} (tol {:.1e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.tolerance
        )
    }
}

/// `<advection, v> / (|v|^2 |grad v|)` for a state without buoyancy,
/// rotation, or diffusion; zero when the products are fully dealiased.
fn skew_defect(grid: &Arc<Grid>, seed: u64) -> Result<f64> {
    let modes = grid.dealias_cutoff().into_iter().min().expect("3 axes");
    let mut s = random_state_in_h(grid, seed, modes, 1.0)?;
    s.t = Field3::zeros(grid);
    let p = Params { h: grid.h(), f0: 0.0, nu_h: 0.0, nu_z: 0.0, kappa_h: 0.0, eps: 0.0 };
    let u = SpectralState::from_state(&s);
    let r = rhs(grid, &u, &p, false);
    let work: f64 = [(&r.v1, &u.v1), (&r.v2, &u.v2)]
        .iter()
        .map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x * y.conj()).re).sum::<f64>())
        .sum::<f64>()
        * grid.volume();
    let v = vector_l2(&[&s.v1, &s.v2]);
    let grad: f64 = [&s.v1, &s.v2]
        .iter()
        .flat_map(|f| Axis::ALL.map(|a| spectral_derivative(f, a, 1).expect("order 1").to_physical()))
        .map(|d| vector_l2(&[&d]).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(work.abs() / (v * v * grad).max(f64::MIN_POSITIVE))
}

pub fn run_items(opts: &SelftestOptions) -> Result<Vec<Item>> {
    let n = if opts.n == 0 { 16 } else { opts.n };
    let clean = Grid::new(n, n, n, 1.0)?;
    let grid = match opts.corrupt_dealias {
        Some(c) => clean.with_dealias_cutoff([c; 3]),
        None => clean.clone(),
    };
    let p = Params::default();
    let mut items = Vec::new();

    let f = Field3::from_fn(&clean, |x, y, z| (2.0 * PI * x).sin() * (4.0 * PI * y).cos() * (PI * z).cos());
    let exact = Field3::from_fn(&clean, |x, y, z| {
        2.0 * PI * (2.0 * PI * x).cos() * (4.0 * PI * y).cos() * (PI * z).cos()
    });
    let d = spectral_derivative(&f, Axis::X, 1)?.to_physical();
    items.push(Item::below("grid derivative", d.combine(1.0, &exact, -1.0).max_abs(), 1e-12));

    let modes = clean.dealias_cutoff().into_iter().min().expect("3 axes").min(3);
    let s = random_state_in_h(&clean, 7, modes, 1.0)?;
    items.push(Item::below("parity", symmetry_residual(&s), 1e-12));
    items.push(Item::below("constraint", barotropic_divergence(&s.v1, &s.v2), 1e-10));
    items.push(Item::below("skew-symmetry", skew_defect(&grid, 5)?, 1e-10));
    items.push(Item::below("energy identity", energy_identity_residual(&s, &p), 1e-8));
    items.push(Item::below("u-equation", u_equation_residual(&s, &p)?, 1e-9));

    let mode = State::new(
        Field3::zeros(&clean),
        Field3::from_fn(&clean, |x, _, _| (2.0 * PI * x).sin()),
        Field3::zeros(&clean),
        0.0,
    )?;
    let dt = 0.01;
    let decayed = step(&mode, &p, &StepConfig::default(), dt)?;
    let expect = mode.v2.scale((-4.0 * PI * PI * dt).exp());
    items.push(Item::below(
        "viscous decay",
        decayed.v2.combine(1.0, &expect, -1.0).max_abs() / expect.max_abs(),
        1e-12,
    ));

    let uniform = State::new(Field3::constant(&clean, 1.0), Field3::zeros(&clean), Field3::zeros(&clean), 0.0)?;
    let rot = Params { f0: 1.0, ..p };
    let mut s_rot = uniform.clone();
    for _ in 0..100 {
        s_rot = step(&s_rot, &rot, &StepConfig::default(), 0.01)?;
    }
    let err = (s_rot.v1.values()[0] - 1f64.cos()).abs() + (s_rot.v2.values()[0] + 1f64.sin()).abs();
    items.push(Item::below("inertial oscillation", err, 1e-7));

    let bytes = checkpoint::encode(&s, &p);
    let (back, q) = checkpoint::decode(&bytes)?;
    let same = checkpoint::encode(&back, &q) == bytes;
    items.push(Item { name: "checkpoint roundtrip", passed: same, value: 0.0, tolerance: 0.0 });

    Ok(items)
}

/// Prints one line per item; true when every item passed.
pub fn cmd_selftest(opts: &SelftestOptions) -> Result<bool> {
    let items = run_items(opts)?;
    for it in &items {
        println!("{}", it.line());
    }
    Ok(items.iter().all(|i| i.passed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_build_passes() {
        let items = run_items(&SelftestOptions { n: 16, corrupt_dealias: None }).unwrap();
        for it in &items {
            assert!(it.passed, "{}", it.line());
        }
    }

    #[test]
    fn corrupted_dealias_breaks_skew() {
        let items = run_items(&SelftestOptions { n: 16, corrupt_dealias: Some(7) }).unwrap();
        let skew = items.iter().find(|i| i.name == "skew-symmetry").unwrap();
        assert!(!skew.passed, "{}", skew.line());
    }
}
