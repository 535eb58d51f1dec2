//! Right-hand side of the reformulated hydrostatic system.
//!
//! Momentum:
//! `dv/dt = -(v.grad_H)v - w dz v - f0 k x v - grad_H(ps - int_{-h}^z T) + nu_h lap_H v + nu_z dz^2 v`
//!
//! Temperature:
//! `dT/dt = -v.grad_H T - w (dz T + 1/h) + kappa_h lap_H T + eps dz^2 T`
//!
//! with `w = -int_{-h}^z div_H v` and `ps` chosen so that the vertical mean of
//! `dv/dt` is horizontally divergence-free. Advection is evaluated in
//! convective form; every quadratic product is dealiased with the 2/3 rule.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{vector_l2, Params, State};
use crate::grid::{Axis, Field2, Field3, Grid, Representation};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Time derivatives of the prognostic fields and the surface pressure that
/// enforced the barotropic constraint.
#[derive(Clone, Debug)]
pub struct Tendency {
    pub dv1: Field3,
    pub dv2: Field3,
    pub dt: Field3,
    pub ps: Field2,
}

/// Coefficients of `(v1, v2, T)`.
#[derive(Clone, Debug)]
pub(crate) struct SpectralState {
    pub v1: Vec<Complex64>,
    pub v2: Vec<Complex64>,
    pub t: Vec<Complex64>,
}

impl SpectralState {
    pub fn from_state(s: &State) -> SpectralState {
        SpectralState {
            v1: s.v1.coefficients().into_owned(),
            v2: s.v2.coefficients().into_owned(),
            t: s.t.coefficients().into_owned(),
        }
    }

    pub fn into_state(self, grid: &Arc<Grid>, time: f64) -> State {
        State {
            v1: Field3::from_physical(grid, grid.backward(&self.v1)).expect("sizes match"),
            v2: Field3::from_physical(grid, grid.backward(&self.v2)).expect("sizes match"),
            t: Field3::from_physical(grid, grid.backward(&self.t)).expect("sizes match"),
            time,
        }
    }

    pub fn is_finite(&self) -> bool {
        [&self.v1, &self.v2, &self.t]
            .iter()
            .all(|f| f.iter().all(|c| c.re.is_finite() && c.im.is_finite()))
    }
}

/// Explicit right-hand side in coefficient space, plus the 2D coefficients of `ps`.
pub(crate) struct Rhs {
    pub v1: Vec<Complex64>,
    pub v2: Vec<Complex64>,
    pub t: Vec<Complex64>,
    pub ps: Vec<Complex64>,
}

fn derivative(grid: &Grid, c: &[Complex64], axis: Axis) -> Vec<Complex64> {
    let mut out = c.to_vec();
    grid.differentiate_in_place(&mut out, axis, 1);
    out
}

/// `a.b + c.d + e.f` pointwise, forward transformed and dealiased.
fn dealiased_sum_of_products(grid: &Grid, terms: [(&[f64], &[f64]); 3]) -> Vec<Complex64> {
    let n = grid.len();
    let mut prod = vec![0.0; n];
    for (a, b) in terms {
        for idx in 0..n {
            prod[idx] += a[idx] * b[idx];
        }
    }
    let mut c = grid.forward(&prod);
    grid.dealias_in_place(&mut c);
    c
}

/// Horizontal divergence of the vertical mean, as 2D coefficients.
fn mean_divergence(grid: &Grid, v1: &[Complex64], v2: &[Complex64]) -> Vec<Complex64> {
    let (nx, ny, nz) = (grid.nx(), grid.ny(), grid.nz());
    let mut out = vec![ZERO; nx * ny];
    for i in 0..nx {
        for j in 0..ny {
            let idx = (i * ny + j) * nz;
            out[i * ny + j] = grid.d1(Axis::X, i) * v1[idx] + grid.d1(Axis::Y, j) * v2[idx];
        }
    }
    out
}

/// Removes the horizontal gradient part of the vertical mean of `(a1, a2)`
/// in place and returns the potential `ps` with `a - grad_H ps` as result.
pub(crate) fn project_mean_in_place(
    grid: &Grid,
    a1: &mut [Complex64],
    a2: &mut [Complex64],
) -> Vec<Complex64> {
    let (nx, ny, nz) = (grid.nx(), grid.ny(), grid.nz());
    let mut ps = vec![ZERO; nx * ny];
    for i in 0..nx {
        let gx = grid.d1(Axis::X, i);
        for j in 0..ny {
            let gy = grid.d1(Axis::Y, j);
            let gg = gx * gx + gy * gy;
            if gg.norm() == 0.0 {
                continue;
            }
            let idx = (i * ny + j) * nz;
            let phi = (gx * a1[idx] + gy * a2[idx]) / gg;
            a1[idx] -= gx * phi;
            a2[idx] -= gy * phi;
            ps[i * ny + j] = phi;
        }
    }
    ps
}

/// Explicit tendency. With `diffusion = false` the linear viscous and
/// diffusive terms are left out (they are integrated exactly by the
/// timestepper), everything else is included.
pub(crate) fn rhs(grid: &Grid, s: &SpectralState, p: &Params, diffusion: bool) -> Rhs {
    let phys = |c: &[Complex64]| grid.backward(c);

    let v1 = phys(&s.v1);
    let v2 = phys(&s.v2);

    let v1x = phys(&derivative(grid, &s.v1, Axis::X));
    let v1y = phys(&derivative(grid, &s.v1, Axis::Y));
    let v1z = phys(&derivative(grid, &s.v1, Axis::Z));
    let v2x = phys(&derivative(grid, &s.v2, Axis::X));
    let v2y = phys(&derivative(grid, &s.v2, Axis::Y));
    let v2z = phys(&derivative(grid, &s.v2, Axis::Z));
    let tx = phys(&derivative(grid, &s.t, Axis::X));
    let ty = phys(&derivative(grid, &s.t, Axis::Y));
    let tz = phys(&derivative(grid, &s.t, Axis::Z));

    let mut div = derivative(grid, &s.v1, Axis::X);
    div.iter_mut().zip(derivative(grid, &s.v2, Axis::Y)).for_each(|(a, b)| *a += b);
    let mut w_hat = grid.antiderivative_periodic(&div);
    w_hat.iter_mut().for_each(|c| *c = -*c);
    let w = phys(&w_hat);

    let adv1 = dealiased_sum_of_products(grid, [(&v1, &v1x), (&v2, &v1y), (&w, &v1z)]);
    let adv2 = dealiased_sum_of_products(grid, [(&v1, &v2x), (&v2, &v2y), (&w, &v2z)]);
    let advt = dealiased_sum_of_products(grid, [(&v1, &tx), (&v2, &ty), (&w, &tz)]);

    // int_{-h}^z T; its horizontal gradient enters with a plus sign
    let buoy = grid.antiderivative_periodic(&s.t);

    let (nx, ny, nz) = (grid.nx(), grid.ny(), grid.nz());
    let inv_h = 1.0 / grid.h();
    let mut d1 = vec![ZERO; grid.len()];
    let mut d2 = vec![ZERO; grid.len()];
    let mut dt = vec![ZERO; grid.len()];
    for i in 0..nx {
        let gx = grid.d1(Axis::X, i);
        let xx = grid.d2(Axis::X, i);
        for j in 0..ny {
            let gy = grid.d1(Axis::Y, j);
            let lap_h = xx + grid.d2(Axis::Y, j);
            for k in 0..nz {
                let idx = (i * ny + j) * nz + k;
                let mut a = -adv1[idx] + p.f0 * s.v2[idx] + gx * buoy[idx];
                let mut b = -adv2[idx] - p.f0 * s.v1[idx] + gy * buoy[idx];
                let mut c = -advt[idx] - w_hat[idx] * inv_h;
                if diffusion {
                    let zz = grid.d2(Axis::Z, k);
                    let lv = p.nu_h * lap_h + p.nu_z * zz;
                    let lt = p.kappa_h * lap_h + p.eps * zz;
                    a += lv * s.v1[idx];
                    b += lv * s.v2[idx];
                    c += lt * s.t[idx];
                }
                d1[idx] = a;
                d2[idx] = b;
                dt[idx] = c;
            }
        }
    }
    let ps = project_mean_in_place(grid, &mut d1, &mut d2);
    Rhs { v1: d1, v2: d2, t: dt, ps }
}

/// `f0 k x v = f0 (-v2, v1)`.
pub fn coriolis(v1: &Field3, v2: &Field3, f0: f64) -> (Field3, Field3) {
    (v2.scale(-f0).to_physical(), v1.scale(f0).to_physical())
}

/// Solves `lap_H ps = rhs` on `M` with the zero-mean gauge.
pub fn solve_surface_pressure(rhs: &Field2) -> Result<Field2> {
    let grid = rhs.grid().clone();
    let mean = rhs.mean();
    let rms = rhs.l2();
    if mean.abs() > 1e-10 * (1.0 + rms) {
        return Err(Error::Solvability { mean });
    }
    let mut c = rhs.coefficients();
    let ny = grid.ny();
    for (idx, v) in c.iter_mut().enumerate() {
        let (i, j) = (idx / ny, idx % ny);
        let lap = grid.d2(Axis::X, i) + grid.d2(Axis::Y, j);
        *v = if lap == 0.0 { ZERO } else { *v / lap };
    }
    Ok(Field2::from_coefficients(&grid, &c))
}

/// Subtracts the horizontal gradient part of `vbar` from every level.
pub fn barotropic_project(v1: &Field3, v2: &Field3) -> (Field3, Field3) {
    let grid = v1.grid().clone();
    let mut a = v1.coefficients().into_owned();
    let mut b = v2.coefficients().into_owned();
    project_mean_in_place(&grid, &mut a, &mut b);
    let wrap = |c: Vec<Complex64>, like: &Field3| {
        let f = Field3::from_spectral(&grid, c).expect("sizes match");
        match like.representation() {
            Representation::Spectral => f,
            Representation::Physical => f.to_physical(),
        }
    };
    (wrap(a, v1), wrap(b, v2))
}

/// `|div_H vbar|_{L2(M)}`.
pub fn barotropic_divergence(v1: &Field3, v2: &Field3) -> f64 {
    let grid = v1.grid();
    let c = mean_divergence(grid, &v1.coefficients(), &v2.coefficients());
    Field2::from_coefficients(grid, &c).l2()
}

/// Tolerance of the barotropic constraint relative to `1 + |v|_2`.
pub const CONSTRAINT_TOLERANCE: f64 = 1e-10;

pub(crate) fn check_constraint(s: &State) -> Result<()> {
    let divergence = barotropic_divergence(&s.v1, &s.v2);
    let bound = CONSTRAINT_TOLERANCE * (1.0 + vector_l2(&[&s.v1, &s.v2]));
    if divergence > bound {
        return Err(Error::Constraint { divergence, bound });
    }
    Ok(())
}

/// Full tendency including the linear viscous and diffusive terms.
pub fn tendency(s: &State, p: &Params) -> Result<Tendency> {
    p.validate()?;
    p.check_grid(s.grid())?;
    check_constraint(s)?;
    let grid = s.grid().clone();
    let r = rhs(&grid, &SpectralState::from_state(s), p, true);
    let wrap = |c: Vec<Complex64>| Field3::from_spectral(&grid, c).expect("sizes match");
    Ok(Tendency {
        ps: Field2::from_coefficients(&grid, &r.ps),
        dv1: wrap(r.v1),
        dv2: wrap(r.v2),
        dt: wrap(r.t),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{diagnose_w, divergence_h};
    use crate::presets::random_state_in_h;
    use crate::symmetry::{parity_part, Parity};
    use std::f64::consts::PI;

    fn grid() -> Arc<Grid> {
        Grid::new(16, 16, 16, 1.0).unwrap()
    }

    fn params(f0: f64) -> Params {
        Params { f0, ..Params::default() }
    }

    #[test]
    fn coriolis_examples() {
        let g = grid();
        let one = Field3::constant(&g, 1.0);
        let zero = Field3::zeros(&g);
        let (a, b) = coriolis(&one, &zero, 2.0);
        assert!(a.max_abs() == 0.0 && (b.values()[7] - 2.0).abs() == 0.0);
        let (a, b) = coriolis(&zero, &one, 1.0);
        assert!((a.values()[3] + 1.0).abs() == 0.0 && b.max_abs() == 0.0);
        let (a, b) = coriolis(&one, &one, 0.0);
        assert!(a.max_abs() == 0.0 && b.max_abs() == 0.0);
    }

    #[test]
    fn surface_pressure_examples() {
        let g = grid();
        let k2 = 4.0 * PI * PI;
        let rhs = Field2::from_fn(&g, |x, _| -k2 * (2.0 * PI * x).cos());
        let ps = solve_surface_pressure(&rhs).unwrap();
        let exact = Field2::from_fn(&g, |x, _| (2.0 * PI * x).cos());
        for (a, b) in ps.values().iter().zip(exact.values()) {
            assert_close!(*a, *b, 1e-14);
        }
        assert!(solve_surface_pressure(&Field2::zeros(&g)).unwrap().max_abs() == 0.0);
        let rhs = Field2::from_fn(&g, |x, y| (2.0 * PI * x).cos() + (2.0 * PI * y).cos());
        let ps = solve_surface_pressure(&rhs).unwrap();
        for (a, b) in ps.values().iter().zip(rhs.values()) {
            assert_close!(*a, -b / k2, 1e-15);
        }
        let bad = Field2::from_fn(&g, |x, _| 1.0 + (2.0 * PI * x).cos());
        assert!(matches!(solve_surface_pressure(&bad), Err(Error::Solvability { .. })));
    }

    #[test]
    fn barotropic_project_examples() {
        let g = grid();
        let v1 = Field3::from_fn(&g, |_, y, _| (2.0 * PI * y).sin());
        let zero = Field3::zeros(&g);
        let (a, b) = barotropic_project(&v1, &zero);
        assert!(a.combine(1.0, &v1, -1.0).max_abs() < 1e-14 && b.max_abs() < 1e-14);

        // pure gradient of cos(2 pi x): (-2 pi sin(2 pi x), 0), z-uniform
        let grad = Field3::from_fn(&g, |x, _, _| -2.0 * PI * (2.0 * PI * x).sin());
        let (a, b) = barotropic_project(&grad, &zero);
        assert!(a.max_abs() < 1e-13 && b.max_abs() < 1e-13);

        let (a, b) = barotropic_project(&zero, &zero);
        assert!(a.max_abs() == 0.0 && b.max_abs() == 0.0);
    }

    #[test]
    fn projection_matches_helmholtz_oracle() {
        // Oracle: vbar = grad(phi) + curl(psi) with known phi, psi; projection keeps curl(psi).
        let g = grid();
        let tau = 2.0 * PI;
        let phi_x = |x: f64, y: f64| tau * (tau * x).cos() * (2.0 * tau * y).sin();
        let phi_y = |x: f64, y: f64| 2.0 * tau * (tau * x).sin() * (2.0 * tau * y).cos();
        let psi_y = |x: f64, y: f64| tau * (tau * (x + y)).cos();
        let psi_x = |x: f64, y: f64| tau * (tau * (x + y)).cos();
        let v1 = Field3::from_fn(&g, |x, y, z| phi_x(x, y) + psi_y(x, y) + (PI * z).cos());
        let v2 = Field3::from_fn(&g, |x, y, _| phi_y(x, y) - psi_x(x, y));
        let (a, b) = barotropic_project(&v1, &v2);
        let e1 = Field3::from_fn(&g, |x, y, z| psi_y(x, y) + (PI * z).cos());
        let e2 = Field3::from_fn(&g, |x, y, _| -psi_x(x, y));
        assert!(a.combine(1.0, &e1, -1.0).max_abs() < 1e-12);
        assert!(b.combine(1.0, &e2, -1.0).max_abs() < 1e-12);
        assert!(barotropic_divergence(&a, &b) < 1e-12);
    }

    #[test]
    fn tendency_examples() {
        let g = grid();
        let zero = State::zeros(&g);
        let r = tendency(&zero, &params(1.0)).unwrap();
        assert!(r.dv1.max_abs() == 0.0 && r.dv2.max_abs() == 0.0 && r.dt.max_abs() == 0.0);

        let inertial = State::new(
            Field3::constant(&g, 1.0),
            Field3::zeros(&g),
            Field3::zeros(&g),
            0.0,
        )
        .unwrap();
        let r = tendency(&inertial, &params(1.0)).unwrap();
        let dv2 = r.dv2.to_physical();
        assert!(r.dv1.max_abs() < 1e-15);
        assert!(dv2.values().iter().all(|v| (v + 1.0).abs() < 1e-15));
        assert!(r.dt.max_abs() < 1e-15);

        let decay = State::new(
            Field3::zeros(&g),
            Field3::from_fn(&g, |x, _, _| (2.0 * PI * x).sin()),
            Field3::zeros(&g),
            0.0,
        )
        .unwrap();
        let r = tendency(&decay, &params(0.0)).unwrap();
        let expect = decay.v2.scale(-4.0 * PI * PI);
        assert!(r.dv2.to_physical().combine(1.0, &expect, -1.0).max_abs() < 1e-12);
        assert!(r.dv1.max_abs() < 1e-13 && r.dt.max_abs() < 1e-13);

        let steady = State::new(
            Field3::zeros(&g),
            Field3::zeros(&g),
            Field3::from_fn(&g, |_, _, z| (PI * z).sin()),
            0.0,
        )
        .unwrap();
        let r = tendency(&steady, &params(0.7)).unwrap();
        assert!(r.dv1.max_abs() < 1e-15 && r.dv2.max_abs() < 1e-15 && r.dt.max_abs() < 1e-15);
    }

    #[test]
    fn tendency_rejects_constraint_violation() {
        let g = grid();
        let s = State::new(
            Field3::from_fn(&g, |x, _, _| (2.0 * PI * x).sin()),
            Field3::zeros(&g),
            Field3::zeros(&g),
            0.0,
        )
        .unwrap();
        assert!(matches!(tendency(&s, &Params::default()), Err(Error::Constraint { .. })));
    }

    #[test]
    fn vertical_mean_of_tendency_is_solenoidal() {
        let g = grid();
        for seed in 0..4 {
            let s = random_state_in_h(&g, seed, 3, 1.0).unwrap();
            let r = tendency(&s, &params(0.5)).unwrap();
            let scale = 1.0 + r.dv1.to_physical().max_abs();
            assert!(barotropic_divergence(&r.dv1, &r.dv2) < 1e-10 * scale);
        }
    }

    #[test]
    fn advection_coriolis_and_pressure_do_no_work() {
        let g = grid();
        let p = Params { f0: 1.3, nu_h: 0.0, nu_z: 0.0, kappa_h: 0.0, ..Params::default() };
        for seed in 0..5 {
            let s = random_state_in_h(&g, seed, 3, 1.0).unwrap();
            // zero temperature isolates advection, rotation and pressure
            let s = State { t: Field3::zeros(&g), ..s };
            let r = tendency(&s, &p).unwrap();
            let work = r.dv1.to_physical().inner(&s.v1) + r.dv2.to_physical().inner(&s.v2);
            let scale = r.dv1.to_physical().inner(&r.dv1.to_physical()).sqrt() * s.l2();
            assert!(work.abs() < 1e-12 * scale, "seed {seed}: work {work:e}");

            let (c1, c2) = coriolis(&s.v1, &s.v2, 1.3);
            assert!((c1.inner(&s.v1) + c2.inner(&s.v2)).abs() < 1e-14 * s.l2().powi(2));

            let ps = r.ps.clone();
            let grad = |axis| {
                crate::grid::spectral_derivative(&crate::fields::broadcast(&ps), axis, 1).unwrap()
            };
            let pw = grad(Axis::X).inner(&s.v1) + grad(Axis::Y).inner(&s.v2);
            assert!(pw.abs() < 1e-10 * (1.0 + ps.max_abs() * s.l2()));
        }
    }

    #[test]
    fn tendency_preserves_parity() {
        let g = grid();
        let p = Params { f0: 0.8, eps: 0.1, ..Params::default() };
        for seed in 0..3 {
            let s = random_state_in_h(&g, seed, 3, 1.0).unwrap();
            let r = tendency(&s, &p).unwrap();
            let (dv1, dv2, dt) = (r.dv1.to_physical(), r.dv2.to_physical(), r.dt.to_physical());
            let scale = dv1.max_abs() + dv2.max_abs() + dt.max_abs();
            let odd_v = parity_part(&dv1, Parity::Odd).max_abs() + parity_part(&dv2, Parity::Odd).max_abs();
            let even_t = parity_part(&dt, Parity::Even).max_abs();
            assert!(odd_v + even_t < 1e-11 * scale, "seed {seed}: {odd_v:e} {even_t:e}");
        }
    }

    #[test]
    fn diagnosed_w_matches_continuity() {
        let g = grid();
        let s = random_state_in_h(&g, 11, 3, 1.0).unwrap();
        let w = diagnose_w(&s.v1, &s.v2);
        let wz = crate::grid::spectral_derivative(&w, Axis::Z, 1).unwrap();
        let div = divergence_h(&s.v1, &s.v2).to_physical();
        assert!(wz.combine(1.0, &div, 1.0).max_abs() < 1e-11 * div.max_abs());
    }
}
