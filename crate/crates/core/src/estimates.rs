//! Energy budget, stability weight, Gronwall envelopes, anisotropic
//! inequality ratios and the monitored norm panel.

use num_complex::Complex64;

use crate::dynamics::{rhs, SpectralState};
use crate::error::{Error, Result};
use crate::fields::{
    diagnose_w, first_symbol_sq, second_symbol_sq, vector_l2, vector_lp, weighted_energy,
    DiagRecord, Params, State,
};
use crate::grid::{spectral_derivative, vertical_antiderivative, Axis, Field3, Grid};
use crate::symmetry::symmetry_residual;

/// `(a, b)` pairs of the full Hessian, mixed entries counted twice.
const HESSIAN: [(Axis, Axis); 9] = [
    (Axis::X, Axis::X),
    (Axis::X, Axis::Y),
    (Axis::X, Axis::Z),
    (Axis::Y, Axis::X),
    (Axis::Y, Axis::Y),
    (Axis::Y, Axis::Z),
    (Axis::Z, Axis::X),
    (Axis::Z, Axis::Y),
    (Axis::Z, Axis::Z),
];

fn coeffs(f: &Field3) -> Vec<Complex64> {
    f.coefficients().into_owned()
}

/// `sqrt(sum_c int |L c|^2)` where `weight` is the squared symbol of `L`.
fn spectral_norm(grid: &Grid, comps: &[&[Complex64]], weight: impl Fn(usize, usize, usize) -> f64) -> f64 {
    comps.iter().map(|c| weighted_energy(grid, c, &weight)).sum::<f64>().sqrt()
}

fn grad_sq(grid: &Grid, axes: &[Axis], i: usize, j: usize, k: usize) -> f64 {
    axes.iter().map(|&a| first_symbol_sq(grid, a, i, j, k)).sum()
}

fn lap_h(grid: &Grid, i: usize, j: usize) -> f64 {
    grid.d2(Axis::X, i) + grid.d2(Axis::Y, j)
}

fn lap(grid: &Grid, i: usize, j: usize, k: usize) -> f64 {
    lap_h(grid, i, j) + grid.d2(Axis::Z, k)
}

fn deriv(grid: &Grid, c: &[Complex64], axis: Axis) -> Vec<Complex64> {
    let mut out = c.to_vec();
    grid.differentiate_in_place(&mut out, axis, 1);
    out
}

/// `int a . b` over the box by Parseval.
fn pairing(grid: &Grid, a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x * y.conj()).re).sum::<f64>() * grid.volume()
}

/// `(LHS, RHS)` of the energy identity
///
/// ```text
/// <(dv/dt, dT/dt), (v, T)> + nu_h |grad_H v|^2 + nu_z |dz v|^2 + kappa_h |grad_H T|^2 + eps |dz T|^2
///     = int grad_H(int_{-h}^z T) . v + (1/h)(int_{-h}^z div_H v) T
/// ```
///
/// The time-derivative term uses the instantaneous tendency; the right side is
/// evaluated by collocation quadrature in physical space.
pub fn energy_budget(s: &State, p: &Params) -> (f64, f64) {
    let grid = s.grid().clone();
    let u = SpectralState::from_state(s);
    let r = rhs(&grid, &u, p, true);

    let mut lhs = pairing(&grid, &r.v1, &u.v1) + pairing(&grid, &r.v2, &u.v2) + pairing(&grid, &r.t, &u.t);
    let g = &grid;
    let vh = spectral_norm(g, &[&u.v1, &u.v2], |i, j, k| grad_sq(g, &Axis::HORIZONTAL, i, j, k));
    let vz = spectral_norm(g, &[&u.v1, &u.v2], |i, j, k| grad_sq(g, &[Axis::Z], i, j, k));
    let th = spectral_norm(g, &[&u.t], |i, j, k| grad_sq(g, &Axis::HORIZONTAL, i, j, k));
    let tz = spectral_norm(g, &[&u.t], |i, j, k| grad_sq(g, &[Axis::Z], i, j, k));
    lhs += p.nu_h * vh * vh + p.nu_z * vz * vz + p.kappa_h * th * th + p.eps * tz * tz;

    let b = vertical_antiderivative(&s.t);
    let bx = spectral_derivative(&b, Axis::X, 1).expect("order 1").to_physical();
    let by = spectral_derivative(&b, Axis::Y, 1).expect("order 1").to_physical();
    let w = diagnose_w(&s.v1, &s.v2).to_physical();
    let (v1, v2, t) = (s.v1.values(), s.v2.values(), s.t.values());
    let (bx, by, w) = (bx.values(), by.values(), w.values());
    let inv_h = 1.0 / grid.h();
    let rhs_sum: f64 = (0..grid.len())
        .map(|n| bx[n] * v1[n] + by[n] * v2[n] - inv_h * w[n] * t[n])
        .sum();
    (lhs, rhs_sum * grid.cell_volume())
}

/// `|LHS - RHS| / (1 + |LHS| + |RHS|)` of [`energy_budget`].
pub fn energy_identity_residual(s: &State, p: &Params) -> f64 {
    let (l, r) = energy_budget(s, p);
    (l - r).abs() / (1.0 + l.abs() + r.abs())
}

/// Stability weight of the second solution `s2`:
///
/// ```text
/// 1 + |v|^4 + |dz v|^4 + |v|^2 |grad_H v|^2 + |dz v|^2 |grad_H dz v|^2
///   + |T|^4 + |dz T|^4 + |T|^2 |grad_H T|^2 + |dz T|^2 |grad_H dz T|^2
/// ```
///
/// with all norms in `L2` over the box.
pub fn phi(s2: &State) -> f64 {
    let grid = s2.grid().clone();
    let g = &grid;
    let v = [coeffs(&s2.v1), coeffs(&s2.v2)];
    let t = [coeffs(&s2.t)];
    let block = |c: &[Vec<Complex64>]| {
        let refs: Vec<&[Complex64]> = c.iter().map(|x| x.as_slice()).collect();
        let n0 = spectral_norm(g, &refs, |_, _, _| 1.0);
        let nz = spectral_norm(g, &refs, |i, j, k| grad_sq(g, &[Axis::Z], i, j, k));
        let nh = spectral_norm(g, &refs, |i, j, k| grad_sq(g, &Axis::HORIZONTAL, i, j, k));
        let nhz = spectral_norm(g, &refs, |i, j, k| {
            grad_sq(g, &[Axis::Z], i, j, k) * grad_sq(g, &Axis::HORIZONTAL, i, j, k)
        });
        n0.powi(4) + nz.powi(4) + n0 * n0 * nh * nh + nz * nz * nhz * nhz
    };
    1.0 + block(&v) + block(&t)
}

/// `C exp(C int_0^t phi) d0` at every sample, with the trapezoidal rule for
/// the integral.
pub fn gronwall_envelope(times: &[f64], phi: &[f64], c: f64, d0: f64) -> Result<Vec<f64>> {
    if times.is_empty() {
        return Err(Error::Precondition("empty phi series".into()));
    }
    if times.len() != phi.len() {
        return Err(Error::Precondition(format!(
            "{} times but {} phi samples",
            times.len(),
            phi.len()
        )));
    }
    if !(c > 0.0) {
        return Err(Error::Precondition(format!("C = {c} must be positive")));
    }
    let mut integral = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for n in 0..times.len() {
        if n > 0 {
            integral += 0.5 * (times[n] - times[n - 1]) * (phi[n] + phi[n - 1]);
        }
        out.push(c * (c * integral).exp() * d0);
    }
    Ok(out)
}

/// Exponents `k` tried when fitting `C = 2^k`.
pub const GRONWALL_EXPONENTS: std::ops::RangeInclusive<i32> = -20..=60;

/// Smallest `C = 2^k` whose envelope dominates `measured` at every sample;
/// infinite when none does.
pub fn fit_gronwall_constant(times: &[f64], phi: &[f64], measured: &[f64]) -> Result<f64> {
    if measured.len() != times.len() {
        return Err(Error::Precondition("measured series length differs from times".into()));
    }
    let d0 = *measured.first().ok_or_else(|| Error::Precondition("empty series".into()))?;
    for k in GRONWALL_EXPONENTS {
        let c = 2f64.powi(k);
        let env = gronwall_envelope(times, phi, c, d0)?;
        if env.iter().zip(measured).all(|(e, d)| e >= d) {
            return Ok(c);
        }
    }
    Ok(f64::INFINITY)
}

/// Measured squared distance of two trajectories next to its fitted envelope.
#[derive(Clone, Debug, PartialEq)]
pub struct GronwallReport {
    pub d0: f64,
    pub times: Vec<f64>,
    pub measured: Vec<f64>,
    pub phi: Vec<f64>,
    pub envelope: Vec<f64>,
    pub c: f64,
}

impl GronwallReport {
    pub fn fit(times: Vec<f64>, phi: Vec<f64>, measured: Vec<f64>) -> Result<GronwallReport> {
        let c = fit_gronwall_constant(&times, &phi, &measured)?;
        let d0 = measured[0];
        let envelope = if c.is_finite() {
            gronwall_envelope(&times, &phi, c, d0)?
        } else {
            vec![f64::INFINITY; times.len()]
        };
        Ok(GronwallReport { d0, times, measured, phi, envelope, c })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InequalityVariant {
    /// `|f|^(1/2) (|f|^(1/2) + |grad_H f|^(1/2)) |g| |w|^(1/2) (|w|^(1/2) + |grad_H w|^(1/2))`
    FirstForm,
    /// `|f| |g|^(1/2) (|g|^(1/2) + |grad_H g|^(1/2)) |w|^(1/2) (|w|^(1/2) + |grad_H w|^(1/2))`
    SecondForm,
    /// `|grad_H v|_4^2` against `|v|_6 |grad_H grad v|^(1/2) |grad_H lap_H v|^(1/2)`,
    /// with `v = (f, g)`; `w` is ignored.
    Interpolation,
}

impl InequalityVariant {
    pub fn name(self) -> &'static str {
        match self {
            InequalityVariant::FirstForm => "first",
            InequalityVariant::SecondForm => "second",
            InequalityVariant::Interpolation => "interpolation",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InequalityReport {
    pub lhs: f64,
    /// Right side with constant 1.
    pub rhs_unit: f64,
    /// `lhs / rhs_unit`, 0 when `lhs` is 0.
    pub ratio: f64,
    pub variant: InequalityVariant,
}

fn l2_and_grad_h(f: &Field3) -> (f64, f64) {
    let grid = f.grid();
    let c = coeffs(f);
    (
        spectral_norm(grid, &[&c], |_, _, _| 1.0),
        spectral_norm(grid, &[&c], |i, j, k| grad_sq(grid, &Axis::HORIZONTAL, i, j, k)),
    )
}

/// Measured constant of the two trilinear bounds on
/// `int_M (int f dz)(int g w dz)` or of the interpolation bound on `grad_H v`.
pub fn inequality_ratio(f: &Field3, g: &Field3, w: &Field3, variant: InequalityVariant) -> Result<InequalityReport> {
    let grid = f.grid().clone();
    if *g.grid() != grid || *w.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let (lhs, rhs_unit) = match variant {
        InequalityVariant::FirstForm | InequalityVariant::SecondForm => {
            let nz = grid.nz();
            let depth = 2.0 * grid.h();
            let (fv, gv, wv) = (f.values(), g.values(), w.values());
            let mut pairing = 0.0;
            for col in 0..grid.len2() {
                let r = col * nz..(col + 1) * nz;
                let fi: f64 = fv[r.clone()].iter().sum::<f64>() * depth / nz as f64;
                let gi: f64 =
                    gv[r.clone()].iter().zip(&wv[r]).map(|(a, b)| a * b).sum::<f64>() * depth / nz as f64;
                pairing += fi * gi;
            }
            let lhs = (pairing / grid.len2() as f64).abs();
            let (f0, f1) = l2_and_grad_h(f);
            let (g0, g1) = l2_and_grad_h(g);
            let (w0, w1) = l2_and_grad_h(w);
            let soft = |a: f64, b: f64| a.sqrt() * (a.sqrt() + b.sqrt());
            let rhs = match variant {
                InequalityVariant::FirstForm => soft(f0, f1) * g0 * soft(w0, w1),
                _ => f0 * soft(g0, g1) * soft(w0, w1),
            };
            (lhs, rhs)
        }
        InequalityVariant::Interpolation => {
            let grads: Vec<Field3> = [f, g]
                .iter()
                .flat_map(|c| {
                    Axis::HORIZONTAL
                        .iter()
                        .map(move |&a| spectral_derivative(c, a, 1).expect("order 1").to_physical())
                })
                .collect();
            let refs: Vec<&Field3> = grads.iter().collect();
            let lhs = vector_lp(&refs, 4.0).powi(2);
            let v6 = vector_lp(&[f, g], 6.0);
            let (cf, cg) = (coeffs(f), coeffs(g));
            let gg = &grid;
            let hess_h = spectral_norm(gg, &[&cf, &cg], |i, j, k| {
                HESSIAN
                    .iter()
                    .filter(|(a, _)| *a != Axis::Z)
                    .map(|&(a, b)| second_symbol_sq(gg, a, b, i, j, k))
                    .sum()
            });
            let third = spectral_norm(gg, &[&cf, &cg], |i, j, k| {
                grad_sq(gg, &Axis::HORIZONTAL, i, j, k) * lap_h(gg, i, j).powi(2)
            });
            (lhs, v6 * hess_h.sqrt() * third.sqrt())
        }
    };
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs_unit };
    Ok(InequalityReport { lhs, rhs_unit, ratio, variant })
}

/// Relative mismatch between `dz` of the momentum tendency and the evolution
/// law of `u = dz v`:
///
/// ```text
/// du/dt = nu lap u - (v.grad_H)u - w dz u - (u.grad_H)v + (div_H v)u - f0 k x u + grad_H T
/// ```
///
/// Only defined for isotropic viscosity.
pub fn u_equation_residual(s: &State, p: &Params) -> Result<f64> {
    if p.nu_h != p.nu_z {
        return Err(Error::UnsupportedConfig(format!(
            "u-equation needs nu_h = nu_z, got {} and {}",
            p.nu_h, p.nu_z
        )));
    }
    Ok(u_equation_residual_anisotropic(s, p))
}

/// Same check with the viscous term `nu_h lap_H u + nu_z dz^2 u`, usable for
/// any viscosity pair.
pub fn u_equation_residual_anisotropic(s: &State, p: &Params) -> f64 {
    let grid = s.grid().clone();
    let g = &grid;
    let st = SpectralState::from_state(s);
    let r = rhs(g, &st, p, true);
    let lhs = [deriv(g, &r.v1, Axis::Z), deriv(g, &r.v2, Axis::Z)];

    let phys = |c: &[Complex64]| g.backward(c);
    let v = [&st.v1, &st.v2];
    let u: [Vec<Complex64>; 2] = [deriv(g, &st.v1, Axis::Z), deriv(g, &st.v2, Axis::Z)];
    let vp = [phys(v[0]), phys(v[1])];
    let up = [phys(&u[0]), phys(&u[1])];
    let mut div = deriv(g, &st.v1, Axis::X);
    div.iter_mut().zip(deriv(g, &st.v2, Axis::Y)).for_each(|(a, b)| *a += b);
    let mut w_hat = g.antiderivative_periodic(&div);
    w_hat.iter_mut().for_each(|c| *c = -*c);
    let (divp, wp) = (phys(&div), phys(&w_hat));

    let mut out = Vec::with_capacity(2);
    for c in 0..2 {
        let ux = phys(&deriv(g, &u[c], Axis::X));
        let uy = phys(&deriv(g, &u[c], Axis::Y));
        let uz = phys(&deriv(g, &u[c], Axis::Z));
        let vx = phys(&deriv(g, v[c], Axis::X));
        let vy = phys(&deriv(g, v[c], Axis::Y));
        let prod: Vec<f64> = (0..g.len())
            .map(|n| {
                -(vp[0][n] * ux[n] + vp[1][n] * uy[n]) - wp[n] * uz[n]
                    - (up[0][n] * vx[n] + up[1][n] * vy[n])
                    + divp[n] * up[c][n]
            })
            .collect();
        let mut a = g.forward(&prod);
        g.dealias_in_place(&mut a);
        let grad_t = deriv(g, &st.t, if c == 0 { Axis::X } else { Axis::Y });
        let (nx, ny, nz) = (g.nx(), g.ny(), g.nz());
        for i in 0..nx {
            for j in 0..ny {
                let lh = lap_h(g, i, j);
                for k in 0..nz {
                    let n = (i * ny + j) * nz + k;
                    let visc = p.nu_h * lh + p.nu_z * g.d2(Axis::Z, k);
                    // -f0 k x u = f0 (u2, -u1)
                    let cor = if c == 0 { p.f0 * u[1][n] } else { -p.f0 * u[0][n] };
                    a[n] += visc * u[c][n] + cor + grad_t[n];
                }
            }
        }
        out.push(a);
    }

    let diff: Vec<Vec<Complex64>> = (0..2)
        .map(|c| lhs[c].iter().zip(&out[c]).map(|(x, y)| x - y).collect())
        .collect();
    let num = spectral_norm(g, &[&diff[0], &diff[1]], |_, _, _| 1.0);
    let a = spectral_norm(g, &[&lhs[0], &lhs[1]], |_, _, _| 1.0);
    let b = spectral_norm(g, &[&out[0], &out[1]], |_, _, _| 1.0);
    let scale = a.max(b);
    if scale == 0.0 {
        0.0
    } else {
        num / scale
    }
}

/// Every monitored norm of `s`, plus the energy, symmetry and u-equation
/// residuals. The u-equation residual uses the anisotropic form so it is
/// defined for every viscosity pair.
pub fn norm_panel(s: &State, p: &Params) -> DiagRecord {
    let grid = s.grid().clone();
    let g = &grid;
    let v1 = coeffs(&s.v1);
    let v2 = coeffs(&s.v2);
    let t = coeffs(&s.t);
    let v: [&[Complex64]; 2] = [&v1, &v2];
    let mean_only = |k: usize| if k == 0 { 1.0 } else { 0.0 };
    let area_norm = (2.0 * g.h()).sqrt();

    let dz1 = spectral_derivative(&s.v1, Axis::Z, 1).expect("order 1").to_physical();
    let dz2 = spectral_derivative(&s.v2, Axis::Z, 1).expect("order 1").to_physical();
    let kz2 = |k: usize| grad_sq(g, &[Axis::Z], 0, 0, k);

    DiagRecord {
        time: s.time,
        l2_v: vector_l2(&[&s.v1, &s.v2]),
        l6_v: vector_lp(&[&s.v1, &s.v2], 6.0),
        linf_t: s.t.max_abs(),
        l2_t: vector_l2(&[&s.t]),
        l2_grad_v: spectral_norm(g, &v, |i, j, k| grad_sq(g, &Axis::ALL, i, j, k)),
        l2_grad_h_t: spectral_norm(g, &[&t], |i, j, k| grad_sq(g, &Axis::HORIZONTAL, i, j, k)),
        l2_grad_h_vbar: spectral_norm(g, &v, |i, j, k| {
            mean_only(k) * grad_sq(g, &Axis::HORIZONTAL, i, j, k)
        }) / area_norm,
        l2_lapl_h_vbar: spectral_norm(g, &v, |i, j, k| mean_only(k) * lap_h(g, i, j).powi(2)) / area_norm,
        l6_dz_v: vector_lp(&[&dz1, &dz2], 6.0),
        l2_grad_u: spectral_norm(g, &v, |i, j, k| kz2(k) * grad_sq(g, &Axis::ALL, i, j, k)),
        l2_lapl2_u: spectral_norm(g, &v, |i, j, k| {
            kz2(k) * HESSIAN.iter().map(|&(a, b)| second_symbol_sq(g, a, b, i, j, k)).sum::<f64>()
        }),
        l2_lapl_h_v: spectral_norm(g, &v, |i, j, _| lap_h(g, i, j).powi(2)),
        l2_lapl_t: spectral_norm(g, &[&t], |i, j, k| lap(g, i, j, k).powi(2)),
        energy_residual: energy_identity_residual(s, p),
        symmetry_residual: symmetry_residual(s),
        u_eq_residual: u_equation_residual_anisotropic(s, p),
    }
}
