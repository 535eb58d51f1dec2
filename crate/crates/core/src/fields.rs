//! Prognostic state, physical parameters, diagnosed `w` and pressure, and the
//! norms monitored during a run.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{vertical_antiderivative, Axis, Field2, Field3, Grid};

/// Prognostic snapshot `(v1, v2, T)` at `time`.
#[derive(Clone, Debug)]
pub struct State {
    pub v1: Field3,
    pub v2: Field3,
    pub t: Field3,
    pub time: f64,
}

fn same_grid(a: &Arc<Grid>, b: &Arc<Grid>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl State {
    pub fn new(v1: Field3, v2: Field3, t: Field3, time: f64) -> Result<State> {
        if !same_grid(v1.grid(), v2.grid()) || !same_grid(v1.grid(), t.grid()) {
            return Err(Error::GridMismatch);
        }
        Ok(State { v1, v2, t, time })
    }

    pub fn zeros(grid: &Arc<Grid>) -> State {
        State {
            v1: Field3::zeros(grid),
            v2: Field3::zeros(grid),
            t: Field3::zeros(grid),
            time: 0.0,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.v1.grid()
    }

    /// All three fields in physical form.
    pub fn to_physical(&self) -> State {
        State {
            v1: self.v1.to_physical(),
            v2: self.v2.to_physical(),
            t: self.t.to_physical(),
            time: self.time,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.v1.is_finite() && self.v2.is_finite() && self.t.is_finite()
    }

    /// `a*self + b*other` field by field; time is taken from `self`.
    pub fn combine(&self, a: f64, other: &State, b: f64) -> State {
        State {
            v1: self.v1.combine(a, &other.v1, b),
            v2: self.v2.combine(a, &other.v2, b),
            t: self.t.combine(a, &other.t, b),
            time: self.time,
        }
    }

    /// `sqrt(|v|_2^2 + |T|_2^2)`.
    pub fn l2(&self) -> f64 {
        (l2_sq(&self.v1) + l2_sq(&self.v2) + l2_sq(&self.t)).sqrt()
    }

    /// `|v|_{H2}^2 + |T|_{H2}^2`, the quantity whose blow-up ends a strong solution.
    pub fn h2_sq(&self) -> f64 {
        h2_sq(&self.v1) + h2_sq(&self.v2) + h2_sq(&self.t)
    }
}

/// Physical and regularization coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Params {
    pub h: f64,
    pub f0: f64,
    pub nu_h: f64,
    pub nu_z: f64,
    pub kappa_h: f64,
    pub eps: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params { h: 1.0, f0: 0.0, nu_h: 1.0, nu_z: 1.0, kappa_h: 1.0, eps: 0.0 }
    }
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::Config(format!("h = {} must be positive", self.h)));
        }
        for (name, v) in [
            ("nu_h", self.nu_h),
            ("nu_z", self.nu_z),
            ("kappa_h", self.kappa_h),
            ("eps", self.eps),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        if !self.f0.is_finite() {
            return Err(Error::Config(format!("f0 = {} must be finite", self.f0)));
        }
        Ok(())
    }

    pub(crate) fn check_grid(&self, grid: &Grid) -> Result<()> {
        if (self.h - grid.h()).abs() > 1e-14 * grid.h() {
            return Err(Error::Config(format!(
                "params.h = {} differs from grid half-height {}",
                self.h,
                grid.h()
            )));
        }
        Ok(())
    }
}

/// One row of monitored quantities. Column order is fixed by [`DiagRecord::COLUMNS`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DiagRecord {
    pub time: f64,
    pub l2_v: f64,
    pub l6_v: f64,
    pub linf_t: f64,
    pub l2_t: f64,
    pub l2_grad_v: f64,
    pub l2_grad_h_t: f64,
    pub l2_grad_h_vbar: f64,
    pub l2_lapl_h_vbar: f64,
    pub l6_dz_v: f64,
    pub l2_grad_u: f64,
    pub l2_lapl2_u: f64,
    pub l2_lapl_h_v: f64,
    pub l2_lapl_t: f64,
    pub energy_residual: f64,
    pub symmetry_residual: f64,
    pub u_eq_residual: f64,
}

impl DiagRecord {
    pub const COLUMNS: [&'static str; 17] = [
        "time",
        "L2_v",
        "L6_v",
        "Linf_T",
        "L2_T",
        "L2_grad_v",
        "L2_gradH_T",
        "L2_gradH_vbar",
        "L2_laplH_vbar",
        "L6_dz_v",
        "L2_grad_u",
        "L2_lapl2_u",
        "L2_laplH_v",
        "L2_lapl_T",
        "energy_residual",
        "symmetry_residual",
        "u_eq_residual",
    ];

    pub fn values(&self) -> [f64; 17] {
        [
            self.time,
            self.l2_v,
            self.l6_v,
            self.linf_t,
            self.l2_t,
            self.l2_grad_v,
            self.l2_grad_h_t,
            self.l2_grad_h_vbar,
            self.l2_lapl_h_vbar,
            self.l6_dz_v,
            self.l2_grad_u,
            self.l2_lapl2_u,
            self.l2_lapl_h_v,
            self.l2_lapl_t,
            self.energy_residual,
            self.symmetry_residual,
            self.u_eq_residual,
        ]
    }

    pub fn from_values(v: [f64; 17]) -> DiagRecord {
        DiagRecord {
            time: v[0],
            l2_v: v[1],
            l6_v: v[2],
            linf_t: v[3],
            l2_t: v[4],
            l2_grad_v: v[5],
            l2_grad_h_t: v[6],
            l2_grad_h_vbar: v[7],
            l2_lapl_h_vbar: v[8],
            l6_dz_v: v[9],
            l2_grad_u: v[10],
            l2_lapl2_u: v[11],
            l2_lapl_h_v: v[12],
            l2_lapl_t: v[13],
            energy_residual: v[14],
            symmetry_residual: v[15],
            u_eq_residual: v[16],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    L2,
    L4,
    L6,
    Linf,
    H1,
    H2,
}

/// Vertical mean `(1/2h) int f dz` of each column.
pub fn vertical_average(f: &Field3) -> Field2 {
    let grid = f.grid();
    Field2::from_values(grid, grid.column_means(&f.values())).expect("sizes match")
}

/// Extends a field on `M` uniformly in z.
pub fn broadcast(f: &Field2) -> Field3 {
    let grid = f.grid();
    let nz = grid.nz();
    let mut values = Vec::with_capacity(grid.len());
    for &v in f.values() {
        values.extend(std::iter::repeat_n(v, nz));
    }
    Field3::from_physical(grid, values).expect("sizes match")
}

/// `f - fbar`.
pub fn fluctuation(f: &Field3) -> Field3 {
    let grid = f.grid();
    let nz = grid.nz();
    let mut values = f.values().into_owned();
    for col in values.chunks_mut(nz) {
        let mean = col.iter().sum::<f64>() / nz as f64;
        col.iter_mut().for_each(|v| *v -= mean);
    }
    Field3::from_physical(grid, values).expect("sizes match")
}

/// `d_x v1 + d_y v2`, in spectral form.
pub fn divergence_h(v1: &Field3, v2: &Field3) -> Field3 {
    let grid = v1.grid().clone();
    let mut a = v1.coefficients().into_owned();
    let mut b = v2.coefficients().into_owned();
    grid.differentiate_in_place(&mut a, Axis::X, 1);
    grid.differentiate_in_place(&mut b, Axis::Y, 1);
    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
    Field3::from_spectral(&grid, a).expect("sizes match")
}

/// Vertical velocity from continuity, `w = -int_{-h}^z div_H v`.
pub fn diagnose_w(v1: &Field3, v2: &Field3) -> Field3 {
    vertical_antiderivative(&divergence_h(v1, v2)).scale(-1.0)
}

/// Hydrostatic pressure `p = ps - int_{-h}^z T`.
pub fn reconstruct_pressure(t: &Field3, ps: &Field2) -> Field3 {
    broadcast(ps).combine(1.0, &vertical_antiderivative(t), -1.0)
}

/// `vol * sum w(i,j,k) |c|^2` over all modes.
pub(crate) fn weighted_energy(
    grid: &Grid,
    coeffs: &[Complex64],
    weight: impl Fn(usize, usize, usize) -> f64,
) -> f64 {
    let (nx, ny, nz) = (grid.nx(), grid.ny(), grid.nz());
    let mut sum = 0.0;
    for i in 0..nx {
        for j in 0..ny {
            let base = (i * ny + j) * nz;
            for k in 0..nz {
                sum += weight(i, j, k) * coeffs[base + k].norm_sqr();
            }
        }
    }
    sum * grid.volume()
}

fn slot(axis: Axis, i: usize, j: usize, k: usize) -> usize {
    match axis {
        Axis::X => i,
        Axis::Y => j,
        Axis::Z => k,
    }
}

/// Squared modulus of the symbol of `d_a d_b`: `k^4` on the diagonal, the
/// product of first-derivative symbols otherwise.
pub(crate) fn second_symbol_sq(grid: &Grid, a: Axis, b: Axis, i: usize, j: usize, k: usize) -> f64 {
    if a == b {
        grid.d2(a, slot(a, i, j, k)).powi(2)
    } else {
        grid.d1(a, slot(a, i, j, k)).norm_sqr() * grid.d1(b, slot(b, i, j, k)).norm_sqr()
    }
}

pub(crate) fn first_symbol_sq(grid: &Grid, a: Axis, i: usize, j: usize, k: usize) -> f64 {
    grid.d1(a, slot(a, i, j, k)).norm_sqr()
}

fn l2_sq(f: &Field3) -> f64 {
    let v = f.values();
    v.iter().map(|x| x * x).sum::<f64>() * f.grid().cell_volume()
}

fn h1_sq(f: &Field3) -> f64 {
    let grid = f.grid();
    weighted_energy(grid, &f.coefficients(), |i, j, k| {
        1.0 + Axis::ALL.iter().map(|&a| first_symbol_sq(grid, a, i, j, k)).sum::<f64>()
    })
}

const SECOND_MULTI_INDICES: [(Axis, Axis); 6] = [
    (Axis::X, Axis::X),
    (Axis::Y, Axis::Y),
    (Axis::Z, Axis::Z),
    (Axis::X, Axis::Y),
    (Axis::X, Axis::Z),
    (Axis::Y, Axis::Z),
];

/// Parseval weight of the squared H2 norm at mode `(i, j, k)`.
pub(crate) fn h2_weight(grid: &Grid, i: usize, j: usize, k: usize) -> f64 {
    1.0 + Axis::ALL.iter().map(|&a| first_symbol_sq(grid, a, i, j, k)).sum::<f64>()
        + SECOND_MULTI_INDICES
            .iter()
            .map(|&(a, b)| second_symbol_sq(grid, a, b, i, j, k))
            .sum::<f64>()
}

fn h2_sq(f: &Field3) -> f64 {
    let grid = f.grid();
    weighted_energy(grid, &f.coefficients(), |i, j, k| h2_weight(grid, i, j, k))
}

/// Lp norms by collocation quadrature; H1/H2 sum the squared L2 norms of
/// every derivative multi-index up to that order.
pub fn norm(f: &Field3, kind: NormKind) -> f64 {
    let dv = f.grid().cell_volume();
    match kind {
        NormKind::L2 => l2_sq(f).sqrt(),
        NormKind::L4 => (f.values().iter().map(|x| x.powi(4)).sum::<f64>() * dv).powf(0.25),
        NormKind::L6 => (f.values().iter().map(|x| x.powi(6)).sum::<f64>() * dv).powf(1.0 / 6.0),
        NormKind::Linf => f.max_abs(),
        NormKind::H1 => h1_sq(f).sqrt(),
        NormKind::H2 => h2_sq(f).sqrt(),
    }
}

/// Lp norm of the pointwise Euclidean magnitude of a vector of fields.
pub fn vector_lp(components: &[&Field3], p: f64) -> f64 {
    let grid = components[0].grid();
    let vals: Vec<_> = components.iter().map(|c| c.values()).collect();
    let mut sum = 0.0;
    for idx in 0..grid.len() {
        let mag2: f64 = vals.iter().map(|v| v[idx] * v[idx]).sum();
        sum += mag2.powf(p / 2.0);
    }
    (sum * grid.cell_volume()).powf(1.0 / p)
}

/// `sqrt(sum |c|_2^2)` over the components.
pub fn vector_l2(components: &[&Field3]) -> f64 {
    components.iter().map(|c| l2_sq(c)).sum::<f64>().sqrt()
}

/// `sqrt(sum_c sum_a |d_a c|_2^2)` over the given derivative axes.
pub fn gradient_l2(components: &[&Field3], axes: &[Axis]) -> f64 {
    let mut total = 0.0;
    for c in components {
        let grid = c.grid();
        total += weighted_energy(grid, &c.coefficients(), |i, j, k| {
            axes.iter().map(|&a| first_symbol_sq(grid, a, i, j, k)).sum::<f64>()
        });
    }
    total.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::spectral_derivative;
    use std::f64::consts::PI;

    fn grid() -> Arc<Grid> {
        Grid::new(16, 16, 16, 1.0).unwrap()
    }

    #[test]
    fn vertical_average_examples() {
        let g = grid();
        let c = vertical_average(&Field3::from_fn(&g, |_, _, z| (PI * z).cos()));
        assert!(c.max_abs() < 1e-15);
        let c = vertical_average(&Field3::constant(&g, 2.5));
        assert!(c.values().iter().all(|&v| (v - 2.5).abs() < 1e-15));
        let s = vertical_average(&Field3::from_fn(&g, |_, _, z| (PI * z).sin().powi(2)));
        assert!(s.values().iter().all(|&v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn fluctuation_examples() {
        let g = grid();
        assert!(fluctuation(&Field3::constant(&g, 3.0)).max_abs() < 1e-15);
        let cosz = Field3::from_fn(&g, |_, _, z| (PI * z).cos());
        assert!(fluctuation(&cosz).combine(1.0, &cosz, -1.0).max_abs() < 1e-15);
        let shifted = Field3::from_fn(&g, |_, _, z| 1.0 + (PI * z).cos());
        assert!(fluctuation(&shifted).combine(1.0, &cosz, -1.0).max_abs() < 1e-15);
    }

    #[test]
    fn decomposition_reassembles() {
        let g = grid();
        let f = Field3::from_fn(&g, |x, y, z| (2.0 * PI * x).sin() * (1.0 + z * z) + y);
        let back = fluctuation(&f).combine(1.0, &broadcast(&vertical_average(&f)), 1.0);
        assert!(back.combine(1.0, &f, -1.0).max_abs() < 1e-14);
    }

    #[test]
    fn diagnose_w_examples() {
        let g = grid();
        let v1 = Field3::from_fn(&g, |_, y, _| (2.0 * PI * y).sin());
        let zero = Field3::zeros(&g);
        assert!(diagnose_w(&v1, &zero).max_abs() < 1e-13);
        assert!(diagnose_w(&zero, &zero).max_abs() == 0.0);

        let v1 = Field3::from_fn(&g, |x, _, z| (2.0 * PI * x).sin() * (PI * z).cos());
        let w = diagnose_w(&v1, &zero);
        for idx in 0..g.len() {
            let (i, _, k) = g.unindex(idx);
            let expected = -2.0 * (2.0 * PI * g.x(i)).cos() * (PI * g.z(k)).sin();
            assert_close!(w.values()[idx], expected, 1e-13);
        }
    }

    #[test]
    fn pressure_examples() {
        let g = grid();
        let ps = Field2::from_fn(&g, |x, _| (2.0 * PI * x).cos());
        let p = reconstruct_pressure(&Field3::zeros(&g), &ps);
        for idx in 0..g.len() {
            let (i, _, _) = g.unindex(idx);
            assert_close!(p.values()[idx], (2.0 * PI * g.x(i)).cos(), 1e-15);
        }
        let t = Field3::from_fn(&g, |_, _, z| (PI * z).sin());
        let p = reconstruct_pressure(&t, &Field2::zeros(&g));
        let c = reconstruct_pressure(&Field3::constant(&g, 0.7), &Field2::zeros(&g));
        for idx in 0..g.len() {
            let z = g.z(g.unindex(idx).2);
            assert_close!(p.values()[idx], ((PI * z).cos() + 1.0) / PI, 1e-14);
            assert_close!(c.values()[idx], -0.7 * (z + 1.0), 1e-14);
        }
    }

    #[test]
    fn hydrostatic_balance() {
        let g = grid();
        let t = Field3::from_fn(&g, |x, y, z| {
            (PI * z).sin() * (2.0 * PI * x).cos() + 0.3 * (2.0 * PI * z).sin() * (2.0 * PI * y).sin()
        });
        let ps = Field2::from_fn(&g, |x, y| (2.0 * PI * (x + y)).sin());
        let p = reconstruct_pressure(&t, &ps);
        let dz = spectral_derivative(&p, Axis::Z, 1).unwrap();
        assert!(dz.combine(1.0, &t, 1.0).max_abs() < 1e-10 * t.max_abs());
    }

    #[test]
    fn norm_examples() {
        let g = grid();
        let s = Field3::from_fn(&g, |x, _, _| (2.0 * PI * x).sin());
        assert_close!(norm(&s, NormKind::L2), 1.0, 1e-14);
        assert_close!(norm(&Field3::constant(&g, 1.0), NormKind::L6), 2f64.powf(1.0 / 6.0), 1e-14);
        // oracle: int_0^1 sin^6(2 pi x) dx = 5/16 over volume 2
        assert_close!(norm(&s, NormKind::L6), (0.625f64).powf(1.0 / 6.0), 1e-14);
        assert_close!(norm(&s, NormKind::Linf), 1.0, 1e-15);
        // H1^2 = 1 + (2pi)^2; H2^2 adds (2pi)^4
        let k2 = 4.0 * PI * PI;
        assert_close!(norm(&s, NormKind::H1), (1.0 + k2).sqrt(), 1e-12);
        assert_close!(norm(&s, NormKind::H2), (1.0 + k2 + k2 * k2).sqrt(), 1e-10);
    }

    #[test]
    fn norms_stable_under_refinement() {
        let f = |x: f64, y: f64, z: f64| {
            (2.0 * PI * x).sin() * (2.0 * PI * y).cos() + 0.5 * (PI * z).cos()
        };
        for kind in [NormKind::L2, NormKind::L4, NormKind::L6, NormKind::H2] {
            let a = norm(&Field3::from_fn(&Grid::new(16, 16, 16, 1.0).unwrap(), f), kind);
            let b = norm(&Field3::from_fn(&Grid::new(32, 32, 32, 1.0).unwrap(), f), kind);
            assert!(((a - b) / b).abs() < 1e-8, "{kind:?}: {a} vs {b}");
        }
    }
}
