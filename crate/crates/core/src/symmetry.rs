//! Reflection symmetry `z -> -z` between the physical layer `(-h, 0)` and
//! the periodic box `(-h, h)`.
//!
//! The invariant class keeps `v` (and `p`) even and `T` (and `w`) odd in z.
//! Grid points are symmetric about `z = 0`, so reflection is an exact
//! permutation of samples: slot `k` maps to `(nz - k) mod nz`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fields::{vector_l2, State};
use crate::grid::{Axis, Field3, Grid};

/// Compatibility tolerance on the boundary trace of an odd extension.
pub const TRACE_TOLERANCE: f64 = 1e-8;

/// Share of the z spectrum above `nz/4` that marks an even extension as kinked.
pub const KINK_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

/// Samples on `z_k`, `k = 0..=nz/2`, i.e. the closed layer `[-h, 0]`.
#[derive(Clone, Debug)]
pub struct HalfField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl HalfField {
    pub fn levels(grid: &Grid) -> usize {
        grid.nz() / 2 + 1
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64, f64) -> f64) -> HalfField {
        let nzh = Self::levels(grid);
        let mut values = Vec::with_capacity(grid.len2() * nzh);
        for i in 0..grid.nx() {
            for j in 0..grid.ny() {
                for k in 0..nzh {
                    values.push(f(grid.x(i), grid.y(j), grid.z(k)));
                }
            }
        }
        HalfField { grid: grid.clone(), values }
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Result<HalfField> {
        if values.len() != grid.len2() * Self::levels(grid) {
            return Err(Error::Format(format!(
                "half-field has {} values, expected {}",
                values.len(),
                grid.len2() * Self::levels(grid)
            )));
        }
        Ok(HalfField { grid: grid.clone(), values })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Extends a half-field to the full box with the requested z-parity.
///
/// Odd extensions require the trace at `z = -h` and `z = 0` to vanish within
/// [`TRACE_TOLERANCE`]; even extensions are rejected when the mirrored field
/// carries a kink, detected as spectral energy above `nz/4` in z.
pub fn extend(half: &HalfField, parity: Parity) -> Result<Field3> {
    let grid = half.grid.clone();
    let nz = grid.nz();
    let nzh = HalfField::levels(&grid);
    let mut values = vec![0.0; grid.len()];
    for col in 0..grid.len2() {
        let src = &half.values[col * nzh..(col + 1) * nzh];
        if parity == Parity::Odd {
            for k in [0, nzh - 1] {
                if src[k].abs() > TRACE_TOLERANCE {
                    return Err(Error::Compatibility { plane: grid.z(k), trace: src[k] });
                }
            }
        }
        let dst = &mut values[col * nz..(col + 1) * nz];
        dst[..nzh].copy_from_slice(&src[..nzh]);
        for k in nzh..nz {
            dst[k] = parity.sign() * src[nz - k];
        }
        if parity == Parity::Odd {
            dst[0] = 0.0;
            dst[nz / 2] = 0.0;
        }
    }
    let field = Field3::from_physical(&grid, values)?;
    if parity == Parity::Even {
        let tail = z_spectral_tail(&field);
        if tail > KINK_TOLERANCE {
            return Err(Error::Kink { tail });
        }
    }
    Ok(field)
}

/// Fraction of spectral energy in z-modes with `|m| > nz/4`.
fn z_spectral_tail(f: &Field3) -> f64 {
    let grid = f.grid();
    let c = f.coefficients();
    let modes = grid.modes(Axis::Z);
    let quarter = (grid.nz() / 4) as u64;
    let (mut total, mut tail) = (0.0, 0.0);
    for (idx, v) in c.iter().enumerate() {
        let e = v.norm_sqr();
        total += e;
        if modes[idx % grid.nz()].unsigned_abs() > quarter {
            tail += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        tail / total
    }
}

/// Samples of `f` on the lower layer `[-h, 0]`.
pub fn restrict(f: &Field3) -> HalfField {
    let grid = f.grid().clone();
    let nz = grid.nz();
    let nzh = HalfField::levels(&grid);
    let v = f.values();
    let mut values = Vec::with_capacity(grid.len2() * nzh);
    for col in v.chunks(nz) {
        values.extend_from_slice(&col[..nzh]);
    }
    HalfField { grid, values }
}

/// `f(x, y, -z)`.
pub fn reflect(f: &Field3) -> Field3 {
    let grid = f.grid().clone();
    let nz = grid.nz();
    let v = f.values();
    let mut out = vec![0.0; v.len()];
    for (src, dst) in v.chunks(nz).zip(out.chunks_mut(nz)) {
        for k in 0..nz {
            dst[k] = src[(nz - k) % nz];
        }
    }
    Field3::from_physical(&grid, out).expect("sizes match")
}

/// Part of `f` with the given parity, `(f +/- Rf)/2`.
pub fn parity_part(f: &Field3, parity: Parity) -> Field3 {
    f.combine(0.5, &reflect(f), 0.5 * parity.sign())
}

/// Projects a state onto the invariant class: even `v`, odd `T`.
pub fn symmetrize(s: &State) -> State {
    State {
        v1: parity_part(&s.v1, Parity::Even),
        v2: parity_part(&s.v2, Parity::Even),
        t: parity_part(&s.t, Parity::Odd),
        time: s.time,
    }
}

/// `|odd part of v|_2 + |even part of T|_2`.
pub fn symmetry_residual(s: &State) -> f64 {
    let o1 = parity_part(&s.v1, Parity::Odd);
    let o2 = parity_part(&s.v2, Parity::Odd);
    let e = parity_part(&s.t, Parity::Even);
    vector_l2(&[&o1, &o2]) + vector_l2(&[&e])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> Arc<Grid> {
        Grid::new(8, 8, 16, 1.0).unwrap()
    }

    #[test]
    fn extend_examples() {
        let g = grid();
        let c = extend(&HalfField::from_fn(&g, |_, _, _| 2.0), Parity::Even).unwrap();
        assert!(c.values().iter().all(|&v| v == 2.0));

        let s = HalfField::from_fn(&g, |_, _, z| (PI * z).sin());
        let odd = extend(&s, Parity::Odd).unwrap();
        let exact = Field3::from_fn(&g, |_, _, z| (PI * z).sin());
        assert!(odd.combine(1.0, &exact, -1.0).max_abs() < 1e-15);

        assert!(matches!(extend(&s, Parity::Even), Err(Error::Kink { .. })));
    }

    #[test]
    fn odd_extension_needs_vanishing_trace() {
        let g = grid();
        let c = HalfField::from_fn(&g, |_, _, z| (PI * z).cos());
        match extend(&c, Parity::Odd) {
            Err(Error::Compatibility { trace, .. }) => assert!(trace.abs() > 0.5),
            other => panic!("expected compatibility error, got {other:?}"),
        }
        // within tolerance is accepted
        let tiny = HalfField::from_fn(&g, |_, _, z| (PI * z).sin() + 1e-10);
        assert!(extend(&tiny, Parity::Odd).is_ok());
    }

    #[test]
    fn smooth_even_extension_accepted() {
        let g = grid();
        let c = HalfField::from_fn(&g, |x, _, z| (PI * z).cos() * (2.0 * PI * x).sin());
        let e = extend(&c, Parity::Even).unwrap();
        assert!(parity_part(&e, Parity::Odd).max_abs() < 1e-15);
    }

    #[test]
    fn restrict_examples() {
        let g = grid();
        let s = HalfField::from_fn(&g, |x, y, z| (PI * z).sin() * (1.0 + x * y));
        let back = restrict(&extend(&s, Parity::Odd).unwrap());
        for (a, b) in back.values().iter().zip(s.values()) {
            assert!((a - b).abs() < 1e-15);
        }
        let c = restrict(&Field3::constant(&g, 4.0));
        assert!(c.values().iter().all(|&v| v == 4.0));
        let cz = restrict(&Field3::from_fn(&g, |_, _, z| (PI * z).cos()));
        let expect = HalfField::from_fn(&g, |_, _, z| (PI * z).cos());
        assert_eq!(cz.values(), expect.values());
    }

    #[test]
    fn symmetrize_examples() {
        let g = grid();
        let inside = State::new(
            Field3::from_fn(&g, |x, _, z| (PI * z).cos() * (2.0 * PI * x).sin()),
            Field3::from_fn(&g, |_, y, _| (2.0 * PI * y).cos()),
            Field3::from_fn(&g, |x, _, z| (PI * z).sin() * (2.0 * PI * x).cos()),
            0.0,
        )
        .unwrap();
        let out = symmetrize(&inside);
        assert!(out.combine(1.0, &inside, -1.0).l2() < 1e-15);
        assert!(symmetry_residual(&inside) < 1e-15);

        let odd_v = State::new(
            Field3::from_fn(&g, |_, _, z| (PI * z).sin()),
            Field3::zeros(&g),
            Field3::from_fn(&g, |_, _, z| (PI * z).cos()),
            0.0,
        )
        .unwrap();
        let out = symmetrize(&odd_v);
        assert!(out.v1.max_abs() < 1e-15);
        assert!(out.t.max_abs() < 1e-15);
    }

    #[test]
    fn residual_examples() {
        let g = grid();
        let s = State::new(
            Field3::from_fn(&g, |_, _, z| (PI * z).sin()),
            Field3::zeros(&g),
            Field3::zeros(&g),
            0.0,
        )
        .unwrap();
        assert_close!(symmetry_residual(&s), 1.0, 1e-14);
        let s = State::new(
            Field3::zeros(&g),
            Field3::zeros(&g),
            Field3::from_fn(&g, |_, _, z| (PI * z).cos()),
            0.0,
        )
        .unwrap();
        assert_close!(symmetry_residual(&s), 1.0, 1e-14);
    }
}
