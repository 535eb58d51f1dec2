//! Periodic spectral grid on `M x (-h, h)` with `M = (0,1)^2`.
//!
//! Every field is sampled on a uniform collocation lattice and expanded in a
//! full complex Fourier basis along each axis (x, y with period 1, z with
//! period `2h`). Coefficients are normalized so that the zero mode equals
//! the collocation mean. Data layout is z-fastest, then y, then x, the same
//! ordering used by checkpoints.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
    pub const HORIZONTAL: [Axis; 2] = [Axis::X, Axis::Y];

    fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Representation {
    Physical,
    Spectral,
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Representation::Physical => write!(f, "physical"),
            Representation::Spectral => write!(f, "spectral"),
        }
    }
}

struct Plans {
    forward: [Arc<dyn Fft<f64>>; 3],
    inverse: [Arc<dyn Fft<f64>>; 3],
    forward2: [Arc<dyn Fft<f64>>; 2],
    inverse2: [Arc<dyn Fft<f64>>; 2],
}

/// Collocation grid and wavenumber lattice of the periodic box.
pub struct Grid {
    nx: usize,
    ny: usize,
    nz: usize,
    h: f64,
    modes: [Vec<i64>; 3],
    wavenumbers: [Vec<f64>; 3],
    cutoff: [usize; 3],
    plans: Plans,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .field("nz", &self.nz)
            .field("h", &self.h)
            .field("cutoff", &self.cutoff)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.nz == other.nz
            && self.h.to_bits() == other.h.to_bits()
            && self.cutoff == other.cutoff
    }
}

/// Signed mode index of FFT slot `i` on `n` points; the Nyquist slot maps to `+n/2`.
fn mode_index(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl Grid {
    /// Builds the grid with `x_i = i/nx`, `y_j = j/ny`, `z_k = -h + 2hk/nz`.
    pub fn new(nx: usize, ny: usize, nz: usize, h: f64) -> Result<Arc<Grid>> {
        for (name, n) in [("nx", nx), ("ny", ny), ("nz", nz)] {
            if n < 4 || n % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "{name} = {n}: collocation counts must be even and at least 4"
                )));
            }
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidGrid(format!("h = {h}: half-height must be positive")));
        }
        let dims = [nx, ny, nz];
        let periods = [1.0, 1.0, 2.0 * h];
        let modes: [Vec<i64>; 3] =
            std::array::from_fn(|a| (0..dims[a]).map(|i| mode_index(i, dims[a])).collect());
        let wavenumbers: [Vec<f64>; 3] = std::array::from_fn(|a| {
            modes[a].iter().map(|&m| 2.0 * PI * m as f64 / periods[a]).collect()
        });
        let mut planner = FftPlanner::new();
        let plans = Plans {
            forward: std::array::from_fn(|a| planner.plan_fft_forward(dims[a])),
            inverse: std::array::from_fn(|a| planner.plan_fft_inverse(dims[a])),
            forward2: std::array::from_fn(|a| planner.plan_fft_forward(dims[a])),
            inverse2: std::array::from_fn(|a| planner.plan_fft_inverse(dims[a])),
        };
        Ok(Arc::new(Grid {
            nx,
            ny,
            nz,
            h,
            modes,
            wavenumbers,
            cutoff: [nx / 3, ny / 3, nz / 3],
            plans,
        }))
    }

    /// Same lattice with a different dealiasing cutoff per axis. Used to
    /// inject faults in the self-test; production code keeps the 2/3 rule.
    pub fn with_dealias_cutoff(&self, cutoff: [usize; 3]) -> Arc<Grid> {
        let mut g = Grid::new(self.nx, self.ny, self.nz, self.h).expect("grid already validated");
        Arc::get_mut(&mut g).expect("fresh grid").cutoff = cutoff;
        g
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn len2(&self) -> usize {
        self.nx * self.ny
    }

    pub fn volume(&self) -> f64 {
        2.0 * self.h
    }

    pub fn spacing(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => 1.0 / self.nx as f64,
            Axis::Y => 1.0 / self.ny as f64,
            Axis::Z => 2.0 * self.h / self.nz as f64,
        }
    }

    pub fn cell_volume(&self) -> f64 {
        self.volume() / self.len() as f64
    }

    pub fn dealias_cutoff(&self) -> [usize; 3] {
        self.cutoff
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.ny + j) * self.nz + k
    }

    #[inline]
    pub fn unindex(&self, idx: usize) -> (usize, usize, usize) {
        let k = idx % self.nz;
        let j = (idx / self.nz) % self.ny;
        let i = idx / (self.nz * self.ny);
        (i, j, k)
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 / self.nx as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 / self.ny as f64
    }

    pub fn z(&self, k: usize) -> f64 {
        -self.h + 2.0 * self.h * k as f64 / self.nz as f64
    }

    /// Signed mode indices along `axis`, in FFT slot order.
    pub fn modes(&self, axis: Axis) -> &[i64] {
        &self.modes[axis.index()]
    }

    /// Angular wavenumbers along `axis`: multiples of `2pi` in x, y and of `pi/h` in z.
    pub fn wavenumbers(&self, axis: Axis) -> &[f64] {
        &self.wavenumbers[axis.index()]
    }

    fn is_nyquist(&self, axis: Axis, slot: usize) -> bool {
        let n = self.dims()[axis.index()];
        slot == n / 2
    }

    /// Symbol of the first derivative. The Nyquist slot maps to zero because
    /// the derivative of the real Nyquist interpolant vanishes on the grid.
    #[inline]
    pub fn d1(&self, axis: Axis, slot: usize) -> Complex64 {
        if self.is_nyquist(axis, slot) {
            ZERO
        } else {
            Complex64::new(0.0, self.wavenumbers[axis.index()][slot])
        }
    }

    /// Symbol of the second derivative, `-k^2` on every slot.
    #[inline]
    pub fn d2(&self, axis: Axis, slot: usize) -> f64 {
        let k = self.wavenumbers[axis.index()][slot];
        -k * k
    }

    /// Squared horizontal wavenumber, `kx^2 + ky^2`.
    #[inline]
    pub fn kh2(&self, i: usize, j: usize) -> f64 {
        let kx = self.wavenumbers[0][i];
        let ky = self.wavenumbers[1][j];
        kx * kx + ky * ky
    }

    #[inline]
    pub fn kz2(&self, k: usize) -> f64 {
        let kz = self.wavenumbers[2][k];
        kz * kz
    }

    /// True if the slot triple survives the dealiasing filter.
    #[inline]
    pub fn retained(&self, i: usize, j: usize, k: usize) -> bool {
        self.modes[0][i].unsigned_abs() as usize <= self.cutoff[0]
            && self.modes[1][j].unsigned_abs() as usize <= self.cutoff[1]
            && self.modes[2][k].unsigned_abs() as usize <= self.cutoff[2]
    }

    /// Forward transform of physical samples; coefficient of mode `m` is
    /// `(1/N) sum f e^{-i k.x}`.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        assert_eq!(values.len(), self.len());
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft3(&mut data, Direction::Forward);
        let scale = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|c| *c *= scale);
        data
    }

    /// Inverse of [`Grid::forward`]; the imaginary round-off is discarded.
    pub fn backward(&self, coeffs: &[Complex64]) -> Vec<f64> {
        assert_eq!(coeffs.len(), self.len());
        let mut data = coeffs.to_vec();
        self.fft3(&mut data, Direction::Backward);
        data.into_iter().map(|c| c.re).collect()
    }

    /// 2D forward transform on `M`, layout `i*ny + j`.
    pub fn forward2(&self, values: &[f64]) -> Vec<Complex64> {
        assert_eq!(values.len(), self.len2());
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft2(&mut data, Direction::Forward);
        let scale = 1.0 / self.len2() as f64;
        data.iter_mut().for_each(|c| *c *= scale);
        data
    }

    pub fn backward2(&self, coeffs: &[Complex64]) -> Vec<f64> {
        assert_eq!(coeffs.len(), self.len2());
        let mut data = coeffs.to_vec();
        self.fft2(&mut data, Direction::Backward);
        data.into_iter().map(|c| c.re).collect()
    }

    fn fft3(&self, data: &mut [Complex64], dir: Direction) {
        let (plans, _) = self.plan_set(dir);
        let (nx, ny, nz) = (self.nx, self.ny, self.nz);

        // z lines are contiguous
        let pz = &plans[2];
        data.par_chunks_mut(nz).for_each_init(
            || vec![ZERO; pz.get_inplace_scratch_len()],
            |scratch, line| pz.process_with_scratch(line, scratch),
        );

        // y lines live inside one x-slab
        let py = &plans[1];
        data.par_chunks_mut(ny * nz).for_each_init(
            || (vec![ZERO; ny], vec![ZERO; py.get_inplace_scratch_len()]),
            |(buf, scratch), slab| {
                for k in 0..nz {
                    for j in 0..ny {
                        buf[j] = slab[j * nz + k];
                    }
                    py.process_with_scratch(buf, scratch);
                    for j in 0..ny {
                        slab[j * nz + k] = buf[j];
                    }
                }
            },
        );

        // x lines: gather into a transposed buffer, transform, scatter back
        let px = &plans[0];
        let stride = ny * nz;
        let mut t = vec![ZERO; data.len()];
        {
            let src: &[Complex64] = data;
            t.par_chunks_mut(nx).enumerate().for_each_init(
                || vec![ZERO; px.get_inplace_scratch_len()],
                |scratch, (jk, line)| {
                    for (i, c) in line.iter_mut().enumerate() {
                        *c = src[i * stride + jk];
                    }
                    px.process_with_scratch(line, scratch);
                },
            );
        }
        for jk in 0..stride {
            for i in 0..nx {
                data[i * stride + jk] = t[jk * nx + i];
            }
        }
    }

    fn fft2(&self, data: &mut [Complex64], dir: Direction) {
        let (_, plans) = self.plan_set(dir);
        let (nx, ny) = (self.nx, self.ny);
        let py = &plans[1];
        let mut scratch = vec![ZERO; py.get_inplace_scratch_len()];
        for row in data.chunks_mut(ny) {
            py.process_with_scratch(row, &mut scratch);
        }
        let px = &plans[0];
        let mut scratch = vec![ZERO; px.get_inplace_scratch_len()];
        let mut buf = vec![ZERO; nx];
        for j in 0..ny {
            for i in 0..nx {
                buf[i] = data[i * ny + j];
            }
            px.process_with_scratch(&mut buf, &mut scratch);
            for i in 0..nx {
                data[i * ny + j] = buf[i];
            }
        }
    }

    fn plan_set(&self, dir: Direction) -> (&[Arc<dyn Fft<f64>>; 3], &[Arc<dyn Fft<f64>>; 2]) {
        match dir {
            Direction::Forward => (&self.plans.forward, &self.plans.forward2),
            Direction::Backward => (&self.plans.inverse, &self.plans.inverse2),
        }
    }

    /// Zeroes every coefficient outside the dealiasing box, in place.
    pub fn dealias_in_place(&self, coeffs: &mut [Complex64]) {
        let (nx, ny, nz) = (self.nx, self.ny, self.nz);
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    if !self.retained(i, j, k) {
                        coeffs[(i * ny + j) * nz + k] = ZERO;
                    }
                }
            }
        }
    }

    /// Multiplies coefficients by a derivative symbol in place.
    pub fn differentiate_in_place(&self, coeffs: &mut [Complex64], axis: Axis, order: u8) {
        let (nx, ny, nz) = (self.nx, self.ny, self.nz);
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    let slot = match axis {
                        Axis::X => i,
                        Axis::Y => j,
                        Axis::Z => k,
                    };
                    let c = &mut coeffs[(i * ny + j) * nz + k];
                    if order == 1 {
                        *c *= self.d1(axis, slot);
                    } else {
                        *c *= self.d2(axis, slot);
                    }
                }
            }
        }
    }

    /// Periodic part of `int_{-h}^z f`: every oscillatory z-mode is divided by
    /// `i kz`, the z-mean and z-Nyquist modes are dropped, and the constant
    /// is fixed so the result vanishes at `z = -h`.
    pub fn antiderivative_periodic(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let (nx, ny, nz) = (self.nx, self.ny, self.nz);
        let mut out = vec![ZERO; coeffs.len()];
        for col in 0..nx * ny {
            let src = &coeffs[col * nz..(col + 1) * nz];
            let dst = &mut out[col * nz..(col + 1) * nz];
            // z = -h is sample 0, where every basis function equals 1
            let mut at_bottom = ZERO;
            for k in 0..nz {
                if k == 0 || self.is_nyquist(Axis::Z, k) {
                    continue;
                }
                let c = src[k] / self.d1(Axis::Z, k);
                dst[k] = c;
                at_bottom += c;
            }
            dst[0] = -at_bottom;
        }
        out
    }

    /// Mean over the z collocation points of each column (the z zero mode).
    pub fn column_means(&self, values: &[f64]) -> Vec<f64> {
        let nz = self.nz;
        values.chunks(nz).map(|c| c.iter().sum::<f64>() / nz as f64).collect()
    }
}

/// One scalar field on the grid, in either physical or spectral form.
#[derive(Clone, Debug)]
pub struct Field3 {
    grid: Arc<Grid>,
    data: Data,
}

#[derive(Clone, Debug)]
enum Data {
    Physical(Vec<f64>),
    Spectral(Vec<Complex64>),
}

impl Field3 {
    pub fn zeros(grid: &Arc<Grid>) -> Field3 {
        Field3 { grid: grid.clone(), data: Data::Physical(vec![0.0; grid.len()]) }
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Field3 {
        Field3 { grid: grid.clone(), data: Data::Physical(vec![c; grid.len()]) }
    }

    /// Samples `f(x, y, z)` at every collocation point.
    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64, f64) -> f64) -> Field3 {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nx {
            let x = grid.x(i);
            for j in 0..grid.ny {
                let y = grid.y(j);
                for k in 0..grid.nz {
                    values.push(f(x, y, grid.z(k)));
                }
            }
        }
        Field3 { grid: grid.clone(), data: Data::Physical(values) }
    }

    pub fn from_physical(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Field3> {
        if values.len() != grid.len() {
            return Err(Error::Format(format!(
                "field has {} values, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Field3 { grid: grid.clone(), data: Data::Physical(values) })
    }

    pub fn from_spectral(grid: &Arc<Grid>, coeffs: Vec<Complex64>) -> Result<Field3> {
        if coeffs.len() != grid.len() {
            return Err(Error::Format(format!(
                "field has {} coefficients, grid needs {}",
                coeffs.len(),
                grid.len()
            )));
        }
        Ok(Field3 { grid: grid.clone(), data: Data::Spectral(coeffs) })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn representation(&self) -> Representation {
        match self.data {
            Data::Physical(_) => Representation::Physical,
            Data::Spectral(_) => Representation::Spectral,
        }
    }

    pub fn physical(&self) -> Option<&[f64]> {
        match &self.data {
            Data::Physical(v) => Some(v),
            Data::Spectral(_) => None,
        }
    }

    pub fn spectral(&self) -> Option<&[Complex64]> {
        match &self.data {
            Data::Spectral(c) => Some(c),
            Data::Physical(_) => None,
        }
    }

    /// Transforms in the given direction; the representation tag must match.
    pub fn transform(&self, direction: Direction) -> Result<Field3> {
        match (direction, &self.data) {
            (Direction::Forward, Data::Physical(v)) => {
                Ok(Field3 { grid: self.grid.clone(), data: Data::Spectral(self.grid.forward(v)) })
            }
            (Direction::Backward, Data::Spectral(c)) => {
                Ok(Field3 { grid: self.grid.clone(), data: Data::Physical(self.grid.backward(c)) })
            }
            (Direction::Forward, Data::Spectral(_)) => Err(Error::Representation {
                expected: Representation::Physical,
                found: Representation::Spectral,
            }),
            (Direction::Backward, Data::Physical(_)) => Err(Error::Representation {
                expected: Representation::Spectral,
                found: Representation::Physical,
            }),
        }
    }

    pub fn to_physical(&self) -> Field3 {
        match &self.data {
            Data::Physical(_) => self.clone(),
            Data::Spectral(c) => {
                Field3 { grid: self.grid.clone(), data: Data::Physical(self.grid.backward(c)) }
            }
        }
    }

    pub fn to_spectral(&self) -> Field3 {
        match &self.data {
            Data::Spectral(_) => self.clone(),
            Data::Physical(v) => {
                Field3 { grid: self.grid.clone(), data: Data::Spectral(self.grid.forward(v)) }
            }
        }
    }

    /// Physical samples, transforming if needed.
    pub fn values(&self) -> std::borrow::Cow<'_, [f64]> {
        match &self.data {
            Data::Physical(v) => std::borrow::Cow::Borrowed(v),
            Data::Spectral(c) => std::borrow::Cow::Owned(self.grid.backward(c)),
        }
    }

    /// Spectral coefficients, transforming if needed.
    pub fn coefficients(&self) -> std::borrow::Cow<'_, [Complex64]> {
        match &self.data {
            Data::Spectral(c) => std::borrow::Cow::Borrowed(c),
            Data::Physical(v) => std::borrow::Cow::Owned(self.grid.forward(v)),
        }
    }

    pub fn into_values(self) -> Vec<f64> {
        match self.data {
            Data::Physical(v) => v,
            Data::Spectral(c) => self.grid.backward(&c),
        }
    }

    pub fn into_coefficients(self) -> Vec<Complex64> {
        match self.data {
            Data::Spectral(c) => c,
            Data::Physical(v) => self.grid.forward(&v),
        }
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        let idx = self.grid.index(i, j, k);
        match &self.data {
            Data::Physical(v) => v[idx],
            Data::Spectral(_) => self.values()[idx],
        }
    }

    /// `a*self + b*other`, in physical space.
    pub fn combine(&self, a: f64, other: &Field3, b: f64) -> Field3 {
        debug_assert!(Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid);
        let x = self.values();
        let y = other.values();
        let values = x.iter().zip(y.iter()).map(|(p, q)| a * p + b * q).collect();
        Field3 { grid: self.grid.clone(), data: Data::Physical(values) }
    }

    pub fn scale(&self, a: f64) -> Field3 {
        match &self.data {
            Data::Physical(v) => Field3 {
                grid: self.grid.clone(),
                data: Data::Physical(v.iter().map(|x| a * x).collect()),
            },
            Data::Spectral(c) => Field3 {
                grid: self.grid.clone(),
                data: Data::Spectral(c.iter().map(|x| x * a).collect()),
            },
        }
    }

    /// Pointwise product in physical space (not dealiased).
    pub fn mul(&self, other: &Field3) -> Field3 {
        let x = self.values();
        let y = other.values();
        let values = x.iter().zip(y.iter()).map(|(p, q)| p * q).collect();
        Field3 { grid: self.grid.clone(), data: Data::Physical(values) }
    }

    pub fn max_abs(&self) -> f64 {
        self.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        match &self.data {
            Data::Physical(v) => v.iter().all(|x| x.is_finite()),
            Data::Spectral(c) => c.iter().all(|x| x.re.is_finite() && x.im.is_finite()),
        }
    }

    /// Collocation inner product `sum f g dV`.
    pub fn inner(&self, other: &Field3) -> f64 {
        let x = self.values();
        let y = other.values();
        x.iter().zip(y.iter()).map(|(p, q)| p * q).sum::<f64>() * self.grid.cell_volume()
    }
}

/// A field on the horizontal cross-section `M`, physical samples `i*ny + j`.
#[derive(Clone, Debug)]
pub struct Field2 {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Field2 {
    pub fn zeros(grid: &Arc<Grid>) -> Field2 {
        Field2 { grid: grid.clone(), values: vec![0.0; grid.len2()] }
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64) -> f64) -> Field2 {
        let mut values = Vec::with_capacity(grid.len2());
        for i in 0..grid.nx {
            for j in 0..grid.ny {
                values.push(f(grid.x(i), grid.y(j)));
            }
        }
        Field2 { grid: grid.clone(), values }
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Field2> {
        if values.len() != grid.len2() {
            return Err(Error::Format(format!(
                "2D field has {} values, grid needs {}",
                values.len(),
                grid.len2()
            )));
        }
        Ok(Field2 { grid: grid.clone(), values })
    }

    pub(crate) fn from_coefficients(grid: &Arc<Grid>, coeffs: &[Complex64]) -> Field2 {
        Field2 { grid: grid.clone(), values: grid.backward2(coeffs) }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.ny + j]
    }

    pub fn coefficients(&self) -> Vec<Complex64> {
        self.grid.forward2(&self.values)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// L2 norm over `M`.
    pub fn l2(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64).sqrt()
    }
}

/// Forward or backward transform with representation checking.
pub fn transform(f: &Field3, direction: Direction) -> Result<Field3> {
    f.transform(direction)
}

/// Exact derivative of the trigonometric interpolant. The result keeps the
/// representation of the input.
pub fn spectral_derivative(f: &Field3, axis: Axis, order: u8) -> Result<Field3> {
    if order != 1 && order != 2 {
        return Err(Error::UnsupportedOrder(order));
    }
    let grid = f.grid().clone();
    let mut c = f.coefficients().into_owned();
    grid.differentiate_in_place(&mut c, axis, order);
    let out = Field3::from_spectral(&grid, c)?;
    Ok(match f.representation() {
        Representation::Spectral => out,
        Representation::Physical => out.to_physical(),
    })
}

/// 2/3-rule filter: zeroes every mode with `|m| > n/3` on some axis.
pub fn dealias(f: &Field3) -> Result<Field3> {
    let grid = f.grid().clone();
    let mut c = f
        .spectral()
        .ok_or(Error::Representation {
            expected: Representation::Spectral,
            found: Representation::Physical,
        })?
        .to_vec();
    grid.dealias_in_place(&mut c);
    Field3::from_spectral(&grid, c)
}

/// `F(z) = int_{-h}^z f`, returned in physical space. The z-mean of each
/// column contributes the exact linear profile `fbar (z + h)`.
pub fn vertical_antiderivative(f: &Field3) -> Field3 {
    let grid = f.grid().clone();
    let coeffs = f.coefficients();
    let periodic = grid.antiderivative_periodic(&coeffs);
    let mut values = grid.backward(&periodic);
    // the kz = 0 plane holds the 2D coefficients of the column means
    let nz = grid.nz;
    let mean_modes: Vec<Complex64> = (0..grid.len2()).map(|col| coeffs[col * nz]).collect();
    let means = grid.backward2(&mean_modes);
    for (col, fbar) in means.iter().enumerate() {
        for k in 0..nz {
            values[col * nz + k] += fbar * (grid.z(k) + grid.h);
        }
    }
    Field3::from_physical(&grid, values).expect("sizes match")
}
