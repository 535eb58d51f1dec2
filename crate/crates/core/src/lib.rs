//! Pseudo-spectral solver for the 3D viscous primitive equations with
//! horizontal-only thermal diffusivity, on the z-symmetric periodic box
//! `(0,1)^2 x (-h, h)`, together with executable energy, stability and
//! inequality diagnostics.
//!
//! Prognostic unknowns are the horizontal velocity `(v1, v2)` and the
//! temperature perturbation `T`; the vertical velocity `w` and the pressure
//! are diagnosed from them. Fields in the invariant class (v even, T odd in
//! z) restrict to solutions of the wall-bounded problem on `(-h, 0)`.

#[cfg(test)]
macro_rules! assert_close {
    ($a:expr, $b:expr, $tol:expr) => {{
        let (a, b): (f64, f64) = ($a, $b);
        assert!((a - b).abs() <= $tol, "{} vs {} (tol {:e})", a, b, $tol);
    }};
}

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod estimates;
pub mod presets;
pub mod fields;
pub mod grid;
pub mod symmetry;
pub mod timestepper;

pub use error::{Error, Result};
pub use fields::{DiagRecord, Params, State};
pub use grid::{Axis, Direction, Field2, Field3, Grid, Representation};
pub use timestepper::{Scheme, StepConfig};
