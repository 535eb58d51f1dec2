//! C interface to the `primeq` solver.
//!
//! States are opaque handles created by `peq_state_*` constructors and
//! released with `peq_state_free`. Every fallible function returns a status
//! code (`PEQ_OK` on success); the message of the most recent failure on the
//! calling thread is available from `peq_last_error`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use primeq::cli::checkpoint;
use primeq::estimates::norm_panel;
use primeq::presets::{self, PresetOptions};
use primeq::timestepper::{self, Scheme, StepConfig, TimeStep};
use primeq::{DiagRecord, Error, Field3, Grid, Params, State};

pub const PEQ_OK: i32 = 0;
/// Any failure without a more specific code.
pub const PEQ_ERR_OTHER: i32 = 1;
/// Invalid parameters, grid sizes or names.
pub const PEQ_ERR_CONFIG: i32 = 2;
/// Non-finite values or the blow-up guard tripped; the state is unchanged.
pub const PEQ_ERR_BLOWUP: i32 = 3;
/// File could not be read or written, or is malformed.
pub const PEQ_ERR_IO: i32 = 4;
/// A required pointer argument was null.
pub const PEQ_ERR_NULL: i32 = 5;
/// A caller buffer has the wrong length.
pub const PEQ_ERR_BUFFER: i32 = 6;
/// Internal panic caught at the boundary.
pub const PEQ_ERR_PANIC: i32 = 7;

pub const PEQ_FIELD_V1: u32 = 0;
pub const PEQ_FIELD_V2: u32 = 1;
pub const PEQ_FIELD_T: u32 = 2;

pub const PEQ_SCHEME_RK3: u32 = 0;
pub const PEQ_SCHEME_RK2: u32 = 1;
pub const PEQ_SCHEME_EULER: u32 = 2;

/// Opaque solver state.
pub struct PeqState {
    state: State,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeqParams {
    pub h: f64,
    pub f0: f64,
    pub nu_h: f64,
    pub nu_z: f64,
    pub kappa_h: f64,
    pub eps: f64,
}

impl From<PeqParams> for Params {
    fn from(p: PeqParams) -> Params {
        Params { h: p.h, f0: p.f0, nu_h: p.nu_h, nu_z: p.nu_z, kappa_h: p.kappa_h, eps: p.eps }
    }
}

impl From<Params> for PeqParams {
    fn from(p: Params) -> PeqParams {
        PeqParams { h: p.h, f0: p.f0, nu_h: p.nu_h, nu_z: p.nu_z, kappa_h: p.kappa_h, eps: p.eps }
    }
}

/// Monitored norms, in the column order of the diagnostics CSV.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PeqDiagRecord {
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

impl From<DiagRecord> for PeqDiagRecord {
    fn from(r: DiagRecord) -> PeqDiagRecord {
        PeqDiagRecord {
            time: r.time,
            l2_v: r.l2_v,
            l6_v: r.l6_v,
            linf_t: r.linf_t,
            l2_t: r.l2_t,
            l2_grad_v: r.l2_grad_v,
            l2_grad_h_t: r.l2_grad_h_t,
            l2_grad_h_vbar: r.l2_grad_h_vbar,
            l2_lapl_h_vbar: r.l2_lapl_h_vbar,
            l6_dz_v: r.l6_dz_v,
            l2_grad_u: r.l2_grad_u,
            l2_lapl2_u: r.l2_lapl2_u,
            l2_lapl_h_v: r.l2_lapl_h_v,
            l2_lapl_t: r.l2_lapl_t,
            energy_residual: r.energy_residual,
            symmetry_residual: r.symmetry_residual,
            u_eq_residual: r.u_eq_residual,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Fail {
    Solver(Error),
    Null(&'static str),
    Buffer { expected: usize, found: usize },
    Config(String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Fail {
        Fail::Solver(e)
    }
}

fn status(f: Fail) -> i32 {
    let (code, msg) = match f {
        Fail::Solver(e) => (e.exit_code(), e.to_string()),
        Fail::Null(what) => (PEQ_ERR_NULL, format!("`{what}` is null")),
        Fail::Buffer { expected, found } => {
            (PEQ_ERR_BUFFER, format!("buffer holds {found} values, expected {expected}"))
        }
        Fail::Config(m) => (PEQ_ERR_CONFIG, m),
    };
    set_error(msg);
    code
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PEQ_OK,
        Ok(Err(e)) => status(e),
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            PEQ_ERR_PANIC
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(name))
}

unsafe fn deref_mut<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(name))
}

unsafe fn string<'a>(p: *const c_char, name: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Config(format!("`{name}` is not valid UTF-8")))
}

fn scheme(code: u32) -> Result<Scheme, Fail> {
    match code {
        PEQ_SCHEME_RK3 => Ok(Scheme::Rk3Imf),
        PEQ_SCHEME_RK2 => Ok(Scheme::Rk2Imf),
        PEQ_SCHEME_EULER => Ok(Scheme::EulerImf),
        other => Err(Fail::Config(format!("unknown scheme code {other}"))),
    }
}

fn boxed(state: State, out: *mut *mut PeqState) {
    // SAFETY: callers check `out` for null before building the state.
    unsafe { *out = Box::into_raw(Box::new(PeqState { state })) };
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn peq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Writes the default parameters (`h = 1`, unit viscosities and
/// diffusivity, no rotation, no regularization) to `out`.
///
/// # Safety
/// `out` must be null or point to writable memory for one `PeqParams`.
#[no_mangle]
pub unsafe extern "C" fn peq_params_default(out: *mut PeqParams) -> i32 {
    guard(|| {
        *deref_mut(out, "out")? = Params::default().into();
        Ok(())
    })
}

/// Builds a named initial condition (`rest`, `inertial`, `mode-decay`,
/// `thermal`, `random-H`) on an `nx x ny x nz` grid of half-height `h`.
///
/// # Safety
/// `preset` must be null or a nul-terminated string; `out` must be null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn peq_state_new_preset(
    nx: usize,
    ny: usize,
    nz: usize,
    h: f64,
    preset: *const c_char,
    seed: u64,
    modes: usize,
    amplitude: f64,
    out: *mut *mut PeqState,
) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let name = string(preset, "preset")?;
        let grid = Grid::new(nx, ny, nz, h)?;
        let opts = PresetOptions { amplitude, seed, modes };
        boxed(presets::build(&grid, name.parse()?, &opts)?, out);
        Ok(())
    })
}

/// Builds a state from physical samples, each `nx*ny*nz` values long with
/// z fastest, then y, then x.
///
/// # Safety
/// The three arrays must each hold `nx*ny*nz` readable doubles; `out` must
/// be null or writable.
#[no_mangle]
pub unsafe extern "C" fn peq_state_from_arrays(
    nx: usize,
    ny: usize,
    nz: usize,
    h: f64,
    v1: *const f64,
    v2: *const f64,
    t: *const f64,
    time: f64,
    out: *mut *mut PeqState,
) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let grid = Grid::new(nx, ny, nz, h)?;
        let n = grid.len();
        let load = |p: *const f64, name| -> Result<Field3, Fail> {
            if p.is_null() {
                return Err(Fail::Null(name));
            }
            Ok(Field3::from_physical(&grid, std::slice::from_raw_parts(p, n).to_vec())?)
        };
        let s = State::new(load(v1, "v1")?, load(v2, "v2")?, load(t, "t")?, time)?;
        boxed(s, out);
        Ok(())
    })
}

/// Releases a state. Null is ignored.
///
/// # Safety
/// `state` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn peq_state_free(state: *mut PeqState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Deep copy of a state.
///
/// # Safety
/// `state` must be a live handle or null; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn peq_state_clone(state: *const PeqState, out: *mut *mut PeqState) -> i32 {
    guard(|| {
        let s = deref(state, "state")?;
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        boxed(s.state.clone(), out);
        Ok(())
    })
}

/// Grid sizes and current time.
///
/// # Safety
/// All pointers must be live or null.
#[no_mangle]
pub unsafe extern "C" fn peq_state_info(
    state: *const PeqState,
    nx: *mut usize,
    ny: *mut usize,
    nz: *mut usize,
    time: *mut f64,
) -> i32 {
    guard(|| {
        let s = &deref(state, "state")?.state;
        let g = s.grid();
        *deref_mut(nx, "nx")? = g.nx();
        *deref_mut(ny, "ny")? = g.ny();
        *deref_mut(nz, "nz")? = g.nz();
        *deref_mut(time, "time")? = s.time;
        Ok(())
    })
}

/// Copies one field (`PEQ_FIELD_*`) into `buf`, which must hold exactly
/// `nx*ny*nz` values.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn peq_state_get_field(
    state: *const PeqState,
    field: u32,
    buf: *mut f64,
    len: usize,
) -> i32 {
    guard(|| {
        let s = &deref(state, "state")?.state;
        let f = match field {
            PEQ_FIELD_V1 => &s.v1,
            PEQ_FIELD_V2 => &s.v2,
            PEQ_FIELD_T => &s.t,
            other => return Err(Fail::Config(format!("unknown field code {other}"))),
        };
        if buf.is_null() {
            return Err(Fail::Null("buf"));
        }
        let values = f.values();
        if len != values.len() {
            return Err(Fail::Buffer { expected: values.len(), found: len });
        }
        std::slice::from_raw_parts_mut(buf, len).copy_from_slice(&values);
        Ok(())
    })
}

/// Advances the state by one step of size `dt` with scheme `PEQ_SCHEME_*`.
/// On failure the state is left unchanged.
///
/// # Safety
/// Pointers must be live or null.
#[no_mangle]
pub unsafe extern "C" fn peq_step(
    state: *mut PeqState,
    params: *const PeqParams,
    scheme_code: u32,
    dt: f64,
) -> i32 {
    guard(|| {
        let s = deref_mut(state, "state")?;
        let p: Params = (*deref(params, "params")?).into();
        p.validate()?;
        let c = StepConfig { scheme: scheme(scheme_code)?, ..StepConfig::default() };
        s.state = timestepper::step(&s.state, &p, &c, dt)?;
        Ok(())
    })
}

/// Integrates up to `t_end`. `dt <= 0` selects the CFL step with number
/// `cfl`. On failure the state is left unchanged.
///
/// # Safety
/// Pointers must be live or null.
#[no_mangle]
pub unsafe extern "C" fn peq_advance(
    state: *mut PeqState,
    params: *const PeqParams,
    scheme_code: u32,
    t_end: f64,
    dt: f64,
    cfl: f64,
) -> i32 {
    guard(|| {
        let s = deref_mut(state, "state")?;
        let p: Params = (*deref(params, "params")?).into();
        let c = StepConfig {
            dt: if dt > 0.0 { TimeStep::Fixed(dt) } else { TimeStep::Auto },
            t_end,
            cfl,
            scheme: scheme(scheme_code)?,
            ..StepConfig::default()
        };
        s.state = timestepper::run(&s.state, &p, &c, &mut [])?;
        Ok(())
    })
}

/// Advective CFL step for Courant number `cfl`, capped at 0.1.
///
/// # Safety
/// Pointers must be live or null.
#[no_mangle]
pub unsafe extern "C" fn peq_cfl_dt(
    state: *const PeqState,
    params: *const PeqParams,
    cfl: f64,
    out: *mut f64,
) -> i32 {
    guard(|| {
        let s = &deref(state, "state")?.state;
        let p: Params = (*deref(params, "params")?).into();
        let c = StepConfig { cfl, ..StepConfig::default() };
        c.validate()?;
        *deref_mut(out, "out")? = timestepper::cfl_dt(s, &p, &c);
        Ok(())
    })
}

/// Fills `out` with every monitored norm and residual.
///
/// # Safety
/// Pointers must be live or null.
#[no_mangle]
pub unsafe extern "C" fn peq_norm_panel(
    state: *const PeqState,
    params: *const PeqParams,
    out: *mut PeqDiagRecord,
) -> i32 {
    guard(|| {
        let s = &deref(state, "state")?.state;
        let p: Params = (*deref(params, "params")?).into();
        *deref_mut(out, "out")? = norm_panel(s, &p).into();
        Ok(())
    })
}

/// Writes a binary checkpoint of `state` and `params` to `path`.
///
/// # Safety
/// `path` must be a nul-terminated string; other pointers live or null.
#[no_mangle]
pub unsafe extern "C" fn peq_checkpoint_write(
    state: *const PeqState,
    params: *const PeqParams,
    path: *const c_char,
) -> i32 {
    guard(|| {
        let s = &deref(state, "state")?.state;
        let p: Params = (*deref(params, "params")?).into();
        checkpoint::write(Path::new(string(path, "path")?), s, &p)?;
        Ok(())
    })
}

/// Reads a checkpoint into a new state and its stored parameters.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` and `params` must be null
/// or writable.
#[no_mangle]
pub unsafe extern "C" fn peq_checkpoint_read(
    path: *const c_char,
    out: *mut *mut PeqState,
    params: *mut PeqParams,
) -> i32 {
    guard(|| {
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let params = deref_mut(params, "params")?;
        let (s, p) = checkpoint::read(Path::new(string(path, "path")?))?;
        *params = p.into();
        boxed(s, out);
        Ok(())
    })
}
