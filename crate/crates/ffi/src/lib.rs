//! C ABI for `spinrelax`.
//!
//! Every fallible function returns an [`SrStatus`] and writes its result
//! through an out-pointer. On failure the out-pointer is left untouched and
//! [`sr_last_error_message`] describes the error; the message is per thread
//! and stays until the next failing call on that thread.
//!
//! Handles ([`SrModel`], [`SrSerf`]) are opaque, immutable after creation and
//! may be shared between threads. Free them with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use spinrelax::evolution::{delta_gamma2, evolve_fid_spectral, LongitudinalGradient, T2Options};
use spinrelax::model::{DEFAULT_GRID_POINTS, DEFAULT_MODES};
use spinrelax::perturbation::{perturbation_parameter, second_order_closed_form, second_order_rate};
use spinrelax::serf::{
    default_by_grid, linewidth_broadening, mean_sx, symmetry_check_xz, SerfOptions, SerfScenario, SerfSolver,
    SlowDownConvention,
};
use spinrelax::{CellGeometry, Error, GradientField, ModeIndex, SpinParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrStatus {
    Ok = 0,
    InvalidParameter = 1,
    DegenerateParameters = 2,
    ModeOutOfRange = 3,
    Degeneracy = 4,
    InsufficientHorizon = 5,
    SolverFailed = 6,
    RangeNotBracketed = 7,
    NullPointer = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrConvention {
    /// `q` multiplies the diffusion constant only.
    LiteralQ = 0,
    /// Diffusion unchanged, gyromagnetic ratio and pump divided by `q`.
    ScaledQ = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrSerfSolver {
    Spectral = 0,
    FiniteDifference = 1,
}

/// Cell and spin parameters. Rates in 1/s, lengths in cm.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SrModelParams {
    pub length: f64,
    /// Sine modes per axis.
    pub modes: usize,
    /// Interior grid points per axis of the finite-difference solvers.
    pub grid_points: usize,
    pub diffusion: f64,
    pub gyro: f64,
    pub base_rate: f64,
    pub pump_rate: f64,
    pub slow_down: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SrRelaxation {
    pub t2: f64,
    pub gamma2: f64,
    pub delta_gamma2: f64,
    pub phase_rate: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SrLinewidth {
    pub w: f64,
    pub w0: f64,
    pub delta_w: f64,
    pub b_min: f64,
    pub b_max: f64,
    pub extensions: usize,
}

pub struct SrModel {
    geom: CellGeometry,
    spin: SpinParams,
}

pub struct SrSerf {
    scenario: SerfScenario,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(SrStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::InvalidParameter { .. } | Error::EmptyTimeGrid | Error::UnknownCase(_) => SrStatus::InvalidParameter,
            Error::DegenerateParameters(_) => SrStatus::DegenerateParameters,
            Error::ModeOutOfRange { .. } | Error::ModeNotIncluded { .. } => SrStatus::ModeOutOfRange,
            Error::Degeneracy { .. } => SrStatus::Degeneracy,
            Error::InsufficientHorizon { .. } => SrStatus::InsufficientHorizon,
            Error::Solver { .. } => SrStatus::SolverFailed,
            Error::Range { .. } => SrStatus::RangeNotBracketed,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SrStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("internal panic: {msg}"));
            SrStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(SrStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(p: *mut T, what: &str, value: T) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`) and returns the length needed including the NUL.
/// `buf` may be null to query the length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sr_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len);
            std::ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n - 1) = 0;
        }
        bytes.len()
    })
}

/// Defaults: `L = 0.2`, 15 modes, 48 grid points, `D = 0.2`, unit gyro,
/// `Gamma0 = 20`, unit pump, no slow-down.
#[no_mangle]
pub extern "C" fn sr_model_params_default() -> SrModelParams {
    SrModelParams {
        length: 0.2,
        modes: DEFAULT_MODES,
        grid_points: DEFAULT_GRID_POINTS,
        diffusion: 0.2,
        gyro: 1.0,
        base_rate: 20.0,
        pump_rate: 1.0,
        slow_down: 1.0,
    }
}

/// # Safety
/// `params` must point to a valid [`SrModelParams`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sr_model_new(params: *const SrModelParams, out: *mut *mut SrModel) -> SrStatus {
    guard(|| {
        let p = deref(params, "params")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let geom = CellGeometry::new(p.length, p.modes, p.grid_points)?;
        let spin = SpinParams::new(p.diffusion, p.gyro, p.base_rate, p.pump_rate, p.slow_down)?;
        write(out, "out", Box::into_raw(Box::new(SrModel { geom, spin })))
    })
}

/// # Safety
/// `model` must be null or come from [`sr_model_new`] and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn sr_model_free(model: *mut SrModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// `16 gamma g L^3 / (27 pi^4 D)` for a gradient `g >= 0`.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sr_perturbation_parameter(model: *const SrModel, g: f64, out: *mut f64) -> SrStatus {
    guard(|| {
        let m = deref(model, "model")?;
        write(out, "out", perturbation_parameter(&m.geom, &m.spin, g)?)
    })
}

/// Second-order rate of mode `(m, n, l)` summed over the model's truncation.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sr_second_order_rate(
    model: *const SrModel,
    g: f64,
    m: usize,
    n: usize,
    l: usize,
    out: *mut f64,
) -> SrStatus {
    guard(|| {
        let h = deref(model, "model")?;
        let idx = ModeIndex::new(m, n, l)?;
        write(out, "out", second_order_rate(&h.geom, &h.spin, g, idx)?)
    })
}

/// Closed-form second-order rate for `m` in 1..=3.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sr_second_order_closed_form(
    model: *const SrModel,
    g: f64,
    m: usize,
    out: *mut f64,
) -> SrStatus {
    guard(|| {
        let h = deref(model, "model")?;
        let v = second_order_closed_form(&h.geom, &h.spin, g, m)
            .ok_or_else(|| Failure(SrStatus::InvalidParameter, format!("no closed form for m = {m}")))?;
        write(out, "out", v)
    })
}

/// Normalized free-induction decay for `B_z = g x` on `n_steps + 1` uniform
/// samples of `[0, t_end]`. `times` may be null; `re` and `im` may not. All
/// non-null buffers must hold at least `len >= n_steps + 1` values.
///
/// # Safety
/// `model` must be a live handle; buffers must hold `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn sr_fid_spectral(
    model: *const SrModel,
    g: f64,
    subtract_offset: bool,
    t_end: f64,
    n_steps: usize,
    times: *mut f64,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> SrStatus {
    guard(|| {
        let h = deref(model, "model")?;
        if re.is_null() || im.is_null() {
            return Err(null(if re.is_null() { "re" } else { "im" }));
        }
        if len < n_steps.saturating_add(1) {
            return Err(Failure(
                SrStatus::BufferTooSmall,
                format!("buffers hold {len} values, need {}", n_steps.saturating_add(1)),
            ));
        }
        let field = LongitudinalGradient { g, subtract_offset };
        let trace = evolve_fid_spectral(&h.geom, &h.spin, field, t_end, n_steps)?;
        let re = std::slice::from_raw_parts_mut(re, trace.len());
        let im = std::slice::from_raw_parts_mut(im, trace.len());
        for (k, v) in trace.values().iter().enumerate() {
            re[k] = v.re;
            im[k] = v.im;
        }
        if !times.is_null() {
            std::slice::from_raw_parts_mut(times, trace.len()).copy_from_slice(trace.times());
        }
        Ok(())
    })
}

/// `T2`, `Gamma2`, `Gamma2(g) - Gamma2(0)` and the phase rate from the
/// spectral solver with automatic horizon.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sr_delta_gamma2(model: *const SrModel, g: f64, out: *mut SrRelaxation) -> SrStatus {
    guard(|| {
        let h = deref(model, "model")?;
        let r = delta_gamma2(&h.geom, &h.spin, g, T2Options::default())?;
        write(
            out,
            "out",
            SrRelaxation {
                t2: r.t2,
                gamma2: r.gamma2,
                delta_gamma2: r.delta_gamma2,
                phase_rate: r.phase_rate,
            },
        )
    })
}

/// SERF scenario with gradient `(gx, gy, gz)`, constant part compensated.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sr_serf_new(
    model: *const SrModel,
    gx: f64,
    gy: f64,
    gz: f64,
    convention: SrConvention,
    out: *mut *mut SrSerf,
) -> SrStatus {
    guard(|| {
        let h = deref(model, "model")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let convention = match convention {
            SrConvention::LiteralQ => SlowDownConvention::LiteralQ,
            SrConvention::ScaledQ => SlowDownConvention::ScaledQ,
        };
        let scenario = SerfScenario::new(h.geom, h.spin, GradientField::new([gx, gy, gz]))?.with_convention(convention);
        write(out, "out", Box::into_raw(Box::new(SrSerf { scenario })))
    })
}

/// # Safety
/// `serf` must be null or come from [`sr_serf_new`] and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn sr_serf_free(serf: *mut SrSerf) {
    if !serf.is_null() {
        drop(Box::from_raw(serf));
    }
}

/// Volume-averaged steady-state `S_x` at uniform field `by`.
///
/// # Safety
/// `serf` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sr_serf_mean_sx(
    serf: *const SrSerf,
    by: f64,
    solver: SrSerfSolver,
    out: *mut f64,
) -> SrStatus {
    guard(|| {
        let s = deref(serf, "serf")?;
        let solver = match solver {
            SrSerfSolver::Spectral => SerfSolver::Spectral,
            SrSerfSolver::FiniteDifference => SerfSolver::FiniteDifference,
        };
        let v = mean_sx(&s.scenario.with_by(by), &SerfOptions::default().with_solver(solver))?;
        write(out, "out", v)
    })
}

/// Linewidth of `S_x(B_y)` and its broadening relative to the same scenario
/// without gradients, on an automatic grid of `by_points >= 5` fields.
///
/// # Safety
/// `serf` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sr_serf_linewidth(serf: *const SrSerf, by_points: usize, out: *mut SrLinewidth) -> SrStatus {
    guard(|| {
        let s = deref(serf, "serf")?;
        let grid = default_by_grid(&s.scenario, by_points)?;
        let b = linewidth_broadening(&s.scenario, &grid, &SerfOptions::default())?;
        write(
            out,
            "out",
            SrLinewidth {
                w: b.w(),
                w0: b.w0(),
                delta_w: b.delta_w,
                b_min: b.sweep.b_min,
                b_max: b.sweep.b_max,
                extensions: b.sweep.extensions,
            },
        )
    })
}

/// Relative change of `S_x` at `by` when the x and z gradient components are
/// exchanged.
///
/// # Safety
/// `serf` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sr_serf_symmetry_xz(serf: *const SrSerf, by: f64, out: *mut f64) -> SrStatus {
    guard(|| {
        let s = deref(serf, "serf")?;
        let v = symmetry_check_xz(&s.scenario.with_by(by), &SerfOptions::default())?;
        write(out, "out", v)
    })
}
