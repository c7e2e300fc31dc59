//! C interface to the cellpmb trackers.
//!
//! Handles are opaque and owned by the caller: create one with
//! [`cp_tracker_new`] and release it with [`cp_tracker_free`]. Every
//! fallible function returns a [`CpStatus`]; after a non-OK status,
//! [`cp_last_error_message`] describes the failure on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cellpmb::error::Error;
use cellpmb::filter::{AssociationParams, Estimate, FilterKind, FilterParams, FilterSetup, PointParams, Tracker};
use cellpmb::gospa::{gospa, GospaParams};
use cellpmb::measurement::AmplitudeModel;
use cellpmb::model::{Detection, GridGeometry, ThresholdedFrame};
use cellpmb::rng::{stream_rng, Purpose};

pub const CP_PMB_CM: u32 = 0;
pub const CP_PMB_AM: u32 = 1;
pub const CP_PMB: u32 = 2;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidFrame = 3,
    RuntimeError = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpFilterOptions {
    /// One of `CP_PMB_CM`, `CP_PMB_AM`, `CP_PMB`.
    pub kind: u32,
    pub n_rows: u32,
    pub n_cols: u32,
    pub cell_side: f64,
    pub sigma_n_sq: f64,
    pub eta: f64,
    pub dt: f64,
    pub p_s: f64,
    pub particles_per_bernoulli: u32,
    pub phd_particle_budget: u32,
    pub birth_particles: u32,
    pub seed: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpEstimate {
    pub label_step: u32,
    pub label_cell: u32,
    pub r: f64,
    pub p1: f64,
    pub p2: f64,
    pub v1: f64,
    pub v2: f64,
    pub gamma: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CpGospa {
    pub total: f64,
    pub localization: f64,
    pub missed: f64,
    pub false_: f64,
}

/// Opaque tracker handle.
pub struct CpTracker {
    tracker: Tracker,
    estimates: Vec<Estimate>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(status: CpStatus, msg: impl Into<String>) -> CpStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> CpStatus {
    let status = match e {
        Error::InvalidFrame(_) | Error::CellOutOfRange { .. } | Error::BelowThreshold { .. } => CpStatus::InvalidFrame,
        ref e if e.is_validation() => CpStatus::InvalidArgument,
        _ => CpStatus::RuntimeError,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> CpStatus) -> CpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(CpStatus::Panic, "internal panic"),
    }
}

fn kind_of(k: u32) -> Option<FilterKind> {
    match k {
        CP_PMB_CM => Some(FilterKind::PmbCm),
        CP_PMB_AM => Some(FilterKind::PmbAm),
        CP_PMB => Some(FilterKind::Pmb),
        _ => None,
    }
}

/// Fills `out` with the default 32 x 32 setup for PMB-CM at eta = 4.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cp_default_options(out: *mut CpFilterOptions) -> CpStatus {
    if out.is_null() {
        return fail(CpStatus::NullPointer, "out is null");
    }
    let p = FilterParams::default();
    let g = GridGeometry::standard();
    out.write(CpFilterOptions {
        kind: CP_PMB_CM,
        n_rows: g.n_rows() as u32,
        n_cols: g.n_cols() as u32,
        cell_side: g.cell_side(),
        sigma_n_sq: AmplitudeModel::default().sigma_n_sq(),
        eta: 4.0,
        dt: 0.25,
        p_s: p.p_s,
        particles_per_bernoulli: p.particles_per_bernoulli as u32,
        phd_particle_budget: p.phd_particle_budget as u32,
        birth_particles: p.birth_particles as u32,
        seed: 1,
    });
    CpStatus::Ok
}

fn build(o: &CpFilterOptions) -> Result<Tracker, CpStatus> {
    let kind = kind_of(o.kind).ok_or_else(|| fail(CpStatus::InvalidArgument, format!("unknown filter kind {}", o.kind)))?;
    let geometry = GridGeometry::new(o.n_rows as usize, o.n_cols as usize, o.cell_side, (0.0, 0.0)).map_err(from_error)?;
    let amplitude = AmplitudeModel::new(o.sigma_n_sq).map_err(from_error)?;
    let params = FilterParams {
        p_s: o.p_s,
        particles_per_bernoulli: o.particles_per_bernoulli as usize,
        phd_particle_budget: o.phd_particle_budget as usize,
        birth_particles: o.birth_particles as usize,
        ..Default::default()
    };
    let setup = FilterSetup {
        kind,
        geometry,
        amplitude,
        eta: o.eta,
        dt: o.dt,
        params,
        point: PointParams::default(),
        association: AssociationParams::default(),
    };
    Tracker::new(setup, stream_rng(o.seed, 0, Purpose::Filter, 0)).map_err(from_error)
}

/// Creates a tracker. On success `*out` owns a new handle.
///
/// # Safety
/// `options` must be null or point to a valid `CpFilterOptions`; `out` must
/// be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cp_tracker_new(options: *const CpFilterOptions, out: *mut *mut CpTracker) -> CpStatus {
    guard(|| {
        if options.is_null() || out.is_null() {
            return fail(CpStatus::NullPointer, "options or out is null");
        }
        out.write(ptr::null_mut());
        match build(&*options) {
            Ok(tracker) => {
                out.write(Box::into_raw(Box::new(CpTracker {
                    tracker,
                    estimates: Vec::new(),
                })));
                CpStatus::Ok
            }
            Err(s) => s,
        }
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `tracker` must be null or a handle from [`cp_tracker_new`] that has not
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn cp_tracker_free(tracker: *mut CpTracker) {
    if !tracker.is_null() {
        drop(Box::from_raw(tracker));
    }
}

/// Runs one predict/update cycle on a scan given as `n` detections: cell
/// indices (row-major) and their amplitudes, which must exceed the
/// tracker's threshold.
///
/// # Safety
/// `tracker` must be a live handle; `cells` and `amplitudes` must each point
/// to `n` readable elements (they may be null when `n` is 0).
#[no_mangle]
pub unsafe extern "C" fn cp_tracker_step(
    tracker: *mut CpTracker,
    cells: *const u32,
    amplitudes: *const f64,
    n: usize,
) -> CpStatus {
    guard(|| {
        if tracker.is_null() || (n > 0 && (cells.is_null() || amplitudes.is_null())) {
            return fail(CpStatus::NullPointer, "tracker or detection arrays are null");
        }
        let t = &mut *tracker;
        let detections = if n == 0 {
            Vec::new()
        } else {
            let cells = std::slice::from_raw_parts(cells, n);
            let amps = std::slice::from_raw_parts(amplitudes, n);
            cells
                .iter()
                .zip(amps)
                .map(|(&cell, &amplitude)| Detection {
                    cell: cell as usize,
                    amplitude,
                })
                .collect()
        };
        let setup = t.tracker.setup();
        let frame = match ThresholdedFrame::new(setup.geometry, setup.eta, detections) {
            Ok(f) => f,
            Err(e) => return from_error(e),
        };
        match t.tracker.step(&frame) {
            Ok(step) => {
                t.estimates = step.estimates;
                CpStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Number of estimates after the last step; 0 for a null handle.
///
/// # Safety
/// `tracker` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cp_tracker_num_estimates(tracker: *const CpTracker) -> usize {
    if tracker.is_null() {
        0
    } else {
        (*tracker).estimates.len()
    }
}

/// Copies the estimates of the last step into `out`. `*written` receives the
/// number copied; with too small a buffer nothing is copied, `*written`
/// receives the required length and `BufferTooSmall` is returned.
///
/// # Safety
/// `tracker` must be a live handle, `out` valid for `capacity` writes (or
/// null when `capacity` is 0), and `written` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn cp_tracker_estimates(
    tracker: *const CpTracker,
    out: *mut CpEstimate,
    capacity: usize,
    written: *mut usize,
) -> CpStatus {
    guard(|| {
        if tracker.is_null() || written.is_null() || (capacity > 0 && out.is_null()) {
            return fail(CpStatus::NullPointer, "tracker, out or written is null");
        }
        let est = &(*tracker).estimates;
        written.write(est.len());
        if est.len() > capacity {
            return fail(CpStatus::BufferTooSmall, format!("{} estimates, capacity {capacity}", est.len()));
        }
        for (i, e) in est.iter().enumerate() {
            out.add(i).write(CpEstimate {
                label_step: e.label.step,
                label_cell: e.label.cell,
                r: e.r,
                p1: e.state.p1,
                p2: e.state.p2,
                v1: e.state.v1,
                v2: e.state.v2,
                gamma: e.state.gamma,
            });
        }
        CpStatus::Ok
    })
}

/// Expected number of objects: PHD mass plus the sum of existence
/// probabilities.
///
/// # Safety
/// `tracker` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn cp_tracker_expected_cardinality(tracker: *const CpTracker, out: *mut f64) -> CpStatus {
    if tracker.is_null() || out.is_null() {
        return fail(CpStatus::NullPointer, "tracker or out is null");
    }
    out.write((*tracker).tracker.belief().expected_cardinality());
    CpStatus::Ok
}

/// Detection probability of an object with intensity `gamma`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn cp_p_d(gamma: f64, eta: f64, sigma_n_sq: f64, out: *mut f64) -> CpStatus {
    if out.is_null() {
        return fail(CpStatus::NullPointer, "out is null");
    }
    if !(gamma >= 0.0 && gamma.is_finite() && eta >= 0.0 && eta.is_finite()) {
        return fail(CpStatus::InvalidArgument, "gamma and eta must be finite and nonnegative");
    }
    match AmplitudeModel::new(sigma_n_sq) {
        Ok(m) => {
            out.write(m.p_d_gamma(gamma, eta));
            CpStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

/// Per-cell false-alarm probability.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn cp_p_fa(eta: f64, sigma_n_sq: f64, out: *mut f64) -> CpStatus {
    if out.is_null() {
        return fail(CpStatus::NullPointer, "out is null");
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return fail(CpStatus::InvalidArgument, "eta must be finite and nonnegative");
    }
    match AmplitudeModel::new(sigma_n_sq) {
        Ok(m) => {
            out.write(m.p_fa(eta));
            CpStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

unsafe fn points<'a>(xy: *const f64, n: usize) -> Vec<[f64; 2]> {
    if n == 0 {
        return Vec::new();
    }
    std::slice::from_raw_parts::<'a, f64>(xy, 2 * n)
        .chunks_exact(2)
        .map(|c| [c[0], c[1]])
        .collect()
}

/// GOSPA distance (alpha = 2) between `n` truth and `m` estimated positions,
/// each given as interleaved `x, y` pairs.
///
/// # Safety
/// `truth_xy` must hold `2 n` readable values and `estimates_xy` `2 m` (either
/// may be null when its count is 0); `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn cp_gospa(
    truth_xy: *const f64,
    n: usize,
    estimates_xy: *const f64,
    m: usize,
    c: f64,
    p: f64,
    out: *mut CpGospa,
) -> CpStatus {
    guard(|| {
        if out.is_null() || (n > 0 && truth_xy.is_null()) || (m > 0 && estimates_xy.is_null()) {
            return fail(CpStatus::NullPointer, "input or output pointer is null");
        }
        let x = points(truth_xy, n);
        let y = points(estimates_xy, m);
        if x.iter().chain(&y).flatten().any(|v| !v.is_finite()) {
            return fail(CpStatus::InvalidArgument, "positions must be finite");
        }
        match gospa(&x, &y, &GospaParams { p, c, beta: 2.0 }) {
            Ok(g) => {
                out.write(CpGospa {
                    total: g.total,
                    localization: g.localization,
                    missed: g.missed,
                    false_: g.false_,
                });
                CpStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Message describing the last failure on this thread, or an empty string.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}
