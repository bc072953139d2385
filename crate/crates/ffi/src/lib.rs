//! C ABI for the nvdg solver.
//!
//! Every function returns an [`NvdgStatus`]; on failure a message is kept per
//! thread and can be read with [`nvdg_last_error_message`]. Reports are opaque
//! handles owned by the caller and released with [`nvdg_report_free`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nvdg::analysis::{run_study, ConvergenceReport, StudyOptions};
use nvdg::assembly::{BilinearFormConfig, FormKind, PenaltyScaling};
use nvdg::hessian::FluxChoice;
use nvdg::problems::ProblemId;
use nvdg::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NvdgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// The linear solver failed on some level; the report holds the levels
    /// completed before it.
    SolverFailed = 3,
    Io = 4,
    OutOfRange = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NvdgForm {
    Eliminated = 0,
    Mixed = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NvdgPenalty {
    /// `sigma / h` on every face.
    Uniform = 0,
    /// `sigma * lambda_max(A) / h`, with `A` sampled on the face.
    Coefficient = 1,
}

/// Study parameters. Obtain defaults from [`nvdg_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NvdgConfig {
    pub degree: c_int,
    pub levels: c_int,
    /// Cells per side of the coarsest mesh.
    pub base_n: c_int,
    pub sigma: f64,
    pub penalty: NvdgPenalty,
    /// +1 or -1.
    pub theta: f64,
    pub form: NvdgForm,
    pub tol: f64,
}

/// One row of a convergence table. Missing rates are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NvdgLevel {
    pub n_elements: usize,
    pub n_dofs: usize,
    pub l2_error: f64,
    pub l2_eoc: f64,
    pub energy_error: f64,
    pub energy_eoc: f64,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Opaque convergence report.
pub struct NvdgReport {
    inner: ConvergenceReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> NvdgStatus {
    match e {
        Error::SolverFailed { .. } => NvdgStatus::SolverFailed,
        Error::Io { .. } => NvdgStatus::Io,
        _ => NvdgStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> NvdgStatus) -> NvdgStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            NvdgStatus::Panic
        }
    }
}

fn fail(status: NvdgStatus, msg: impl Into<String>) -> NvdgStatus {
    set_error(msg);
    status
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn nvdg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nvdg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn nvdg_config_default() -> NvdgConfig {
    let d = BilinearFormConfig::default();
    NvdgConfig {
        degree: 1,
        levels: 5,
        base_n: 8,
        sigma: d.sigma,
        penalty: match d.penalty_scaling {
            PenaltyScaling::Uniform => NvdgPenalty::Uniform,
            PenaltyScaling::Coefficient => NvdgPenalty::Coefficient,
        },
        theta: d.flux.theta(),
        form: NvdgForm::Eliminated,
        tol: 1e-12,
    }
}

fn study_options(cfg: &NvdgConfig) -> Result<StudyOptions, String> {
    let positive = |v: c_int, what: &str| usize::try_from(v).ok().filter(|&v| v > 0).ok_or(format!("{what} must be positive (got {v})"));
    let mut opts = StudyOptions::new(positive(cfg.degree, "degree")?, positive(cfg.levels, "levels")?);
    opts.base_n = positive(cfg.base_n, "base_n")?;
    opts.form.sigma = cfg.sigma;
    opts.form.penalty_scaling = match cfg.penalty {
        NvdgPenalty::Uniform => PenaltyScaling::Uniform,
        NvdgPenalty::Coefficient => PenaltyScaling::Coefficient,
    };
    opts.form.flux = FluxChoice::new(cfg.theta).map_err(|e| e.to_string())?;
    opts.form.form = match cfg.form {
        NvdgForm::Eliminated => FormKind::Eliminated,
        NvdgForm::Mixed => FormKind::Mixed,
    };
    if !(cfg.tol > 0.0 && cfg.tol < 1.0) {
        return Err(format!("tolerance must lie in (0, 1) (got {})", cfg.tol));
    }
    opts.solver.tol = cfg.tol;
    opts.form.validate().map_err(|e| e.to_string())?;
    Ok(opts)
}

/// Runs a refinement study for `test` ("1", "2", "3a" or "3b").
///
/// On `NVDG_STATUS_OK` or `NVDG_STATUS_SOLVER_FAILED` a report is written to
/// `*out`; otherwise `*out` is set to NULL.
///
/// # Safety
/// `test` must be a valid NUL-terminated string, `cfg` may be NULL (defaults)
/// or point to a valid config, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nvdg_run_study(test: *const c_char, cfg: *const NvdgConfig, out: *mut *mut NvdgReport) -> NvdgStatus {
    guard(|| {
        if out.is_null() {
            return fail(NvdgStatus::NullPointer, "out is NULL");
        }
        *out = ptr::null_mut();
        if test.is_null() {
            return fail(NvdgStatus::NullPointer, "test is NULL");
        }
        let id: ProblemId = match CStr::from_ptr(test).to_str().map_err(|e| e.to_string()).and_then(|s| s.parse().map_err(|e: Error| e.to_string())) {
            Ok(id) => id,
            Err(e) => return fail(NvdgStatus::InvalidArgument, e),
        };
        let cfg = if cfg.is_null() { nvdg_config_default() } else { *cfg };
        let opts = match study_options(&cfg) {
            Ok(o) => o,
            Err(e) => return fail(NvdgStatus::InvalidArgument, e),
        };
        match run_study(&id.problem(), &opts) {
            Ok(report) => {
                let status = match &report.failure {
                    Some(f) => fail(NvdgStatus::SolverFailed, f.clone()),
                    None => NvdgStatus::Ok,
                };
                *out = Box::into_raw(Box::new(NvdgReport { inner: report }));
                status
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// Number of completed levels; 0 for NULL.
///
/// # Safety
/// `report` must be NULL or a live handle from [`nvdg_run_study`].
#[no_mangle]
pub unsafe extern "C" fn nvdg_report_num_levels(report: *const NvdgReport) -> usize {
    report.as_ref().map_or(0, |r| r.inner.rows.len())
}

/// 1 when every requested level completed, 0 otherwise.
///
/// # Safety
/// `report` must be NULL or a live handle from [`nvdg_run_study`].
#[no_mangle]
pub unsafe extern "C" fn nvdg_report_is_complete(report: *const NvdgReport) -> c_int {
    report.as_ref().map_or(0, |r| r.inner.is_complete() as c_int)
}

/// Copies row `index` into `*out`.
///
/// # Safety
/// `report` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nvdg_report_level(report: *const NvdgReport, index: usize, out: *mut NvdgLevel) -> NvdgStatus {
    guard(|| {
        let (Some(r), false) = (report.as_ref(), out.is_null()) else {
            return fail(NvdgStatus::NullPointer, "report or out is NULL");
        };
        let Some(row) = r.inner.rows.get(index) else {
            return fail(NvdgStatus::OutOfRange, format!("level {index} out of range ({} levels)", r.inner.rows.len()));
        };
        *out = NvdgLevel {
            n_elements: row.n_elements,
            n_dofs: row.n_dofs,
            l2_error: row.l2_error,
            l2_eoc: row.l2_eoc.unwrap_or(f64::NAN),
            energy_error: row.energy_error,
            energy_eoc: row.energy_eoc.unwrap_or(f64::NAN),
            iterations: row.iterations,
            relative_residual: row.relative_residual,
        };
        NvdgStatus::Ok
    })
}

/// The report as CSV. Free the result with [`nvdg_string_free`]; NULL on error.
///
/// # Safety
/// `report` must be NULL or a live handle from [`nvdg_run_study`].
#[no_mangle]
pub unsafe extern "C" fn nvdg_report_csv(report: *const NvdgReport) -> *mut c_char {
    let Some(r) = report.as_ref() else {
        set_error("report is NULL");
        return ptr::null_mut();
    };
    CString::new(r.inner.to_csv()).map_or(ptr::null_mut(), CString::into_raw)
}

/// # Safety
/// `report` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nvdg_report_free(report: *mut NvdgReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nvdg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
