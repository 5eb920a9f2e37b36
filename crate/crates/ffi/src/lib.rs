//! C interface to `approxk`.
//!
//! Scenario runs return an opaque [`ApproxkReport`] that owns its JSON and CSV
//! renderings; free it with [`approxk_report_free`]. Every entry point returns an
//! [`ApproxkStatus`], and the message of the most recent failure on the calling
//! thread is available from [`approxk_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use approxk::error::Error;
use approxk::functional_calculus::riesz_idempotent;
use approxk::matrix::{CMatrix, Tol, C64};
use approxk::scenario::{self, Report, RunOptions};

/// Result of a call. Numerical failures have one code per error kind.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApproxkStatus {
    Ok = 0,
    /// The scenario ran but at least one check failed.
    ChecksFailed = 1,
    /// Malformed scenario, bad options or invalid arguments.
    InvalidInput = 2,
    NullPointer = 3,
    InvalidUtf8 = 4,
    Panic = 5,
    NotInvertible = 10,
    DefectiveMatrix = 11,
    ClosureFailure = 12,
    AmbiguousIntersection = 13,
    DecompositionFailure = 14,
    NotAClass = 15,
    NotEquivalent = 16,
    PathTooCoarse = 17,
    GridTooCoarse = 18,
    NotQuantized = 19,
    DefectTooLarge = 20,
    SpectralAmbiguity = 21,
    NotCloseEnough = 22,
    RoundingUnstable = 23,
    NotAContraction = 24,
    NeedsHomotopyNormalization = 25,
    ExactnessViolation = 26,
    IotaNotZero = 27,
    NoWitness = 28,
    ReconstructionFailed = 29,
    PairNotUniform = 30,
}

impl ApproxkStatus {
    const ALL: [ApproxkStatus; 27] = {
        use ApproxkStatus::*;
        [
            Ok,
            ChecksFailed,
            InvalidInput,
            NullPointer,
            InvalidUtf8,
            Panic,
            NotInvertible,
            DefectiveMatrix,
            ClosureFailure,
            AmbiguousIntersection,
            DecompositionFailure,
            NotAClass,
            NotEquivalent,
            PathTooCoarse,
            GridTooCoarse,
            NotQuantized,
            DefectTooLarge,
            SpectralAmbiguity,
            NotCloseEnough,
            RoundingUnstable,
            NotAContraction,
            NeedsHomotopyNormalization,
            ExactnessViolation,
            IotaNotZero,
            NoWitness,
            ReconstructionFailed,
            PairNotUniform,
        ]
    };

    fn from_name(name: &str) -> ApproxkStatus {
        use ApproxkStatus::*;
        match name {
            "NotInvertible" => NotInvertible,
            "DefectiveMatrix" => DefectiveMatrix,
            "ClosureFailure" => ClosureFailure,
            "AmbiguousIntersection" => AmbiguousIntersection,
            "DecompositionFailure" => DecompositionFailure,
            "NotAClass" => NotAClass,
            "NotEquivalent" => NotEquivalent,
            "PathTooCoarse" => PathTooCoarse,
            "GridTooCoarse" => GridTooCoarse,
            "NotQuantized" => NotQuantized,
            "DefectTooLarge" => DefectTooLarge,
            "SpectralAmbiguity" => SpectralAmbiguity,
            "NotCloseEnough" => NotCloseEnough,
            "RoundingUnstable" => RoundingUnstable,
            "NotAContraction" => NotAContraction,
            "NeedsHomotopyNormalization" => NeedsHomotopyNormalization,
            "ExactnessViolation" => ExactnessViolation,
            "IotaNotZero" => IotaNotZero,
            "NoWitness" => NoWitness,
            "ReconstructionFailed" => ReconstructionFailed,
            "PairNotUniform" => PairNotUniform,
            _ => InvalidInput,
        }
    }

    fn name(self) -> &'static CStr {
        use ApproxkStatus::*;
        match self {
            Ok => c"Ok",
            ChecksFailed => c"ChecksFailed",
            InvalidInput => c"InvalidInput",
            NullPointer => c"NullPointer",
            InvalidUtf8 => c"InvalidUtf8",
            Panic => c"Panic",
            NotInvertible => c"NotInvertible",
            DefectiveMatrix => c"DefectiveMatrix",
            ClosureFailure => c"ClosureFailure",
            AmbiguousIntersection => c"AmbiguousIntersection",
            DecompositionFailure => c"DecompositionFailure",
            NotAClass => c"NotAClass",
            NotEquivalent => c"NotEquivalent",
            PathTooCoarse => c"PathTooCoarse",
            GridTooCoarse => c"GridTooCoarse",
            NotQuantized => c"NotQuantized",
            DefectTooLarge => c"DefectTooLarge",
            SpectralAmbiguity => c"SpectralAmbiguity",
            NotCloseEnough => c"NotCloseEnough",
            RoundingUnstable => c"RoundingUnstable",
            NotAContraction => c"NotAContraction",
            NeedsHomotopyNormalization => c"NeedsHomotopyNormalization",
            ExactnessViolation => c"ExactnessViolation",
            IotaNotZero => c"IotaNotZero",
            NoWitness => c"NoWitness",
            ReconstructionFailed => c"ReconstructionFailed",
            PairNotUniform => c"PairNotUniform",
        }
    }
}

impl From<&Error> for ApproxkStatus {
    fn from(e: &Error) -> Self {
        ApproxkStatus::from_name(e.name())
    }
}

/// Run settings. Start from [`approxk_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ApproxkOptions {
    /// Membership tolerance; non-positive keeps the default or `APPROXK_TOL`.
    pub membership_tol: f64,
    /// Replaces the scenario's seed when `has_seed` is set.
    pub seed: u64,
    pub has_seed: bool,
    /// Loop sample count; 0 keeps the scenario's.
    pub grid: usize,
    /// Worker threads; 0 is treated as 1.
    pub jobs: usize,
}

/// Measurements of one idempotent rounding.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ApproxkRieszCert {
    /// `||e^2 - e||`.
    pub defect: f64,
    /// `||e||`.
    pub norm: f64,
    /// Distance from the input to the rounded idempotent.
    pub distance: f64,
    pub bound: f64,
    pub passed: bool,
}

/// Result of a scenario run.
pub struct ApproxkReport {
    report: Report,
    json: CString,
    csv: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(status: ApproxkStatus, msg: impl Into<String>) -> ApproxkStatus {
    set_last_error(msg);
    status
}

fn guard(f: impl FnOnce() -> ApproxkStatus) -> ApproxkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(ApproxkStatus::Panic, "panic inside approxk"),
    }
}

fn to_cstring(s: String) -> CString {
    CString::new(s).unwrap_or_default()
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn approxk_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => c"",
    };
    VERSION.as_ptr()
}

/// Stable name of a status code as a static string; `"Unknown"` for other values.
#[no_mangle]
pub extern "C" fn approxk_status_name(code: i32) -> *const c_char {
    match ApproxkStatus::ALL.iter().find(|s| **s as i32 == code) {
        Some(s) => s.name().as_ptr(),
        None => c"Unknown".as_ptr(),
    }
}

/// Message of the last failure on this thread; valid until the next failing call.
#[no_mangle]
pub extern "C" fn approxk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn approxk_options_default() -> ApproxkOptions {
    ApproxkOptions { membership_tol: 0.0, seed: 0, has_seed: false, grid: 0, jobs: 1 }
}

fn run_options(o: &ApproxkOptions) -> RunOptions {
    let tol = Tol::from_env();
    RunOptions {
        tol: if o.membership_tol > 0.0 { tol.with_membership(o.membership_tol) } else { tol },
        seed: o.has_seed.then_some(o.seed),
        grid: (o.grid > 0).then_some(o.grid),
        jobs: o.jobs.max(1),
    }
}

/// Runs a scenario given as NUL-terminated JSON text.
///
/// On `Ok` and `ChecksFailed` a report is stored in `*out`; otherwise `*out` is null.
/// `options` may be null for defaults.
///
/// # Safety
/// `scenario_json` must be a valid NUL-terminated string, `options` null or valid,
/// and `out` a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn approxk_run_scenario(
    scenario_json: *const c_char,
    options: *const ApproxkOptions,
    out: *mut *mut ApproxkReport,
) -> ApproxkStatus {
    guard(|| {
        if out.is_null() {
            return fail(ApproxkStatus::NullPointer, "out is null");
        }
        // SAFETY: checked non-null; the caller provides writable storage.
        unsafe { *out = ptr::null_mut() };
        if scenario_json.is_null() {
            return fail(ApproxkStatus::NullPointer, "scenario_json is null");
        }
        // SAFETY: the caller guarantees a NUL-terminated string.
        let text = match unsafe { CStr::from_ptr(scenario_json) }.to_str() {
            Ok(t) => t,
            Err(e) => return fail(ApproxkStatus::InvalidUtf8, e.to_string()),
        };
        let opts = if options.is_null() {
            approxk_options_default()
        } else {
            // SAFETY: non-null and valid per the contract.
            unsafe { *options }
        };
        let opts = run_options(&opts);
        let report = match scenario::run_text(text, &opts) {
            Ok(r) => r,
            Err(e) => return fail(ApproxkStatus::InvalidInput, e.0),
        };
        let status = if report.passed { ApproxkStatus::Ok } else { ApproxkStatus::ChecksFailed };
        if !report.passed {
            let first = report.checks.iter().find(|c| !c.passed);
            set_last_error(match first.and_then(|c| c.error.as_ref().map(|e| (c, e))) {
                Some((c, e)) => format!("{}: {}: {}", c.name, e.name, e.message),
                None => format!("{} checks failed", report.summary.failed),
            });
        }
        let json = to_cstring(report.to_json());
        let csv = to_cstring(report.to_csv());
        let handle = Box::new(ApproxkReport { report, json, csv });
        // SAFETY: checked non-null above.
        unsafe { *out = Box::into_raw(handle) };
        status
    })
}

/// Whether every check passed; false for a null handle.
///
/// # Safety
/// `report` must be null or a live handle from [`approxk_run_scenario`].
#[no_mangle]
pub unsafe extern "C" fn approxk_report_passed(report: *const ApproxkReport) -> bool {
    // SAFETY: null or live per the contract.
    unsafe { report.as_ref() }.is_some_and(|r| r.report.passed)
}

/// Number of checks run; 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle from [`approxk_run_scenario`].
#[no_mangle]
pub unsafe extern "C" fn approxk_report_check_count(report: *const ApproxkReport) -> usize {
    // SAFETY: null or live per the contract.
    unsafe { report.as_ref() }.map_or(0, |r| r.report.summary.total)
}

/// Number of failed checks; 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle from [`approxk_run_scenario`].
#[no_mangle]
pub unsafe extern "C" fn approxk_report_failed_count(report: *const ApproxkReport) -> usize {
    // SAFETY: null or live per the contract.
    unsafe { report.as_ref() }.map_or(0, |r| r.report.summary.failed)
}

/// Pretty-printed JSON report, owned by the handle; null for a null handle.
///
/// # Safety
/// `report` must be null or a live handle from [`approxk_run_scenario`].
#[no_mangle]
pub unsafe extern "C" fn approxk_report_json(report: *const ApproxkReport) -> *const c_char {
    // SAFETY: null or live per the contract.
    unsafe { report.as_ref() }.map_or(ptr::null(), |r| r.json.as_ptr())
}

/// CSV summary `name,kind,passed,error`, owned by the handle; null for a null handle.
///
/// # Safety
/// `report` must be null or a live handle from [`approxk_run_scenario`].
#[no_mangle]
pub unsafe extern "C" fn approxk_report_csv(report: *const ApproxkReport) -> *const c_char {
    // SAFETY: null or live per the contract.
    unsafe { report.as_ref() }.map_or(ptr::null(), |r| r.csv.as_ptr())
}

/// Releases a report; null is ignored.
///
/// # Safety
/// `report` must be null or a handle from [`approxk_run_scenario`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn approxk_report_free(report: *mut ApproxkReport) {
    if !report.is_null() {
        // SAFETY: the handle came from Box::into_raw and is freed once.
        drop(unsafe { Box::from_raw(report) });
    }
}

/// Rounds an almost-idempotent `n x n` matrix to an idempotent.
///
/// Matrices are row-major with separate real and imaginary parts. `out_re`,
/// `out_im` and `cert` may be null when not wanted.
///
/// # Safety
/// `re` and `im` must point to `n * n` readable doubles; non-null outputs to
/// `n * n` writable doubles and one writable certificate.
#[no_mangle]
pub unsafe extern "C" fn approxk_riesz_round(
    re: *const f64,
    im: *const f64,
    n: usize,
    out_re: *mut f64,
    out_im: *mut f64,
    cert: *mut ApproxkRieszCert,
) -> ApproxkStatus {
    guard(|| {
        if re.is_null() || im.is_null() {
            return fail(ApproxkStatus::NullPointer, "input matrix is null");
        }
        if n == 0 {
            return fail(ApproxkStatus::InvalidInput, "matrix size must be positive");
        }
        let Some(len) = n.checked_mul(n) else {
            return fail(ApproxkStatus::InvalidInput, "matrix size overflows");
        };
        // SAFETY: the caller guarantees n * n readable doubles.
        let (re, im) = unsafe { (std::slice::from_raw_parts(re, len), std::slice::from_raw_parts(im, len)) };
        let e = CMatrix::from_fn(n, n, |i, j| C64::new(re[i * n + j], im[i * n + j]));
        let (f, c) = match riesz_idempotent(&e, &Tol::from_env()) {
            Ok(x) => x,
            Err(err) => return fail(ApproxkStatus::from(&err), format!("{}: {err}", err.name())),
        };
        if !out_re.is_null() && !out_im.is_null() {
            // SAFETY: the caller guarantees n * n writable doubles.
            let (ore, oim) =
                unsafe { (std::slice::from_raw_parts_mut(out_re, len), std::slice::from_raw_parts_mut(out_im, len)) };
            for i in 0..n {
                for j in 0..n {
                    ore[i * n + j] = f[(i, j)].re;
                    oim[i * n + j] = f[(i, j)].im;
                }
            }
        }
        if !cert.is_null() {
            let out = ApproxkRieszCert {
                defect: c.input_defect,
                norm: c.input_norm_bound,
                distance: c.output_distance,
                bound: c.bound,
                passed: c.passed,
            };
            // SAFETY: non-null and writable per the contract.
            unsafe { *cert = out };
        }
        ApproxkStatus::Ok
    })
}
