//! C interface to the solver.
//!
//! The API follows the usual C conventions: opaque handles created and
//! freed by the library, plain `SdaeStatus` return codes with results in
//! out-parameters, and caller-owned buffers. No panic crosses the
//! boundary (panics are caught and reported as
//! `SDAE_STATUS_NUMERICAL_FAILURE`), and every function tolerates null
//! pointers by returning `SDAE_STATUS_NULL_POINTER`.
//!
//! The matching header is `include/sdae.h`, regenerated on every build.

use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use sdae::convergence::{strong_error, ConvergenceConfig, ConvergenceError, ConvergenceReport};
use sdae::model::by_name;
use sdae::scheme::{self, SchemeKind};
use sdae::{SdaeProblem, Trajectory, WienerGrid};

/// Status code returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdaeStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// The model name does not match any built-in problem.
    UnknownModel = 2,
    /// An argument was out of range, or the question does not apply
    /// (for example asking for the slope of a report that has none).
    InvalidArgument = 3,
    /// The computation failed numerically (singular matrix, invalid
    /// grid, or an internal error).
    NumericalFailure = 4,
    /// The trajectory left the finite range; partial results are
    /// still available.
    Diverged = 5,
    /// Validation ran to completion and the model failed it; the
    /// report out-parameter is still filled in.
    ValidationFailed = 6,
    /// A caller-provided buffer is too small.
    BufferTooSmall = 7,
}

/// Time-stepping scheme selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdaeScheme {
    /// Semi-implicit scheme with tamed drift on the original variables.
    DirectTamed = 0,
    /// Equivalent scheme propagating differential and algebraic parts
    /// separately.
    DualTamed = 1,
    /// Semi-implicit scheme without taming; explodes on stiff drift.
    DirectUntamed = 2,
}

impl SdaeScheme {
    fn to_kind(self) -> SchemeKind {
        match self {
            SdaeScheme::DirectTamed => SchemeKind::DirectTamed,
            SdaeScheme::DualTamed => SchemeKind::DualTamed,
            SdaeScheme::DirectUntamed => SchemeKind::DirectUntamed,
        }
    }
}

/// Flattened result of `sdae_validate`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SdaeValidation {
    /// Noise stays out of the constraint equations.
    pub index1_noise_ok: bool,
    /// The constraint system is uniquely solvable along the horizon.
    pub constraint_solvable_ok: bool,
    /// Largest one-sided Lipschitz quotient seen while probing.
    pub probed_one_sided_constant: f64,
    /// Largest monotonicity quotient seen while probing.
    pub probed_monotone_constant: f64,
    /// Random states actually probed.
    pub samples_used: usize,
    /// Worst relative violation of the index-1 noise condition.
    pub worst_violation: f64,
    /// Time at which the worst violation occurred.
    pub worst_violation_t: f64,
}

/// One row of a convergence report.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SdaeConvergenceRow {
    /// Coarse grid resolution.
    pub n: usize,
    /// Step size at that resolution.
    pub h: f64,
    /// Measured strong error.
    pub error_p: f64,
    /// Monte Carlo standard error of `error_p` (NaN when fewer than
    /// two paths were usable).
    pub std_error: f64,
    /// Paths that diverged and were excluded at this resolution.
    pub diverged_paths: usize,
    /// Paths that entered the error estimate.
    pub used_paths: usize,
}

/// Opaque problem handle. Create with `sdae_problem_builtin`, release
/// with `sdae_problem_free`.
pub struct SdaeProblemHandle {
    inner: SdaeProblem,
}

/// Opaque trajectory handle returned by `sdae_simulate`. Release with
/// `sdae_trajectory_free`.
pub struct SdaeTrajectoryHandle {
    inner: Trajectory,
}

/// Opaque convergence report handle returned by `sdae_converge`.
/// Release with `sdae_report_free`.
pub struct SdaeReportHandle {
    inner: ConvergenceReport,
}

fn guarded(f: impl FnOnce() -> SdaeStatus) -> SdaeStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(SdaeStatus::NumericalFailure)
}

fn convergence_status(error: &ConvergenceError) -> SdaeStatus {
    match error {
        ConvergenceError::AllPathsDiverged { .. } => SdaeStatus::Diverged,
        ConvergenceError::Scheme(_) | ConvergenceError::Wiener(_) => SdaeStatus::NumericalFailure,
        _ => SdaeStatus::InvalidArgument,
    }
}

/// Returns the library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sdae_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Returns a static human-readable message for a status code.
#[no_mangle]
pub extern "C" fn sdae_status_message(status: SdaeStatus) -> *const c_char {
    let message: &'static str = match status {
        SdaeStatus::Ok => "ok\0",
        SdaeStatus::NullPointer => "a required pointer was null\0",
        SdaeStatus::UnknownModel => "unknown built-in model name\0",
        SdaeStatus::InvalidArgument => "argument out of range or not applicable\0",
        SdaeStatus::NumericalFailure => "numerical failure\0",
        SdaeStatus::Diverged => "trajectory diverged\0",
        SdaeStatus::ValidationFailed => "model failed validation\0",
        SdaeStatus::BufferTooSmall => "buffer too small\0",
    };
    message.as_ptr().cast()
}

/// Looks up a built-in model by NUL-terminated name and hands back an
/// owned problem handle through `out`.
///
/// # Safety
/// `name` must point to a NUL-terminated string and `out` to a valid
/// pointer slot; on `SDAE_STATUS_OK` the caller owns the handle and must
/// release it with `sdae_problem_free`.
#[no_mangle]
pub unsafe extern "C" fn sdae_problem_builtin(
    name: *const c_char,
    out: *mut *mut SdaeProblemHandle,
) -> SdaeStatus {
    if name.is_null() || out.is_null() {
        return SdaeStatus::NullPointer;
    }
    guarded(|| {
        let Ok(name) = unsafe { CStr::from_ptr(name) }.to_str() else {
            return SdaeStatus::InvalidArgument;
        };
        let Some(problem) = by_name(name) else {
            return SdaeStatus::UnknownModel;
        };
        unsafe {
            *out = Box::into_raw(Box::new(SdaeProblemHandle { inner: problem }));
        }
        SdaeStatus::Ok
    })
}

/// Releases a problem handle; a null handle is ignored.
///
/// # Safety
/// `problem` must be a handle obtained from this library that has not
/// been freed before.
#[no_mangle]
pub unsafe extern "C" fn sdae_problem_free(problem: *mut SdaeProblemHandle) {
    if !problem.is_null() {
        drop(unsafe { Box::from_raw(problem) });
    }
}

/// Writes the state dimension of the problem to `out`.
///
/// # Safety
/// `problem` must be a live handle from this library; `out` must be
/// valid for one `size_t` write.
#[no_mangle]
pub unsafe extern "C" fn sdae_problem_dim(
    problem: *const SdaeProblemHandle,
    out: *mut usize,
) -> SdaeStatus {
    if problem.is_null() || out.is_null() {
        return SdaeStatus::NullPointer;
    }
    unsafe { *out = (*problem).inner.dim() };
    SdaeStatus::Ok
}

/// Writes the number of driving Wiener components to `out`.
///
/// # Safety
/// As for [`sdae_problem_dim`].
#[no_mangle]
pub unsafe extern "C" fn sdae_problem_noise_dim(
    problem: *const SdaeProblemHandle,
    out: *mut usize,
) -> SdaeStatus {
    if problem.is_null() || out.is_null() {
        return SdaeStatus::NullPointer;
    }
    unsafe { *out = (*problem).inner.noise_dim() };
    SdaeStatus::Ok
}

/// Writes the time horizon to `out`.
///
/// # Safety
/// `problem` must be a live handle from this library; `out` must be
/// valid for one `double` write.
#[no_mangle]
pub unsafe extern "C" fn sdae_problem_horizon(
    problem: *const SdaeProblemHandle,
    out: *mut f64,
) -> SdaeStatus {
    if problem.is_null() || out.is_null() {
        return SdaeStatus::NullPointer;
    }
    unsafe { *out = (*problem).inner.horizon() };
    SdaeStatus::Ok
}

/// Runs the index-1 structure checks and drift probes on `samples`
/// random states and fills `out`.
///
/// Returns `SDAE_STATUS_OK` when the model passes,
/// `SDAE_STATUS_VALIDATION_FAILED` (with `out` still filled) when it
/// does not.
///
/// # Safety
/// `problem` must be a live handle from this library; `out` must be
/// valid for one `SdaeValidation` write.
#[no_mangle]
pub unsafe extern "C" fn sdae_validate(
    problem: *const SdaeProblemHandle,
    samples: usize,
    seed: u64,
    out: *mut SdaeValidation,
) -> SdaeStatus {
    if problem.is_null() || out.is_null() {
        return SdaeStatus::NullPointer;
    }
    guarded(|| {
        let report = match unsafe { &(*problem).inner }.validate_index1(samples, seed) {
            Ok(report) => report,
            Err(sdae::model::ModelError::ZeroSamples) => return SdaeStatus::InvalidArgument,
            Err(_) => return SdaeStatus::NumericalFailure,
        };
        unsafe {
            *out = SdaeValidation {
                index1_noise_ok: report.index1_noise_ok,
                constraint_solvable_ok: report.constraint_solvable_ok,
                probed_one_sided_constant: report.probed_one_sided_constant,
                probed_monotone_constant: report.probed_monotone_constant,
                samples_used: report.samples_used,
                worst_violation: report.worst_violation,
                worst_violation_t: report.worst_violation_t,
            };
        }
        if report.passed() {
            SdaeStatus::Ok
        } else {
            SdaeStatus::ValidationFailed
        }
    })
}

/// Integrates one trajectory on an equidistant grid with `steps` steps,
/// driven by the Wiener path identified by `(seed, path_index)`, and
/// hands back an owned trajectory handle through `out`.
///
/// Returns `SDAE_STATUS_DIVERGED` when the iterates left the finite
/// range; the handle is still written and carries the frozen partial
/// trajectory.
///
/// # Safety
/// `problem` must be a live handle from this library and `out` a valid
/// pointer slot; on `SDAE_STATUS_OK` or `SDAE_STATUS_DIVERGED` the
/// caller owns the handle and must release it with
/// `sdae_trajectory_free`.
#[no_mangle]
pub unsafe extern "C" fn sdae_simulate(
    problem: *const SdaeProblemHandle,
    scheme: SdaeScheme,
    steps: usize,
    seed: u64,
    path_index: u64,
    out: *mut *mut SdaeTrajectoryHandle,
) -> SdaeStatus {
    if problem.is_null() || out.is_null() {
        return SdaeStatus::NullPointer;
    }
    guarded(|| {
        let problem = unsafe { &(*problem).inner };
        let grid = match WienerGrid::generate(
            seed,
            path_index,
            problem.noise_dim(),
            steps,
            problem.horizon(),
        ) {
            Ok(grid) => grid,
            Err(_) => return SdaeStatus::InvalidArgument,
        };
        let trajectory = match scheme::simulate(problem, scheme.to_kind(), &grid) {
            Ok(trajectory) => trajectory,
            Err(_) => return SdaeStatus::NumericalFailure,
        };
        let diverged = trajectory.diverged();
        unsafe {
            *out = Box::into_raw(Box::new(SdaeTrajectoryHandle { inner: trajectory }));
        }
        if diverged {
            SdaeStatus::Diverged
        } else {
            SdaeStatus::Ok
        }
    })
}

/// Releases a trajectory handle; a null handle is ignored.
///
/// # Safety
/// `trajectory` must be a handle obtained from this library that has
/// not been freed before.
#[no_mangle]
pub unsafe extern "C" fn sdae_trajectory_free(trajectory: *mut SdaeTrajectoryHandle) {
    if !trajectory.is_null() {
        drop(unsafe { Box::from_raw(trajectory) });
    }
}

/// Writes the number of steps (the trajectory holds `steps + 1` nodes).
///
/// # Safety
/// `trajectory` must be a live handle from this library; `out` must be
/// valid for one `size_t` write.
#[no_mangle]
pub unsafe extern "C" fn sdae_trajectory_steps(
    trajectory: *const SdaeTrajectoryHandle,
    out: *mut usize,
) -> SdaeStatus {
    if trajectory.is_null() || out.is_null() {
        return SdaeStatus::NullPointer;
    }
    unsafe { *out = (*trajectory).inner.steps };
    SdaeStatus::Ok
}

/// Writes the state dimension.
///
/// # Safety
/// As for [`sdae_trajectory_steps`].
#[no_mangle]
pub unsafe extern "C" fn sdae_trajectory_dim(
    trajectory: *const SdaeTrajectoryHandle,
    out: *mut usize,
) -> SdaeStatus {
    if trajectory.is_null() || out.is_null() {
        return SdaeStatus::NullPointer;
    }
    unsafe { *out = (*trajectory).inner.dim };
    SdaeStatus::Ok
}

/// Writes whether the trajectory diverged.
///
/// # Safety
/// `trajectory` must be a live handle from this library; `out` must be
/// valid for one `bool` write.
#[no_mangle]
pub unsafe extern "C" fn sdae_trajectory_diverged(
    trajectory: *const SdaeTrajectoryHandle,
    out: *mut bool,
) -> SdaeStatus {
    if trajectory.is_null() || out.is_null() {
        return SdaeStatus::NullPointer;
    }
    unsafe { *out = (*trajectory).inner.diverged() };
    SdaeStatus::Ok
}

/// Writes the first step at which the iterate became non-finite.
/// Returns `SDAE_STATUS_INVALID_ARGUMENT` when the trajectory never
/// diverged.
///
/// # Safety
/// As for [`sdae_trajectory_steps`].
#[no_mangle]
pub unsafe extern "C" fn sdae_trajectory_diverged_at(
    trajectory: *const SdaeTrajectoryHandle,
    out: *mut usize,
) -> SdaeStatus {
    if trajectory.is_null() || out.is_null() {
        return SdaeStatus::NullPointer;
    }
    match unsafe { &(*trajectory).inner }.diverged_at {
        Some(step) => {
            unsafe { *out = step };
            SdaeStatus::Ok
        }
        None => SdaeStatus::InvalidArgument,
    }
}

/// Copies the state at grid node `node` (0 ..= steps) into `buffer`.
/// `len` is the buffer capacity in doubles and must be at least the
/// state dimension.
///
/// # Safety
/// `trajectory` must be a live handle from this library; `buffer` must
/// be valid for `len` `double` writes.
#[no_mangle]
pub unsafe extern "C" fn sdae_trajectory_state(
    trajectory: *const SdaeTrajectoryHandle,
    node: usize,
    buffer: *mut f64,
    len: usize,
) -> SdaeStatus {
    if trajectory.is_null() || buffer.is_null() {
        return SdaeStatus::NullPointer;
    }
    let trajectory = unsafe { &(*trajectory).inner };
    if node > trajectory.steps {
        return SdaeStatus::InvalidArgument;
    }
    if len < trajectory.dim {
        return SdaeStatus::BufferTooSmall;
    }
    let state = trajectory.states[node].as_slice();
    unsafe {
        std::ptr::copy_nonoverlapping(state.as_ptr(), buffer, trajectory.dim);
    }
    SdaeStatus::Ok
}

/// Runs the Monte Carlo strong-convergence measurement and hands back
/// an owned report handle through `out`.
///
/// `n_list` points to `n_levels` strictly increasing power-of-two
/// resolutions dividing `n_ref`; `p` is the moment exponent.
///
/// # Safety
/// `problem` must be a live handle from this library; `n_list` must be
/// valid for `n_levels` `size_t` reads; `out` must be a valid pointer
/// slot. On `SDAE_STATUS_OK` the caller owns the handle and must
/// release it with `sdae_report_free`.
#[no_mangle]
pub unsafe extern "C" fn sdae_converge(
    problem: *const SdaeProblemHandle,
    scheme: SdaeScheme,
    n_ref: usize,
    n_list: *const usize,
    n_levels: usize,
    paths: usize,
    p: u32,
    seed: u64,
    out: *mut *mut SdaeReportHandle,
) -> SdaeStatus {
    if problem.is_null() || n_list.is_null() || out.is_null() {
        return SdaeStatus::NullPointer;
    }
    guarded(|| {
        let config = ConvergenceConfig {
            scheme: scheme.to_kind(),
            n_ref,
            n_list: unsafe { slice::from_raw_parts(n_list, n_levels) }.to_vec(),
            paths,
            p_exponent: p,
            seed,
        };
        match strong_error(unsafe { &(*problem).inner }, &config) {
            Ok(report) => {
                unsafe {
                    *out = Box::into_raw(Box::new(SdaeReportHandle { inner: report }));
                }
                SdaeStatus::Ok
            }
            Err(error) => convergence_status(&error),
        }
    })
}

/// Releases a report handle; a null handle is ignored.
///
/// # Safety
/// `report` must be a handle obtained from this library that has not
/// been freed before.
#[no_mangle]
pub unsafe extern "C" fn sdae_report_free(report: *mut SdaeReportHandle) {
    if !report.is_null() {
        drop(unsafe { Box::from_raw(report) });
    }
}

/// Writes the number of measured resolutions.
///
/// # Safety
/// `report` must be a live handle from this library; `out` must be
/// valid for one `size_t` write.
#[no_mangle]
pub unsafe extern "C" fn sdae_report_rows(
    report: *const SdaeReportHandle,
    out: *mut usize,
) -> SdaeStatus {
    if report.is_null() || out.is_null() {
        return SdaeStatus::NullPointer;
    }
    unsafe { *out = (*report).inner.rows.len() };
    SdaeStatus::Ok
}

/// Writes the fitted convergence slope. Returns
/// `SDAE_STATUS_INVALID_ARGUMENT` when the report has no fit (fewer
/// than two usable resolutions).
///
/// # Safety
/// `report` must be a live handle from this library; `out` must be
/// valid for one `double` write.
#[no_mangle]
pub unsafe extern "C" fn sdae_report_slope(
    report: *const SdaeReportHandle,
    out: *mut f64,
) -> SdaeStatus {
    if report.is_null() || out.is_null() {
        return SdaeStatus::NullPointer;
    }
    match &unsafe { &(*report).inner }.fit {
        Some(fit) => {
            unsafe { *out = fit.slope };
            SdaeStatus::Ok
        }
        None => SdaeStatus::InvalidArgument,
    }
}

/// Copies row `index` of the report into `out`.
///
/// # Safety
/// `report` must be a live handle from this library; `out` must be
/// valid for one `SdaeConvergenceRow` write.
#[no_mangle]
pub unsafe extern "C" fn sdae_report_row(
    report: *const SdaeReportHandle,
    index: usize,
    out: *mut SdaeConvergenceRow,
) -> SdaeStatus {
    if report.is_null() || out.is_null() {
        return SdaeStatus::NullPointer;
    }
    let report = unsafe { &(*report).inner };
    let Some(row) = report.rows.get(index) else {
        return SdaeStatus::InvalidArgument;
    };
    unsafe {
        *out = SdaeConvergenceRow {
            n: row.n,
            h: row.h,
            error_p: row.error_p,
            std_error: row.std_error,
            diverged_paths: row.diverged_paths,
            used_paths: row.used_paths,
        };
    }
    SdaeStatus::Ok
}
