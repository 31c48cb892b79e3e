//! C ABI for `noisymem`.
//!
//! Every object lives behind an opaque handle created by an `nm_*` constructor
//! and released with the matching `nm_*_free`. Fallible calls return an
//! [`NmStatus`]; on failure [`nm_last_error`] describes what went wrong on the
//! calling thread. Arrays are copied into caller-owned buffers whose required
//! length is reported by the matching `*_len` function.
//!
//! Custom problems call back into C. Monte Carlo routines run those callbacks
//! from several worker threads at once, so they must be thread-safe.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use noisymem::{
    build_grid, coarsen, convergence_study_with, estimate_mse_with, euler_solve, euler_solve_naive,
    exact_solve, make_problem, paper_example, pure_memory_drift, sample_path, BrownianPath,
    ConvergenceOptions, ConvergenceReport, Error, MemoryKernel, MseCurve, MseOptions, ProblemSpec,
    Reference, TimeGrid, Trajectory,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    ModelError = 3,
    NumericalBlowup = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

pub struct NmProblem(ProblemSpec);
pub struct NmGrid(TimeGrid);
pub struct NmPath(BrownianPath);
pub struct NmTrajectory(Trajectory);
pub struct NmMseCurve(MseCurve);
pub struct NmConvergenceReport(ConvergenceReport);

/// `b(t, x, z)` or `σ(t, x, z)`.
pub type NmCoefficientFn = Option<unsafe extern "C" fn(user_data: *mut c_void, t: f64, x: f64, z: f64) -> f64>;
/// `ξ(t)` on `[−δ, 0]`.
pub type NmInitialFn = Option<unsafe extern "C" fn(user_data: *mut c_void, t: f64) -> f64>;
/// `φ(t, s)`.
pub type NmKernelFn = Option<unsafe extern "C" fn(user_data: *mut c_void, t: f64, s: f64) -> f64>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(NmStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Parameter(_) => NmStatus::InvalidParameter,
            Error::Model(_) => NmStatus::ModelError,
            Error::NumericalBlowup { .. } => NmStatus::NumericalBlowup,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> NmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NmStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {msg}"));
            NmStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure(NmStatus::NullPointer, format!("{what} is null")))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(NmStatus::NullPointer, "output handle pointer is null".into()));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), Failure> {
    if buf.is_null() {
        return Err(Failure(NmStatus::NullPointer, "buffer is null".into()));
    }
    if len < src.len() {
        return Err(Failure(
            NmStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(p))));
    }
}

/// Message for the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn nm_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---- problems ----

#[no_mangle]
pub unsafe extern "C" fn nm_problem_paper_example(delta: f64, out: *mut *mut NmProblem) -> NmStatus {
    guard(|| store(out, NmProblem(paper_example(delta)?)))
}

#[no_mangle]
pub unsafe extern "C" fn nm_problem_pure_memory_drift(
    delta: f64,
    horizon: f64,
    out: *mut *mut NmProblem,
) -> NmStatus {
    guard(|| store(out, NmProblem(pure_memory_drift(delta, horizon)?)))
}

#[derive(Clone, Copy)]
struct UserData(*mut c_void);
// The caller promises the callbacks and their data are thread-safe.
unsafe impl Send for UserData {}
unsafe impl Sync for UserData {}

impl UserData {
    fn get(self) -> *mut c_void {
        self.0
    }
}

/// Problem with C callbacks. When `kernel` is null the memory kernel is the
/// constant `kernel_constant`. `user_data` is passed to every callback and
/// must outlive the returned handle.
#[no_mangle]
pub unsafe extern "C" fn nm_problem_custom(
    drift: NmCoefficientFn,
    diffusion: NmCoefficientFn,
    initial: NmInitialFn,
    kernel: NmKernelFn,
    kernel_constant: f64,
    user_data: *mut c_void,
    delta: f64,
    horizon: f64,
    out: *mut *mut NmProblem,
) -> NmStatus {
    guard(|| {
        let null = |what: &str| Failure(NmStatus::NullPointer, format!("{what} callback is null"));
        let drift = drift.ok_or_else(|| null("drift"))?;
        let diffusion = diffusion.ok_or_else(|| null("diffusion"))?;
        let initial = initial.ok_or_else(|| null("initial segment"))?;
        let data = UserData(user_data);
        let kernel = match kernel {
            Some(k) => MemoryKernel::general(move |t, s| unsafe { k(data.get(), t, s) }),
            None => MemoryKernel::constant(kernel_constant),
        };
        let problem = make_problem(
            move |t, x, z| unsafe { drift(data.get(), t, x, z) },
            move |t, x, z| unsafe { diffusion(data.get(), t, x, z) },
            kernel,
            delta,
            horizon,
            move |t| unsafe { initial(data.get(), t) },
        )?;
        store(out, NmProblem(problem))
    })
}

#[no_mangle]
pub unsafe extern "C" fn nm_problem_free(problem: *mut NmProblem) {
    free(problem)
}

// ---- grids ----

#[no_mangle]
pub unsafe extern "C" fn nm_grid_build(delta: f64, horizon: f64, n_steps: usize, out: *mut *mut NmGrid) -> NmStatus {
    guard(|| store(out, NmGrid(build_grid(delta, horizon, n_steps)?)))
}

/// Step size, or NaN for a null handle.
#[no_mangle]
pub unsafe extern "C" fn nm_grid_dt(grid: *const NmGrid) -> f64 {
    grid.as_ref().map_or(f64::NAN, |g| g.0.dt())
}

/// Number of nodes on `[−δ, T]`, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn nm_grid_nodes_len(grid: *const NmGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.node_count())
}

#[no_mangle]
pub unsafe extern "C" fn nm_grid_nodes(grid: *const NmGrid, buf: *mut f64, len: usize) -> NmStatus {
    guard(|| copy_out(get(grid, "grid")?.0.nodes(), buf, len))
}

/// Number of positive nodes `t_0 = 0, …, t_N = T`, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn nm_grid_times_len(grid: *const NmGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.positive_times().len())
}

#[no_mangle]
pub unsafe extern "C" fn nm_grid_times(grid: *const NmGrid, buf: *mut f64, len: usize) -> NmStatus {
    guard(|| copy_out(get(grid, "grid")?.0.positive_times(), buf, len))
}

#[no_mangle]
pub unsafe extern "C" fn nm_grid_free(grid: *mut NmGrid) {
    free(grid)
}

// ---- Brownian paths ----

#[no_mangle]
pub unsafe extern "C" fn nm_path_sample(grid: *const NmGrid, seed: u64, out: *mut *mut NmPath) -> NmStatus {
    guard(|| {
        let grid = get(grid, "grid")?;
        store(out, NmPath(sample_path(&grid.0, seed)))
    })
}

/// Path from `len` increments, one per interval between consecutive nodes.
#[no_mangle]
pub unsafe extern "C" fn nm_path_from_increments(
    grid: *const NmGrid,
    increments: *const f64,
    len: usize,
    out: *mut *mut NmPath,
) -> NmStatus {
    guard(|| {
        let grid = get(grid, "grid")?;
        let increments = get(increments, "increments")?;
        let incs = std::slice::from_raw_parts(increments, len).to_vec();
        store(out, NmPath(BrownianPath::from_increments(&grid.0, incs)?))
    })
}

/// Sums every `factor` consecutive increments of `fine`.
#[no_mangle]
pub unsafe extern "C" fn nm_path_coarsen(fine: *const NmPath, factor: usize, out: *mut *mut NmPath) -> NmStatus {
    guard(|| {
        let fine = get(fine, "path")?;
        store(out, NmPath(coarsen(&fine.0, factor)?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn nm_path_values_len(path: *const NmPath) -> usize {
    path.as_ref().map_or(0, |p| p.0.values().len())
}

#[no_mangle]
pub unsafe extern "C" fn nm_path_values(path: *const NmPath, buf: *mut f64, len: usize) -> NmStatus {
    guard(|| copy_out(get(path, "path")?.0.values(), buf, len))
}

#[no_mangle]
pub unsafe extern "C" fn nm_path_increments_len(path: *const NmPath) -> usize {
    path.as_ref().map_or(0, |p| p.0.increments().len())
}

#[no_mangle]
pub unsafe extern "C" fn nm_path_increments(path: *const NmPath, buf: *mut f64, len: usize) -> NmStatus {
    guard(|| copy_out(get(path, "path")?.0.increments(), buf, len))
}

#[no_mangle]
pub unsafe extern "C" fn nm_path_free(path: *mut NmPath) {
    free(path)
}

// ---- solvers ----

unsafe fn solve(
    problem: *const NmProblem,
    grid: *const NmGrid,
    path: *const NmPath,
    out: *mut *mut NmTrajectory,
    naive: bool,
) -> NmStatus {
    guard(|| {
        let (problem, grid, path) = (get(problem, "problem")?, get(grid, "grid")?, get(path, "path")?);
        let tr = if naive {
            euler_solve_naive(&problem.0, &grid.0, &path.0)?
        } else {
            euler_solve(&problem.0, &grid.0, &path.0)?
        };
        store(out, NmTrajectory(tr))
    })
}

#[no_mangle]
pub unsafe extern "C" fn nm_euler_solve(
    problem: *const NmProblem,
    grid: *const NmGrid,
    path: *const NmPath,
    out: *mut *mut NmTrajectory,
) -> NmStatus {
    solve(problem, grid, path, out, false)
}

/// Same as [`nm_euler_solve`] but resums every memory window from scratch.
#[no_mangle]
pub unsafe extern "C" fn nm_euler_solve_naive(
    problem: *const NmProblem,
    grid: *const NmGrid,
    path: *const NmPath,
    out: *mut *mut NmTrajectory,
) -> NmStatus {
    solve(problem, grid, path, out, true)
}

/// Number of states `X_0, …, X_N`.
#[no_mangle]
pub unsafe extern "C" fn nm_trajectory_len(tr: *const NmTrajectory) -> usize {
    tr.as_ref().map_or(0, |t| t.0.positive_states().len())
}

#[no_mangle]
pub unsafe extern "C" fn nm_trajectory_states(tr: *const NmTrajectory, buf: *mut f64, len: usize) -> NmStatus {
    guard(|| copy_out(get(tr, "trajectory")?.0.positive_states(), buf, len))
}

/// Memories `Z_0, …, Z_N`; same length as the states.
#[no_mangle]
pub unsafe extern "C" fn nm_trajectory_memories(tr: *const NmTrajectory, buf: *mut f64, len: usize) -> NmStatus {
    guard(|| copy_out(get(tr, "trajectory")?.0.memories(), buf, len))
}

#[no_mangle]
pub unsafe extern "C" fn nm_trajectory_free(tr: *mut NmTrajectory) {
    free(tr)
}

/// Closed-form `X(t_i)` of the built-in example at every positive node
/// (`N + 1` values). Requires `T = δ`.
#[no_mangle]
pub unsafe extern "C" fn nm_exact_solve(
    delta: f64,
    grid: *const NmGrid,
    path: *const NmPath,
    buf: *mut f64,
    len: usize,
) -> NmStatus {
    guard(|| {
        let sol = exact_solve(delta, &get(grid, "grid")?.0, &get(path, "path")?.0)?;
        copy_out(&sol.first_components(), buf, len)
    })
}

// ---- Monte Carlo ----

/// Per-node MSE against the closed form; paths are drawn `refinement` times
/// finer than `grid` and coarsened.
#[no_mangle]
pub unsafe extern "C" fn nm_estimate_mse(
    problem: *const NmProblem,
    grid: *const NmGrid,
    n_paths: usize,
    base_seed: u64,
    refinement: usize,
    out: *mut *mut NmMseCurve,
) -> NmStatus {
    guard(|| {
        let (problem, grid) = (get(problem, "problem")?, get(grid, "grid")?);
        let opts = MseOptions { refinement };
        let curve = estimate_mse_with(&problem.0, &grid.0, n_paths, base_seed, &Reference::Exact, &opts)?;
        store(out, NmMseCurve(curve))
    })
}

#[no_mangle]
pub unsafe extern "C" fn nm_mse_curve_len(curve: *const NmMseCurve) -> usize {
    curve.as_ref().map_or(0, |c| c.0.mse.len())
}

#[no_mangle]
pub unsafe extern "C" fn nm_mse_curve_times(curve: *const NmMseCurve, buf: *mut f64, len: usize) -> NmStatus {
    guard(|| copy_out(&get(curve, "curve")?.0.times, buf, len))
}

#[no_mangle]
pub unsafe extern "C" fn nm_mse_curve_mse(curve: *const NmMseCurve, buf: *mut f64, len: usize) -> NmStatus {
    guard(|| copy_out(&get(curve, "curve")?.0.mse, buf, len))
}

#[no_mangle]
pub unsafe extern "C" fn nm_mse_curve_std_errors(curve: *const NmMseCurve, buf: *mut f64, len: usize) -> NmStatus {
    guard(|| copy_out(&get(curve, "curve")?.0.std_errors, buf, len))
}

#[no_mangle]
pub unsafe extern "C" fn nm_mse_curve_free(curve: *mut NmMseCurve) {
    free(curve)
}

/// Terminal MSE for each of the `len` step counts in `step_counts`. The
/// reference is evaluated `reference_refinement` times finer than the finest
/// Euler grid.
#[no_mangle]
pub unsafe extern "C" fn nm_convergence_study(
    problem: *const NmProblem,
    step_counts: *const usize,
    len: usize,
    n_paths: usize,
    base_seed: u64,
    reference_refinement: usize,
    out: *mut *mut NmConvergenceReport,
) -> NmStatus {
    guard(|| {
        let problem = get(problem, "problem")?;
        let counts = std::slice::from_raw_parts(get(step_counts, "step counts")?, len);
        let opts = ConvergenceOptions { reference_refinement };
        let report = convergence_study_with(&problem.0, counts, n_paths, base_seed, &opts)?;
        store(out, NmConvergenceReport(report))
    })
}

/// Number of step sizes in the report.
#[no_mangle]
pub unsafe extern "C" fn nm_convergence_len(report: *const NmConvergenceReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.dts.len())
}

/// Step sizes, largest first.
#[no_mangle]
pub unsafe extern "C" fn nm_convergence_dts(report: *const NmConvergenceReport, buf: *mut f64, len: usize) -> NmStatus {
    guard(|| copy_out(&get(report, "report")?.0.dts, buf, len))
}

#[no_mangle]
pub unsafe extern "C" fn nm_convergence_mse(report: *const NmConvergenceReport, buf: *mut f64, len: usize) -> NmStatus {
    guard(|| copy_out(&get(report, "report")?.0.terminal_mse, buf, len))
}

#[no_mangle]
pub unsafe extern "C" fn nm_convergence_std_errors(
    report: *const NmConvergenceReport,
    buf: *mut f64,
    len: usize,
) -> NmStatus {
    guard(|| copy_out(&get(report, "report")?.0.std_errors, buf, len))
}

/// Fitted slope of log MSE against log Δt and its standard error (NaN with
/// only two step sizes).
#[no_mangle]
pub unsafe extern "C" fn nm_convergence_order(
    report: *const NmConvergenceReport,
    order: *mut f64,
    std_error: *mut f64,
) -> NmStatus {
    guard(|| {
        let r = &get(report, "report")?.0;
        if order.is_null() || std_error.is_null() {
            return Err(Failure(NmStatus::NullPointer, "output pointer is null".into()));
        }
        *order = r.fitted_order_mse;
        *std_error = r.confidence;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn nm_convergence_free(report: *mut NmConvergenceReport) {
    free(report)
}
