use std::ffi::{c_void, CStr};
use std::ptr;

use noisymem_ffi::*;

fn last_error() -> String {
    let p = nm_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn copy(len: usize, f: impl FnOnce(*mut f64, usize) -> NmStatus) -> Vec<f64> {
    let mut buf = vec![0.0; len];
    assert_eq!(f(buf.as_mut_ptr(), len), NmStatus::Ok);
    buf
}

#[test]
fn solve_round_trip_matches_library() {
    unsafe {
        let (mut problem, mut grid, mut path, mut tr) =
            (ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        assert_eq!(nm_problem_paper_example(1.0, &mut problem), NmStatus::Ok);
        assert_eq!(nm_grid_build(1.0, 1.0, 50, &mut grid), NmStatus::Ok);
        assert_eq!(nm_path_sample(grid, 9, &mut path), NmStatus::Ok);
        assert_eq!(nm_euler_solve(problem, grid, path, &mut tr), NmStatus::Ok);
        assert_eq!(nm_grid_dt(grid), 0.02);
        assert_eq!(nm_grid_nodes_len(grid), 101);

        let n = nm_trajectory_len(tr);
        assert_eq!(n, 51);
        let states = copy(n, |b, l| nm_trajectory_states(tr, b, l));
        let memories = copy(n, |b, l| nm_trajectory_memories(tr, b, l));

        let p = noisymem::paper_example(1.0).unwrap();
        let g = noisymem::build_grid(1.0, 1.0, 50).unwrap();
        let expected = noisymem::euler_solve(&p, &g, &noisymem::sample_path(&g, 9)).unwrap();
        assert_eq!(states, expected.positive_states());
        assert_eq!(memories, expected.memories());

        let exact = copy(n, |b, l| nm_exact_solve(1.0, grid, path, b, l));
        assert_eq!(exact[0], 1.0);

        let mut small = [0.0; 3];
        assert_eq!(nm_trajectory_states(tr, small.as_mut_ptr(), 3), NmStatus::BufferTooSmall);
        assert!(last_error().contains("needed"));

        nm_trajectory_free(tr);
        nm_path_free(path);
        nm_grid_free(grid);
        nm_problem_free(problem);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut grid = ptr::null_mut();
        assert_eq!(nm_grid_build(1.0, 1.0, 0, &mut grid), NmStatus::InvalidParameter);
        assert!(grid.is_null());
        assert!(last_error().contains("n_steps"));
        assert_eq!(nm_grid_build(1.0, 1.0, 4, ptr::null_mut()), NmStatus::NullPointer);
        let mut path = ptr::null_mut();
        assert_eq!(nm_path_sample(ptr::null(), 1, &mut path), NmStatus::NullPointer);
        assert_eq!(nm_grid_nodes_len(ptr::null()), 0);
        assert!(nm_grid_dt(ptr::null()).is_nan());
        nm_grid_free(ptr::null_mut());
        let v = CStr::from_ptr(nm_version()).to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }
}

unsafe extern "C" fn zero(_: *mut c_void, _: f64, _: f64, _: f64) -> f64 {
    0.0
}

unsafe extern "C" fn scaled_memory(data: *mut c_void, _: f64, _: f64, z: f64) -> f64 {
    *(data as *const f64) * z
}

unsafe extern "C" fn one(_: *mut c_void, _: f64) -> f64 {
    1.0
}

unsafe extern "C" fn decaying(_: *mut c_void, t: f64, s: f64) -> f64 {
    (s - t).exp()
}

unsafe extern "C" fn huge(_: *mut c_void, _: f64, x: f64, _: f64) -> f64 {
    1e300 * x
}

#[test]
fn custom_problem_through_callbacks() {
    unsafe {
        let mut scale = 2.0f64;
        let data = &mut scale as *mut f64 as *mut c_void;
        let (mut problem, mut grid, mut path, mut fast, mut naive) =
            (ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        let status = nm_problem_custom(
            Some(zero), Some(scaled_memory), Some(one), Some(decaying), 0.0, data, 0.5, 1.0, &mut problem,
        );
        assert_eq!(status, NmStatus::Ok);
        assert_eq!(nm_grid_build(0.5, 1.0, 32, &mut grid), NmStatus::Ok);
        assert_eq!(nm_path_sample(grid, 4, &mut path), NmStatus::Ok);
        assert_eq!(nm_euler_solve(problem, grid, path, &mut fast), NmStatus::Ok);
        assert_eq!(nm_euler_solve_naive(problem, grid, path, &mut naive), NmStatus::Ok);
        let a = copy(33, |b, l| nm_trajectory_states(fast, b, l));
        let b = copy(33, |b, l| nm_trajectory_states(naive, b, l));
        assert_eq!(a, b);
        assert!(a.iter().all(|x| x.is_finite()));
        for h in [fast, naive] {
            nm_trajectory_free(h);
        }
        nm_problem_free(problem);

        let mut missing = ptr::null_mut();
        let status =
            nm_problem_custom(None, Some(zero), Some(one), None, 1.0, ptr::null_mut(), 1.0, 1.0, &mut missing);
        assert_eq!(status, NmStatus::NullPointer);

        let mut blowup = ptr::null_mut();
        let status =
            nm_problem_custom(Some(huge), Some(zero), Some(one), None, 1.0, ptr::null_mut(), 0.5, 1.0, &mut blowup);
        assert_eq!(status, NmStatus::Ok);
        let mut tr = ptr::null_mut();
        assert_eq!(nm_euler_solve(blowup, grid, path, &mut tr), NmStatus::NumericalBlowup);
        assert!(tr.is_null());
        nm_problem_free(blowup);
        nm_path_free(path);
        nm_grid_free(grid);
    }
}

#[test]
fn paths_coarsen_and_rebuild() {
    unsafe {
        let (mut fine_grid, mut grid, mut fine, mut coarse, mut rebuilt) =
            (ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        assert_eq!(nm_grid_build(1.0, 1.0, 64, &mut fine_grid), NmStatus::Ok);
        assert_eq!(nm_grid_build(1.0, 1.0, 16, &mut grid), NmStatus::Ok);
        assert_eq!(nm_path_sample(fine_grid, 3, &mut fine), NmStatus::Ok);
        assert_eq!(nm_path_coarsen(fine, 4, &mut coarse), NmStatus::Ok);
        assert_eq!(nm_path_coarsen(fine, 3, &mut rebuilt), NmStatus::InvalidParameter);

        let incs = copy(nm_path_increments_len(coarse), |b, l| nm_path_increments(coarse, b, l));
        assert_eq!(incs.len(), 32);
        assert_eq!(nm_path_from_increments(grid, incs.as_ptr(), incs.len(), &mut rebuilt), NmStatus::Ok);
        let fine_values = copy(nm_path_values_len(fine), |b, l| nm_path_values(fine, b, l));
        let values = copy(nm_path_values_len(rebuilt), |b, l| nm_path_values(rebuilt, b, l));
        for (i, v) in values.iter().enumerate() {
            assert!((v - fine_values[4 * i]).abs() < 1e-12);
        }
        for p in [fine, coarse, rebuilt] {
            nm_path_free(p);
        }
        nm_grid_free(grid);
        nm_grid_free(fine_grid);
    }
}

#[test]
fn monte_carlo_entry_points() {
    unsafe {
        let (mut problem, mut grid, mut curve, mut report) =
            (ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        assert_eq!(nm_problem_paper_example(1.0, &mut problem), NmStatus::Ok);
        assert_eq!(nm_grid_build(1.0, 1.0, 20, &mut grid), NmStatus::Ok);
        assert_eq!(nm_estimate_mse(problem, grid, 100, 1, 2, &mut curve), NmStatus::Ok);
        let len = nm_mse_curve_len(curve);
        assert_eq!(len, 21);
        let mse = copy(len, |b, l| nm_mse_curve_mse(curve, b, l));
        let times = copy(len, |b, l| nm_mse_curve_times(curve, b, l));
        let se = copy(len, |b, l| nm_mse_curve_std_errors(curve, b, l));
        assert_eq!((mse[0], times[20]), (0.0, 1.0));
        assert!(se.iter().all(|s| s.is_finite()));
        nm_mse_curve_free(curve);

        let counts = [16usize, 32, 64];
        let status = nm_convergence_study(problem, counts.as_ptr(), counts.len(), 200, 7, 4, &mut report);
        assert_eq!(status, NmStatus::Ok);
        assert_eq!(nm_convergence_len(report), 3);
        let dts = copy(3, |b, l| nm_convergence_dts(report, b, l));
        assert_eq!(dts, vec![1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0]);
        let mse = copy(3, |b, l| nm_convergence_mse(report, b, l));
        let se = copy(3, |b, l| nm_convergence_std_errors(report, b, l));
        assert!(mse.iter().chain(&se).all(|v| v.is_finite() && *v >= 0.0));
        let (mut order, mut order_se) = (0.0, 0.0);
        assert_eq!(nm_convergence_order(report, &mut order, &mut order_se), NmStatus::Ok);
        assert!(order.is_finite() && order_se.is_finite());
        nm_convergence_free(report);

        let mut drift = ptr::null_mut();
        assert_eq!(nm_problem_pure_memory_drift(1.0, 1.0, &mut drift), NmStatus::Ok);
        let mut none = ptr::null_mut();
        assert_eq!(nm_estimate_mse(drift, grid, 100, 1, 1, &mut none), NmStatus::InvalidParameter);
        nm_problem_free(drift);
        nm_grid_free(grid);
        nm_problem_free(problem);
    }
}
