//! Compiles and runs a small C program against the generated header and the
//! static library.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include "noisymem.h"

static double zero(void *d, double t, double x, double z) { (void)d; (void)t; (void)x; (void)z; return 0.0; }
static double memory(void *d, double t, double x, double z) { (void)d; (void)t; (void)x; return z; }
static double one(void *d, double t) { (void)d; (void)t; return 1.0; }

int main(void) {
    NmProblem *problem = NULL;
    NmGrid *grid = NULL;
    NmPath *path = NULL;
    NmTrajectory *tr = NULL;
    if (nm_problem_custom(zero, memory, one, NULL, 1.0, NULL, 1.0, 1.0, &problem) != NM_STATUS_OK) return 1;
    if (nm_grid_build(1.0, 1.0, 10, &grid) != NM_STATUS_OK) return 2;
    if (nm_path_sample(grid, 42, &path) != NM_STATUS_OK) return 3;
    if (nm_euler_solve(problem, grid, path, &tr) != NM_STATUS_OK) return 4;
    double xs[11];
    if (nm_trajectory_states(tr, xs, nm_trajectory_len(tr)) != NM_STATUS_OK) return 5;
    printf("%.17g\n", xs[10]);
    if (nm_grid_build(1.0, 1.0, 4, NULL) != NM_STATUS_NULL_POINTER) return 6;
    NmGrid *bad = NULL;
    if (nm_grid_build(-1.0, 1.0, 4, &bad) != NM_STATUS_INVALID_PARAMETER || nm_last_error() == NULL) return 7;
    nm_trajectory_free(tr);
    nm_path_free(path);
    nm_grid_free(grid);
    nm_problem_free(problem);
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // target/<profile>/deps/<test binary>
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let lib = target_dir().join("libnoisymem_ffi.a");
    let compiler = ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok());
    let (Some(cc), true) = (compiler, lib.exists()) else {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let exe = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());

    let p = noisymem::paper_example(1.0).unwrap();
    let g = noisymem::build_grid(1.0, 1.0, 10).unwrap();
    let expected = noisymem::euler_solve(&p, &g, &noisymem::sample_path(&g, 42)).unwrap();
    let printed: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert_eq!(printed, expected.terminal_state());
}
