//! End-to-end acceptance checks. Run with `--nocapture` to see one PASS/FAIL
//! line per criterion.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use noisymem::{
    build_grid, build_volterra_kernel, convergence_study, estimate_mse, estimate_mse_with,
    euler_solve, euler_solve_naive, exact_terminal_mean, mat_exp_forward, mat_f, moment_profile,
    paper_example, pure_memory_drift, sample_path, volterra_euler_solve, Mat2, MemoryKernel,
    MseOptions, Reference,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn report(id: u32, name: &str, outcome: &Outcome, started: Instant) -> bool {
    let secs = started.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => println!("PASS  [{id}] {name}: {detail} ({secs:.1}s)"),
        Err(detail) => println!("FAIL  [{id}] {name}: {detail} ({secs:.1}s)"),
    }
    outcome.is_ok()
}

fn convergence_order() -> Outcome {
    let problem = paper_example(1.0).unwrap();
    let r = convergence_study(&problem, &[512, 256, 128, 64, 32], 2000, 7).unwrap();
    let detail = format!(
        "MSE slope {:.3} ± {:.3}, RMS order {:.3}, MSE {:?}",
        r.fitted_order_mse, r.confidence, r.fitted_order_rms, r.terminal_mse
    );
    if (0.8..=1.5).contains(&r.fitted_order_mse) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn mse_curve() -> Outcome {
    let problem = paper_example(1.0).unwrap();
    let coarse = build_grid(1.0, 1.0, 100).unwrap();
    let fine = build_grid(1.0, 1.0, 200).unwrap();
    // both runs draw the same 1000 paths on the Δt = 1/200 grid
    let opts = MseOptions { refinement: 2 };
    let a = estimate_mse_with(&problem, &coarse, 1000, 7, &Reference::Exact, &opts).unwrap();
    let again = estimate_mse_with(&problem, &coarse, 1000, 7, &Reference::Exact, &opts).unwrap();
    let b = estimate_mse(&problem, &fine, 1000, 7).unwrap();

    let last_a = *a.mse.last().unwrap();
    let last_b = *b.mse.last().unwrap();
    let detail = format!("MSE(1) at Δt=1/100: {last_a:.5}, at Δt=1/200: {last_b:.5}");
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    if !a.mse.iter().chain(&b.mse).all(|m| m.is_finite()) {
        return Err(format!("non-finite MSE; {detail}"));
    }
    if a.mse[0] != 0.0 || b.mse[0] != 0.0 {
        return Err(format!("MSE at t=0 is not zero; {detail}"));
    }
    if bits(&a.mse) != bits(&again.mse) {
        return Err(format!("rerun with the same seed differs; {detail}"));
    }
    if last_b >= last_a {
        return Err(format!("no decrease under refinement; {detail}"));
    }
    Ok(detail)
}

fn relative_gap(fast: &[f64], naive: &[f64]) -> f64 {
    fast.iter()
        .zip(naive)
        .map(|(a, b)| if a == b { 0.0 } else { (a - b).abs() / b.abs() })
        .fold(0.0, f64::max)
}

fn memory_sum_oracle() -> Outcome {
    let constant = paper_example(1.0).unwrap();
    let separable =
        constant.with_kernel(MemoryKernel::separable(|t: f64| (-t).exp(), |s: f64| s.exp()));
    let grid = build_grid(1.0, 1.0, 64).unwrap();
    let mut worst: f64 = 0.0;
    for problem in [&constant, &separable] {
        for seed in 0..50 {
            let path = sample_path(&grid, 1000 + seed);
            let fast = euler_solve(problem, &grid, &path).unwrap();
            let naive = euler_solve_naive(problem, &grid, &path).unwrap();
            worst = worst
                .max(relative_gap(fast.states(), naive.states()))
                .max(relative_gap(fast.memories(), naive.memories()));
        }
    }
    let detail = format!("max relative gap {worst:.3e} over 2 kernels × 50 seeds");
    if worst <= 1e-10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn volterra_cross_check() -> Outcome {
    let mut worst: f64 = 0.0;
    for (delta, horizon) in [(1.0, 1.0), (0.5, 1.0)] {
        let problem = pure_memory_drift(delta, horizon).unwrap();
        let kernel = build_volterra_kernel(&problem, 1.0, |_, _| 0.0, |_, _| 0.0).unwrap();
        for n in [8, 16] {
            let grid = build_grid(delta, horizon, n).unwrap();
            for seed in 0..20 {
                let path = sample_path(&grid, seed);
                let memory_form = euler_solve(&problem, &grid, &path).unwrap();
                let volterra_form = volterra_euler_solve(&kernel, &grid, &path, 1.0).unwrap();
                for (a, b) in memory_form.states().iter().zip(volterra_form.states()) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
    }
    let detail = format!("max state gap {worst:.3e} at N ∈ {{8, 16}}");
    if worst <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn series_exp(m: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut acc = [[1.0, 0.0], [0.0, 1.0]];
    let mut term = acc;
    for n in 1..=30 {
        let mut next = [[0.0; 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                next[r][c] = (term[r][0] * m[0][c] + term[r][1] * m[1][c]) / n as f64;
            }
        }
        term = next;
        for r in 0..2 {
            for c in 0..2 {
                acc[r][c] += term[r][c];
            }
        }
    }
    acc
}

fn gap(a: &Mat2, b: [[f64; 2]; 2]) -> f64 {
    a.max_abs_diff(&Mat2(b))
}

fn matrix_exponentials() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut series_gap, mut identity_gap): (f64, f64) = (0.0, 0.0);
    for _ in 0..1000 {
        let t: f64 = rng.random_range(0.0..1.0);
        let b: f64 = rng.random_range(-3.0..3.0);
        // F = exp(−a b + ½ a² t), forward = exp(a b − ½ a² t), a = [[0,1],[1,0]]
        let gen_f = [[0.5 * t, -b], [-b, 0.5 * t]];
        let gen_e = [[-0.5 * t, b], [b, -0.5 * t]];
        let f = mat_f(t, b);
        let e = mat_exp_forward(t, b);
        series_gap = series_gap.max(gap(&f, series_exp(gen_f))).max(gap(&e, series_exp(gen_e)));
        identity_gap = identity_gap
            .max(gap(&f.mul(&e), [[1.0, 0.0], [0.0, 1.0]]))
            .max(gap(&e.mul(&f), [[1.0, 0.0], [0.0, 1.0]]));
    }
    let detail = format!("series gap {series_gap:.3e}, identity gap {identity_gap:.3e} over 1000 pairs");
    if series_gap <= 1e-12 && identity_gap <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn moment_statistics() -> Outcome {
    let (mean, se) = exact_terminal_mean(1.0, 100, 100_000, 11).unwrap();
    let z = (mean - 1.0) / se;

    let problem = paper_example(1.0).unwrap();
    let grid = build_grid(1.0, 1.0, 100).unwrap();
    let small = moment_profile(&problem, &grid, 10_000, 13).unwrap();
    let large = moment_profile(&problem, &grid, 20_000, 13).unwrap();
    let change = |a: f64, b: f64| (b - a).abs() / a;
    let dx = change(small.max_state_moment(), large.max_state_moment());
    let dz = change(small.max_memory_moment(), large.max_memory_moment());

    let detail = format!(
        "E[X(1)] = {mean:.5} ± {se:.5} (z = {z:.2}); max E[X²] {:.4} → {:.4} ({:.1}%), max E[Z²] {:.4} → {:.4} ({:.1}%)",
        small.max_state_moment(),
        large.max_state_moment(),
        100.0 * dx,
        small.max_memory_moment(),
        large.max_memory_moment(),
        100.0 * dz
    );
    if z.abs() <= 3.0 && dx < 0.1 && dz < 0.1 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn run_cli_to(out: &Path, threads: &str) -> Result<Vec<u8>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_noisymem"))
        .args(["compare-exact", "--delta", "1", "--n-steps", "100", "--paths", "1000", "--seed", "7", "--out"])
        .arg(out)
        .env("NOISYMEM_THREADS", threads)
        .status()
        .map_err(|e| e.to_string())?;
    if !status.success() {
        return Err(format!("noisymem exited with {status}"));
    }
    std::fs::read(out).map_err(|e| e.to_string())
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = run_cli_to(&dir.path().join("a.csv"), "8")?;
    let second = run_cli_to(&dir.path().join("b.csv"), "8")?;
    let single = run_cli_to(&dir.path().join("c.csv"), "1")?;
    if first != second {
        return Err("two runs with 8 threads wrote different CSV".into());
    }
    if first != single {
        return Err("1 and 8 threads wrote different CSV".into());
    }

    let problem = paper_example(1.0).unwrap();
    let study = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| convergence_study(&problem, &[64, 32, 16], 3000, 5).unwrap())
    };
    if study(1) != study(8) {
        return Err("convergence study differs between 1 and 8 threads".into());
    }
    Ok(format!("{} identical CSV bytes across runs and thread counts", first.len()))
}

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 7] = [
        ("mean-square convergence order", convergence_order),
        ("per-node MSE curve", mse_curve),
        ("memory sum matches naive resummation", memory_sum_oracle),
        ("Volterra form matches memory form", volterra_cross_check),
        ("matrix exponentials", matrix_exponentials),
        ("martingale mean and moment stability", moment_statistics),
        ("deterministic output", determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = check();
        if !report(i as u32 + 1, name, &outcome, started) {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
