//! Monte Carlo estimation of mean-square errors and of the empirical
//! convergence order.
//!
//! Path `p` of a run uses seed `base_seed + p` (wrapping). Paths are processed
//! in fixed-size chunks; inside a chunk the rayon pool evaluates paths in
//! parallel and the per-path results are folded in path order, so results are
//! bit-identical for any number of worker threads.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{parameter, Result};
use crate::euler::euler_solve;
use crate::exact::exact_solve;
use crate::grid::{build_grid, TimeGrid};
use crate::model::{BuiltinProblem, ProblemSpec};
use crate::paths::{coarsen, sample_path, BrownianPath};

const CHUNK: usize = 1024;

/// Reference solution on a (grid, path) pair, returning values at the positive nodes.
pub type ReferenceFn = Arc<dyn Fn(&TimeGrid, &BrownianPath) -> Result<Vec<f64>> + Send + Sync>;

/// What the Euler solution is compared against.
#[derive(Clone, Default)]
pub enum Reference {
    /// Closed-form solution; only available for [`BuiltinProblem::PaperExample`].
    #[default]
    Exact,
    Custom(ReferenceFn),
}

impl fmt::Debug for Reference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reference::Exact => f.write_str("Exact"),
            Reference::Custom(_) => f.write_str("Custom"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MseOptions {
    /// Paths are sampled `refinement` times finer than the Euler grid and
    /// coarsened; the reference is evaluated on the fine grid.
    pub refinement: usize,
}

impl Default for MseOptions {
    fn default() -> Self {
        MseOptions { refinement: 1 }
    }
}

/// Per-node Monte Carlo estimate of `E[(X(t_i) − X_i)²]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MseCurve {
    pub times: Vec<f64>,
    pub mse: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub n_paths: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvergenceOptions {
    /// The closed form is evaluated on a grid this many times finer than the
    /// finest Euler grid.
    pub reference_refinement: usize,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        ConvergenceOptions { reference_refinement: 8 }
    }
}

/// Terminal-time errors across step sizes and the fitted order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// Step sizes, strictly decreasing.
    pub dts: Vec<f64>,
    pub step_counts: Vec<usize>,
    pub terminal_mse: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Slope of `log MSE` against `log Δt`.
    pub fitted_order_mse: f64,
    /// Half the MSE slope: the order of the root-mean-square error.
    pub fitted_order_rms: f64,
    /// Standard error of the MSE slope from the regression residuals.
    pub confidence: f64,
    pub n_paths: usize,
    pub reference_steps: usize,
}

/// Running per-slot sums, folded in a fixed order.
struct Moments {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    count: usize,
}

impl Moments {
    fn new(len: usize) -> Self {
        Moments { sum: vec![0.0; len], sum_sq: vec![0.0; len], count: 0 }
    }

    fn push(&mut self, sample: &[f64]) {
        for ((s, q), &x) in self.sum.iter_mut().zip(&mut self.sum_sq).zip(sample) {
            *s += x;
            *q += x * x;
        }
        self.count += 1;
    }

    fn finish(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.count as f64;
        self.sum
            .iter()
            .zip(&self.sum_sq)
            .map(|(&s, &q)| {
                let mean = s / n;
                let var = ((q - s * mean) / (n - 1.0)).max(0.0);
                (mean, (var / n).sqrt())
            })
            .unzip()
    }
}

/// Evaluates `per_path(seed)` for `n_paths` consecutive seeds and folds the
/// resulting vectors in seed order.
fn accumulate<F>(n_paths: usize, base_seed: u64, len: usize, per_path: F) -> Result<Moments>
where
    F: Fn(u64) -> Result<Vec<f64>> + Sync,
{
    let mut moments = Moments::new(len);
    let mut start = 0;
    while start < n_paths {
        let end = (start + CHUNK).min(n_paths);
        let chunk: Vec<Result<Vec<f64>>> = (start..end)
            .into_par_iter()
            .map(|p| per_path(base_seed.wrapping_add(p as u64)))
            .collect();
        for sample in chunk {
            moments.push(&sample?);
        }
        start = end;
    }
    Ok(moments)
}

fn require_exact(problem: &ProblemSpec) -> Result<()> {
    if problem.builtin() != BuiltinProblem::PaperExample {
        return Err(parameter(format!(
            "no closed-form reference for problem '{}'; supply a custom reference",
            problem.builtin()
        )));
    }
    Ok(())
}

/// Per-node MSE of the Euler scheme against the closed form, on `grid`.
pub fn estimate_mse(problem: &ProblemSpec, grid: &TimeGrid, n_paths: usize, base_seed: u64) -> Result<MseCurve> {
    estimate_mse_with(problem, grid, n_paths, base_seed, &Reference::Exact, &MseOptions::default())
}

/// [`estimate_mse`] with an explicit reference and sampling refinement.
pub fn estimate_mse_with(
    problem: &ProblemSpec,
    grid: &TimeGrid,
    n_paths: usize,
    base_seed: u64,
    reference: &Reference,
    options: &MseOptions,
) -> Result<MseCurve> {
    if n_paths < 2 {
        return Err(parameter(format!("at least two paths are needed, got {n_paths}")));
    }
    if options.refinement == 0 {
        return Err(parameter("refinement must be positive"));
    }
    if matches!(reference, Reference::Exact) {
        require_exact(problem)?;
    }
    let r = options.refinement;
    let fine = if r == 1 {
        grid.clone()
    } else {
        let fine = build_grid(grid.delay(), grid.horizon(), grid.n_steps() * r)?;
        if !fine.is_aligned() {
            return Err(parameter("refined sampling needs δ to be a multiple of Δt"));
        }
        fine
    };

    let moments = accumulate(n_paths, base_seed, grid.n_steps() + 1, |seed| {
        let fine_path = sample_path(&fine, seed);
        let path = coarsen(&fine_path, r)?;
        let euler = euler_solve(problem, grid, &path)?;
        let reference_values = match reference {
            Reference::Exact => exact_solve(problem.delay(), &fine, &fine_path)?.first_components(),
            Reference::Custom(f) => f(&fine, &fine_path)?,
        };
        if reference_values.len() != fine.n_steps() + 1 {
            return Err(parameter(format!(
                "reference returned {} values, expected {}",
                reference_values.len(),
                fine.n_steps() + 1
            )));
        }
        Ok(euler
            .positive_states()
            .iter()
            .zip(reference_values.iter().step_by(r))
            .map(|(x, y)| (x - y) * (x - y))
            .collect())
    })?;
    let (mse, std_errors) = moments.finish();
    Ok(MseCurve { times: grid.positive_times().to_vec(), mse, std_errors, n_paths })
}

/// Strong convergence study on coupled paths with the default options.
///
/// `step_counts` lists the Euler step counts `N` (so `Δt = T/N`).
pub fn convergence_study(
    problem: &ProblemSpec,
    step_counts: &[usize],
    n_paths: usize,
    base_seed: u64,
) -> Result<ConvergenceReport> {
    convergence_study_with(problem, step_counts, n_paths, base_seed, &ConvergenceOptions::default())
}

/// Every path is drawn once on the reference grid, the closed form is
/// evaluated there, and each Euler level runs on the coarsened path. The MSE is
/// measured at `t = T`.
pub fn convergence_study_with(
    problem: &ProblemSpec,
    step_counts: &[usize],
    n_paths: usize,
    base_seed: u64,
    options: &ConvergenceOptions,
) -> Result<ConvergenceReport> {
    require_exact(problem)?;
    if n_paths < 2 {
        return Err(parameter(format!("at least two paths are needed, got {n_paths}")));
    }
    if step_counts.len() < 2 {
        return Err(parameter("a convergence study needs at least two step sizes"));
    }
    if options.reference_refinement == 0 {
        return Err(parameter("reference refinement must be positive"));
    }
    let mut counts = step_counts.to_vec();
    counts.sort_unstable();
    if counts.windows(2).any(|w| w[0] == w[1]) || counts[0] == 0 {
        return Err(parameter(format!("step counts must be distinct and positive: {step_counts:?}")));
    }
    let finest = counts[counts.len() - 1] * options.reference_refinement;
    let (delta, horizon) = (problem.delay(), problem.horizon());
    let reference_grid = build_grid(delta, horizon, finest)?;
    if !reference_grid.is_aligned() {
        return Err(parameter("coupled refinement needs δ to be a multiple of every Δt"));
    }
    let mut levels = Vec::with_capacity(counts.len());
    for &n in &counts {
        if !finest.is_multiple_of(n) {
            return Err(parameter(format!("step count {n} does not divide the reference count {finest}")));
        }
        levels.push((build_grid(delta, horizon, n)?, finest / n));
    }

    let moments = accumulate(n_paths, base_seed, levels.len(), |seed| {
        let fine_path = sample_path(&reference_grid, seed);
        let exact = exact_solve(delta, &reference_grid, &fine_path)?.terminal();
        levels
            .iter()
            .map(|(grid, factor)| {
                let path = coarsen(&fine_path, *factor)?;
                let x = euler_solve(problem, grid, &path)?.terminal_state();
                Ok((x - exact) * (x - exact))
            })
            .collect()
    })?;
    let (terminal_mse, std_errors) = moments.finish();
    let dts: Vec<f64> = levels.iter().map(|(g, _)| g.dt()).collect();
    let (slope, confidence) = fit_log_log_slope(&dts, &terminal_mse)?;

    Ok(ConvergenceReport {
        dts,
        step_counts: counts,
        terminal_mse,
        std_errors,
        fitted_order_mse: slope,
        fitted_order_rms: slope / 2.0,
        confidence,
        n_paths,
        reference_steps: finest,
    })
}

/// Per-node second moments `E[X_i²]` and `E[Z_i²]` of the Euler scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentProfile {
    pub times: Vec<f64>,
    pub state_second_moment: Vec<f64>,
    pub memory_second_moment: Vec<f64>,
    pub n_paths: usize,
}

impl MomentProfile {
    pub fn max_state_moment(&self) -> f64 {
        self.state_second_moment.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_memory_moment(&self) -> f64 {
        self.memory_second_moment.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Monte Carlo second moments of the Euler states and memories on `grid`.
pub fn moment_profile(problem: &ProblemSpec, grid: &TimeGrid, n_paths: usize, base_seed: u64) -> Result<MomentProfile> {
    if n_paths < 2 {
        return Err(parameter(format!("at least two paths are needed, got {n_paths}")));
    }
    let len = grid.n_steps() + 1;
    let moments = accumulate(n_paths, base_seed, 2 * len, |seed| {
        let tr = euler_solve(problem, grid, &sample_path(grid, seed))?;
        Ok(tr.positive_states().iter().chain(tr.memories()).map(|v| v * v).collect())
    })?;
    let (mut means, _) = moments.finish();
    let memory_second_moment = means.split_off(len);
    Ok(MomentProfile {
        times: grid.positive_times().to_vec(),
        state_second_moment: means,
        memory_second_moment,
        n_paths,
    })
}

/// Mean and standard error of the closed-form `X(δ)` over `n_paths` paths on a
/// grid of `n_steps` steps with `T = δ`.
pub fn exact_terminal_mean(delta: f64, n_steps: usize, n_paths: usize, base_seed: u64) -> Result<(f64, f64)> {
    if n_paths < 2 {
        return Err(parameter(format!("at least two paths are needed, got {n_paths}")));
    }
    let grid = build_grid(delta, delta, n_steps)?;
    let moments = accumulate(n_paths, base_seed, 1, |seed| {
        Ok(vec![exact_solve(delta, &grid, &sample_path(&grid, seed))?.terminal()])
    })?;
    let (mean, se) = moments.finish();
    Ok((mean[0], se[0]))
}

/// Least-squares slope of `log y` against `log x` and its standard error.
///
/// With exactly two points the fit is exact and the standard error is NaN.
pub fn fit_log_log_slope(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(parameter("slope fit needs at least two (x, y) pairs of equal length"));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(parameter("slope fit needs positive finite values"));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(parameter("slope fit needs distinct x values"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let se = if lx.len() > 2 { (ssr / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    Ok((slope, se))
}
