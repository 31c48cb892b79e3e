//! Seeded Brownian increments over a [`TimeGrid`], including the negative-time
//! part `[−δ, 0]`, plus coarsening for coupled refinement studies.
//!
//! Generator: one ChaCha20 stream per path, seeded with
//! `ChaCha20Rng::seed_from_u64(seed)`; standard normals come from
//! `rand_distr::StandardNormal` (ziggurat) and are scaled by the square root
//! of each interval length. Increments are drawn in time order from `−δ` to
//! `T`. The Brownian motion is anchored at `B(−δ) = 0`, so `B(0)` is a
//! realized value rather than zero.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{parameter, Result};
use crate::grid::TimeGrid;

/// Brownian increments `ΔB_j = B(u_{j+1}) − B(u_j)` over every node interval of
/// a grid, with the cumulative values `B(u_j) − B(−δ)` kept alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    increments: Vec<f64>,
    values: Vec<f64>,
    seed: Option<u64>,
    n_steps: usize,
    delay_steps: usize,
    aligned: bool,
}

impl BrownianPath {
    /// Wraps user-supplied increments. The path carries no seed.
    pub fn from_increments(grid: &TimeGrid, increments: Vec<f64>) -> Result<Self> {
        if increments.len() + 1 != grid.node_count() {
            return Err(parameter(format!(
                "expected {} increments for this grid, got {}",
                grid.node_count() - 1,
                increments.len()
            )));
        }
        let values = prefix_values(&increments);
        Ok(BrownianPath {
            increments,
            values,
            seed: None,
            n_steps: grid.n_steps(),
            delay_steps: grid.delay_steps(),
            aligned: grid.is_aligned(),
        })
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// `B(u_j) − B(−δ)` at every node.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn delay_steps(&self) -> usize {
        self.delay_steps
    }

    /// Increment `ΔB_i` over `[t_i, t_{i+1}]` for positive step `i`.
    #[inline]
    pub fn step_increment(&self, step: usize) -> f64 {
        self.increments[self.delay_steps + step]
    }

    /// Checks that this path was generated on a grid with the same shape.
    pub fn check_grid(&self, grid: &TimeGrid) -> Result<()> {
        if self.n_steps != grid.n_steps()
            || self.delay_steps != grid.delay_steps()
            || self.increments.len() + 1 != grid.node_count()
        {
            return Err(parameter(format!(
                "path (N = {}, delay steps = {}) does not match grid (N = {}, delay steps = {})",
                self.n_steps,
                self.delay_steps,
                grid.n_steps(),
                grid.delay_steps()
            )));
        }
        Ok(())
    }
}

fn prefix_values(increments: &[f64]) -> Vec<f64> {
    let mut values = Vec::with_capacity(increments.len() + 1);
    let mut acc = 0.0;
    values.push(acc);
    for &db in increments {
        acc += db;
        values.push(acc);
    }
    values
}

/// Draws a path on `grid`; a deterministic function of `(grid, seed)`.
pub fn sample_path(grid: &TimeGrid, seed: u64) -> BrownianPath {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let increments: Vec<f64> = (0..grid.node_count() - 1)
        .map(|j| {
            let z: f64 = rng.sample(StandardNormal);
            grid.interval_length(j).sqrt() * z
        })
        .collect();
    let values = prefix_values(&increments);
    BrownianPath {
        increments,
        values,
        seed: Some(seed),
        n_steps: grid.n_steps(),
        delay_steps: grid.delay_steps(),
        aligned: grid.is_aligned(),
    }
}

/// Path on the grid with step `factor · Δt`, built from the same realization.
///
/// Coarse increments are sums of `factor` consecutive fine increments and the
/// coarse node values are copied from the fine path, so both agree exactly at
/// shared nodes.
pub fn coarsen(fine: &BrownianPath, factor: usize) -> Result<BrownianPath> {
    if factor == 0 {
        return Err(parameter("coarsening factor must be positive"));
    }
    if factor == 1 {
        return Ok(fine.clone());
    }
    if !fine.aligned {
        return Err(parameter("coarsening requires δ to be a multiple of Δt"));
    }
    if !fine.n_steps.is_multiple_of(factor) || !fine.delay_steps.is_multiple_of(factor) {
        return Err(parameter(format!(
            "factor {factor} does not divide both N = {} and the delay steps {}",
            fine.n_steps, fine.delay_steps
        )));
    }
    if fine.delay_steps / factor < 2 {
        return Err(parameter(format!(
            "factor {factor} leaves fewer than two steps per delay, violating δ > Δt"
        )));
    }
    let increments = fine
        .increments
        .chunks_exact(factor)
        .map(|c| c.iter().sum())
        .collect();
    let values = fine.values.iter().step_by(factor).copied().collect();
    Ok(BrownianPath {
        increments,
        values,
        seed: fine.seed,
        n_steps: fine.n_steps / factor,
        delay_steps: fine.delay_steps / factor,
        aligned: true,
    })
}

/// `B(u_j) − B(−δ)` at node `node`.
pub fn value_at(path: &BrownianPath, node: usize) -> Result<f64> {
    path.values.get(node).copied().ok_or_else(|| {
        parameter(format!("node index {node} out of range 0..{}", path.values.len()))
    })
}
