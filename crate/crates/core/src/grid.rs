//! Uniform time partition of `[−δ, T]` and the per-step memory windows.

use std::ops::Range;

use crate::error::{parameter, Result};

/// Relative slack used when deciding whether `δ` is a whole number of steps
/// and when testing window membership.
const NODE_TOLERANCE: f64 = 1e-9;

/// Sorted union of the negative-time partition `{−δ, −δ+Δt, …}` of `[−δ, 0]`
/// and the positive-time partition `{0, Δt, …, T}`.
///
/// Node `zero_index()` is `t = 0`. When `δ` is not a multiple of `Δt` the
/// interval immediately left of zero is shorter than `Δt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    dt: f64,
    n_steps: usize,
    delay_steps: usize,
    delay: f64,
    horizon: f64,
    aligned: bool,
    nodes: Vec<f64>,
}

impl TimeGrid {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of node intervals covering `[−δ, 0]`.
    pub fn delay_steps(&self) -> usize {
        self.delay_steps
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// True when `δ` is an integer multiple of `Δt`.
    pub fn is_aligned(&self) -> bool {
        self.aligned
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Index of the node `t = 0`.
    pub fn zero_index(&self) -> usize {
        self.delay_steps
    }

    /// Node index of the positive-side time `t_i = iΔt`.
    #[inline]
    pub fn step_node(&self, step: usize) -> usize {
        self.delay_steps + step
    }

    /// Time `t_i` of positive step `i`.
    #[inline]
    pub fn step_time(&self, step: usize) -> f64 {
        self.nodes[self.delay_steps + step]
    }

    /// Length of the interval `[u_j, u_{j+1}]`.
    #[inline]
    pub fn interval_length(&self, node: usize) -> f64 {
        self.nodes[node + 1] - self.nodes[node]
    }

    /// The positive-side nodes `t_0 = 0, …, t_N = T`.
    pub fn positive_times(&self) -> &[f64] {
        &self.nodes[self.delay_steps..]
    }
}

/// Builds the grid with `Δt = horizon / n_steps`.
///
/// Requires `δ > Δt`.
pub fn build_grid(delta: f64, horizon: f64, n_steps: usize) -> Result<TimeGrid> {
    if n_steps == 0 {
        return Err(parameter("n_steps must be at least 1"));
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(parameter(format!("delay must be positive and finite, got {delta}")));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(parameter(format!("horizon must be positive and finite, got {horizon}")));
    }
    let dt = horizon / n_steps as f64;
    if delta <= dt {
        return Err(parameter(format!(
            "the delay must exceed the time step (δ > Δt); got δ = {delta}, Δt = {dt}"
        )));
    }

    let ratio = delta / dt;
    let nearest = ratio.round();
    let aligned = (ratio - nearest).abs() <= NODE_TOLERANCE * ratio;

    let mut nodes = Vec::new();
    let delay_steps = if aligned {
        let k = nearest as usize;
        nodes.reserve(k + n_steps + 1);
        nodes.push(-delta);
        nodes.extend((1..k).map(|j| -((k - j) as f64) * dt));
        k
    } else {
        // largest k with −δ + kΔt < 0; the short interval [−δ + kΔt, 0] closes the range
        let k = ratio.floor() as usize;
        nodes.reserve(k + n_steps + 2);
        nodes.extend((0..=k).map(|j| -delta + j as f64 * dt));
        k + 1
    };
    nodes.extend((0..n_steps).map(|i| i as f64 * dt));
    nodes.push(horizon);

    Ok(TimeGrid { dt, n_steps, delay_steps, delay: delta, horizon, aligned, nodes })
}

/// Nodes `t_j` with `t_i − δ ≤ t_j < t_i` feeding the discrete memory at step `i`.
///
/// The node `t_i` itself is excluded: its increment `ΔB_i` is the one applied
/// in the same Euler step, so including it would make `Z_i` anticipative. The
/// increments of the members cover exactly `[t_i − δ, t_i]` on aligned grids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryWindow {
    pub step_index: usize,
    pub members: Range<usize>,
}

impl MemoryWindow {
    pub fn indices(&self) -> Range<usize> {
        self.members.clone()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Resolves the memory window of positive step `step` (`0 ≤ step ≤ N`).
pub fn memory_window(grid: &TimeGrid, step: usize) -> Result<MemoryWindow> {
    if step > grid.n_steps {
        return Err(parameter(format!(
            "step index {step} out of range 0..={}",
            grid.n_steps
        )));
    }
    let end = grid.step_node(step);
    let lower = grid.nodes[end] - grid.delay - NODE_TOLERANCE * grid.dt;
    let start = grid.nodes[..end].partition_point(|&t| t < lower);
    Ok(MemoryWindow { step_index: step, members: start..end })
}
