//! Euler–Maruyama scheme for noisy-memory SDEs:
//!
//! ```text
//! Z_i     = Σ_{j ∈ Π_i} φ(t_i, t_j) X_j ΔB_j
//! X_{i+1} = X_i + b(t_i, X_i, Z_i) Δt + σ(t_i, X_i, Z_i) ΔB_i
//! ```
//!
//! with `Π_i` the memory window of [`memory_window`]. On the negative side the
//! states are the initial segment.

use crate::error::{parameter, Error, Result};
use crate::grid::{memory_window, TimeGrid};
use crate::model::{MemoryKernel, ProblemSpec};
use crate::paths::BrownianPath;

/// Discrete approximation `{X_j}` at every node and `{Z_i}` at every positive node.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    states: Vec<f64>,
    memories: Vec<f64>,
    delay_steps: usize,
}

impl Trajectory {
    pub(crate) fn new(states: Vec<f64>, memories: Vec<f64>, delay_steps: usize) -> Self {
        Trajectory { states, memories, delay_steps }
    }

    /// `X_j` at every node of the grid, negative side included.
    pub fn states(&self) -> &[f64] {
        &self.states
    }

    /// `X_0, …, X_N`.
    pub fn positive_states(&self) -> &[f64] {
        &self.states[self.delay_steps..]
    }

    /// `Z_0, …, Z_N`.
    pub fn memories(&self) -> &[f64] {
        &self.memories
    }

    pub fn terminal_state(&self) -> f64 {
        *self.states.last().expect("trajectory is never empty")
    }
}

/// Neumaier-compensated accumulator. Lets the sliding window subtract expired
/// terms without losing the low-order bits of small memory values.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

pub(crate) fn check_problem_grid(problem: &ProblemSpec, grid: &TimeGrid) -> Result<()> {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
    if !close(problem.delay(), grid.delay()) || !close(problem.horizon(), grid.horizon()) {
        return Err(parameter(format!(
            "grid (δ = {}, T = {}) was not built for this problem (δ = {}, T = {})",
            grid.delay(),
            grid.horizon(),
            problem.delay(),
            problem.horizon()
        )));
    }
    Ok(())
}

/// `Z_i = Σ_{j ∈ Π_i} φ(t_i, t_j) X_j ΔB_j`, summed afresh over the window.
///
/// `states` must hold `X_j` for every node before `t_i`.
pub fn discrete_memory(
    problem: &ProblemSpec,
    grid: &TimeGrid,
    path: &BrownianPath,
    states: &[f64],
    step: usize,
) -> Result<f64> {
    let window = memory_window(grid, step)?;
    if states.len() < window.members.end {
        return Err(parameter(format!(
            "memory at step {step} needs {} states, got {}",
            window.members.end,
            states.len()
        )));
    }
    let ti = grid.step_time(step);
    let nodes = grid.nodes();
    let increments = path.increments();
    let kernel = problem.kernel();
    let mut acc = CompensatedSum::default();
    for j in window.indices() {
        acc.add(kernel.eval(ti, nodes[j]) * states[j] * increments[j]);
    }
    Ok(acc.value())
}

fn initial_states(problem: &ProblemSpec, grid: &TimeGrid) -> Result<Vec<f64>> {
    let mut states = Vec::with_capacity(grid.node_count());
    for &t in &grid.nodes()[..=grid.zero_index()] {
        let x = problem.initial(t);
        if !x.is_finite() {
            return Err(Error::Model(format!("initial segment is not finite at t = {t}")));
        }
        states.push(x);
    }
    Ok(states)
}

fn blowup(step: usize, what: &str, value: f64) -> Error {
    Error::NumericalBlowup { step, detail: format!("{what} evaluated to {value}") }
}

/// Running window sum for kernels `φ(t, s) = g(t) h(s)`: `Z_i = g(t_i) Σ h(t_j) X_j ΔB_j`.
struct SlidingMemory<'a> {
    kernel: &'a MemoryKernel,
    terms: Vec<f64>,
    acc: CompensatedSum,
    start: usize,
    end: usize,
}

impl<'a> SlidingMemory<'a> {
    fn new(kernel: &'a MemoryKernel, node_count: usize) -> Self {
        SlidingMemory { kernel, terms: vec![0.0; node_count], acc: CompensatedSum::default(), start: 0, end: 0 }
    }

    fn inner(&self, s: f64) -> f64 {
        match self.kernel {
            MemoryKernel::Constant(_) => 1.0,
            MemoryKernel::Separable { inner, .. } => inner(s),
            MemoryKernel::General(_) => unreachable!("general kernels use full resummation"),
        }
    }

    fn outer(&self, t: f64) -> f64 {
        match self.kernel {
            MemoryKernel::Constant(c) => *c,
            MemoryKernel::Separable { outer, .. } => outer(t),
            MemoryKernel::General(_) => unreachable!("general kernels use full resummation"),
        }
    }

    fn at(&mut self, grid: &TimeGrid, path: &BrownianPath, states: &[f64], step: usize) -> Result<f64> {
        let window = memory_window(grid, step)?;
        let nodes = grid.nodes();
        let increments = path.increments();
        while self.end < window.members.end {
            let j = self.end;
            let term = self.inner(nodes[j]) * states[j] * increments[j];
            self.terms[j] = term;
            self.acc.add(term);
            self.end += 1;
        }
        while self.start < window.members.start {
            self.acc.add(-self.terms[self.start]);
            self.start += 1;
        }
        Ok(self.outer(grid.step_time(step)) * self.acc.value())
    }
}

/// Runs the scheme on `path`. Separable and constant kernels use a sliding
/// window sum; general kernels resum the full window at every step.
pub fn euler_solve(problem: &ProblemSpec, grid: &TimeGrid, path: &BrownianPath) -> Result<Trajectory> {
    if problem.kernel().is_separable() {
        let mut memory = SlidingMemory::new(problem.kernel(), grid.node_count());
        solve_with(problem, grid, path, |states, step| memory.at(grid, path, states, step))
    } else {
        euler_solve_naive(problem, grid, path)
    }
}

/// Reference solver that rebuilds every `Z_i` by a fresh window sum.
pub fn euler_solve_naive(problem: &ProblemSpec, grid: &TimeGrid, path: &BrownianPath) -> Result<Trajectory> {
    solve_with(problem, grid, path, |states, step| {
        discrete_memory(problem, grid, path, states, step)
    })
}

fn solve_with<M>(
    problem: &ProblemSpec,
    grid: &TimeGrid,
    path: &BrownianPath,
    mut memory: M,
) -> Result<Trajectory>
where
    M: FnMut(&[f64], usize) -> Result<f64>,
{
    check_problem_grid(problem, grid)?;
    path.check_grid(grid)?;

    let n = grid.n_steps();
    let dt = grid.dt();
    let mut states = initial_states(problem, grid)?;
    states.reserve(n);
    let mut memories = Vec::with_capacity(n + 1);

    for i in 0..n {
        let t = grid.step_time(i);
        let x = states[states.len() - 1];
        let z = memory(&states, i)?;
        if !z.is_finite() {
            return Err(blowup(i, "memory", z));
        }
        let b = problem.drift(t, x, z);
        if !b.is_finite() {
            return Err(blowup(i, "drift", b));
        }
        let s = problem.diffusion(t, x, z);
        if !s.is_finite() {
            return Err(blowup(i, "diffusion", s));
        }
        let next = x + b * dt + s * path.step_increment(i);
        if !next.is_finite() {
            return Err(blowup(i, "state", next));
        }
        memories.push(z);
        states.push(next);
    }
    let z = memory(&states, n)?;
    if !z.is_finite() {
        return Err(blowup(n, "memory", z));
    }
    memories.push(z);

    Ok(Trajectory::new(states, memories, grid.delay_steps()))
}
