//! Stochastic Volterra form of noisy-memory SDEs whose drift is affine in the
//! memory, `b(t, x, z) = b̃(t, x) + a z`, and whose diffusion ignores it.
//! Exchanging the order of integration in `a ∫_0^t Z(s) ds` gives
//!
//! ```text
//! X(t) = X(0) + ∫_0^t b̃(s, X(s)) ds + ∫ { φ̃(t, s) X(s) + σ(s, X(s)) } dB(s)
//! φ̃(t, s) = a ∫_{max(s,0)}^{min(s+δ, t)} φ(u, s) du
//! ```
//!
//! where the stochastic integral also runs over `[−δ, 0]` with `X = ξ` there
//! (the `σ` part only over `[0, t]`). The kernel depends on the outer time
//! `t`, so the discretization below costs `O(N²)`; it exists to cross-check
//! [`crate::euler`].

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{parameter, Error, Result};
use crate::euler::{check_problem_grid, discrete_memory, CompensatedSum, Trajectory};
use crate::grid::TimeGrid;
use crate::model::{MemoryKernel, ProblemSpec};
use crate::paths::BrownianPath;

const QUADRATURE_PANELS: usize = 64;
const DECOMPOSITION_SAMPLES: usize = 100;
const DECOMPOSITION_TOLERANCE: f64 = 1e-9;

/// `(t, x) -> value`, used for `b̃` and the memory-free diffusion.
pub type StateCoefficient = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Where the discrete solver anchors `φ̃(t_n, ·)` for the increment over `[u_j, u_{j+1}]`.
///
/// The memory sum `Z_i` sees `ΔB_j` only from step `j + 1` on, so an increment
/// enters the drift integral at its right end. Anchoring there reproduces the
/// Euler scheme term for term when `φ` is constant. Anchoring at the left end
/// is the literal left-point rule; it credits each increment with one extra
/// step of memory and differs from the Euler scheme by `O(Δt)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelAnchor {
    #[default]
    IncrementEnd,
    IncrementStart,
}

/// The Volterra kernel `φ̃` together with `b̃`, `σ` and `a`.
#[derive(Clone)]
pub struct VolterraKernel {
    problem: ProblemSpec,
    memory_coefficient: f64,
    drift_part: StateCoefficient,
    diffusion_part: StateCoefficient,
    anchor: KernelAnchor,
}

impl fmt::Debug for VolterraKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VolterraKernel")
            .field("memory_coefficient", &self.memory_coefficient)
            .field("anchor", &self.anchor)
            .field("problem", &self.problem)
            .finish_non_exhaustive()
    }
}

impl VolterraKernel {
    pub fn memory_coefficient(&self) -> f64 {
        self.memory_coefficient
    }

    pub fn anchor(&self) -> KernelAnchor {
        self.anchor
    }

    pub fn with_anchor(mut self, anchor: KernelAnchor) -> Self {
        self.anchor = anchor;
        self
    }

    pub fn problem(&self) -> &ProblemSpec {
        &self.problem
    }

    pub fn drift_part(&self, t: f64, x: f64) -> f64 {
        (self.drift_part)(t, x)
    }

    pub fn diffusion_part(&self, t: f64, x: f64) -> f64 {
        (self.diffusion_part)(t, x)
    }

    /// `φ̃(t, s)`; zero for `s ≥ t`. For `s < 0` the integral is clipped at
    /// zero, giving the weight of an initial-segment increment.
    pub fn eval(&self, t: f64, s: f64) -> f64 {
        self.window_weight(t, s, s)
    }

    /// `a ∫ φ(u, source) du` over `[max(entry, 0), min(entry + δ, t)]`.
    fn window_weight(&self, t: f64, entry: f64, source: f64) -> f64 {
        let lo = entry.max(0.0);
        let hi = (entry + self.problem.delay()).min(t);
        if hi <= lo {
            return 0.0;
        }
        let integral = match self.problem.kernel() {
            MemoryKernel::Constant(c) => c * (hi - lo),
            kernel => {
                let h = (hi - lo) / QUADRATURE_PANELS as f64;
                let mut acc = 0.0;
                for k in 0..QUADRATURE_PANELS {
                    acc += kernel.eval(lo + (k as f64 + 0.5) * h, source);
                }
                acc * h
            }
        };
        self.memory_coefficient * integral
    }

    fn increment_weight(&self, t: f64, nodes: &[f64], j: usize) -> f64 {
        match self.anchor {
            KernelAnchor::IncrementEnd => self.window_weight(t, nodes[j + 1], nodes[j]),
            KernelAnchor::IncrementStart => self.window_weight(t, nodes[j], nodes[j]),
        }
    }
}

/// Builds the Volterra kernel for `problem`, checking at 100 pseudo-random
/// points that `b(t,x,z) = b̃(t,x) + a z` and `σ(t,x,z) = σ(t,x)`.
pub fn build_volterra_kernel<B, S>(
    problem: &ProblemSpec,
    memory_coefficient: f64,
    drift_part: B,
    diffusion_part: S,
) -> Result<VolterraKernel>
where
    B: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    S: Fn(f64, f64) -> f64 + Send + Sync + 'static,
{
    if !memory_coefficient.is_finite() {
        return Err(parameter("memory coefficient must be finite"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x766f_6c74);
    for _ in 0..DECOMPOSITION_SAMPLES {
        let t = rng.random_range(0.0..=problem.horizon());
        let x = rng.random_range(-5.0..5.0);
        let z = rng.random_range(-5.0..5.0);
        let b = problem.drift(t, x, z);
        let residual = b - drift_part(t, x) - memory_coefficient * z;
        if residual.is_nan() || residual.abs() > DECOMPOSITION_TOLERANCE * b.abs().max(1.0) {
            return Err(Error::Model(format!(
                "drift is not b̃(t,x) + {memory_coefficient}·z at (t, x, z) = ({t}, {x}, {z}): residual {residual}"
            )));
        }
        let s = problem.diffusion(t, x, z);
        let residual = s - diffusion_part(t, x);
        if residual.is_nan() || residual.abs() > DECOMPOSITION_TOLERANCE * s.abs().max(1.0) {
            return Err(Error::Model(format!(
                "diffusion depends on the memory at (t, x, z) = ({t}, {x}, {z}): residual {residual}"
            )));
        }
    }
    Ok(VolterraKernel {
        problem: problem.clone(),
        memory_coefficient,
        drift_part: Arc::new(drift_part),
        diffusion_part: Arc::new(diffusion_part),
        anchor: KernelAnchor::default(),
    })
}

/// Left-point discretization of the Volterra form:
///
/// ```text
/// X_n = x0 + Σ_{i<n} b̃(t_i, X_i) Δt + Σ_{i<n} σ(t_i, X_i) ΔB_i + Σ_{u_j < t_n} w_n(j) X_j ΔB_j
/// ```
///
/// with `w_n(j)` the kernel `φ̃(t_n, ·)` anchored according to [`KernelAnchor`]
/// and `X_j = ξ(u_j)` on the negative side. Memories in the returned
/// trajectory are the window sums of the resulting states.
pub fn volterra_euler_solve(
    kernel: &VolterraKernel,
    grid: &TimeGrid,
    path: &BrownianPath,
    x0: f64,
) -> Result<Trajectory> {
    if !grid.is_aligned() {
        return Err(parameter("the Volterra solver needs δ to be a multiple of Δt"));
    }
    let problem = &kernel.problem;
    check_problem_grid(problem, grid)?;
    path.check_grid(grid)?;
    if !x0.is_finite() {
        return Err(parameter(format!("initial value must be finite, got {x0}")));
    }

    let zero = grid.zero_index();
    let nodes = grid.nodes();
    let increments = path.increments();
    let dt = grid.dt();

    let mut states: Vec<f64> = nodes[..zero].iter().map(|&t| problem.initial(t)).collect();
    states.push(x0);
    let mut local = CompensatedSum::default();
    for n in 1..=grid.n_steps() {
        let i = n - 1;
        let (t, x) = (grid.step_time(i), states[zero + i]);
        let b = kernel.drift_part(t, x);
        let s = kernel.diffusion_part(t, x);
        if !(b.is_finite() && s.is_finite()) {
            return Err(Error::NumericalBlowup { step: i, detail: format!("coefficients evaluated to ({b}, {s})") });
        }
        local.add(b * dt);
        local.add(s * increments[zero + i]);

        let tn = grid.step_time(n);
        let mut memory = CompensatedSum::default();
        for j in 0..zero + n {
            memory.add(kernel.increment_weight(tn, nodes, j) * states[j] * increments[j]);
        }
        let next = x0 + local.value() + memory.value();
        if !next.is_finite() {
            return Err(Error::NumericalBlowup { step: i, detail: format!("state evaluated to {next}") });
        }
        states.push(next);
    }

    let memories = (0..=grid.n_steps())
        .map(|i| discrete_memory(problem, grid, path, &states, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory::new(states, memories, zero))
}
