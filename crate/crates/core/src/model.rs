//! Problem definitions: coefficients, memory kernel, delay, horizon and the
//! deterministic initial segment.
//!
//! The existence theory for these equations needs `b` and `σ` to be
//! Lipschitz with linear growth in `(x, z)` and `φ` to be square integrable.
//! Those conditions are not checked here; a problem that violates them may
//! still simulate, but the convergence guarantees of the scheme do not apply.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{parameter, Error, Result};

/// Coefficient `(t, x, z) -> value` used for the drift `b` and diffusion `σ`.
pub type Coefficient = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
/// Deterministic path `ξ(t)` prescribed on `[−δ, 0]`.
pub type InitialSegment = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// Single-variable factor of a separable kernel.
pub type KernelFactor = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// Kernel `(t, s) -> φ(t, s)`.
pub type KernelFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// The memory kernel `φ(t, s)` weighting past states inside the noisy memory.
///
/// Declaring structure lets the solver pick a sliding-window evaluation of the
/// memory sum; [`MemoryKernel::General`] always falls back to full resummation.
#[derive(Clone)]
pub enum MemoryKernel {
    /// `φ(t, s) = c`.
    Constant(f64),
    /// `φ(t, s) = outer(t) · inner(s)`.
    Separable { outer: KernelFactor, inner: KernelFactor },
    /// Arbitrary deterministic kernel.
    General(KernelFn),
}

impl MemoryKernel {
    pub fn constant(value: f64) -> Self {
        MemoryKernel::Constant(value)
    }

    pub fn separable<G, H>(outer: G, inner: H) -> Self
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
        H: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        MemoryKernel::Separable { outer: Arc::new(outer), inner: Arc::new(inner) }
    }

    pub fn general<F>(kernel: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        MemoryKernel::General(Arc::new(kernel))
    }

    #[inline]
    pub fn eval(&self, t: f64, s: f64) -> f64 {
        match self {
            MemoryKernel::Constant(c) => *c,
            MemoryKernel::Separable { outer, inner } => outer(t) * inner(s),
            MemoryKernel::General(f) => f(t, s),
        }
    }

    /// True when the kernel admits the sliding-window fast path.
    pub fn is_separable(&self) -> bool {
        !matches!(self, MemoryKernel::General(_))
    }
}

impl fmt::Debug for MemoryKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MemoryKernel::Constant(c) => write!(f, "Constant({c})"),
            MemoryKernel::Separable { .. } => f.write_str("Separable"),
            MemoryKernel::General(_) => f.write_str("General"),
        }
    }
}

/// Built-in problems with a known structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuiltinProblem {
    /// `dX = Z dB`, `φ ≡ 1`, `ξ ≡ 1`, `δ = T`; has a closed-form solution on `[0, δ]`.
    PaperExample,
    /// `dX = Z dt`, `φ ≡ 1`, `ξ ≡ 1`; reduces to a linear stochastic Volterra equation.
    PureMemoryDrift,
    /// Anything assembled through [`make_problem`].
    Custom,
}

impl BuiltinProblem {
    pub fn name(&self) -> &'static str {
        match self {
            BuiltinProblem::PaperExample => "paper-example",
            BuiltinProblem::PureMemoryDrift => "pure-memory-drift",
            BuiltinProblem::Custom => "custom",
        }
    }

    /// Realizes the built-in problem. `PaperExample` ignores `horizon` and uses `δ = T`.
    pub fn realize(&self, delta: f64, horizon: f64) -> Result<ProblemSpec> {
        match self {
            BuiltinProblem::PaperExample => paper_example(delta),
            BuiltinProblem::PureMemoryDrift => pure_memory_drift(delta, horizon),
            BuiltinProblem::Custom => {
                Err(parameter("a custom problem has no canonical realization"))
            }
        }
    }
}

impl fmt::Display for BuiltinProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BuiltinProblem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-example" => Ok(BuiltinProblem::PaperExample),
            "pure-memory-drift" => Ok(BuiltinProblem::PureMemoryDrift),
            other => Err(parameter(format!(
                "unknown problem '{other}' (expected paper-example or pure-memory-drift)"
            ))),
        }
    }
}

/// A noisy-memory SDE together with its initial segment and time horizon.
///
/// Immutable after construction; all callables are shared behind `Arc` and must
/// be re-entrant.
#[derive(Clone)]
pub struct ProblemSpec {
    drift: Coefficient,
    diffusion: Coefficient,
    kernel: MemoryKernel,
    delay: f64,
    horizon: f64,
    initial_segment: InitialSegment,
    builtin: BuiltinProblem,
}

impl ProblemSpec {
    #[inline]
    pub fn drift(&self, t: f64, x: f64, z: f64) -> f64 {
        (self.drift)(t, x, z)
    }

    #[inline]
    pub fn diffusion(&self, t: f64, x: f64, z: f64) -> f64 {
        (self.diffusion)(t, x, z)
    }

    #[inline]
    pub fn initial(&self, t: f64) -> f64 {
        (self.initial_segment)(t)
    }

    pub fn kernel(&self) -> &MemoryKernel {
        &self.kernel
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn builtin(&self) -> BuiltinProblem {
        self.builtin
    }

    /// Same coefficients with a different memory kernel. The result is tagged `Custom`.
    pub fn with_kernel(&self, kernel: MemoryKernel) -> ProblemSpec {
        ProblemSpec { kernel, builtin: BuiltinProblem::Custom, ..self.clone() }
    }
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("builtin", &self.builtin)
            .field("kernel", &self.kernel)
            .field("delay", &self.delay)
            .field("horizon", &self.horizon)
            .finish_non_exhaustive()
    }
}

/// Assembles and validates a problem.
pub fn make_problem<B, S, X>(
    drift: B,
    diffusion: S,
    kernel: MemoryKernel,
    delay: f64,
    horizon: f64,
    initial_segment: X,
) -> Result<ProblemSpec>
where
    B: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    S: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    X: Fn(f64) -> f64 + Send + Sync + 'static,
{
    build(
        Arc::new(drift),
        Arc::new(diffusion),
        kernel,
        delay,
        horizon,
        Arc::new(initial_segment),
        BuiltinProblem::Custom,
    )
}

pub(crate) fn build(
    drift: Coefficient,
    diffusion: Coefficient,
    kernel: MemoryKernel,
    delay: f64,
    horizon: f64,
    initial_segment: InitialSegment,
    builtin: BuiltinProblem,
) -> Result<ProblemSpec> {
    if !(delay.is_finite() && delay > 0.0) {
        return Err(parameter(format!("delay must be positive and finite, got {delay}")));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(parameter(format!("horizon must be positive and finite, got {horizon}")));
    }
    for t in [-delay, -0.5 * delay, 0.0] {
        let v = initial_segment(t);
        if !v.is_finite() {
            return Err(Error::Model(format!("initial segment is not finite at t = {t}: {v}")));
        }
    }
    Ok(ProblemSpec { drift, diffusion, kernel, delay, horizon, initial_segment, builtin })
}

/// `dX(t) = Z(t) dB(t)` with `φ ≡ 1`, `ξ ≡ 1` and `δ = T = delta`.
pub fn paper_example(delta: f64) -> Result<ProblemSpec> {
    build(
        Arc::new(|_, _, _| 0.0),
        Arc::new(|_, _, z| z),
        MemoryKernel::Constant(1.0),
        delta,
        delta,
        Arc::new(|_| 1.0),
        BuiltinProblem::PaperExample,
    )
}

/// `dX(t) = Z(t) dt` with `φ ≡ 1` and `ξ ≡ 1`.
pub fn pure_memory_drift(delta: f64, horizon: f64) -> Result<ProblemSpec> {
    build(
        Arc::new(|_, _, z| z),
        Arc::new(|_, _, _| 0.0),
        MemoryKernel::Constant(1.0),
        delta,
        horizon,
        Arc::new(|_| 1.0),
        BuiltinProblem::PureMemoryDrift,
    )
}
