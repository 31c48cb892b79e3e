//! Closed-form solution of the test equation `dX = Z dB`, `φ ≡ 1`, `ξ ≡ 1`
//! on `[0, δ]` with `δ = T`.
//!
//! Writing `X_1 = X`, `X_2(t) = ∫_{−δ}^t X_1 dB` turns the equation into the
//! two-dimensional delay system `dY = a Y dB + b Y(t−δ) dB`, which on `[0, δ]`
//! is an ordinary linear SDE with known forcing `K(t−δ) = B(t−δ) − B(−δ)`:
//!
//! ```text
//! Y(t) = e^{a W(t) − ½a²t} ( Y(0) + ∫_0^t F(s) c(s) dB(s) − ∫_0^t a F(s) c(s) ds )
//! F(t) = e^{−a W(t) + ½a²t},   c(s) = (−K(s−δ), 0)ᵀ,   Y(0) = (1, B(0) − B(−δ))ᵀ
//! ```
//!
//! where `W(t) = B(t) − B(0)` is the Brownian motion restarted at zero. Both
//! integrals are evaluated on the simulation grid with left-point sums.

use crate::error::{parameter, Result};
use crate::grid::TimeGrid;
use crate::paths::BrownianPath;

/// Row-major 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);
    /// State coupling `a`; satisfies `a² = I`.
    pub const SWAP: Mat2 = Mat2([[0.0, 1.0], [1.0, 0.0]]);
    /// Delay coupling `b`. It only enters through `K(t−δ)`.
    pub const DELAY: Mat2 = Mat2([[0.0, -1.0], [0.0, 0.0]]);

    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        Mat2([
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ])
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    pub fn add(&self, rhs: &Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        Mat2([[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]])
    }

    pub fn scale(&self, k: f64) -> Mat2 {
        let m = &self.0;
        Mat2([[k * m[0][0], k * m[0][1]], [k * m[1][0], k * m[1][1]]])
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn max_abs_diff(&self, rhs: &Mat2) -> f64 {
        let mut d: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                d = d.max((self.0[r][c] - rhs.0[r][c]).abs());
            }
        }
        d
    }
}

/// `F(t) = exp(−a·b + ½a²t) = e^{t/2} [[cosh b, −sinh b], [−sinh b, cosh b]]`.
pub fn mat_f(t: f64, b: f64) -> Mat2 {
    let g = (0.5 * t).exp();
    let (ch, sh) = (b.cosh(), b.sinh());
    Mat2([[g * ch, -g * sh], [-g * sh, g * ch]])
}

/// `exp(a·b − ½a²t) = e^{−t/2} [[cosh b, sinh b], [sinh b, cosh b]]`, the inverse of [`mat_f`].
pub fn mat_exp_forward(t: f64, b: f64) -> Mat2 {
    let g = (-0.5 * t).exp();
    let (ch, sh) = (b.cosh(), b.sinh());
    Mat2([[g * ch, g * sh], [g * sh, g * ch]])
}

/// `Y(t_i) = (X_1, X_2)` at every positive node.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    y_values: Vec<[f64; 2]>,
}

impl ExactSolution {
    pub fn y_values(&self) -> &[[f64; 2]] {
        &self.y_values
    }

    /// `X(t_i)`, the solution of the noisy-memory equation.
    pub fn first_components(&self) -> Vec<f64> {
        self.y_values.iter().map(|y| y[0]).collect()
    }

    pub fn terminal(&self) -> f64 {
        self.y_values.last().expect("solution is never empty")[0]
    }
}

/// Evaluates the closed form along `path` at every positive node of `grid`.
///
/// Requires `T = δ` and an aligned grid.
pub fn exact_solve(delta: f64, grid: &TimeGrid, path: &BrownianPath) -> Result<ExactSolution> {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
    if !close(grid.horizon(), delta) || !close(grid.delay(), delta) {
        return Err(parameter(format!(
            "the closed form needs T = δ = {delta}; grid has δ = {}, T = {}",
            grid.delay(),
            grid.horizon()
        )));
    }
    if !grid.is_aligned() {
        return Err(parameter("the closed form needs δ to be a multiple of Δt"));
    }
    path.check_grid(grid)?;

    let values = path.values();
    let zero = grid.zero_index();
    let lag = grid.delay_steps();
    let b0 = values[zero];
    let dt = grid.dt();

    let mut y_values = Vec::with_capacity(grid.n_steps() + 1);
    let y0 = [1.0, b0 - values[0]];
    let mut integral = [0.0, 0.0];
    y_values.push(y0);
    for i in 0..grid.n_steps() {
        let s = grid.step_time(i);
        let w = values[zero + i] - b0;
        let k = values[zero + i - lag] - values[0];
        let fc = mat_f(s, w).apply([-k, 0.0]);
        let afc = Mat2::SWAP.apply(fc);
        let db = path.step_increment(i);
        integral[0] += fc[0] * db - afc[0] * dt;
        integral[1] += fc[1] * db - afc[1] * dt;

        let t = grid.step_time(i + 1);
        let w_next = values[zero + i + 1] - b0;
        y_values.push(mat_exp_forward(t, w_next).apply([y0[0] + integral[0], y0[1] + integral[1]]));
    }
    Ok(ExactSolution { y_values })
}
