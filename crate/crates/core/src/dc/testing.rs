//! Small DC problems with known structure, used by the engine's own tests,
//! the acceptance suite and the examples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::problem::DcProblem;

/// `F(x) = x² − |x|` on the real line (`g = x²`, `h = |x|`, `n = 1`).
///
/// Stationary points are `0` and `±1/2`; DCA started at any `x⁰ > 0` lands on
/// `1/2` after one step.
#[derive(Debug, Clone, Copy, Default)]
pub struct SquareMinusAbs;

impl DcProblem for SquareMinusAbs {
    fn n(&self) -> usize {
        1
    }

    fn dim(&self) -> usize {
        1
    }

    fn g_component(&self, _i: usize, x: &[f64]) -> f64 {
        x[0] * x[0]
    }

    fn h_value(&self, _i: usize, x: &[f64]) -> f64 {
        x[0].abs()
    }

    fn subgradient_h(&self, _i: usize, x: &[f64], out: &mut [f64]) {
        out[0] = if x[0] > 0.0 {
            1.0
        } else if x[0] < 0.0 {
            -1.0
        } else {
            0.0
        };
    }

    fn solve_surrogate(&self, v: &[f64], _eps: f64, out: &mut [f64]) {
        out[0] = v[0] / 2.0;
    }

    fn strong_convexity_modulus(&self) -> f64 {
        0.0
    }
}

/// `g_i(x) = (a/2)‖x‖² + μ‖x‖₁` and `h_i(x) = (b_i/2)‖x − c_i‖²`, with
/// `a > max_i b_i` so that `F` is bounded below.
///
/// The ε-subgradients and ε-solutions are deliberately perturbed by the
/// largest amount the tolerance allows along a fixed direction, so the
/// inexact engine is exercised for real.
#[derive(Debug, Clone)]
pub struct QuadraticDc {
    pub a: f64,
    pub mu: f64,
    pub curvatures: Vec<f64>,
    pub centers: Vec<Vec<f64>>,
}

impl QuadraticDc {
    /// Random instance with `b_i ∈ [0.5, 1.5]`, `a = 2`, `μ = 0.1` and centers
    /// in `[−2, 2]^dim`.
    pub fn random(n: usize, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let curvatures = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
        let centers = (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        QuadraticDc {
            a: 2.0,
            mu: 0.1,
            curvatures,
            centers,
        }
    }

    fn direction(&self) -> f64 {
        1.0 / (self.dim() as f64).sqrt()
    }
}

impl DcProblem for QuadraticDc {
    fn n(&self) -> usize {
        self.centers.len()
    }

    fn dim(&self) -> usize {
        self.centers.first().map_or(0, Vec::len)
    }

    fn g_component(&self, _i: usize, x: &[f64]) -> f64 {
        self.g_value(x)
    }

    fn g_value(&self, x: &[f64]) -> f64 {
        let sq: f64 = x.iter().map(|v| v * v).sum();
        let l1: f64 = x.iter().map(|v| v.abs()).sum();
        0.5 * self.a * sq + self.mu * l1
    }

    fn h_value(&self, i: usize, x: &[f64]) -> f64 {
        let d2: f64 = x.iter().zip(&self.centers[i]).map(|(a, c)| (a - c) * (a - c)).sum();
        0.5 * self.curvatures[i] * d2
    }

    fn subgradient_h(&self, i: usize, x: &[f64], out: &mut [f64]) {
        let b = self.curvatures[i];
        for ((o, xk), ck) in out.iter_mut().zip(x).zip(&self.centers[i]) {
            *o = b * (xk - ck);
        }
    }

    /// `∇h_i(x) + δ·e` with `δ² = b_i·ε/2 <= 2·b_i·ε`.
    fn eps_subgradient_h(&self, i: usize, x: &[f64], eps: f64, out: &mut [f64]) {
        self.subgradient_h(i, x, out);
        let shift = (0.5 * self.curvatures[i] * eps).sqrt() * self.direction();
        for o in out.iter_mut() {
            *o += shift;
        }
    }

    fn solve_surrogate(&self, v: &[f64], eps: f64, out: &mut [f64]) {
        for (o, vk) in out.iter_mut().zip(v) {
            let shrunk = vk.abs() - self.mu;
            *o = if shrunk > 0.0 { shrunk.copysign(*vk) / self.a } else { 0.0 };
        }
        if eps > 0.0 {
            // Surrogate increase along e is at most (a/2)s² + 2μ√m·s <= ε.
            let root_m = (self.dim() as f64).sqrt();
            let mut s = (eps / self.a).sqrt();
            if self.mu > 0.0 {
                s = s.min(eps / (4.0 * self.mu * root_m));
            }
            let step = s * self.direction();
            for o in out.iter_mut() {
                *o += step;
            }
        }
    }

    fn strong_convexity_modulus(&self) -> f64 {
        self.curvatures.iter().copied().fold(f64::INFINITY, f64::min)
    }
}
