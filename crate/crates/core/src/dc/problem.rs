/// A finite-sum DC program `F(x) = (1/n) Σ_i [g_i(x) − h_i(x)]`.
///
/// Points are flat `f64` slices of length [`dim`](DcProblem::dim). `g_i` may
/// be extended-valued (an indicator of a convex set); `h_i` must be finite
/// everywhere. Implementations are evaluated read-only from the solver loop
/// and must be safe to share across threads.
pub trait DcProblem: Sync {
    /// Number of components.
    fn n(&self) -> usize;

    fn dim(&self) -> usize;

    /// `g_i(x)`; `f64::INFINITY` outside its domain.
    fn g_component(&self, i: usize, x: &[f64]) -> f64;

    /// `h_i(x)`.
    fn h_value(&self, i: usize, x: &[f64]) -> f64;

    /// Writes an exact element of `∂h_i(x)` into `out`.
    fn subgradient_h(&self, i: usize, x: &[f64], out: &mut [f64]);

    /// Writes an element of the ε-subdifferential `∂_ε h_i(x)` into `out`.
    ///
    /// The default returns the exact subgradient, which belongs to every
    /// ε-subdifferential.
    fn eps_subgradient_h(&self, i: usize, x: &[f64], eps: f64, out: &mut [f64]) {
        let _ = eps;
        self.subgradient_h(i, x, out);
    }

    /// Writes `argmin_x G(x) − ⟨v, x⟩` (or an `eps`-solution of it) into `out`.
    fn solve_surrogate(&self, v: &[f64], eps: f64, out: &mut [f64]);

    /// `min_i ρ(h_i)`, the largest `ρ` such that every `h_i − (ρ/2)‖·‖²` is convex.
    fn strong_convexity_modulus(&self) -> f64;

    /// `G(x) = (1/n) Σ g_i(x)`.
    fn g_value(&self, x: &[f64]) -> f64 {
        let n = self.n();
        (0..n).map(|i| self.g_component(i, x)).sum::<f64>() / n as f64
    }

    /// `F_i(x) = g_i(x) − h_i(x)`.
    fn component_objective(&self, i: usize, x: &[f64]) -> f64 {
        self.g_component(i, x) - self.h_value(i, x)
    }

    /// `F(x) = (1/n) Σ F_i(x)`.
    fn objective(&self, x: &[f64]) -> f64 {
        let n = self.n();
        (0..n).map(|i| self.component_objective(i, x)).sum::<f64>() / n as f64
    }

    /// Linearizes the block `indices` at `x`: overwrites `out` with
    /// `Σ_{i∈indices} v_i` for exact subgradients `v_i ∈ ∂h_i(x)` and returns
    /// `Σ_{i∈indices} h_i(x)`.
    ///
    /// Implementations may override this with a fused pass; the result must
    /// not depend on anything but `indices` (in order) and `x`.
    fn linearize_block(&self, indices: &[usize], x: &[f64], out: &mut [f64]) -> f64 {
        sum_per_sample(indices, x, out, |i, v| {
            self.subgradient_h(i, x, v);
            self.h_value(i, x)
        })
    }

    /// As [`linearize_block`](DcProblem::linearize_block) with ε-subgradients.
    fn eps_linearize_block(&self, indices: &[usize], x: &[f64], eps: f64, out: &mut [f64]) -> f64 {
        sum_per_sample(indices, x, out, |i, v| {
            self.eps_subgradient_h(i, x, eps, v);
            self.h_value(i, x)
        })
    }
}

fn sum_per_sample(
    indices: &[usize],
    x: &[f64],
    out: &mut [f64],
    mut eval: impl FnMut(usize, &mut [f64]) -> f64,
) -> f64 {
    out.fill(0.0);
    let mut v = vec![0.0; x.len()];
    let mut h_sum = 0.0;
    for &i in indices {
        h_sum += eval(i, &mut v);
        for (o, vi) in out.iter_mut().zip(&v) {
            *o += vi;
        }
    }
    h_sum
}
