use crate::data::Dataset;
use crate::dc::DcProblem;
use crate::prox::ProxQuery;

use super::loss::{clamp_loss, log_sum_exp, logits_into, softmax_in_place};
use super::model::ModelState;
use super::penalty::PenaltyConfig;
use super::MlrError;

/// Margin by which the default `ρ` exceeds the Lipschitz estimate.
pub const RHO_MARGIN: f64 = 1e-3;

/// Relative tolerance of the `‖W_j‖_q <= t_j` membership test.
const FEASIBILITY_TOL: f64 = 1e-12;

/// `L̂ = ½·max_i(‖x_i‖² + 1)`, a Lipschitz constant of every `∇ℓ_i` with
/// respect to `(W, b)`.
pub fn estimate_lipschitz(data: &Dataset) -> f64 {
    let max_sq = data.rows().map(|r| r.squared_norm()).fold(0.0, f64::max);
    0.5 * (max_sq + 1.0)
}

/// One element of `∂h_i` split into its blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentSubgradient {
    /// `ρW − x_i r_iᵀ`, row-major `d × Q`.
    pub u: Vec<f64>,
    /// `ρb − r_i`.
    pub v: Vec<f64>,
    /// `−λη'(t_j)`, nonpositive.
    pub z: Vec<f64>,
}

/// Group-sparse multinomial logistic regression as a finite-sum DC program
/// over the flat point `[W | b | t]`:
///
/// ```text
/// g_i = (ρ/2)‖(W, b)‖² + χ_Ω(W, t),   Ω = { ‖W_j‖_q <= t_j }
/// h_i = (ρ/2)‖(W, b)‖² − ℓ_i(W, b) − λ Σ_j η(t_j)
/// ```
#[derive(Debug, Clone)]
pub struct MlrProblem<'a> {
    data: &'a Dataset,
    penalty: PenaltyConfig,
    rho: f64,
    lipschitz: f64,
}

/// Problem with `ρ = (1 + 10⁻³)·L̂`.
pub fn build_problem(data: &Dataset, penalty: PenaltyConfig) -> Result<MlrProblem<'_>, MlrError> {
    let l = estimate_lipschitz(data);
    MlrProblem::with_rho(data, penalty, (1.0 + RHO_MARGIN) * l)
}

impl<'a> MlrProblem<'a> {
    /// Problem with an explicit `ρ`, which must exceed the Lipschitz estimate.
    pub fn with_rho(data: &'a Dataset, penalty: PenaltyConfig, rho: f64) -> Result<Self, MlrError> {
        penalty.validate()?;
        for i in 0..data.n() {
            let y = data.label(i);
            if y == 0 || y as usize > data.classes() {
                return Err(MlrError::Label { row: Some(i), label: y });
            }
        }
        let lipschitz = estimate_lipschitz(data);
        if !(rho > lipschitz && rho.is_finite()) {
            return Err(MlrError::Config(format!("rho = {rho} must exceed the Lipschitz estimate {lipschitz}")));
        }
        Ok(MlrProblem {
            data,
            penalty,
            rho,
            lipschitz,
        })
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    pub fn penalty(&self) -> &PenaltyConfig {
        &self.penalty
    }

    pub fn set_lambda(&mut self, lambda: f64) -> Result<(), MlrError> {
        let updated = self.penalty.with_lambda(lambda);
        updated.validate()?;
        self.penalty = updated;
        Ok(())
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn d(&self) -> usize {
        self.data.dim()
    }

    pub fn classes(&self) -> usize {
        self.data.classes()
    }

    pub fn model(&self, x: &[f64]) -> ModelState {
        ModelState::from_flat(self.d(), self.classes(), x)
    }

    fn split<'x>(&self, x: &'x [f64]) -> (&'x [f64], &'x [f64], &'x [f64]) {
        let dq = self.d() * self.classes();
        let (w, rest) = x.split_at(dq);
        let (b, t) = rest.split_at(self.classes());
        (w, b, t)
    }

    fn split_mut<'x>(&self, x: &'x mut [f64]) -> (&'x mut [f64], &'x mut [f64], &'x mut [f64]) {
        let dq = self.d() * self.classes();
        let (w, rest) = x.split_at_mut(dq);
        let (b, t) = rest.split_at_mut(self.classes());
        (w, b, t)
    }

    /// `ℓ_i(W, b)`.
    pub fn loss(&self, i: usize, w: &[f64], b: &[f64]) -> f64 {
        let mut s = vec![0.0; self.classes()];
        logits_into(w, b, self.data.row(i), &mut s);
        clamp_loss(log_sum_exp(&s) - s[self.data.class_index(i)])
    }

    /// `(1/n) Σ_i ℓ_i(W, b)`.
    pub fn mean_loss(&self, w: &[f64], b: &[f64]) -> f64 {
        let mut s = vec![0.0; self.classes()];
        let mut total = 0.0;
        for i in 0..self.data.n() {
            logits_into(w, b, self.data.row(i), &mut s);
            total += clamp_loss(log_sum_exp(&s) - s[self.data.class_index(i)]);
        }
        total / self.data.n() as f64
    }

    fn penalty_sum(&self, t: &[f64]) -> f64 {
        t.iter().map(|&tj| self.penalty.eta(tj)).sum()
    }

    fn feasible(&self, w: &[f64], t: &[f64]) -> bool {
        let q = self.classes();
        t.iter().enumerate().all(|(j, &tj)| {
            let norm = self.penalty.q.norm(&w[j * q..(j + 1) * q]);
            norm <= tj + FEASIBILITY_TOL * tj.abs().max(norm)
        })
    }

    /// Objective of the unlifted problem at `(W, b)`:
    /// `(1/n) Σ ℓ_i + λ Σ_j η(‖W_j‖_q)`.
    pub fn unlifted_objective(&self, model: &ModelState) -> f64 {
        let q = self.classes();
        let pen: f64 = (0..self.d())
            .map(|j| self.penalty.eta(self.penalty.q.norm(&model.w[j * q..(j + 1) * q])))
            .sum();
        self.mean_loss(&model.w, &model.b) + self.penalty.lambda * pen
    }

    /// Element of `∂h_i` at `model`.
    pub fn component_subgradient(&self, i: usize, model: &ModelState) -> Result<ComponentSubgradient, MlrError> {
        if model.d != self.d() || model.classes != self.classes() {
            return Err(MlrError::Dimension {
                expected: self.d(),
                found: model.d,
            });
        }
        let x = model.to_flat();
        let mut out = vec![0.0; x.len()];
        self.subgradient_h(i, &x, &mut out);
        if let Some(pos) = out.iter().position(|v| !v.is_finite()) {
            let dq = self.d() * self.classes();
            return Err(MlrError::NonFiniteLogit {
                class: if pos < dq { pos % self.classes() } else { pos.saturating_sub(dq) % self.classes() },
            });
        }
        let (u, v, z) = self.split(&out);
        Ok(ComponentSubgradient {
            u: u.to_vec(),
            v: v.to_vec(),
            z: z.to_vec(),
        })
    }

    /// Global minimizer of `(ρ/2)‖(W,b)‖² + χ_Ω − ⟨U, W⟩ − ⟨v, b⟩ − ⟨z, t⟩`.
    ///
    /// Row `j` is `prox` of `U_j` with weight `−z_j`; positive entries of `z`
    /// are treated as zero.
    pub fn surrogate_minimizer(&self, u: &[f64], v: &[f64], z: &[f64]) -> ModelState {
        let (d, q) = (self.d(), self.classes());
        let mut m = ModelState::zeros(d, q);
        for j in 0..d {
            let c = (-z[j]).max(0.0);
            let row = &mut m.w[j * q..(j + 1) * q];
            ProxQuery::new(&u[j * q..(j + 1) * q], c, self.rho, self.penalty.q).solve_into(row);
            m.t[j] = self.penalty.q.norm(row);
        }
        for (bk, vk) in m.b.iter_mut().zip(v) {
            *bk = vk / self.rho;
        }
        m
    }

    /// Shared pass of the exact and inexact block linearizations: subgradient
    /// parts at `(w_lin, b_lin)`, losses at `(w, b)`.
    fn fused_block(&self, indices: &[usize], x: &[f64], lin: Option<&[f64]>, out: &mut [f64]) -> f64 {
        let (w, b, t) = self.split(x);
        let (wl, bl) = match lin {
            Some(p) => {
                let (wl, bl, _) = self.split(p);
                (wl, bl)
            }
            None => (w, b),
        };
        let q = self.classes();
        let nb = indices.len() as f64;
        let rho = self.rho;
        let (ow, ob, ot) = self.split_mut(out);
        for (o, wk) in ow.iter_mut().zip(wl) {
            *o = rho * nb * wk;
        }
        for (o, bk) in ob.iter_mut().zip(bl) {
            *o = rho * nb * bk;
        }
        for (o, &tj) in ot.iter_mut().zip(t) {
            *o = nb * self.penalty.slope(tj);
        }

        let mut r = vec![0.0; q];
        let mut s = vec![0.0; q];
        let mut loss_sum = 0.0;
        for &i in indices {
            let row = self.data.row(i);
            let y = self.data.class_index(i);
            logits_into(wl, bl, row, &mut r);
            if lin.is_some() {
                logits_into(w, b, row, &mut s);
                loss_sum += clamp_loss(log_sum_exp(&s) - s[y]);
                softmax_in_place(&mut r);
            } else {
                let lse = softmax_in_place(&mut r);
                // r holds probabilities; the loss needs the raw logit of y.
                let mut sy = b[y];
                for (j, v) in row.iter() {
                    sy += v * w[j * q + y];
                }
                loss_sum += clamp_loss(lse - sy);
            }
            r[y] -= 1.0;
            for (j, v) in row.iter() {
                let target = &mut ow[j * q..(j + 1) * q];
                for (o, rk) in target.iter_mut().zip(&r) {
                    *o -= v * rk;
                }
            }
            for (o, rk) in ob.iter_mut().zip(&r) {
                *o -= rk;
            }
        }
        let sq: f64 = w.iter().chain(b).map(|v| v * v).sum();
        nb * (0.5 * rho * sq - self.penalty.lambda * self.penalty_sum(t)) - loss_sum
    }

    /// The point at which inexact subgradients are taken: `(W, b)` moved by
    /// `√(2ε/ρ)` along a fixed unit direction, `t` unchanged. Since every
    /// `h_i` has curvature at most `ρ` in `(W, b)`, the gradient there is an
    /// `ε`-subgradient at `x`.
    fn perturbed(&self, x: &[f64], eps: f64) -> Vec<f64> {
        let mut p = x.to_vec();
        let m = self.d() * self.classes() + self.classes();
        let step = (2.0 * eps / self.rho).sqrt() / (m as f64).sqrt();
        for (k, v) in p[..m].iter_mut().enumerate() {
            *v += if k % 2 == 0 { step } else { -step };
        }
        p
    }
}

impl DcProblem for MlrProblem<'_> {
    fn n(&self) -> usize {
        self.data.n()
    }

    fn dim(&self) -> usize {
        ModelState::flat_len(self.d(), self.classes())
    }

    fn g_component(&self, _i: usize, x: &[f64]) -> f64 {
        let (w, b, t) = self.split(x);
        if !self.feasible(w, t) {
            return f64::INFINITY;
        }
        0.5 * self.rho * w.iter().chain(b).map(|v| v * v).sum::<f64>()
    }

    fn g_value(&self, x: &[f64]) -> f64 {
        self.g_component(0, x)
    }

    fn h_value(&self, i: usize, x: &[f64]) -> f64 {
        let (w, b, t) = self.split(x);
        let sq: f64 = w.iter().chain(b).map(|v| v * v).sum();
        0.5 * self.rho * sq - self.loss(i, w, b) - self.penalty.lambda * self.penalty_sum(t)
    }

    fn subgradient_h(&self, i: usize, x: &[f64], out: &mut [f64]) {
        self.fused_block(&[i], x, None, out);
    }

    fn eps_subgradient_h(&self, i: usize, x: &[f64], eps: f64, out: &mut [f64]) {
        if eps > 0.0 {
            let p = self.perturbed(x, eps);
            self.fused_block(&[i], x, Some(&p), out);
        } else {
            self.subgradient_h(i, x, out);
        }
    }

    fn solve_surrogate(&self, v: &[f64], _eps: f64, out: &mut [f64]) {
        let (u, vb, z) = self.split(v);
        let m = self.surrogate_minimizer(u, vb, z);
        let (ow, ob, ot) = self.split_mut(out);
        ow.copy_from_slice(&m.w);
        ob.copy_from_slice(&m.b);
        ot.copy_from_slice(&m.t);
    }

    /// `0`: `h_i` is only affine-plus-concave-penalty in `t`.
    fn strong_convexity_modulus(&self) -> f64 {
        0.0
    }

    fn objective(&self, x: &[f64]) -> f64 {
        let (w, b, t) = self.split(x);
        if !self.feasible(w, t) {
            return f64::INFINITY;
        }
        self.mean_loss(w, b) + self.penalty.lambda * self.penalty_sum(t)
    }

    fn linearize_block(&self, indices: &[usize], x: &[f64], out: &mut [f64]) -> f64 {
        self.fused_block(indices, x, None, out)
    }

    fn eps_linearize_block(&self, indices: &[usize], x: &[f64], eps: f64, out: &mut [f64]) -> f64 {
        if eps > 0.0 {
            let p = self.perturbed(x, eps);
            self.fused_block(indices, x, Some(&p), out)
        } else {
            self.fused_block(indices, x, None, out)
        }
    }
}
