use crate::data::SparseRow;

use super::model::ModelState;
use super::MlrError;

/// `s_k = b_k + Σ_j x_j W_{jk}`.
pub(crate) fn logits_into(w: &[f64], b: &[f64], x: SparseRow<'_>, out: &mut [f64]) {
    let q = b.len();
    out.copy_from_slice(b);
    for (j, v) in x.iter() {
        let row = &w[j * q..(j + 1) * q];
        for (o, wk) in out.iter_mut().zip(row) {
            *o += v * wk;
        }
    }
}

/// Overwrites logits with probabilities and returns `log Σ exp(s)`.
pub(crate) fn softmax_in_place(s: &mut [f64]) -> f64 {
    let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for v in s.iter_mut() {
        *v = (*v - m).exp();
        z += *v;
    }
    for v in s.iter_mut() {
        *v /= z;
    }
    m + z.ln()
}

/// Rounding can push `lse − s_y` slightly below zero; NaN passes through.
pub(crate) fn clamp_loss(v: f64) -> f64 {
    if v < 0.0 {
        0.0
    } else {
        v
    }
}

/// `log Σ exp(s)` without touching `s`.
pub(crate) fn log_sum_exp(s: &[f64]) -> f64 {
    let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + s.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

fn checked_logits(model: &ModelState, x: SparseRow<'_>) -> Result<Vec<f64>, MlrError> {
    if let Some(&j) = x.indices.last() {
        if j as usize >= model.d {
            return Err(MlrError::Dimension {
                expected: model.d,
                found: j as usize + 1,
            });
        }
    }
    let mut s = vec![0.0; model.classes];
    logits_into(&model.w, &model.b, x, &mut s);
    if let Some(class) = s.iter().position(|v| !v.is_finite()) {
        return Err(MlrError::NonFiniteLogit { class });
    }
    Ok(s)
}

/// Class probabilities `p(Y = k | x)` (zero-based `k`).
pub fn softmax_probabilities(model: &ModelState, x: SparseRow<'_>) -> Result<Vec<f64>, MlrError> {
    let mut s = checked_logits(model, x)?;
    softmax_in_place(&mut s);
    Ok(s)
}

/// `−log p(Y = y | x)` for a label `y ∈ 1..=Q`.
pub fn nll_loss(model: &ModelState, x: SparseRow<'_>, y: u32) -> Result<f64, MlrError> {
    if y == 0 || y as usize > model.classes {
        return Err(MlrError::Label { row: None, label: y });
    }
    let s = checked_logits(model, x)?;
    Ok(clamp_loss(log_sum_exp(&s) - s[y as usize - 1]))
}
