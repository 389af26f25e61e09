//! Proximal operators of scaled norms.
//!
//! Every operator here solves, for a row `u` of the aggregated subgradient,
//! a scale `c >= 0` and a quadratic modulus `rho > 0`,
//!
//! ```text
//! argmin_w  (rho/2)‖w‖² + c‖w‖_q − ⟨u, w⟩
//!     = prox_{(c/rho)‖·‖_q}(u / rho)
//! ```
//!
//! for `q ∈ {1, 2, ∞}`. Outputs that are thresholded to zero are literal
//! zeros, so downstream sparsity counts are exact.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Which norm is applied to the rows of the weight matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupNorm {
    #[serde(rename = "1")]
    L1,
    #[serde(rename = "2")]
    L2,
    #[serde(rename = "inf")]
    Linf,
}

impl GroupNorm {
    pub const ALL: [GroupNorm; 3] = [GroupNorm::L1, GroupNorm::L2, GroupNorm::Linf];

    /// `‖w‖_q`.
    pub fn norm(self, w: &[f64]) -> f64 {
        match self {
            GroupNorm::L1 => w.iter().map(|x| x.abs()).sum(),
            GroupNorm::L2 => w.iter().map(|x| x * x).sum::<f64>().sqrt(),
            GroupNorm::Linf => w.iter().fold(0.0, |m, x| m.max(x.abs())),
        }
    }

    /// The dual norm, which decides when a row is thresholded to zero.
    pub fn dual_norm(self, w: &[f64]) -> f64 {
        match self {
            GroupNorm::L1 => GroupNorm::Linf.norm(w),
            GroupNorm::L2 => GroupNorm::L2.norm(w),
            GroupNorm::Linf => GroupNorm::L1.norm(w),
        }
    }
}

impl fmt::Display for GroupNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupNorm::L1 => "1",
            GroupNorm::L2 => "2",
            GroupNorm::Linf => "inf",
        })
    }
}

impl FromStr for GroupNorm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "l1" => Ok(GroupNorm::L1),
            "2" | "l2" => Ok(GroupNorm::L2),
            "inf" | "infinity" | "linf" | "∞" => Ok(GroupNorm::Linf),
            other => Err(format!("unknown norm `{other}` (expected 1, 2 or inf)")),
        }
    }
}

/// One row-wise proximal problem.
#[derive(Debug, Clone, Copy)]
pub struct ProxQuery<'a> {
    pub u: &'a [f64],
    /// Scale of the norm term, `−z_j >= 0`.
    pub c: f64,
    pub rho: f64,
    pub q: GroupNorm,
}

impl<'a> ProxQuery<'a> {
    pub fn new(u: &'a [f64], c: f64, rho: f64, q: GroupNorm) -> Self {
        debug_assert!(c >= 0.0, "prox scale must be nonnegative, got {c}");
        debug_assert!(rho > 0.0, "prox modulus must be positive, got {rho}");
        ProxQuery { u, c, rho, q }
    }

    pub fn solve(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.u.len()];
        self.solve_into(&mut out);
        out
    }

    pub fn solve_into(&self, out: &mut [f64]) {
        match self.q {
            GroupNorm::L1 => prox_l1_into(self.u, self.c, self.rho, out),
            GroupNorm::L2 => prox_l2_into(self.u, self.c, self.rho, out),
            GroupNorm::Linf => prox_linf_into(self.u, self.c, self.rho, out),
        }
    }

    /// `(1/2)‖w − u/rho‖² + (c/rho)‖w‖_q`, the objective the prox minimizes.
    pub fn objective(&self, w: &[f64]) -> f64 {
        let quad: f64 = w
            .iter()
            .zip(self.u)
            .map(|(wk, uk)| {
                let r = wk - uk / self.rho;
                r * r
            })
            .sum();
        0.5 * quad + self.c / self.rho * self.q.norm(w)
    }
}

/// Componentwise soft-thresholding of `u/rho` at level `c/rho`.
pub fn prox_l1(u: &[f64], c: f64, rho: f64) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    prox_l1_into(u, c, rho, &mut out);
    out
}

pub fn prox_l1_into(u: &[f64], c: f64, rho: f64, out: &mut [f64]) {
    for (o, &uk) in out.iter_mut().zip(u) {
        let shrunk = uk.abs() - c;
        *o = if shrunk > 0.0 {
            shrunk.copysign(uk) / rho
        } else {
            0.0
        };
    }
}

/// Block soft-thresholding: zero when `‖u‖₂ <= c`, else `(1 − c/‖u‖₂)·u/rho`.
pub fn prox_l2(u: &[f64], c: f64, rho: f64) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    prox_l2_into(u, c, rho, &mut out);
    out
}

pub fn prox_l2_into(u: &[f64], c: f64, rho: f64, out: &mut [f64]) {
    let norm = GroupNorm::L2.norm(u);
    if norm <= c {
        out.fill(0.0);
        return;
    }
    let scale = (1.0 - c / norm) / rho;
    for (o, &uk) in out.iter_mut().zip(u) {
        *o = scale * uk;
    }
}

/// Prox of `(c/rho)‖·‖_∞` at `u/rho`, through the Moreau identity
/// `prox_{τ‖·‖∞}(v) = v − Π_{τ·B₁}(v)`.
pub fn prox_linf(u: &[f64], c: f64, rho: f64) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    prox_linf_into(u, c, rho, &mut out);
    out
}

pub fn prox_linf_into(u: &[f64], c: f64, rho: f64, out: &mut [f64]) {
    if c == 0.0 {
        for (o, &uk) in out.iter_mut().zip(u) {
            *o = uk / rho;
        }
        return;
    }
    if GroupNorm::L1.norm(u) <= c {
        out.fill(0.0);
        return;
    }
    let tau = c / rho;
    let v: Vec<f64> = u.iter().map(|uk| uk / rho).collect();
    let (proj, _) = project_l1_ball_with_shift(&v, tau);
    for ((o, vk), pk) in out.iter_mut().zip(&v).zip(&proj) {
        *o = vk - pk;
    }
}

/// Euclidean projection onto `{v : ‖v‖₁ <= radius}`.
pub fn project_l1_ball(w: &[f64], radius: f64) -> Vec<f64> {
    project_l1_ball_with_shift(w, radius).0
}

/// Projection onto the ℓ1 ball together with the threshold `δ` solving
/// `Σ (|w_k| − δ)_+ = radius` (zero when `w` is already inside the ball).
///
/// Sort-based, `O(Q log Q)`.
pub fn project_l1_ball_with_shift(w: &[f64], radius: f64) -> (Vec<f64>, f64) {
    assert!(radius > 0.0, "l1-ball radius must be positive, got {radius}");
    if GroupNorm::L1.norm(w) <= radius {
        return (w.to_vec(), 0.0);
    }
    let mut mags: Vec<f64> = w.iter().map(|x| x.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));

    // Largest k with mags[k-1] > (cumsum_k − radius)/k.
    let mut cumsum = 0.0;
    let mut shift = 0.0;
    for (k, &m) in mags.iter().enumerate() {
        cumsum += m;
        let candidate = (cumsum - radius) / (k + 1) as f64;
        if m > candidate {
            shift = candidate;
        } else {
            break;
        }
    }
    let proj = w
        .iter()
        .map(|&x| {
            let shrunk = x.abs() - shift;
            if shrunk > 0.0 {
                shrunk.copysign(x)
            } else {
                0.0
            }
        })
        .collect();
    (proj, shift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn soft_threshold_arithmetic() {
        assert_eq!(prox_l1(&[3.0, -1.0], 2.0, 1.0), vec![1.0, 0.0]);
        assert_eq!(prox_l1(&[3.0, -5.0], 2.0, 2.0), vec![0.5, -1.5]);
    }

    #[test]
    fn zero_scale_is_identity() {
        let u = [0.3, -7.0, 2.5];
        for q in GroupNorm::ALL {
            let out = ProxQuery::new(&u, 0.0, 4.0, q).solve();
            for (o, uk) in out.iter().zip(&u) {
                assert_eq!(*o, uk / 4.0, "q = {q}");
            }
        }
    }

    #[test]
    fn block_soft_threshold_arithmetic() {
        let out = prox_l2(&[3.0, 4.0], 2.0, 1.0);
        assert_abs_diff_eq!(out[0], 1.8, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1], 2.4, epsilon = 1e-15);
        assert_eq!(prox_l2(&[3.0, 4.0], 5.0, 1.0), vec![0.0, 0.0]);
    }

    #[test]
    fn l1_ball_projection_example() {
        let (p, shift) = project_l1_ball_with_shift(&[1.5, 0.5], 1.0);
        assert_abs_diff_eq!(shift, 0.5, epsilon = 1e-15);
        assert_eq!(p, vec![1.0, 0.0]);
        assert_eq!(project_l1_ball(&[0.2, -0.3], 1.0), vec![0.2, -0.3]);
    }

    #[test]
    fn linf_example_and_threshold() {
        let out = prox_linf(&[3.0, 1.0], 2.0, 1.0);
        assert_abs_diff_eq!(out[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1], 1.0, epsilon = 1e-15);
        assert_eq!(prox_linf(&[1.0, -1.0], 2.0, 3.0), vec![0.0, 0.0]);
    }

    #[test]
    fn parse_and_display_round_trip() {
        for q in GroupNorm::ALL {
            assert_eq!(q.to_string().parse::<GroupNorm>().unwrap(), q);
        }
        assert!("3".parse::<GroupNorm>().is_err());
    }

    fn query_strategy() -> impl Strategy<Value = (Vec<f64>, f64, f64)> {
        (2usize..12).prop_flat_map(|len| {
            (
                prop::collection::vec(-5.0f64..5.0, len),
                0.0f64..6.0,
                0.1f64..5.0,
            )
        })
    }

    proptest! {
        #[test]
        fn threshold_to_zero_by_dual_norm((u, c, rho) in query_strategy()) {
            for q in GroupNorm::ALL {
                let out = ProxQuery::new(&u, c, rho, q).solve();
                if q.dual_norm(&u) <= c {
                    prop_assert!(out.iter().all(|&x| x == 0.0));
                } else {
                    prop_assert!(out.iter().any(|&x| x != 0.0));
                }
            }
        }

        #[test]
        fn nonexpansive(
            (u1, c, rho) in query_strategy(),
            seed in prop::collection::vec(-5.0f64..5.0, 12),
        ) {
            let u2: Vec<f64> = seed[..u1.len()].to_vec();
            let du: f64 = u1.iter().zip(&u2).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            for q in GroupNorm::ALL {
                let p1 = ProxQuery::new(&u1, c, rho, q).solve();
                let p2 = ProxQuery::new(&u2, c, rho, q).solve();
                let dp: f64 = p1.iter().zip(&p2).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                prop_assert!(dp <= du / rho + 1e-12);
            }
        }

        #[test]
        fn sign_and_permutation_equivariant(
            (u, c, rho) in query_strategy(),
            flips in prop::collection::vec(any::<bool>(), 12),
            rotate in 0usize..12,
        ) {
            let len = u.len();
            let perm: Vec<usize> = (0..len).map(|k| (k + rotate) % len).collect();
            let sign = |k: usize| if flips[k] { -1.0 } else { 1.0 };
            let transformed: Vec<f64> = perm.iter().map(|&p| sign(p) * u[p]).collect();
            for q in GroupNorm::ALL {
                let base = ProxQuery::new(&u, c, rho, q).solve();
                let moved = ProxQuery::new(&transformed, c, rho, q).solve();
                for (k, &p) in perm.iter().enumerate() {
                    prop_assert!((moved[k] - sign(p) * base[p]).abs() <= 1e-12);
                }
            }
        }

        #[test]
        fn projection_lands_on_ball(w in prop::collection::vec(-4.0f64..4.0, 1..20), radius in 0.05f64..3.0) {
            let p = project_l1_ball(&w, radius);
            let l1 = GroupNorm::L1.norm(&p);
            prop_assert!(l1 <= radius * (1.0 + 1e-12));
            if GroupNorm::L1.norm(&w) > radius {
                prop_assert!((l1 - radius).abs() <= 1e-12 * radius.max(1.0));
            }
        }
    }
}
