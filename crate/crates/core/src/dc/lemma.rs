/// Outcome of an ε-subgradient inequality check over a set of probes.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsSubgradientCheck {
    pub holds: bool,
    /// Indices of probes where `f` was not finite; they do not count.
    pub skipped: Vec<usize>,
    /// Largest `rhs − lhs` over the evaluated probes (negative when every
    /// probe holds with margin).
    pub worst_violation: f64,
}

/// Absolute slack granted to the inequality.
pub const LEMMA_SLACK: f64 = 1e-9;

/// Checks, for every probe `y`,
///
/// ```text
/// 2ε + f(y) >= f(x) + ⟨v, y − x⟩ + (ρ/4)‖y − x‖²
/// ```
///
/// which every `v ∈ ∂_ε f(x)` satisfies when `f` is ρ-convex.
pub fn check_eps_subgradient(
    f: impl Fn(&[f64]) -> f64,
    x: &[f64],
    v: &[f64],
    eps: f64,
    rho: f64,
    probes: &[Vec<f64>],
) -> EpsSubgradientCheck {
    assert!(eps >= 0.0, "ε must be nonnegative");
    assert!(rho >= 0.0, "ρ must be nonnegative");
    let fx = f(x);
    let mut skipped = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    for (p, y) in probes.iter().enumerate() {
        let fy = f(y);
        if !fy.is_finite() {
            skipped.push(p);
            continue;
        }
        let mut inner = 0.0;
        let mut dist2 = 0.0;
        for ((yk, xk), vk) in y.iter().zip(x).zip(v) {
            let d = yk - xk;
            inner += vk * d;
            dist2 += d * d;
        }
        let lhs = 2.0 * eps + fy;
        let rhs = fx + inner + 0.25 * rho * dist2;
        worst = worst.max(rhs - lhs);
    }
    EpsSubgradientCheck {
        holds: worst <= LEMMA_SLACK,
        skipped,
        worst_violation: worst,
    }
}
