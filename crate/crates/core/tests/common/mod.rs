#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdca::data::{Dataset, DatasetBuilder, Provenance};

/// Dense-ish random rows (about 60% nonzero, values in [−1.5, 1.5]) with
/// round-robin labels.
pub fn random_dataset(n: usize, d: usize, classes: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = DatasetBuilder::new(d);
    for i in 0..n {
        let mut entries = Vec::new();
        for j in 0..d {
            if rng.random_bool(0.6) {
                entries.push((j, rng.random_range(-1.5..1.5)));
            }
        }
        b.push_row(&entries, (i % classes) as u32 + 1).unwrap();
    }
    b.finish(Some(classes), Provenance::InMemory).unwrap()
}

pub fn random_vec(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-scale..scale)).collect()
}

pub mod prox_oracle {
    use sdca::prox::GroupNorm;

    /// Minimizer of a convex function on `[lo, hi]` by golden-section search.
    pub fn golden(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        let r = (5f64.sqrt() - 1.0) / 2.0;
        let mut a = hi - r * (hi - lo);
        let mut b = lo + r * (hi - lo);
        let (mut fa, mut fb) = (f(a), f(b));
        for _ in 0..300 {
            if fa <= fb {
                hi = b;
                b = a;
                fb = fa;
                a = hi - r * (hi - lo);
                fa = f(a);
            } else {
                lo = a;
                a = b;
                fa = fb;
                b = lo + r * (hi - lo);
                fb = f(b);
            }
        }
        let mid = 0.5 * (lo + hi);
        [lo, hi, mid].into_iter().fold(mid, |best, x| if f(x) < f(best) { x } else { best })
    }

    /// Numeric minimizer of `(1/2)‖w − u/ρ‖² + (c/ρ)‖w‖_q`, reduced to one
    /// scalar search per problem (q = 2, ∞) or per coordinate (q = 1).
    pub fn solve(u: &[f64], c: f64, rho: f64, q: GroupNorm) -> Vec<f64> {
        let z: Vec<f64> = u.iter().map(|v| v / rho).collect();
        let t = c / rho;
        match q {
            GroupNorm::L1 => z
                .iter()
                .map(|&zk| {
                    let f = |w: f64| 0.5 * (w - zk) * (w - zk) + t * w.abs();
                    golden(f, zk.min(0.0), zk.max(0.0))
                })
                .collect(),
            GroupNorm::L2 => {
                let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 {
                    return vec![0.0; z.len()];
                }
                let f = |s: f64| 0.5 * (s - norm) * (s - norm) + t * s;
                let s = golden(f, 0.0, norm);
                z.iter().map(|v| s * v / norm).collect()
            }
            GroupNorm::Linf => {
                let top = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let clip = |tau: f64| -> Vec<f64> { z.iter().map(|v| v.signum() * v.abs().min(tau)).collect() };
                let f = |tau: f64| {
                    let w = clip(tau);
                    0.5 * w.iter().zip(&z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() + t * tau
                };
                clip(golden(f, 0.0, top))
            }
        }
    }
}
