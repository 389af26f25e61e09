//! Synthetic Gaussian mixtures.
//!
//! All generators draw from ChaCha8 seeded with the 64-bit seed. Labels are
//! balanced (round-robin, then shuffled); features are drawn afterwards, one
//! row at a time, in row order.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{DataError, Dataset, DatasetBuilder, Provenance};

pub const SIM3_DEFAULT_DIM: usize = 500;
const SIM_DIM: usize = 50;
const SIM2_BLOCK: usize = 10;
const SIM2_RHO: f64 = 0.6;
const SIM3_INFORMATIVE: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimKind {
    Sim1,
    Sim2,
    Sim3,
}

impl SimKind {
    pub fn classes(self) -> usize {
        match self {
            SimKind::Sim1 | SimKind::Sim3 => 4,
            SimKind::Sim2 => 3,
        }
    }
}

impl fmt::Display for SimKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimKind::Sim1 => "sim1",
            SimKind::Sim2 => "sim2",
            SimKind::Sim3 => "sim3",
        })
    }
}

impl FromStr for SimKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "").as_str() {
            "sim1" => Ok(SimKind::Sim1),
            "sim2" => Ok(SimKind::Sim2),
            "sim3" => Ok(SimKind::Sim3),
            other => Err(format!("unknown generator `{other}` (expected sim1, sim2 or sim3)")),
        }
    }
}

/// Generator parameters, also readable from a `key = value` text file with
/// keys `kind`, `n`, `d` and `seed`.
///
/// `n` is always the total sample count. For sim3 it must be a multiple of 4
/// and `d` defaults to 500; sim1 and sim2 have `d = 50` fixed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: SimKind,
    pub n: usize,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn parse(text: &str) -> Result<GeneratorSpec, DataError> {
        let mut kind = None;
        let mut n = None;
        let mut d = None;
        let mut seed = None;
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .or_else(|| line.split_once(':'))
                .ok_or_else(|| DataError::Parse {
                    line: line_no,
                    message: format!("expected `key = value`, found `{line}`"),
                })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| DataError::Parse {
                line: line_no,
                message: format!("bad {what} `{value}`"),
            };
            match key {
                "kind" => kind = Some(value.parse::<SimKind>().map_err(|m| DataError::Parse { line: line_no, message: m })?),
                "n" => n = Some(value.parse::<usize>().map_err(|_| bad("sample count"))?),
                "d" => d = Some(value.parse::<usize>().map_err(|_| bad("dimension"))?),
                "seed" => seed = Some(value.parse::<u64>().map_err(|_| bad("seed"))?),
                other => {
                    return Err(DataError::Parse {
                        line: line_no,
                        message: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        let missing = |key: &str| DataError::Config(format!("generator spec is missing `{key}`"));
        Ok(GeneratorSpec {
            kind: kind.ok_or_else(|| missing("kind"))?,
            n: n.ok_or_else(|| missing("n"))?,
            d,
            seed: seed.unwrap_or(0),
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("kind = {}\nn = {}\n", self.kind, self.n);
        if let Some(d) = self.d {
            s.push_str(&format!("d = {d}\n"));
        }
        s.push_str(&format!("seed = {}\n", self.seed));
        s
    }

    pub fn generate(&self) -> Result<Dataset, DataError> {
        match self.kind {
            SimKind::Sim1 | SimKind::Sim2 => {
                if let Some(d) = self.d {
                    if d != SIM_DIM {
                        return Err(DataError::Config(format!("{} has d = {SIM_DIM}, got d = {d}", self.kind)));
                    }
                }
                if self.kind == SimKind::Sim1 {
                    generate_sim1(self.n, self.seed)
                } else {
                    generate_sim2(self.n, self.seed)
                }
            }
            SimKind::Sim3 => {
                if self.n % 4 != 0 {
                    return Err(DataError::Config(format!("sim3 needs n divisible by 4, got {}", self.n)));
                }
                generate_sim3(self.n / 4, self.d.unwrap_or(SIM3_DEFAULT_DIM), self.seed)
            }
        }
    }
}

fn balanced_labels(n: usize, classes: usize, rng: &mut ChaCha8Rng) -> Vec<u32> {
    let mut labels: Vec<u32> = (0..n).map(|i| (i % classes) as u32 + 1).collect();
    labels.shuffle(rng);
    labels
}

fn check_n(n: usize, min: usize, kind: SimKind) -> Result<(), DataError> {
    if n < min {
        Err(DataError::Config(format!("{kind} needs n >= {min}, got {n}")))
    } else {
        Ok(())
    }
}

/// Four classes in `d = 50`; class `k` has mean 0.5 on features
/// `10(k−1)..10k` and identity covariance.
pub fn generate_sim1(n: usize, seed: u64) -> Result<Dataset, DataError> {
    check_n(n, 4, SimKind::Sim1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = balanced_labels(n, 4, &mut rng);
    let mut b = DatasetBuilder::new(SIM_DIM);
    let mut x = vec![0.0; SIM_DIM];
    for &y in &labels {
        let k = y as usize - 1;
        for (j, xj) in x.iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *xj = z + if j / 10 == k { 0.5 } else { 0.0 };
        }
        b.push_dense(&x, y)?;
    }
    b.finish(Some(4), generated(SimKind::Sim1, n, None, seed))
}

/// Three classes in `d = 50` with means 0, 0.4 and 0.8 on the first 40
/// features and a block-diagonal covariance of five `0.6^|j−j'|` blocks.
pub fn generate_sim2(n: usize, seed: u64) -> Result<Dataset, DataError> {
    check_n(n, 3, SimKind::Sim2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = balanced_labels(n, 3, &mut rng);
    let chol = cholesky(&ar1_block(SIM2_BLOCK, SIM2_RHO), SIM2_BLOCK).expect("AR(1) block is positive definite");
    let mut b = DatasetBuilder::new(SIM_DIM);
    let mut x = vec![0.0; SIM_DIM];
    let mut z = [0.0; SIM2_BLOCK];
    for &y in &labels {
        let mean = 0.4 * (y - 1) as f64;
        for block in x.chunks_mut(SIM2_BLOCK) {
            for zj in z.iter_mut() {
                *zj = StandardNormal.sample(&mut rng);
            }
            for (r, xr) in block.iter_mut().enumerate() {
                *xr = (0..=r).map(|c| chol[r * SIM2_BLOCK + c] * z[c]).sum();
            }
        }
        for xj in x.iter_mut().take(40) {
            *xj += mean;
        }
        b.push_dense(&x, y)?;
    }
    b.finish(Some(3), generated(SimKind::Sim2, n, None, seed))
}

/// Four classes of `n_per_class` rows; the first 100 features of class `k`
/// have mean `(k−1)/3`, the remaining `d − 100` are pure noise.
pub fn generate_sim3(n_per_class: usize, d: usize, seed: u64) -> Result<Dataset, DataError> {
    if d <= SIM3_INFORMATIVE {
        return Err(DataError::Config(format!("sim3 needs d > {SIM3_INFORMATIVE}, got {d}")));
    }
    check_n(n_per_class, 1, SimKind::Sim3)?;
    let n = 4 * n_per_class;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = balanced_labels(n, 4, &mut rng);
    let mut b = DatasetBuilder::new(d);
    let mut x = vec![0.0; d];
    for &y in &labels {
        let mean = (y - 1) as f64 / 3.0;
        for (j, xj) in x.iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *xj = if j < SIM3_INFORMATIVE { z + mean } else { z };
        }
        b.push_dense(&x, y)?;
    }
    b.finish(Some(4), generated(SimKind::Sim3, n, Some(d), seed))
}

fn generated(kind: SimKind, n: usize, d: Option<usize>, seed: u64) -> Provenance {
    Provenance::Generated(GeneratorSpec { kind, n, d, seed })
}

fn ar1_block(m: usize, rho: f64) -> Vec<f64> {
    let mut a = vec![0.0; m * m];
    for r in 0..m {
        for c in 0..m {
            a[r * m + c] = rho.powi((r as i32 - c as i32).abs());
        }
    }
    a
}

/// Lower Cholesky factor of a row-major SPD matrix.
fn cholesky(a: &[f64], m: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; m * m];
    for r in 0..m {
        for c in 0..=r {
            let s: f64 = (0..c).map(|k| l[r * m + k] * l[c * m + k]).sum();
            if r == c {
                let diag = a[r * m + r] - s;
                if diag <= 0.0 {
                    return None;
                }
                l[r * m + r] = diag.sqrt();
            } else {
                l[r * m + c] = (a[r * m + c] - s) / l[c * m + c];
            }
        }
    }
    Some(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reconstructs_block() {
        let a = ar1_block(SIM2_BLOCK, SIM2_RHO);
        let l = cholesky(&a, SIM2_BLOCK).unwrap();
        let m = SIM2_BLOCK;
        for r in 0..m {
            for c in 0..m {
                let v: f64 = (0..m).map(|k| l[r * m + k] * l[c * m + k]).sum();
                assert!((v - a[r * m + c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn spec_text_round_trip() {
        let spec = GeneratorSpec::parse("# demo\nkind = sim3\nn = 400\nd = 120\nseed = 9\n").unwrap();
        assert_eq!(spec, GeneratorSpec { kind: SimKind::Sim3, n: 400, d: Some(120), seed: 9 });
        assert_eq!(GeneratorSpec::parse(&spec.to_text()).unwrap(), spec);
        assert!(matches!(GeneratorSpec::parse("kind = sim9\n"), Err(DataError::Parse { line: 1, .. })));
        assert!(matches!(GeneratorSpec::parse("n = 4\n"), Err(DataError::Config(_))));
        assert!(matches!(GeneratorSpec::parse("kind = sim1\nn = 8\ncolour = red\n"), Err(DataError::Parse { line: 3, .. })));
    }

    #[test]
    fn generator_preconditions() {
        assert!(generate_sim1(3, 0).is_err());
        assert!(generate_sim2(2, 0).is_err());
        assert!(generate_sim3(10, 100, 0).is_err());
        let bad = GeneratorSpec { kind: SimKind::Sim3, n: 10, d: None, seed: 0 };
        assert!(bad.generate().is_err());
        let bad_d = GeneratorSpec { kind: SimKind::Sim1, n: 10, d: Some(20), seed: 0 };
        assert!(bad_d.generate().is_err());
    }

    #[test]
    fn labels_are_balanced() {
        let ds = generate_sim1(10, 3).unwrap();
        assert_eq!(ds.class_counts(), vec![3, 3, 2, 2]);
        let ds = generate_sim3(5, 101, 3).unwrap();
        assert_eq!(ds.class_counts(), vec![5; 4]);
        assert_eq!(ds.dim(), 101);
    }
}
