use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DataError, Dataset, DatasetBuilder, Provenance};

const VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Share of all rows kept for training (the rest is the test part).
    pub train_fraction: f64,
    /// Share of the training rows held out for validation.
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            validation_fraction: 0.2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Splits {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
}

const PARTS: [&str; 3] = ["test", "validation", "train"];

/// Stratified three-way split.
///
/// Part sizes are `T = round((1 − train)·n)`, `V = round(val·(n − T))` and the
/// rest. Per-class counts are a joint rounding of `n_c·|part|/n` that keeps
/// every class total and every part size exact, so each count is within one
/// sample of its proportional share. Rows inside a class are shuffled with
/// the seed before they are dealt out; each part keeps the original row order.
pub fn split(dataset: &Dataset, spec: &SplitSpec) -> Result<Splits, DataError> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(DataError::Config(format!("train fraction must lie in (0, 1), got {}", spec.train_fraction)));
    }
    if !(spec.validation_fraction > 0.0 && spec.validation_fraction < 1.0) {
        return Err(DataError::Config(format!(
            "validation fraction must lie in (0, 1), got {}",
            spec.validation_fraction
        )));
    }
    let n = dataset.n();
    let test_size = ((1.0 - spec.train_fraction) * n as f64).round() as usize;
    let val_size = (spec.validation_fraction * (n - test_size) as f64).round() as usize;
    let sizes = [test_size, val_size, n - test_size - val_size];
    let [test, validation, train] = stratified_parts(dataset, sizes, PARTS, spec.seed)?;
    Ok(Splits { train, validation, test })
}

/// Stratified two-way split: `round(fraction·n)` rows held out, the rest
/// kept, with the same per-class rounding as [`split`]. Returns
/// `(kept, held_out)`.
pub fn holdout(dataset: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset), DataError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(DataError::Config(format!("holdout fraction must lie in (0, 1), got {fraction}")));
    }
    let n = dataset.n();
    let held = (fraction * n as f64).round() as usize;
    let [held, kept] = stratified_parts(dataset, [held, n - held], ["validation", "train"], seed)?;
    Ok((kept, held))
}

fn stratified_parts<const P: usize>(
    dataset: &Dataset,
    sizes: [usize; P],
    names: [&'static str; P],
    seed: u64,
) -> Result<[Dataset; P], DataError> {
    let counts = dataset.class_counts();
    let alloc = controlled_rounding(&counts, &sizes);
    for (c, row) in alloc.iter().enumerate() {
        for (p, &k) in row.iter().enumerate() {
            if k == 0 {
                return Err(DataError::ClassStarvation {
                    class: c as u32 + 1,
                    part: names[p],
                });
            }
        }
    }

    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); dataset.classes()];
    for i in 0..dataset.n() {
        by_class[dataset.class_index(i)].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts: [Vec<usize>; P] = std::array::from_fn(|_| Vec::new());
    for (members, row) in by_class.iter_mut().zip(&alloc) {
        members.shuffle(&mut rng);
        let mut start = 0;
        for (p, &k) in row.iter().enumerate() {
            parts[p].extend_from_slice(&members[start..start + k]);
            start += k;
        }
    }
    let mut out = Vec::with_capacity(P);
    for (mut idx, name) in parts.into_iter().zip(names) {
        idx.sort_unstable();
        out.push(dataset.subset(
            &idx,
            Provenance::Part {
                parent: Box::new(dataset.provenance().clone()),
                part: name.to_string(),
                seed,
            },
        )?);
    }
    Ok(out.try_into().unwrap_or_else(|_| unreachable!("one dataset per part")))
}

/// Integer matrix `a[c][p]` with row sums `rows[c]`, column sums `cols[p]` and
/// every entry equal to the floor or ceiling of `rows[c]·cols[p]/Σrows`.
///
/// Entries start at their floors; the leftover units are placed by a maximum
/// flow over the entries with a fractional part, which always saturates.
fn controlled_rounding(rows: &[usize], cols: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = rows.iter().sum();
    let (nr, nc) = (rows.len(), cols.len());
    let mut a = vec![vec![0usize; nc]; nr];
    let mut frac = vec![vec![false; nc]; nr];
    for r in 0..nr {
        for c in 0..nc {
            let prod = rows[r] * cols[c];
            a[r][c] = prod / total;
            frac[r][c] = prod % total != 0;
        }
    }
    let mut row_need: Vec<usize> = (0..nr).map(|r| rows[r] - a[r].iter().sum::<usize>()).collect();
    let mut col_need: Vec<usize> = (0..nc).map(|c| cols[c] - a.iter().map(|row| row[c]).sum::<usize>()).collect();
    // used[r][c]: a unit already routed through entry (r, c).
    let mut used = vec![vec![false; nc]; nr];

    loop {
        // Breadth-first search for an augmenting path from a row with spare
        // demand to a column with spare demand, alternating unused/used edges.
        let mut row_prev: Vec<Option<Option<usize>>> = vec![None; nr];
        let mut col_prev: Vec<Option<usize>> = vec![None; nc];
        let mut queue = std::collections::VecDeque::new();
        for r in 0..nr {
            if row_need[r] > 0 {
                row_prev[r] = Some(None);
                queue.push_back(r);
            }
        }
        let mut end = None;
        'search: while let Some(r) = queue.pop_front() {
            for c in 0..nc {
                if frac[r][c] && !used[r][c] && col_prev[c].is_none() {
                    col_prev[c] = Some(r);
                    if col_need[c] > 0 {
                        end = Some(c);
                        break 'search;
                    }
                    for r2 in 0..nr {
                        if used[r2][c] && row_prev[r2].is_none() {
                            row_prev[r2] = Some(Some(c));
                            queue.push_back(r2);
                        }
                    }
                }
            }
        }
        let Some(mut c) = end else { break };
        col_need[c] -= 1;
        loop {
            let r = col_prev[c].expect("on path");
            used[r][c] = true;
            match row_prev[r].expect("on path") {
                None => {
                    row_need[r] -= 1;
                    break;
                }
                Some(c_prev) => {
                    used[r][c_prev] = false;
                    c = c_prev;
                }
            }
        }
    }
    debug_assert!(row_need.iter().all(|&k| k == 0) && col_need.iter().all(|&k| k == 0));
    for r in 0..nr {
        for c in 0..nc {
            if used[r][c] {
                a[r][c] += 1;
            }
        }
    }
    a
}

/// Per-feature affine map fitted on a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// `false` for (near-)constant features, which pass through unchanged.
    pub scaled: Vec<bool>,
}

impl Scaler {
    /// Population mean and standard deviation of every feature of `train`.
    pub fn fit(train: &Dataset) -> Scaler {
        let d = train.dim();
        let n = train.n() as f64;
        let mut sum = vec![0.0; d];
        let mut nnz = vec![0usize; d];
        for row in train.rows() {
            for (j, v) in row.iter() {
                sum[j] += v;
                nnz[j] += 1;
            }
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let mut ss = vec![0.0; d];
        for row in train.rows() {
            for (j, v) in row.iter() {
                ss[j] += (v - mean[j]) * (v - mean[j]);
            }
        }
        let mut std = vec![1.0; d];
        let mut scaled = vec![false; d];
        for j in 0..d {
            let var = (ss[j] + (train.n() - nnz[j]) as f64 * mean[j] * mean[j]) / n;
            if var > VARIANCE_FLOOR {
                std[j] = var.sqrt();
                scaled[j] = true;
            }
        }
        Scaler { mean, std, scaled }
    }

    pub fn transform_value(&self, j: usize, v: f64) -> f64 {
        if self.scaled[j] {
            (v - self.mean[j]) / self.std[j]
        } else {
            v
        }
    }

    pub fn apply(&self, dataset: &Dataset) -> Result<Dataset, DataError> {
        if dataset.dim() != self.mean.len() {
            return Err(DataError::Config(format!(
                "scaler fitted on d = {} applied to d = {}",
                self.mean.len(),
                dataset.dim()
            )));
        }
        let mut b = DatasetBuilder::new(dataset.dim());
        for i in 0..dataset.n() {
            let x: Vec<f64> = dataset
                .dense_row(i)
                .into_iter()
                .enumerate()
                .map(|(j, v)| self.transform_value(j, v))
                .collect();
            b.push_dense(&x, dataset.label(i))?;
        }
        b.finish(
            Some(dataset.classes()),
            Provenance::Standardized(Box::new(dataset.provenance().clone())),
        )
    }
}

/// Fits a [`Scaler`] on `train` and applies it to `train` and every set in
/// `others`. Centering makes the output dense.
pub fn standardize(train: &Dataset, others: &[&Dataset]) -> Result<(Dataset, Vec<Dataset>, Scaler), DataError> {
    let scaler = Scaler::fit(train);
    let train_out = scaler.apply(train)?;
    let rest = others.iter().map(|d| scaler.apply(d)).collect::<Result<Vec<_>, _>>()?;
    Ok((train_out, rest, scaler))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_respects_margins() {
        let a = controlled_rounding(&[3, 3, 4], &[2, 2, 6]);
        for (r, row) in a.iter().enumerate() {
            assert_eq!(row.iter().sum::<usize>(), [3, 3, 4][r]);
        }
        for c in 0..3 {
            assert_eq!(a.iter().map(|row| row[c]).sum::<usize>(), [2, 2, 6][c]);
        }
    }

    #[test]
    fn bad_fractions_are_rejected() {
        let mut b = DatasetBuilder::new(1);
        for i in 0..20 {
            b.push_dense(&[1.0], (i % 2) + 1).unwrap();
        }
        let ds = b.finish(None, Provenance::InMemory).unwrap();
        let spec = SplitSpec {
            train_fraction: 1.0,
            ..SplitSpec::default()
        };
        assert!(matches!(split(&ds, &spec), Err(DataError::Config(_))));
    }
}
