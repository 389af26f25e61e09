use super::problem::DcProblem;
use super::SolverError;

/// Above this many components the per-sample table is refused; it stores
/// `n · dim` floats.
pub const PER_SAMPLE_LIMIT: usize = 10_000;

/// How stale subgradients are kept between refreshes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum StorageMode {
    /// One summed contribution per block, `#blocks · dim` floats.
    #[default]
    Blocked,
    /// One vector per component. Used to cross-check the blocked table.
    PerSample,
}

/// Stale linearizations of the `h_i`, grouped by block.
///
/// Block `k` stores `V_k = Σ_{i∈B_k} v_i` with every `v_i` taken at the
/// iterate `x_k` where the block was last refreshed, and the constant
/// `c_k = Σ_{i∈B_k} [h_i(x_k) − ⟨x_k, v_i⟩ − 2ε_k]`. With `S = Σ_k V_k` the
/// current DCA surrogate is
///
/// ```text
/// T(x) = G(x) − (1/n)·(Σ_k c_k + ⟨x, S⟩)
/// ```
///
/// and its minimizer is `argmin G(x) − ⟨S/n, x⟩`.
#[derive(Debug, Clone)]
pub struct AggregatedSubgradient {
    n: usize,
    dim: usize,
    mode: StorageMode,
    blocks: Vec<Vec<usize>>,
    /// Per block (`Blocked`) or per sample (`PerSample`).
    contributions: Vec<Vec<f64>>,
    constants: Vec<f64>,
    last_touch: Vec<Option<usize>>,
    sum: Vec<f64>,
    aggregate: Vec<f64>,
}

impl AggregatedSubgradient {
    pub fn new(
        blocks: Vec<Vec<usize>>,
        n: usize,
        dim: usize,
        mode: StorageMode,
    ) -> Result<Self, SolverError> {
        if n == 0 {
            return Err(SolverError::Config("problem has no components".into()));
        }
        if mode == StorageMode::PerSample && n > PER_SAMPLE_LIMIT {
            return Err(SolverError::Config(format!(
                "per-sample subgradient storage supports at most {PER_SAMPLE_LIMIT} components, got {n}"
            )));
        }
        let slots = match mode {
            StorageMode::Blocked => blocks.len(),
            StorageMode::PerSample => n,
        };
        Ok(AggregatedSubgradient {
            n,
            dim,
            mode,
            contributions: vec![vec![0.0; dim]; slots],
            constants: vec![0.0; blocks.len()],
            last_touch: vec![None; blocks.len()],
            blocks,
            sum: vec![0.0; dim],
            aggregate: vec![0.0; dim],
        })
    }

    pub fn mode(&self) -> StorageMode {
        self.mode
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// `v = (1/n) Σ_k V_k`.
    pub fn aggregate(&self) -> &[f64] {
        &self.aggregate
    }

    /// `Σ_{i∈B_k} v_i` at the block's last refresh.
    pub fn block_contribution(&self, k: usize) -> Vec<f64> {
        match self.mode {
            StorageMode::Blocked => self.contributions[k].clone(),
            StorageMode::PerSample => {
                let mut out = vec![0.0; self.dim];
                for &i in &self.blocks[k] {
                    add_assign(&mut out, &self.contributions[i]);
                }
                out
            }
        }
    }

    pub fn last_touch(&self, k: usize) -> Option<usize> {
        self.last_touch[k]
    }

    /// Re-linearizes every `h_i` of block `k` at `x`.
    ///
    /// With `eps > 0` the problem's ε-subgradients are used. When `inspect`
    /// is given, every per-sample vector is passed to it before being summed,
    /// which forces a per-sample evaluation even in blocked mode.
    pub fn refresh_block<P: DcProblem + ?Sized>(
        &mut self,
        problem: &P,
        k: usize,
        iteration: usize,
        x: &[f64],
        eps: f64,
        mut inspect: Option<&mut dyn FnMut(usize, &[f64])>,
    ) {
        let block = &self.blocks[k];
        let count = block.len() as f64;
        let per_sample = |i: usize, v: &mut [f64]| {
            if eps == 0.0 {
                problem.subgradient_h(i, x, v);
            } else {
                problem.eps_subgradient_h(i, x, eps, v);
            }
            problem.h_value(i, x)
        };

        let constant = match self.mode {
            StorageMode::Blocked => {
                let contribution = &mut self.contributions[k];
                let h_sum = if let Some(inspect) = inspect.as_mut() {
                    contribution.fill(0.0);
                    let mut v = vec![0.0; self.dim];
                    let mut h_sum = 0.0;
                    for &i in block {
                        h_sum += per_sample(i, &mut v);
                        inspect(i, &v);
                        add_assign(contribution, &v);
                    }
                    h_sum
                } else if eps == 0.0 {
                    problem.linearize_block(block, x, contribution)
                } else {
                    problem.eps_linearize_block(block, x, eps, contribution)
                };
                let constant = h_sum - dot(x, contribution) - 2.0 * eps * count;
                self.sum.copy_from_slice(&self.contributions[0]);
                for c in &self.contributions[1..] {
                    add_assign(&mut self.sum, c);
                }
                constant
            }
            StorageMode::PerSample => {
                let mut v = vec![0.0; self.dim];
                let mut h_sum = 0.0;
                let mut inner = 0.0;
                for &i in block {
                    h_sum += per_sample(i, &mut v);
                    if let Some(inspect) = inspect.as_mut() {
                        inspect(i, &v);
                    }
                    inner += dot(x, &v);
                    let old = &mut self.contributions[i];
                    for ((s, o), new) in self.sum.iter_mut().zip(old.iter_mut()).zip(&v) {
                        *s += new - *o;
                        *o = *new;
                    }
                }
                h_sum - inner - 2.0 * eps * count
            }
        };
        self.constants[k] = constant;
        self.last_touch[k] = Some(iteration);
        average_into(&self.sum, self.n, &mut self.aggregate);
    }

    /// `T(x)`, the majorant of `F` built from the stored linearizations.
    pub fn surrogate_value<P: DcProblem + ?Sized>(&self, problem: &P, x: &[f64]) -> f64 {
        let constants: f64 = self.constants.iter().sum();
        problem.g_value(x) - (constants + dot(x, &self.sum)) / self.n as f64
    }

    /// Largest absolute difference between the running aggregate and a fresh
    /// re-aggregation of the stored contributions.
    pub fn consistency_error(&self) -> f64 {
        let mut fresh = vec![0.0; self.dim];
        for c in &self.contributions {
            add_assign(&mut fresh, c);
        }
        fresh
            .iter()
            .zip(&self.aggregate)
            .map(|(f, a)| (f / self.n as f64 - a).abs())
            .fold(0.0, f64::max)
    }
}

/// `out = sum / n`. Shared with the full-batch loop so that one-block SDCA
/// reproduces DCA bit for bit.
pub(crate) fn average_into(sum: &[f64], n: usize, out: &mut [f64]) {
    let n = n as f64;
    for (o, s) in out.iter_mut().zip(sum) {
        *o = s / n;
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn add_assign(acc: &mut [f64], v: &[f64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}
