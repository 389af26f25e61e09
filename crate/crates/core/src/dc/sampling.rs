use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A fixed random partition of `{0..n}` into near-equal blocks, plus a fresh
/// random visiting order of the blocks for every epoch.
///
/// Block membership is drawn once from the seed. Indices inside a block are
/// kept sorted, so per-block reductions have a fixed order. Epoch orders are
/// drawn from independent ChaCha8 streams keyed by the epoch number, so any
/// epoch can be replayed without replaying the ones before it.
#[derive(Debug, Clone)]
pub struct BlockSampler {
    blocks: Vec<Vec<usize>>,
    seed: u64,
}

impl BlockSampler {
    /// Partitions `n` indices into `⌈1/fraction⌉` blocks (capped at `n`) whose
    /// sizes differ by at most one.
    ///
    /// # Panics
    ///
    /// If `fraction` is outside `(0, 1]` or `n == 0`.
    pub fn new(n: usize, fraction: f64, seed: u64) -> Self {
        assert!(n > 0, "cannot partition an empty index set");
        assert!(
            fraction > 0.0 && fraction <= 1.0,
            "batch fraction must lie in (0, 1], got {fraction}"
        );
        let count = block_count(n, fraction);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

        let base = n / count;
        let extra = n % count;
        let mut blocks = Vec::with_capacity(count);
        let mut start = 0;
        for k in 0..count {
            let len = base + usize::from(k < extra);
            let mut block = perm[start..start + len].to_vec();
            block.sort_unstable();
            blocks.push(block);
            start += len;
        }
        BlockSampler { blocks, seed }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block(&self, k: usize) -> &[usize] {
        &self.blocks[k]
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Visiting order of the blocks during `epoch` (1-based epochs; epoch 0 is
    /// the initial full refresh and has no order).
    pub fn epoch_order(&self, epoch: u64) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.blocks.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(epoch.wrapping_add(1));
        order.shuffle(&mut rng);
        order
    }
}

/// `⌈1/fraction⌉`, guarded against `1/0.1 = 10.000000000000002` style noise
/// and capped so no block is empty.
pub fn block_count(n: usize, fraction: f64) -> usize {
    let raw = (1.0 / fraction - 1e-9).ceil().max(1.0) as usize;
    raw.min(n)
}

/// Partition and first-epoch order for `n` indices.
pub fn sample_blocks(n: usize, fraction: f64, seed: u64) -> (Vec<Vec<usize>>, Vec<usize>) {
    let sampler = BlockSampler::new(n, fraction, seed);
    let order = sampler.epoch_order(1);
    (sampler.blocks, order)
}
