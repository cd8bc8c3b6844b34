//! Data-parallel execution with a sequential fallback.
//!
//! Every parallel loop in the crate goes through [`map_indexed`]. Work items
//! are identified by their index, every item derives its own RNG stream from
//! that index, and results come back in index order. Reductions are then
//! folded sequentially, so outputs do not depend on the thread count or on
//! whether the `parallel` feature is enabled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// How to run a batch of independent work items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Parallel when the `parallel` feature is compiled in.
    #[default]
    Auto,
    Sequential,
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self != Execution::Sequential
    }
}

/// Evaluates `f(0..n)` and returns the results in index order.
pub fn map_indexed<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec.is_parallel() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Configures the global worker pool. Returns false if it was already set
/// or the crate was built without the `parallel` feature.
pub fn set_workers(n: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
        false
    }
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed, a purpose tag and an index.
pub fn derive_seed(seed: u64, tag: u64, index: u64) -> u64 {
    mix64(mix64(seed ^ mix64(tag)) ^ index.wrapping_mul(0xd134_2543_de82_ef95))
}

/// A ChaCha stream for work item `index` under `seed`.
pub fn stream_rng(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ mix64(tag)));
    rng.set_stream(index);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn parallel_and_sequential_agree() {
        let f = |i: usize| {
            let mut rng = stream_rng(7, 1, i as u64);
            rng.random::<u64>()
        };
        let a = map_indexed(Execution::Sequential, 100, f);
        let b = map_indexed(Execution::Parallel, 100, f);
        assert_eq!(a, b);
    }

    #[test]
    fn streams_differ() {
        let mut a = stream_rng(1, 0, 0);
        let mut b = stream_rng(1, 0, 1);
        assert_ne!(a.random::<u64>(), b.random::<u64>());
        assert_ne!(derive_seed(1, 2, 3), derive_seed(1, 2, 4));
    }
}
