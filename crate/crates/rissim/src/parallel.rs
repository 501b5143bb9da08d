//! Data-parallel execution shim.
//!
//! Evaluation runs, rollout batches and sweep cells are independent
//! `(config, seed)` cells, so they map over an index range. With the
//! `parallel` feature (default) the range is executed on the rayon pool;
//! without it everything runs sequentially through the same entry points.
//! Results are always collected in index order, so outputs are identical
//! either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Execution strategy for independent work items.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parallelism {
    /// Run items one after another on the calling thread.
    Sequential,
    /// Fan items out over the rayon thread pool.
    #[cfg(feature = "parallel")]
    Rayon,
}

impl Default for Parallelism {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Parallelism::Rayon
        }
        #[cfg(not(feature = "parallel"))]
        {
            Parallelism::Sequential
        }
    }
}

/// Maps `f` over `0..n`, returning results in index order.
pub fn map_indexed<R, F>(par: Parallelism, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    match par {
        Parallelism::Sequential => (0..n).map(f).collect(),
        #[cfg(feature = "parallel")]
        Parallelism::Rayon => (0..n).into_par_iter().map(f).collect(),
    }
}

/// Caps the global rayon pool from the `RISSIM_THREADS` environment
/// variable. No-op when the variable is unset, unparsable, or the pool
/// was already built (e.g. repeated calls).
pub fn configure_threads_from_env() {
    #[cfg(feature = "parallel")]
    {
        if let Ok(raw) = std::env::var("RISSIM_THREADS") {
            if let Ok(n) = raw.trim().parse::<usize>() {
                if n >= 1 {
                    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
                }
            }
        }
    }
}

/// Cheap splittable seed derivation (SplitMix64 over mixed words) so that
/// every (run, stream) cell gets an independent, reproducible RNG seed.
pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(index.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_indexed_preserves_order() {
        let out = map_indexed(Parallelism::default(), 100, |i| i * i);
        assert_eq!(out, (0..100).map(|i| i * i).collect::<Vec<_>>());
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn sequential_and_rayon_agree() {
        let a = map_indexed(Parallelism::Sequential, 64, |i| derive_seed(7, 3, i as u64));
        let b = map_indexed(Parallelism::Rayon, 64, |i| derive_seed(7, 3, i as u64));
        assert_eq!(a, b);
    }

    #[test]
    fn derived_seeds_differ_across_streams() {
        let s1 = derive_seed(42, 1, 0);
        let s2 = derive_seed(42, 2, 0);
        let s3 = derive_seed(42, 1, 1);
        assert_ne!(s1, s2);
        assert_ne!(s1, s3);
    }
}
