//! Deterministic parallel map-reduce over indexed work items.

use rayon::prelude::*;

use crate::stats::{pairwise_merge, Moments};

/// Items per block. Blocks are the unit of parallel work; each block is
/// reduced sequentially and blocks are merged pairwise in index order.
pub const BLOCK: u64 = 256;

/// Accumulates `k` quantities produced by `item(i, &mut out)` for
/// `i in 0..n`. The result is bit-identical for any rayon pool size.
pub fn reduce_moments<F>(n: u64, k: usize, item: F) -> Moments
where
    F: Fn(u64, &mut [f64]) + Sync + Send,
{
    let blocks = n.div_ceil(BLOCK);
    let parts: Vec<Moments> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut m = Moments::new(k);
            let mut buf = vec![0.0; k];
            let lo = b * BLOCK;
            let hi = (lo + BLOCK).min(n);
            for i in lo..hi {
                buf.iter_mut().for_each(|x| *x = 0.0);
                item(i, &mut buf);
                m.push(&buf);
            }
            m
        })
        .collect();
    pairwise_merge(parts, k)
}

/// Ordered parallel map (results are returned in index order).
pub fn ordered_map<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worker_count_does_not_change_bits() {
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                reduce_moments(10_000, 2, |i, out| {
                    let x = (i as f64 * 0.37).sin();
                    out[0] = x;
                    out[1] = x * x * 1e-3;
                })
            })
        };
        let a = run(1);
        let b = run(3);
        assert_eq!(a, b);
        assert_eq!(a.count(), 10_000);
    }
}
