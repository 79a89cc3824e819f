//! Parallel execution helpers with a sequential fallback.
//!
//! Built with the `parallel` feature the helpers run on rayon; without it
//! they run inline. Results are bitwise identical either way and for any
//! thread count: writes go to disjoint chunks, maps collect in index order,
//! and floating-point reductions use a fixed-shape pairwise tree whose
//! splits depend only on the input length.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Runs `f` on each `chunk`-sized slice of `data` (last may be shorter),
/// passing the chunk index.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(chunk)
        .enumerate()
        .for_each(|(i, c)| f(i, c));
    #[cfg(not(feature = "parallel"))]
    data.chunks_mut(chunk)
        .enumerate()
        .for_each(|(i, c)| f(i, c));
}

/// Runs `f` on aligned chunk pairs of two equally long slices.
pub fn for_each_chunk_pair_mut<T, F>(a: &mut [T], b: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T], &mut [T]) + Sync,
{
    debug_assert_eq!(a.len(), b.len());
    #[cfg(feature = "parallel")]
    a.par_chunks_mut(chunk)
        .zip(b.par_chunks_mut(chunk))
        .enumerate()
        .for_each(|(i, (ca, cb))| f(i, ca, cb));
    #[cfg(not(feature = "parallel"))]
    a.chunks_mut(chunk)
        .zip(b.chunks_mut(chunk))
        .enumerate()
        .for_each(|(i, (ca, cb))| f(i, ca, cb));
}

/// Collects `f(0..len)` in index order.
pub fn map_collect<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    return (0..len).into_par_iter().map(f).collect();
    #[cfg(not(feature = "parallel"))]
    return (0..len).map(f).collect();
}

/// Runs both closures, in parallel when possible.
pub fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    #[cfg(feature = "parallel")]
    return rayon::join(a, b);
    #[cfg(not(feature = "parallel"))]
    return (a(), b());
}

const SUM_LEAF: usize = 128;

/// Sum of `f(i)` for `i` in `[lo, hi)` using a midpoint-split pairwise tree.
///
/// The tree shape depends only on the range, never on thread scheduling.
pub fn pairwise_sum_fn<F>(lo: usize, hi: usize, f: &F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    if hi - lo <= SUM_LEAF {
        let mut acc = 0.0;
        for i in lo..hi {
            acc += f(i);
        }
        return acc;
    }
    let mid = lo + (hi - lo) / 2;
    let (a, b) = join(
        || pairwise_sum_fn(lo, mid, f),
        || pairwise_sum_fn(mid, hi, f),
    );
    a + b
}

/// Pairwise-tree sum of a slice.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    pairwise_sum_fn(0, v.len(), &|i| v[i])
}
