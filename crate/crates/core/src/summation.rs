//! Deterministic reductions.
//!
//! Parallel sums are split into fixed-size chunks whose boundaries depend only
//! on the problem size. Each chunk is reduced sequentially and the chunk
//! partials are combined by a fixed binary tree, so the result is bit-for-bit
//! independent of how many worker threads rayon uses.

use rayon::prelude::*;
use std::ops::{Add, Range};

/// Number of items per leaf of the reduction tree.
pub const CHUNK: usize = 1024;

/// Pairwise (cascade) sum of a slice.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Combine partials with a fixed binary tree (left-to-right pairing).
pub fn tree_reduce<T, F>(mut items: Vec<T>, combine: F) -> Option<T>
where
    F: Fn(T, T) -> T,
{
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut it = items.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(combine(a, b)),
                None => next.push(a),
            }
        }
        items = next;
    }
    items.pop()
}

/// Map fixed chunks of `0..len` in parallel and tree-reduce the results.
pub fn chunked_reduce<T, M, C>(len: usize, chunk: usize, map: M, combine: C) -> Option<T>
where
    T: Send,
    M: Fn(Range<usize>) -> T + Sync,
    C: Fn(T, T) -> T,
{
    let chunk = chunk.max(1);
    let n_chunks = len.div_ceil(chunk);
    let partials: Vec<T> = (0..n_chunks)
        .into_par_iter()
        .map(|c| map(c * chunk..((c + 1) * chunk).min(len)))
        .collect();
    tree_reduce(partials, combine)
}

/// Element-wise sum helper for accumulator vectors.
pub fn add_vecs<T: Add<Output = T> + Copy>(mut a: Vec<T>, b: Vec<T>) -> Vec<T> {
    for (x, y) in a.iter_mut().zip(b) {
        *x = *x + y;
    }
    a
}
