//! Deterministic summation helpers.
//!
//! Every estimator in this crate reduces a (possibly huge) collection of
//! floating-point terms to a single number. Naive parallel reduction makes
//! the result depend on the scheduler; naive sequential reduction makes the
//! streamed and materialized code paths disagree once terms are produced in
//! different groupings. Both problems are avoided by fixing the reduction
//! tree: terms are folded sequentially in blocks of [`SUM_BLOCK`] (in term
//! order) and the per-block partial sums are merged by recursive halving,
//! also in block order. The tree depends only on the number of terms, never
//! on thread count or chunk boundaries, so any two code paths that enumerate
//! the same terms in the same order produce bit-identical sums.

use rayon::prelude::*;

/// Number of consecutive terms folded sequentially into one partial sum.
pub const SUM_BLOCK: usize = 4096;

/// Merge partial sums by recursive halving in-place.
///
/// The merge order is a balanced binary tree over the partials as given, so
/// it is a pure function of `partials.len()` and the values.
pub fn merge_partials(partials: &mut Vec<f64>) -> f64 {
    if partials.is_empty() {
        return 0.0;
    }
    let mut len = partials.len();
    while len > 1 {
        let half = len / 2;
        for i in 0..half {
            partials[i] = partials[2 * i] + partials[2 * i + 1];
        }
        if len % 2 == 1 {
            partials[half] = partials[len - 1];
            len = half + 1;
        } else {
            len = half;
        }
    }
    partials[0]
}

/// Sum `f(i)` for `i in 0..len` with the fixed blocked reduction tree.
///
/// Blocks are evaluated in parallel but merged in block order, so the result
/// is independent of the number of worker threads.
pub fn sum_indexed<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    if len == 0 {
        return 0.0;
    }
    let blocks = len.div_ceil(SUM_BLOCK);
    let mut partials: Vec<f64> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let start = b * SUM_BLOCK;
            let end = (start + SUM_BLOCK).min(len);
            let mut acc = 0.0;
            for i in start..end {
                acc += f(i);
            }
            acc
        })
        .collect();
    merge_partials(&mut partials)
}

/// Sum one partial per row (rows evaluated in parallel, merged in row order).
///
/// `row(i)` must itself be deterministic; typical callers fold a row of a
/// Gram matrix sequentially inside it. Rows act as the blocks of the
/// reduction tree, so the grouping is a pure function of `rows`.
pub fn sum_rows<F>(rows: usize, row: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    if rows == 0 {
        return 0.0;
    }
    let mut partials: Vec<f64> = (0..rows).into_par_iter().with_min_len(8).map(row).collect();
    merge_partials(&mut partials)
}

/// Sum `h(pair)` over an arbitrary pair stream with the fixed reduction tree.
///
/// Pairs are pulled from the iterator in order, buffered in [`SUM_BLOCK`]
/// chunks, mapped in parallel within each chunk, folded sequentially, and the
/// per-chunk partials merged in chunk order — the same tree as
/// [`sum_indexed`] over the stream positions. `sink` observes every term in
/// stream order (used by callers that also need per-row tallies).
pub fn scan_pairs<I, H, S>(pairs: I, h: H, mut sink: S) -> f64
where
    I: Iterator<Item = (usize, usize)>,
    H: Fn(usize, usize) -> f64 + Sync + Send,
    S: FnMut(usize, usize, f64),
{
    let mut partials: Vec<f64> = Vec::new();
    let mut buf: Vec<(usize, usize)> = Vec::with_capacity(SUM_BLOCK);
    let mut terms: Vec<f64> = Vec::with_capacity(SUM_BLOCK);
    let mut pairs = pairs.peekable();
    while pairs.peek().is_some() {
        buf.clear();
        buf.extend(pairs.by_ref().take(SUM_BLOCK));
        buf.par_iter().map(|&(i, j)| h(i, j)).collect_into_vec(&mut terms);
        let mut acc = 0.0;
        for (&(i, j), &t) in buf.iter().zip(terms.iter()) {
            sink(i, j, t);
            acc += t;
        }
        partials.push(acc);
    }
    merge_partials(&mut partials)
}
