//! Index-pair designs: which (i, j) core evaluations a statistic averages.
//!
//! A design is a finite multiset 𝒟 of ordered index pairs over {0..n−1}².
//! The complete designs (all pairs, or all distinct pairs) give the classic
//! V- and U-statistics; the incomplete designs trade statistical efficiency
//! for subquadratic cost. Enumeration order is part of the contract — the
//! estimators' deterministic reduction consumes pairs in exactly this order:
//!
//! * full / distinct / blocks / cross: row-major;
//! * linear: index order (0,1), (2,3), …;
//! * diagonals: by offset, then by row;
//! * random: draw order from the seeded generator.
//!
//! Indices are 0-based throughout.

use std::collections::HashMap;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};

/// A pair-selection scheme over an n-sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Design {
    /// All n² ordered pairs (the V-statistic design).
    Full,
    /// All n(n−1) ordered pairs with i ≠ j (the U-statistic design).
    Distinct,
    /// Disjoint consecutive pairs (0,1), (2,3), … — ⌊n/2⌋ pairs; with odd n
    /// the last sample is dropped (the L-statistic design).
    Linear,
    /// The first `r` superdiagonals of the pair matrix: pairs (i, i+off) for
    /// off = 1..=r, giving rn − r(r+1)/2 pairs (the D-statistic design).
    Diagonals { r: usize },
    /// Ordered within-block pairs for consecutive blocks of the given sizes
    /// (the B-statistic design). Every size must be ≥ 2 and they must fit
    /// in n.
    Blocks { sizes: Vec<usize> },
    /// The cross block {(i, j) : i < n₁ ≤ j} of size n₁(n−n₁) (the
    /// X-statistic design; `n1` counts the first group).
    Cross { n1: usize },
    /// `m` pairs drawn uniformly from the strict upper triangle
    /// {(i, j) : i < j}, with or without replacement, reproducibly from the
    /// seed (the R-statistic design).
    Random { m: usize, with_replacement: bool, seed: u64 },
}

impl Design {
    /// Check the design parameters against a sample size.
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            Design::Full => {
                if n == 0 {
                    return Err(Error::EmptySample);
                }
            }
            Design::Distinct | Design::Linear => {
                if n < 2 {
                    return Err(Error::SampleTooSmall { need: 2, got: n });
                }
            }
            Design::Diagonals { r } => {
                if n < 2 {
                    return Err(Error::SampleTooSmall { need: 2, got: n });
                }
                if *r == 0 || *r > n - 1 {
                    return Err(Error::InvalidDesign(format!(
                        "diagonal count must be in 1..={}, got {r}",
                        n - 1
                    )));
                }
            }
            Design::Blocks { sizes } => {
                if sizes.is_empty() {
                    return Err(Error::InvalidDesign("no blocks given".to_string()));
                }
                if let Some(&bad) = sizes.iter().find(|s| **s < 2) {
                    return Err(Error::InvalidDesign(format!(
                        "every block needs at least 2 samples, got a block of {bad}"
                    )));
                }
                let total: usize = sizes.iter().sum();
                if total > n {
                    return Err(Error::InvalidDesign(format!(
                        "blocks cover {total} samples but only {n} are available"
                    )));
                }
            }
            Design::Cross { n1 } => {
                if n < 2 {
                    return Err(Error::SampleTooSmall { need: 2, got: n });
                }
                if *n1 == 0 || *n1 >= n {
                    return Err(Error::InvalidDesign(format!(
                        "split point must be in 1..={}, got {n1}",
                        n - 1
                    )));
                }
            }
            Design::Random { m, with_replacement, .. } => {
                if n < 2 {
                    return Err(Error::SampleTooSmall { need: 2, got: n });
                }
                if *m == 0 {
                    return Err(Error::InvalidDesign("requested 0 random pairs".to_string()));
                }
                let triangle = n as u64 * (n as u64 - 1) / 2;
                if !*with_replacement && *m as u64 > triangle {
                    return Err(Error::InvalidDesign(format!(
                        "cannot draw {m} distinct pairs from {triangle} available"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Number of pairs the design enumerates for sample size `n`.
    pub fn cardinality(&self, n: usize) -> Result<usize> {
        self.validate(n)?;
        Ok(match self {
            Design::Full => n * n,
            Design::Distinct => n * (n - 1),
            Design::Linear => n / 2,
            Design::Diagonals { r } => r * n - r * (r + 1) / 2,
            Design::Blocks { sizes } => sizes.iter().map(|s| s * (s - 1)).sum(),
            Design::Cross { n1 } => n1 * (n - n1),
            Design::Random { m, .. } => *m,
        })
    }

    /// Stream the design's pairs in the contractual order.
    pub fn pairs(&self, n: usize) -> Result<DesignPairs> {
        self.validate(n)?;
        let inner = match self {
            Design::Full => Inner::Full { n, i: 0, j: 0 },
            Design::Distinct => Inner::Distinct { n, i: 0, j: if n > 1 { 1 } else { 0 } },
            Design::Linear => Inner::Linear { half: n / 2, i: 0 },
            Design::Diagonals { r } => Inner::Diagonals { n, r: *r, off: 1, i: 0 },
            Design::Blocks { sizes } => {
                let mut bounds = Vec::with_capacity(sizes.len());
                let mut start = 0;
                for &s in sizes {
                    bounds.push((start, start + s));
                    start += s;
                }
                let (s0, _) = bounds[0];
                Inner::Blocks { bounds, t: 0, i: s0, j: s0 + 1 }
            }
            Design::Cross { n1 } => Inner::Cross { n, n1: *n1, i: 0, j: *n1 },
            Design::Random { m, with_replacement, seed } => {
                let rng = ChaCha8Rng::seed_from_u64(*seed);
                let triangle = n as u64 * (n as u64 - 1) / 2;
                if *with_replacement {
                    Inner::RandomWith { rng, triangle, remaining: *m, n }
                } else {
                    Inner::RandomWithout {
                        rng,
                        swaps: HashMap::new(),
                        triangle,
                        pos: 0,
                        remaining: *m,
                        n,
                    }
                }
            }
        };
        Ok(DesignPairs { inner })
    }

    /// Collect the pairs into a vector (small designs and tests).
    pub fn enumerate_pairs(&self, n: usize) -> Result<Vec<(usize, usize)>> {
        Ok(self.pairs(n)?.collect())
    }
}

/// Streaming iterator over a design's pairs. See [`Design::pairs`].
pub struct DesignPairs {
    inner: Inner,
}

enum Inner {
    Full { n: usize, i: usize, j: usize },
    Distinct { n: usize, i: usize, j: usize },
    Linear { half: usize, i: usize },
    Diagonals { n: usize, r: usize, off: usize, i: usize },
    Blocks { bounds: Vec<(usize, usize)>, t: usize, i: usize, j: usize },
    Cross { n: usize, n1: usize, i: usize, j: usize },
    RandomWith { rng: ChaCha8Rng, triangle: u64, remaining: usize, n: usize },
    RandomWithout {
        rng: ChaCha8Rng,
        swaps: HashMap<u64, u64>,
        triangle: u64,
        pos: u64,
        remaining: usize,
        n: usize,
    },
}

impl Iterator for DesignPairs {
    type Item = (usize, usize);

    fn next(&mut self) -> Option<(usize, usize)> {
        match &mut self.inner {
            Inner::Full { n, i, j } => {
                if *i >= *n {
                    return None;
                }
                let out = (*i, *j);
                *j += 1;
                if *j == *n {
                    *j = 0;
                    *i += 1;
                }
                Some(out)
            }
            Inner::Distinct { n, i, j } => {
                if *i >= *n {
                    return None;
                }
                let out = (*i, *j);
                loop {
                    *j += 1;
                    if *j == *n {
                        *j = 0;
                        *i += 1;
                        if *i >= *n {
                            break;
                        }
                    }
                    if *j != *i {
                        break;
                    }
                }
                Some(out)
            }
            Inner::Linear { half, i } => {
                if *i >= *half {
                    return None;
                }
                let out = (2 * *i, 2 * *i + 1);
                *i += 1;
                Some(out)
            }
            Inner::Diagonals { n, r, off, i } => {
                if *off > *r {
                    return None;
                }
                let out = (*i, *i + *off);
                *i += 1;
                if *i + *off >= *n {
                    *i = 0;
                    *off += 1;
                }
                Some(out)
            }
            Inner::Blocks { bounds, t, i, j } => {
                if *t >= bounds.len() {
                    return None;
                }
                let out = (*i, *j);
                let (_, end) = bounds[*t];
                loop {
                    *j += 1;
                    if *j == end {
                        let (start, _) = bounds[*t];
                        *j = start;
                        *i += 1;
                        if *i == end {
                            *t += 1;
                            if *t >= bounds.len() {
                                break;
                            }
                            let (s, _) = bounds[*t];
                            *i = s;
                            *j = s;
                            continue;
                        }
                    }
                    if *j != *i {
                        break;
                    }
                }
                Some(out)
            }
            Inner::Cross { n, n1, i, j } => {
                if *i >= *n1 {
                    return None;
                }
                let out = (*i, *j);
                *j += 1;
                if *j == *n {
                    *j = *n1;
                    *i += 1;
                }
                Some(out)
            }
            Inner::RandomWith { rng, triangle, remaining, n } => {
                if *remaining == 0 {
                    return None;
                }
                *remaining -= 1;
                Some(unrank_upper(uniform_below(rng, *triangle), *n))
            }
            Inner::RandomWithout { rng, swaps, triangle, pos, remaining, n } => {
                if *remaining == 0 {
                    return None;
                }
                *remaining -= 1;
                // Partial Fisher–Yates over the linearized triangle: swap a
                // uniformly chosen tail element into position `pos`.
                let tail = uniform_below(rng, *triangle - *pos);
                let target = *pos + tail;
                let drawn = swaps.get(&target).copied().unwrap_or(target);
                let here = swaps.get(pos).copied().unwrap_or(*pos);
                swaps.insert(target, here);
                *pos += 1;
                Some(unrank_upper(drawn, *n))
            }
        }
    }
}

/// Unbiased uniform draw from [0, bound) by widening multiplication with
/// rejection; depends only on the raw 64-bit generator stream, so the same
/// seed yields the same draws on every platform.
fn uniform_below(rng: &mut ChaCha8Rng, bound: u64) -> u64 {
    debug_assert!(bound > 0);
    loop {
        let x = rng.next_u64();
        let wide = (x as u128) * (bound as u128);
        let low = wide as u64;
        if low < bound {
            let threshold = bound.wrapping_neg() % bound;
            if low < threshold {
                continue;
            }
        }
        return (wide >> 64) as u64;
    }
}

/// Map a linear index over the row-major strict upper triangle back to its
/// pair: index 0 ↦ (0,1), 1 ↦ (0,2), …, n−2 ↦ (0,n−1), n−1 ↦ (1,2), …
fn unrank_upper(index: u64, n: usize) -> (usize, usize) {
    let n = n as u64;
    // Row i starts at offset S(i) = i(2n − i − 1)/2; invert with a float
    // guess, then fix up exactly in integers.
    let start = |i: u64| i * (2 * n - i - 1) / 2;
    let disc = ((2 * n - 1) * (2 * n - 1)) as f64 - 8.0 * index as f64;
    let mut i = (((2 * n - 1) as f64 - disc.max(0.0).sqrt()) / 2.0).floor() as u64;
    i = i.min(n - 2);
    while start(i) > index {
        i -= 1;
    }
    while i + 1 <= n - 2 && start(i + 1) <= index {
        i += 1;
    }
    let j = i + 1 + (index - start(i));
    (i as usize, j as usize)
}
