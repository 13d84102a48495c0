//! Adaptive combination of statistics over a collection of kernels:
//! standard-deviation normalization, mean/max/fuse pooling, and automatic
//! bandwidth collections derived from the quantiles of the pairwise
//! distance set.

use crate::cores::{PairedSample, ScoreModel};
use crate::designs::Design;
use crate::error::{Error, Result};
use crate::estimators::{
    self, HsicShiftedCore, MmdPairedCore, PairCore, StatKind, SteinPairCore,
};
use crate::kernels::{distance, KernelFamily, KernelSpec, SampleMatrix};
use crate::reduce;

/// Normalizers below this are an error: dividing by them would report a
/// huge, meaningless normalized statistic instead of failing loudly.
pub const SIGMA_FLOOR: f64 = 1e-12;

/// How a collection was obtained; carried for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Explicit,
    AutoQuantile,
}

/// An ordered, non-empty set of kernels: single kernels for two-sample and
/// goodness-of-fit statistics, or per-stream pairs for dependence
/// statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelCollection {
    kernels: CollectionKernels,
    provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CollectionKernels {
    Single(Vec<KernelSpec>),
    Pairs(Vec<(KernelSpec, KernelSpec)>),
}

impl KernelCollection {
    pub fn explicit(kernels: Vec<KernelSpec>) -> Result<Self> {
        if kernels.is_empty() {
            return Err(Error::EmptyCollection);
        }
        Ok(KernelCollection { kernels: CollectionKernels::Single(kernels), provenance: Provenance::Explicit })
    }

    pub fn explicit_pairs(pairs: Vec<(KernelSpec, KernelSpec)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyCollection);
        }
        Ok(KernelCollection { kernels: CollectionKernels::Pairs(pairs), provenance: Provenance::Explicit })
    }

    pub fn len(&self) -> usize {
        match &self.kernels {
            CollectionKernels::Single(v) => v.len(),
            CollectionKernels::Pairs(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn kernels(&self) -> &CollectionKernels {
        &self.kernels
    }

    /// The single-kernel list, or an error for pair collections.
    pub fn single(&self) -> Result<&[KernelSpec]> {
        match &self.kernels {
            CollectionKernels::Single(v) => Ok(v),
            CollectionKernels::Pairs(_) => Err(Error::InvalidPooling(
                "this collection holds two-stream kernel pairs".into(),
            )),
        }
    }

    /// The kernel-pair list, or an error for single-kernel collections.
    pub fn pairs(&self) -> Result<&[(KernelSpec, KernelSpec)]> {
        match &self.kernels {
            CollectionKernels::Pairs(v) => Ok(v),
            CollectionKernels::Single(_) => Err(Error::InvalidPooling(
                "this collection holds single kernels, not two-stream pairs".into(),
            )),
        }
    }
}

/// Pooling method with every parameter resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PoolMethod {
    Mean,
    Max,
    Fuse(f64),
}

/// Pooling request as the caller states it; `Fuse(None)` asks for the
/// data-driven default `ν = max_k |pairs_k| / N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PoolRequest {
    Mean,
    Max,
    Fuse(Option<f64>),
}

impl PoolRequest {
    fn resolve(self, max_design_size: usize, n: usize) -> PoolMethod {
        match self {
            PoolRequest::Mean => PoolMethod::Mean,
            PoolRequest::Max => PoolMethod::Max,
            PoolRequest::Fuse(Some(nu)) => PoolMethod::Fuse(nu),
            PoolRequest::Fuse(None) => PoolMethod::Fuse(max_design_size as f64 / n as f64),
        }
    }
}

/// Everything produced by one adaptive run.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledResult {
    /// Raw per-kernel statistics, in collection order.
    pub raw_values: Vec<f64>,
    /// Per-kernel normalizers when normalization was requested.
    pub sigmas: Option<Vec<f64>>,
    /// What was pooled: raw values, or raw divided by sigma.
    pub normalized: Vec<f64>,
    /// The pooled statistic.
    pub pooled: f64,
    /// Method actually used, with the fuse parameter resolved.
    pub method: PoolMethod,
    /// Index of the largest (normalized) statistic; first on ties.
    pub argmax: usize,
    /// Whether any per-kernel value was clamped up to zero.
    pub clamped: bool,
}

/// Combine already-normalized statistics. The fuse reduction is a
/// max-shifted logsumexp, so arguments with `|ν·v| ≤ 700` cannot overflow.
pub fn pool(values: &[f64], method: PoolMethod) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyCollection);
    }
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFiniteStatistic(i));
        }
    }
    match method {
        PoolMethod::Mean => {
            Ok(reduce::merge_partials(&mut values.to_vec()) / values.len() as f64)
        }
        PoolMethod::Max => {
            let mut best = values[0];
            for &v in &values[1..] {
                if v > best {
                    best = v;
                }
            }
            Ok(best)
        }
        PoolMethod::Fuse(nu) => {
            if !(nu > 0.0) || !nu.is_finite() {
                return Err(Error::InvalidPooling(format!(
                    "fuse parameter must be positive and finite, got {nu}"
                )));
            }
            let mut max = values[0];
            for &v in &values[1..] {
                if v > max {
                    max = v;
                }
            }
            let mut shifted: Vec<f64> = values.iter().map(|&v| (nu * (v - max)).exp()).collect();
            let sum = reduce::merge_partials(&mut shifted);
            Ok(max + (sum / values.len() as f64).ln() / nu)
        }
    }
}

/// One design scan collecting both the statistic and the per-first-index
/// tallies needed by the normalizer.
struct DesignTallies {
    total: f64,
    row_sums: Vec<f64>,
    row_counts: Vec<usize>,
    size: usize,
}

fn scan_design<C: PairCore + ?Sized>(core: &C, design: &Design) -> Result<DesignTallies> {
    let n = core.len();
    let size = design.cardinality(n)?;
    let mut row_sums = vec![0.0; n];
    let mut row_counts = vec![0usize; n];
    let total = reduce::scan_pairs(
        design.pairs(n)?,
        |i, j| core.eval(i, j),
        |i, _j, h| {
            row_sums[i] += h;
            row_counts[i] += 1;
        },
    );
    Ok(DesignTallies { total, row_sums, row_counts, size })
}

fn sigma_from_tallies(t: &DesignTallies, kernel_index: usize) -> Result<f64> {
    // σ² = (4/|D¹|)·Σ_{i∈D¹} (mean over {j: (i,j)∈D})² − (2·S)², where D¹
    // is the set of first indices and S the design-averaged statistic.
    let mut squares: Vec<f64> = Vec::new();
    for i in 0..t.row_sums.len() {
        if t.row_counts[i] > 0 {
            let mean = t.row_sums[i] / t.row_counts[i] as f64;
            squares.push(mean * mean);
        }
    }
    let d1 = squares.len() as f64;
    let stat_term = 2.0 * t.total / t.size as f64;
    let radicand = 4.0 * reduce::merge_partials(&mut squares) / d1 - stat_term * stat_term;
    if radicand < -1e-12 {
        return Err(Error::InvalidPooling(format!(
            "variance estimate is negative beyond rounding: {radicand:e}"
        )));
    }
    // The difference of squares cancels catastrophically when the core is
    // (near-)constant, leaving rounding noise of order 1e-15 in the
    // radicand, so after the square root a true zero cannot be told apart
    // from ~1e-8. The zero test therefore runs on the variance estimate:
    // radicands within ±1e-12 of zero count as a zero normalizer, which is
    // below any positive floor.
    if radicand < SIGMA_FLOOR {
        return Err(Error::DegenerateSigma { kernel_index, sigma: 0.0, floor: SIGMA_FLOOR });
    }
    Ok(radicand.sqrt())
}

/// Standard-deviation normalizer of a design-averaged statistic, from one
/// enumeration of the design.
pub fn sigma<C: PairCore + ?Sized>(core: &C, design: &Design) -> Result<f64> {
    sigma_from_tallies(&scan_design(core, design)?, 0)
}

fn nonzero_sorted_distances(data: &SampleMatrix, r: f64) -> Result<Vec<f64>> {
    if !r.is_finite() || r < 1.0 {
        return Err(Error::InvalidDistanceOrder(r));
    }
    let n = data.n_rows();
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let d = distance(data.row(i), data.row(j), r);
            if d != 0.0 {
                out.push(d);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyDistanceSet);
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(out)
}

/// Linear-interpolation quantile on a sorted slice: the estimate at
/// fraction `p` sits at position `(len−1)·p`, interpolating neighbors.
fn interpolated_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 < sorted.len() {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[lo]
    }
}

/// Ten bandwidths linearly spanning the 5%–95% quantile range of the
/// sorted distance set; collapsed duplicates are removed.
fn quantile_grid(sorted: &[f64]) -> Vec<f64> {
    let q5 = interpolated_quantile(sorted, 0.05);
    let q95 = interpolated_quantile(sorted, 0.95);
    let mut grid: Vec<f64> = (0..10).map(|i| q5 + i as f64 * (q95 - q5) / 9.0).collect();
    grid.dedup();
    if grid.len() < 10 {
        log::warn!(
            "bandwidth grid collapsed to {} distinct value(s); distance quantiles are degenerate",
            grid.len()
        );
    }
    grid
}

fn spec_for(family: KernelFamily, lambda: f64, r: f64) -> Result<KernelSpec> {
    match family {
        KernelFamily::Gaussian => {
            if r != 2.0 {
                return Err(Error::InvalidPooling(
                    "this family is defined with the Euclidean distance (order 2)".into(),
                ));
            }
            KernelSpec::gaussian(lambda)
        }
        KernelFamily::InverseMultiquadric => {
            if r != 2.0 {
                return Err(Error::InvalidPooling(
                    "this family is defined with the Euclidean distance (order 2)".into(),
                ));
            }
            KernelSpec::inverse_multiquadric(lambda)
        }
        KernelFamily::Laplace => {
            if r != 1.0 {
                return Err(Error::InvalidPooling(
                    "this family is defined with the L1 distance (order 1)".into(),
                ));
            }
            KernelSpec::laplace(lambda)
        }
        KernelFamily::Matern(nu) => KernelSpec::matern_with_distance(nu, lambda, r),
        KernelFamily::Indicator => Err(Error::InvalidPooling(
            "the exact-equality kernel has no bandwidth to put in a collection".into(),
        )),
    }
}

/// Build a bandwidth collection for the listed families from the data's
/// nonzero pairwise distances at order `r`: ten bandwidths per family,
/// linearly spaced between the 5% and 95% distance quantiles.
pub fn bandwidth_collection(
    data: &SampleMatrix,
    r: f64,
    families: &[KernelFamily],
) -> Result<KernelCollection> {
    if families.is_empty() {
        return Err(Error::EmptyCollection);
    }
    let sorted = nonzero_sorted_distances(data, r)?;
    let grid = quantile_grid(&sorted);
    let mut kernels = Vec::with_capacity(families.len() * grid.len());
    for &family in families {
        for &lambda in &grid {
            kernels.push(spec_for(family, lambda, r)?);
        }
    }
    Ok(KernelCollection { kernels: CollectionKernels::Single(kernels), provenance: Provenance::AutoQuantile })
}

/// The parameter-free default: ten Gaussian bandwidths from Euclidean
/// distances plus ten Laplace bandwidths from L1 distances — twenty kernels.
pub fn default_collection(data: &SampleMatrix) -> Result<KernelCollection> {
    let gaussian = bandwidth_collection(data, 2.0, &[KernelFamily::Gaussian])?;
    let laplace = bandwidth_collection(data, 1.0, &[KernelFamily::Laplace])?;
    let mut kernels = gaussian.single()?.to_vec();
    kernels.extend_from_slice(laplace.single()?);
    Ok(KernelCollection { kernels: CollectionKernels::Single(kernels), provenance: Provenance::AutoQuantile })
}

/// Per-stream default collections combined into the full product grid:
/// every first-stream kernel paired with every second-stream kernel, in
/// first-stream-major order. Callers wanting fewer pairs truncate.
pub fn default_product_collection(
    x: &SampleMatrix,
    y: &SampleMatrix,
) -> Result<KernelCollection> {
    let kx = default_collection(x)?;
    let ky = default_collection(y)?;
    product_collection(&kx, &ky)
}

/// Cartesian product of two single-kernel collections.
pub fn product_collection(
    x: &KernelCollection,
    y: &KernelCollection,
) -> Result<KernelCollection> {
    let xs = x.single()?;
    let ys = y.single()?;
    let mut pairs = Vec::with_capacity(xs.len() * ys.len());
    for a in xs {
        for b in ys {
            pairs.push((a.clone(), b.clone()));
        }
    }
    let provenance = if x.provenance() == Provenance::AutoQuantile
        && y.provenance() == Provenance::AutoQuantile
    {
        Provenance::AutoQuantile
    } else {
        Provenance::Explicit
    };
    Ok(KernelCollection { kernels: CollectionKernels::Pairs(pairs), provenance })
}

/// The classic single-bandwidth heuristic: the lower median of the nonzero
/// pairwise distances at order `r`.
pub fn median_bandwidth(data: &SampleMatrix, r: f64) -> Result<f64> {
    let sorted = nonzero_sorted_distances(data, r)?;
    Ok(sorted[(sorted.len() - 1) / 2])
}

/// Per-kernel outcome of the normalize-then-pool pipeline, before pooling.
struct KernelOutcome {
    raw: f64,
    sigma: f64,
    design_size: usize,
    clamped: bool,
}

fn finish(
    outcomes: Vec<KernelOutcome>,
    normalize: bool,
    method: PoolRequest,
    n_rows: usize,
) -> Result<PooledResult> {
    let raw_values: Vec<f64> = outcomes.iter().map(|o| o.raw).collect();
    let sigmas: Option<Vec<f64>> =
        normalize.then(|| outcomes.iter().map(|o| o.sigma).collect());
    let normalized: Vec<f64> = outcomes.iter().map(|o| o.raw / o.sigma).collect();
    for (i, v) in normalized.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFiniteStatistic(i));
        }
    }
    let max_size = outcomes.iter().map(|o| o.design_size).max().unwrap_or(0);
    let resolved = method.resolve(max_size, n_rows);
    let pooled = pool(&normalized, resolved)?;
    let mut argmax = 0;
    for (i, v) in normalized.iter().enumerate() {
        if *v > normalized[argmax] {
            argmax = i;
        }
    }
    let clamped = outcomes.iter().any(|o| o.clamped);
    Ok(PooledResult { raw_values, sigmas, normalized, pooled, method: resolved, argmax, clamped })
}

fn normalization_unsupported(what: &str) -> Error {
    Error::UnsupportedRequest(format!(
        "normalization is defined for design-averaged one-sample statistics; {what}"
    ))
}

/// Adaptive two-sample statistic over a single-kernel collection.
///
/// Unnormalized runs dispatch to the closed-form paths per kernel;
/// normalized runs require a kind with a design-averaged one-sample form
/// (row-paired or an explicit design), since the normalizer is defined by
/// the design's row structure. Seeded designs reuse the same seed for every
/// kernel so the pooled comparison isolates the kernel effect.
pub fn adaptive_mmd(
    collection: &KernelCollection,
    kind: &StatKind,
    x: &SampleMatrix,
    y: &SampleMatrix,
    method: PoolRequest,
    normalize: bool,
) -> Result<PooledResult> {
    let kernels = collection.single()?;
    let mut outcomes = Vec::with_capacity(kernels.len());
    if normalize {
        let design = match kind {
            StatKind::PairedU => Design::Distinct,
            StatKind::Incomplete(d) => d.clone(),
            _ => return Err(normalization_unsupported(
                "use the row-paired or design-based two-sample forms",
            )),
        };
        for (idx, kernel) in kernels.iter().enumerate() {
            let core = MmdPairedCore::new(kernel, x, y)?;
            let tallies = scan_design(&core, &design)?;
            let sigma = sigma_from_tallies(&tallies, idx)?;
            outcomes.push(KernelOutcome {
                raw: tallies.total / tallies.size as f64,
                sigma,
                design_size: tallies.size,
                clamped: false,
            });
        }
        finish(outcomes, true, method, x.n_rows())
    } else {
        for kernel in kernels {
            let stat = estimators::mmd_statistic(kernel, kind, x, y)?;
            outcomes.push(KernelOutcome {
                raw: stat.value,
                sigma: 1.0,
                design_size: stat.design_size,
                clamped: stat.clamped,
            });
        }
        // Row-paired forms index n shared rows; the two-sample forms index
        // the pooled m + n observations.
        let n_rows = match kind {
            StatKind::V | StatKind::U => x.n_rows() + y.n_rows(),
            _ => x.n_rows(),
        };
        finish(outcomes, false, method, n_rows)
    }
}

/// Adaptive dependence statistic over a kernel-pair collection.
pub fn adaptive_hsic(
    collection: &KernelCollection,
    kind: &StatKind,
    z: &PairedSample,
    method: PoolRequest,
    normalize: bool,
) -> Result<PooledResult> {
    let pairs = collection.pairs()?;
    let mut outcomes = Vec::with_capacity(pairs.len());
    if normalize {
        let design = match kind {
            StatKind::SecondOrderV => Design::Full,
            StatKind::Incomplete(d) => d.clone(),
            _ => return Err(normalization_unsupported(
                "use the shifted second-order or design-based dependence forms",
            )),
        };
        for (idx, (kx, ky)) in pairs.iter().enumerate() {
            let core = HsicShiftedCore::new(kx, ky, z)?;
            let tallies = scan_design(&core, &design)?;
            let sigma = sigma_from_tallies(&tallies, idx)?;
            outcomes.push(KernelOutcome {
                raw: tallies.total / tallies.size as f64,
                sigma,
                design_size: tallies.size,
                clamped: false,
            });
        }
    } else {
        for (kx, ky) in pairs {
            let stat = estimators::hsic_statistic(kx, ky, z, kind)?;
            outcomes.push(KernelOutcome {
                raw: stat.value,
                sigma: 1.0,
                design_size: stat.design_size,
                clamped: stat.clamped,
            });
        }
    }
    finish(outcomes, normalize, method, z.len())
}

/// Adaptive goodness-of-fit statistic over a single-kernel collection.
pub fn adaptive_ksd(
    collection: &KernelCollection,
    kind: &StatKind,
    score: &ScoreModel,
    x: &SampleMatrix,
    method: PoolRequest,
    normalize: bool,
) -> Result<PooledResult> {
    let kernels = collection.single()?;
    let mut outcomes = Vec::with_capacity(kernels.len());
    if normalize {
        let design = match kind {
            StatKind::V => Design::Full,
            StatKind::U => Design::Distinct,
            StatKind::Incomplete(d) => d.clone(),
            _ => return Err(normalization_unsupported(
                "the goodness-of-fit statistic has no such form",
            )),
        };
        for (idx, kernel) in kernels.iter().enumerate() {
            let core = SteinPairCore::new(kernel, score, x)?;
            let tallies = scan_design(&core, &design)?;
            let sigma = sigma_from_tallies(&tallies, idx)?;
            outcomes.push(KernelOutcome {
                raw: tallies.total / tallies.size as f64,
                sigma,
                design_size: tallies.size,
                clamped: false,
            });
        }
    } else {
        for kernel in kernels {
            let stat = estimators::ksd_statistic(kernel, score, x, kind)?;
            outcomes.push(KernelOutcome {
                raw: stat.value,
                sigma: 1.0,
                design_size: stat.design_size,
                clamped: stat.clamped,
            });
        }
    }
    finish(outcomes, normalize, method, x.n_rows())
}
