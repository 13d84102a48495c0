//! Discrepancy statistics: quadratic-time closed forms for MMD, HSIC and
//! KSD, plus a generic path that averages a pair core over any index design.
//!
//! All sums flow through [`crate::reduce`], so every statistic is
//! bit-reproducible across runs and worker counts. V-form statistics are
//! mathematically nonnegative; tiny negative values produced by cancellation
//! (within `1e-12`) are clamped to zero and flagged. U-form statistics are
//! never clamped — an occasionally negative value is the price of
//! unbiasedness.

use rayon::prelude::*;

use crate::cores::{
    hsic_core_unchecked, mmd_core_unchecked, stein_kernel_precomputed, PairedSample, ScoreModel,
};
use crate::designs::Design;
use crate::error::{Error, Result};
use crate::kernels::{gram, GramMatrix, KernelSpec, SampleMatrix};
use crate::reduce;

/// Above this many rows, per-row kernel values are recomputed on the fly
/// instead of holding a full Gram matrix in memory. Both code paths fold
/// identical values in identical order, so they agree bit for bit.
pub const DEFAULT_GRAM_ROW_CAP: usize = 16384;

/// Cancellation tolerance for nonnegative statistics: values in
/// `[-1e-12, 0)` are reported as zero with the `clamped` flag set.
const NEGATIVE_CLAMP: f64 = 1e-12;

/// Which estimator shape to compute for a given discrepancy.
#[derive(Debug, Clone, PartialEq)]
pub enum StatKind {
    /// Biased complete statistic including diagonal terms.
    V,
    /// Unbiased complete statistic over distinct index pairs.
    U,
    /// One-sample unbiased statistic over row-paired two-sample cores
    /// (requires equal sample sizes; the row pairing matters).
    PairedU,
    /// Dependence statistic in shifted-quadruple form (even row count).
    SecondOrderV,
    /// Any subsampled design averaged over the matching pair core.
    Incomplete(Design),
}

/// A computed statistic together with bookkeeping about how it was formed.
#[derive(Debug, Clone, PartialEq)]
pub struct StatisticResult {
    /// The statistic value, after clamping where applicable.
    pub value: f64,
    /// Number of index pairs the defining sum ranges over.
    pub design_size: usize,
    /// Kernel or core evaluations actually performed (symmetry and
    /// unit-diagonal shortcuts make this smaller than `design_size` on the
    /// closed-form paths).
    pub evaluations: usize,
    /// True for plug-in (V-form) statistics, false for unbiased ones.
    pub biased: bool,
    /// True when a tiny negative value was rounded up to zero.
    pub clamped: bool,
}

fn clamp_nonneg(value: f64) -> (f64, bool) {
    if value < 0.0 && value >= -NEGATIVE_CLAMP {
        (0.0, true)
    } else {
        (value, false)
    }
}

/// A symmetric function of two sample indices; the unit every design-averaged
/// statistic is built from.
pub trait PairCore: Sync {
    /// Number of rows the indices range over.
    fn len(&self) -> usize;

    /// Core value at the (ordered) index pair.
    fn eval(&self, i: usize, j: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Two-sample kernel core evaluated on row-paired samples:
/// `k(x_i,x_j) − k(x_j,y_i) − k(x_i,y_j) + k(y_i,y_j)`.
pub struct MmdPairedCore<'a> {
    kernel: &'a KernelSpec,
    x: &'a SampleMatrix,
    y: &'a SampleMatrix,
}

impl<'a> MmdPairedCore<'a> {
    pub fn new(kernel: &'a KernelSpec, x: &'a SampleMatrix, y: &'a SampleMatrix) -> Result<Self> {
        if x.dim() != y.dim() {
            return Err(Error::DimensionMismatch { left: x.dim(), right: y.dim() });
        }
        if x.n_rows() != y.n_rows() {
            return Err(Error::RowCountMismatch { left: x.n_rows(), right: y.n_rows() });
        }
        Ok(MmdPairedCore { kernel, x, y })
    }
}

impl PairCore for MmdPairedCore<'_> {
    fn len(&self) -> usize {
        self.x.n_rows()
    }

    fn eval(&self, i: usize, j: usize) -> f64 {
        mmd_core_unchecked(self.kernel, self.x.row(i), self.x.row(j), self.y.row(i), self.y.row(j))
    }
}

/// Dependence core over a jointly observed sample, completing each index
/// pair to a quadruple with the half-length shift `i ↦ (i + N/2) mod N`.
/// Applying the shift twice returns the original index, so the quadruples
/// tile the sample without replacement.
pub struct HsicShiftedCore<'a> {
    kx: &'a KernelSpec,
    ky: &'a KernelSpec,
    z: &'a PairedSample,
    half: usize,
}

impl<'a> HsicShiftedCore<'a> {
    pub fn new(kx: &'a KernelSpec, ky: &'a KernelSpec, z: &'a PairedSample) -> Result<Self> {
        let n = z.len();
        if n % 2 != 0 {
            return Err(Error::OddSampleSize(n));
        }
        Ok(HsicShiftedCore { kx, ky, z, half: n / 2 })
    }

    fn point(&self, i: usize) -> (&[f64], &[f64]) {
        (self.z.x().row(i), self.z.y().row(i))
    }
}

impl PairCore for HsicShiftedCore<'_> {
    fn len(&self) -> usize {
        self.z.len()
    }

    fn eval(&self, i: usize, j: usize) -> f64 {
        let n = self.z.len();
        let ip = (i + self.half) % n;
        let jp = (j + self.half) % n;
        hsic_core_unchecked(
            self.kx,
            self.ky,
            self.point(i),
            self.point(j),
            self.point(ip),
            self.point(jp),
        )
    }
}

/// Goodness-of-fit core `h_P(x_i, x_j)` with all score vectors computed
/// once up front.
pub struct SteinPairCore<'a> {
    kernel: &'a KernelSpec,
    x: &'a SampleMatrix,
    scores: Vec<f64>,
}

impl<'a> SteinPairCore<'a> {
    pub fn new(kernel: &'a KernelSpec, score: &ScoreModel, x: &'a SampleMatrix) -> Result<Self> {
        if !kernel.supports_derivatives() {
            return Err(Error::UnsupportedDerivative { family: kernel.family().name() });
        }
        if score.dim() != x.dim() {
            return Err(Error::ScoreDimensionMismatch { score: score.dim(), data: x.dim() });
        }
        let d = x.dim();
        let mut scores = vec![0.0; x.n_rows() * d];
        for i in 0..x.n_rows() {
            score.score_into(x.row(i), &mut scores[i * d..(i + 1) * d]).map_err(|e| match e {
                // Re-key the coordinate to the flattened sample position.
                Error::NonFiniteScore(col) => Error::NonFiniteScore(i * d + col),
                other => other,
            })?;
        }
        Ok(SteinPairCore { kernel, x, scores })
    }

    fn score_row(&self, i: usize) -> &[f64] {
        let d = self.x.dim();
        &self.scores[i * d..(i + 1) * d]
    }
}

impl PairCore for SteinPairCore<'_> {
    fn len(&self) -> usize {
        self.x.n_rows()
    }

    fn eval(&self, i: usize, j: usize) -> f64 {
        stein_kernel_precomputed(
            self.kernel,
            self.score_row(i),
            self.score_row(j),
            self.x.row(i),
            self.x.row(j),
        )
    }
}

/// Average a pair core over the index pairs of a design, in enumeration
/// order: `(1/|pairs|)·Σ h(i, j)`.
///
/// Every evaluation is counted once; seeded random designs make the value a
/// pure function of `(data, design, seed)`.
pub fn generic_statistic<C: PairCore + ?Sized>(core: &C, design: &Design) -> Result<StatisticResult> {
    let n = core.len();
    let size = design.cardinality(n)?;
    let pairs = design.pairs(n)?;
    let total = reduce::scan_pairs(pairs, |i, j| core.eval(i, j), |_, _, _| {});
    Ok(StatisticResult {
        value: total / size as f64,
        design_size: size,
        evaluations: size,
        biased: matches!(design, Design::Full),
        clamped: false,
    })
}

/// `Σ_{i<j} k(row_i, row_j)` over one sample. The diagonal is not
/// evaluated: every family in this crate has `k(x, x) = 1` exactly, so
/// callers add it in closed form.
fn sym_offdiag_sum(kernel: &KernelSpec, data: &SampleMatrix) -> f64 {
    let n = data.n_rows();
    reduce::sum_rows(n, |i| {
        let ri = data.row(i);
        let mut acc = 0.0;
        for j in i + 1..n {
            acc += kernel.eval_unchecked(ri, data.row(j));
        }
        acc
    })
}

/// Full rectangular sum `Σ_i Σ_j k(x_i, y_j)`.
fn rect_sum(kernel: &KernelSpec, x: &SampleMatrix, y: &SampleMatrix) -> f64 {
    let n = y.n_rows();
    reduce::sum_rows(x.n_rows(), |i| {
        let ri = x.row(i);
        let mut acc = 0.0;
        for j in 0..n {
            acc += kernel.eval_unchecked(ri, y.row(j));
        }
        acc
    })
}

fn check_two_sample(x: &SampleMatrix, y: &SampleMatrix) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { left: x.dim(), right: y.dim() });
    }
    Ok(())
}

/// Plug-in squared MMD between two samples:
/// `S_xx/m² − 2·S_xy/(mn) + S_yy/n²` over all index pairs including
/// diagonals. Nonnegative up to rounding; clamped within `1e-12`.
pub fn mmd_v(kernel: &KernelSpec, x: &SampleMatrix, y: &SampleMatrix) -> Result<f64> {
    Ok(mmd_v_stat(kernel, x, y)?.value)
}

pub fn mmd_v_stat(
    kernel: &KernelSpec,
    x: &SampleMatrix,
    y: &SampleMatrix,
) -> Result<StatisticResult> {
    check_two_sample(x, y)?;
    let (m, n) = (x.n_rows(), y.n_rows());
    let (mf, nf) = (m as f64, n as f64);
    let sxx = mf + 2.0 * sym_offdiag_sum(kernel, x);
    let syy = nf + 2.0 * sym_offdiag_sum(kernel, y);
    let sxy = rect_sum(kernel, x, y);
    let (value, clamped) = clamp_nonneg(sxx / (mf * mf) - 2.0 * sxy / (mf * nf) + syy / (nf * nf));
    Ok(StatisticResult {
        value,
        design_size: m * m + n * n + m * n,
        evaluations: m * (m - 1) / 2 + n * (n - 1) / 2 + m * n,
        biased: true,
        clamped,
    })
}

/// Minimum-variance unbiased squared-MMD estimator: within-sample sums skip
/// the diagonal and divide by `m(m−1)` and `n(n−1)`. May be negative.
pub fn mmd_u(kernel: &KernelSpec, x: &SampleMatrix, y: &SampleMatrix) -> Result<f64> {
    Ok(mmd_u_stat(kernel, x, y)?.value)
}

pub fn mmd_u_stat(
    kernel: &KernelSpec,
    x: &SampleMatrix,
    y: &SampleMatrix,
) -> Result<StatisticResult> {
    check_two_sample(x, y)?;
    let (m, n) = (x.n_rows(), y.n_rows());
    if m < 2 {
        return Err(Error::SampleTooSmall { need: 2, got: m });
    }
    if n < 2 {
        return Err(Error::SampleTooSmall { need: 2, got: n });
    }
    let (mf, nf) = (m as f64, n as f64);
    let sxx = 2.0 * sym_offdiag_sum(kernel, x);
    let syy = 2.0 * sym_offdiag_sum(kernel, y);
    let sxy = rect_sum(kernel, x, y);
    let value = sxx / (mf * (mf - 1.0)) - 2.0 * sxy / (mf * nf) + syy / (nf * (nf - 1.0));
    Ok(StatisticResult {
        value,
        design_size: m * (m - 1) + n * (n - 1) + m * n,
        evaluations: m * (m - 1) / 2 + n * (n - 1) / 2 + m * n,
        biased: false,
        clamped: false,
    })
}

/// One-sample unbiased squared-MMD over row-paired samples of equal size:
/// `(1/(n(n−1)))·Σ_{i≠j} h(x_i, x_j; y_i, y_j)`. Unlike [`mmd_u`] this is
/// sensitive to how the rows of `x` and `y` are paired.
pub fn mmd_u_paired(kernel: &KernelSpec, x: &SampleMatrix, y: &SampleMatrix) -> Result<f64> {
    let core = MmdPairedCore::new(kernel, x, y)?;
    Ok(generic_statistic(&core, &Design::Distinct)?.value)
}

enum RowSource<'a> {
    Gram(&'a GramMatrix),
    Stream { kernel: &'a KernelSpec, data: &'a SampleMatrix },
}

impl RowSource<'_> {
    fn fill(&self, i: usize, buf: &mut [f64]) {
        match self {
            RowSource::Gram(g) => buf.copy_from_slice(g.row(i)),
            RowSource::Stream { kernel, data } => {
                let ri = data.row(i);
                for (j, slot) in buf.iter_mut().enumerate() {
                    *slot = kernel.eval_unchecked(ri, data.row(j));
                }
            }
        }
    }
}

/// Deterministic parallel map over row indices; output order is the index
/// order regardless of scheduling.
fn map_rows<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..n).into_par_iter().map(f).collect()
}

/// Plug-in dependence statistic in the doubly-centered trace form:
/// `(1/N²)·Σ_{ij} KX_ij·(KY_ij − r_i − r_j + g)` where `r` holds the row
/// means of `KY` and `g` its grand mean. Clamped like [`mmd_v`].
pub fn hsic_v(kx: &KernelSpec, ky: &KernelSpec, z: &PairedSample) -> Result<f64> {
    Ok(hsic_v_stat(kx, ky, z, DEFAULT_GRAM_ROW_CAP)?.value)
}

pub fn hsic_v_stat(
    kx: &KernelSpec,
    ky: &KernelSpec,
    z: &PairedSample,
    gram_row_cap: usize,
) -> Result<StatisticResult> {
    let n = z.len();
    let nf = n as f64;
    let ky_gram = if n <= gram_row_cap { Some(gram(ky, z.y(), z.y())?) } else { None };
    let ky_rows = match &ky_gram {
        Some(g) => RowSource::Gram(g),
        None => RowSource::Stream { kernel: ky, data: z.y() },
    };

    let row_sums = map_rows(n, |i| {
        let mut buf = vec![0.0; n];
        ky_rows.fill(i, &mut buf);
        let mut acc = 0.0;
        for &v in &buf {
            acc += v;
        }
        acc
    });
    let grand = reduce::merge_partials(&mut row_sums.clone());
    let r: Vec<f64> = row_sums.iter().map(|s| s / nf).collect();
    let g = grand / (nf * nf);

    let total = reduce::sum_rows(n, |i| {
        let mut kx_buf = vec![0.0; n];
        let ri_x = z.x().row(i);
        for (j, slot) in kx_buf.iter_mut().enumerate() {
            *slot = kx.eval_unchecked(ri_x, z.x().row(j));
        }
        let mut ky_buf = vec![0.0; n];
        ky_rows.fill(i, &mut ky_buf);
        let ri = r[i];
        let mut acc = 0.0;
        for j in 0..n {
            acc += kx_buf[j] * (ky_buf[j] - ri - r[j] + g);
        }
        acc
    });
    let (value, clamped) = clamp_nonneg(total / (nf * nf));
    let evaluations = match ky_gram {
        Some(_) => n * (n + 1) / 2 + n * n,
        None => 3 * n * n,
    };
    Ok(StatisticResult { value, design_size: n * n, evaluations, biased: true, clamped })
}

/// Unbiased dependence statistic in the quadratic-time closed form
/// `(t₁ + S_x·S_y/((N−1)(N−2)) − 2·t₃/(N−2)) / (N(N−3))`, built from the
/// diagonal-deleted Gram matrices: `t₁ = Σ_{i≠j} KX_ij·KY_ij`,
/// `S_x = Σ_{i≠j} KX_ij`, and `t₃ = Σ_i (row sum of KX)·(row sum of KY)`.
/// Needs at least four rows; may be negative.
pub fn hsic_u(kx: &KernelSpec, ky: &KernelSpec, z: &PairedSample) -> Result<f64> {
    Ok(hsic_u_stat(kx, ky, z)?.value)
}

pub fn hsic_u_stat(kx: &KernelSpec, ky: &KernelSpec, z: &PairedSample) -> Result<StatisticResult> {
    let n = z.len();
    if n < 4 {
        return Err(Error::SampleTooSmall { need: 4, got: n });
    }
    let nf = n as f64;
    let rows = map_rows(n, |i| {
        let xi = z.x().row(i);
        let yi = z.y().row(i);
        let mut sx = 0.0;
        let mut sy = 0.0;
        let mut prod = 0.0;
        for j in 0..n {
            if j == i {
                continue;
            }
            let a = kx.eval_unchecked(xi, z.x().row(j));
            let b = ky.eval_unchecked(yi, z.y().row(j));
            sx += a;
            sy += b;
            prod += a * b;
        }
        (sx, sy, prod)
    });
    let t1 = reduce::merge_partials(&mut rows.iter().map(|r| r.2).collect());
    let sx_total = reduce::merge_partials(&mut rows.iter().map(|r| r.0).collect());
    let sy_total = reduce::merge_partials(&mut rows.iter().map(|r| r.1).collect());
    let t3 = reduce::merge_partials(&mut rows.iter().map(|r| r.0 * r.1).collect());
    let value = (t1 + sx_total * sy_total / ((nf - 1.0) * (nf - 2.0)) - 2.0 * t3 / (nf - 2.0))
        / (nf * (nf - 3.0));
    Ok(StatisticResult {
        value,
        design_size: n * (n - 1),
        evaluations: 2 * n * n,
        biased: false,
        clamped: false,
    })
}

/// Dependence statistic as a plain double sum of the four-point core, with
/// the second pair of arguments supplied by the half-length index shift.
/// Numerically it can stray slightly negative, and is reported as computed.
pub fn hsic_v_second_order(kx: &KernelSpec, ky: &KernelSpec, z: &PairedSample) -> Result<f64> {
    let core = HsicShiftedCore::new(kx, ky, z)?;
    Ok(generic_statistic(&core, &Design::Full)?.value)
}

/// Plug-in goodness-of-fit statistic `(1/n²)·Σ_{ij} h_P(x_i, x_j)`.
/// The diagonal terms are genuine evaluations here (`h_P(x, x)` varies with
/// `x`), unlike the unit kernel diagonals in the MMD paths.
pub fn ksd_v(kernel: &KernelSpec, score: &ScoreModel, x: &SampleMatrix) -> Result<f64> {
    Ok(ksd_v_stat(kernel, score, x)?.value)
}

pub fn ksd_v_stat(
    kernel: &KernelSpec,
    score: &ScoreModel,
    x: &SampleMatrix,
) -> Result<StatisticResult> {
    let core = SteinPairCore::new(kernel, score, x)?;
    let n = core.len();
    let nf = n as f64;
    let diag = reduce::sum_indexed(n, |i| core.eval(i, i));
    let off = stein_upper_sum(&core);
    let (value, clamped) = clamp_nonneg((diag + 2.0 * off) / (nf * nf));
    Ok(StatisticResult {
        value,
        design_size: n * n,
        evaluations: n + n * (n - 1) / 2,
        biased: true,
        clamped,
    })
}

/// Unbiased goodness-of-fit statistic `(1/(n(n−1)))·Σ_{i≠j} h_P(x_i, x_j)`.
pub fn ksd_u(kernel: &KernelSpec, score: &ScoreModel, x: &SampleMatrix) -> Result<f64> {
    Ok(ksd_u_stat(kernel, score, x)?.value)
}

pub fn ksd_u_stat(
    kernel: &KernelSpec,
    score: &ScoreModel,
    x: &SampleMatrix,
) -> Result<StatisticResult> {
    let core = SteinPairCore::new(kernel, score, x)?;
    let n = core.len();
    if n < 2 {
        return Err(Error::SampleTooSmall { need: 2, got: n });
    }
    let nf = n as f64;
    let off = stein_upper_sum(&core);
    Ok(StatisticResult {
        value: 2.0 * off / (nf * (nf - 1.0)),
        design_size: n * (n - 1),
        evaluations: n * (n - 1) / 2,
        biased: false,
        clamped: false,
    })
}

/// `Σ_{i<j} h_P(x_i, x_j)`; the core is exactly symmetric, so each pair is
/// evaluated once.
fn stein_upper_sum(core: &SteinPairCore<'_>) -> f64 {
    let n = core.len();
    reduce::sum_rows(n, |i| {
        let mut acc = 0.0;
        for j in i + 1..n {
            acc += core.eval(i, j);
        }
        acc
    })
}

/// Two-sample statistic dispatch over every supported estimator shape.
pub fn mmd_statistic(
    kernel: &KernelSpec,
    kind: &StatKind,
    x: &SampleMatrix,
    y: &SampleMatrix,
) -> Result<StatisticResult> {
    match kind {
        StatKind::V => mmd_v_stat(kernel, x, y),
        StatKind::U => mmd_u_stat(kernel, x, y),
        StatKind::PairedU => {
            let core = MmdPairedCore::new(kernel, x, y)?;
            generic_statistic(&core, &Design::Distinct)
        }
        StatKind::Incomplete(design) => {
            let core = MmdPairedCore::new(kernel, x, y)?;
            generic_statistic(&core, design)
        }
        StatKind::SecondOrderV => Err(Error::UnsupportedRequest(
            "the shifted second-order form is defined for the dependence statistic only".into(),
        )),
    }
}

/// Dependence statistic dispatch.
pub fn hsic_statistic(
    kx: &KernelSpec,
    ky: &KernelSpec,
    z: &PairedSample,
    kind: &StatKind,
) -> Result<StatisticResult> {
    match kind {
        StatKind::V => hsic_v_stat(kx, ky, z, DEFAULT_GRAM_ROW_CAP),
        StatKind::U => hsic_u_stat(kx, ky, z),
        StatKind::SecondOrderV => {
            let core = HsicShiftedCore::new(kx, ky, z)?;
            generic_statistic(&core, &Design::Full)
        }
        StatKind::Incomplete(design) => {
            let core = HsicShiftedCore::new(kx, ky, z)?;
            generic_statistic(&core, design)
        }
        StatKind::PairedU => Err(Error::UnsupportedRequest(
            "row-paired averaging applies to the two-sample statistic only".into(),
        )),
    }
}

/// Goodness-of-fit statistic dispatch.
pub fn ksd_statistic(
    kernel: &KernelSpec,
    score: &ScoreModel,
    x: &SampleMatrix,
    kind: &StatKind,
) -> Result<StatisticResult> {
    match kind {
        StatKind::V => ksd_v_stat(kernel, score, x),
        StatKind::U => ksd_u_stat(kernel, score, x),
        StatKind::Incomplete(design) => {
            let core = SteinPairCore::new(kernel, score, x)?;
            generic_statistic(&core, design)
        }
        StatKind::PairedU | StatKind::SecondOrderV => Err(Error::UnsupportedRequest(
            "only complete and subsampled designs are defined for the goodness-of-fit statistic"
                .into(),
        )),
    }
}
