//! The two-argument core functions every statistic averages, plus score
//! models for goodness-of-fit testing.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, SampleMatrix};

/// Score function s_P(x) = ∇ log p(x) of a target density, accessed without
/// any normalization constant.
#[derive(Clone)]
pub enum ScoreModel {
    /// N(μ, σ²·I): s(x) = −(x − μ)/σ².
    IsotropicGaussian { mean: Vec<f64>, variance: f64 },
    /// Independent coordinates with per-coordinate variances.
    DiagonalGaussian { mean: Vec<f64>, variances: Vec<f64> },
    /// Arbitrary user-supplied score callback writing s(x) into the output
    /// slice. Must be stateless (safe for concurrent calls).
    Custom {
        dim: usize,
        eval: Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>,
    },
}

impl std::fmt::Debug for ScoreModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScoreModel::IsotropicGaussian { mean, variance } => f
                .debug_struct("IsotropicGaussian")
                .field("mean", mean)
                .field("variance", variance)
                .finish(),
            ScoreModel::DiagonalGaussian { mean, variances } => f
                .debug_struct("DiagonalGaussian")
                .field("mean", mean)
                .field("variances", variances)
                .finish(),
            ScoreModel::Custom { dim, .. } => {
                f.debug_struct("Custom").field("dim", dim).finish_non_exhaustive()
            }
        }
    }
}

impl ScoreModel {
    pub fn isotropic_gaussian(mean: Vec<f64>, variance: f64) -> Result<Self> {
        if mean.is_empty() {
            return Err(Error::EmptyDimension);
        }
        if let Some(col) = mean.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { row: 0, col });
        }
        if !variance.is_finite() || variance <= 0.0 {
            return Err(Error::InvalidVariance(variance));
        }
        Ok(ScoreModel::IsotropicGaussian { mean, variance })
    }

    pub fn diagonal_gaussian(mean: Vec<f64>, variances: Vec<f64>) -> Result<Self> {
        if mean.is_empty() {
            return Err(Error::EmptyDimension);
        }
        if mean.len() != variances.len() {
            return Err(Error::DimensionMismatch { left: mean.len(), right: variances.len() });
        }
        if let Some(col) = mean.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { row: 0, col });
        }
        if let Some(&bad) = variances.iter().find(|v| !v.is_finite() || **v <= 0.0) {
            return Err(Error::InvalidVariance(bad));
        }
        Ok(ScoreModel::DiagonalGaussian { mean, variances })
    }

    pub fn custom<F>(dim: usize, eval: F) -> Result<Self>
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        if dim == 0 {
            return Err(Error::EmptyDimension);
        }
        Ok(ScoreModel::Custom { dim, eval: Arc::new(eval) })
    }

    pub fn dim(&self) -> usize {
        match self {
            ScoreModel::IsotropicGaussian { mean, .. } => mean.len(),
            ScoreModel::DiagonalGaussian { mean, .. } => mean.len(),
            ScoreModel::Custom { dim, .. } => *dim,
        }
    }

    /// Write s_P(x) into `out`. The error index on a non-finite score is the
    /// offending coordinate.
    pub fn score_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::ScoreDimensionMismatch { score: self.dim(), data: x.len() });
        }
        debug_assert_eq!(out.len(), self.dim());
        match self {
            ScoreModel::IsotropicGaussian { mean, variance } => {
                for i in 0..x.len() {
                    out[i] = -(x[i] - mean[i]) / variance;
                }
            }
            ScoreModel::DiagonalGaussian { mean, variances } => {
                for i in 0..x.len() {
                    out[i] = -(x[i] - mean[i]) / variances[i];
                }
            }
            ScoreModel::Custom { eval, .. } => eval(x, out),
        }
        if let Some(col) = out.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteScore(col));
        }
        Ok(())
    }

    pub fn score(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.score_into(x, &mut out)?;
        Ok(out)
    }
}

/// Jointly observed sample Z_i = (X_i, Y_i) with equal row counts.
#[derive(Debug, Clone)]
pub struct PairedSample {
    x: SampleMatrix,
    y: SampleMatrix,
}

impl PairedSample {
    pub fn new(x: SampleMatrix, y: SampleMatrix) -> Result<Self> {
        if x.n_rows() != y.n_rows() {
            return Err(Error::RowCountMismatch { left: x.n_rows(), right: y.n_rows() });
        }
        Ok(PairedSample { x, y })
    }

    pub fn x(&self) -> &SampleMatrix {
        &self.x
    }

    pub fn y(&self) -> &SampleMatrix {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.n_rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Two-sample core
/// `h(x, x'; y, y') = k(x,x') − k(x',y) − k(x,y') + k(y,y')`.
pub fn mmd_core(
    kernel: &KernelSpec,
    x: &[f64],
    xp: &[f64],
    y: &[f64],
    yp: &[f64],
) -> Result<f64> {
    Ok(kernel.evaluate(x, xp)? - kernel.evaluate(xp, y)? - kernel.evaluate(x, yp)?
        + kernel.evaluate(y, yp)?)
}

pub(crate) fn mmd_core_unchecked(
    kernel: &KernelSpec,
    x: &[f64],
    xp: &[f64],
    y: &[f64],
    yp: &[f64],
) -> f64 {
    kernel.eval_unchecked(x, xp) - kernel.eval_unchecked(xp, y) - kernel.eval_unchecked(x, yp)
        + kernel.eval_unchecked(y, yp)
}

/// Independence core over pairs z = (x-part, y-part):
/// `(1/4)·h_kx(X_i,X_j;X_r,X_s)·h_ky(Y_i,Y_j;Y_r,Y_s)` — the form symmetric
/// in both marginal kernels.
pub fn hsic_core(
    kx: &KernelSpec,
    ky: &KernelSpec,
    zi: (&[f64], &[f64]),
    zj: (&[f64], &[f64]),
    zr: (&[f64], &[f64]),
    zs: (&[f64], &[f64]),
) -> Result<f64> {
    let hx = mmd_core(kx, zi.0, zj.0, zr.0, zs.0)?;
    let hy = mmd_core(ky, zi.1, zj.1, zr.1, zs.1)?;
    Ok(0.25 * hx * hy)
}

pub(crate) fn hsic_core_unchecked(
    kx: &KernelSpec,
    ky: &KernelSpec,
    zi: (&[f64], &[f64]),
    zj: (&[f64], &[f64]),
    zr: (&[f64], &[f64]),
    zs: (&[f64], &[f64]),
) -> f64 {
    0.25 * mmd_core_unchecked(kx, zi.0, zj.0, zr.0, zs.0)
        * mmd_core_unchecked(ky, zi.1, zj.1, zr.1, zs.1)
}

/// Langevin Stein kernel
/// `h_P(x,y) = s(x)ᵀs(y)·k(x,y) + s(x)ᵀ∇_y k + s(y)ᵀ∇_x k + Σ_i ∂²k/∂x_i∂y_i`.
///
/// For radial kernels `∇_y k = −∇_x k`, so the middle terms collapse to
/// `(s(y) − s(x))ᵀ∇_x k`.
pub fn stein_kernel(
    kernel: &KernelSpec,
    score: &ScoreModel,
    x: &[f64],
    y: &[f64],
) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { left: x.len(), right: y.len() });
    }
    if score.dim() != x.len() {
        return Err(Error::ScoreDimensionMismatch { score: score.dim(), data: x.len() });
    }
    if !kernel.supports_derivatives() {
        return Err(Error::UnsupportedDerivative { family: kernel.family().name() });
    }
    crate::kernels::check_vectors(x, y)?;
    let sx = score.score(x)?;
    let sy = score.score(y)?;
    Ok(stein_kernel_precomputed(kernel, &sx, &sy, x, y))
}

/// Stein kernel with precomputed scores; used by the estimators after
/// validating once per sample. Allocation-free: the gradient term collapses
/// to `grad_scale · Σ_i (s_y[i] − s_x[i])(x[i] − y[i])` because the gradient
/// of a radial kernel is a scalar multiple of the difference vector.
pub(crate) fn stein_kernel_precomputed(
    kernel: &KernelSpec,
    sx: &[f64],
    sy: &[f64],
    x: &[f64],
    y: &[f64],
) -> f64 {
    let k = kernel.eval_unchecked(x, y);
    let g = kernel.grad_scale(x, y);
    let trace = kernel.cross_partial_trace_unchecked(x, y);
    let mut dot_ss = 0.0;
    let mut dot_diff = 0.0;
    for i in 0..sx.len() {
        dot_ss += sx[i] * sy[i];
        dot_diff += (sy[i] - sx[i]) * (x[i] - y[i]);
    }
    dot_ss * k + g * dot_diff + trace
}
