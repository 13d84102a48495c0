//! Radial kernel families, Gram matrices, and kernel derivatives.
//!
//! All families are radial: `k_λ(x, y) = ψ(‖x − y‖_r / λ)` with `ψ(0) = 1`,
//! so every kernel satisfies `k(x, x) = 1`, tends to 0 as λ → 0 (for x ≠ y),
//! tends to 1 as λ → ∞, and obeys the rescaling identity
//! `k_λ(x, y) = k_1(x/λ, y/λ)`.

use crate::error::{Error, Result};
use rayon::prelude::*;

/// Row-major `n × d` matrix of finite samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    data: Vec<f64>,
    rows: usize,
    dim: usize,
}

impl SampleMatrix {
    /// Build from a flat row-major buffer. `data.len()` must be a nonzero
    /// multiple of `dim` and every entry must be finite.
    pub fn new(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyDimension);
        }
        if data.is_empty() {
            return Err(Error::EmptySample);
        }
        if data.len() % dim != 0 {
            return Err(Error::RaggedData { len: data.len(), dim });
        }
        for (idx, v) in data.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { row: idx / dim, col: idx % dim });
            }
        }
        let rows = data.len() / dim;
        Ok(SampleMatrix { data, rows, dim })
    }

    /// Build from per-row slices; all rows must share one nonzero length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptySample);
        }
        let dim = rows[0].len();
        if dim == 0 {
            return Err(Error::EmptyDimension);
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::RaggedData { len: row.len(), dim });
            }
            data.extend_from_slice(row);
        }
        Self::new(data, dim)
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Stack `self` on top of `other` (used to form the joint sample Z).
    pub fn vstack(&self, other: &SampleMatrix) -> Result<SampleMatrix> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { left: self.dim, right: other.dim });
        }
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&other.data);
        Ok(SampleMatrix { data, rows: self.rows + other.rows, dim: self.dim })
    }
}

/// Matérn smoothness orders with closed-form profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MaternSmoothness {
    Half,
    ThreeHalves,
    FiveHalves,
    SevenHalves,
    NineHalves,
}

impl MaternSmoothness {
    pub fn nu(self) -> f64 {
        match self {
            MaternSmoothness::Half => 0.5,
            MaternSmoothness::ThreeHalves => 1.5,
            MaternSmoothness::FiveHalves => 2.5,
            MaternSmoothness::SevenHalves => 3.5,
            MaternSmoothness::NineHalves => 4.5,
        }
    }

    /// Scale constant c with t = c·u, i.e. √(2ν).
    fn scale(self) -> f64 {
        match self {
            MaternSmoothness::Half => 1.0,
            MaternSmoothness::ThreeHalves => 3f64.sqrt(),
            MaternSmoothness::FiveHalves => 5f64.sqrt(),
            MaternSmoothness::SevenHalves => 7f64.sqrt(),
            MaternSmoothness::NineHalves => 3.0,
        }
    }

    /// Profile ψ(u) evaluated through t = c·u.
    fn profile(self, u: f64) -> f64 {
        let t = self.scale() * u;
        let e = (-t).exp();
        match self {
            MaternSmoothness::Half => e,
            MaternSmoothness::ThreeHalves => (1.0 + t) * e,
            MaternSmoothness::FiveHalves => (1.0 + t + t * t / 3.0) * e,
            MaternSmoothness::SevenHalves => {
                (1.0 + t + 2.0 * t * t / 5.0 + t * t * t / 15.0) * e
            }
            MaternSmoothness::NineHalves => {
                let t2 = t * t;
                (1.0 + t + 3.0 * t2 / 7.0 + 2.0 * t2 * t / 21.0 + t2 * t2 / 105.0) * e
            }
        }
    }
}

/// Kernel family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    Gaussian,
    Laplace,
    InverseMultiquadric,
    Matern(MaternSmoothness),
    Indicator,
}

impl KernelFamily {
    /// Stable lowercase name (also the CLI token prefix).
    pub fn name(self) -> String {
        match self {
            KernelFamily::Gaussian => "gaussian".to_string(),
            KernelFamily::Laplace => "laplace".to_string(),
            KernelFamily::InverseMultiquadric => "imq".to_string(),
            KernelFamily::Matern(nu) => format!("matern{}", nu.nu()),
            KernelFamily::Indicator => "indicator".to_string(),
        }
    }
}

/// A fully specified kernel: family, bandwidth λ > 0, and the distance
/// order r of the underlying L^r norm.
///
/// Gaussian is pinned to squared L², Laplace to L¹, and the inverse
/// multiquadric to L²; only Matérn accepts a configurable r ≥ 1. The
/// indicator kernel compares coordinates for exact (bitwise) equality and
/// ignores bandwidth and distance order entirely.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    bandwidth: f64,
    distance_order: f64,
}

fn check_bandwidth(lambda: f64) -> Result<f64> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::InvalidBandwidth(lambda));
    }
    Ok(lambda)
}

impl KernelSpec {
    pub fn gaussian(lambda: f64) -> Result<Self> {
        Ok(KernelSpec {
            family: KernelFamily::Gaussian,
            bandwidth: check_bandwidth(lambda)?,
            distance_order: 2.0,
        })
    }

    pub fn laplace(lambda: f64) -> Result<Self> {
        Ok(KernelSpec {
            family: KernelFamily::Laplace,
            bandwidth: check_bandwidth(lambda)?,
            distance_order: 1.0,
        })
    }

    pub fn inverse_multiquadric(lambda: f64) -> Result<Self> {
        Ok(KernelSpec {
            family: KernelFamily::InverseMultiquadric,
            bandwidth: check_bandwidth(lambda)?,
            distance_order: 2.0,
        })
    }

    pub fn matern(nu: MaternSmoothness, lambda: f64) -> Result<Self> {
        Self::matern_with_distance(nu, lambda, 2.0)
    }

    pub fn matern_with_distance(nu: MaternSmoothness, lambda: f64, r: f64) -> Result<Self> {
        if !r.is_finite() || r < 1.0 {
            return Err(Error::InvalidDistanceOrder(r));
        }
        Ok(KernelSpec {
            family: KernelFamily::Matern(nu),
            bandwidth: check_bandwidth(lambda)?,
            distance_order: r,
        })
    }

    pub fn indicator() -> Self {
        KernelSpec { family: KernelFamily::Indicator, bandwidth: 1.0, distance_order: 2.0 }
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn distance_order(&self) -> f64 {
        self.distance_order
    }

    /// Same family and distance order at a different bandwidth.
    pub fn with_bandwidth(&self, lambda: f64) -> Result<KernelSpec> {
        if self.family == KernelFamily::Indicator {
            return Ok(*self);
        }
        Ok(KernelSpec {
            family: self.family,
            bandwidth: check_bandwidth(lambda)?,
            distance_order: self.distance_order,
        })
    }

    /// Whether analytic first and mixed second derivatives are available.
    ///
    /// Only families smooth everywhere qualify: Gaussian, inverse
    /// multiquadric, and Matérn with ν ≥ 1.5 under the Euclidean norm.
    pub fn supports_derivatives(&self) -> bool {
        match self.family {
            KernelFamily::Gaussian | KernelFamily::InverseMultiquadric => true,
            KernelFamily::Matern(MaternSmoothness::Half) => false,
            KernelFamily::Matern(_) => self.distance_order == 2.0,
            KernelFamily::Laplace | KernelFamily::Indicator => false,
        }
    }

    /// Evaluate `k_λ(x, y)` with input validation.
    pub fn evaluate(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_vectors(x, y)?;
        Ok(self.eval_unchecked(x, y))
    }

    /// Evaluate without validation; callers guarantee equal-length finite
    /// inputs (e.g. rows of one `SampleMatrix`).
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let lambda = self.bandwidth;
        match self.family {
            KernelFamily::Gaussian => (-squared_l2(x, y) / (lambda * lambda)).exp(),
            KernelFamily::Laplace => (-l1(x, y) / lambda).exp(),
            KernelFamily::InverseMultiquadric => {
                1.0 / (1.0 + squared_l2(x, y) / (lambda * lambda)).sqrt()
            }
            KernelFamily::Matern(nu) => {
                nu.profile(distance(x, y, self.distance_order) / lambda)
            }
            KernelFamily::Indicator => {
                let eq = x.iter().zip(y.iter()).all(|(a, b)| a.to_bits() == b.to_bits());
                if eq {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Analytic gradient `∇_x k_λ(x, y)`.
    ///
    /// Radial symmetry gives `∇_y k = −∇_x k`. Errors on families without
    /// derivatives (Laplace, indicator, Matérn ν = 0.5 or r ≠ 2).
    pub fn grad_x(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        check_vectors(x, y)?;
        if !self.supports_derivatives() {
            return Err(Error::UnsupportedDerivative { family: self.family.name() });
        }
        let mut out = vec![0.0; x.len()];
        self.grad_x_into(x, y, &mut out);
        Ok(out)
    }

    /// As [`grad_x`](Self::grad_x) but unchecked, writing into `out`.
    pub(crate) fn grad_x_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let g = self.grad_scale(x, y);
        for i in 0..x.len() {
            out[i] = g * (x[i] - y[i]);
        }
    }

    /// Scalar `g` with `∇_x k_λ(x, y) = g · (x − y)`; all smooth families
    /// are radial so the gradient is a multiple of the difference vector.
    /// Unchecked; symmetric in its arguments bit-for-bit.
    pub(crate) fn grad_scale(&self, x: &[f64], y: &[f64]) -> f64 {
        let lambda = self.bandwidth;
        let l2 = lambda * lambda;
        let coef = match self.family {
            KernelFamily::Gaussian => {
                let s = squared_l2(x, y);
                2.0 * (-s / l2).exp()
            }
            KernelFamily::InverseMultiquadric => {
                let q = 1.0 + squared_l2(x, y) / l2;
                1.0 / (q * q * q).sqrt()
            }
            KernelFamily::Matern(nu) => matern_grad_coef(nu, self.t_euclidean(x, y)),
            _ => unreachable!("checked by supports_derivatives"),
        };
        -coef / l2
    }

    /// Analytic `Σ_i ∂²k/∂x_i∂y_i`, the trace of the mixed Hessian.
    pub fn cross_partial_trace(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_vectors(x, y)?;
        if !self.supports_derivatives() {
            return Err(Error::UnsupportedDerivative { family: self.family.name() });
        }
        Ok(self.cross_partial_trace_unchecked(x, y))
    }

    pub(crate) fn cross_partial_trace_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let d = x.len() as f64;
        let lambda = self.bandwidth;
        let l2 = lambda * lambda;
        match self.family {
            KernelFamily::Gaussian => {
                let s = squared_l2(x, y);
                (-s / l2).exp() * (2.0 * d / l2 - 4.0 * s / (l2 * l2))
            }
            KernelFamily::InverseMultiquadric => {
                let s = squared_l2(x, y);
                let q = 1.0 + s / l2;
                let q3 = 1.0 / (q * q * q).sqrt();
                d / l2 * q3 - 3.0 * s / (l2 * l2) * q3 / q
            }
            KernelFamily::Matern(nu) => {
                let t = self.t_euclidean(x, y);
                let e = (-t).exp();
                let poly = match nu {
                    MaternSmoothness::ThreeHalves => 3.0 * (d - t),
                    MaternSmoothness::FiveHalves => {
                        (5.0 / 3.0) * (d * (1.0 + t) - t * t)
                    }
                    MaternSmoothness::SevenHalves => {
                        let t2 = t * t;
                        (7.0 / 15.0) * (3.0 * d + 3.0 * d * t + (d - 1.0) * t2 - t2 * t)
                    }
                    MaternSmoothness::NineHalves => {
                        let t2 = t * t;
                        let t3 = t2 * t;
                        (3.0 / 35.0)
                            * (d * (15.0 + 15.0 * t + 6.0 * t2 + t3)
                                - 3.0 * t2
                                - 3.0 * t3
                                - t2 * t2)
                    }
                    MaternSmoothness::Half => unreachable!("checked by supports_derivatives"),
                };
                poly * e / l2
            }
            _ => unreachable!("checked by supports_derivatives"),
        }
    }

    /// Rescaled Euclidean distance argument t = √(2ν)·‖x−y‖₂/λ.
    fn t_euclidean(&self, x: &[f64], y: &[f64]) -> f64 {
        let nu = match self.family {
            KernelFamily::Matern(nu) => nu,
            _ => unreachable!(),
        };
        nu.scale() * squared_l2(x, y).sqrt() / self.bandwidth
    }
}

impl std::fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.family {
            KernelFamily::Indicator => write!(f, "indicator"),
            _ => write!(f, "{}:{}", self.family.name(), self.bandwidth),
        }
    }
}

/// Coefficient in ∂k/∂x_i = −coef·e^(−t)·(x_i−y_i)/λ² for Matérn ν ≥ 1.5;
/// the e^(−t) factor is folded in here.
fn matern_grad_coef(nu: MaternSmoothness, t: f64) -> f64 {
    let e = (-t).exp();
    match nu {
        MaternSmoothness::ThreeHalves => 3.0 * e,
        MaternSmoothness::FiveHalves => (5.0 / 3.0) * (1.0 + t) * e,
        MaternSmoothness::SevenHalves => (7.0 / 15.0) * (3.0 + 3.0 * t + t * t) * e,
        MaternSmoothness::NineHalves => {
            let t2 = t * t;
            (3.0 / 35.0) * (15.0 + 15.0 * t + 6.0 * t2 + t2 * t) * e
        }
        MaternSmoothness::Half => unreachable!("checked by supports_derivatives"),
    }
}

pub(crate) fn check_vectors(x: &[f64], y: &[f64]) -> Result<()> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::EmptyDimension);
    }
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { left: x.len(), right: y.len() });
    }
    for (col, v) in x.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFiniteValue { row: 0, col });
        }
    }
    for (col, v) in y.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFiniteValue { row: 1, col });
        }
    }
    Ok(())
}

pub(crate) fn squared_l2(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..x.len() {
        let d = x[i] - y[i];
        acc += d * d;
    }
    acc
}

pub(crate) fn l1(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..x.len() {
        acc += (x[i] - y[i]).abs();
    }
    acc
}

/// L^r distance ‖x − y‖_r for r ≥ 1 (r = 1 and r = 2 take exact fast paths).
pub(crate) fn distance(x: &[f64], y: &[f64], r: f64) -> f64 {
    if r == 2.0 {
        squared_l2(x, y).sqrt()
    } else if r == 1.0 {
        l1(x, y)
    } else {
        let mut acc = 0.0;
        for i in 0..x.len() {
            acc += (x[i] - y[i]).abs().powf(r);
        }
        acc.powf(1.0 / r)
    }
}

/// Rectangular matrix of pairwise L^r distances.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    values: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl DistanceMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// All pairwise distances ‖X_i − Y_j‖_r.
///
/// When `x` and `y` are the same object the strict lower triangle is
/// mirrored from the upper one, so the result is exactly symmetric with a
/// zero diagonal.
pub fn pairwise_distances(x: &SampleMatrix, y: &SampleMatrix, r: f64) -> Result<DistanceMatrix> {
    if !r.is_finite() || r < 1.0 {
        return Err(Error::InvalidDistanceOrder(r));
    }
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { left: x.dim(), right: y.dim() });
    }
    let n = x.n_rows();
    let m = y.n_rows();
    let mut values = vec![0.0; n * m];
    if std::ptr::eq(x, y) {
        values.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
            let xi = x.row(i);
            for (j, slot) in row.iter_mut().enumerate().skip(i + 1) {
                *slot = distance(xi, y.row(j), r);
            }
        });
        for i in 1..n {
            for j in 0..i {
                values[i * m + j] = values[j * m + i];
            }
        }
    } else {
        values.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
            let xi = x.row(i);
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = distance(xi, y.row(j), r);
            }
        });
    }
    Ok(DistanceMatrix { values, rows: n, cols: m })
}

/// Dense kernel matrix `K[i][j] = k(X_i, Y_j)` plus the kernel that made it.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    values: Vec<f64>,
    rows: usize,
    cols: usize,
    kernel: KernelSpec,
}

impl GramMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }
}

/// Compute the full Gram matrix between two samples.
///
/// Entries are bit-identical to elementwise [`KernelSpec::evaluate`]: rows
/// are partitioned across workers but each entry is an independent scalar
/// expression. Passing the same object for `x` and `y` fills the upper
/// triangle and mirrors it (exact, since every family's evaluation is
/// symmetric in its arguments down to the bit level).
pub fn gram(kernel: &KernelSpec, x: &SampleMatrix, y: &SampleMatrix) -> Result<GramMatrix> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { left: x.dim(), right: y.dim() });
    }
    let n = x.n_rows();
    let m = y.n_rows();
    let mut values = vec![0.0; n * m];
    if std::ptr::eq(x, y) {
        values.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
            let xi = x.row(i);
            for (j, slot) in row.iter_mut().enumerate().skip(i) {
                *slot = kernel.eval_unchecked(xi, y.row(j));
            }
        });
        for i in 1..n {
            for j in 0..i {
                values[i * m + j] = values[j * m + i];
            }
        }
    } else {
        values.par_chunks_mut(m).enumerate().for_each(|(i, row)| {
            let xi = x.row(i);
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = kernel.eval_unchecked(xi, y.row(j));
            }
        });
    }
    Ok(GramMatrix { values, rows: n, cols: m, kernel: *kernel })
}
