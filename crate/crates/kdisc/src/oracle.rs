//! Slow, transparent reference implementations: each statistic is written
//! out as its defining sum over index tuples, with no algebraic
//! simplification and no code shared with the fast paths beyond kernel and
//! score evaluation. They exist to cross-check the quadratic-time
//! estimators, both in the test suite and behind the CLI's verification
//! flag, so they live in the shipped library. Everything here is
//! deliberately single-threaded and O(n⁴); a size cap guards against
//! accidental blowups.

use crate::cores::{PairedSample, ScoreModel};
use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, SampleMatrix};

/// Guard for the O(n⁴) loops. The default cap of 8 keeps the worst oracle
/// under a few hundred thousand kernel evaluations; 12 is the hard ceiling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleConfig {
    max_n: usize,
}

impl OracleConfig {
    pub const MAX_CAP: usize = 12;

    pub fn new(max_n: usize) -> Result<Self> {
        if max_n == 0 || max_n > Self::MAX_CAP {
            return Err(Error::InvalidOracleCap(max_n));
        }
        Ok(OracleConfig { max_n })
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    fn check(&self, got: usize) -> Result<()> {
        if got > self.max_n {
            return Err(Error::OracleCapExceeded { got, cap: self.max_n });
        }
        Ok(())
    }
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { max_n: 8 }
    }
}

/// The two-sample core written out from its definition.
fn h_two_sample(kernel: &KernelSpec, x: &[f64], xp: &[f64], y: &[f64], yp: &[f64]) -> Result<f64> {
    Ok(kernel.evaluate(x, xp)? - kernel.evaluate(xp, y)? - kernel.evaluate(x, yp)?
        + kernel.evaluate(y, yp)?)
}

/// Plug-in squared MMD as the quadruple sum
/// `(1/(m²n²))·Σ_{i,i'} Σ_{j,j'} h(X_i, X_{i'}; Y_j, Y_{j'})`.
pub fn oracle_mmd_v_tuple(
    config: &OracleConfig,
    kernel: &KernelSpec,
    x: &SampleMatrix,
    y: &SampleMatrix,
) -> Result<f64> {
    let (m, n) = (x.n_rows(), y.n_rows());
    config.check(m)?;
    config.check(n)?;
    let mut total = 0.0;
    for i in 0..m {
        for i2 in 0..m {
            for j in 0..n {
                for j2 in 0..n {
                    total += h_two_sample(kernel, x.row(i), x.row(i2), y.row(j), y.row(j2))?;
                }
            }
        }
    }
    Ok(total / ((m * m * n * n) as f64))
}

/// Unbiased squared MMD as the quadruple sum over distinct within-sample
/// indices, weighted by `1/(m(m−1)n(n−1))`.
pub fn oracle_mmd_u_tuple(
    config: &OracleConfig,
    kernel: &KernelSpec,
    x: &SampleMatrix,
    y: &SampleMatrix,
) -> Result<f64> {
    let (m, n) = (x.n_rows(), y.n_rows());
    config.check(m)?;
    config.check(n)?;
    if m < 2 {
        return Err(Error::SampleTooSmall { need: 2, got: m });
    }
    if n < 2 {
        return Err(Error::SampleTooSmall { need: 2, got: n });
    }
    let mut total = 0.0;
    for i in 0..m {
        for i2 in 0..m {
            if i2 == i {
                continue;
            }
            for j in 0..n {
                for j2 in 0..n {
                    if j2 == j {
                        continue;
                    }
                    total += h_two_sample(kernel, x.row(i), x.row(i2), y.row(j), y.row(j2))?;
                }
            }
        }
    }
    Ok(total / ((m * (m - 1) * n * (n - 1)) as f64))
}

/// Row-paired one-sample form of the unbiased squared MMD:
/// `(1/(n(n−1)))·Σ_{i≠j} h(X_i, X_j; Y_i, Y_j)`.
pub fn oracle_mmd_u_paired_tuple(
    config: &OracleConfig,
    kernel: &KernelSpec,
    x: &SampleMatrix,
    y: &SampleMatrix,
) -> Result<f64> {
    let n = x.n_rows();
    if y.n_rows() != n {
        return Err(Error::RowCountMismatch { left: n, right: y.n_rows() });
    }
    config.check(n)?;
    if n < 2 {
        return Err(Error::SampleTooSmall { need: 2, got: n });
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if j == i {
                continue;
            }
            total += h_two_sample(kernel, x.row(i), x.row(j), y.row(i), y.row(j))?;
        }
    }
    Ok(total / ((n * (n - 1)) as f64))
}

/// All three brute-force forms of the squared dependence statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HsicOracleSums {
    /// `(1/N⁴)·Σ` of the symmetric four-point core over every quadruple.
    pub v_fourth_order: f64,
    /// The expanded three-sum form: a double, a triple, and a quadruple sum.
    pub v_three_term: f64,
    /// The unbiased statistic over tuples of pairwise-distinct indices.
    pub u_tuple: f64,
}

fn kernel_matrix(kernel: &KernelSpec, data: &SampleMatrix) -> Result<Vec<Vec<f64>>> {
    let n = data.n_rows();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            out[i][j] = kernel.evaluate(data.row(i), data.row(j))?;
        }
    }
    Ok(out)
}

/// Brute-force dependence statistics on one jointly observed sample.
///
/// Computes, in one pass over precomputed kernel matrices:
/// the symmetric-core quadruple sum, the expanded three-term form
/// (they agree to rounding), and the distinct-tuple unbiased statistic with
/// `1/(N(N−1))`, `2/(N(N−1)(N−2))` and `1/(N(N−1)(N−2)(N−3))` weights.
pub fn oracle_hsic_sums(
    config: &OracleConfig,
    kx: &KernelSpec,
    ky: &KernelSpec,
    z: &PairedSample,
) -> Result<HsicOracleSums> {
    let n = z.len();
    config.check(n)?;
    if n < 4 {
        return Err(Error::SampleTooSmall { need: 4, got: n });
    }
    let kxm = kernel_matrix(kx, z.x())?;
    let kym = kernel_matrix(ky, z.y())?;
    let nf = n as f64;

    let mut fourth = 0.0;
    for i in 0..n {
        for j in 0..n {
            for r in 0..n {
                for s in 0..n {
                    fourth += 0.25
                        * (kxm[i][j] - kxm[i][s] - kxm[r][j] + kxm[r][s])
                        * (kym[i][j] - kym[i][s] - kym[r][j] + kym[r][s]);
                }
            }
        }
    }
    let v_fourth_order = fourth / (nf * nf * nf * nf);

    let mut pair = 0.0;
    for i in 0..n {
        for j in 0..n {
            pair += kxm[i][j] * kym[i][j];
        }
    }
    let mut triple = 0.0;
    for i in 0..n {
        for j in 0..n {
            for r in 0..n {
                triple += kxm[i][j] * kym[i][r];
            }
        }
    }
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            for r in 0..n {
                for s in 0..n {
                    quad += kxm[i][j] * kym[r][s];
                }
            }
        }
    }
    let v_three_term = pair / (nf * nf) - 2.0 * triple / (nf * nf * nf)
        + quad / (nf * nf * nf * nf);

    let mut pair_d = 0.0;
    for i in 0..n {
        for j in 0..n {
            if j != i {
                pair_d += kxm[i][j] * kym[i][j];
            }
        }
    }
    let mut triple_d = 0.0;
    for i in 0..n {
        for j in 0..n {
            for r in 0..n {
                if j != i && r != i && r != j {
                    triple_d += kxm[i][j] * kym[i][r];
                }
            }
        }
    }
    let mut quad_d = 0.0;
    for i in 0..n {
        for j in 0..n {
            for r in 0..n {
                for s in 0..n {
                    if j != i && r != i && r != j && s != i && s != j && s != r {
                        quad_d += kxm[i][j] * kym[r][s];
                    }
                }
            }
        }
    }
    let size2 = nf * (nf - 1.0);
    let size3 = size2 * (nf - 2.0);
    let size4 = size3 * (nf - 3.0);
    let u_tuple = pair_d / size2 - 2.0 * triple_d / size3 + quad_d / size4;

    Ok(HsicOracleSums { v_fourth_order, v_three_term, u_tuple })
}

/// The quadruple sum again, but with the asymmetric core
/// `KX_ij·(KY_ij − KY_is − KY_rj + KY_rs)`; averaged over all quadruples it
/// equals the symmetric-core V-statistic.
pub fn oracle_hsic_v_asymmetric(
    config: &OracleConfig,
    kx: &KernelSpec,
    ky: &KernelSpec,
    z: &PairedSample,
) -> Result<f64> {
    let n = z.len();
    config.check(n)?;
    let kxm = kernel_matrix(kx, z.x())?;
    let kym = kernel_matrix(ky, z.y())?;
    let nf = n as f64;
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            for r in 0..n {
                for s in 0..n {
                    total += kxm[i][j] * (kym[i][j] - kym[i][s] - kym[r][j] + kym[r][s]);
                }
            }
        }
    }
    Ok(total / (nf * nf * nf * nf))
}

/// The goodness-of-fit core written out from its definition:
/// `s(x)ᵀs(y)·k + s(y)ᵀ∇₁k + s(x)ᵀ∇₂k + Σ_i ∂²k/∂x_i∂y_i`, where `∇₂` is
/// obtained by evaluating the first-argument gradient with the arguments
/// swapped (the kernels are radial).
fn h_fit(kernel: &KernelSpec, score: &ScoreModel, x: &[f64], y: &[f64]) -> Result<f64> {
    let sx = score.score(x)?;
    let sy = score.score(y)?;
    let k = kernel.evaluate(x, y)?;
    let gx = kernel.grad_x(x, y)?;
    let gy = kernel.grad_x(y, x)?;
    let trace = kernel.cross_partial_trace(x, y)?;
    let mut dot_ss = 0.0;
    let mut dot_y_gx = 0.0;
    let mut dot_x_gy = 0.0;
    for i in 0..x.len() {
        dot_ss += sx[i] * sy[i];
        dot_y_gx += sy[i] * gx[i];
        dot_x_gy += sx[i] * gy[i];
    }
    Ok(dot_ss * k + dot_y_gx + dot_x_gy + trace)
}

/// Plug-in goodness-of-fit statistic as the double sum
/// `(1/n²)·Σ_{i,j} h_P(X_i, X_j)`.
pub fn oracle_ksd_v_tuple(
    config: &OracleConfig,
    kernel: &KernelSpec,
    score: &ScoreModel,
    x: &SampleMatrix,
) -> Result<f64> {
    let n = x.n_rows();
    config.check(n)?;
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            total += h_fit(kernel, score, x.row(i), x.row(j))?;
        }
    }
    Ok(total / ((n * n) as f64))
}

/// Unbiased goodness-of-fit statistic as the double sum over distinct
/// indices, weighted by `1/(n(n−1))`.
pub fn oracle_ksd_u_tuple(
    config: &OracleConfig,
    kernel: &KernelSpec,
    score: &ScoreModel,
    x: &SampleMatrix,
) -> Result<f64> {
    let n = x.n_rows();
    config.check(n)?;
    if n < 2 {
        return Err(Error::SampleTooSmall { need: 2, got: n });
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if j != i {
                total += h_fit(kernel, score, x.row(i), x.row(j))?;
            }
        }
    }
    Ok(total / ((n * (n - 1)) as f64))
}
