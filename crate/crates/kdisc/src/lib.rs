//! Kernel discrepancy statistics: maximum mean discrepancy (two-sample),
//! the Hilbert–Schmidt independence criterion, and kernel Stein discrepancy
//! (goodness-of-fit), each computable as complete V/U statistics or through
//! subquadratic incomplete designs, with adaptive pooling over bandwidth
//! collections.

pub mod cores;
pub mod designs;
pub mod error;
pub mod estimators;
pub mod kernels;
pub mod oracle;
pub mod pooling;
pub mod reduce;

pub use cores::{hsic_core, mmd_core, stein_kernel, PairedSample, ScoreModel};
pub use designs::{Design, DesignPairs};
pub use estimators::{
    generic_statistic, hsic_statistic, hsic_u, hsic_v, hsic_v_second_order, ksd_statistic, ksd_u,
    ksd_v, mmd_statistic, mmd_u, mmd_u_paired, mmd_v, HsicShiftedCore, MmdPairedCore, PairCore,
    StatKind, StatisticResult, SteinPairCore, DEFAULT_GRAM_ROW_CAP,
};
pub use error::{Error, Result};
pub use kernels::{
    gram, pairwise_distances, DistanceMatrix, GramMatrix, KernelFamily, KernelSpec,
    MaternSmoothness, SampleMatrix,
};
pub use oracle::{
    oracle_hsic_sums, oracle_hsic_v_asymmetric, oracle_ksd_u_tuple, oracle_ksd_v_tuple,
    oracle_mmd_u_paired_tuple, oracle_mmd_u_tuple, oracle_mmd_v_tuple, HsicOracleSums,
    OracleConfig,
};
pub use pooling::{
    adaptive_hsic, adaptive_ksd, adaptive_mmd, bandwidth_collection, default_collection,
    default_product_collection, median_bandwidth, pool, product_collection, sigma,
    CollectionKernels, KernelCollection, PoolMethod, PoolRequest, PooledResult, Provenance,
    SIGMA_FLOOR,
};
