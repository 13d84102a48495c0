use crate::args::{Cli, Command, CommonArgs, HsicArgs, KsdArgs, MmdArgs};
use crate::input;
use crate::tokens::{self, KernelChoice, StatToken};
use kdisc::{
    adaptive_hsic, adaptive_ksd, adaptive_mmd, default_collection, default_product_collection,
    median_bandwidth, oracle_hsic_sums, oracle_ksd_u_tuple, oracle_ksd_v_tuple,
    oracle_mmd_u_paired_tuple, oracle_mmd_u_tuple, oracle_mmd_v_tuple, CollectionKernels,
    Design, KernelCollection, KernelSpec, OracleConfig, PairedSample, PoolRequest, PooledResult,
    SampleMatrix, ScoreModel, StatKind,
};
use serde::Serialize;
use std::fmt;

/// Verification fails when the fast path and the exhaustive reference
/// disagree by more than this.
const VERIFY_TOLERANCE: f64 = 1e-8;

/// Failure classes, one per exit code: 2 for configuration, 3 for data,
/// 4 for numerical degeneracy. Successful verify-failing runs exit 5
/// without going through this type.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Degenerate(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Degenerate(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) | CliError::Data(msg) | CliError::Degenerate(msg) => {
                f.write_str(msg)
            }
        }
    }
}

impl From<kdisc::Error> for CliError {
    fn from(err: kdisc::Error) -> Self {
        use kdisc::Error::*;
        match err {
            // Parameter and flag problems.
            InvalidBandwidth(_) | InvalidDistanceOrder(_) | InvalidVariance(_)
            | UnsupportedDerivative { .. } | ScoreDimensionMismatch { .. }
            | InvalidDesign(_) | InvalidPooling(_) | EmptyCollection | InvalidOracleCap(_)
            | OracleCapExceeded { .. } | UnsupportedRequest(_) => {
                CliError::Config(err.to_string())
            }
            // Problems with the loaded samples.
            EmptySample | EmptyDimension | RaggedData { .. } | NonFiniteValue { .. }
            | DimensionMismatch { .. } | RowCountMismatch { .. } | SampleTooSmall { .. }
            | OddSampleSize(_) | EmptyDistanceSet => CliError::Data(err.to_string()),
            // Numerical degeneracy discovered mid-computation.
            DegenerateSigma { .. } | NonFiniteScore(_) | NonFiniteStatistic(_) => {
                CliError::Degenerate(err.to_string())
            }
        }
    }
}

#[derive(Serialize)]
struct KernelEntry {
    family: String,
    bandwidth: Option<f64>,
    r: Option<f64>,
}

/// The JSON report. Field order is fixed by this declaration and floats
/// serialize in shortest round-trip form, so identical runs emit identical
/// bytes.
#[derive(Serialize)]
struct Report {
    command: &'static str,
    statistic_kind: String,
    design: String,
    kernels: Vec<KernelEntry>,
    raw_values: Vec<f64>,
    sigmas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pooled_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    seed: u64,
    n: usize,
    m: Option<usize>,
    d: usize,
    clamped: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    abs_diff: Option<f64>,
}

pub fn execute(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Mmd(args) => run_mmd(args),
        Command::Hsic(args) => run_hsic(args),
        Command::Ksd(args) => run_ksd(args),
    }
}

fn kernel_entry(spec: &KernelSpec) -> KernelEntry {
    if spec.family() == kdisc::KernelFamily::Indicator {
        KernelEntry { family: spec.family().name(), bandwidth: None, r: None }
    } else {
        KernelEntry {
            family: spec.family().name(),
            bandwidth: Some(spec.bandwidth()),
            r: Some(spec.distance_order()),
        }
    }
}

/// Pair collections flatten to alternating first-stream/second-stream
/// entries, so entry 2i belongs to the X kernel of pair i.
fn kernel_entries(collection: &KernelCollection) -> Vec<KernelEntry> {
    match collection.kernels() {
        CollectionKernels::Single(kernels) => kernels.iter().map(kernel_entry).collect(),
        CollectionKernels::Pairs(pairs) => pairs
            .iter()
            .flat_map(|(kx, ky)| [kernel_entry(kx), kernel_entry(ky)])
            .collect(),
    }
}

fn design_string(kind: &StatKind) -> String {
    match kind {
        StatKind::V | StatKind::SecondOrderV => "full".into(),
        StatKind::U | StatKind::PairedU => "distinct".into(),
        StatKind::Incomplete(design) => match design {
            Design::Full => "full".into(),
            Design::Distinct => "distinct".into(),
            Design::Linear => "linear".into(),
            Design::Diagonals { r } => format!("diagonals:{r}"),
            Design::Blocks { sizes } => {
                let rendered: Vec<String> = sizes.iter().map(|s| s.to_string()).collect();
                format!("blocks:[{}]", rendered.join(","))
            }
            Design::Cross { n1 } => format!("cross:{n1}"),
            Design::Random { m, with_replacement, .. } => {
                let suffix = if *with_replacement { "with" } else { "without" };
                format!("random:{m}:{suffix}-replacement")
            }
        },
    }
}

fn single_collection(spec: KernelSpec) -> Result<KernelCollection, CliError> {
    Ok(KernelCollection::explicit(vec![spec])?)
}

fn truncate(
    collection: KernelCollection,
    cap: Option<usize>,
) -> Result<KernelCollection, CliError> {
    let Some(cap) = cap else { return Ok(collection) };
    if cap == 0 {
        return Err(CliError::Config("--max-kernels must be at least 1".into()));
    }
    if cap >= collection.len() {
        return Ok(collection);
    }
    let truncated = match collection.kernels() {
        CollectionKernels::Single(kernels) => {
            KernelCollection::explicit(kernels[..cap].to_vec())
        }
        CollectionKernels::Pairs(pairs) => {
            KernelCollection::explicit_pairs(pairs[..cap].to_vec())
        }
    };
    Ok(truncated?)
}

/// Resolve the kernel flag for statistics over a single data stream;
/// medians and collections draw their distances from `distance_data`.
fn single_stream_kernels(
    choice: &KernelChoice,
    distance_data: &SampleMatrix,
    max_kernels: Option<usize>,
) -> Result<KernelCollection, CliError> {
    match choice {
        KernelChoice::Explicit { family, bandwidth } => {
            single_collection(tokens::make_spec(*family, *bandwidth)?)
        }
        KernelChoice::Indicator => single_collection(KernelSpec::indicator()),
        KernelChoice::Median { family } => {
            let lambda = median_bandwidth(distance_data, tokens::metric_order(*family))?;
            single_collection(tokens::make_spec(*family, lambda)?)
        }
        KernelChoice::Collection => truncate(default_collection(distance_data)?, max_kernels),
    }
}

fn pool_method(
    common: &CommonArgs,
    collection: &KernelCollection,
) -> Result<(PoolRequest, bool), CliError> {
    match &common.pool {
        Some(token) => Ok((tokens::parse_pool(token)?, true)),
        None if collection.len() > 1 => Err(CliError::Config(
            "a kernel collection needs --pool (mean | max | fuse[:NU])".into(),
        )),
        None => Ok((PoolRequest::Mean, false)),
    }
}

/// The single kernel of a verification run, or the reason there is none.
fn verified_kernel(collection: &KernelCollection) -> Result<KernelSpec, CliError> {
    if collection.len() != 1 {
        return Err(CliError::Config(
            "--verify needs a single kernel, not a collection".into(),
        ));
    }
    match collection.kernels() {
        CollectionKernels::Single(kernels) => Ok(kernels[0]),
        CollectionKernels::Pairs(_) => unreachable!("pair runs verify via verified_pair"),
    }
}

struct Outcome {
    report: Report,
    exit: i32,
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    command: &'static str,
    stat: &StatToken,
    kind: &StatKind,
    collection: &KernelCollection,
    result: &PooledResult,
    pooled_requested: bool,
    seed: u64,
    n: usize,
    m: Option<usize>,
    d: usize,
    oracle_value: Option<f64>,
) -> Outcome {
    let abs_diff = oracle_value.map(|o| (result.raw_values[0] - o).abs());
    let exit = match abs_diff {
        Some(diff) if diff > VERIFY_TOLERANCE => 5,
        _ => 0,
    };
    let report = Report {
        command,
        statistic_kind: tokens::canonical_stat(stat),
        design: design_string(kind),
        kernels: kernel_entries(collection),
        raw_values: result.raw_values.clone(),
        sigmas: result.sigmas.clone(),
        pooled_value: pooled_requested.then_some(result.pooled),
        value: (!pooled_requested).then_some(result.normalized[0]),
        seed,
        n,
        m,
        d,
        clamped: result.clamped,
        oracle_value,
        abs_diff,
    };
    Outcome { report, exit }
}

fn emit(outcome: &Outcome, common: &CommonArgs) -> Result<i32, CliError> {
    let mut text = serde_json::to_string_pretty(&outcome.report)
        .map_err(|e| CliError::Data(format!("report serialization failed: {e}")))?;
    text.push('\n');
    match &common.output {
        Some(path) => std::fs::write(path, &text)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(outcome.exit)
}

fn pooled_rows(x: &SampleMatrix, y: &SampleMatrix) -> Result<SampleMatrix, CliError> {
    let mut data = Vec::with_capacity((x.n_rows() + y.n_rows()) * x.dim());
    data.extend_from_slice(x.data());
    data.extend_from_slice(y.data());
    Ok(SampleMatrix::new(data, x.dim())?)
}

fn run_mmd(args: MmdArgs) -> Result<i32, CliError> {
    let common = &args.common;
    let x = input::load_csv(&args.x, common.has_header)?;
    let y = input::load_csv(&args.y, common.has_header)?;
    if x.dim() != y.dim() {
        return Err(CliError::Data(format!(
            "column mismatch: {} has {} columns, {} has {}",
            args.x.display(),
            x.dim(),
            args.y.display(),
            y.dim()
        )));
    }

    let stat = tokens::parse_stat(&common.stat)?;
    let kind = match &stat {
        StatToken::V => StatKind::V,
        StatToken::U => StatKind::U,
        StatToken::PairedU => StatKind::PairedU,
        token => {
            StatKind::Incomplete(tokens::resolve_design(token, x.n_rows(), common.seed)?)
        }
    };

    let choice = tokens::parse_kernel(&common.kernel)?;
    // Automatic bandwidths come from the distances of the pooled samples.
    let pooled = pooled_rows(&x, &y)?;
    let collection = single_stream_kernels(&choice, &pooled, common.max_kernels)?;
    let (method, pooled_requested) = pool_method(common, &collection)?;

    let result = adaptive_mmd(&collection, &kind, &x, &y, method, common.normalize)?;

    let oracle_value = if common.verify {
        let kernel = verified_kernel(&collection)?;
        let config = OracleConfig::default();
        Some(match kind {
            StatKind::V => oracle_mmd_v_tuple(&config, &kernel, &x, &y)?,
            StatKind::U => oracle_mmd_u_tuple(&config, &kernel, &x, &y)?,
            StatKind::PairedU => oracle_mmd_u_paired_tuple(&config, &kernel, &x, &y)?,
            _ => {
                return Err(CliError::Config(
                    "verification covers the complete statistics (v, u, paired-u)".into(),
                ));
            }
        })
    } else {
        None
    };

    let outcome = assemble(
        "mmd",
        &stat,
        &kind,
        &collection,
        &result,
        pooled_requested,
        common.seed,
        x.n_rows(),
        Some(y.n_rows()),
        x.dim(),
        oracle_value,
    );
    emit(&outcome, common)
}

fn run_hsic(args: HsicArgs) -> Result<i32, CliError> {
    let common = &args.common;
    let (x, y) = match (&args.y, args.split) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "give either a second file or --split, not both".into(),
            ));
        }
        (None, None) => {
            return Err(CliError::Config(
                "dependence runs need a second file or --split D_X".into(),
            ));
        }
        (Some(path), None) => {
            (input::load_csv(&args.x, common.has_header)?, input::load_csv(path, common.has_header)?)
        }
        (None, Some(d_x)) => {
            let combined = input::load_csv(&args.x, common.has_header)?;
            input::split_columns(&combined, d_x)?
        }
    };
    let z = PairedSample::new(x.clone(), y.clone())?;

    let stat = tokens::parse_stat(&common.stat)?;
    let kind = match &stat {
        // The normalizer is defined over pair designs, so a normalized
        // complete plug-in run uses the shifted pair form (even row count).
        StatToken::V if common.normalize => StatKind::SecondOrderV,
        StatToken::V => StatKind::V,
        StatToken::U => StatKind::U,
        StatToken::PairedU => StatKind::PairedU,
        token => StatKind::Incomplete(tokens::resolve_design(token, z.len(), common.seed)?),
    };

    let choice = tokens::parse_kernel(&common.kernel)?;
    let collection = match &choice {
        KernelChoice::Collection => {
            truncate(default_product_collection(&x, &y)?, common.max_kernels)?
        }
        KernelChoice::Explicit { family, bandwidth } => {
            let spec = tokens::make_spec(*family, *bandwidth)?;
            KernelCollection::explicit_pairs(vec![(spec, spec)])?
        }
        KernelChoice::Indicator => KernelCollection::explicit_pairs(vec![(
            KernelSpec::indicator(),
            KernelSpec::indicator(),
        )])?,
        KernelChoice::Median { family } => {
            let order = tokens::metric_order(*family);
            let kx = tokens::make_spec(*family, median_bandwidth(&x, order)?)?;
            let ky = tokens::make_spec(*family, median_bandwidth(&y, order)?)?;
            KernelCollection::explicit_pairs(vec![(kx, ky)])?
        }
    };
    let (method, pooled_requested) = pool_method(common, &collection)?;

    let result = adaptive_hsic(&collection, &kind, &z, method, common.normalize)?;

    let oracle_value = if common.verify {
        if collection.len() != 1 {
            return Err(CliError::Config(
                "--verify needs a single kernel, not a collection".into(),
            ));
        }
        let (kx, ky) = collection.pairs()?[0];
        let config = OracleConfig::default();
        let sums = oracle_hsic_sums(&config, &kx, &ky, &z)?;
        Some(match kind {
            StatKind::V => sums.v_fourth_order,
            StatKind::U => sums.u_tuple,
            _ => {
                return Err(CliError::Config(
                    "verification covers the complete statistics (v, u)".into(),
                ));
            }
        })
    } else {
        None
    };

    let outcome = assemble(
        "hsic",
        &stat,
        &kind,
        &collection,
        &result,
        pooled_requested,
        common.seed,
        z.len(),
        Some(y.n_rows()),
        x.dim(),
        oracle_value,
    );
    emit(&outcome, common)
}

fn run_ksd(args: KsdArgs) -> Result<i32, CliError> {
    let common = &args.common;
    let x = input::load_csv(&args.x, common.has_header)?;
    let score_spec = tokens::parse_score(&args.score)?;
    let score: ScoreModel = tokens::build_score(&score_spec, x.dim())?;

    let stat = tokens::parse_stat(&common.stat)?;
    let kind = match &stat {
        StatToken::V => StatKind::V,
        StatToken::U => StatKind::U,
        StatToken::PairedU => StatKind::PairedU,
        token => {
            StatKind::Incomplete(tokens::resolve_design(token, x.n_rows(), common.seed)?)
        }
    };

    let choice = tokens::parse_kernel(&common.kernel)?;
    let collection = single_stream_kernels(&choice, &x, common.max_kernels)?;
    let (method, pooled_requested) = pool_method(common, &collection)?;

    let result = adaptive_ksd(&collection, &kind, &score, &x, method, common.normalize)?;

    let oracle_value = if common.verify {
        let kernel = verified_kernel(&collection)?;
        let config = OracleConfig::default();
        Some(match kind {
            StatKind::V => oracle_ksd_v_tuple(&config, &kernel, &score, &x)?,
            StatKind::U => oracle_ksd_u_tuple(&config, &kernel, &score, &x)?,
            _ => {
                return Err(CliError::Config(
                    "verification covers the complete statistics (v, u)".into(),
                ));
            }
        })
    } else {
        None
    };

    let outcome = assemble(
        "ksd",
        &stat,
        &kind,
        &collection,
        &result,
        pooled_requested,
        common.seed,
        x.n_rows(),
        None,
        x.dim(),
        oracle_value,
    );
    emit(&outcome, common)
}
