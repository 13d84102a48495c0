use crate::run::CliError;
use kdisc::{Design, KernelFamily, KernelSpec, MaternSmoothness, PoolRequest, ScoreModel};

/// Kernel flag before data-dependent resolution.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelChoice {
    Explicit { family: KernelFamily, bandwidth: f64 },
    Median { family: KernelFamily },
    Indicator,
    Collection,
}

fn parse_family(token: &str) -> Result<KernelFamily, CliError> {
    Ok(match token {
        "gaussian" => KernelFamily::Gaussian,
        "laplace" => KernelFamily::Laplace,
        "imq" => KernelFamily::InverseMultiquadric,
        "matern0.5" => KernelFamily::Matern(MaternSmoothness::Half),
        "matern1.5" => KernelFamily::Matern(MaternSmoothness::ThreeHalves),
        "matern2.5" => KernelFamily::Matern(MaternSmoothness::FiveHalves),
        "matern3.5" => KernelFamily::Matern(MaternSmoothness::SevenHalves),
        "matern4.5" => KernelFamily::Matern(MaternSmoothness::NineHalves),
        other => {
            return Err(CliError::Config(format!(
                "unknown kernel family {other:?}; expected gaussian, laplace, imq, \
                 matern0.5..matern4.5, indicator, or collection"
            )));
        }
    })
}

pub fn parse_kernel(token: &str) -> Result<KernelChoice, CliError> {
    match token {
        "collection" => return Ok(KernelChoice::Collection),
        "indicator" => return Ok(KernelChoice::Indicator),
        _ => {}
    }
    let Some((family_token, bandwidth_token)) = token.split_once(':') else {
        return Err(CliError::Config(format!(
            "kernel {token:?} needs a bandwidth: use FAMILY:BANDWIDTH or FAMILY:median"
        )));
    };
    if family_token == "indicator" {
        return Err(CliError::Config(
            "the indicator kernel takes no bandwidth; pass --kernel indicator".into(),
        ));
    }
    let family = parse_family(family_token)?;
    if bandwidth_token == "median" {
        return Ok(KernelChoice::Median { family });
    }
    let bandwidth: f64 = bandwidth_token.parse().map_err(|_| {
        CliError::Config(format!("kernel bandwidth {bandwidth_token:?} is not a number"))
    })?;
    Ok(KernelChoice::Explicit { family, bandwidth })
}

/// The metric order each family's bandwidth collections and medians use.
pub fn metric_order(family: KernelFamily) -> f64 {
    match family {
        KernelFamily::Laplace => 1.0,
        _ => 2.0,
    }
}

pub fn make_spec(family: KernelFamily, bandwidth: f64) -> Result<KernelSpec, CliError> {
    let spec = match family {
        KernelFamily::Gaussian => KernelSpec::gaussian(bandwidth),
        KernelFamily::Laplace => KernelSpec::laplace(bandwidth),
        KernelFamily::InverseMultiquadric => KernelSpec::inverse_multiquadric(bandwidth),
        KernelFamily::Matern(nu) => KernelSpec::matern(nu, bandwidth),
        KernelFamily::Indicator => Ok(KernelSpec::indicator()),
    };
    spec.map_err(CliError::from)
}

/// Statistic flag before the sample size is known.
#[derive(Debug, Clone, PartialEq)]
pub enum StatToken {
    V,
    U,
    PairedU,
    Linear,
    Diagonals(usize),
    BlockSize(usize),
    Cross(usize),
    Random { m: usize, with_replacement: bool },
}

pub fn parse_stat(token: &str) -> Result<StatToken, CliError> {
    let parts: Vec<&str> = token.split(':').collect();
    let bad = |why: &str| {
        CliError::Config(format!(
            "bad statistic {token:?}: {why}; expected v, u, paired-u, l, d:R, b:B, x:N1, \
             or r:M[:with-replacement]"
        ))
    };
    let positive = |text: &str, what: &str| -> Result<usize, CliError> {
        let value: usize = text
            .parse()
            .map_err(|_| bad(&format!("{what} {text:?} is not a positive integer")))?;
        if value == 0 {
            return Err(bad(&format!("{what} must be at least 1")));
        }
        Ok(value)
    };
    match parts.as_slice() {
        ["v"] => Ok(StatToken::V),
        ["u"] => Ok(StatToken::U),
        ["paired-u"] => Ok(StatToken::PairedU),
        ["l"] => Ok(StatToken::Linear),
        ["d", r] => Ok(StatToken::Diagonals(positive(r, "diagonal count")?)),
        ["b", b] => {
            let size = positive(b, "block size")?;
            if size < 2 {
                return Err(bad("block size must be at least 2"));
            }
            Ok(StatToken::BlockSize(size))
        }
        ["x", n1] => Ok(StatToken::Cross(positive(n1, "first group size")?)),
        ["r", m] => Ok(StatToken::Random { m: positive(m, "pair count")?, with_replacement: false }),
        ["r", m, "with-replacement"] => {
            Ok(StatToken::Random { m: positive(m, "pair count")?, with_replacement: true })
        }
        _ => Err(bad("unrecognized form")),
    }
}

/// The canonical form echoed in reports.
pub fn canonical_stat(token: &StatToken) -> String {
    match token {
        StatToken::V => "v".into(),
        StatToken::U => "u".into(),
        StatToken::PairedU => "paired-u".into(),
        StatToken::Linear => "l".into(),
        StatToken::Diagonals(r) => format!("d:{r}"),
        StatToken::BlockSize(b) => format!("b:{b}"),
        StatToken::Cross(n1) => format!("x:{n1}"),
        StatToken::Random { m, with_replacement: false } => format!("r:{m}"),
        StatToken::Random { m, with_replacement: true } => format!("r:{m}:with-replacement"),
    }
}

/// Turn a design-style token into a concrete design over `n` rows. Block
/// sizes tile the rows; a trailing remainder of at least two rows becomes a
/// final short block, while a single leftover row is dropped.
pub fn resolve_design(token: &StatToken, n: usize, seed: u64) -> Result<Design, CliError> {
    let design = match token {
        StatToken::Linear => Design::Linear,
        StatToken::Diagonals(r) => Design::Diagonals { r: *r },
        StatToken::BlockSize(b) => {
            let mut sizes = vec![*b; n / b];
            let remainder = n % b;
            if remainder >= 2 {
                sizes.push(remainder);
            }
            if sizes.is_empty() {
                return Err(CliError::Config(format!(
                    "block size {b} leaves no usable block over {n} rows"
                )));
            }
            Design::Blocks { sizes }
        }
        StatToken::Cross(n1) => Design::Cross { n1: *n1 },
        StatToken::Random { m, with_replacement } => {
            Design::Random { m: *m, with_replacement: *with_replacement, seed }
        }
        StatToken::V | StatToken::U | StatToken::PairedU => {
            return Err(CliError::Config(format!(
                "{} is not a subsampled design",
                canonical_stat(token)
            )));
        }
    };
    design.validate(n).map_err(CliError::from)?;
    Ok(design)
}

pub fn parse_pool(token: &str) -> Result<PoolRequest, CliError> {
    match token {
        "mean" => return Ok(PoolRequest::Mean),
        "max" => return Ok(PoolRequest::Max),
        "fuse" => return Ok(PoolRequest::Fuse(None)),
        _ => {}
    }
    if let Some(("fuse", nu_token)) = token.split_once(':') {
        let nu: f64 = nu_token.parse().map_err(|_| {
            CliError::Config(format!("fuse parameter {nu_token:?} is not a number"))
        })?;
        return Ok(PoolRequest::Fuse(Some(nu)));
    }
    Err(CliError::Config(format!(
        "unknown pooling {token:?}; expected mean, max, or fuse[:NU]"
    )))
}

/// Score-model flag, resolved against the data dimension later.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSpec {
    means: Vec<f64>,
    variances: Vec<f64>,
}

pub fn parse_score(token: &str) -> Result<ScoreSpec, CliError> {
    let parts: Vec<&str> = token.split(':').collect();
    let [model, means_token, vars_token] = parts.as_slice() else {
        return Err(CliError::Config(format!(
            "bad score {token:?}; expected gaussian:MEANS:VARIANCES"
        )));
    };
    if *model != "gaussian" {
        return Err(CliError::Config(format!(
            "unknown score model {model:?}; only gaussian is supported"
        )));
    }
    let number_list = |text: &str, what: &str| -> Result<Vec<f64>, CliError> {
        text.split(',')
            .map(|piece| {
                piece.parse::<f64>().map_err(|_| {
                    CliError::Config(format!("score {what} {piece:?} is not a number"))
                })
            })
            .collect()
    };
    Ok(ScoreSpec {
        means: number_list(means_token, "mean")?,
        variances: number_list(vars_token, "variance")?,
    })
}

/// Broadcast single-valued lists across `d` coordinates and build the model.
pub fn build_score(spec: &ScoreSpec, d: usize) -> Result<ScoreModel, CliError> {
    let broadcast = |values: &[f64], what: &str| -> Result<Vec<f64>, CliError> {
        match values.len() {
            1 => Ok(vec![values[0]; d]),
            len if len == d => Ok(values.to_vec()),
            len => Err(CliError::Config(format!(
                "score {what} list has {len} entries for {d}-dimensional data; \
                 give one value or one per coordinate"
            ))),
        }
    };
    let means = broadcast(&spec.means, "mean")?;
    let variances = broadcast(&spec.variances, "variance")?;
    let isotropic = variances.iter().all(|v| v == &variances[0]);
    let model = if isotropic {
        ScoreModel::isotropic_gaussian(means, variances[0])
    } else {
        ScoreModel::diagonal_gaussian(means, variances)
    };
    model.map_err(CliError::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_tokens_parse() {
        assert_eq!(parse_kernel("collection").unwrap(), KernelChoice::Collection);
        assert_eq!(parse_kernel("indicator").unwrap(), KernelChoice::Indicator);
        assert_eq!(
            parse_kernel("gaussian:median").unwrap(),
            KernelChoice::Median { family: KernelFamily::Gaussian }
        );
        assert_eq!(
            parse_kernel("matern2.5:0.7").unwrap(),
            KernelChoice::Explicit {
                family: KernelFamily::Matern(MaternSmoothness::FiveHalves),
                bandwidth: 0.7
            }
        );
        assert!(parse_kernel("gaussian").is_err());
        assert!(parse_kernel("indicator:1.0").is_err());
        assert!(parse_kernel("triangle:1.0").is_err());
        assert!(parse_kernel("gaussian:wide").is_err());
    }

    #[test]
    fn stat_tokens_parse_and_echo() {
        for (text, token) in [
            ("v", StatToken::V),
            ("u", StatToken::U),
            ("paired-u", StatToken::PairedU),
            ("l", StatToken::Linear),
            ("d:3", StatToken::Diagonals(3)),
            ("b:4", StatToken::BlockSize(4)),
            ("x:5", StatToken::Cross(5)),
            ("r:100", StatToken::Random { m: 100, with_replacement: false }),
            ("r:100:with-replacement", StatToken::Random { m: 100, with_replacement: true }),
        ] {
            assert_eq!(parse_stat(text).unwrap(), token);
            assert_eq!(canonical_stat(&token), text);
        }
        assert!(parse_stat("w").is_err());
        assert!(parse_stat("d:0").is_err());
        assert!(parse_stat("b:1").is_err());
        assert!(parse_stat("r:10:sometimes").is_err());
    }

    #[test]
    fn block_designs_keep_usable_remainders() {
        let token = StatToken::BlockSize(4);
        assert_eq!(
            resolve_design(&token, 11, 0).unwrap(),
            Design::Blocks { sizes: vec![4, 4, 3] }
        );
        // A lone trailing row is dropped.
        assert_eq!(
            resolve_design(&token, 9, 0).unwrap(),
            Design::Blocks { sizes: vec![4, 4] }
        );
        assert!(resolve_design(&StatToken::BlockSize(5), 1, 0).is_err());
    }

    #[test]
    fn random_designs_carry_the_seed() {
        let token = StatToken::Random { m: 10, with_replacement: false };
        assert_eq!(
            resolve_design(&token, 8, 42).unwrap(),
            Design::Random { m: 10, with_replacement: false, seed: 42 }
        );
    }

    #[test]
    fn pool_tokens_parse() {
        assert_eq!(parse_pool("mean").unwrap(), PoolRequest::Mean);
        assert_eq!(parse_pool("max").unwrap(), PoolRequest::Max);
        assert_eq!(parse_pool("fuse").unwrap(), PoolRequest::Fuse(None));
        assert_eq!(parse_pool("fuse:2.5").unwrap(), PoolRequest::Fuse(Some(2.5)));
        assert!(parse_pool("median").is_err());
        assert!(parse_pool("fuse:hot").is_err());
    }

    #[test]
    fn score_tokens_broadcast() {
        let spec = parse_score("gaussian:0:1").unwrap();
        let model = build_score(&spec, 3).unwrap();
        assert_eq!(model.dim(), 3);
        let spec = parse_score("gaussian:0.5,-0.5:1,2").unwrap();
        assert!(build_score(&spec, 2).is_ok());
        assert!(build_score(&spec, 3).is_err());
        assert!(parse_score("gaussian:0").is_err());
        assert!(parse_score("cauchy:0:1").is_err());
        assert!(parse_score("gaussian:zero:1").is_err());
    }
}
