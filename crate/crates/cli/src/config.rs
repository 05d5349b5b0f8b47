//! Flat `key = value` run configuration.
//!
//! ```text
//! # dynamic run on the bundled desk instance
//! problem = desk
//! seed = 1
//! variant = dynamic
//! phi = 0
//! lambda = constant:1
//! accuracy = fixed_cg:2
//! max_iterations = 20000
//! trace_path = trace.csv
//! summary_path = summary.json
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use isa_core::{AccuracyMode, Sequence, StoppingConfig};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Problem {
    /// `m = 128`, support 4, drawn from `seed`.
    Desk,
    /// `m = 16`, support 2, drawn from `seed`.
    Small,
    File(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Predetermined,
    Dynamic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProjectorKind {
    Cg,
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceBoundChoice {
    None,
    BasisPursuit,
    Exact,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredeterminedParams {
    pub step_scale: f64,
    pub accuracy_scale: f64,
    /// Use `γ_k = gamma_mu · ε_k` subgradients instead of exact ones.
    pub eps_subgradient: bool,
    pub gamma_mu: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DynamicParams {
    pub phi: f64,
    pub lambda: Sequence,
    pub beta: Option<f64>,
    pub nu: Sequence,
    pub accuracy: AccuracyMode,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub problem: Problem,
    pub seed: u64,
    pub variant: Variant,
    pub projector: ProjectorKind,
    pub predetermined: PredeterminedParams,
    pub dynamic: DynamicParams,
    /// Distance column source; `None` means exact when `x*` is known.
    pub distance_bound: Option<DistanceBoundChoice>,
    pub stopping: StoppingConfig,
    pub trace_path: PathBuf,
    pub summary_path: PathBuf,
    pub timing: bool,
    /// Keys and values as written, for the summary echo.
    pub echo: BTreeMap<String, String>,
}

const KEYS: &[&str] = &[
    "problem",
    "seed",
    "variant",
    "projector",
    "step_scale",
    "accuracy_scale",
    "eps_subgradient",
    "gamma_mu",
    "phi",
    "lambda",
    "beta",
    "nu",
    "accuracy",
    "distance_bound",
    "max_iterations",
    "min_step",
    "feas_tolerance",
    "stall_window",
    "trace_stride",
    "trace_path",
    "summary_path",
    "timing",
];

pub fn parse_pairs(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| CliError::Config {
            line: i + 1,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(CliError::Config {
                line: i + 1,
                message: "empty key".into(),
            });
        }
        out.push((i + 1, k.to_string(), v.to_string()));
    }
    Ok(out)
}

fn parse_value<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| CliError::Config {
        line,
        message: format!("bad value `{value}` for `{key}`"),
    })
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::Config {
            line,
            message: format!("`{key}` must be true or false, got `{value}`"),
        }),
    }
}

fn core_err(line: usize) -> impl Fn(isa_core::Error) -> CliError {
    move |e| CliError::Config {
        line,
        message: e.to_string(),
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: Problem::Desk,
            seed: 1,
            variant: Variant::Dynamic,
            projector: ProjectorKind::Cg,
            predetermined: PredeterminedParams {
                step_scale: 1.0,
                accuracy_scale: 1.0,
                eps_subgradient: false,
                gamma_mu: 1.0,
            },
            dynamic: DynamicParams {
                phi: 0.0,
                lambda: Sequence::Constant(1.0),
                beta: None,
                nu: Sequence::InverseSquare(1.0),
                accuracy: AccuracyMode::FixedIterations(2),
            },
            distance_bound: None,
            stopping: StoppingConfig::default(),
            trace_path: PathBuf::from("trace.csv"),
            summary_path: PathBuf::from("summary.json"),
            timing: false,
            echo: BTreeMap::new(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut accuracy_scale_set = false;
        for (line, key, value) in parse_pairs(text)? {
            if !KEYS.contains(&key.as_str()) {
                return Err(CliError::Config {
                    line,
                    message: format!("unknown key `{key}`"),
                });
            }
            if cfg.echo.insert(key.clone(), value.clone()).is_some() {
                return Err(CliError::Config {
                    line,
                    message: format!("duplicate key `{key}`"),
                });
            }
            let v = value.as_str();
            match key.as_str() {
                "problem" => {
                    cfg.problem = match v {
                        "desk" => Problem::Desk,
                        "small" => Problem::Small,
                        path => Problem::File(PathBuf::from(path)),
                    }
                }
                "seed" => cfg.seed = parse_value(line, &key, v)?,
                "variant" => {
                    cfg.variant = match v {
                        "predetermined" => Variant::Predetermined,
                        "dynamic" => Variant::Dynamic,
                        _ => {
                            return Err(CliError::Config {
                                line,
                                message: format!("variant must be predetermined or dynamic, got `{v}`"),
                            })
                        }
                    }
                }
                "projector" => {
                    cfg.projector = match v {
                        "cg" => ProjectorKind::Cg,
                        "exact" => ProjectorKind::Exact,
                        _ => {
                            return Err(CliError::Config {
                                line,
                                message: format!("projector must be cg or exact, got `{v}`"),
                            })
                        }
                    }
                }
                "step_scale" => cfg.predetermined.step_scale = parse_value(line, &key, v)?,
                "accuracy_scale" => {
                    cfg.predetermined.accuracy_scale = parse_value(line, &key, v)?;
                    accuracy_scale_set = true;
                }
                "eps_subgradient" => cfg.predetermined.eps_subgradient = parse_bool(line, &key, v)?,
                "gamma_mu" => cfg.predetermined.gamma_mu = parse_value(line, &key, v)?,
                "phi" => cfg.dynamic.phi = parse_value(line, &key, v)?,
                "lambda" => cfg.dynamic.lambda = parse_sequence(v).map_err(core_err(line))?,
                "beta" => cfg.dynamic.beta = Some(parse_value(line, &key, v)?),
                "nu" => cfg.dynamic.nu = v.parse().map_err(core_err(line))?,
                "accuracy" => cfg.dynamic.accuracy = v.parse().map_err(core_err(line))?,
                "distance_bound" => {
                    cfg.distance_bound = Some(match v {
                        "none" => DistanceBoundChoice::None,
                        "bp" => DistanceBoundChoice::BasisPursuit,
                        "exact" => DistanceBoundChoice::Exact,
                        _ => {
                            return Err(CliError::Config {
                                line,
                                message: format!("distance_bound must be none, bp or exact, got `{v}`"),
                            })
                        }
                    })
                }
                "max_iterations" => cfg.stopping.max_iterations = parse_value(line, &key, v)?,
                "min_step" => cfg.stopping.min_step = parse_value(line, &key, v)?,
                "feas_tolerance" => cfg.stopping.feas_tolerance = parse_value(line, &key, v)?,
                "stall_window" => cfg.stopping.stall_window = Some(parse_value(line, &key, v)?),
                "trace_stride" => cfg.stopping.trace_stride = parse_value(line, &key, v)?,
                "trace_path" => cfg.trace_path = PathBuf::from(v),
                "summary_path" => cfg.summary_path = PathBuf::from(v),
                "timing" => cfg.timing = parse_bool(line, &key, v)?,
                _ => unreachable!("key list checked above"),
            }
        }
        if !accuracy_scale_set {
            cfg.predetermined.accuracy_scale = cfg.predetermined.step_scale;
        }
        cfg.stopping.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        RunConfig::parse(&text)
    }
}

/// A sequence tag such as `log_decay:1.5`, or a bare number for a constant.
pub fn parse_sequence(s: &str) -> isa_core::Result<Sequence> {
    match s.trim().parse::<f64>() {
        Ok(c) => format!("constant:{c}").parse(),
        Err(_) => s.parse(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let text = "\
# comment
problem = small   # trailing comment
seed = 7
variant = predetermined
step_scale = 2
max_iterations = 50
trace_stride = 5
";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.problem, Problem::Small);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.variant, Variant::Predetermined);
        assert_eq!(cfg.predetermined.accuracy_scale, 2.0);
        assert_eq!(cfg.stopping.max_iterations, 50);
        assert_eq!(cfg.echo.len(), 6);
        assert_eq!(cfg.echo["problem"], "small");
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(matches!(RunConfig::parse("nonsense"), Err(CliError::Config { line: 1, .. })));
        assert!(RunConfig::parse("bogus = 1").is_err());
        assert!(RunConfig::parse("seed = 1\nseed = 2").is_err());
        assert!(RunConfig::parse("accuracy = fixed_cg:0").is_err());
        assert!(RunConfig::parse("trace_stride = 0").is_err());
        assert!(RunConfig::parse("variant = both").is_err());
    }

    #[test]
    fn sequence_shorthand() {
        assert_eq!(parse_sequence("0.5").unwrap(), Sequence::Constant(0.5));
        assert_eq!(parse_sequence("log_decay:1").unwrap(), Sequence::LogDecay(1.0));
        assert!(parse_sequence("x").is_err());
    }
}
