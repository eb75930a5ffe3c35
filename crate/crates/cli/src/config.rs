//! TOML experiment files.
//!
//! ```toml
//! seed = 7
//! operation = "scan"
//!
//! [system]
//! kind = "doubling"
//!
//! [params]
//! resolution = 0.0625
//! horizon = 64
//! ```

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use translab::shifts::{power_system, scale_unimodular, ScalarField, ShiftVector, WeightRule, WeightedShiftSpec};
use translab::{Ball, Point, SpaceTag, System};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Operation {
    Scan,
    AlmostScan,
    Recurrent,
    VerifyCert,
    Salas,
    Witness,
    PowerCheck,
    UnimodularCheck,
    Span,
    Gdelta,
    Jset,
    Limit,
    Orbit,
}

impl Operation {
    pub fn name(self) -> &'static str {
        match self {
            Operation::Scan => "scan",
            Operation::AlmostScan => "almost-scan",
            Operation::Recurrent => "recurrent",
            Operation::VerifyCert => "verify-cert",
            Operation::Salas => "salas",
            Operation::Witness => "witness",
            Operation::PowerCheck => "power-check",
            Operation::UnimodularCheck => "unimodular-check",
            Operation::Span => "span",
            Operation::Gdelta => "gdelta",
            Operation::Jset => "jset",
            Operation::Limit => "limit",
            Operation::Orbit => "orbit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operation: Option<Operation>,
    pub system: SystemConfig,
    #[serde(default)]
    pub params: Params,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemConfig {
    Doubling {},
    /// Golden-mean rotation when `alpha` is omitted.
    Rotation {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
    },
    Tent {},
    Contraction {
        c: f64,
    },
    Interchange {},
    Shift {
        weights: WeightRule,
        #[serde(default = "one")]
        block_dim: usize,
        truncation: usize,
        #[serde(default = "real_field")]
        field: ScalarField,
    },
    Power {
        base: Box<SystemConfig>,
        p: u32,
    },
    Scalar {
        base: Box<SystemConfig>,
        /// `[re, im]`.
        lambda: [f64; 2],
    },
}

fn one() -> usize {
    1
}

fn real_field() -> ScalarField {
    ScalarField::Real
}

impl SystemConfig {
    pub fn build(&self) -> Result<System, CliError> {
        Ok(match self {
            SystemConfig::Doubling {} => System::doubling(),
            SystemConfig::Rotation { alpha: None } => System::golden_rotation(),
            SystemConfig::Rotation { alpha: Some(a) } => System::rotation(*a)?,
            SystemConfig::Tent {} => System::tent(),
            SystemConfig::Contraction { c } => System::contraction(*c)?,
            SystemConfig::Interchange {} => System::interchange(),
            SystemConfig::Shift {
                weights,
                block_dim,
                truncation,
                field,
            } => System::weighted_shift(WeightedShiftSpec::new(weights.clone(), *block_dim, *truncation, *field))?,
            SystemConfig::Power { base, p } => power_system(&base.build()?, *p)?,
            SystemConfig::Scalar { base, lambda } => {
                scale_unimodular(&base.build()?, Complex64::new(lambda[0], lambda[1]))?
            }
        })
    }
}

/// One nonzero entry of a finitely supported shift vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    /// 1-based block index.
    pub block: usize,
    #[serde(default)]
    pub component: usize,
    pub value: f64,
    #[serde(default)]
    pub imag: f64,
}

/// A point: a bare number for one-dimensional spaces, raw coordinates, or
/// sparse entries for shift spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointConfig {
    Scalar(f64),
    Coords(Vec<f64>),
    Entries(Vec<Entry>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallConfig {
    pub center: PointConfig,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub u: BallConfig,
    pub v: BallConfig,
}

/// Operation parameters. Each operation reads the fields it needs and falls
/// back to documented defaults; unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<PairConfig>>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<PointConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<PointConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recurrent: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<PathBuf>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<PointConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<PointConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_u: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_time: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub battery: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_support: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_power: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<PointConfig>>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<PointConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<PointConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<PointConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_times: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_s: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_m: Option<u64>,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Config, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Config, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Config::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

/// Experiment files behind `path`: the file itself, or every `*.toml` in a
/// directory in lexicographic order.
pub fn expand(path: &Path) -> Result<Vec<PathBuf>, CliError> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .map_err(|e| CliError::Config(format!("cannot list {}: {e}", path.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Config(format!("no .toml files in {}", path.display())));
    }
    Ok(files)
}

pub fn point(system: &System, p: &PointConfig) -> Result<Point, CliError> {
    match (system.space(), p) {
        (SpaceTag::ShiftTruncation, PointConfig::Entries(_)) | (SpaceTag::ShiftTruncation, PointConfig::Coords(_)) => {
            let spec = system.shift_spec().expect("shift space");
            Ok(vector(spec, p)?.to_point(spec.field))
        }
        (_, PointConfig::Scalar(x)) => Ok(system.point(vec![*x])?),
        (_, PointConfig::Coords(c)) => Ok(system.point(c.clone())?),
        _ => Err(CliError::Config(format!(
            "point {p:?} does not fit a system on {:?}",
            system.space()
        ))),
    }
}

pub fn vector(spec: &WeightedShiftSpec, p: &PointConfig) -> Result<ShiftVector, CliError> {
    match p {
        PointConfig::Entries(entries) => {
            let mut v = ShiftVector::zeros(spec);
            for e in entries {
                if e.block == 0 || e.block > spec.truncation || e.component >= spec.block_dim {
                    return Err(CliError::Config(format!(
                        "entry (block {}, component {}) outside M = {}, d = {}",
                        e.block, e.component, spec.truncation, spec.block_dim
                    )));
                }
                if spec.field == ScalarField::Real && e.imag != 0.0 {
                    return Err(CliError::Config("imaginary entry for a real-field shift".into()));
                }
                v.entries[(e.block - 1) * spec.block_dim + e.component] = Complex64::new(e.value, e.imag);
            }
            Ok(v)
        }
        // an empty list deserializes as coordinates; read it as the zero vector
        PointConfig::Coords(c) if c.is_empty() => Ok(ShiftVector::zeros(spec)),
        PointConfig::Coords(c) => Ok(ShiftVector::from_coords(spec, c)?),
        PointConfig::Scalar(_) => Err(CliError::Config("shift vectors need entries or coordinates".into())),
    }
}

pub fn ball(system: &System, b: &BallConfig) -> Result<Ball, CliError> {
    Ok(Ball::new(point(system, &b.center)?, b.radius)?)
}

pub fn require<T: Clone>(value: &Option<T>, name: &str) -> Result<T, CliError> {
    value
        .clone()
        .ok_or_else(|| CliError::Config(format!("missing parameter `params.{name}`")))
}
