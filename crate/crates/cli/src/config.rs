//! Run configuration: JSON file or command-line flags, validated up front.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spiralwave::{Complex64, ContinuationConfig, ModeIndex, ModelParams, Nonlinearity, RadialGrid, SolverConfig};

use crate::error::CliError;

pub const DEFAULT_GRID_POINTS: usize = 64;

/// Nonlinearity selection. `polynomial` means `f(u) = Σ_k c_k |u|^{2k} u`
/// with coefficients given as `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NonlinearitySpec {
    #[default]
    Cubic,
    Polynomial {
        coefficients: Vec<[f64; 2]>,
    },
}

impl NonlinearitySpec {
    pub fn build(&self) -> Result<Nonlinearity, CliError> {
        let f = match self {
            NonlinearitySpec::Cubic => Nonlinearity::cubic(),
            NonlinearitySpec::Polynomial { coefficients } => {
                if coefficients.is_empty() {
                    return Err(CliError::Usage("nonlinearity.coefficients: must not be empty".into()));
                }
                let c: Vec<Complex64> = coefficients.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
                Nonlinearity::polynomial(&c)
            }
        };
        f.validate()
            .map_err(|e| CliError::Usage(format!("nonlinearity: {e}")))?;
        Ok(f)
    }

    /// Parses `cubic` or `poly:re,im;re,im;...`.
    pub fn parse_flag(s: &str) -> Result<Self, String> {
        if s == "cubic" {
            return Ok(NonlinearitySpec::Cubic);
        }
        let body = s
            .strip_prefix("poly:")
            .ok_or_else(|| format!("expected `cubic` or `poly:re,im;...`, got `{s}`"))?;
        let coefficients = body
            .split(';')
            .map(|pair| {
                let (re, im) = pair
                    .split_once(',')
                    .ok_or_else(|| format!("coefficient `{pair}` is not `re,im`"))?;
                let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
                Ok([num(re)?, num(im)?])
            })
            .collect::<Result<_, String>>()?;
        Ok(NonlinearitySpec::Polynomial { coefficients })
    }
}

/// Everything needed to trace one branch; echoed verbatim into branch files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchConfig {
    pub eta: f64,
    pub omega: f64,
    pub mode: ModeIndex,
    pub nonlinearity: NonlinearitySpec,
    pub grid_points: usize,
    pub continuation: ContinuationConfig,
    pub solver: SolverConfig,
}

impl BranchConfig {
    pub fn params(&self) -> Result<ModelParams, CliError> {
        ModelParams::new(self.eta, self.omega).map_err(|e| CliError::Usage(e.to_string()))
    }

    pub fn grid(&self) -> Result<RadialGrid, CliError> {
        RadialGrid::new(self.grid_points).map_err(|e| CliError::Usage(format!("grid_points: {e}")))
    }
}

fn default_grid_points() -> usize {
    DEFAULT_GRID_POINTS
}

fn default_output_dir() -> PathBuf {
    PathBuf::from(".")
}

/// A continuation run over one or more modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub eta: f64,
    pub omega: f64,
    pub modes: Vec<ModeIndex>,
    #[serde(default)]
    pub nonlinearity: NonlinearitySpec,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default)]
    pub continuation: ContinuationConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn from_json(text: &str, origin: &Path) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| CliError::Usage(format!("{}:{}:{}: {e}", origin.display(), e.line(), e.column())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text, path)
    }

    /// Checks every field before any computation starts.
    pub fn validate(&self) -> Result<(), CliError> {
        ModelParams::new(self.eta, self.omega).map_err(|e| CliError::Usage(e.to_string()))?;
        if self.modes.is_empty() {
            return Err(CliError::Usage("modes: at least one mode is required".into()));
        }
        RadialGrid::new(self.grid_points).map_err(|e| CliError::Usage(format!("grid_points: {e}")))?;
        self.continuation
            .validate()
            .map_err(|e| CliError::Usage(format!("continuation: {e}")))?;
        self.solver
            .validate()
            .map_err(|e| CliError::Usage(format!("solver: {e}")))?;
        self.nonlinearity.build()?;
        Ok(())
    }

    pub fn branches(&self) -> Vec<BranchConfig> {
        self.modes
            .iter()
            .map(|&mode| BranchConfig {
                eta: self.eta,
                omega: self.omega,
                mode,
                nonlinearity: self.nonlinearity.clone(),
                grid_points: self.grid_points,
                continuation: self.continuation,
                solver: self.solver,
            })
            .collect()
    }
}

/// Parses `M,N` into a mode index.
pub fn parse_mode(s: &str) -> Result<ModeIndex, String> {
    let (m, n) = s.split_once(',').ok_or_else(|| format!("expected `m,n`, got `{s}`"))?;
    let m = m.trim().parse::<i64>().map_err(|e| format!("m in `{s}`: {e}"))?;
    let n = n.trim().parse::<usize>().map_err(|e| format!("n in `{s}`: {e}"))?;
    Ok(ModeIndex::new(m, n))
}
