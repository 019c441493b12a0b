//! Named experiment presets and the initial-factor variants.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use ramcmc::linalg::{cholesky_factorize, LowerTriangularFactor, SymmetricMatrix};
use ramcmc::proposals::RngStream;
use ramcmc::samplers::DiagnosticsConfig;
use ramcmc::targets::{self, TargetModel};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Offset separating target-generation streams from chain streams.
pub const TARGET_STREAM_BASE: u64 = 1 << 32;

/// HPD levels whose coverage is tracked on Gaussian targets.
pub const GAUSSIAN_HPD_LEVELS: [f64; 5] = [0.10, 0.25, 0.50, 0.75, 0.90];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PresetKind {
    Student2dPaper,
    StudentRandD,
    GaussianRandD,
    MixtureD,
    GaussianSphericalD,
}

impl PresetKind {
    pub const ALL: [PresetKind; 5] = [
        PresetKind::Student2dPaper,
        PresetKind::StudentRandD,
        PresetKind::GaussianRandD,
        PresetKind::MixtureD,
        PresetKind::GaussianSphericalD,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PresetKind::Student2dPaper => "student2d-paper",
            PresetKind::StudentRandD => "student-rand-d",
            PresetKind::GaussianRandD => "gaussian-rand-d",
            PresetKind::MixtureD => "mixture-d",
            PresetKind::GaussianSphericalD => "gaussian-spherical-d",
        }
    }

    pub fn names() -> Vec<&'static str> {
        Self::ALL.iter().map(|p| p.name()).collect()
    }

    pub fn default_dim(&self) -> usize {
        match self {
            PresetKind::Student2dPaper | PresetKind::MixtureD | PresetKind::GaussianSphericalD => 2,
            PresetKind::StudentRandD => 10,
            PresetKind::GaussianRandD => 8,
        }
    }

    pub fn fixed_dim(&self) -> Option<usize> {
        matches!(self, PresetKind::Student2dPaper).then_some(2)
    }

    pub fn defaults(&self) -> RunDefaults {
        match self {
            PresetKind::Student2dPaper => RunDefaults {
                burn_in: 100_000,
                iterations: 400_000,
                replications: 20,
            },
            PresetKind::StudentRandD => RunDefaults {
                burn_in: 0,
                iterations: 1_000_000,
                replications: 10,
            },
            PresetKind::GaussianRandD | PresetKind::MixtureD | PresetKind::GaussianSphericalD => {
                RunDefaults {
                    burn_in: 100_000,
                    iterations: 400_000,
                    replications: 30,
                }
            }
        }
    }
}

impl fmt::Display for PresetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PresetKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                CliError::Validation(vec![format!(
                    "unknown preset '{s}'; available presets: {}",
                    Self::names().join(", ")
                )])
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunDefaults {
    pub burn_in: u64,
    pub iterations: u64,
    pub replications: u64,
}

/// Target and starting point for one replication.
pub struct ReplicationSetup {
    pub target: Arc<TargetModel>,
    pub initial_point: Vec<f64>,
    /// True coordinate means, when the statistics are tracked.
    pub mean_truths: Option<Vec<f64>>,
    pub diagnostics: DiagnosticsConfig,
}

/// A preset at a concrete dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Preset {
    pub kind: PresetKind,
    pub dim: usize,
}

impl Preset {
    pub fn new(kind: PresetKind, dim: Option<usize>) -> Result<Self, CliError> {
        let dim = dim.unwrap_or(kind.default_dim());
        if dim == 0 {
            return Err(CliError::Validation(vec!["dim must be positive".into()]));
        }
        if let Some(fixed) = kind.fixed_dim() {
            if dim != fixed {
                return Err(CliError::Validation(vec![format!(
                    "preset {kind} is {fixed}-dimensional, got dim = {dim}"
                )]));
            }
        }
        Ok(Self { kind, dim })
    }

    /// Builds replication `rep`'s target. Random targets draw from stream
    /// `TARGET_STREAM_BASE + rep`, so every algorithm in an experiment sees
    /// the same target for a given replication.
    pub fn setup(&self, seed: u64, rep: u64, checkpoint_every: u64) -> Result<ReplicationSetup, CliError> {
        let d = self.dim;
        let mut rng = RngStream::new(seed, TARGET_STREAM_BASE + rep);
        let mut diagnostics = DiagnosticsConfig {
            checkpoint_every,
            ..DiagnosticsConfig::default()
        };
        let (target, initial_point, mean_truths) = match self.kind {
            PresetKind::Student2dPaper => {
                diagnostics.hpd_threshold = Some(99.0);
                (targets::student2d_paper(), vec![1.0, 2.0], None)
            }
            PresetKind::StudentRandD => {
                diagnostics.track_suboptimality = true;
                (targets::random_student(d, &mut rng)?, vec![0.0; d], None)
            }
            PresetKind::GaussianRandD => {
                diagnostics.hpd_levels = GAUSSIAN_HPD_LEVELS.to_vec();
                let t = targets::random_gaussian(d, &mut rng)?;
                let x1 = t.sample_exact(&mut rng)?;
                (t, x1, Some(vec![0.0; d]))
            }
            PresetKind::MixtureD => (targets::separated_mixture(d)?, vec![0.0; d], Some(vec![0.0; d])),
            PresetKind::GaussianSphericalD => {
                diagnostics.hpd_levels = GAUSSIAN_HPD_LEVELS.to_vec();
                let t = TargetModel::gaussian(vec![0.0; d], SymmetricMatrix::identity(d))?;
                let x1 = t.sample_exact(&mut rng)?;
                (t, x1, Some(vec![0.0; d]))
            }
        };
        Ok(ReplicationSetup {
            target: Arc::new(target),
            initial_point,
            mean_truths,
            diagnostics,
        })
    }
}

/// Initial factor `s₁`: `ident`, `scaled:<c>` (`c·I`) or a matrix file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub enum InitialFactor {
    #[default]
    Identity,
    Scaled(f64),
    File(PathBuf),
}

impl fmt::Display for InitialFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialFactor::Identity => write!(f, "ident"),
            InitialFactor::Scaled(c) => write!(f, "scaled:{c}"),
            InitialFactor::File(p) => write!(f, "{}", p.display()),
        }
    }
}

impl FromStr for InitialFactor {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let s = s.trim();
        if s == "ident" {
            return Ok(InitialFactor::Identity);
        }
        if let Some(c) = s.strip_prefix("scaled:") {
            let c: f64 = c
                .parse()
                .map_err(|_| CliError::Validation(vec![format!("bad scale in s1 '{s}'")]))?;
            if !(c > 0.0 && c.is_finite()) {
                return Err(CliError::Validation(vec![format!(
                    "s1 scale must be positive and finite, got {c}"
                )]));
            }
            return Ok(InitialFactor::Scaled(c));
        }
        if s.is_empty() {
            return Err(CliError::Validation(vec!["empty s1".into()]));
        }
        Ok(InitialFactor::File(PathBuf::from(s)))
    }
}

impl InitialFactor {
    /// Resolves to a factor. A file holds `d` rows of `d` numbers (whitespace
    /// or comma separated); a lower-triangular matrix is taken as the factor
    /// itself, any other symmetric matrix is factorized.
    pub fn resolve(&self, dim: usize) -> Result<LowerTriangularFactor, CliError> {
        match self {
            InitialFactor::Identity => Ok(LowerTriangularFactor::identity(dim)),
            InitialFactor::Scaled(c) => Ok(LowerTriangularFactor::scaled_identity(dim, *c)?),
            InitialFactor::File(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
                    path: path.clone(),
                    message: e.to_string(),
                })?;
                let rows = parse_matrix(&text)
                    .map_err(|m| CliError::Validation(vec![format!("{}: {m}", path.display())]))?;
                if rows.len() != dim {
                    return Err(CliError::Validation(vec![format!(
                        "{}: expected a {dim}×{dim} matrix, found {} rows",
                        path.display(),
                        rows.len()
                    )]));
                }
                let lower = rows
                    .iter()
                    .enumerate()
                    .all(|(i, r)| r[i + 1..].iter().all(|&v| v == 0.0));
                if lower {
                    Ok(LowerTriangularFactor::from_rows(&rows)?)
                } else {
                    Ok(cholesky_factorize(&SymmetricMatrix::from_rows(&rows)?)?)
                }
            }
        }
    }
}

fn parse_matrix(text: &str) -> Result<Vec<Vec<f64>>, String> {
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<f64>().map_err(|_| format!("not a number: '{t}'")))
                .collect::<Result<Vec<f64>, String>>()
        })
        .collect::<Result<_, _>>()?;
    let d = rows.len();
    if d == 0 {
        return Err("empty matrix".into());
    }
    if rows.iter().any(|r| r.len() != d) {
        return Err("matrix must be square".into());
    }
    Ok(rows)
}

/// One entry of the preset catalog.
#[derive(Debug, Clone, Serialize)]
pub struct PresetInfo {
    pub name: &'static str,
    pub origin: &'static str,
    pub description: &'static str,
    pub default_dim: usize,
    pub defaults: RunDefaults,
    pub parameters: serde_json::Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct Catalog {
    pub presets: Vec<PresetInfo>,
    pub initial_factors: Vec<InitialFactorInfo>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InitialFactorInfo {
    pub flag: &'static str,
    pub s1: &'static str,
}

pub fn list_presets() -> Catalog {
    use serde_json::json;
    let presets = PresetKind::ALL
        .iter()
        .map(|&kind| {
            let (origin, description, parameters) = match kind {
                PresetKind::Student2dPaper => (
                    "bivariate Student experiment",
                    "Bivariate Student target, started at its location; tracks the fraction of samples outside the 90% HPD set",
                    json!({
                        "location": [1.0, 2.0],
                        "pseudo_covariance": [[0.2, 0.1], [0.1, 0.8]],
                        "dof": 1.0,
                        "initial_point": [1.0, 2.0],
                        "hpd_threshold": 99.0,
                    }),
                ),
                PresetKind::StudentRandD => (
                    "Student suboptimality experiment",
                    "Centered Student (ν = 1) with pseudo-covariance M Mᵀ, M i.i.d. standard normal, drawn per replication; tracks the suboptimality factor b",
                    json!({
                        "location": "0",
                        "pseudo_covariance": "M Mᵀ, M_ij ~ N(0, 1)",
                        "dof": 1.0,
                        "initial_point": "0",
                    }),
                ),
                PresetKind::GaussianRandD => (
                    "Gaussian quantile experiment",
                    "Centered Gaussian with covariance M Mᵀ drawn per replication, started from an exact draw; tracks HPD coverage",
                    json!({
                        "mean": "0",
                        "covariance": "M Mᵀ, M_ij ~ N(0, 1)",
                        "initial_point": "X₁ ~ N(0, Σ)",
                        "hpd_levels": GAUSSIAN_HPD_LEVELS,
                    }),
                ),
                PresetKind::MixtureD => (
                    "separated mixture experiment",
                    "Equal mixture of N(m₁, Σ) and N(−m₁, Σ), started at the origin; tracks coordinate means",
                    json!({
                        "m1": "[4, 0, …, 0]",
                        "m2": "−m1",
                        "covariance": "diag(1, 100, …, 100)",
                        "weights": [0.5, 0.5],
                        "initial_point": "0",
                        "true_mean": "0",
                    }),
                ),
                PresetKind::GaussianSphericalD => (
                    "verification target",
                    "Standard Gaussian N(0, I), used by the mean-field and Lyapunov checks",
                    json!({
                        "mean": "0",
                        "covariance": "I",
                        "initial_point": "X₁ ~ N(0, I)",
                        "hpd_levels": GAUSSIAN_HPD_LEVELS,
                    }),
                ),
            };
            PresetInfo {
                name: kind.name(),
                origin,
                description,
                default_dim: kind.default_dim(),
                defaults: kind.defaults(),
                parameters,
            }
        })
        .collect();
    Catalog {
        presets,
        initial_factors: vec![
            InitialFactorInfo {
                flag: "ident",
                s1: "I",
            },
            InitialFactorInfo {
                flag: "scaled:1e-4",
                s1: "1e-4·I",
            },
            InitialFactorInfo {
                flag: "scaled:1e4",
                s1: "1e4·I",
            },
        ],
    }
}
