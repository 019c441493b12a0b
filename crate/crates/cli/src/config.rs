//! Experiment configuration: TOML documents, command-line overrides and
//! validation.
//!
//! ```toml
//! preset = "gaussian-rand-d"
//! dim = 8
//! replications = 30
//! seed = 1
//! s1 = "scaled:1e4"
//!
//! [[sampler]]
//! algorithm = "ram"
//!
//! [[sampler]]
//! algorithm = "am"
//! covariance_gamma = 1.0
//! ```

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;

use ramcmc::linalg::SymmetricMatrix;
use ramcmc::proposals::ProposalSpec;
use ramcmc::samplers::{AdaptationSchedule, Algorithm, DiagnosticsConfig, SamplerConfig};
use ramcmc::targets::TargetModel;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::presets::{InitialFactor, Preset, PresetKind, ReplicationSetup};

/// Configuration as written, before defaults and validation. Command-line
/// flags produce the same structure and are merged on top of the file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub preset: Option<String>,
    pub dim: Option<usize>,
    pub target: Option<InlineTarget>,
    pub replications: Option<u64>,
    pub seed: Option<u64>,
    pub thin: Option<u64>,
    pub output: Option<PathBuf>,
    pub burn_in: Option<u64>,
    pub iterations: Option<u64>,
    pub alpha_star: Option<f64>,
    pub gamma: Option<f64>,
    /// Overrides the per-algorithm choice of `min{1, d·n^{−γ}}` versus `n^{−γ}`.
    pub scale_by_dim: Option<bool>,
    pub proposal: Option<String>,
    pub s1: Option<String>,
    pub eigen_bounds: Option<[f64; 2]>,
    pub checkpoint_every: Option<u64>,
    pub am_regularization: Option<f64>,
    pub hpd_threshold: Option<f64>,
    pub hpd_levels: Option<Vec<f64>>,
    pub track_b: Option<bool>,
    pub sampler: Option<Vec<RawSampler>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawSampler {
    pub algorithm: String,
    /// `γ` of the separate `n^{−γ}` schedule for the AM/ASWAM covariance.
    pub covariance_gamma: Option<f64>,
    pub label: Option<String>,
}

/// Target given directly in the configuration.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InlineTarget {
    Gaussian {
        mean: Vec<f64>,
        covariance: Vec<Vec<f64>>,
        initial_point: Option<Vec<f64>>,
    },
    Student {
        location: Vec<f64>,
        pseudo_covariance: Vec<Vec<f64>>,
        dof: f64,
        initial_point: Option<Vec<f64>>,
    },
    Mixture {
        weights: Vec<f64>,
        means: Vec<Vec<f64>>,
        covariance: Vec<Vec<f64>>,
        initial_point: Option<Vec<f64>>,
    },
}

/// Target, initial point and mean truths.
type BuiltTarget = (TargetModel, Vec<f64>, Option<Vec<f64>>);

impl InlineTarget {
    fn build(&self) -> Result<BuiltTarget, ramcmc::Error> {
        Ok(match self {
            InlineTarget::Gaussian {
                mean,
                covariance,
                initial_point,
            } => {
                let t = TargetModel::gaussian(mean.clone(), SymmetricMatrix::from_rows(covariance)?)?;
                (t, initial_point.clone().unwrap_or(mean.clone()), Some(mean.clone()))
            }
            InlineTarget::Student {
                location,
                pseudo_covariance,
                dof,
                initial_point,
            } => {
                let t = TargetModel::student(
                    location.clone(),
                    SymmetricMatrix::from_rows(pseudo_covariance)?,
                    *dof,
                )?;
                let truths = (*dof > 1.0).then(|| location.clone());
                (t, initial_point.clone().unwrap_or(location.clone()), truths)
            }
            InlineTarget::Mixture {
                weights,
                means,
                covariance,
                initial_point,
            } => {
                let t = TargetModel::mixture(
                    weights.clone(),
                    means.clone(),
                    SymmetricMatrix::from_rows(covariance)?,
                )?;
                let mean = t.true_mean().unwrap_or_default();
                (t, initial_point.clone().unwrap_or(mean.clone()), Some(mean))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetSpec {
    Preset(Preset),
    Inline(InlineTarget),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerEntry {
    pub algorithm: Algorithm,
    pub covariance_gamma: Option<f64>,
    /// Names the output subdirectory; unique within an experiment.
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub target: TargetSpec,
    pub dim: usize,
    pub samplers: Vec<SamplerEntry>,
    pub replications: u64,
    pub seed: u64,
    pub thin: u64,
    pub output: PathBuf,
    pub burn_in: u64,
    pub iterations: u64,
    pub alpha_star: f64,
    pub gamma: f64,
    pub scale_by_dim: Option<bool>,
    pub proposal: ProposalSpec,
    pub s1: InitialFactor,
    pub eigen_bounds: Option<(f64, f64)>,
    pub checkpoint_every: u64,
    pub am_regularization: f64,
    pub hpd_threshold: Option<f64>,
    pub hpd_levels: Option<Vec<f64>>,
    pub track_b: Option<bool>,
}

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_THIN: u64 = 10;
pub const DEFAULT_OUTPUT: &str = "ramcmc-out";

impl RawConfig {
    /// Fields set in `other` replace those in `self`.
    pub fn merge(self, other: RawConfig) -> RawConfig {
        macro_rules! pick {
            ($($f:ident),*) => {
                RawConfig { $($f: other.$f.or(self.$f)),* }
            };
        }
        pick!(
            preset,
            dim,
            target,
            replications,
            seed,
            thin,
            output,
            burn_in,
            iterations,
            alpha_star,
            gamma,
            scale_by_dim,
            proposal,
            s1,
            eigen_bounds,
            checkpoint_every,
            am_regularization,
            hpd_threshold,
            hpd_levels,
            track_b,
            sampler
        )
    }

    /// Fills defaults and checks every field, reporting all problems at once.
    pub fn validate(self) -> Result<ExperimentConfig, CliError> {
        let mut errors = Vec::new();

        let (target, defaults) = match (&self.preset, &self.target) {
            (Some(_), Some(_)) => {
                errors.push("give either `preset` or a `[target]` table, not both".to_string());
                (None, None)
            }
            (None, None) => {
                errors.push(format!(
                    "missing `preset` or `[target]`; available presets: {}",
                    PresetKind::names().join(", ")
                ));
                (None, None)
            }
            (Some(name), None) => match name.parse::<PresetKind>() {
                Ok(kind) => match Preset::new(kind, self.dim) {
                    Ok(p) => (Some(TargetSpec::Preset(p)), Some(kind.defaults())),
                    Err(CliError::Validation(v)) => {
                        errors.extend(v);
                        (None, Some(kind.defaults()))
                    }
                    Err(e) => {
                        errors.push(e.to_string());
                        (None, None)
                    }
                },
                Err(CliError::Validation(v)) => {
                    errors.extend(v);
                    (None, None)
                }
                Err(e) => {
                    errors.push(e.to_string());
                    (None, None)
                }
            },
            (None, Some(inline)) => match inline.build() {
                Ok((t, _, _)) => {
                    if let Some(d) = self.dim {
                        if d != t.dim() {
                            errors.push(format!("dim = {d} disagrees with the target dimension {}", t.dim()));
                        }
                    }
                    (Some(TargetSpec::Inline(inline.clone())), None)
                }
                Err(e) => {
                    errors.push(format!("target: {e}"));
                    (None, None)
                }
            },
        };
        let dim = match &target {
            Some(TargetSpec::Preset(p)) => p.dim,
            Some(TargetSpec::Inline(t)) => t.build().map(|(t, _, _)| t.dim()).unwrap_or(0),
            None => 0,
        };

        let replications = self
            .replications
            .unwrap_or(defaults.map_or(1, |d| d.replications));
        if replications == 0 {
            errors.push("replications must be at least 1".into());
        }
        let thin = self.thin.unwrap_or(DEFAULT_THIN);
        if thin == 0 {
            errors.push("thin must be at least 1".into());
        }
        let iterations = self
            .iterations
            .unwrap_or(defaults.map_or(400_000, |d| d.iterations));
        if iterations == 0 {
            errors.push("iterations must be at least 1".into());
        }
        let burn_in = self.burn_in.unwrap_or(defaults.map_or(100_000, |d| d.burn_in));
        let alpha_star = self.alpha_star.unwrap_or(0.234);
        if !(alpha_star > 0.0 && alpha_star < 1.0) {
            errors.push(format!("alpha_star must lie in (0, 1), got {alpha_star}"));
        }
        let gamma = self.gamma.unwrap_or(2.0 / 3.0);
        if AdaptationSchedule::new(gamma, false).validate().is_err() {
            errors.push(format!("gamma must lie in (0.5, 1], got {gamma}"));
        }
        let proposal = match self.proposal.as_deref().map(str::parse::<ProposalSpec>) {
            None => ProposalSpec::default(),
            Some(Ok(p)) => p,
            Some(Err(e)) => {
                errors.push(format!("proposal: {e}"));
                ProposalSpec::default()
            }
        };
        let s1 = match self.s1.as_deref().map(str::parse::<InitialFactor>) {
            None => InitialFactor::Identity,
            Some(Ok(s)) => s,
            Some(Err(e)) => {
                errors.push(format!("s1: {e}"));
                InitialFactor::Identity
            }
        };
        let eigen_bounds = self.eigen_bounds.map(|[lo, hi]| (lo, hi));
        if let Some((lo, hi)) = eigen_bounds {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                errors.push(format!("eigen_bounds must satisfy 0 < lo ≤ hi < ∞, got [{lo}, {hi}]"));
            }
        }
        let am_regularization = self.am_regularization.unwrap_or(0.0);
        if !(am_regularization >= 0.0 && am_regularization.is_finite()) {
            errors.push(format!("am_regularization must be nonnegative, got {am_regularization}"));
        }
        if let Some(levels) = &self.hpd_levels {
            if levels.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
                errors.push("hpd_levels must lie in (0, 1)".into());
            }
        }
        if let Some(t) = self.hpd_threshold {
            if !(t > 0.0) {
                errors.push(format!("hpd_threshold must be positive, got {t}"));
            }
        }

        let raw_samplers = self.sampler.clone().unwrap_or_else(|| {
            vec![RawSampler {
                algorithm: "ram".into(),
                covariance_gamma: None,
                label: None,
            }]
        });
        if raw_samplers.is_empty() {
            errors.push("at least one [[sampler]] is required".into());
        }
        let mut samplers = Vec::new();
        let mut labels = BTreeSet::new();
        for (i, s) in raw_samplers.iter().enumerate() {
            let algorithm = match s.algorithm.parse::<Algorithm>() {
                Ok(a) => a,
                Err(e) => {
                    errors.push(format!("sampler {}: {e}", i + 1));
                    continue;
                }
            };
            if let Some(g) = s.covariance_gamma {
                if !algorithm.uses_covariance() {
                    errors.push(format!(
                        "sampler {}: covariance_gamma applies only to am and aswam",
                        i + 1
                    ));
                } else if AdaptationSchedule::new(g, false).validate().is_err() {
                    errors.push(format!(
                        "sampler {}: covariance_gamma must lie in (0.5, 1], got {g}",
                        i + 1
                    ));
                }
            }
            let label = s.label.clone().unwrap_or_else(|| default_label(algorithm, s.covariance_gamma));
            if label.is_empty() || label.contains(['/', '\\']) || label.starts_with('.') {
                errors.push(format!("sampler {}: label '{label}' is not a valid directory name", i + 1));
            }
            if !labels.insert(label.clone()) {
                errors.push(format!("sampler label '{label}' is used twice"));
            }
            samplers.push(SamplerEntry {
                algorithm,
                covariance_gamma: s.covariance_gamma,
                label,
            });
        }
        let checkpoint_every = self.checkpoint_every.unwrap_or(1000);

        if !errors.is_empty() {
            return Err(CliError::Validation(errors));
        }
        let config = ExperimentConfig {
            target: target.expect("no errors"),
            dim,
            samplers,
            replications,
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            thin,
            output: self.output.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT)),
            burn_in,
            iterations,
            alpha_star,
            gamma,
            scale_by_dim: self.scale_by_dim,
            proposal,
            s1,
            eigen_bounds,
            checkpoint_every,
            am_regularization,
            hpd_threshold: self.hpd_threshold,
            hpd_levels: self.hpd_levels.clone(),
            track_b: self.track_b,
        };
        // Checks that need the resolved target and initial factor.
        let mut late = Vec::new();
        match config.setup(0) {
            Ok(setup) => match config.s1.resolve(dim) {
                Ok(s1) => {
                    for entry in &config.samplers {
                        if let Err(e) = config.sampler_config(entry, &setup, &s1).validate(&setup.target) {
                            late.push(format!("{}: {e}", entry.label));
                        }
                    }
                }
                Err(CliError::Validation(v)) => late.extend(v),
                Err(e) => late.push(e.to_string()),
            },
            Err(e) => late.push(e.to_string()),
        }
        if late.is_empty() {
            Ok(config)
        } else {
            Err(CliError::Validation(late))
        }
    }
}

fn default_label(algorithm: Algorithm, covariance_gamma: Option<f64>) -> String {
    match covariance_gamma {
        Some(g) => format!("{}-cov{g}", algorithm.name()),
        None => algorithm.name().to_string(),
    }
}

/// Parses and validates a TOML configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    parse_raw(text)?.validate()
}

pub fn parse_raw(text: &str) -> Result<RawConfig, CliError> {
    toml::from_str::<RawConfig>(text).map_err(|e| {
        let (line, column) = match e.span() {
            Some(span) => line_column(text, span.start),
            None => (0, 0),
        };
        CliError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

impl ExperimentConfig {
    pub fn preset(&self) -> Option<Preset> {
        match &self.target {
            TargetSpec::Preset(p) => Some(*p),
            TargetSpec::Inline(_) => None,
        }
    }

    pub fn target_name(&self) -> String {
        match &self.target {
            TargetSpec::Preset(p) => p.kind.name().to_string(),
            TargetSpec::Inline(t) => match t {
                InlineTarget::Gaussian { .. } => "inline-gaussian".into(),
                InlineTarget::Student { .. } => "inline-student".into(),
                InlineTarget::Mixture { .. } => "inline-mixture".into(),
            },
        }
    }

    /// Target, starting point and diagnostics for replication `rep`.
    pub fn setup(&self, rep: u64) -> Result<ReplicationSetup, CliError> {
        let mut setup = match &self.target {
            TargetSpec::Preset(p) => p.setup(self.seed, rep, self.checkpoint_every)?,
            TargetSpec::Inline(t) => {
                let (target, initial_point, mean_truths) = t.build()?;
                ReplicationSetup {
                    target: Arc::new(target),
                    initial_point,
                    mean_truths,
                    diagnostics: DiagnosticsConfig {
                        checkpoint_every: self.checkpoint_every,
                        ..DiagnosticsConfig::default()
                    },
                }
            }
        };
        if let Some(t) = self.hpd_threshold {
            setup.diagnostics.hpd_threshold = Some(t);
        }
        if let Some(levels) = &self.hpd_levels {
            setup.diagnostics.hpd_levels = levels.clone();
        }
        if let Some(b) = self.track_b {
            setup.diagnostics.track_suboptimality = b;
        }
        Ok(setup)
    }

    pub fn sampler_config(
        &self,
        entry: &SamplerEntry,
        setup: &ReplicationSetup,
        s1: &ramcmc::linalg::LowerTriangularFactor,
    ) -> SamplerConfig {
        let mut c = SamplerConfig::new(entry.algorithm, setup.initial_point.clone(), s1.clone());
        let scaled = self
            .scale_by_dim
            .unwrap_or(entry.algorithm.default_schedule().dimension_scaled);
        c.schedule = AdaptationSchedule::new(self.gamma, scaled);
        c.covariance_schedule = entry
            .covariance_gamma
            .map(|g| AdaptationSchedule::new(g, false));
        c.alpha_star = self.alpha_star;
        c.eigen_bounds = self.eigen_bounds;
        c.am_regularization = self.am_regularization;
        c.burn_in = self.burn_in;
        c.iterations = self.iterations;
        c.proposal = self.proposal;
        c.diagnostics = setup.diagnostics.clone();
        c
    }
}
