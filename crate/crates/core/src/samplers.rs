//! Random-walk Metropolis with the RAM shape adaptation and the AM, ASWAM and
//! ASM baselines, plus the chain driver.
//!
//! Index convention: the chain starts at `X₁ = x₁` with `S₁ = s₁`. The step
//! that produces `X_n` (n ≥ 2) adapts with step size `η_n`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::{suboptimality_b, Checkpoint, ChainSummary};
use crate::error::{Error, Result};
use crate::linalg::{
    cholesky_factorize, norm, rank_one_update_or_refactor, symmetric_eigenvalues,
    LowerTriangularFactor, SymmetricMatrix,
};
use crate::proposals::{IncrementSampler, ProposalSpec, RngStream};
use crate::targets::{acceptance_from_logs, TargetModel};

/// Scale of the AM proposal, `2.4/√d`.
pub fn am_scale(dim: usize) -> f64 {
    2.4 / (dim as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    #[serde(rename = "rwm")]
    FixedRwm,
    Ram,
    Am,
    Aswam,
    Asm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Ram,
        Algorithm::Am,
        Algorithm::Aswam,
        Algorithm::Asm,
        Algorithm::FixedRwm,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::FixedRwm => "rwm",
            Algorithm::Ram => "ram",
            Algorithm::Am => "am",
            Algorithm::Aswam => "aswam",
            Algorithm::Asm => "asm",
        }
    }

    /// Default step sizes: `min{1, d·n^{−2/3}}` for RAM, `n^{−2/3}` otherwise.
    pub fn default_schedule(&self) -> AdaptationSchedule {
        match self {
            Algorithm::Ram => AdaptationSchedule::new(2.0 / 3.0, true),
            _ => AdaptationSchedule::new(2.0 / 3.0, false),
        }
    }

    /// AM and ASWAM track the empirical mean and covariance.
    pub fn uses_covariance(&self) -> bool {
        matches!(self, Algorithm::Am | Algorithm::Aswam)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ram" => Ok(Algorithm::Ram),
            "am" => Ok(Algorithm::Am),
            "aswam" => Ok(Algorithm::Aswam),
            "asm" => Ok(Algorithm::Asm),
            "rwm" => Ok(Algorithm::FixedRwm),
            other => Err(Error::InvalidArgument(format!(
                "unknown algorithm '{other}', expected ram|am|aswam|asm|rwm"
            ))),
        }
    }
}

/// Step sizes `η_n = n^{−γ}`, or `min{1, d·n^{−γ}}` when dimension scaled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptationSchedule {
    pub gamma: f64,
    pub dimension_scaled: bool,
}

impl AdaptationSchedule {
    pub fn new(gamma: f64, dimension_scaled: bool) -> Self {
        Self {
            gamma,
            dimension_scaled,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.5 && self.gamma <= 1.0) {
            return Err(Error::Config(format!(
                "step size exponent must lie in (1/2, 1], got {}",
                self.gamma
            )));
        }
        Ok(())
    }

    pub fn step_size(&self, n: u64, dim: usize) -> f64 {
        step_size(self, n, dim)
    }
}

pub fn step_size(schedule: &AdaptationSchedule, n: u64, dim: usize) -> f64 {
    let base = (n.max(1) as f64).powf(-schedule.gamma);
    if schedule.dimension_scaled {
        (dim as f64 * base).min(1.0)
    } else {
        base.min(1.0)
    }
}

/// Summary statistics collected alongside the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsConfig {
    /// Samples with HPD quadratic form above this count as "outside".
    pub hpd_threshold: Option<f64>,
    /// HPD probability levels whose empirical coverage is tracked.
    pub hpd_levels: Vec<f64>,
    /// Track the suboptimality factor `b` against the target shape at checkpoints.
    pub track_suboptimality: bool,
    /// Iterations between factor checkpoints; 0 disables them.
    pub checkpoint_every: u64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            hpd_threshold: None,
            hpd_levels: Vec::new(),
            track_suboptimality: false,
            checkpoint_every: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub algorithm: Algorithm,
    pub alpha_star: f64,
    pub initial_factor: LowerTriangularFactor,
    pub initial_point: Vec<f64>,
    pub schedule: AdaptationSchedule,
    /// Step sizes for the AM/ASWAM mean and covariance recursion when they
    /// differ from `schedule` (e.g. `η_n = n⁻¹`).
    pub covariance_schedule: Option<AdaptationSchedule>,
    pub eigen_bounds: Option<(f64, f64)>,
    pub am_regularization: f64,
    pub burn_in: u64,
    pub iterations: u64,
    pub proposal: ProposalSpec,
    pub diagnostics: DiagnosticsConfig,
}

impl SamplerConfig {
    pub fn new(algorithm: Algorithm, initial_point: Vec<f64>, initial_factor: LowerTriangularFactor) -> Self {
        Self {
            algorithm,
            alpha_star: 0.234,
            schedule: algorithm.default_schedule(),
            initial_factor,
            initial_point,
            covariance_schedule: None,
            eigen_bounds: None,
            am_regularization: 0.0,
            burn_in: 100_000,
            iterations: 400_000,
            proposal: ProposalSpec::default(),
            diagnostics: DiagnosticsConfig::default(),
        }
    }

    pub fn dim(&self) -> usize {
        self.initial_point.len()
    }

    fn covariance_step_schedule(&self) -> &AdaptationSchedule {
        self.covariance_schedule.as_ref().unwrap_or(&self.schedule)
    }

    pub fn validate(&self, target: &TargetModel) -> Result<()> {
        let d = self.dim();
        if d != target.dim() || self.initial_factor.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: target.dim(),
                found: if d != target.dim() { d } else { self.initial_factor.dim() },
            });
        }
        if !(self.alpha_star > 0.0 && self.alpha_star < 1.0) {
            return Err(Error::Config(format!(
                "target acceptance must lie in (0, 1), got {}",
                self.alpha_star
            )));
        }
        self.schedule.validate()?;
        if let Some(s) = &self.covariance_schedule {
            s.validate()?;
        }
        if !(self.am_regularization >= 0.0) {
            return Err(Error::Config("AM regularization must be nonnegative".into()));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be positive".into()));
        }
        if let Some((lo, hi)) = self.eigen_bounds {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::Config(format!(
                    "eigenvalue bounds must satisfy 0 < lo ≤ hi < ∞, got ({lo}, {hi})"
                )));
            }
            let ev = symmetric_eigenvalues(&self.initial_factor.product())?;
            if ev[0] < lo || ev[d - 1] > hi {
                return Err(Error::Config(format!(
                    "initial factor eigenvalues [{}, {}] fall outside the bounds [{lo}, {hi}]",
                    ev[0],
                    ev[d - 1]
                )));
            }
        }
        let lp = target.log_density(&self.initial_point)?;
        if !(lp > f64::NEG_INFINITY) {
            return Err(Error::Config("initial point has zero target density".into()));
        }
        Ok(())
    }
}

/// Running mean and covariance for AM and ASWAM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmStatistics {
    pub mean: Vec<f64>,
    pub covariance: SymmetricMatrix,
}

#[derive(Debug, Clone)]
pub struct AmUpdate {
    pub statistics: AmStatistics,
    /// `(2.4/√d) · chol(cov + εI)`.
    pub factor: LowerTriangularFactor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    /// Index of the current point `X_n`.
    pub n: u64,
    pub x: Vec<f64>,
    pub log_density: f64,
    pub factor: LowerTriangularFactor,
    pub am: Option<AmStatistics>,
    pub log_theta: f64,
    pub accept_count: u64,
    pub last_alpha: f64,
}

impl ChainState {
    pub fn initial(config: &SamplerConfig, target: &TargetModel) -> Result<Self> {
        let d = config.dim();
        let log_density = target.log_density(&config.initial_point)?;
        let (am, log_theta) = match config.algorithm {
            a if a.uses_covariance() => {
                let theta = am_scale(d);
                let stats = AmStatistics {
                    mean: config.initial_point.clone(),
                    covariance: config.initial_factor.product().scaled(1.0 / (theta * theta)),
                };
                let log_theta = if config.algorithm == Algorithm::Aswam { theta.ln() } else { 0.0 };
                (Some(stats), log_theta)
            }
            _ => (None, 0.0),
        };
        Ok(Self {
            n: 1,
            x: config.initial_point.clone(),
            log_density,
            factor: config.initial_factor.clone(),
            am,
            log_theta,
            accept_count: 0,
            last_alpha: 1.0,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetropolisOutcome {
    pub proposal: Vec<f64>,
    pub increment: Vec<f64>,
    pub alpha: f64,
    pub accepted: bool,
    pub next: Vec<f64>,
    pub next_log_density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub n: u64,
    pub x: Vec<f64>,
    pub alpha: f64,
    pub accepted: bool,
    pub factor_diagonal: Vec<f64>,
}

/// Proposal `y = x + S u` accepted iff `w ≤ α`, for caller-supplied `u` and `w`.
pub fn metropolis_step_with(
    state: &ChainState,
    target: &TargetModel,
    increment: Vec<f64>,
    w: f64,
) -> Result<MetropolisOutcome> {
    if !(state.log_density > f64::NEG_INFINITY) {
        return Err(Error::InvalidState("current point has zero target density".into()));
    }
    let su = state.factor.mul_vec(&increment);
    let proposal: Vec<f64> = state.x.iter().zip(&su).map(|(x, s)| x + s).collect();
    let log_y = target.log_density(&proposal)?;
    let alpha = if log_y.is_nan() {
        0.0
    } else {
        acceptance_from_logs(log_y, state.log_density)
    };
    let accepted = w <= alpha && alpha > 0.0;
    let (next, next_log_density) = if accepted {
        (proposal.clone(), log_y)
    } else {
        (state.x.clone(), state.log_density)
    };
    Ok(MetropolisOutcome {
        proposal,
        increment,
        alpha,
        accepted,
        next,
        next_log_density,
    })
}

/// One random-walk Metropolis step with fresh `U ∼ q` and `W ∼ U(0,1)`.
pub fn metropolis_step(
    state: &ChainState,
    target: &TargetModel,
    spec: &ProposalSpec,
    rng: &mut RngStream,
) -> Result<MetropolisOutcome> {
    let u = spec.sampler(state.x.len()).sample(rng);
    let w = rng.uniform();
    metropolis_step_with(state, target, u, w)
}

/// RAM shape update: the Cholesky factor of `S (I + η(α−α*) u uᵀ/‖u‖²) Sᵀ`.
pub fn ram_adapt(
    s: &LowerTriangularFactor,
    u: &[f64],
    alpha: f64,
    eta: f64,
    alpha_star: f64,
) -> Result<LowerTriangularFactor> {
    let un = norm(u);
    let a = eta * (alpha - alpha_star);
    if un == 0.0 || a == 0.0 {
        return Ok(s.clone());
    }
    let unit: Vec<f64> = u.iter().map(|x| x / un).collect();
    let z = s.mul_vec(&unit);
    rank_one_update_or_refactor(s, &z, a)
}

/// [`ram_adapt`] that keeps `S` whenever the candidate's `S Sᵀ` spectrum leaves
/// `[lower, upper]`.
pub fn ram_adapt_bounded(
    s: &LowerTriangularFactor,
    u: &[f64],
    alpha: f64,
    eta: f64,
    alpha_star: f64,
    lower: f64,
    upper: f64,
) -> Result<LowerTriangularFactor> {
    let candidate = ram_adapt(s, u, alpha, eta, alpha_star)?;
    if candidate == *s {
        return Ok(candidate);
    }
    let ev = symmetric_eigenvalues(&candidate.product())?;
    if ev[0] >= lower && ev[ev.len() - 1] <= upper {
        Ok(candidate)
    } else {
        Ok(s.clone())
    }
}

impl AmStatistics {
    /// `m' = m + η(x − m)`, `C' = C + η((x − m')(x − m')ᵀ − C)`.
    pub fn updated(&self, new_x: &[f64], eta: f64) -> AmStatistics {
        let mean: Vec<f64> = self
            .mean
            .iter()
            .zip(new_x)
            .map(|(m, x)| m + eta * (x - m))
            .collect();
        let diff: Vec<f64> = new_x.iter().zip(&mean).map(|(x, m)| x - m).collect();
        let covariance = SymmetricMatrix::from_fn(self.mean.len(), |i, j| {
            let c = self.covariance.get(i, j);
            c + eta * (diff[i] * diff[j] - c)
        });
        AmStatistics { mean, covariance }
    }

    /// `chol(C + εI)`; a failure means `ε` is too small for the current estimate.
    pub fn cholesky(&self, epsilon: f64) -> Result<LowerTriangularFactor> {
        cholesky_factorize(&self.covariance.shifted(epsilon))
    }
}

/// AM recursion followed by the scaled Cholesky factor of the regularized covariance.
pub fn am_adapt(
    stats: &AmStatistics,
    new_x: &[f64],
    eta: f64,
    epsilon: f64,
    dim: usize,
) -> Result<AmUpdate> {
    let statistics = stats.updated(new_x, eta);
    let factor = statistics.cholesky(epsilon)?.scaled(am_scale(dim))?;
    Ok(AmUpdate { statistics, factor })
}

/// `log θ + (η/2)(α − α*)`.
pub fn scale_adapt(log_theta: f64, alpha: f64, eta: f64, alpha_star: f64) -> f64 {
    log_theta + 0.5 * eta * (alpha - alpha_star)
}

/// Applies the configured adaptation rule after a Metropolis step producing `X_{n+1}`.
fn adapt(state: &mut ChainState, config: &SamplerConfig, outcome: &MetropolisOutcome) -> Result<()> {
    let d = state.x.len();
    let n = state.n + 1;
    let eta = config.schedule.step_size(n, d);
    match config.algorithm {
        Algorithm::FixedRwm => {}
        Algorithm::Ram => {
            state.factor = match config.eigen_bounds {
                Some((lo, hi)) => ram_adapt_bounded(
                    &state.factor,
                    &outcome.increment,
                    outcome.alpha,
                    eta,
                    config.alpha_star,
                    lo,
                    hi,
                )?,
                None => ram_adapt(
                    &state.factor,
                    &outcome.increment,
                    outcome.alpha,
                    eta,
                    config.alpha_star,
                )?,
            };
        }
        Algorithm::Asm => {
            state.log_theta = scale_adapt(state.log_theta, outcome.alpha, eta, config.alpha_star);
            state.factor = config.initial_factor.scaled(state.log_theta.exp())?;
        }
        Algorithm::Am => {
            let eta_cov = config.covariance_step_schedule().step_size(n, d);
            let stats = state.am.as_ref().expect("AM statistics initialized");
            let update = am_adapt(stats, &outcome.next, eta_cov, config.am_regularization, d)?;
            state.am = Some(update.statistics);
            state.factor = update.factor;
        }
        Algorithm::Aswam => {
            let eta_cov = config.covariance_step_schedule().step_size(n, d);
            state.log_theta = scale_adapt(state.log_theta, outcome.alpha, eta, config.alpha_star);
            let stats = state
                .am
                .as_ref()
                .expect("AM statistics initialized")
                .updated(&outcome.next, eta_cov);
            state.factor = stats
                .cholesky(config.am_regularization)?
                .scaled(state.log_theta.exp())?;
            state.am = Some(stats);
        }
    }
    Ok(())
}

/// A chain bound to its configuration and target.
pub struct Chain<'a> {
    config: &'a SamplerConfig,
    target: &'a TargetModel,
    sampler: IncrementSampler,
    state: ChainState,
}

impl<'a> Chain<'a> {
    pub fn new(config: &'a SamplerConfig, target: &'a TargetModel) -> Result<Self> {
        config.validate(target)?;
        Ok(Self {
            sampler: config.proposal.sampler(config.dim()),
            state: ChainState::initial(config, target)?,
            config,
            target,
        })
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    /// Full iteration: draw `U_n`, `W_n`, move and adapt.
    pub fn step(&mut self, rng: &mut RngStream) -> Result<MetropolisOutcome> {
        let u = self.sampler.sample(rng);
        let w = rng.uniform();
        self.step_with(u, w)
    }

    /// Full iteration with caller-supplied driving randomness.
    pub fn step_with(&mut self, increment: Vec<f64>, w: f64) -> Result<MetropolisOutcome> {
        let outcome = metropolis_step_with(&self.state, self.target, increment, w)?;
        adapt(&mut self.state, self.config, &outcome)?;
        let st = &mut self.state;
        st.n += 1;
        st.last_alpha = outcome.alpha;
        if outcome.accepted {
            st.accept_count += 1;
            st.x.clone_from(&outcome.next);
            st.log_density = outcome.next_log_density;
        }
        Ok(outcome)
    }
}

/// Consumer of per-iteration records.
pub trait RecordSink {
    /// Whether the record for iteration `n` is wanted; skipped records are never built.
    fn wants(&self, _n: u64) -> bool {
        true
    }

    fn record(&mut self, record: &IterationRecord) -> Result<()>;
}

/// Discards everything.
pub struct NullSink;

impl RecordSink for NullSink {
    fn wants(&self, _n: u64) -> bool {
        false
    }

    fn record(&mut self, _record: &IterationRecord) -> Result<()> {
        Ok(())
    }
}

/// Keeps every `thin`-th record in memory.
pub struct VecSink {
    pub thin: u64,
    pub records: Vec<IterationRecord>,
}

impl VecSink {
    pub fn new(thin: u64) -> Self {
        Self {
            thin: thin.max(1),
            records: Vec::new(),
        }
    }
}

impl RecordSink for VecSink {
    fn wants(&self, n: u64) -> bool {
        n.is_multiple_of(self.thin)
    }

    fn record(&mut self, record: &IterationRecord) -> Result<()> {
        self.records.push(record.clone());
        Ok(())
    }
}

/// CSV writer with columns `n,accepted,alpha,x_1..x_d,sdiag_1..sdiag_d`.
pub struct CsvSink<W: Write> {
    out: W,
    thin: u64,
    dim: usize,
    header_written: bool,
}

impl<W: Write> CsvSink<W> {
    pub fn new(out: W, dim: usize, thin: u64) -> Self {
        Self {
            out,
            thin: thin.max(1),
            dim,
            header_written: false,
        }
    }

    pub fn header(dim: usize) -> String {
        let mut cols = vec!["n".to_string(), "accepted".into(), "alpha".into()];
        cols.extend((1..=dim).map(|i| format!("x_{i}")));
        cols.extend((1..=dim).map(|i| format!("sdiag_{i}")));
        cols.join(",")
    }

    pub fn into_inner(self) -> W {
        self.out
    }

    fn io(e: std::io::Error) -> Error {
        Error::InvalidState(format!("writing chain CSV: {e}"))
    }
}

impl<W: Write> RecordSink for CsvSink<W> {
    fn wants(&self, n: u64) -> bool {
        n.is_multiple_of(self.thin)
    }

    fn record(&mut self, r: &IterationRecord) -> Result<()> {
        if !self.header_written {
            writeln!(self.out, "{}", Self::header(self.dim)).map_err(Self::io)?;
            self.header_written = true;
        }
        let mut line = format!("{},{},{}", r.n, u8::from(r.accepted), r.alpha);
        for v in r.x.iter().chain(&r.factor_diagonal) {
            line.push(',');
            line.push_str(&v.to_string());
        }
        writeln!(self.out, "{line}").map_err(Self::io)
    }
}

/// Runs `burn_in + iterations` steps; summary statistics cover the
/// post-burn-in iterations only.
pub fn run_chain(
    config: &SamplerConfig,
    target: &TargetModel,
    rng: &mut RngStream,
    sink: &mut dyn RecordSink,
) -> Result<ChainSummary> {
    let mut chain = Chain::new(config, target)?;
    let d = config.dim();
    let diag = &config.diagnostics;
    let meta = target.metadata();
    if (diag.hpd_threshold.is_some() || !diag.hpd_levels.is_empty() || diag.track_suboptimality)
        && meta.is_none()
    {
        return Err(Error::MissingMetadata);
    }
    let level_thresholds: Vec<f64> = if diag.hpd_levels.is_empty() {
        Vec::new()
    } else {
        let law = target.quadratic_law().ok_or(Error::MissingMetadata)?;
        diag.hpd_levels.iter().map(|&p| law.quantile(p)).collect()
    };
    let needs_quadratic = diag.hpd_threshold.is_some() || !level_thresholds.is_empty();

    let total = config.burn_in + config.iterations;
    let mut sums = vec![0.0; d];
    let mut accepted_after_burn_in = 0u64;
    let mut outside = 0u64;
    let mut inside_levels = vec![0u64; level_thresholds.len()];
    let mut checkpoints = Vec::new();

    for iter in 1..=total {
        let outcome = chain
            .step(rng)
            .map_err(|e| Error::Step {
                iteration: iter,
                source: Box::new(e),
            })?;
        let state = chain.state();
        if iter > config.burn_in {
            if outcome.accepted {
                accepted_after_burn_in += 1;
            }
            for (s, x) in sums.iter_mut().zip(&state.x) {
                *s += x;
            }
            if needs_quadratic {
                let q = meta.expect("checked above").quadratic(&state.x);
                if let Some(t) = diag.hpd_threshold {
                    if q > t {
                        outside += 1;
                    }
                }
                for (count, &t) in inside_levels.iter_mut().zip(&level_thresholds) {
                    if q <= t {
                        *count += 1;
                    }
                }
            }
        }
        if sink.wants(iter) {
            sink.record(&IterationRecord {
                n: iter,
                x: state.x.clone(),
                alpha: outcome.alpha,
                accepted: outcome.accepted,
                factor_diagonal: state.factor.diagonal(),
            })?;
        }
        if diag.checkpoint_every > 0 && iter % diag.checkpoint_every == 0 {
            let b = if diag.track_suboptimality {
                Some(suboptimality_b(
                    &state.factor.product(),
                    &meta.expect("checked above").shape,
                )?)
            } else {
                None
            };
            checkpoints.push(Checkpoint {
                n: iter,
                factor_diagonal: state.factor.diagonal(),
                b,
            });
        }
    }

    let count = config.iterations as f64;
    let state = chain.state();
    Ok(ChainSummary {
        algorithm: config.algorithm,
        burn_in: config.burn_in,
        iterations: config.iterations,
        acceptance_rate: accepted_after_burn_in as f64 / count,
        coordinate_means: sums.iter().map(|s| s / count).collect(),
        hpd_outside_fraction: diag.hpd_threshold.map(|_| outside as f64 / count),
        hpd_coverage: diag
            .hpd_levels
            .iter()
            .zip(&inside_levels)
            .map(|(&level, &c)| (level, c as f64 / count))
            .collect(),
        checkpoints,
        factor_final: state.factor.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn std_gauss(d: usize) -> TargetModel {
        TargetModel::gaussian(vec![0.0; d], SymmetricMatrix::identity(d)).unwrap()
    }

    #[test]
    fn step_size_examples() {
        let s = AdaptationSchedule::new(2.0 / 3.0, true);
        assert_relative_eq!(step_size(&s, 8, 2), 0.5, epsilon = 1e-15);
        assert_eq!(step_size(&s, 1, 1), 1.0);
        assert_eq!(step_size(&s, 1, 7), 1.0);
        let u = AdaptationSchedule::new(2.0 / 3.0, false);
        assert_relative_eq!(step_size(&u, 1000, 5), 0.01, epsilon = 1e-15);
        let mut prev = 1.0;
        for n in 1..500 {
            let e = step_size(&s, n, 3);
            assert!(e <= prev && e > 0.0);
            prev = e;
        }
    }

    #[test]
    fn schedule_validation() {
        assert!(AdaptationSchedule::new(0.5, false).validate().is_err());
        assert!(AdaptationSchedule::new(1.1, false).validate().is_err());
        assert!(AdaptationSchedule::new(1.0, false).validate().is_ok());
    }

    #[test]
    fn forced_accept_and_reject() {
        let t = std_gauss(2);
        let config = SamplerConfig::new(Algorithm::FixedRwm, vec![0.0; 2], LowerTriangularFactor::identity(2));
        let state = ChainState::initial(&config, &t).unwrap();
        let out = metropolis_step_with(&state, &t, vec![0.5, -0.25], 0.0).unwrap();
        assert!(out.accepted);
        assert_eq!(out.next, vec![0.5, -0.25]);

        let boxed = TargetModel::custom(
            2,
            std::sync::Arc::new(|x: &[f64]| if x[0] < 1.0 { 0.0 } else { f64::NEG_INFINITY }),
            None,
        )
        .unwrap();
        let state = ChainState::initial(&config, &boxed).unwrap();
        let out = metropolis_step_with(&state, &boxed, vec![2.0, 0.0], 0.0).unwrap();
        assert_eq!(out.alpha, 0.0);
        assert!(!out.accepted);
        assert_eq!(out.next, vec![0.0, 0.0]);
    }

    #[test]
    fn tie_accepts() {
        let t = std_gauss(1);
        let config = SamplerConfig::new(Algorithm::FixedRwm, vec![0.0], LowerTriangularFactor::identity(1));
        let state = ChainState::initial(&config, &t).unwrap();
        let alpha = (-0.5_f64).exp();
        let out = metropolis_step_with(&state, &t, vec![1.0], alpha).unwrap();
        assert_eq!(out.alpha, alpha);
        assert!(out.accepted);
    }

    #[test]
    fn ram_adapt_examples() {
        let s = LowerTriangularFactor::from_rows(&[vec![1.2, 0.0], vec![0.3, 0.9]]).unwrap();
        assert_eq!(ram_adapt(&s, &[0.3, 1.0], 0.234, 0.7, 0.234).unwrap(), s);
        assert_eq!(ram_adapt(&s, &[0.0, 0.0], 1.0, 0.7, 0.234).unwrap(), s);

        let one = LowerTriangularFactor::identity(1);
        let s1 = ram_adapt(&one, &[0.7], 1.0, 1.0, 0.234).unwrap();
        let expected = (0.5 * (1.0_f64 + 1.0 * (1.0 - 0.234)).ln()).exp();
        assert_relative_eq!(s1.get(0, 0), expected, epsilon = 1e-15);
        assert_relative_eq!(s1.get(0, 0), 1.766_f64.sqrt(), epsilon = 1e-15);

        // η(α − α*) = 0.8 along e1.
        let id = LowerTriangularFactor::identity(2);
        let s2 = ram_adapt(&id, &[2.0, 0.0], 1.0, 0.8 / (1.0 - 0.234), 0.234).unwrap();
        assert_relative_eq!(s2.get(0, 0), 1.8_f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(s2.get(1, 1), 1.0, epsilon = 1e-14);
        assert_relative_eq!(
            crate::linalg::directional_radius(&s2, &[1.0, 0.0]).unwrap(),
            1.8_f64.sqrt(),
            epsilon = 1e-14
        );
        assert_relative_eq!(
            crate::linalg::directional_radius(&s2, &[0.0, 1.0]).unwrap(),
            1.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn bounded_rejects_growth_past_upper_bound() {
        let lmax: f64 = 4.0;
        let s = LowerTriangularFactor::from_diagonal(&[lmax.sqrt(), lmax.sqrt()]).unwrap();
        let out = ram_adapt_bounded(&s, &[1.0, 0.0], 1.0, 0.5, 0.234, 0.5, lmax).unwrap();
        assert_eq!(out, s);
        // Shrinking stays inside.
        let shrink = ram_adapt_bounded(&s, &[1.0, 0.0], 0.0, 0.5, 0.234, 0.5, lmax).unwrap();
        assert_eq!(shrink, ram_adapt(&s, &[1.0, 0.0], 0.0, 0.5, 0.234).unwrap());
        let same = ram_adapt_bounded(&s, &[1.0, 0.0], 0.234, 0.5, 0.234, 0.5, lmax).unwrap();
        assert_eq!(same, s);
    }

    #[test]
    fn am_adapt_examples() {
        let stats = AmStatistics {
            mean: vec![1.0, -1.0],
            covariance: SymmetricMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap(),
        };
        let up = am_adapt(&stats, &[1.0, -1.0], 0.25, 0.0, 2).unwrap();
        assert_eq!(up.statistics.mean, stats.mean);
        assert!(up.statistics.covariance.sub(&stats.covariance.scaled(0.75)).frobenius_norm() < 1e-15);

        let up = stats.updated(&[3.0, 4.0], 1.0);
        assert_eq!(up.mean, vec![3.0, 4.0]);
        assert_eq!(up.covariance, SymmetricMatrix::zeros(2));
        assert!(matches!(
            am_adapt(&stats, &[3.0, 4.0], 1.0, 0.0, 2),
            Err(Error::NotPositiveDefinite { .. })
        ));
        let reg = am_adapt(&stats, &[3.0, 4.0], 1.0, 0.01, 2).unwrap();
        assert_relative_eq!(reg.factor.get(0, 0), am_scale(2) * 0.1, epsilon = 1e-15);
    }

    #[test]
    fn am_recursion_with_harmonic_steps_recovers_covariance() {
        let sigma = SymmetricMatrix::from_rows(&[vec![2.0, 0.6], vec![0.6, 0.5]]).unwrap();
        let t = TargetModel::gaussian(vec![0.0; 2], sigma.clone()).unwrap();
        let mut rng = RngStream::new(17, 0);
        let mut stats = AmStatistics {
            mean: vec![0.0; 2],
            covariance: SymmetricMatrix::identity(2),
        };
        for n in 1..=100_000u64 {
            let x = t.sample_exact(&mut rng).unwrap();
            stats = stats.updated(&x, 1.0 / n as f64);
        }
        let rel = stats.covariance.sub(&sigma).frobenius_norm() / sigma.frobenius_norm();
        assert!(rel < 0.05, "relative error {rel}");
    }

    #[test]
    fn scale_adapt_examples() {
        assert_eq!(scale_adapt(0.3, 0.234, 0.5, 0.234), 0.3);
        assert_relative_eq!(scale_adapt(0.0, 1.0, 0.5, 0.234), 0.1915, epsilon = 1e-15);
        let mut lt = 0.0;
        for n in 1..20 {
            let next = scale_adapt(lt, 0.0, 1.0 / n as f64, 0.234);
            assert!(next < lt);
            lt = next;
        }
    }

    #[test]
    fn empty_run_rejected() {
        let t = std_gauss(1);
        let mut config = SamplerConfig::new(Algorithm::FixedRwm, vec![0.0], LowerTriangularFactor::identity(1));
        config.iterations = 0;
        let err = run_chain(&config, &t, &mut RngStream::new(0, 0), &mut NullSink).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn config_validation() {
        let t = std_gauss(2);
        let mut c = SamplerConfig::new(Algorithm::Ram, vec![0.0; 2], LowerTriangularFactor::identity(2));
        assert!(c.validate(&t).is_ok());
        c.eigen_bounds = Some((2.0, 3.0));
        assert!(matches!(c.validate(&t), Err(Error::Config(_))));
        c.eigen_bounds = None;
        c.alpha_star = 1.0;
        assert!(c.validate(&t).is_err());
        c.alpha_star = 0.234;
        c.initial_point = vec![0.0; 3];
        assert!(matches!(c.validate(&t), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn fixed_rwm_ergodic_mean() {
        let t = std_gauss(2);
        let mut c = SamplerConfig::new(Algorithm::FixedRwm, vec![0.0; 2], LowerTriangularFactor::identity(2));
        c.burn_in = 0;
        c.iterations = 100_000;
        let s = run_chain(&c, &t, &mut RngStream::new(21, 0), &mut NullSink).unwrap();
        for m in &s.coordinate_means {
            assert!(m.abs() < 0.05, "mean {m}");
        }
    }

    #[test]
    fn csv_sink_format_and_thinning() {
        let t = std_gauss(2);
        let mut c = SamplerConfig::new(Algorithm::Ram, vec![0.0; 2], LowerTriangularFactor::identity(2));
        c.burn_in = 5;
        c.iterations = 15;
        let mut sink = CsvSink::new(Vec::new(), 2, 10);
        run_chain(&c, &t, &mut RngStream::new(1, 0), &mut sink).unwrap();
        let text = String::from_utf8(sink.into_inner()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,accepted,alpha,x_1,x_2,sdiag_1,sdiag_2");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("10,"));
        assert!(lines[2].starts_with("20,"));
        assert_eq!(lines[1].split(',').count(), 7);
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("nuts".parse::<Algorithm>().is_err());
    }
}
