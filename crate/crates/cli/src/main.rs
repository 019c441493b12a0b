use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use ramcmc::proposals::ProposalSpec;
use ramcmc::targets::TargetModel;
use ramcmc_cli::config::{parse_raw, RawSampler};
use ramcmc_cli::experiment::ReplicationRecord;
use ramcmc_cli::presets::{InitialFactor, Preset, PresetKind};
use ramcmc_cli::{list_presets, run_experiment, tools, CliError, RawConfig};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "ramcmc", version, about = "Robust adaptive Metropolis experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run replicated chains and write CSV/JSON artifacts.
    Run(RunArgs),
    /// Monte Carlo checks of the mean field.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Diagnostics for factors and stored chains.
    #[command(subcommand)]
    Diag(DiagCommand),
    /// Print the preset catalog as JSON.
    Presets,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    preset: Option<String>,
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dim: Option<usize>,
    /// Comma-separated list of ram, am, aswam, asm, rwm.
    #[arg(long, value_delimiter = ',')]
    algo: Option<Vec<String>>,
    /// Separate covariance step-size exponent for am/aswam (1 gives n⁻¹).
    #[arg(long, requires = "algo")]
    cov_gamma: Option<f64>,
    #[arg(long)]
    iters: Option<u64>,
    #[arg(long)]
    burnin: Option<u64>,
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// gaussian | student:<p>
    #[arg(long)]
    proposal: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    alpha_star: Option<f64>,
    /// ident | scaled:<c> | <matrix file>
    #[arg(long)]
    s1: Option<String>,
    /// lo,hi
    #[arg(long, value_delimiter = ',', num_args = 2)]
    eigen_bounds: Option<Vec<f64>>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    thin: Option<u64>,
    #[arg(long)]
    checkpoint_every: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct TargetArgs {
    #[arg(long, default_value = "gaussian-spherical-d")]
    preset: String,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Replication whose random target is used.
    #[arg(long, default_value_t = 0)]
    rep: u64,
}

impl TargetArgs {
    fn target(&self) -> Result<Arc<TargetModel>, CliError> {
        let kind: PresetKind = self.preset.parse()?;
        Ok(Preset::new(kind, self.dim)?.setup(self.seed, self.rep, 0)?.target)
    }
}

#[derive(Args)]
struct EstimatorArgs {
    #[command(flatten)]
    target: TargetArgs,
    #[arg(long, default_value = "ident")]
    s1: String,
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    #[arg(long, default_value = "student:1")]
    proposal: String,
    #[arg(long, default_value_t = 0.234)]
    alpha_star: f64,
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Estimate h(S) at the factor given by --s1.
    MeanField(EstimatorArgs),
    /// Locate the stable point and evaluate the Lyapunov descent at --s1.
    Lyapunov(EstimatorArgs),
    /// Estimate g(θ) on a log grid.
    G(GArgs),
}

#[derive(Args)]
struct GArgs {
    #[command(flatten)]
    target: TargetArgs,
    #[arg(long, default_value_t = 1e-3)]
    theta_min: f64,
    #[arg(long, default_value_t = 1e3)]
    theta_max: f64,
    #[arg(long, default_value_t = 10)]
    points: usize,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value = "student:1")]
    proposal: String,
}

#[derive(Subcommand)]
enum DiagCommand {
    /// Suboptimality factor of a factor against the target shape.
    B(BArgs),
    /// Fraction of stored samples outside an HPD region.
    Hpd(HpdArgs),
}

#[derive(Args)]
struct BArgs {
    #[command(flatten)]
    target: TargetArgs,
    #[arg(long, conflicts_with = "summary")]
    s1: Option<String>,
    /// Replication JSON; uses its final factor, target, seed and replication.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args)]
struct HpdArgs {
    #[command(flatten)]
    target: TargetArgs,
    #[arg(long)]
    csv: PathBuf,
    /// Quadratic-form threshold; defaults to the --level quantile.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, default_value_t = 0.9)]
    level: f64,
    /// Ignore rows with iteration index ≤ skip.
    #[arg(long, default_value_t = 0)]
    skip: u64,
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("reports serialize"));
}

fn proposal(s: &str) -> Result<ProposalSpec, CliError> {
    s.parse().map_err(|e: ramcmc::Error| CliError::Validation(vec![format!("proposal: {e}")]))
}

fn run(args: RunArgs) -> Result<(), CliError> {
    if let Some(n) = args.threads {
        #[cfg(feature = "parallel")]
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(vec![format!("threads: {e}")]))?;
        #[cfg(not(feature = "parallel"))]
        let _ = n;
    }
    let file = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            parse_raw(&text)?
        }
        None => RawConfig::default(),
    };
    let flags = RawConfig {
        preset: args.preset,
        dim: args.dim,
        replications: args.reps,
        seed: args.seed,
        thin: args.thin,
        output: args.out,
        burn_in: args.burnin,
        iterations: args.iters,
        alpha_star: args.alpha_star,
        gamma: args.gamma,
        proposal: args.proposal,
        s1: args.s1,
        eigen_bounds: args.eigen_bounds.map(|v| [v[0], v[1]]),
        checkpoint_every: args.checkpoint_every,
        sampler: args.algo.map(|algos| {
            algos
                .into_iter()
                .map(|a| {
                    let covariance = matches!(a.as_str(), "am" | "aswam");
                    RawSampler {
                        algorithm: a,
                        covariance_gamma: args.cov_gamma.filter(|_| covariance),
                        label: None,
                    }
                })
                .collect()
        }),
        ..RawConfig::default()
    };
    let config = file.merge(flags).validate()?;
    let agg = run_experiment(&config)?;
    for s in &agg.samplers {
        let mut line = format!(
            "{}: {} replications, acceptance median {:.4}",
            s.label, s.replications, s.acceptance_rate.median
        );
        if let Some(h) = &s.hpd_outside_fraction {
            line += &format!(", outside-HPD median {:.4}", h.median);
        }
        if let Some(c) = &s.hpd_coverage_rmse {
            line += &format!(", coverage RMSE {:.3}", c.overall);
        }
        if let Some(m) = &s.mean_rmse {
            line += &format!(", mean RMSE {:.4}", m.overall);
        }
        println!("{line}");
    }
    println!("wrote {}", config.output.join("aggregate.json").display());
    Ok(())
}

fn verify(cmd: VerifyCommand) -> Result<(), CliError> {
    match cmd {
        VerifyCommand::MeanField(a) => {
            let target = a.target.target()?;
            let s = a.s1.parse::<InitialFactor>()?.resolve(target.dim())?;
            print_json(&tools::verify_mean_field(
                &target,
                &s,
                &proposal(&a.proposal)?,
                a.alpha_star,
                a.samples,
                a.target.seed,
            )?);
        }
        VerifyCommand::Lyapunov(a) => {
            let target = a.target.target()?;
            let s = a.s1.parse::<InitialFactor>()?.resolve(target.dim())?;
            print_json(&tools::verify_lyapunov(
                &target,
                &s,
                &proposal(&a.proposal)?,
                a.alpha_star,
                a.samples,
                a.target.seed,
            )?);
        }
        VerifyCommand::G(a) => {
            if !(a.theta_min > 0.0 && a.theta_min < a.theta_max) || a.points == 0 {
                return Err(CliError::Validation(vec![
                    "need 0 < theta-min < theta-max and at least one point".into(),
                ]));
            }
            let target = a.target.target()?;
            let grid = tools::log_grid(a.theta_min, a.theta_max, a.points);
            print_json(&tools::verify_g(
                &target,
                &proposal(&a.proposal)?,
                &grid,
                a.samples,
                a.target.seed,
            )?);
        }
    }
    Ok(())
}

fn diag(cmd: DiagCommand) -> Result<(), CliError> {
    match cmd {
        DiagCommand::B(a) => {
            let (target, s) = match (&a.summary, &a.s1) {
                (Some(path), _) => {
                    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                    let rec: ReplicationRecord = serde_json::from_str(&text).map_err(|e| CliError::Io {
                        path: path.clone(),
                        message: e.to_string(),
                    })?;
                    let s = rec.summary.factor_final;
                    let preset = Preset::new(rec.target.parse()?, Some(s.dim()))?;
                    (preset.setup(rec.seed, rec.replication, 0)?.target, s)
                }
                (None, s1) => {
                    let target = a.target.target()?;
                    let s = s1
                        .as_deref()
                        .unwrap_or("ident")
                        .parse::<InitialFactor>()?
                        .resolve(target.dim())?;
                    (target, s)
                }
            };
            print_json(&tools::diag_b(&target, &s)?);
        }
        DiagCommand::Hpd(a) => {
            let target = a.target.target()?;
            let threshold = match a.threshold {
                Some(t) => t,
                None => target
                    .quadratic_law()
                    .ok_or(ramcmc::Error::MissingMetadata)?
                    .quantile(a.level),
            };
            let samples = tools::read_chain_csv(&a.csv, target.dim(), a.skip)?;
            print_json(&tools::diag_hpd(&target, &samples, threshold)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Verify(c) => verify(c),
        Command::Diag(c) => diag(c),
        Command::Presets => {
            print_json(&list_presets());
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", serde_json::to_string_pretty(&e.report()).expect("reports serialize"));
            match e {
                CliError::Parse { .. } | CliError::Validation(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
