//! Replicated experiment runs, their on-disk artifacts and the aggregate
//! summary.
//!
//! Layout under the output directory:
//!
//! ```text
//! <out>/<label>/rep-0000.csv    thinned chain
//! <out>/<label>/rep-0000.json   ReplicationRecord
//! <out>/aggregate.json          Aggregate
//! ```
//!
//! Replication `r` drives its chain from stream `r` of the master seed, so any
//! replication can be rerun alone.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ramcmc::analysis::{median, quantile, rmse_report, ChainSummary};
use ramcmc::exec::map_indexed;
use ramcmc::proposals::RngStream;
use ramcmc::samplers::{run_chain, Algorithm, CsvSink, NullSink};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub schema_version: u32,
    pub target: String,
    pub label: String,
    pub algorithm: Algorithm,
    pub replication: u64,
    pub seed: u64,
    pub stream: u64,
    pub mean_truths: Option<Vec<f64>>,
    pub summary: ChainSummary,
}

/// Median and 10%/90% percentiles across replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub median: f64,
    pub p10: f64,
    pub p90: f64,
}

impl Band {
    pub fn of(values: &[f64]) -> Option<Band> {
        Some(Band {
            median: median(values)?,
            p10: quantile(values, 0.1)?,
            p90: quantile(values, 0.9)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointBand {
    pub n: u64,
    /// Band of `log S_n[0][0]`.
    pub log_first_diagonal: Band,
    pub b: Option<Band>,
}

/// HPD coverage errors in percentage points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRmse {
    pub levels: Vec<f64>,
    pub per_level: Vec<f64>,
    pub overall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanRmse {
    pub truths: Vec<f64>,
    pub per_coordinate: Vec<f64>,
    pub first: f64,
    /// Pooled over coordinates `2..d`; absent when `d = 1`.
    pub rest: Option<f64>,
    pub overall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelAggregate {
    pub label: String,
    pub algorithm: Algorithm,
    pub replications: usize,
    pub acceptance_rate: Band,
    pub hpd_outside_fraction: Option<Band>,
    pub hpd_coverage_rmse: Option<CoverageRmse>,
    pub mean_rmse: Option<MeanRmse>,
    pub checkpoints: Vec<CheckpointBand>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub schema_version: u32,
    pub target: String,
    pub config: ExperimentConfig,
    pub samplers: Vec<LabelAggregate>,
}

fn replication_csv(dir: &Path, rep: u64) -> PathBuf {
    dir.join(format!("rep-{rep:04}.csv"))
}

fn replication_json(dir: &Path, rep: u64) -> PathBuf {
    dir.join(format!("rep-{rep:04}.json"))
}

/// Runs one replication of one sampler; writes its CSV and JSON under
/// `out/<label>` when `out` is given.
pub fn run_replication(
    config: &ExperimentConfig,
    sampler: usize,
    rep: u64,
    out: Option<&Path>,
) -> Result<ReplicationRecord, CliError> {
    let entry = &config.samplers[sampler];
    let setup = config.setup(rep)?;
    let s1 = config.s1.resolve(config.dim)?;
    let sc = config.sampler_config(entry, &setup, &s1);
    let mut rng = RngStream::new(config.seed, rep);
    let summary = match out {
        Some(out) => {
            let dir = out.join(&entry.label);
            let path = replication_csv(&dir, rep);
            let file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
            let mut sink = CsvSink::new(BufWriter::new(file), config.dim, config.thin);
            let summary = run_chain(&sc, &setup.target, &mut rng, &mut sink)?;
            sink.into_inner().flush().map_err(|e| CliError::io(&path, e))?;
            summary
        }
        None => run_chain(&sc, &setup.target, &mut rng, &mut NullSink)?,
    };
    let record = ReplicationRecord {
        schema_version: SCHEMA_VERSION,
        target: config.target_name(),
        label: entry.label.clone(),
        algorithm: entry.algorithm,
        replication: rep,
        seed: config.seed,
        stream: rep,
        mean_truths: setup.mean_truths,
        summary,
    };
    if let Some(out) = out {
        write_json(&replication_json(&out.join(&entry.label), rep), &record)?;
    }
    Ok(record)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("records serialize");
    fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

/// Every (sampler, replication) pair, run in parallel, ordered by sampler then
/// replication.
pub fn simulate(config: &ExperimentConfig, out: Option<&Path>) -> Result<Vec<ReplicationRecord>, CliError> {
    let reps = config.replications as usize;
    let jobs = config.samplers.len() * reps;
    map_indexed(jobs, |j| run_replication(config, j / reps, (j % reps) as u64, out))
        .into_iter()
        .collect()
}

/// Runs the experiment and writes all artifacts under `config.output`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Aggregate, CliError> {
    let out = &config.output;
    for entry in &config.samplers {
        let dir = out.join(&entry.label);
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    }
    let records = simulate(config, Some(out))?;
    let aggregate = aggregate(config, &records)?;
    write_json(&out.join("aggregate.json"), &aggregate)?;
    Ok(aggregate)
}

/// Reads back the per-replication JSON files of a finished run.
pub fn load_records(config: &ExperimentConfig) -> Result<Vec<ReplicationRecord>, CliError> {
    let mut records = Vec::new();
    for entry in &config.samplers {
        for rep in 0..config.replications {
            let path = replication_json(&config.output.join(&entry.label), rep);
            let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            let record: ReplicationRecord = serde_json::from_str(&text).map_err(|e| CliError::Io {
                path: path.clone(),
                message: e.to_string(),
            })?;
            records.push(record);
        }
    }
    Ok(records)
}

/// Cross-replication summary per sampler label.
pub fn aggregate(config: &ExperimentConfig, records: &[ReplicationRecord]) -> Result<Aggregate, CliError> {
    let mut samplers = Vec::new();
    for entry in &config.samplers {
        let recs: Vec<&ReplicationRecord> = records.iter().filter(|r| r.label == entry.label).collect();
        if recs.is_empty() {
            return Err(CliError::Sampler(ramcmc::Error::EmptyInput));
        }
        let summaries: Vec<&ChainSummary> = recs.iter().map(|r| &r.summary).collect();
        let acceptance: Vec<f64> = summaries.iter().map(|s| s.acceptance_rate).collect();
        let outside: Vec<f64> = summaries.iter().filter_map(|s| s.hpd_outside_fraction).collect();

        let hpd_coverage_rmse = if summaries[0].hpd_coverage.is_empty() {
            None
        } else {
            let levels: Vec<f64> = summaries[0].hpd_coverage.iter().map(|c| c.0).collect();
            let estimates: Vec<Vec<f64>> = summaries
                .iter()
                .map(|s| s.hpd_coverage.iter().map(|c| 100.0 * c.1).collect())
                .collect();
            let truths: Vec<f64> = levels.iter().map(|l| 100.0 * l).collect();
            let table = rmse_report(&estimates, &truths)?;
            Some(CoverageRmse {
                levels,
                per_level: table.per_statistic,
                overall: table.overall,
            })
        };

        let mean_rmse = match &recs[0].mean_truths {
            Some(truths) => {
                let estimates: Vec<Vec<f64>> = summaries.iter().map(|s| s.coordinate_means.clone()).collect();
                let table = rmse_report(&estimates, truths)?;
                let d = truths.len();
                Some(MeanRmse {
                    truths: truths.clone(),
                    first: table.per_statistic[0],
                    rest: (d > 1).then(|| table.pooled(1..d)),
                    per_coordinate: table.per_statistic.clone(),
                    overall: table.overall,
                })
            }
            None => None,
        };

        let checkpoints = summaries[0]
            .checkpoints
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let logs: Vec<f64> = summaries
                    .iter()
                    .map(|s| s.checkpoints[k].factor_diagonal[0].ln())
                    .collect();
                let bs: Vec<f64> = summaries.iter().filter_map(|s| s.checkpoints[k].b).collect();
                CheckpointBand {
                    n: c.n,
                    log_first_diagonal: Band::of(&logs).expect("nonempty"),
                    b: Band::of(&bs),
                }
            })
            .collect();

        samplers.push(LabelAggregate {
            label: entry.label.clone(),
            algorithm: entry.algorithm,
            replications: recs.len(),
            acceptance_rate: Band::of(&acceptance).expect("nonempty"),
            hpd_outside_fraction: Band::of(&outside),
            hpd_coverage_rmse,
            mean_rmse,
            checkpoints,
        });
    }
    Ok(Aggregate {
        schema_version: SCHEMA_VERSION,
        target: config.target_name(),
        config: config.clone(),
        samplers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn bands() {
        let b = Band::of(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(b.median, 3.0);
        assert!((b.p10 - 1.4).abs() < 1e-12);
        assert!((b.p90 - 4.6).abs() < 1e-12);
        assert!(Band::of(&[]).is_none());
    }

    #[test]
    fn replication_is_reproducible_alone() {
        let c = parse_config(
            "preset = \"gaussian-rand-d\"\ndim = 3\nreplications = 3\nburn_in = 500\niterations = 2000\n",
        )
        .unwrap();
        let all = simulate(&c, None).unwrap();
        let alone = run_replication(&c, 0, 2, None).unwrap();
        assert_eq!(all[2], alone);
    }

    #[test]
    fn aggregate_reports_coverage_levels_and_means() {
        let c = parse_config(
            "preset = \"gaussian-rand-d\"\ndim = 2\nreplications = 3\nburn_in = 500\niterations = 3000\n",
        )
        .unwrap();
        let records = simulate(&c, None).unwrap();
        let agg = aggregate(&c, &records).unwrap();
        let cov = agg.samplers[0].hpd_coverage_rmse.as_ref().unwrap();
        assert_eq!(cov.levels, vec![0.10, 0.25, 0.50, 0.75, 0.90]);
        assert_eq!(cov.per_level.len(), 5);
        assert_eq!(agg.samplers[0].mean_rmse.as_ref().unwrap().truths, vec![0.0, 0.0]);
        assert_eq!(agg.samplers[0].checkpoints.len(), 3);
    }
}
