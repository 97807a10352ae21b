//! Parameter sweeps and Monte Carlo aggregation.
//!
//! Every sweep point runs the same batch of derived seeds, so points differ
//! only in the swept parameter. Jobs may execute in any order (in parallel
//! with the `parallel` feature); results are always folded in run-index
//! order, which keeps tables bit-identical to a sequential execution.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::{run, RunConfig, Trajectory};
use crate::error::{check_probability, EvocError, Result};
use crate::seed::child_seed;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub const DEFAULT_RUNS: usize = 100;
pub const DEFAULT_I_SWEEP: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
pub const DEFAULT_C_SWEEP: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
pub const FITNESS_ITERATIONS: usize = 100;
pub const DIVERSITY_ITERATIONS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    ILeader,
    IFollowers,
    CLeader,
    CFollowers,
}

impl SweepParam {
    pub const ALL: [SweepParam; 4] = [
        SweepParam::ILeader,
        SweepParam::IFollowers,
        SweepParam::CLeader,
        SweepParam::CFollowers,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::ILeader => "i_leader",
            SweepParam::IFollowers => "i_followers",
            SweepParam::CLeader => "c_leader",
            SweepParam::CFollowers => "c_followers",
        }
    }

    pub fn apply(self, config: &mut RunConfig, value: f64) {
        match self {
            SweepParam::ILeader => config.leader_params.i = value,
            SweepParam::IFollowers => config.follower_params.i = value,
            SweepParam::CLeader => config.leader_params.c = value,
            SweepParam::CFollowers => config.follower_params.c = value,
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = EvocError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        SweepParam::ALL
            .into_iter()
            .find(|p| p.name() == norm)
            .ok_or_else(|| EvocError::InvalidConfig(format!("unknown sweep parameter {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Diversity,
    Fitness,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Diversity => "diversity",
            Metric::Fitness => "fitness",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = EvocError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fitness" => Ok(Metric::Fitness),
            "diversity" => Ok(Metric::Diversity),
            _ => Err(EvocError::InvalidConfig(format!("unknown metric {s:?}"))),
        }
    }
}

/// A sweep of one parameter over a base configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub base: RunConfig,
    pub swept_parameter: SweepParam,
    pub sweep_values: Vec<f64>,
    pub runs_per_point: usize,
    pub master_seed: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sweep_values.is_empty() {
            return Err(EvocError::InvalidConfig("sweep needs at least one value".into()));
        }
        for &v in &self.sweep_values {
            check_probability("sweep value", v)?;
        }
        if self.runs_per_point == 0 {
            return Err(EvocError::InvalidConfig("runs must be at least 1".into()));
        }
        self.base.validate()
    }

    /// Leader inventiveness sweep with followers at `i_followers`.
    pub fn exp1a(i_followers: f64, sweep: Vec<f64>, runs: usize, iterations: usize, seed: u64) -> Self {
        let mut base = RunConfig {
            iterations,
            broadcasting: true,
            ..RunConfig::default()
        };
        base.follower_params.i = i_followers;
        base.follower_params.c = 1.0 / 6.0;
        base.leader_params.c = 1.0 / 6.0;
        ExperimentSpec {
            base,
            swept_parameter: SweepParam::ILeader,
            sweep_values: sweep,
            runs_per_point: runs,
            master_seed: seed,
        }
    }

    /// Same runs as [`ExperimentSpec::exp1a`]; only the reported metric differs.
    pub fn exp1b(i_followers: f64, sweep: Vec<f64>, runs: usize, iterations: usize, seed: u64) -> Self {
        Self::exp1a(i_followers, sweep, runs, iterations, seed)
    }

    /// Leader rate-of-change sweep: the leader always invents, followers
    /// only imitate.
    pub fn exp2(sweep: Vec<f64>, runs: usize, iterations: usize, seed: u64) -> Self {
        let mut base = RunConfig {
            iterations,
            broadcasting: true,
            ..RunConfig::default()
        };
        base.leader_params.i = 1.0;
        base.follower_params.i = 0.0;
        base.follower_params.c = 0.0;
        ExperimentSpec {
            base,
            swept_parameter: SweepParam::CLeader,
            sweep_values: sweep,
            runs_per_point: runs,
            master_seed: seed,
        }
    }

    /// Resolved configuration for one sweep value (seed not yet derived).
    pub fn point_config(&self, value: f64) -> RunConfig {
        let mut cfg = self.base.clone();
        self.swept_parameter.apply(&mut cfg, value);
        cfg
    }

    /// Configuration of run `run` at sweep value `value`.
    pub fn run_config(&self, value: f64, run: usize) -> RunConfig {
        let mut cfg = self.point_config(value);
        cfg.seed = child_seed(self.master_seed, run as u64);
        cfg
    }
}

/// All runs at one sweep value, in run-index order.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub trajectories: Vec<Trajectory>,
}

/// Runs `runs` copies of `config` with seeds `child_seed(master_seed, k)`.
pub fn run_batch(config: &RunConfig, runs: usize, master_seed: u64) -> Result<Vec<Trajectory>> {
    #[cfg(feature = "parallel")]
    {
        run_batch_parallel(config, runs, master_seed)
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_batch_sequential(config, runs, master_seed)
    }
}

fn seeded(config: &RunConfig, master_seed: u64, k: usize) -> RunConfig {
    RunConfig {
        seed: child_seed(master_seed, k as u64),
        ..config.clone()
    }
}

fn check_batch(config: &RunConfig, runs: usize) -> Result<()> {
    if runs == 0 {
        return Err(EvocError::InvalidConfig("runs must be at least 1".into()));
    }
    config.validate()
}

pub fn run_batch_sequential(config: &RunConfig, runs: usize, master_seed: u64) -> Result<Vec<Trajectory>> {
    check_batch(config, runs)?;
    (0..runs).map(|k| run(&seeded(config, master_seed, k))).collect()
}

#[cfg(feature = "parallel")]
pub fn run_batch_parallel(config: &RunConfig, runs: usize, master_seed: u64) -> Result<Vec<Trajectory>> {
    check_batch(config, runs)?;
    (0..runs)
        .into_par_iter()
        .map(|k| run(&seeded(config, master_seed, k)))
        .collect()
}

/// Runs every (sweep value, run) job of `spec`.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<Vec<SweepPoint>> {
    spec.validate()?;
    let jobs: Vec<(usize, usize)> = (0..spec.sweep_values.len())
        .flat_map(|p| (0..spec.runs_per_point).map(move |k| (p, k)))
        .collect();
    let job = |&(p, k): &(usize, usize)| run(&spec.run_config(spec.sweep_values[p], k));

    #[cfg(feature = "parallel")]
    let done: Vec<Trajectory> = jobs.par_iter().map(job).collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let done: Vec<Trajectory> = jobs.iter().map(job).collect::<Result<_>>()?;

    let mut done = done.into_iter();
    Ok(spec
        .sweep_values
        .iter()
        .map(|&value| SweepPoint {
            value,
            trajectories: done.by_ref().take(spec.runs_per_point).collect(),
        })
        .collect())
}

/// One aggregated cell: a metric at one sweep value and iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub sweep_value: f64,
    pub iteration: u64,
    pub metric: Metric,
    pub mean: f64,
    pub std: f64,
    pub runs: usize,
}

/// Per-iteration mean and sample standard deviation over runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesTable {
    pub sweep_param: SweepParam,
    pub rows: Vec<SeriesRow>,
}

impl SeriesTable {
    /// Aggregates `metrics` over the runs of each point. Rows come out
    /// sorted by (sweep value, iteration, metric).
    pub fn aggregate(param: SweepParam, points: &[SweepPoint], metrics: &[Metric]) -> Self {
        let mut metrics = metrics.to_vec();
        metrics.sort();
        metrics.dedup();
        let mut rows = Vec::new();
        for point in points {
            let iterations = point.trajectories.first().map_or(0, |t| t.records.len());
            for it in 0..iterations {
                for &metric in &metrics {
                    let samples: Vec<f64> = point
                        .trajectories
                        .iter()
                        .map(|t| {
                            let r = &t.records[it];
                            match metric {
                                Metric::Fitness => r.mean_fitness,
                                Metric::Diversity => r.diversity as f64,
                            }
                        })
                        .collect();
                    let (mean, std) = mean_std(&samples);
                    rows.push(SeriesRow {
                        sweep_value: point.value,
                        iteration: point.trajectories[0].records[it].iteration,
                        metric,
                        mean,
                        std,
                        runs: samples.len(),
                    });
                }
            }
        }
        let mut table = SeriesTable {
            sweep_param: param,
            rows,
        };
        table.sort();
        table
    }

    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            a.sweep_value
                .total_cmp(&b.sweep_value)
                .then(a.iteration.cmp(&b.iteration))
                .then(a.metric.cmp(&b.metric))
        });
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Distinct sweep values in ascending order.
    pub fn sweep_values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.rows.iter().map(|r| r.sweep_value).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    pub fn metrics(&self) -> Vec<Metric> {
        let mut m: Vec<Metric> = self.rows.iter().map(|r| r.metric).collect();
        m.sort();
        m.dedup();
        m
    }

    /// Mean series of `metric` at `value`, ordered by iteration.
    pub fn series(&self, value: f64, metric: Metric) -> Vec<(u64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.sweep_value == value && r.metric == metric)
            .map(|r| (r.iteration, r.mean))
            .collect()
    }

    pub fn mean_at(&self, value: f64, iteration: u64, metric: Metric) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.sweep_value == value && r.iteration == iteration && r.metric == metric)
            .map(|r| r.mean)
    }
}

/// Mean and sample (n - 1) standard deviation; a single sample has std 0.
pub fn mean_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = samples.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

pub fn run_experiment(spec: &ExperimentSpec, metrics: &[Metric]) -> Result<SeriesTable> {
    let points = run_sweep(spec)?;
    Ok(SeriesTable::aggregate(spec.swept_parameter, &points, metrics))
}

pub fn exp1a(i_followers: f64, sweep: Vec<f64>, runs: usize, iterations: usize, seed: u64) -> Result<SeriesTable> {
    run_experiment(
        &ExperimentSpec::exp1a(i_followers, sweep, runs, iterations, seed),
        &[Metric::Fitness],
    )
}

pub fn exp1b(i_followers: f64, sweep: Vec<f64>, runs: usize, iterations: usize, seed: u64) -> Result<SeriesTable> {
    run_experiment(
        &ExperimentSpec::exp1b(i_followers, sweep, runs, iterations, seed),
        &[Metric::Diversity],
    )
}

pub fn exp2(sweep: Vec<f64>, runs: usize, iterations: usize, seed: u64) -> Result<SeriesTable> {
    run_experiment(&ExperimentSpec::exp2(sweep, runs, iterations, seed), &[Metric::Fitness])
}
