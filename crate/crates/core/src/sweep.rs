//! Hyperparameter design-space exploration: sample configurations, evaluate
//! them in parallel, and collect one metrics row per configuration.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::seq::index;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::DatasetManifest;
use crate::error::{Error, Result};
use crate::evo::FitnessKind;
use crate::pipeline::{evaluate, train, TrainConfig};
use crate::reduce::PatternKind;
use crate::snn::count_parameters;

/// Axis values of the search space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpace {
    pub timescale: Vec<u32>,
    pub pattern: Vec<PatternKind>,
    pub pt_cutoff: Vec<f64>,
    pub fitness: Vec<FitnessKind>,
    pub bias: Vec<bool>,
}

impl SweepSpace {
    /// The full published grid: 5 timescales, 14 reductions, 3 cutoffs,
    /// 3 fitness functions, bias on/off.
    pub fn reference_grid() -> Self {
        let b = |w, h| PatternKind::Box { w, h };
        Self {
            timescale: vec![10, 20, 40, 50, 200],
            pattern: vec![
                PatternKind::Full,
                PatternKind::RowStride(13),
                PatternKind::RowStride(26),
                PatternKind::ColStride(21),
                PatternKind::ColStride(42),
                b(2, 2),
                b(3, 3),
                b(4, 4),
                b(2, 4),
                b(4, 2),
                b(2, 8),
                b(8, 2),
                b(4, 8),
                b(8, 4),
            ],
            pt_cutoff: vec![0.2, 0.5, 0.7],
            fitness: vec![FitnessKind::Accuracy, FitnessKind::Penalty, FitnessKind::Combination],
            bias: vec![true, false],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.timescale.is_empty()
            || self.pattern.is_empty()
            || self.pt_cutoff.is_empty()
            || self.fitness.is_empty()
            || self.bias.is_empty()
        {
            return Err(Error::Config("every sweep axis needs at least one value".into()));
        }
        if let Some(bad) = self.pt_cutoff.iter().find(|c| c.is_nan() || **c <= 0.0) {
            return Err(Error::Config(format!("pt_cutoff {bad} must be positive")));
        }
        Ok(())
    }

    pub fn grid_size(&self) -> usize {
        self.timescale.len() * self.pattern.len() * self.pt_cutoff.len() * self.fitness.len() * self.bias.len()
    }

    /// The configuration at lexicographic grid position `id`
    /// (timescale slowest, bias fastest).
    pub fn point(&self, id: usize) -> SweepPoint {
        let mut rem = id;
        let mut take = |len: usize| {
            let i = rem % len;
            rem /= len;
            i
        };
        let bias = self.bias[take(self.bias.len())];
        let fitness = self.fitness[take(self.fitness.len())];
        let pt_cutoff = self.pt_cutoff[take(self.pt_cutoff.len())];
        let pattern = self.pattern[take(self.pattern.len())];
        let t_res_ps = self.timescale[take(self.timescale.len())];
        SweepPoint {
            id,
            t_res_ps,
            pattern,
            pt_cutoff,
            fitness,
            bias,
        }
    }
}

/// Sweep definition file: the axes plus an optional base training config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    #[serde(flatten)]
    pub space: SweepSpace,
    #[serde(default)]
    pub train: Option<TrainConfig>,
}

impl SweepFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let f: Self = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        f.space.validate()?;
        if let Some(t) = &f.train {
            t.validate()?;
        }
        Ok(f)
    }
}

/// One hyperparameter assignment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub id: usize,
    pub t_res_ps: u32,
    pub pattern: PatternKind,
    pub pt_cutoff: f64,
    pub fitness: FitnessKind,
    pub bias: bool,
}

impl SweepPoint {
    /// Applies this point to a base config. The seed is derived from the
    /// global seed and the point id only.
    pub fn configure(&self, base: &TrainConfig, global_seed: u64) -> TrainConfig {
        let mut cfg = base.clone().with_seed(derive_seed(global_seed, self.id));
        cfg.encoder.t_res_ps = self.t_res_ps;
        cfg.network.pattern = self.pattern;
        cfg.network.bias = self.bias;
        cfg.fitness.pt_cutoff = self.pt_cutoff;
        cfg.fitness.kind = self.fitness;
        cfg
    }
}

/// Per-configuration seed, independent of which other configs run.
pub fn derive_seed(global_seed: u64, config_id: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(global_seed);
    rng.set_stream(config_id as u64);
    rng.next_u64()
}

/// Full Cartesian product in lexicographic order.
pub fn enumerate_grid(space: &SweepSpace) -> Vec<SweepPoint> {
    (0..space.grid_size()).map(|i| space.point(i)).collect()
}

/// `n` distinct grid points drawn uniformly without replacement.
pub fn sample_random(space: &SweepSpace, n: usize, seed: u64) -> Result<Vec<SweepPoint>> {
    let size = space.grid_size();
    if n == 0 {
        return Err(Error::invalid("sample size must be at least 1"));
    }
    if n > size {
        return Err(Error::invalid(format!("cannot draw {n} configs from a grid of {size}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(index::sample(&mut rng, size, n)
        .into_iter()
        .map(|i| space.point(i))
        .collect())
}

/// Metrics row of one evaluated configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub point: SweepPoint,
    /// `None` on success, otherwise the failure message.
    pub failure: Option<String>,
    pub signal_efficiency: f64,
    pub data_reduction: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub neurons: usize,
    pub synapses: usize,
    pub parameters: usize,
    pub wall_time_s: f64,
}

impl SweepResult {
    fn failed(point: SweepPoint, msg: String, wall_time_s: f64) -> Self {
        Self {
            point,
            failure: Some(msg),
            signal_efficiency: 0.0,
            data_reduction: 0.0,
            accuracy: 0.0,
            f1: 0.0,
            neurons: 0,
            synapses: 0,
            parameters: 0,
            wall_time_s,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.failure.is_none()
    }
}

fn run_point(
    point: SweepPoint,
    train_m: &DatasetManifest,
    test_m: &DatasetManifest,
    base: &TrainConfig,
    seed: u64,
) -> SweepResult {
    let start = Instant::now();
    let cfg = point.configure(base, seed);
    let outcome = cfg
        .validate()
        .and_then(|_| train(train_m, &cfg, &[]))
        .and_then(|out| evaluate(&out.best, test_m, &cfg).map(|ev| (out, ev)));
    let wall = start.elapsed().as_secs_f64();
    match outcome {
        Ok((out, ev)) => SweepResult {
            point,
            failure: None,
            signal_efficiency: ev.report.signal_efficiency,
            data_reduction: ev.report.data_reduction,
            accuracy: ev.report.accuracy,
            f1: ev.report.f1,
            neurons: out.best.neurons().len(),
            synapses: out.best.synapses().len(),
            parameters: count_parameters(&out.best),
            wall_time_s: wall,
        },
        Err(e) => SweepResult::failed(point, e.to_string(), wall),
    }
}

/// Trains and evaluates every point with up to `workers` threads.
///
/// Results come back in input order. A failing point yields a failed row;
/// a missing dataset aborts the sweep.
pub fn run_sweep(
    points: &[SweepPoint],
    train_m: &DatasetManifest,
    test_m: &DatasetManifest,
    base: &TrainConfig,
    global_seed: u64,
    workers: usize,
) -> Result<Vec<SweepResult>> {
    if workers == 0 {
        return Err(Error::invalid("workers must be at least 1"));
    }
    for p in train_m.file_paths.iter().chain(&test_m.file_paths) {
        if !p.is_file() {
            return Err(Error::invalid(format!("dataset file {} is missing", p.display())));
        }
    }
    if points.is_empty() {
        return Ok(Vec::new());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(e.to_string()))?;
    Ok(pool.install(|| {
        points
            .par_iter()
            .map(|&p| run_point(p, train_m, test_m, base, global_seed))
            .collect()
    }))
}

const TABLE_HEADER: &str = "config_id,timescale_ps,pattern,pt_cutoff,fitness,bias,status,\
signal_efficiency,data_reduction,accuracy,f1,neurons,synapses,parameters";

/// Renders the results table. Wall-clock times are only included on
/// request, since they make otherwise identical tables differ.
pub fn render_table(results: &[SweepResult], with_wall_time: bool) -> String {
    let mut out = String::from(TABLE_HEADER);
    if with_wall_time {
        out.push_str(",wall_time_s");
    }
    out.push('\n');
    for r in results {
        let p = &r.point;
        let status = match &r.failure {
            None => "ok".to_string(),
            Some(msg) => format!("failed: {}", msg.replace([',', '\n', '"'], ";")),
        };
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            p.id,
            p.t_res_ps,
            p.pattern,
            p.pt_cutoff,
            p.fitness,
            p.bias,
            status,
            r.signal_efficiency,
            r.data_reduction,
            r.accuracy,
            r.f1,
            r.neurons,
            r.synapses,
            r.parameters
        );
        if with_wall_time {
            let _ = write!(out, ",{}", r.wall_time_s);
        }
        out.push('\n');
    }
    out
}

/// Writes the results table as CSV.
pub fn extract_table(results: &[SweepResult], path: &Path, with_wall_time: bool) -> Result<()> {
    fs::write(path, render_table(results, with_wall_time)).map_err(|e| Error::io(path, e))
}

/// Reads a table written by [`extract_table`].
pub fn load_table(path: &Path) -> Result<Vec<SweepResult>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if !header.starts_with(TABLE_HEADER) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: "not a sweep table".into(),
        });
    }
    let with_wall = header.ends_with(",wall_time_s");
    lines
        .enumerate()
        .map(|(i, line)| {
            let perr = |m: &str| Error::Parse {
                path: path.to_path_buf(),
                line: i + 2,
                msg: m.to_string(),
            };
            let f: Vec<&str> = line.split(',').collect();
            let want = 14 + usize::from(with_wall);
            if f.len() != want {
                return Err(perr("wrong number of fields"));
            }
            let num = |k: usize| f[k].parse::<f64>().map_err(|_| perr("bad number"));
            let int = |k: usize| f[k].parse::<usize>().map_err(|_| perr("bad integer"));
            let point = SweepPoint {
                id: int(0)?,
                t_res_ps: f[1].parse().map_err(|_| perr("bad timescale"))?,
                pattern: f[2].parse().map_err(|_| perr("bad pattern"))?,
                pt_cutoff: num(3)?,
                fitness: f[4].parse().map_err(|_| perr("bad fitness"))?,
                bias: f[5].parse().map_err(|_| perr("bad bias"))?,
            };
            Ok(SweepResult {
                point,
                failure: (f[6] != "ok").then(|| f[6].trim_start_matches("failed: ").to_string()),
                signal_efficiency: num(7)?,
                data_reduction: num(8)?,
                accuracy: num(9)?,
                f1: num(10)?,
                neurons: int(11)?,
                synapses: int(12)?,
                parameters: int(13)?,
                wall_time_s: if with_wall { num(14)? } else { 0.0 },
            })
        })
        .collect()
}
