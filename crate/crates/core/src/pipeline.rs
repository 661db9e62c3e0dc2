//! End-to-end training and evaluation driven by a single TOML config.
//!
//! ```toml
//! seed = 7
//!
//! [evo]
//! population_size = 100
//! max_generations = 200
//!
//! [fitness]
//! kind = "penalty"
//! k = 2.0
//! pt_cutoff = 0.5
//!
//! [encoder]
//! x_th = 800.0
//! delta_x = 400.0
//! t_res_ps = 200
//!
//! [network]
//! pattern = "row-stride:13"
//! bias = false
//!
//! [eval]
//! pt_reference = 2.0
//! normalization = "all"
//! ```
//!
//! Every key is optional; missing keys take their defaults.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cluster::{load_dataset, DatasetManifest};
use crate::codec::{encode_cluster, EncoderParams};
use crate::error::{Error, Result};
use crate::evo::{evolve, predict, EvoConfig, EvolveOutcome, FitnessSpec, SimSettings};
use crate::metrics::{turn_on_curve, EvalReport, ReductionNorm, TurnOnCurve, DEFAULT_PT_REFERENCE};
use crate::reduce::{build_pattern, PatternKind, ReductionPattern};
use crate::snn::{BiasSource, IoCounts, LeakMode, NetworkGenome};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub pattern: PatternKind,
    pub bias: bool,
    pub bias_period: usize,
    pub leak: LeakMode,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            pattern: PatternKind::RowStride(26),
            bias: false,
            bias_period: 1,
            leak: LeakMode::Full,
        }
    }
}

impl NetworkConfig {
    pub fn sim_settings(&self) -> SimSettings {
        SimSettings {
            bias: if self.bias {
                BiasSource::every(self.bias_period)
            } else {
                BiasSource::disabled()
            },
            leak: self.leak,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub pt_reference: f64,
    pub normalization: ReductionNorm,
    pub test_fraction: f64,
    pub turn_on_edges: Vec<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            pt_reference: DEFAULT_PT_REFERENCE,
            normalization: ReductionNorm::All,
            test_fraction: 0.2,
            turn_on_edges: vec![0.2, 0.3, 0.4, 0.5, 0.6, 0.8, 1.0, 1.5, 2.0, 3.0, 5.0, 10.0, 100.0],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub seed: u64,
    pub evo: EvoConfig,
    pub fitness: FitnessSpec,
    pub encoder: EncoderParams<f64>,
    pub network: NetworkConfig,
    pub eval: EvalConfig,
}

impl TrainConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.evo.validate()?;
        self.fitness.validate()?;
        self.encoder.validate()?;
        if self.network.bias && self.network.bias_period == 0 {
            return Err(Error::Config("bias_period must be at least 1".into()));
        }
        if self.eval.pt_reference.is_nan() || self.eval.pt_reference <= 0.0 {
            return Err(Error::Config("pt_reference must be positive".into()));
        }
        Ok(())
    }

    /// Sets the run seed; the evolutionary RNG follows it.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.evo.rng_seed = seed;
        self
    }

    pub fn pattern_for(&self, manifest: &DatasetManifest) -> Result<ReductionPattern> {
        build_pattern(
            self.network.pattern,
            manifest.frame_shape.rows,
            manifest.frame_shape.cols,
        )
    }

    pub fn io_counts(&self, pattern: &ReductionPattern) -> IoCounts {
        IoCounts::for_groups(pattern.group_count(), self.network.bias)
    }
}

/// Evolves a network on the training manifest.
pub fn train(train: &DatasetManifest, cfg: &TrainConfig, seeds: &[NetworkGenome]) -> Result<EvolveOutcome> {
    cfg.validate()?;
    let pattern = cfg.pattern_for(train)?;
    evolve(
        train,
        &cfg.evo,
        &cfg.fitness,
        &cfg.encoder,
        &pattern,
        cfg.network.sim_settings(),
        seeds,
    )
}

/// Test-set evaluation output.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub report: EvalReport,
    pub turn_on: TurnOnCurve,
}

/// Classifies every sample in the test files (no balancing) and scores them.
pub fn evaluate(genome: &NetworkGenome, test: &DatasetManifest, cfg: &TrainConfig) -> Result<Evaluation> {
    cfg.validate()?;
    let pattern = cfg.pattern_for(test)?;
    let io = cfg.io_counts(&pattern);
    if genome.io() != io {
        return Err(Error::invalid(format!(
            "genome has io {:?}, configuration implies {io:?}",
            genome.io()
        )));
    }
    let mut preds = Vec::with_capacity(test.total_samples());
    let mut pts = Vec::with_capacity(test.total_samples());
    for path in &test.file_paths {
        let samples = load_dataset::<f64>(path)?;
        let rasters = samples
            .iter()
            .map(|s| encode_cluster(s, &cfg.encoder, &pattern))
            .collect::<Result<Vec<_>>>()?;
        preds.extend(predict(genome, &rasters, cfg.network.sim_settings())?);
        pts.extend(samples.iter().map(|s| s.p_t));
    }
    let report = EvalReport::compute(
        &preds,
        &pts,
        cfg.fitness.pt_cutoff,
        cfg.eval.pt_reference,
        cfg.eval.normalization,
    )?;
    let turn_on = turn_on_curve(&preds, &pts, &cfg.eval.turn_on_edges)?;
    Ok(Evaluation { report, turn_on })
}
