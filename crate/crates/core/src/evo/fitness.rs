use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cluster::{label_pt, ClassLabel};
use crate::error::{Error, Result};
use crate::raster::SpikeRaster;
use crate::scalar::Scalar;
use crate::snn::{decode_output, BiasSource, LeakMode, NetworkGenome, Simulator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitnessKind {
    Accuracy,
    Penalty,
    /// Penalty for the first half of the generations, accuracy afterwards.
    Combination,
}

impl fmt::Display for FitnessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitnessKind::Accuracy => "accuracy",
            FitnessKind::Penalty => "penalty",
            FitnessKind::Combination => "combination",
        })
    }
}

impl FromStr for FitnessKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accuracy" => Ok(Self::Accuracy),
            "penalty" => Ok(Self::Penalty),
            "combination" => Ok(Self::Combination),
            _ => Err(Error::invalid(format!("unknown fitness '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitnessSpec {
    pub kind: FitnessKind,
    /// Slope of the tanh weighting, 1/GeV.
    pub k: f64,
    /// Class boundary in GeV.
    pub pt_cutoff: f64,
}

impl Default for FitnessSpec {
    fn default() -> Self {
        Self {
            kind: FitnessKind::Penalty,
            k: 2.0,
            pt_cutoff: 0.5,
        }
    }
}

impl FitnessSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::Config(format!("fitness k must be positive, got {}", self.k)));
        }
        if !(self.pt_cutoff > 0.0 && self.pt_cutoff.is_finite()) {
            return Err(Error::Config("pt_cutoff must be positive".into()));
        }
        Ok(())
    }

    /// The concrete score used at `generation` of a `max_generations` run.
    pub fn active_kind(&self, generation: usize, max_generations: usize) -> FitnessKind {
        match self.kind {
            FitnessKind::Combination if 2 * generation < max_generations => FitnessKind::Penalty,
            FitnessKind::Combination => FitnessKind::Accuracy,
            k => k,
        }
    }
}

/// `-sum |pred - truth| * tanh(k * |p_t - cutoff|)`; zero when all correct.
pub fn penalty_score<T: Scalar>(
    predictions: &[ClassLabel],
    truths: &[ClassLabel],
    pts: &[T],
    pt_cutoff: T,
    k: T,
) -> Result<T> {
    if predictions.len() != truths.len() || predictions.len() != pts.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} predictions, {} truths, {} p_T values",
            predictions.len(),
            truths.len(),
            pts.len()
        )));
    }
    let mut s = T::zero();
    for ((p, t), &pt) in predictions.iter().zip(truths).zip(pts) {
        if p != t {
            s = s - (k * (pt - pt_cutoff).abs()).tanh();
        }
    }
    Ok(s)
}

/// Fraction of correct predictions.
pub fn accuracy_score(predictions: &[ClassLabel], truths: &[ClassLabel]) -> Result<f64> {
    if predictions.len() != truths.len() {
        return Err(Error::invalid("length mismatch"));
    }
    if predictions.is_empty() {
        return Err(Error::invalid("accuracy of an empty batch"));
    }
    let correct = predictions.iter().zip(truths).filter(|(p, t)| p == t).count();
    Ok(correct as f64 / predictions.len() as f64)
}

/// Encoded samples with their truth.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch<T> {
    pub rasters: Vec<SpikeRaster>,
    pub pts: Vec<T>,
    pub truths: Vec<ClassLabel>,
}

impl<T: Scalar> Batch<T> {
    pub fn new(rasters: Vec<SpikeRaster>, pts: Vec<T>, pt_cutoff: T) -> Result<Self> {
        if rasters.len() != pts.len() {
            return Err(Error::invalid("one p_T per raster required"));
        }
        let truths = pts.iter().map(|&p| label_pt(p, pt_cutoff)).collect();
        Ok(Self { rasters, pts, truths })
    }

    pub fn len(&self) -> usize {
        self.rasters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rasters.is_empty()
    }
}

/// Simulator settings shared by every evaluation in a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimSettings {
    pub bias: BiasSource,
    pub leak: LeakMode,
}

/// Where in the run an evaluation happens; selects the combination phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EpochPhase {
    pub generation: usize,
    pub max_generations: usize,
}

/// Simulates and decodes every raster in the batch.
pub fn predict(genome: &NetworkGenome, rasters: &[SpikeRaster], sim: SimSettings) -> Result<Vec<ClassLabel>> {
    let mut simulator = Simulator::new(genome, sim.bias, sim.leak)?;
    rasters
        .iter()
        .map(|r| simulator.run(r, r.n_timesteps()).map(|res| decode_output(&res)))
        .collect()
}

pub fn evaluate_fitness<T: Scalar>(
    genome: &NetworkGenome,
    batch: &Batch<T>,
    spec: &FitnessSpec,
    phase: EpochPhase,
    sim: SimSettings,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::invalid("fitness batch is empty"));
    }
    let preds = predict(genome, &batch.rasters, sim)?;
    score(&preds, batch, spec, phase)
}

pub(crate) fn score<T: Scalar>(
    preds: &[ClassLabel],
    batch: &Batch<T>,
    spec: &FitnessSpec,
    phase: EpochPhase,
) -> Result<f64> {
    match spec.active_kind(phase.generation, phase.max_generations) {
        FitnessKind::Accuracy => accuracy_score(preds, &batch.truths),
        _ => Ok(penalty_score(preds, &batch.truths, &batch.pts, T::lit(spec.pt_cutoff), T::lit(spec.k))?.as_f64()),
    }
}
