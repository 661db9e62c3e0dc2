//! Evolutionary optimization of network structure and parameters.
//!
//! A run evaluates the initial population (generation 0) and then performs
//! `max_generations` rounds of reproduction, each followed by evaluation on
//! that generation's batch. Reproduction keeps the `elitism_count` fittest
//! networks unchanged and fills the rest with mutated clones or crossovers of
//! tournament winners.

pub mod fitness;
pub mod ops;

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{balanced_indices, load_dataset, DatasetManifest};
use crate::codec::{encode_cluster, EncoderParams};
use crate::error::{Error, Result};
use crate::raster::SpikeRaster;
use crate::reduce::ReductionPattern;
use crate::scalar::Scalar;
use crate::snn::{clamp_parameters, IoCounts, NetworkGenome};

pub use fitness::{
    accuracy_score, evaluate_fitness, penalty_score, predict, Batch, EpochPhase, FitnessKind, FitnessSpec, SimSettings,
};
pub use ops::{crossover, mutate, random_genome, tournament_select, MutationRates};

/// How each generation's evaluation batch is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BatchMode {
    /// A randomly chosen training file per generation, class-balanced.
    #[default]
    PerFile,
    /// The same batch every generation.
    FixedBatch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvoConfig {
    pub population_size: usize,
    pub starting_nodes: usize,
    pub starting_edges: usize,
    pub tournament_size: usize,
    pub elitism_count: usize,
    pub mutation: MutationRates,
    pub crossover_fraction: f64,
    pub clone_fraction: f64,
    pub max_generations: usize,
    pub rng_seed: u64,
    /// Stop once the best fitness reaches this value.
    pub target_fitness: Option<f64>,
    pub batch_mode: BatchMode,
    /// Upper bound on samples per generation batch (after balancing).
    pub max_batch: Option<usize>,
}

impl Default for EvoConfig {
    fn default() -> Self {
        Self {
            population_size: 100,
            starting_nodes: 50,
            starting_edges: 800,
            tournament_size: 4,
            elitism_count: 2,
            mutation: MutationRates::default(),
            crossover_fraction: 0.8,
            clone_fraction: 0.2,
            max_generations: 100,
            rng_seed: 0,
            target_fitness: None,
            batch_mode: BatchMode::PerFile,
            max_batch: None,
        }
    }
}

impl EvoConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.population_size < 2 {
            return bad("population_size must be at least 2".into());
        }
        if self.elitism_count >= self.population_size {
            return bad("elitism_count must be below population_size".into());
        }
        if self.tournament_size == 0 {
            return bad("tournament_size must be at least 1".into());
        }
        for (name, v) in [
            ("crossover_fraction", self.crossover_fraction),
            ("clone_fraction", self.clone_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name}={v} outside [0, 1]"));
            }
        }
        if self.crossover_fraction + self.clone_fraction <= 0.0 {
            return bad("clone_fraction + crossover_fraction must be positive".into());
        }
        if self.max_batch == Some(0) {
            return bad("max_batch must be positive".into());
        }
        self.mutation.validate()
    }
}

/// One line of the training log.
#[derive(Clone, Debug, PartialEq)]
pub struct GenerationReport {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
    pub neurons: usize,
    pub synapses: usize,
}

impl GenerationReport {
    pub const CSV_HEADER: &'static str = "generation,best,mean,neurons,synapses";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.generation, self.best, self.mean, self.neurons, self.synapses
        )
    }
}

/// Result of an evolutionary run.
#[derive(Clone, Debug)]
pub struct EvolveOutcome {
    pub best: NetworkGenome,
    pub best_fitness: f64,
    pub best_generation: usize,
    pub reports: Vec<GenerationReport>,
}

/// Builds the initial population: seed genomes (clamped) first, then random
/// networks until `population_size` is reached.
pub fn init_population(
    config: &EvoConfig,
    io: IoCounts,
    seeds: &[NetworkGenome],
    rng: &mut impl Rng,
) -> Result<Vec<NetworkGenome>> {
    let mut pop = Vec::with_capacity(config.population_size);
    for s in seeds.iter().take(config.population_size) {
        if s.io() != io {
            return Err(Error::invalid(format!(
                "seed genome has io {:?}, run expects {io:?}",
                s.io()
            )));
        }
        let g = clamp_parameters(s.clone());
        g.validate()?;
        pop.push(g);
    }
    while pop.len() < config.population_size {
        pop.push(random_genome(io, config.starting_nodes, config.starting_edges, rng));
    }
    Ok(pop)
}

/// Supplies the evaluation batch for each generation.
pub trait BatchSource<T> {
    fn next_batch(&mut self, generation: usize, rng: &mut ChaCha8Rng) -> Result<Arc<Batch<T>>>;
}

/// The same batch every generation.
pub struct FixedBatch<T>(pub Arc<Batch<T>>);

impl<T> BatchSource<T> for FixedBatch<T> {
    fn next_batch(&mut self, _generation: usize, _rng: &mut ChaCha8Rng) -> Result<Arc<Batch<T>>> {
        Ok(Arc::clone(&self.0))
    }
}

/// Encoded contents of one cluster file.
#[derive(Clone, Debug)]
pub struct EncodedFile<T> {
    pub rasters: Vec<SpikeRaster>,
    pub pts: Vec<T>,
}

/// Loads and encodes a cluster file.
pub fn encode_file<T: Scalar>(
    path: &std::path::Path,
    encoder: &EncoderParams<T>,
    pattern: &ReductionPattern,
) -> Result<EncodedFile<T>> {
    let samples = load_dataset::<T>(path)?;
    let rasters = samples
        .iter()
        .map(|s| encode_cluster(s, encoder, pattern))
        .collect::<Result<Vec<_>>>()?;
    Ok(EncodedFile {
        rasters,
        pts: samples.iter().map(|s| s.p_t).collect(),
    })
}

/// Per-generation batches drawn from the training files of a manifest.
///
/// Every generation picks a file at random, balances its classes and
/// optionally truncates to `max_batch`. Encoded files are cached.
pub struct ManifestBatches<T> {
    manifest: DatasetManifest,
    encoder: EncoderParams<T>,
    pattern: ReductionPattern,
    pt_cutoff: T,
    mode: BatchMode,
    max_batch: Option<usize>,
    cache: HashMap<usize, Arc<EncodedFile<T>>>,
    fixed: Option<Arc<Batch<T>>>,
}

impl<T: Scalar> ManifestBatches<T> {
    pub fn new(
        manifest: DatasetManifest,
        encoder: EncoderParams<T>,
        pattern: ReductionPattern,
        pt_cutoff: T,
        mode: BatchMode,
        max_batch: Option<usize>,
    ) -> Result<Self> {
        if manifest.is_empty() {
            return Err(Error::invalid("training manifest is empty"));
        }
        encoder.validate()?;
        Ok(Self {
            manifest,
            encoder,
            pattern,
            pt_cutoff,
            mode,
            max_batch,
            cache: HashMap::new(),
            fixed: None,
        })
    }

    fn file(&mut self, i: usize) -> Result<Arc<EncodedFile<T>>> {
        if let Some(f) = self.cache.get(&i) {
            return Ok(Arc::clone(f));
        }
        let f = Arc::new(encode_file(&self.manifest.file_paths[i], &self.encoder, &self.pattern)?);
        self.cache.insert(i, Arc::clone(&f));
        Ok(f)
    }

    fn draw(&mut self, rng: &mut ChaCha8Rng) -> Result<Arc<Batch<T>>> {
        let i = rng.gen_range(0..self.manifest.len());
        let file = self.file(i)?;
        let mut idx = balanced_indices(&file.pts, self.pt_cutoff, rng.gen())?;
        if let Some(cap) = self.max_batch {
            if idx.len() > cap {
                // keep the classes balanced when truncating
                let (mut lo, mut hi): (Vec<usize>, Vec<usize>) =
                    idx.iter().partition(|&&j| file.pts[j] <= self.pt_cutoff);
                lo.truncate(cap / 2);
                hi.truncate(cap - cap / 2);
                idx = lo;
                idx.extend(hi);
                idx.sort_unstable();
            }
        }
        let batch = Batch::new(
            idx.iter().map(|&j| file.rasters[j].clone()).collect(),
            idx.iter().map(|&j| file.pts[j]).collect(),
            self.pt_cutoff,
        )?;
        Ok(Arc::new(batch))
    }
}

impl<T: Scalar> BatchSource<T> for ManifestBatches<T> {
    fn next_batch(&mut self, _generation: usize, rng: &mut ChaCha8Rng) -> Result<Arc<Batch<T>>> {
        match self.mode {
            BatchMode::PerFile => self.draw(rng),
            BatchMode::FixedBatch => {
                if self.fixed.is_none() {
                    self.fixed = Some(self.draw(rng)?);
                }
                Ok(Arc::clone(self.fixed.as_ref().expect("just set")))
            }
        }
    }
}

/// Runs the evolutionary loop against any batch source.
pub fn evolve_with<T: Scalar, S: BatchSource<T>>(
    source: &mut S,
    io: IoCounts,
    config: &EvoConfig,
    spec: &FitnessSpec,
    sim: SimSettings,
    seeds: &[NetworkGenome],
) -> Result<EvolveOutcome> {
    config.validate()?;
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut population = init_population(config, io, seeds, &mut rng)?;
    let mut reports = Vec::with_capacity(config.max_generations + 1);
    let mut best: Option<(f64, usize, NetworkGenome)> = None;

    for generation in 0..=config.max_generations {
        let batch = source.next_batch(generation, &mut rng)?;
        let phase = EpochPhase {
            generation,
            max_generations: config.max_generations,
        };
        // Collected in population order, so parallelism cannot change results.
        let fitnesses: Vec<f64> = population
            .par_iter()
            .map(|g| evaluate_fitness(g, &batch, spec, phase, sim))
            .collect::<Result<_>>()?;

        let top = argmax(&fitnesses);
        let mean = fitnesses.iter().sum::<f64>() / fitnesses.len() as f64;
        reports.push(GenerationReport {
            generation,
            best: fitnesses[top],
            mean,
            neurons: population[top].neurons().len(),
            synapses: population[top].synapses().len(),
        });
        if best.as_ref().is_none_or(|(f, _, _)| fitnesses[top] > *f) {
            best = Some((fitnesses[top], generation, population[top].clone()));
        }
        let reached = config.target_fitness.is_some_and(|t| fitnesses[top] >= t);
        if reached || generation == config.max_generations {
            break;
        }
        population = reproduce(&population, &fitnesses, config, &mut rng)?;
    }

    let (best_fitness, best_generation, best) = best.expect("at least one generation evaluated");
    Ok(EvolveOutcome {
        best,
        best_fitness,
        best_generation,
        reports,
    })
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

fn reproduce(
    population: &[NetworkGenome],
    fitnesses: &[f64],
    config: &EvoConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<NetworkGenome>> {
    let mut order: Vec<usize> = (0..population.len()).collect();
    // stable: equal fitness keeps population order
    order.sort_by(|&a, &b| fitnesses[b].total_cmp(&fitnesses[a]));
    let mut next: Vec<NetworkGenome> = order
        .iter()
        .take(config.elitism_count)
        .map(|&i| population[i].clone())
        .collect();
    let p_clone = config.clone_fraction / (config.clone_fraction + config.crossover_fraction);
    while next.len() < config.population_size {
        let a = tournament_select(fitnesses, config.tournament_size, rng);
        let child = if rng.gen_bool(p_clone) {
            population[a].clone()
        } else {
            let b = tournament_select(fitnesses, config.tournament_size, rng);
            crossover(&population[a], &population[b], rng)?
        };
        next.push(mutate(child, &config.mutation, rng));
    }
    Ok(next)
}

/// Trains on a manifest of cluster files.
pub fn evolve<T: Scalar>(
    train: &DatasetManifest,
    config: &EvoConfig,
    spec: &FitnessSpec,
    encoder: &EncoderParams<T>,
    pattern: &ReductionPattern,
    sim: SimSettings,
    seeds: &[NetworkGenome],
) -> Result<EvolveOutcome> {
    if train.is_empty() {
        return Err(Error::invalid("training manifest is empty"));
    }
    if train.frame_shape.rows != pattern.rows() || train.frame_shape.cols != pattern.cols() {
        return Err(Error::ShapeMismatch("pattern does not match the dataset frame".into()));
    }
    let io = IoCounts::for_groups(pattern.group_count(), sim.bias.enabled);
    let mut source = ManifestBatches::new(
        train.clone(),
        *encoder,
        pattern.clone(),
        T::lit(spec.pt_cutoff),
        config.batch_mode,
        config.max_batch,
    )?;
    evolve_with(&mut source, io, config, spec, sim, seeds)
}
