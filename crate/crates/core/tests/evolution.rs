use std::sync::Arc;

use neurofilter::cluster::{generate_synthetic, SyntheticConfig};
use neurofilter::codec::encode_cluster;
use neurofilter::evo::{
    crossover, evolve_with, init_population, mutate, random_genome, tournament_select, Batch, EvoConfig, FitnessSpec,
    FixedBatch, MutationRates, SimSettings,
};
use neurofilter::reduce::build_pattern;
use neurofilter::snn::{DELAY_RANGE, THRESHOLD_RANGE, WEIGHT_RANGE};
use neurofilter::{ClusterSample, EncoderParams, IoCounts, NetworkGenome, PatternKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn assert_in_envelope(g: &NetworkGenome) {
    g.validate().unwrap();
    for n in g.neurons() {
        assert!(THRESHOLD_RANGE.contains(&n.threshold), "threshold {}", n.threshold);
    }
    for s in g.synapses() {
        assert!(WEIGHT_RANGE.contains(&s.weight), "weight {}", s.weight);
        assert!(DELAY_RANGE.contains(&s.delay), "delay {}", s.delay);
    }
}

#[test]
fn variation_keeps_structure_and_ranges() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let io = IoCounts::for_groups(5, true);
    let rates = MutationRates::default();
    let mut pool: Vec<NetworkGenome> = (0..6).map(|_| random_genome(io, 8, 40, &mut rng)).collect();
    for _ in 0..1000 {
        let i = rng.gen_range(0..pool.len());
        let child = if rng.gen_bool(0.5) {
            let j = rng.gen_range(0..pool.len());
            let c = crossover(&pool[i], &pool[j], &mut rng).unwrap();
            // every synapse of the child comes from a parent
            for s in c.synapses() {
                assert!(
                    pool[i].synapse(s.pre, s.post) == Some(s) || pool[j].synapse(s.pre, s.post) == Some(s),
                    "synapse {s:?} not inherited"
                );
            }
            c
        } else {
            mutate(pool[i].clone(), &rates, &mut rng)
        };
        assert_eq!(child.io(), io);
        assert_in_envelope(&child);
        pool[i] = child;
    }
}

#[test]
fn crossover_rejects_mismatched_parents() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random_genome(IoCounts::new(4, 2), 2, 5, &mut rng);
    let b = random_genome(IoCounts::new(6, 2), 2, 5, &mut rng);
    assert!(crossover(&a, &b, &mut rng).is_err());
}

#[test]
fn tournament_picks_best_of_a_full_draw() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let f = [0.3, -1.0, 0.9, 0.1];
    for _ in 0..50 {
        assert_eq!(tournament_select(&f, 4, &mut rng), 2);
        assert_eq!(tournament_select(&f, 10, &mut rng), 2);
    }
    // size-1 tournaments are uniform picks
    let mut seen = [false; 4];
    for _ in 0..200 {
        seen[tournament_select(&f, 1, &mut rng)] = true;
    }
    assert!(seen.iter().all(|s| *s));
}

fn small_batch(seed: u64, n: usize) -> Arc<Batch<f64>> {
    let pattern = build_pattern(PatternKind::RowStride(13), 13, 21).unwrap();
    let data: Vec<ClusterSample> = generate_synthetic(n, seed, &SyntheticConfig::default()).unwrap();
    let rasters = data
        .iter()
        .map(|s| encode_cluster(s, &EncoderParams::default(), &pattern).unwrap())
        .collect();
    Arc::new(Batch::new(rasters, data.iter().map(|s| s.p_t).collect(), 0.5).unwrap())
}

#[test]
fn fixed_batch_runs_are_reproducible_and_elitist() {
    let batch = small_batch(5, 60);
    let config = EvoConfig {
        population_size: 16,
        starting_nodes: 6,
        starting_edges: 60,
        max_generations: 15,
        rng_seed: 77,
        ..Default::default()
    };
    let io = IoCounts::for_groups(13, false);
    let spec = FitnessSpec::default();
    let run = || {
        evolve_with(
            &mut FixedBatch(Arc::clone(&batch)),
            io,
            &config,
            &spec,
            SimSettings::default(),
            &[],
        )
        .unwrap()
    };
    let a = run();
    assert_eq!(a.reports, run().reports);
    assert_eq!(a.reports.len(), 16);
    for w in a.reports.windows(2) {
        assert!(w[1].best >= w[0].best);
    }
    assert_eq!(a.best_fitness, a.reports.last().unwrap().best);
}

#[test]
fn target_fitness_stops_early() {
    let batch = small_batch(6, 30);
    let config = EvoConfig {
        population_size: 8,
        starting_nodes: 4,
        starting_edges: 30,
        max_generations: 50,
        target_fitness: Some(f64::NEG_INFINITY),
        ..Default::default()
    };
    let out = evolve_with(
        &mut FixedBatch(batch),
        IoCounts::for_groups(13, false),
        &config,
        &FitnessSpec::default(),
        SimSettings::default(),
        &[],
    )
    .unwrap();
    assert_eq!(out.reports.len(), 1);
}

#[test]
fn seed_genomes_enter_the_population() {
    let io = IoCounts::for_groups(13, false);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let seed = random_genome(io, 3, 20, &mut rng);
    let config = EvoConfig {
        population_size: 6,
        starting_nodes: 3,
        starting_edges: 20,
        ..Default::default()
    };
    let pop = init_population(&config, io, std::slice::from_ref(&seed), &mut rng).unwrap();
    assert_eq!(pop.len(), 6);
    assert_eq!(pop[0], seed);
    let wrong = random_genome(IoCounts::for_groups(4, false), 1, 2, &mut rng);
    assert!(init_population(&config, io, &[wrong], &mut rng).is_err());
}
