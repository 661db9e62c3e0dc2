use neurofilter::cluster::{generate_synthetic, save_dataset, split_by_files, SyntheticConfig};
use neurofilter::codec::{encode_cluster, encode_pixel, pixel_rasters, upsample};
use neurofilter::evo::random_genome;
use neurofilter::evo::{
    evaluate_fitness, penalty_score, predict, Batch, EpochPhase, FitnessKind, FitnessSpec, SimSettings,
};
use neurofilter::pipeline::{evaluate, train, TrainConfig};
use neurofilter::reduce::{build_pattern, reduce_spikes};
use neurofilter::snn::{decode_output, simulate};
use neurofilter::{BiasSource, ClusterSample, ClusterSampleF32, DatasetManifest, EncoderParams, IoCounts, PatternKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn samples(n: usize, seed: u64) -> Vec<ClusterSample> {
    generate_synthetic(n, seed, &SyntheticConfig::default()).unwrap()
}

#[test]
fn cluster_encoding_composes_pixel_encoding_and_reduction() {
    let kinds = [
        PatternKind::Full,
        PatternKind::RowStride(13),
        PatternKind::ColStride(7),
        PatternKind::Box { w: 4, h: 8 },
    ];
    for res in [200, 100, 50] {
        let params = EncoderParams::with_t_res(res);
        for s in samples(15, 3) {
            let per_pixel = pixel_rasters(&s, &params).unwrap();
            // per-pixel channels agree with encode_pixel on the upsampled series
            let shape = s.shape();
            for r in 0..shape.rows {
                for c in 0..shape.cols {
                    let series = s.pixel_series(r, c);
                    let want = if series.iter().all(|q| *q <= params.x_th) {
                        Default::default()
                    } else {
                        encode_pixel(&upsample(&series, res).unwrap(), &params)
                    };
                    let px = r * shape.cols + c;
                    let times = |ch: usize| -> Vec<u32> {
                        (0..per_pixel.n_timesteps())
                            .filter(|&t| per_pixel.get(ch, t))
                            .map(|t| (t as u32 + 1) * res)
                            .collect()
                    };
                    assert_eq!(times(2 * px), want.t_plus);
                    assert_eq!(times(2 * px + 1), want.t_minus);
                }
            }
            for kind in kinds {
                let pattern = build_pattern(kind, shape.rows, shape.cols).unwrap();
                assert_eq!(
                    encode_cluster(&s, &params, &pattern).unwrap(),
                    reduce_spikes(&per_pixel, &pattern).unwrap()
                );
            }
        }
    }
}

#[test]
fn f32_and_f64_encodings_agree_on_synthetic_data() {
    let pattern = build_pattern(PatternKind::RowStride(26), 13, 21).unwrap();
    let s64 = samples(40, 8);
    let s32: Vec<ClusterSampleF32> = generate_synthetic(40, 8, &SyntheticConfig::default()).unwrap();
    let mut same = 0;
    for (a, b) in s64.iter().zip(&s32) {
        let ra = encode_cluster(a, &EncoderParams::default(), &pattern).unwrap();
        let rb = encode_cluster(b, &neurofilter::codec::EncoderParams::<f32>::default(), &pattern).unwrap();
        same += usize::from(ra == rb);
    }
    // single precision may flip a rare borderline crossing
    assert!(same >= 38, "only {same}/40 rasters agree");
}

#[test]
fn fitness_is_simulation_then_score() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pattern = build_pattern(PatternKind::RowStride(13), 13, 21).unwrap();
    let data = samples(60, 4);
    let rasters: Vec<_> = data
        .iter()
        .map(|s| encode_cluster(s, &EncoderParams::default(), &pattern).unwrap())
        .collect();
    let pts: Vec<f64> = data.iter().map(|s| s.p_t).collect();
    let batch = Batch::new(rasters.clone(), pts.clone(), 0.5).unwrap();
    let io = IoCounts::for_groups(13, false);
    for _ in 0..10 {
        let g = random_genome(io, 10, 120, &mut rng);
        let preds: Vec<_> = rasters
            .iter()
            .map(|r| decode_output(&simulate(&g, r, 20, BiasSource::disabled()).unwrap()))
            .collect();
        assert_eq!(predict(&g, &rasters, SimSettings::default()).unwrap(), preds);
        let spec = FitnessSpec::default();
        let phase = EpochPhase {
            generation: 0,
            max_generations: 10,
        };
        let want = penalty_score(&preds, &batch.truths, &pts, 0.5, 2.0).unwrap();
        assert_eq!(
            evaluate_fitness(&g, &batch, &spec, phase, SimSettings::default()).unwrap(),
            want
        );
        let acc = FitnessSpec {
            kind: FitnessKind::Accuracy,
            ..spec
        };
        let correct = preds.iter().zip(&batch.truths).filter(|(p, t)| p == t).count();
        assert_eq!(
            evaluate_fitness(&g, &batch, &acc, phase, SimSettings::default()).unwrap(),
            correct as f64 / preds.len() as f64
        );
    }
}

fn write_files(dir: &std::path::Path, n_files: usize, per_file: usize, seed: u64) -> DatasetManifest {
    let data = samples(n_files * per_file, seed);
    let paths: Vec<_> = data
        .chunks(per_file)
        .enumerate()
        .map(|(i, chunk)| {
            let p = dir.join(format!("f{i}.csv"));
            save_dataset(&p, chunk).unwrap();
            p
        })
        .collect();
    DatasetManifest::from_files(&paths).unwrap()
}

#[test]
fn manifest_save_load_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_files(dir.path(), 3, 5, 1);
    let mp = dir.path().join("manifest.txt");
    m.save(&mp).unwrap();
    let back = DatasetManifest::load(&mp).unwrap();
    assert_eq!(back.samples_per_file, m.samples_per_file);
    assert_eq!(back.total_samples(), 15);
    assert_eq!(back.frame_shape, m.frame_shape);
}

#[test]
fn train_and_evaluate_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_files(dir.path(), 4, 40, 2);
    let (tr, te) = split_by_files(&m, 0.25, 2).unwrap();
    let mut cfg = TrainConfig::default().with_seed(9);
    cfg.network.pattern = PatternKind::RowStride(13);
    cfg.evo.population_size = 12;
    cfg.evo.max_generations = 4;
    cfg.evo.starting_edges = 150;
    cfg.eval.pt_reference = 0.5;
    let a = train(&tr, &cfg, &[]).unwrap();
    let b = train(&tr, &cfg, &[]).unwrap();
    assert_eq!(a.best, b.best);
    assert_eq!(a.reports, b.reports);
    assert_eq!(a.reports.len(), 5);
    let ea = evaluate(&a.best, &te, &cfg).unwrap();
    assert_eq!(ea, evaluate(&b.best, &te, &cfg).unwrap());
    assert_eq!(ea.report.n_samples, 40);
    // a genome built for another pattern is rejected
    let mut other = cfg.clone();
    other.network.pattern = PatternKind::Full;
    assert!(evaluate(&a.best, &te, &other).is_err());
}
