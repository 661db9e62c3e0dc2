//! Trains on a small synthetic dataset and prints test metrics.
//!
//! `cargo run --release -p neurofilter-core --example desk_scale -- [pattern] [generations] [seed]`

use std::time::Instant;

use neurofilter::cluster::{generate_synthetic, save_dataset, split_by_files, DatasetManifest, SyntheticConfig};
use neurofilter::pipeline::{evaluate, train, TrainConfig};
use neurofilter::ClusterSample;

fn main() -> neurofilter::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let pattern = args.get(1).map_or("row-stride:13", String::as_str);
    let generations: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(200);
    let seed: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(1);

    let dir = std::env::temp_dir().join(format!("neurofilter-desk-{seed}"));
    std::fs::create_dir_all(&dir).unwrap();
    let samples: Vec<ClusterSample> = generate_synthetic(2000, seed, &SyntheticConfig::default())?;
    let mut paths = Vec::new();
    for (i, chunk) in samples.chunks(200).enumerate() {
        let p = dir.join(format!("part{i:02}.csv"));
        save_dataset(&p, chunk)?;
        paths.push(p);
    }
    let manifest = DatasetManifest::from_files(&paths)?;
    let (tr, te) = split_by_files(&manifest, 0.2, seed)?;

    let mut cfg = TrainConfig::default().with_seed(seed);
    cfg.network.pattern = pattern.parse()?;
    cfg.evo.max_generations = generations;
    cfg.eval.pt_reference = cfg.fitness.pt_cutoff;

    let t0 = Instant::now();
    let out = train(&tr, &cfg, &[])?;
    for r in out.reports.iter().step_by(10) {
        println!("{}", r.csv_row());
    }
    println!("train time {:.1}s", t0.elapsed().as_secs_f64());
    let ev = evaluate(&out.best, &te, &cfg)?;
    print!("{}", ev.report.to_kv_text());
    Ok(())
}
