use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use neurofilter::cluster::{generate_synthetic, load_dataset, save_dataset, split_by_files, SyntheticConfig};
use neurofilter::codec::{encode_cluster, pixel_rasters, write_spike_dump};
use neurofilter::evo::GenerationReport;
use neurofilter::pipeline::{evaluate, train, TrainConfig};
use neurofilter::reduce::build_pattern;
use neurofilter::snn::{count_parameters, deserialize_genome, serialize_genome};
use neurofilter::sweep::{enumerate_grid, extract_table, run_sweep, sample_random, SweepFile};
use neurofilter::{ClusterSample, DatasetManifest, EncoderParams};

/// Evolved spiking-network filter for pixel-detector clusters.
#[derive(Parser, Debug)]
#[command(name = "neurofilter", version, arg_required_else_help = true)]
struct Cli {
    /// Training config (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory, depending on the subcommand.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Writes synthetic cluster files and a manifest into `--out`.
    GenData(GenDataArgs),
    /// Writes one spike dump per sample of a cluster file into `--out`.
    Encode(EncodeArgs),
    /// Evolves a network; writes genome, per-generation report and the split manifests into `--out`.
    Train(TrainArgs),
    /// Scores a genome on a test manifest; writes report.txt and turn_on.csv into `--out`.
    Evaluate(EvaluateArgs),
    /// Runs a hyperparameter sweep and writes the results CSV to `--out`.
    Sweep(SweepArgs),
    /// Prints genome statistics.
    Inspect(InspectArgs),
}

#[derive(Args, Debug)]
struct GenDataArgs {
    /// Total number of samples.
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    /// Number of files the samples are spread over.
    #[arg(long, default_value_t = 10)]
    files: usize,
}

#[derive(Args, Debug)]
struct EncodeArgs {
    /// Cluster file to encode.
    #[arg(long)]
    input: PathBuf,
    /// Dump per-pixel channels instead of reduced groups.
    #[arg(long)]
    pixels: bool,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Dataset manifest; split into train and test files.
    #[arg(long)]
    manifest: PathBuf,
    /// Genome files used to seed the initial population.
    #[arg(long = "seed-genome")]
    seed_genomes: Vec<PathBuf>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Genome file written by `train`.
    #[arg(long)]
    genome: PathBuf,
    /// Test manifest.
    #[arg(long)]
    manifest: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SweepMode {
    Grid,
    Random,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Sweep definition file.
    #[arg(long)]
    space: PathBuf,
    /// Full grid or a seeded random subset.
    #[arg(long, value_enum, default_value_t = SweepMode::Grid)]
    mode: SweepMode,
    /// Configs to draw in random mode.
    #[arg(long)]
    n: Option<usize>,
    /// Configs evaluated concurrently.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Dataset manifest; split into train and test files.
    #[arg(long)]
    manifest: PathBuf,
    /// Append a wall-clock column to the table.
    #[arg(long)]
    wall_time: bool,
}

#[derive(Args, Debug)]
struct InspectArgs {
    genome: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => TrainConfig::load(p)?,
        None => TrainConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg = cfg.with_seed(s);
    }
    let out = cli.out.as_deref();
    match cli.command {
        Command::GenData(a) => gen_data(&a, &cfg, need_out(out)?),
        Command::Encode(a) => encode(&a, &cfg, need_out(out)?),
        Command::Train(a) => train_cmd(&a, &cfg, need_out(out)?),
        Command::Evaluate(a) => evaluate_cmd(&a, &cfg, need_out(out)?),
        Command::Sweep(a) => sweep_cmd(&a, cli.config.is_some().then_some(&cfg), cli.seed, need_out(out)?),
        Command::Inspect(a) => inspect(&a),
    }
}

fn need_out(out: Option<&Path>) -> Result<&Path> {
    out.context("--out is required for this subcommand")
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn gen_data(a: &GenDataArgs, cfg: &TrainConfig, dir: &Path) -> Result<()> {
    if a.files == 0 || a.samples < a.files {
        bail!("need at least one sample per file");
    }
    create_dir(dir)?;
    let samples: Vec<ClusterSample> = generate_synthetic(a.samples, cfg.seed, &SyntheticConfig::default())?;
    let per_file = a.samples.div_ceil(a.files);
    let mut paths = Vec::new();
    for (i, chunk) in samples.chunks(per_file).enumerate() {
        let p = dir.join(format!("clusters_{i:03}.csv"));
        save_dataset(&p, chunk)?;
        paths.push(p);
    }
    let manifest = DatasetManifest::from_files(&paths)?;
    manifest.save(&dir.join("manifest.txt"))?;
    println!("wrote {} samples in {} files", a.samples, paths.len());
    Ok(())
}

fn encode(a: &EncodeArgs, cfg: &TrainConfig, dir: &Path) -> Result<()> {
    let samples: Vec<ClusterSample> = load_dataset(&a.input)?;
    create_dir(dir)?;
    let params: EncoderParams = cfg.encoder;
    for (i, s) in samples.iter().enumerate() {
        let raster = if a.pixels {
            pixel_rasters(s, &params)?
        } else {
            let shape = s.shape();
            let pattern = build_pattern(cfg.network.pattern, shape.rows, shape.cols)?;
            encode_cluster(s, &params, &pattern)?
        };
        write_spike_dump(&dir.join(format!("spikes_{i:05}.csv")), &raster, params.t_res_ps)?;
    }
    println!("wrote {} spike dumps", samples.len());
    Ok(())
}

fn train_cmd(a: &TrainArgs, cfg: &TrainConfig, dir: &Path) -> Result<()> {
    let manifest = DatasetManifest::load(&a.manifest)?;
    let (train_m, test_m) = split_by_files(&manifest, cfg.eval.test_fraction, cfg.seed)?;
    let seeds = a
        .seed_genomes
        .iter()
        .map(|p| read_genome(p))
        .collect::<Result<Vec<_>>>()?;
    let outcome = train(&train_m, cfg, &seeds)?;
    create_dir(dir)?;
    train_m.save(&dir.join("train_manifest.txt"))?;
    test_m.save(&dir.join("test_manifest.txt"))?;
    write(&dir.join("genome.toml"), &serialize_genome(&outcome.best))?;
    let mut csv = format!("{}\n", GenerationReport::CSV_HEADER);
    for r in &outcome.reports {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    write(&dir.join("reports.csv"), &csv)?;
    println!(
        "best fitness {} at generation {}; neurons={} synapses={}",
        outcome.best_fitness,
        outcome.best_generation,
        outcome.best.neurons().len(),
        outcome.best.synapses().len()
    );
    Ok(())
}

fn evaluate_cmd(a: &EvaluateArgs, cfg: &TrainConfig, dir: &Path) -> Result<()> {
    let genome = read_genome(&a.genome)?;
    let test = DatasetManifest::load(&a.manifest)?;
    let ev = evaluate(&genome, &test, cfg)?;
    create_dir(dir)?;
    let text = ev.report.to_kv_text();
    write(&dir.join("report.txt"), &text)?;
    write(&dir.join("turn_on.csv"), &ev.turn_on.to_csv())?;
    print!("{text}");
    Ok(())
}

fn sweep_cmd(a: &SweepArgs, cfg: Option<&TrainConfig>, seed: Option<u64>, out: &Path) -> Result<()> {
    let file = SweepFile::load(&a.space)?;
    let base = cfg.cloned().or(file.train.clone()).unwrap_or_default();
    let global_seed = seed.unwrap_or(base.seed);
    let points = match a.mode {
        SweepMode::Grid => enumerate_grid(&file.space),
        SweepMode::Random => {
            let n = a.n.context("--n is required in random mode")?;
            sample_random(&file.space, n, global_seed)?
        }
    };
    let manifest = DatasetManifest::load(&a.manifest)?;
    let (train_m, test_m) = split_by_files(&manifest, base.eval.test_fraction, global_seed)?;
    let results = run_sweep(&points, &train_m, &test_m, &base, global_seed, a.workers)?;
    extract_table(&results, out, a.wall_time)?;
    let failed = results.iter().filter(|r| !r.is_ok()).count();
    println!("{} configs, {failed} failed", results.len());
    Ok(())
}

fn inspect(a: &InspectArgs) -> Result<()> {
    let g = read_genome(&a.genome)?;
    let io = g.io();
    println!("inputs={}", io.inputs);
    println!("outputs={}", io.outputs);
    println!("hidden={}", g.hidden_count());
    println!("neurons={}", g.neurons().len());
    println!("synapses={}", g.synapses().len());
    println!("parameters={}", count_parameters(&g));
    Ok(())
}

fn read_genome(path: &Path) -> Result<neurofilter::NetworkGenome> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    deserialize_genome(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
