use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use goe_core::eval::{
    load_for, open_session, results_table, run_experiment, score_histogram, sweep_pseudo_count, sweep_table, aupr,
    auroc, fpr_at_95_tpr, EvalReport, ExperimentConfig, LlmBackend, Method, Metrics,
};
use goe_core::graph::planted::{write_planted, PlantedConfig};
use goe_core::graph::{compute_id_ratio, load_dataset, sample_data_split};
use goe_core::llm::{
    annotate_nodes, annotation_accuracy, generate_pseudo_ood, identify_pseudo_ood, write_generated, IdentifyOptions,
};

/// Dataset-level defaults picked up when no --config is given.
const DATASET_CONFIG: &str = "experiment.json";

#[derive(Parser)]
#[command(name = "goe", version, about = "Graph OOD detection with LLM pseudo-OOD exposure")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (JSON); defaults to <dir>/experiment.json if present.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seeds to run, overriding the config (repeatable or comma-separated).
    #[arg(long, value_delimiter = ',')]
    seed: Vec<u64>,
}

#[derive(Args, Clone)]
struct LlmArgs {
    /// Use the deterministic keyword mock LLM.
    #[arg(long, conflicts_with = "replay")]
    mock: bool,
    /// Answer only from this cache file.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Cache file for new responses.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Model name sent to the endpoint.
    #[arg(long)]
    model: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Pool {
    /// Unlabeled nodes outside every split set: builds pseudo-OOD sets.
    Unlabeled,
    /// Test ID and OOD nodes: measures annotation accuracy only.
    Test,
}

#[derive(Subcommand)]
enum Command {
    /// Check a dataset directory, or write the planted synthetic one.
    Prepare {
        dir: PathBuf,
        /// Write the seeded planted dataset into <dir>.
        #[arg(long)]
        planted: bool,
        #[arg(long, default_value_t = PlantedConfig::default().seed)]
        planted_seed: u64,
    },
    /// Ask the LLM which unlabeled nodes are OOD.
    Annotate {
        dir: PathBuf,
        #[arg(long, default_value_t = 200)]
        sample: usize,
        #[arg(long, value_enum, default_value = "unlabeled")]
        pool: Pool,
        #[arg(long)]
        concurrency: Option<usize>,
        #[command(flatten)]
        llm: LlmArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Ask the LLM for pseudo-OOD nodes of every OOD category.
    Generate {
        dir: PathBuf,
        #[arg(long, default_value_t = 10)]
        per_class: usize,
        #[command(flatten)]
        llm: LlmArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Train and evaluate one method.
    Train {
        dir: PathBuf,
        #[arg(long)]
        method: Method,
        /// Run directory; defaults to <dir>/runs/<method>.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        llm: LlmArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Recompute a run's metrics from its score and prediction files.
    Eval { run_dir: PathBuf },
    /// Run several methods and write a results table.
    Compare {
        dir: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "msp,entropy,energy,energy_prop,goe_identifier,goe_generator")]
        methods: Vec<Method>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        llm: LlmArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Vary the number of generated pseudo-OOD nodes.
    SweepCount {
        dir: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0,2,3,5,10,20")]
        counts: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        llm: LlmArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Write score histograms (hist.csv) for every seed of a run.
    ExportScores {
        run_dir: PathBuf,
        #[arg(long, default_value_t = 50)]
        bins: usize,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn load_config(dir: &Path, common: &Common, llm: Option<&LlmArgs>) -> Result<ExperimentConfig> {
    let path = common.config.clone().or_else(|| {
        let p = dir.join(DATASET_CONFIG);
        p.exists().then_some(p)
    });
    let mut config = match path {
        Some(p) => ExperimentConfig::load(&p).with_context(|| format!("reading {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    config.dataset = dir.to_path_buf();
    if !common.seed.is_empty() {
        config.seeds = common.seed.clone();
    }
    if let Some(llm) = llm {
        if llm.mock {
            config.llm.backend = LlmBackend::Mock;
        }
        if let Some(path) = &llm.replay {
            config.llm.backend = LlmBackend::Replay;
            config.llm.cache = Some(path.clone());
        }
        if let Some(path) = &llm.cache {
            if llm.replay.is_some() {
                bail!("--cache and --replay are mutually exclusive");
            }
            config.llm.cache = Some(path.clone());
        }
        if llm.model.is_some() {
            config.llm.model = llm.model.clone();
        }
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Prepare { dir, planted, planted_seed } => prepare(&dir, planted, planted_seed),
        Command::Annotate { dir, sample, pool, concurrency, llm, common } => {
            let mut config = load_config(&dir, &common, Some(&llm))?;
            config.identify.sample_size = sample;
            if let Some(c) = concurrency {
                config.identify.concurrency = c;
            }
            annotate(&config, pool)
        }
        Command::Generate { dir, per_class, llm, common } => {
            let mut config = load_config(&dir, &common, Some(&llm))?;
            config.generate.per_class = per_class;
            generate(&config)
        }
        Command::Train { dir, method, out, llm, common } => {
            let mut config = load_config(&dir, &common, Some(&llm))?;
            config.method = method;
            config.output_dir = Some(out.unwrap_or_else(|| dir.join("runs").join(method.as_str())));
            let report = run_experiment(&config)?;
            print!("{}", results_table(&[report]));
            println!("report: {}", config.output_dir.unwrap().join("report.json").display());
            Ok(())
        }
        Command::Eval { run_dir } => eval(&run_dir),
        Command::Compare { dir, methods, out, llm, common } => {
            let base = load_config(&dir, &common, Some(&llm))?;
            let out = out.unwrap_or_else(|| dir.join("runs").join("compare"));
            let mut reports = Vec::new();
            for method in methods {
                let config = ExperimentConfig {
                    method,
                    output_dir: Some(out.join(method.as_str())),
                    ..base.clone()
                };
                reports.push(run_experiment(&config).with_context(|| format!("method {method}"))?);
            }
            let table = results_table(&reports);
            write(&out.join("results.md"), &table)?;
            print!("{table}");
            Ok(())
        }
        Command::SweepCount { dir, counts, out, llm, common } => {
            let mut config = load_config(&dir, &common, Some(&llm))?;
            let out = out.unwrap_or_else(|| dir.join("runs").join("sweep"));
            config.output_dir = Some(out.clone());
            let rows = sweep_pseudo_count(&config, &counts)?;
            let table = sweep_table(&rows);
            write(&out.join("sweep.md"), &table)?;
            let summary: Vec<_> = rows
                .iter()
                .map(|(count, r)| serde_json::json!({ "count": count, "mean": r.mean, "std": r.std }))
                .collect();
            write(&out.join("sweep.json"), &(serde_json::to_string_pretty(&summary)? + "\n"))?;
            print!("{table}");
            Ok(())
        }
        Command::ExportScores { run_dir, bins } => export_scores(&run_dir, bins),
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn prepare(dir: &Path, planted: bool, seed: u64) -> Result<()> {
    if planted {
        let tag = write_planted(dir, &PlantedConfig { seed, ..Default::default() })?;
        // the planted graph is too small for 500 + 500 test nodes
        let config = serde_json::json!({
            "split": { "train_per_class": 20, "val_per_class": 10, "test_id": 150, "test_ood": 150 }
        });
        write(&dir.join(DATASET_CONFIG), &(serde_json::to_string_pretty(&config)? + "\n"))?;
        println!("wrote planted dataset: {} nodes, {} edges", tag.graph.node_count(), tag.graph.edges().len());
    }
    let (graph, manifest) = load_dataset(dir)?;
    println!("dataset {}: {} nodes, {} edges, d = {}", manifest.name, graph.node_count(), graph.edges().len(), graph.embedding_dim());
    let config = load_config(dir, &Common { config: None, seed: Vec::new() }, None)?;
    match load_for(&config) {
        Ok(data) => {
            println!(
                "ID classes {:?}, OOD classes {:?}, ID ratio {:.4}",
                data.classes.id_classes(),
                data.classes.ood_classes(),
                compute_id_ratio(graph.labels(), &data.classes)
            );
            sample_data_split(&data.graph, &data.classes, 0, config.split).context("checking the split sizes")?;
        }
        Err(e) => println!("class split not checked: {e}"),
    }
    Ok(())
}

fn annotate(config: &ExperimentConfig, pool: Pool) -> Result<()> {
    let data = load_for(config)?;
    let session = open_session(config)?;
    for &seed in &config.seeds {
        let split = sample_data_split(&data.graph, &data.classes, seed, config.split)?;
        let options = IdentifyOptions { seed, ..config.identify.clone() };
        match pool {
            Pool::Unlabeled => {
                let (set, annotations) = identify_pseudo_ood(
                    &data.graph,
                    &data.manifest.category_names,
                    &data.manifest.object_kind,
                    &data.classes,
                    &split,
                    &session,
                    &options,
                )?;
                let path = config.pseudo_ood_path(seed);
                if let Some(parent) = path.parent() {
                    std::fs::create_dir_all(parent)?;
                }
                set.save(&path)?;
                let acc = annotation_accuracy(&annotations, data.graph.labels(), &data.classes)?;
                println!(
                    "seed {seed}: {} of {} sampled nodes called OOD (annotation accuracy {acc:.4}) -> {}",
                    set.len(),
                    annotations.len(),
                    path.display()
                );
            }
            Pool::Test => {
                let nodes: Vec<usize> = split.test_id.iter().chain(&split.test_ood).copied().collect();
                let names: Vec<String> = data
                    .classes
                    .id_classes()
                    .iter()
                    .map(|&c| data.manifest.category_name(c).unwrap_or_default().to_owned())
                    .collect();
                let annotations =
                    annotate_nodes(&data.graph, &nodes, &names, &data.manifest.object_kind, &session, &options)?;
                let acc = annotation_accuracy(&annotations, data.graph.labels(), &data.classes)?;
                println!("seed {seed}: annotation accuracy on {} test nodes: {acc:.4}", annotations.len());
            }
        }
    }
    Ok(())
}

fn generate(config: &ExperimentConfig) -> Result<()> {
    let data = load_for(config)?;
    let session = open_session(config)?;
    let names: Vec<String> = data
        .classes
        .ood_classes()
        .iter()
        .map(|&c| data.manifest.category_name(c).unwrap_or_default().to_owned())
        .collect();
    let outcome = generate_pseudo_ood(&names, &data.manifest.object_kind, &session, &config.generate)?;
    for (category, got) in &outcome.shortfalls {
        println!("warning: '{category}' produced only {got} of {} nodes", config.generate.per_class);
    }
    let path = config.dataset.join("generated.jsonl");
    write_generated(&path, &outcome.nodes)?;
    println!("{} generated nodes -> {}", outcome.nodes.len(), path.display());
    Ok(())
}

fn seed_dirs(run_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(run_dir)
        .with_context(|| format!("reading {}", run_dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() && p.file_name().is_some_and(|n| n.to_string_lossy().starts_with("seed-")))
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        bail!("{} has no seed-* directories", run_dir.display());
    }
    Ok(dirs)
}

fn read_scores(dir: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let path = dir.join("scores.csv");
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let (mut id, mut ood) = (Vec::new(), Vec::new());
    for (i, line) in text.lines().enumerate().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let [_, group, score] = fields[..] else { bail!("{}:{}: expected 3 fields", path.display(), i + 1) };
        let score: f64 = score.parse().with_context(|| format!("{}:{}", path.display(), i + 1))?;
        match group {
            "id" => id.push(score),
            "ood" => ood.push(score),
            other => bail!("{}:{}: unknown group {other:?}", path.display(), i + 1),
        }
    }
    Ok((id, ood))
}

fn eval(run_dir: &Path) -> Result<()> {
    let report = EvalReport::load(&run_dir.join("report.json"))?;
    for dir in seed_dirs(run_dir)? {
        let (id, ood) = read_scores(&dir)?;
        let path = dir.join("predictions.csv");
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let rows: Vec<&str> = text.lines().skip(1).collect();
        let correct = rows
            .iter()
            .filter(|l| {
                let f: Vec<&str> = l.split(',').collect();
                f.len() == 3 && f[1] == f[2]
            })
            .count();
        let metrics = Metrics {
            id_acc: correct as f64 / rows.len().max(1) as f64,
            auroc: auroc(&id, &ood)?,
            aupr: aupr(&id, &ood)?,
            fpr_at_95: fpr_at_95_tpr(&id, &ood)?,
        };
        let name = dir.file_name().unwrap().to_string_lossy().into_owned();
        let seed: u64 = name.trim_start_matches("seed-").parse()?;
        if let Some(stored) = report.seeds.iter().find(|r| r.seed == seed) {
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-9;
            let m = stored.metrics;
            if !(close(m.id_acc, metrics.id_acc)
                && close(m.auroc, metrics.auroc)
                && close(m.aupr, metrics.aupr)
                && close(m.fpr_at_95, metrics.fpr_at_95))
            {
                bail!("{name}: recomputed metrics {metrics:?} differ from report.json {m:?}");
            }
        }
        println!(
            "{name}: ID ACC {:.4}  AUROC {:.4}  AUPR {:.4}  FPR@95 {:.4}",
            metrics.id_acc, metrics.auroc, metrics.aupr, metrics.fpr_at_95
        );
    }
    print!("{}", results_table(&[report]));
    Ok(())
}

fn export_scores(run_dir: &Path, bins: usize) -> Result<()> {
    for dir in seed_dirs(run_dir)? {
        let (id, ood) = read_scores(&dir)?;
        let hist = score_histogram(&id, &ood, bins)?;
        let path = dir.join("hist.csv");
        write(&path, &hist.to_csv())?;
        println!("{}", path.display());
    }
    Ok(())
}
