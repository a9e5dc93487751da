//! Multi-seed experiment runs: split, pseudo-OOD source, training,
//! scoring, metrics and on-disk artifacts.

use super::metrics::{aupr, auroc, fpr_at_95_tpr, id_accuracy, predict};
use super::report::{EvalReport, Metrics, SeedRecord};
use crate::error::{Error, Result};
use crate::gcn::{forward, train, train_binary_head, write_params, Mode, TrainConfig, TrainingData};
use crate::graph::{
    load_dataset, make_class_split, sample_data_split, save_split, ClassSplit, DataSplit, DatasetManifest,
    NormalizedAdjacency, SplitSizes, TextAttributedGraph,
};
use crate::llm::{
    augment_graph, embed_texts, generate_pseudo_ood, identify_pseudo_ood, EdgeMode, EmbeddingProvider,
    GenerateOptions, HashEmbedding, HttpChatClient, IdentifyOptions, LlmSession, LookupEmbedding, MockChatClient,
    PseudoOodMode, PseudoOodSet, RemoteEmbedding, ResponseCache,
};
use crate::objectives::ObjectiveSpec;
use crate::scoring::{energy_score, entropy_score, kplus1_score, msp_score, propagate_scores, ScoreMethod};
use ndarray::Array2;
use rand::seq::{IndexedRandom, SliceRandom};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Msp,
    Entropy,
    Energy,
    EnergyProp,
    GoeIdentifier,
    GoeGenerator,
    Kplus1,
    BinaryHead,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Msp,
        Method::Entropy,
        Method::Energy,
        Method::EnergyProp,
        Method::GoeIdentifier,
        Method::GoeGenerator,
        Method::Kplus1,
        Method::BinaryHead,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Msp => "msp",
            Method::Entropy => "entropy",
            Method::Energy => "energy",
            Method::EnergyProp => "energy_prop",
            Method::GoeIdentifier => "goe_identifier",
            Method::GoeGenerator => "goe_generator",
            Method::Kplus1 => "kplus1",
            Method::BinaryHead => "binary_head",
        }
    }

    pub fn needs_pseudo_ood(self) -> bool {
        matches!(self, Method::GoeIdentifier | Method::GoeGenerator | Method::Kplus1 | Method::BinaryHead)
    }

    pub fn is_exposure(self) -> bool {
        matches!(self, Method::GoeIdentifier | Method::GoeGenerator)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method {s:?}")))
    }
}

/// Where the pseudo-OOD nodes come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PseudoOodSource {
    /// LLM identification among unlabeled nodes.
    Identified,
    /// LLM-generated nodes appended to the graph.
    Generated,
    /// `count` truly-OOD unlabeled nodes: a perfect identifier.
    Oracle { count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LlmBackend {
    /// Deterministic keyword mock.
    #[default]
    Mock,
    /// Answers only from an existing cache file.
    Replay,
    /// OpenAI-compatible endpoint from the environment.
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct LlmSettings {
    pub backend: LlmBackend,
    /// Cache file; defaults to `annotations.jsonl` in the dataset directory.
    pub cache: Option<PathBuf>,
    /// Defaults to the mock's name, or for replay the cache's only model.
    pub model: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingBackend {
    /// Precomputed vectors keyed by text hash.
    #[default]
    Lookup,
    Hash,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct EmbeddingSettings {
    pub backend: EmbeddingBackend,
    /// Lookup file; defaults to `text_embeddings.jsonl` in the dataset directory.
    pub lookup: Option<PathBuf>,
    pub model: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Propagation {
    pub alpha: f64,
    pub iterations: usize,
}

impl Default for Propagation {
    fn default() -> Self {
        Propagation { alpha: 0.5, iterations: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    /// Defaults to the manifest's list.
    pub id_classes: Option<Vec<i64>>,
    pub method: Method,
    pub train: TrainConfig,
    /// Exposure weights tried per seed; the best on validation is kept.
    pub lambda_grid: Vec<f64>,
    pub seeds: Vec<u64>,
    pub split: SplitSizes,
    /// Score for exposure-trained models; defaults to `energy_prop`.
    pub score_with: Option<ScoreMethod>,
    pub propagation: Propagation,
    /// Defaults to identification, or generation for `goe_generator`.
    pub pseudo_ood: Option<PseudoOodSource>,
    /// Directory of per-seed identified sets written by `annotate`;
    /// defaults to `pseudo_ood/` in the dataset directory.
    pub pseudo_ood_dir: Option<PathBuf>,
    pub identify: IdentifyOptions,
    pub generate: GenerateOptions,
    pub edge_mode: EdgeMode,
    pub llm: LlmSettings,
    pub embedding: EmbeddingSettings,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: PathBuf::new(),
            id_classes: None,
            method: Method::EnergyProp,
            train: TrainConfig::default(),
            lambda_grid: vec![0.01, 0.05],
            seeds: (0..5).collect(),
            split: SplitSizes::default(),
            score_with: None,
            propagation: Propagation::default(),
            pseudo_ood: None,
            pseudo_ood_dir: None,
            identify: IdentifyOptions::default(),
            generate: GenerateOptions::default(),
            edge_mode: EdgeMode::None,
            llm: LlmSettings::default(),
            embedding: EmbeddingSettings::default(),
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Hex sha256 of the JSON form, ignoring the output directory.
    pub fn hash(&self) -> Result<String> {
        let mut copy = self.clone();
        copy.output_dir = None;
        Ok(hex::encode(Sha256::digest(serde_json::to_vec(&copy)?)))
    }

    pub fn score_method(&self) -> ScoreMethod {
        match self.method {
            Method::Msp => ScoreMethod::Msp,
            Method::Entropy => ScoreMethod::Entropy,
            Method::Energy => ScoreMethod::Energy,
            Method::EnergyProp => ScoreMethod::EnergyProp,
            Method::GoeIdentifier | Method::GoeGenerator => self.score_with.unwrap_or(ScoreMethod::EnergyProp),
            Method::Kplus1 => ScoreMethod::Kplus1,
            Method::BinaryHead => ScoreMethod::BinaryHead,
        }
    }

    pub fn pseudo_source(&self) -> PseudoOodSource {
        match (self.method, self.pseudo_ood) {
            (Method::GoeGenerator, _) => PseudoOodSource::Generated,
            (Method::GoeIdentifier, Some(PseudoOodSource::Generated)) => PseudoOodSource::Identified,
            (_, Some(source)) => source,
            _ => PseudoOodSource::Identified,
        }
    }

    pub fn cache_path(&self) -> PathBuf {
        self.llm.cache.clone().unwrap_or_else(|| self.dataset.join("annotations.jsonl"))
    }

    pub fn pseudo_ood_path(&self, seed: u64) -> PathBuf {
        self.pseudo_ood_dir
            .clone()
            .unwrap_or_else(|| self.dataset.join("pseudo_ood"))
            .join(format!("seed-{seed}.json"))
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::InvalidArgument("no seeds configured".into()));
        }
        if self.method.is_exposure() && self.lambda_grid.is_empty() {
            return Err(Error::InvalidArgument("lambda grid is empty".into()));
        }
        if let Some(score) = self.score_with {
            if matches!(score, ScoreMethod::BinaryHead | ScoreMethod::Kplus1) {
                return Err(Error::InvalidArgument(format!("{score} cannot score an exposure-trained model")));
            }
        }
        Ok(())
    }
}

/// A dataset with its class split resolved.
pub struct LoadedDataset {
    pub graph: TextAttributedGraph,
    pub manifest: DatasetManifest,
    pub classes: ClassSplit,
}

pub fn load_for(config: &ExperimentConfig) -> Result<LoadedDataset> {
    let (graph, manifest) = load_dataset(&config.dataset)?;
    let id_list = config
        .id_classes
        .clone()
        .or_else(|| manifest.id_classes.clone())
        .ok_or_else(|| Error::InvalidArgument("no ID classes given and the manifest lists none".into()))?;
    let classes = make_class_split(graph.labels(), &id_list)?;
    Ok(LoadedDataset { graph, manifest, classes })
}

/// Builds the cached LLM session the settings describe.
pub fn open_session(config: &ExperimentConfig) -> Result<LlmSession> {
    let path = config.cache_path();
    match config.llm.backend {
        LlmBackend::Mock => {
            let model = config.llm.model.clone().unwrap_or_else(|| MockChatClient::MODEL.into());
            Ok(LlmSession::new(Box::new(MockChatClient::Keyword), ResponseCache::open(&path)?, &model))
        }
        LlmBackend::Replay => {
            let cache = ResponseCache::read_only(&path)?;
            let model = match &config.llm.model {
                Some(m) => m.clone(),
                None => cache.sole_model().ok_or_else(|| {
                    Error::InvalidArgument(format!("cannot infer the model from {}; set it explicitly", path.display()))
                })?,
            };
            Ok(LlmSession::replay(cache, &model))
        }
        LlmBackend::Remote => {
            let model = config
                .llm
                .model
                .clone()
                .ok_or_else(|| Error::InvalidArgument("remote LLM backend needs a model name".into()))?;
            Ok(LlmSession::new(Box::new(HttpChatClient::from_env()?), ResponseCache::open(&path)?, &model))
        }
    }
}

pub fn embedding_provider(config: &ExperimentConfig, dim: usize) -> Result<Box<dyn EmbeddingProvider>> {
    Ok(match config.embedding.backend {
        EmbeddingBackend::Lookup => {
            let path = config
                .embedding
                .lookup
                .clone()
                .unwrap_or_else(|| config.dataset.join(crate::graph::planted::LOOKUP_FILE));
            Box::new(LookupEmbedding::load(&path, dim)?)
        }
        EmbeddingBackend::Hash => Box::new(HashEmbedding::new(dim)),
        EmbeddingBackend::Remote => {
            let model = config
                .embedding
                .model
                .clone()
                .ok_or_else(|| Error::InvalidArgument("remote embedding backend needs a model name".into()))?;
            Box::new(RemoteEmbedding::from_env(&model, dim)?)
        }
    })
}

/// The training graph for one seed and the pseudo-OOD nodes in it.
struct Exposure {
    graph: Option<TextAttributedGraph>,
    set: Option<PseudoOodSet>,
}

fn oracle_set(graph: &TextAttributedGraph, classes: &ClassSplit, split: &DataSplit, count: usize, seed: u64) -> Result<PseudoOodSet> {
    let candidates: Vec<usize> = split
        .unlabeled_pool(graph.node_count())
        .into_iter()
        .filter(|&v| classes.is_ood(graph.labels()[v]))
        .collect();
    if candidates.len() < count {
        return Err(Error::InsufficientNodes { population: "unlabeled OOD", needed: count, available: candidates.len() });
    }
    let mut rng = crate::rng::stream(seed, "pseudo/oracle");
    let mut node_ids: Vec<usize> = candidates.choose_multiple(&mut rng, count).copied().collect();
    node_ids.sort_unstable();
    Ok(PseudoOodSet { mode: PseudoOodMode::Identified, node_ids, provenance: Vec::new() })
}

/// Identified set for `seed`: the one `annotate` saved if present,
/// otherwise asked of the LLM now.
fn identified_set(
    config: &ExperimentConfig,
    data: &LoadedDataset,
    split: &DataSplit,
    seed: u64,
    session: &mut Option<LlmSession>,
) -> Result<PseudoOodSet> {
    let saved = config.pseudo_ood_path(seed);
    if saved.exists() {
        let set = PseudoOodSet::load(&saved)?;
        let pool: std::collections::BTreeSet<usize> = split.unlabeled_pool(data.graph.node_count()).into_iter().collect();
        if set.mode != PseudoOodMode::Identified || !set.node_ids.iter().all(|v| pool.contains(v)) {
            return Err(Error::InvalidArgument(format!(
                "{} does not match this split; re-run annotate",
                saved.display()
            )));
        }
        return Ok(set);
    }
    let session = match session {
        Some(s) => s,
        None => session.insert(open_session(config)?),
    };
    let options = IdentifyOptions { seed, ..config.identify.clone() };
    let (set, _) = identify_pseudo_ood(
        &data.graph,
        &data.manifest.category_names,
        &data.manifest.object_kind,
        &data.classes,
        split,
        session,
        &options,
    )?;
    Ok(set)
}

fn generated_exposure(config: &ExperimentConfig, data: &LoadedDataset, session: &mut Option<LlmSession>) -> Result<Exposure> {
    let session = match session {
        Some(s) => s,
        None => session.insert(open_session(config)?),
    };
    let names: Vec<String> = data
        .classes
        .ood_classes()
        .iter()
        .map(|&c| {
            data.manifest
                .category_name(c)
                .map(str::to_owned)
                .ok_or_else(|| Error::InvalidArgument(format!("no category name for class {c}")))
        })
        .collect::<Result<_>>()?;
    let mut outcome = generate_pseudo_ood(&names, &data.manifest.object_kind, session, &config.generate)?;
    let provider = embedding_provider(config, data.graph.embedding_dim())?;
    let texts: Vec<String> = outcome.nodes.iter().map(|n| n.text()).collect();
    let vectors = embed_texts(provider.as_ref(), &texts, data.graph.embedding_dim())?;
    for (node, row) in outcome.nodes.iter_mut().zip(vectors.rows()) {
        node.embedding = Some(row.to_vec());
    }
    let (augmented, set) = augment_graph(&data.graph, &outcome.nodes, config.edge_mode)?;
    Ok(Exposure { graph: Some(augmented.graph), set: Some(set) })
}

fn scores_for(
    method: ScoreMethod,
    logits: &Array2<f64>,
    propagation: &NormalizedAdjacency,
    settings: Propagation,
) -> Result<Vec<f64>> {
    Ok(match method {
        ScoreMethod::Msp => msp_score(logits).scores,
        ScoreMethod::Entropy => entropy_score(logits).scores,
        ScoreMethod::Energy => energy_score(logits).scores,
        ScoreMethod::EnergyProp => {
            propagate_scores(&energy_score(logits), propagation, settings.alpha, settings.iterations)?.scores
        }
        ScoreMethod::Kplus1 => kplus1_score(logits).scores,
        ScoreMethod::BinaryHead => {
            return Err(Error::InvalidArgument("binary-head scores need the trained head".into()));
        }
    })
}

/// Everything one seed produced.
pub struct SeedRun {
    pub record: SeedRecord,
    pub split: DataSplit,
    /// One score per node of the training graph.
    pub scores: Vec<f64>,
    pub logits: Array2<f64>,
    pub params: crate::gcn::GcnParams,
}

/// Runs one seed of `config` against a loaded dataset.
pub fn run_seed(
    config: &ExperimentConfig,
    data: &LoadedDataset,
    seed: u64,
    session: &mut Option<LlmSession>,
) -> Result<SeedRun> {
    let split = sample_data_split(&data.graph, &data.classes, seed, config.split)?;
    let exposure = if config.method.needs_pseudo_ood() {
        match config.pseudo_source() {
            PseudoOodSource::Generated => generated_exposure(config, data, session)?,
            PseudoOodSource::Identified => {
                Exposure { graph: None, set: Some(identified_set(config, data, &split, seed, session)?) }
            }
            PseudoOodSource::Oracle { count } => {
                Exposure { graph: None, set: Some(oracle_set(&data.graph, &data.classes, &split, count, seed)?) }
            }
        }
    } else {
        Exposure { graph: None, set: None }
    };
    let graph = exposure.graph.as_ref().unwrap_or(&data.graph);
    let pseudo: Vec<usize> = exposure.set.as_ref().map(|s| s.node_ids.clone()).unwrap_or_default();
    if config.method.needs_pseudo_ood() && pseudo.is_empty() {
        return Err(Error::NoPseudoOod);
    }

    let features = graph.features();
    let adjacency = NormalizedAdjacency::symmetric(graph);
    let propagation = NormalizedAdjacency::row_stochastic(graph);
    let targets = data.classes.targets(graph.labels());
    let k = data.classes.num_id();
    let training = TrainingData {
        features: &features,
        adjacency: &adjacency,
        targets: &targets,
        num_classes: k,
        train_ids: &split.train_id,
        val_id: &split.val_id,
        val_ood: &split.val_ood,
    };
    let train_config = TrainConfig { seed, ..config.train.clone() };
    let score = config.score_method();
    // the backbone of the binary head is selected with plain energy
    let val_score = if score == ScoreMethod::BinaryHead { ScoreMethod::Energy } else { score };
    let scorer = |logits: &Array2<f64>| scores_for(val_score, logits, &propagation, config.propagation);

    let (outcome, lambda) = match config.method {
        Method::GoeIdentifier | Method::GoeGenerator => {
            let mut best: Option<(crate::gcn::TrainOutcome, f64)> = None;
            for &lambda in &config.lambda_grid {
                let objective = ObjectiveSpec::exposure(pseudo.clone(), lambda, train_config.s_id, train_config.s_ood);
                let outcome = train(&training, &train_config, &objective, &scorer)?;
                log::info!("seed {seed} lambda {lambda}: selection {:.4}", outcome.best().selection());
                if best.as_ref().is_none_or(|(b, _)| outcome.best().selection() > b.best().selection()) {
                    best = Some((outcome, lambda));
                }
            }
            let (outcome, lambda) = best.expect("lambda grid is non-empty");
            (outcome, Some(lambda))
        }
        Method::Kplus1 => (train(&training, &train_config, &ObjectiveSpec::kplus1(pseudo.clone()), &scorer)?, None),
        _ => (train(&training, &train_config, &ObjectiveSpec::supervised(), &scorer)?, None),
    };

    let trace = forward(&outcome.params, &adjacency, &features, Mode::Eval)?;
    let mut best_epoch = outcome.best_epoch;
    let scores = if config.method == Method::BinaryHead {
        let (id_ids, ood_ids) = balanced(&split.train_id, &pseudo, seed);
        let head = train_binary_head(&trace.hidden, &id_ids, &ood_ids, &split.val_id, &split.val_ood, &train_config)?;
        best_epoch = head.best_epoch;
        crate::scoring::binary_head_score(&trace.hidden, head.head.weights.as_slice().expect("contiguous"))?.scores
    } else {
        scores_for(score, &trace.logits, &propagation, config.propagation)?
    };

    let pick = |ids: &[usize]| ids.iter().map(|&v| scores[v]).collect::<Vec<_>>();
    let (id_scores, ood_scores) = (pick(&split.test_id), pick(&split.test_ood));
    let metrics = Metrics {
        id_acc: id_accuracy(&trace.logits, &targets, &split.test_id, k)?,
        auroc: auroc(&id_scores, &ood_scores)?,
        aupr: aupr(&id_scores, &ood_scores)?,
        fpr_at_95: fpr_at_95_tpr(&id_scores, &ood_scores)?,
    };
    Ok(SeedRun {
        record: SeedRecord { seed, metrics, lambda, best_epoch, pseudo_ood_count: pseudo.len() },
        split,
        scores,
        logits: trace.logits,
        params: outcome.params,
    })
}

/// Equal-sized ID and pseudo-OOD sets for the binary head: the larger one
/// is subsampled.
fn balanced(id_ids: &[usize], ood_ids: &[usize], seed: u64) -> (Vec<usize>, Vec<usize>) {
    let n = id_ids.len().min(ood_ids.len());
    let mut rng = crate::rng::stream(seed, "binary_head/balance");
    let mut take = |ids: &[usize]| {
        let mut v = ids.to_vec();
        v.shuffle(&mut rng);
        v.truncate(n);
        v.sort_unstable();
        v
    };
    (take(id_ids), take(ood_ids))
}

fn write_seed(dir: &Path, run: &SeedRun, data: &LoadedDataset) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut scores = String::from("node_id,group,score\n");
    for (group, ids) in [("id", &run.split.test_id), ("ood", &run.split.test_ood)] {
        for &v in ids {
            scores.push_str(&format!("{v},{group},{:e}\n", run.scores[v]));
        }
    }
    let path = dir.join("scores.csv");
    std::fs::write(&path, scores).map_err(|e| Error::io(&path, e))?;

    let k = data.classes.num_id();
    let mut predictions = String::from("node_id,label,predicted\n");
    for &v in &run.split.test_id {
        let predicted = data.classes.id_classes()[predict(&run.logits, v, k)];
        predictions.push_str(&format!("{v},{},{predicted}\n", data.graph.labels()[v]));
    }
    let path = dir.join("predictions.csv");
    std::fs::write(&path, predictions).map_err(|e| Error::io(&path, e))?;

    let path = dir.join("metrics.json");
    std::fs::write(&path, serde_json::to_string_pretty(&run.record)? + "\n").map_err(|e| Error::io(&path, e))?;
    write_params(&dir.join("params.bin"), &run.params)?;
    save_split(&dir.join("split.json"), &run.split)
}

/// Runs every configured seed. With an output directory, each seed's
/// artifacts land in `seed-<s>/` as soon as it finishes and the report in
/// `report.json` and `results.md`; a failing seed stops the run and
/// leaves earlier seeds on disk.
pub fn run_experiment(config: &ExperimentConfig) -> Result<EvalReport> {
    config.validate()?;
    let data = load_for(config)?;
    let hash = config.hash()?;
    let mut session = None;
    let mut records = Vec::with_capacity(config.seeds.len());
    for &seed in &config.seeds {
        let run = run_seed(config, &data, seed, &mut session)?;
        log::info!(
            "{} seed {seed}: acc {:.4} auroc {:.4}",
            config.method,
            run.record.metrics.id_acc,
            run.record.metrics.auroc
        );
        if let Some(out) = &config.output_dir {
            write_seed(&out.join(format!("seed-{seed}")), &run, &data)?;
        }
        records.push(run.record);
    }
    let report = EvalReport::new(config.method.as_str(), config.score_method().as_str(), &hash, records)?;
    if let Some(out) = &config.output_dir {
        report.save(&out.join("report.json"))?;
        let path = out.join("results.md");
        std::fs::write(&path, super::report::results_table(std::slice::from_ref(&report)))
            .map_err(|e| Error::io(&path, e))?;
    }
    Ok(report)
}

/// One generator run per count; count 0 trains without exposure and
/// scores the same way.
pub fn sweep_pseudo_count(config: &ExperimentConfig, counts: &[usize]) -> Result<Vec<(usize, EvalReport)>> {
    let score = config.score_with.unwrap_or(ScoreMethod::EnergyProp);
    let baseline = match score {
        ScoreMethod::Msp => Method::Msp,
        ScoreMethod::Entropy => Method::Entropy,
        ScoreMethod::Energy => Method::Energy,
        ScoreMethod::EnergyProp => Method::EnergyProp,
        other => return Err(Error::InvalidArgument(format!("cannot sweep with score {other}"))),
    };
    let mut rows = Vec::with_capacity(counts.len());
    for &count in counts {
        let mut run = config.clone();
        run.output_dir = config.output_dir.as_ref().map(|d| d.join(format!("count-{count}")));
        if count == 0 {
            run.method = baseline;
        } else {
            run.method = Method::GoeGenerator;
            run.score_with = Some(score);
            run.generate.per_class = count;
        }
        rows.push((count, run_experiment(&run)?));
    }
    Ok(rows)
}

/// Markdown table of a count sweep.
pub fn sweep_table(rows: &[(usize, EvalReport)]) -> String {
    let mut out = String::from("| Pseudo-OOD nodes per class | ID ACC | AUROC | AUPR | FPR@95 |\n|---|---|---|---|---|\n");
    for (count, r) in rows {
        let m = r.mean;
        out.push_str(&format!(
            "| {count} | {:.2} | {:.2} | {:.2} | {:.2} |\n",
            100.0 * m.id_acc,
            100.0 * m.auroc,
            100.0 * m.aupr,
            100.0 * m.fpr_at_95
        ));
    }
    out
}
