//! Command-line front end. Every subcommand is a thin adapter over the
//! library: it reads the documented file formats, calls one module
//! operation, and writes the documented outputs. Errors exit nonzero
//! with a single `error: ...` line on stderr.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use strengthnet::audio::{
    load_wav, mel_spectrogram, read_norm_stats, write_mel_cache, write_norm_stats, FeatureMode,
    MelConfig, NormStats,
};
use strengthnet::data::{
    derive_ground_truth, CorpusManifest, FeatureStore, RankerSet, MODEL_EMOTIONS, NEUTRAL_LABEL,
};
use strengthnet::eval::{
    argmax, build_report, write_confusion_tsv, write_histogram_tsv, write_predictions,
    write_report, EvalRow, Prediction,
};
use strengthnet::model::{load_checkpoint, save_checkpoint, StrengthNet};
use strengthnet::rank::{build_pair_sets, train_ranker, write_ranking_model, PairLimits, SolverConfig};
use strengthnet::synth::{generate_corpus, SynthSpec};
use strengthnet::train::{fit, parse_config_file, write_training_log, FitOptions};

/// File name for corpus normalization stats inside a feature directory.
const STATS_FILE: &str = "stats.nrms";

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Msg(String),
    #[error(transparent)]
    Audio(#[from] strengthnet::audio::AudioError),
    #[error(transparent)]
    Data(#[from] strengthnet::data::DataError),
    #[error(transparent)]
    Model(#[from] strengthnet::model::ModelError),
    #[error(transparent)]
    Rank(#[from] strengthnet::rank::RankError),
    #[error(transparent)]
    Train(#[from] strengthnet::train::TrainError),
    #[error(transparent)]
    Eval(#[from] strengthnet::eval::EvalError),
    #[error(transparent)]
    Synth(#[from] strengthnet::synth::SynthError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

type CliResult<V> = Result<V, CliError>;

fn msg(s: impl Into<String>) -> CliError {
    CliError::Msg(s.into())
}

#[derive(Parser)]
#[command(
    name = "strengthnet",
    about = "Speech emotion strength: feature extraction, ranking, training, inference, evaluation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute mel spectrograms for every manifest utterance plus corpus normalization stats
    ExtractFeatures(ExtractFeaturesArgs),
    /// Fit one ranking model for a (dataset, emotion) group
    TrainRanker(TrainRankerArgs),
    /// Fill a manifest's strength column from per-group ranking models
    DeriveStrength(DeriveStrengthArgs),
    /// Train the strength/emotion network
    Train(TrainArgs),
    /// Predict strength and emotion for a manifest with a frozen checkpoint
    Infer(InferArgs),
    /// Score predictions against a ground-truth manifest
    Evaluate(EvaluateArgs),
    /// Generate a deterministic synthetic corpus
    Synth(SynthArgs),
}

#[derive(Args)]
struct ExtractFeaturesArgs {
    /// Corpus manifest TSV; wav paths resolve relative to its directory
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory for per-utterance .melf files
    #[arg(long)]
    out: PathBuf,
    /// Where to write normalization stats (default: OUT/stats.nrms)
    #[arg(long)]
    norm_stats: Option<PathBuf>,
}

#[derive(Args)]
struct TrainRankerArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Directory of .melf files from extract-features
    #[arg(long)]
    features: PathBuf,
    /// Emotion whose strength the ranker scores
    #[arg(long)]
    emotion: String,
    /// Dataset id the ranker belongs to
    #[arg(long)]
    dataset: String,
    /// Output .rank file
    #[arg(long)]
    out: PathBuf,
    /// Regularization weight
    #[arg(long = "C", default_value_t = 1.0)]
    c: f64,
    /// Pair sampling seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cap on similar pairs; use 0 when within-category strengths vary
    /// too much for the similarity assumption to hold
    #[arg(long, default_value_t = 5000)]
    max_similar: usize,
}

#[derive(Args)]
struct DeriveStrengthArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Directory of .rank files, one per (dataset, emotion) group
    #[arg(long)]
    rankers: PathBuf,
    /// Output manifest with the strength column filled
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Training manifest with derived strength column
    #[arg(long)]
    train: PathBuf,
    /// Validation manifest
    #[arg(long)]
    val: PathBuf,
    /// Directory of .melf files plus stats.nrms
    #[arg(long)]
    features: PathBuf,
    /// Flat key=value config file
    #[arg(long)]
    config: PathBuf,
    /// Output checkpoint
    #[arg(long)]
    out: PathBuf,
    /// Output JSONL epoch log
    #[arg(long)]
    log: PathBuf,
    /// Overrides the config file's train.seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct InferArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    /// Directory of .melf files for the manifest's utterances
    #[arg(long)]
    features: PathBuf,
    /// Output prediction TSV
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Prediction TSV from infer
    #[arg(long)]
    pred: PathBuf,
    /// Manifest holding ground-truth strength and emotion
    #[arg(long)]
    truth: PathBuf,
    /// Output report JSON; histogram/confusion TSVs land beside it
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Corpus recipe JSON
    #[arg(long)]
    spec: PathBuf,
    /// Output directory (wavs/, manifest.tsv, truth.tsv)
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::ExtractFeatures(args) => extract_features(args),
        Command::TrainRanker(args) => train_ranker_cmd(args),
        Command::DeriveStrength(args) => derive_strength(args),
        Command::Train(args) => train_cmd(args),
        Command::Infer(args) => infer_cmd(args),
        Command::Evaluate(args) => evaluate_cmd(args),
        Command::Synth(args) => synth_cmd(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Wav paths in manifests are relative to the manifest's directory
/// unless absolute.
fn resolve_wav(manifest_path: &Path, wav_path: &str) -> PathBuf {
    let p = Path::new(wav_path);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        manifest_path.parent().unwrap_or_else(|| Path::new(".")).join(p)
    }
}

fn load_corpus_specs(
    manifest_path: &Path,
    manifest: &CorpusManifest,
) -> CliResult<FeatureStore> {
    let cfg = MelConfig::default();
    let mut store = FeatureStore::new();
    for r in &manifest.records {
        let clip = load_wav(&resolve_wav(manifest_path, &r.wav_path))?;
        if clip.utterance_id != r.utterance_id {
            // Cache keys come from the manifest, not the file stem.
            let mut clip = clip;
            clip.utterance_id = r.utterance_id.clone();
            store.insert(r.utterance_id.clone(), mel_spectrogram(&clip, &cfg)?)?;
        } else {
            store.insert(r.utterance_id.clone(), mel_spectrogram(&clip, &cfg)?)?;
        }
    }
    Ok(store)
}

fn extract_features(args: ExtractFeaturesArgs) -> CliResult<()> {
    let manifest = CorpusManifest::read_tsv(&args.manifest)?;
    let cfg = MelConfig::default();
    std::fs::create_dir_all(&args.out)?;
    let mut specs = Vec::with_capacity(manifest.len());
    for r in &manifest.records {
        let clip = load_wav(&resolve_wav(&args.manifest, &r.wav_path))?;
        let spec = mel_spectrogram(&clip, &cfg)?;
        write_mel_cache(&args.out.join(format!("{}.melf", r.utterance_id)), &spec)?;
        specs.push(spec);
    }
    let stats = NormStats::from_corpus(&specs)
        .map_err(|e| msg(format!("normalization stats: {e}")))?;
    let stats_path = args.norm_stats.unwrap_or_else(|| args.out.join(STATS_FILE));
    write_norm_stats(&stats_path, &stats)?;
    println!(
        "extracted {} spectrograms -> {} (stats -> {})",
        manifest.len(),
        args.out.display(),
        stats_path.display()
    );
    Ok(())
}

fn train_ranker_cmd(args: TrainRankerArgs) -> CliResult<()> {
    let manifest = CorpusManifest::read_tsv(&args.manifest)?;
    let store = FeatureStore::load_dir(&args.features)?;
    let mut labels = Vec::new();
    let mut features = Vec::new();
    for r in &manifest.records {
        if r.dataset_id != args.dataset {
            continue;
        }
        labels.push(r.emotion.clone());
        features.push(store.functionals(&r.utterance_id, FeatureMode::Full)?);
    }
    if labels.is_empty() {
        return Err(msg(format!("manifest has no records for dataset '{}'", args.dataset)));
    }
    let limits = PairLimits { max_similar: args.max_similar, ..PairLimits::default() };
    let pairs = build_pair_sets(
        &labels,
        &features,
        &args.emotion,
        &args.dataset,
        NEUTRAL_LABEL,
        limits,
        args.seed,
    )?;
    let solver = SolverConfig { c: args.c, ..SolverConfig::default() };
    let fitted = train_ranker(&pairs, &solver)?;
    write_ranking_model(&args.out, &fitted.model)?;
    println!(
        "ranker {}/{}: {} ordered + {} similar pairs, converged {} in {} iters -> {}",
        args.dataset,
        args.emotion,
        pairs.ordered.len(),
        pairs.similar.len(),
        fitted.converged,
        fitted.iterations,
        args.out.display()
    );
    Ok(())
}

fn derive_strength(args: DeriveStrengthArgs) -> CliResult<()> {
    let manifest = CorpusManifest::read_tsv(&args.manifest)?;
    let store = load_corpus_specs(&args.manifest, &manifest)?;
    let rankers = RankerSet::load_dir(&args.rankers)?;
    if rankers.is_empty() {
        return Err(msg(format!("no .rank files in {}", args.rankers.display())));
    }
    let derived = derive_ground_truth(&manifest, &store, &rankers, FeatureMode::Full)?;
    derived.write_tsv(&args.out)?;
    let neutral = derived.records.iter().filter(|r| r.strength.is_none()).count();
    println!(
        "derived strength for {} records ({} neutral left empty) -> {}",
        derived.len(),
        neutral,
        args.out.display()
    );
    Ok(())
}

fn train_cmd(args: TrainArgs) -> CliResult<()> {
    let (model_config, mut train_config) = parse_config_file(&args.config)?;
    if let Some(seed) = args.seed {
        train_config.seed = seed;
    }
    let train_manifest = CorpusManifest::read_tsv(&args.train)?;
    let val_manifest = CorpusManifest::read_tsv(&args.val)?;
    let store = FeatureStore::load_dir(&args.features)?;
    let stats_path = args.features.join(STATS_FILE);
    if !stats_path.exists() {
        return Err(msg(format!(
            "{} not found; run extract-features on this directory first",
            stats_path.display()
        )));
    }
    let stats = read_norm_stats(&stats_path)?;
    let mut options = FitOptions::default();
    options.on_epoch = Some(Box::new(|log| {
        println!(
            "epoch {:>4}  l_total {:.5}  val_mae {:.5}  val_acc {:.3}  ({:.1}s)",
            log.epoch, log.l_total, log.val_mae, log.val_acc, log.seconds
        );
    }));
    let outcome = fit(
        &model_config,
        &train_config,
        &train_manifest,
        &val_manifest,
        &store,
        &stats,
        options,
    )?;
    save_checkpoint(&args.out, &outcome.model.params, &outcome.model.config, &stats)?;
    write_training_log(&args.log, &outcome.log)?;
    println!(
        "best epoch {} (val_mae {:.5}){} -> {} (log -> {})",
        outcome.best_epoch,
        outcome.best_val_mae,
        if outcome.stopped_early { ", stopped early" } else { "" },
        args.out.display(),
        args.log.display()
    );
    Ok(())
}

fn infer_cmd(args: InferArgs) -> CliResult<()> {
    let (params, config, stats) = load_checkpoint(&args.checkpoint)?;
    let net = StrengthNet::new(config, params)?;
    let manifest = CorpusManifest::read_tsv(&args.manifest)?;
    let store = FeatureStore::load_dir(&args.features)?;
    let mut predictions = Vec::with_capacity(manifest.len());
    for r in &manifest.records {
        let spec = store.normalized(&r.utterance_id, &stats)?;
        let out = net.infer(&spec)?;
        let class = argmax(&out.emotion_probs);
        predictions.push(Prediction {
            utterance_id: r.utterance_id.clone(),
            strength: out.utterance_score as f64,
            emotion: MODEL_EMOTIONS[class].to_string(),
            probs: out.emotion_probs,
        });
    }
    write_predictions(&args.out, &predictions)?;
    println!("wrote {} predictions -> {}", predictions.len(), args.out.display());
    Ok(())
}

fn evaluate_cmd(args: EvaluateArgs) -> CliResult<()> {
    let predictions = strengthnet::eval::read_predictions(&args.pred)?;
    let truth = CorpusManifest::read_tsv(&args.truth)?;
    let by_id: std::collections::HashMap<&str, &Prediction> =
        predictions.iter().map(|p| (p.utterance_id.as_str(), p)).collect();
    let mut rows = Vec::new();
    let mut skipped = 0usize;
    for r in &truth.records {
        let (Some(gt_strength), Some(gt_class)) = (
            r.strength,
            strengthnet::data::emotion_class_index(&r.emotion),
        ) else {
            skipped += 1;
            continue;
        };
        let p = by_id
            .get(r.utterance_id.as_str())
            .ok_or_else(|| msg(format!("no prediction for '{}'", r.utterance_id)))?;
        rows.push(EvalRow {
            dataset_id: r.dataset_id.clone(),
            pred_strength: p.strength,
            gt_strength,
            pred_probs: p.probs.clone(),
            gt_class,
        });
    }
    if rows.is_empty() {
        return Err(msg("truth manifest has no scoreable records".to_string()));
    }
    let report = build_report(&rows)?;
    write_report(&args.out, &report)?;
    let stem = args
        .out
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| msg(format!("bad report path {}", args.out.display())))?;
    let dir = args.out.parent().unwrap_or_else(|| Path::new("."));
    let histogram_path = dir.join(format!("{stem}.histogram.tsv"));
    let confusion_path = dir.join(format!("{stem}.confusion.tsv"));
    write_histogram_tsv(&histogram_path, &report.histogram)?;
    write_confusion_tsv(&confusion_path, &report.confusion)?;
    println!(
        "evaluated {} utterances ({} skipped, no ground truth): mae {:.5}, ser_accuracy {:.3}, spearman {:.3} -> {}",
        rows.len(),
        skipped,
        report.mae,
        report.ser_accuracy,
        report.spearman,
        args.out.display()
    );
    Ok(())
}

fn synth_cmd(args: SynthArgs) -> CliResult<()> {
    let spec = SynthSpec::read_json(&args.spec)?;
    let generated = generate_corpus(&spec, &args.out)?;
    println!(
        "generated {} utterances -> {} (manifest {}, truth {})",
        generated.manifest.len(),
        args.out.display(),
        generated.manifest_path.display(),
        generated.truth_path.display()
    );
    Ok(())
}
