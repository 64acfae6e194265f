//! Subcommand implementations. Each returns a [`CliError`] whose variant
//! decides the exit code.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use varmap_core::analysis::{
    agreement_error_profile, corpus_keyword_fraction, error_slice, keyword_error_fraction, spanish_stopwords,
    top_error_words, AgreementProfile, KeywordFraction, TokenAttributor,
};
use varmap_core::corpus::{load_dataset_with, write_generic_csv, DatasetFormat, LoadOptions};
use varmap_core::dynamics::{rank_by_score, read_scores_csv, write_scores_csv, RankedList};
use varmap_core::evaluation::{aggregate_over_seeds, evaluate, format_table, write_report_csv, write_series_csv};
use varmap_core::preprocess::normalize_text;
use varmap_core::synthetic::{planted_commons, PlantedConfig};
use varmap_core::trainer::{train_one_vs_rest, train_with_dynamics, BenchmarkReport, DynamicsScope};
use varmap_core::{Dataset, EvalReport, LinearModel, NormalizationConfig, Scorer, TrainConfig};
use varmap_triage::api::{serve, Service};
use varmap_triage::TriageState;

use crate::config::{AssignLabels, ExperimentConfig, LogsConfig};
use crate::error::CliError;
use crate::pipeline::{ingest_log, run_experiment, seed_dataset, write_with};

#[derive(Debug, Parser)]
#[command(name = "varmap", version, about = "Find common examples in language-variety datasets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize the text column of a TSV/CSV file.
    Preprocess(PreprocessArgs),
    /// Train the linear model and write its per-epoch probability log.
    Train(TrainArgs),
    /// Validate an external epoch log and rewrite it canonically.
    IngestLogs(IngestArgs),
    /// Score instances from an epoch log.
    Score(ScoreArgs),
    /// Rank scored instances, highest score first.
    Rank(RankArgs),
    /// Evaluate rankings against the dataset's common flags.
    Eval(EvalArgs),
    /// Error analysis of a ranking's top-N non-common instances.
    Analyze(AnalyzeArgs),
    /// Serve the review queue over HTTP.
    Serve(ServeArgs),
    /// Run the full pipeline from an experiment config.
    Run(RunArgs),
    /// Write a synthetic corpus with planted common examples.
    Synth(SynthArgs),
}

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Preprocess(a) => preprocess(a),
        Command::Train(a) => train(a),
        Command::IngestLogs(a) => ingest(a),
        Command::Score(a) => score(a),
        Command::Rank(a) => rank(a),
        Command::Eval(a) => eval(a),
        Command::Analyze(a) => analyze(a),
        Command::Serve(a) => serve_cmd(a),
        Command::Run(a) => run(a),
        Command::Synth(a) => synth(a),
    }
}

fn parse_format(s: &str) -> Result<DatasetFormat, String> {
    s.parse().map_err(|e: varmap_core::corpus::CorpusError| e.to_string())
}

fn parse_scorer(s: &str) -> Result<Scorer, String> {
    s.parse().map_err(|e: varmap_core::dynamics::ScoreError| e.to_string())
}

fn parse_scope(s: &str) -> Result<DynamicsScope, String> {
    match s {
        "train_split" | "train" => Ok(DynamicsScope::TrainSplit),
        "full_dataset" | "full" => Ok(DynamicsScope::FullDataset),
        other => Err(format!("unknown scope `{other}` (train_split, full_dataset)")),
    }
}

/// `name=path` pair.
fn parse_named(s: &str) -> Result<(String, PathBuf), String> {
    let (name, path) = s.split_once('=').ok_or_else(|| format!("expected NAME=PATH, got `{s}`"))?;
    Ok((name.to_string(), PathBuf::from(path)))
}

#[derive(Debug, Clone, Args)]
pub struct DatasetArgs {
    /// Dataset file.
    #[arg(long)]
    pub dataset: PathBuf,
    /// dsl_tl, cuban_tsv or generic_csv.
    #[arg(long, value_parser = parse_format)]
    pub format: DatasetFormat,
    /// Fail on any bad row instead of recording a rejection.
    #[arg(long)]
    pub strict: bool,
}

impl DatasetArgs {
    fn load(&self) -> Result<Dataset, CliError> {
        if !self.dataset.is_file() {
            return Err(CliError::Config(format!("dataset not found: {}", self.dataset.display())));
        }
        let opts = LoadOptions {
            strict: self.strict,
            ..LoadOptions::for_format(self.format)
        };
        Ok(load_dataset_with(&self.dataset, self.format, &opts)?)
    }
}

fn read_norm_config(path: Option<&Path>) -> Result<NormalizationConfig, CliError> {
    let Some(path) = path else {
        return Ok(NormalizationConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let config: NormalizationConfig =
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    config.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(config)
}

// ---------------------------------------------------------------- preprocess

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// TOML file with normalization settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "text")]
    pub text_column: String,
}

fn delimiter_for(path: &Path) -> u8 {
    match path.extension().and_then(|e| e.to_str()) {
        Some("tsv") | Some("tab") => b'\t',
        _ => b',',
    }
}

fn preprocess(args: PreprocessArgs) -> Result<(), CliError> {
    let config = read_norm_config(args.config.as_deref())?;
    if !args.input.is_file() {
        return Err(CliError::Config(format!("input not found: {}", args.input.display())));
    }
    let delimiter = delimiter_for(&args.input);
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(false)
        .from_path(&args.input)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let headers = reader.headers().map_err(|e| CliError::Data(e.to_string()))?.clone();
    let col = headers
        .iter()
        .position(|h| h == args.text_column)
        .ok_or_else(|| CliError::Data(format!("missing column `{}`", args.text_column)))?;
    if let Some(dir) = args.out.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut writer = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .from_path(&args.out)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    writer.write_record(&headers).map_err(|e| CliError::Internal(e.to_string()))?;
    let mut rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Data(e.to_string()))?;
        let fields: Vec<String> = record
            .iter()
            .enumerate()
            .map(|(i, f)| if i == col { normalize_text(f, &config) } else { f.to_string() })
            .collect();
        writer.write_record(&fields).map_err(|e| CliError::Internal(e.to_string()))?;
        rows += 1;
    }
    writer.flush()?;
    eprintln!("normalized {rows} rows → {}", args.out.display());
    Ok(())
}

// ---------------------------------------------------------------- train

#[derive(Debug, Args)]
pub struct TrainOverrides {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Number of hash buckets (power of two).
    #[arg(long)]
    pub hash_dim: Option<usize>,
    #[arg(long)]
    pub l2: Option<f64>,
    /// train_split or full_dataset.
    #[arg(long, value_parser = parse_scope)]
    pub scope: Option<DynamicsScope>,
}

impl TrainOverrides {
    fn apply(&self, config: &mut TrainConfig) {
        if let Some(v) = self.epochs {
            config.epochs = v;
        }
        if let Some(v) = self.learning_rate {
            config.learning_rate = v;
        }
        if let Some(v) = self.hash_dim {
            config.hash_dim = v;
        }
        if let Some(v) = self.l2 {
            config.l2 = v;
        }
        if let Some(v) = self.scope {
            config.scope = v;
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    /// Directory for `log.jsonl` and `model.vcm`.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Normalize texts with these settings (TOML) before training.
    #[arg(long)]
    pub normalize: Option<PathBuf>,
    /// Also train per-variety binary models and report the comparison.
    #[arg(long)]
    pub benchmark: bool,
    #[command(flatten)]
    pub overrides: TrainOverrides,
}

fn train(args: TrainArgs) -> Result<(), CliError> {
    let mut config = TrainConfig {
        seed: args.seed,
        ..Default::default()
    };
    args.overrides.apply(&mut config);
    config.validate()?;
    let norm = args.normalize.as_deref().map(|p| read_norm_config(Some(p))).transpose()?;
    let mut ds = args.data.load()?;
    if let Some(norm) = &norm {
        varmap_core::preprocess::normalize_dataset(&mut ds, norm);
    }
    let ds = seed_dataset(&ds, args.seed, AssignLabels::Auto);
    let (model, log) = train_with_dynamics(&ds, &config).map_err(|e| CliError::from(e).at("train", Some(args.seed)))?;
    write_with(&args.out_dir.join("log.jsonl"), |w| log.write_jsonl(w))?;
    let mut bytes = Vec::new();
    model.save(&mut bytes)?;
    write_with(&args.out_dir.join("model.vcm"), |w| w.write_all(&bytes))?;
    eprintln!(
        "trained on {} instances for {} epochs → {}",
        log.num_instances(),
        log.epochs(),
        args.out_dir.display()
    );
    if args.benchmark {
        let report = train_one_vs_rest(&ds, &config)?;
        write_with(&args.out_dir.join("benchmark.json"), |w| {
            serde_json::to_writer_pretty(&mut *w, &report)?;
            w.write_all(b"\n")
        })?;
        print_benchmark(&report);
    }
    Ok(())
}

fn print_benchmark(report: &BenchmarkReport) {
    println!(
        "{:<14} {:>8} {:>9} {:>7} {:>7}   ({} instances, {} split)",
        "approach", "accuracy", "precision", "recall", "f1", report.evaluated_instances, report.evaluated_on
    );
    for r in &report.rows {
        println!(
            "{:<14} {:>8.2} {:>9.2} {:>7.2} {:>7.2}",
            r.approach, r.accuracy, r.precision, r.recall, r.f1
        );
    }
}

// ---------------------------------------------------------------- ingest-logs

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub log: PathBuf,
    /// Also check ids and labels against this dataset.
    #[arg(long, requires = "format")]
    pub dataset: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    pub format: Option<DatasetFormat>,
    /// Write the validated log in canonical order.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Treat warnings as errors.
    #[arg(long)]
    pub deny_warnings: bool,
}

fn ingest(args: IngestArgs) -> Result<(), CliError> {
    if !args.log.is_file() {
        return Err(CliError::Config(format!("log not found: {}", args.log.display())));
    }
    let ds = match (&args.dataset, args.format) {
        (Some(path), Some(format)) => Some(
            DatasetArgs {
                dataset: path.clone(),
                format,
                strict: false,
            }
            .load()?,
        ),
        _ => None,
    };
    let (log, warnings) = ingest_log(&args.log, ds.as_ref()).map_err(|e| e.at("ingest-logs", None))?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    if args.deny_warnings && !warnings.is_empty() {
        return Err(CliError::Data(format!("{} warning(s)", warnings.len())).at("ingest-logs", None));
    }
    if let Some(out) = &args.out {
        write_with(out, |w| log.write_jsonl(w))?;
    }
    println!(
        "ok: {} instances × {} epochs, {} labels, {} warnings",
        log.num_instances(),
        log.epochs(),
        log.labels().len(),
        warnings.len()
    );
    Ok(())
}

// ---------------------------------------------------------------- score / rank

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub log: PathBuf,
    /// Repeatable; defaults to dm_mean_pred, dm_std_pred and random.
    #[arg(long = "scorer", value_parser = parse_scorer)]
    pub scorers: Vec<Scorer>,
    /// Seed of the random scorer.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn score(args: ScoreArgs) -> Result<(), CliError> {
    if !args.log.is_file() {
        return Err(CliError::Config(format!("log not found: {}", args.log.display())));
    }
    let (log, _) = ingest_log(&args.log, None).map_err(|e| e.at("score", None))?;
    let scorers = if args.scorers.is_empty() {
        vec![Scorer::DmMeanPred, Scorer::DmStdPred, Scorer::Random]
    } else {
        args.scorers
    };
    let mut all = Vec::new();
    for s in scorers {
        all.extend(s.score(&log, args.seed)?);
    }
    write_with(&args.out, |w| write_scores_csv(&all, w))
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[arg(long)]
    pub scores: PathBuf,
    /// Which scorer's rows to rank; required when the file has several.
    #[arg(long, value_parser = parse_scorer)]
    pub scorer: Option<Scorer>,
    #[arg(long)]
    pub out: PathBuf,
}

fn rank(args: RankArgs) -> Result<(), CliError> {
    let file = File::open(&args.scores).map_err(|e| CliError::Config(format!("{}: {e}", args.scores.display())))?;
    let scores = read_scores_csv(BufReader::new(file))?;
    let mut present: Vec<Scorer> = scores.iter().map(|s| s.scorer).collect();
    present.sort();
    present.dedup();
    let chosen = match (args.scorer, present.as_slice()) {
        (Some(s), _) => s,
        (None, [only]) => *only,
        (None, _) => {
            return Err(CliError::Config(format!(
                "scores file has several scorers ({}); pass --scorer",
                present.iter().map(|s| s.name()).collect::<Vec<_>>().join(", ")
            )))
        }
    };
    let selected: Vec<_> = scores.into_iter().filter(|s| s.scorer == chosen).collect();
    if selected.is_empty() {
        return Err(CliError::Data(format!("no rows for scorer `{}`", chosen.name())));
    }
    let ranked = rank_by_score(&selected)?;
    write_with(&args.out, |w| ranked.write_csv(w))
}

fn read_ranking(path: &Path) -> Result<RankedList, CliError> {
    let file = File::open(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(RankedList::read_csv(BufReader::new(file))?)
}

// ---------------------------------------------------------------- eval

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    /// `scorer=ranking.csv`, repeatable. Several rankings under one name
    /// are aggregated (mean ± sample std).
    #[arg(long = "ranking", value_parser = parse_named, required = true)]
    pub rankings: Vec<(String, PathBuf)>,
    #[arg(long, value_delimiter = ',', default_values_t = varmap_core::evaluation::TABLE_CUTOFFS)]
    pub cutoffs: Vec<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Write `series-<scorer>.csv` files here.
    #[arg(long)]
    pub series_dir: Option<PathBuf>,
}

fn eval(args: EvalArgs) -> Result<(), CliError> {
    let ds = args.data.load()?;
    let truth = ds.common_flags();
    let mut grouped: BTreeMap<String, Vec<EvalReport>> = BTreeMap::new();
    for (k, (name, path)) in args.rankings.iter().enumerate() {
        let ranked = read_ranking(path)?;
        let report = evaluate(name, &ranked, &truth, k as u64, &args.cutoffs)?;
        grouped.entry(name.clone()).or_default().push(report);
    }
    let mut reports = Vec::new();
    for (_, group) in grouped {
        reports.push(if group.len() == 1 {
            group.into_iter().next().unwrap()
        } else {
            aggregate_over_seeds(&group)?
        });
    }
    let table = format_table(&reports, &args.cutoffs);
    print!("{table}");
    if let Some(out) = &args.out {
        write_with(out, |w| write_report_csv(&reports, w))?;
    }
    if let Some(t) = &args.table {
        write_with(t, |w| w.write_all(table.as_bytes()))?;
    }
    if let Some(dir) = &args.series_dir {
        for r in &reports {
            write_with(&dir.join(format!("series-{}.csv", r.scorer)), |w| write_series_csv(r, w))?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- analyze

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[arg(long)]
    pub ranking: PathBuf,
    /// Depth of the error slice.
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    /// How many top words to report.
    #[arg(long, default_value_t = 20)]
    pub top_words: usize,
    /// Keywords whose share among errors is tracked; repeatable.
    #[arg(long = "keyword", default_values_t = ["usuario".to_string()])]
    pub keywords: Vec<String>,
    /// Depths for keyword and agreement profiles.
    #[arg(long, value_delimiter = ',', default_values_t = [10, 50, 100, 250, 500, 1000])]
    pub grid: Vec<usize>,
    /// Normalize texts (TOML settings) before counting words.
    #[arg(long)]
    pub normalize: Option<PathBuf>,
    /// Model checkpoint; adds token attributions for the top errors.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// How many top errors get attributions.
    #[arg(long, default_value_t = 10)]
    pub explain: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct KeywordReport {
    keyword: String,
    corpus_fraction: Option<f64>,
    by_depth: Vec<KeywordFraction>,
}

#[derive(Serialize)]
struct Explained {
    id: String,
    text: String,
    target: String,
    centered_logit: f64,
    top_tokens: Vec<(String, f64)>,
}

#[derive(Serialize)]
struct AnalysisReport {
    n: usize,
    errors: usize,
    error_ids: Vec<String>,
    top_words: Vec<(String, usize)>,
    keywords: Vec<KeywordReport>,
    agreement: Option<AgreementProfile>,
    attributions: Vec<Explained>,
}

fn analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let mut ds = args.data.load()?;
    if let Some(p) = &args.normalize {
        varmap_core::preprocess::normalize_dataset(&mut ds, &read_norm_config(Some(p))?);
    }
    let ranked = read_ranking(&args.ranking)?;
    let n = args.n.min(ranked.len());
    let grid: Vec<usize> = args.grid.iter().copied().filter(|&g| g >= 1 && g <= ranked.len()).collect();
    let slice = error_slice(&ranked, &ds, n)?;
    let mut words = top_error_words(&ranked, &ds, n, spanish_stopwords())?;
    words.truncate(args.top_words);
    let keywords = args
        .keywords
        .iter()
        .map(|k| {
            Ok(KeywordReport {
                keyword: k.clone(),
                corpus_fraction: corpus_keyword_fraction(&ds, k),
                by_depth: keyword_error_fraction(&ranked, &ds, k, &grid)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let agreement = if ds.instances.iter().any(|i| i.annotations.len() >= 2) {
        Some(agreement_error_profile(&ranked, &ds, &grid)?)
    } else {
        None
    };
    let mut attributions = Vec::new();
    if let Some(path) = &args.model {
        let file = File::open(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let model = LinearModel::load(BufReader::new(file))?;
        for id in slice.error_ids.iter().take(args.explain) {
            let inst = ds.get(id).expect("error ids come from the dataset");
            let target = inst.train_label.clone().unwrap_or_else(|| ds.labels.variety_a.clone());
            let attr = model.attribute(inst.text(), &target)?;
            attributions.push(Explained {
                id: id.clone(),
                text: inst.text().to_string(),
                target: target.to_string(),
                centered_logit: attr.centered_logit,
                top_tokens: attr.strongest(5).into_iter().map(|t| (t.token.clone(), t.contribution)).collect(),
            });
        }
    }
    let report = AnalysisReport {
        n,
        errors: slice.error_ids.len(),
        error_ids: slice.error_ids,
        top_words: words,
        keywords,
        agreement,
        attributions,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Internal(e.to_string()))?;
    match &args.out {
        Some(out) => write_with(out, |w| writeln!(w, "{json}")),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------- serve

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Output directory of a `run`; loads its dataset, rankings and model.
    #[arg(long, conflicts_with_all = ["dataset", "rankings"])]
    pub run: Option<PathBuf>,
    /// Seed whose rankings and model are served (with `--run`).
    #[arg(long, requires = "run")]
    pub seed: Option<u64>,
    #[arg(long, requires = "format")]
    pub dataset: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    pub format: Option<DatasetFormat>,
    /// `scorer=ranking.csv`, repeatable.
    #[arg(long = "ranking", value_parser = parse_named)]
    pub rankings: Vec<(String, PathBuf)>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Append-only decision log (created if missing).
    #[arg(long, default_value = "decisions.jsonl")]
    pub decisions: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    /// Directory of the built review UI.
    #[arg(long)]
    pub ui: Option<PathBuf>,
}

/// Builds the review state from a run directory or explicit files.
pub fn triage_state(args: &ServeArgs) -> Result<TriageState, CliError> {
    let (ds, rankings, model) = match &args.run {
        Some(dir) => {
            let manifest: crate::Manifest = serde_json::from_slice(
                &fs::read(dir.join(crate::pipeline::MANIFEST))
                    .map_err(|e| CliError::Config(format!("{}: not a run directory ({e})", dir.display())))?,
            )
            .map_err(|e| CliError::Data(e.to_string()))?;
            let config = manifest.config;
            let seed = args.seed.unwrap_or(config.seeds[0]);
            if !config.seeds.contains(&seed) {
                return Err(CliError::Config(format!("seed {seed} is not part of this run")));
            }
            let ds = crate::pipeline::load_experiment_dataset(&config)?;
            let ds = seed_dataset(&ds, seed, config.assign_labels);
            let seed_dir = dir.join(format!("seed-{seed}"));
            let mut rankings = BTreeMap::new();
            for s in &config.scorers {
                rankings.insert(s.name().to_string(), read_ranking(&seed_dir.join(format!("ranking-{}.csv", s.name())))?);
            }
            let model_path = seed_dir.join("model.vcm");
            (ds, rankings, model_path.is_file().then_some(model_path))
        }
        None => {
            let (Some(path), Some(format)) = (&args.dataset, args.format) else {
                return Err(CliError::Config("pass --run or --dataset with --format".into()));
            };
            let ds = DatasetArgs {
                dataset: path.clone(),
                format,
                strict: false,
            }
            .load()?;
            let mut rankings = BTreeMap::new();
            for (name, p) in &args.rankings {
                rankings.insert(name.clone(), read_ranking(p)?);
            }
            (ds, rankings, args.model.clone())
        }
    };
    let model = match model.or_else(|| args.model.clone()) {
        Some(p) => {
            let file = File::open(&p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            Some(LinearModel::load(BufReader::new(file))?)
        }
        None => None,
    };
    Ok(TriageState::new(ds, rankings, model)?)
}

fn serve_cmd(args: ServeArgs) -> Result<(), CliError> {
    let state = triage_state(&args)?;
    let service = Service::open(state, &args.decisions)?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(serve(service, args.addr, args.ui.clone()))?;
    Ok(())
}

// ---------------------------------------------------------------- run

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset, when running without a config file.
    #[arg(long, requires = "format")]
    pub dataset: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    pub format: Option<DatasetFormat>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[arg(long = "scorer", value_parser = parse_scorer)]
    pub scorers: Vec<Scorer>,
    /// Ingest these epoch logs instead of training; `{seed}` is replaced.
    #[arg(long)]
    pub logs: Option<String>,
    #[arg(long)]
    pub parallel_seeds: Option<usize>,
    /// Skip text normalization.
    #[arg(long)]
    pub no_normalize: bool,
    /// Replace a non-empty output directory.
    #[arg(long)]
    pub force: bool,
    #[command(flatten)]
    pub overrides: TrainOverrides,
}

/// Config file values, then flag overrides.
pub fn resolve_run_config(args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let mut config = match (&args.config, &args.dataset, args.format) {
        (Some(path), _, _) => ExperimentConfig::load(path)?,
        (None, Some(dataset), Some(format)) => {
            let output = args
                .output
                .clone()
                .ok_or_else(|| CliError::Config("--output is required without --config".into()))?;
            ExperimentConfig::new(dataset.clone(), format, output)
        }
        _ => return Err(CliError::Config("pass --config or --dataset with --format".into())),
    };
    if let (Some(_), Some(dataset)) = (&args.config, &args.dataset) {
        config.dataset.path = dataset.clone();
    }
    if let (Some(_), Some(format)) = (&args.config, args.format) {
        config.dataset.format = format;
    }
    if let Some(o) = &args.output {
        config.output = o.clone();
    }
    if let Some(s) = &args.seeds {
        config.seeds = s.clone();
    }
    if !args.scorers.is_empty() {
        config.scorers = args.scorers.clone();
    }
    if let Some(l) = &args.logs {
        config.logs = Some(LogsConfig { path: l.clone() });
    }
    if let Some(k) = args.parallel_seeds {
        config.parallel_seeds = k;
    }
    if args.no_normalize {
        config.normalize = false;
    }
    args.overrides.apply(&mut config.train);
    Ok(config)
}

fn run(args: RunArgs) -> Result<(), CliError> {
    let config = resolve_run_config(&args)?;
    let summary = run_experiment(&config, args.force)?;
    print!("{}", summary.table);
    eprintln!(
        "wrote {} files to {} (config {})",
        summary.manifest.files.len() + 1,
        config.output.display(),
        &summary.manifest.config_sha256[..12]
    );
    Ok(())
}

// ---------------------------------------------------------------- synth

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub instances: usize,
    #[arg(long, default_value_t = 0.4)]
    pub common_fraction: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

fn synth(args: SynthArgs) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&args.common_fraction) {
        return Err(CliError::Config("common fraction must be in [0, 1]".into()));
    }
    let ds = planted_commons(&PlantedConfig {
        instances: args.instances,
        common_fraction: args.common_fraction,
        seed: args.seed,
        ..Default::default()
    });
    write_with(&args.out, |w| {
        write_generic_csv(&ds, w).map_err(|e| std::io::Error::other(e.to_string()))
    })
}
