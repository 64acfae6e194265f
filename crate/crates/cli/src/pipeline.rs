//! The `run` pipeline: per seed, label assignment → training (or log
//! ingestion) → scoring → ranking → evaluation; then aggregation over
//! seeds and a manifest of everything written.

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use varmap_core::corpus::{assign_single_labels, load_dataset_with, LoadOptions};
use varmap_core::dynamics::rank_by_score;
use varmap_core::evaluation::{aggregate_over_seeds, evaluate, format_table, write_report_csv, write_series_csv};
use varmap_core::preprocess::normalize_dataset;
use varmap_core::trainer::{per_group_f1, train_with_dynamics};
use varmap_core::{Dataset, EpochProbabilityLog, EvalReport, TrainConfig};

use crate::config::{AssignLabels, ExperimentConfig};
use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub core_version: String,
    pub config_sha256: String,
    pub dataset_sha256: String,
    pub config: ExperimentConfig,
    pub files: Vec<FileEntry>,
}

#[derive(Debug)]
pub struct RunSummary {
    pub manifest: Manifest,
    /// One report per scorer, aggregated over seeds when there are several.
    pub reports: Vec<EvalReport>,
    /// Per seed (in config order), one report per scorer.
    pub per_seed: Vec<(u64, Vec<EvalReport>)>,
    pub table: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of the resolved configuration, as serialized in the manifest.
pub fn config_hash(config: &ExperimentConfig) -> String {
    sha256_hex(&serde_json::to_vec(config).expect("config serializes"))
}

/// Loads and (if configured) normalizes the experiment's dataset.
pub fn load_experiment_dataset(config: &ExperimentConfig) -> Result<Dataset, CliError> {
    let opts = LoadOptions {
        labels: config.labels(),
        strict: config.dataset.strict,
    };
    let mut ds = load_dataset_with(&config.dataset.path, config.dataset.format, &opts)?;
    if config.normalize {
        normalize_dataset(&mut ds, &config.normalization);
    }
    Ok(ds)
}

/// The dataset as seen by one seed's training run.
pub fn seed_dataset(ds: &Dataset, seed: u64, mode: AssignLabels) -> Dataset {
    let assign = match mode {
        AssignLabels::Always => true,
        AssignLabels::Never => false,
        AssignLabels::Auto => ds.instances.iter().any(|i| i.is_common && i.train_label.is_none()),
    };
    if assign {
        assign_single_labels(ds, seed)
    } else {
        ds.clone()
    }
}

/// Reads an external epoch log and checks it fits `ds`.
pub fn ingest_log(path: &Path, ds: Option<&Dataset>) -> Result<(EpochProbabilityLog, Vec<String>), CliError> {
    let file = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let (log, warnings) = EpochProbabilityLog::read_jsonl(BufReader::new(file))?;
    if let Some(ds) = ds {
        let known: HashSet<&str> = ds.instances.iter().map(|i| i.id.as_str()).collect();
        if let Some(id) = log.ids().iter().find(|id| !known.contains(id.as_str())) {
            return Err(CliError::Data(format!("log instance `{id}` is not in the dataset")));
        }
        let varieties = ds.labels.varieties();
        let mut expected: Vec<&str> = varieties.iter().map(|l| l.as_str()).collect();
        let mut found: Vec<&str> = log.labels().iter().map(|l| l.as_str()).collect();
        expected.sort_unstable();
        found.sort_unstable();
        if expected != found {
            return Err(CliError::Data(format!(
                "log labels {found:?} do not match the dataset varieties {expected:?}"
            )));
        }
    }
    Ok((log, warnings))
}

pub fn write_with<F>(path: &Path, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(File::create(path).map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Makes `dir` ready for a run. A previous complete run (one with a
/// manifest) is replaced; anything else must be cleared with `force`.
fn prepare_output(dir: &Path, force: bool) -> Result<(), CliError> {
    if force && dir.exists() {
        fs::remove_dir_all(dir)?;
    }
    if !dir.exists() {
        fs::create_dir_all(dir)?;
        return Ok(());
    }
    let manifest_path = dir.join(MANIFEST);
    if manifest_path.is_file() {
        let old: Manifest = serde_json::from_slice(&fs::read(&manifest_path)?)
            .map_err(|e| CliError::Config(format!("cannot read existing manifest: {e}")))?;
        for f in &old.files {
            let p = dir.join(&f.path);
            if p.is_file() {
                fs::remove_file(&p)?;
            }
            if let Some(parent) = p.parent() {
                if parent != dir && fs::read_dir(parent)?.next().is_none() {
                    fs::remove_dir(parent)?;
                }
            }
        }
        fs::remove_file(&manifest_path)?;
    }
    if fs::read_dir(dir)?.next().is_some() {
        return Err(CliError::Config(format!(
            "output directory {} is not empty; remove it or pass --force",
            dir.display()
        )));
    }
    Ok(())
}

struct SeedResult {
    reports: Vec<EvalReport>,
}

fn run_seed(config: &ExperimentConfig, ds: &Dataset, seed: u64) -> Result<SeedResult, CliError> {
    let dir = config.output.join(format!("seed-{seed}"));
    let seeded = seed_dataset(ds, seed, config.assign_labels);

    let log = match &config.logs {
        Some(logs) => {
            let (log, warnings) = ingest_log(&logs.for_seed(seed), Some(&seeded)).map_err(|e| e.at("ingest-logs", Some(seed)))?;
            for w in warnings {
                eprintln!("warning [ingest-logs, seed {seed}]: {w}");
            }
            log
        }
        None => {
            let train = TrainConfig {
                seed,
                ..config.train.clone()
            };
            let (model, log) = train_with_dynamics(&seeded, &train).map_err(|e| CliError::from(e).at("train", Some(seed)))?;
            let mut bytes = Vec::new();
            model.save(&mut bytes).map_err(|e| CliError::from(e).at("train", Some(seed)))?;
            write_with(&dir.join("model.vcm"), |w| w.write_all(&bytes))?;
            log
        }
    };
    write_with(&dir.join("log.jsonl"), |w| log.write_jsonl(w))?;
    write_with(&dir.join("per_group_f1.csv"), |w| {
        writeln!(w, "epoch,f1_common,f1_non_common")?;
        let fmt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.6}"));
        for g in per_group_f1(&log, &seeded) {
            writeln!(w, "{},{},{}", g.epoch, fmt(g.f1_common), fmt(g.f1_non_common))?;
        }
        Ok(())
    })?;

    let truth = seeded.common_flags();
    let mut reports = Vec::new();
    for scorer in &config.scorers {
        let name = scorer.name();
        let scores = scorer.score(&log, seed).map_err(|e| CliError::from(e).at("score", Some(seed)))?;
        write_with(&dir.join(format!("scores-{name}.csv")), |w| {
            varmap_core::dynamics::write_scores_csv(&scores, w)
        })?;
        let ranked = rank_by_score(&scores).map_err(|e| CliError::from(e).at("rank", Some(seed)))?;
        write_with(&dir.join(format!("ranking-{name}.csv")), |w| ranked.write_csv(w))?;
        let report = evaluate(name, &ranked, &truth, seed, &config.cutoffs)
            .map_err(|e| CliError::from(e).at("eval", Some(seed)))?;
        let series: Vec<_> = report
            .at_n
            .iter()
            .filter(|a| a.n % config.series_step == 0 || a.n == ranked.len())
            .copied()
            .collect();
        let series_report = EvalReport {
            at_n: series,
            ..report.clone()
        };
        write_with(&dir.join(format!("series-{name}.csv")), |w| write_series_csv(&series_report, w))?;
        reports.push(report);
    }
    write_with(&dir.join("report.csv"), |w| write_report_csv(&reports, w))?;
    Ok(SeedResult { reports })
}

/// Runs the whole experiment. Stage errors carry the stage and seed;
/// outputs written before a failure are left in place.
pub fn run_experiment(config: &ExperimentConfig, force: bool) -> Result<RunSummary, CliError> {
    config.validate()?;
    let dataset_bytes = fs::read(&config.dataset.path).map_err(|e| CliError::Data(e.to_string()).at("load", None))?;
    let ds = load_experiment_dataset(config).map_err(|e| e.at("load", None))?;
    if ds.is_empty() {
        return Err(CliError::Data("dataset has no usable instances".into()).at("load", None));
    }
    prepare_output(&config.output, force)?;
    write_with(&config.output.join("rejections.tsv"), |w| ds.write_rejections(w))?;

    let results: Mutex<BTreeMap<usize, Result<SeedResult, CliError>>> = Mutex::new(BTreeMap::new());
    let next = AtomicUsize::new(0);
    let workers = config.parallel_seeds.min(config.seeds.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some(&seed) = config.seeds.get(k) else { break };
                let outcome = run_seed(config, &ds, seed);
                let failed = outcome.is_err();
                results.lock().unwrap().insert(k, outcome);
                if failed {
                    // Let running seeds finish but start no new ones.
                    next.store(config.seeds.len(), Ordering::SeqCst);
                }
            });
        }
    });
    let mut per_seed = Vec::new();
    for (k, outcome) in results.into_inner().unwrap() {
        per_seed.push((config.seeds[k], outcome?.reports));
    }

    let reports: Vec<EvalReport> = if per_seed.len() == 1 {
        per_seed[0].1.clone()
    } else {
        (0..config.scorers.len())
            .map(|s| {
                let group: Vec<EvalReport> = per_seed.iter().map(|(_, r)| r[s].clone()).collect();
                aggregate_over_seeds(&group)
            })
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::from(e).at("aggregate", None))?
    };
    write_with(&config.output.join("report.csv"), |w| write_report_csv(&reports, w))?;
    let table = format_table(&reports, &config.cutoffs);
    write_with(&config.output.join("table.txt"), |w| w.write_all(table.as_bytes()))?;

    let manifest = Manifest {
        tool: "varmap".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        core_version: varmap_core::VERSION.into(),
        config_sha256: config_hash(config),
        dataset_sha256: sha256_hex(&dataset_bytes),
        config: config.clone(),
        files: list_files(&config.output)?,
    };
    write_with(&config.output.join(MANIFEST), |w| {
        serde_json::to_writer_pretty(&mut *w, &manifest)?;
        w.write_all(b"\n")
    })?;
    Ok(RunSummary {
        manifest,
        reports,
        per_seed,
        table,
    })
}

/// Every file under `root` except the manifest, sorted by relative path.
fn list_files(root: &Path) -> Result<Vec<FileEntry>, CliError> {
    let mut paths = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                paths.push(path);
            }
        }
    }
    let mut out = Vec::new();
    for path in paths {
        let rel = relative(root, &path);
        if rel == MANIFEST {
            continue;
        }
        let bytes = fs::read(&path)?;
        out.push(FileEntry {
            path: rel,
            sha256: sha256_hex(&bytes),
            bytes: bytes.len() as u64,
        });
    }
    out.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(out)
}

fn relative(root: &Path, path: &Path) -> String {
    let rel: PathBuf = path.strip_prefix(root).unwrap_or(path).to_path_buf();
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}
