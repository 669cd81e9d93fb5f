use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use mihe::detectors::{detect, fit_background, Method};
use mihe::error::Error;
use mihe::eval::{auc_of_curve, nauc, roc_curve};
use mihe::experiment::{run_sweep, write_sweep_csv};
use mihe::model::validate_dataset;
use mihe::simgen::{generate_dataset, SpectralLibrary};
use mihe::trainer::train;
use serde::Serialize;

use crate::error::CliError;
use crate::formats::{self, ExperimentFile, ModelFile, SimulateFile, SweepFile, TrainFile};

#[derive(Debug, Parser)]
#[command(name = "mihe", version, about = "Multiple instance hybrid estimator for sub-pixel target detection")]
pub struct Cli {
    /// Overrides the seed in the configuration file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Upper bound on worker threads.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: Option<u32>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic bag dataset and its ground truth.
    Simulate(SimulateArgs),
    /// Learn target and background concepts from a bag dataset.
    Train(TrainArgs),
    /// Score every pixel of a scene with a trained model.
    Detect(DetectArgs),
    /// ROC, AUC and optional NAUC for a score file.
    Eval(EvalArgs),
    /// Hyperparameter sweep over simulated scenes.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Bag CSV output.
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth CSV output.
    #[arg(long)]
    pub truth: PathBuf,
    /// Spectral library CSV; the built-in library when absent.
    #[arg(long)]
    pub library: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub params: PathBuf,
    /// Model JSON output.
    #[arg(long)]
    pub model: PathBuf,
    /// Objective trace CSV output.
    #[arg(long)]
    pub trace: PathBuf,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Scene as a bag CSV; bag labels are ignored.
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long, default_value = "ace")]
    pub method: Method,
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth CSV; adds a `truth` column to the output.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub scores: PathBuf,
    /// Ground-truth CSV; required unless the scores carry a `truth` column.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Metrics JSON output.
    #[arg(long)]
    pub metrics: PathBuf,
    /// ROC CSV output.
    #[arg(long)]
    pub roc: PathBuf,
    /// False alarms per unit area at which to cut the NAUC integral.
    #[arg(long)]
    pub nauc_far: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub area_per_sample: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Base experiment JSON.
    #[arg(long)]
    pub config: PathBuf,
    /// Sweep specification JSON.
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub library: Option<PathBuf>,
}

pub fn dispatch(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        log::debug!("thread cap {n}; all stages run on the calling thread");
    }
    match cli.command {
        Command::Simulate(a) => simulate(&a, cli.seed),
        Command::Train(a) => train_cmd(&a, cli.seed),
        Command::Detect(a) => detect_cmd(&a),
        Command::Eval(a) => eval_cmd(&a),
        Command::Sweep(a) => sweep(&a, cli.seed),
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn read_config<T>(path: &Path) -> Result<T, CliError>
where
    T: serde::de::DeserializeOwned + formats::Versioned,
{
    formats::parse_json(&read_text(path).map_err(|e| CliError::Config(e.to_string()))?)
        .map_err(|e| CliError::config(path.display(), e))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

/// Writes through `f` into `path`.
fn write_with(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> Result<(), String>,
) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).map_err(|e| CliError::io(path, e))?;
    w.flush().map_err(|e| CliError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn load_library(path: Option<&Path>) -> Result<SpectralLibrary, CliError> {
    match path {
        None => Ok(SpectralLibrary::builtin()),
        Some(p) => SpectralLibrary::from_csv(open(p)?).map_err(|e| CliError::config(p.display(), e)),
    }
}

/// Configuration problems map to exit code 2, everything else to `other`.
fn classify(e: Error, other: fn(String) -> CliError) -> CliError {
    match e {
        Error::InvalidHyperParam { .. } | Error::InvalidSimConfig(_) | Error::UnknownEndmember(_) => {
            CliError::Config(e.to_string())
        }
        e => other(e.to_string()),
    }
}

fn simulate(a: &SimulateArgs, seed: Option<u64>) -> Result<(), CliError> {
    let mut cfg: SimulateFile = read_config(&a.config)?;
    if let Some(s) = seed {
        cfg.simulation.seed = s;
    }
    let lib = load_library(a.library.as_deref())?;
    let sim = generate_dataset(&lib, &cfg.simulation).map_err(|e| classify(e, CliError::Io))?;
    write_with(&a.out, |w| formats::write_bag_csv(&sim.dataset, w))?;
    let endmembers: Vec<String> = cfg
        .simulation
        .target_names
        .iter()
        .chain(&cfg.simulation.background_names)
        .cloned()
        .collect();
    write_with(&a.truth, |w| formats::write_truth_csv(&sim.truth, &endmembers, w))?;
    let ds = &sim.dataset;
    println!(
        "K+={} K-={} N={} d={}",
        ds.n_positive_bags(),
        ds.n_negative_bags(),
        ds.n_instances(),
        ds.dim()
    );
    Ok(())
}

fn train_cmd(a: &TrainArgs, seed: Option<u64>) -> Result<(), CliError> {
    let mut cfg: TrainFile = read_config(&a.params)?;
    if let Some(s) = seed {
        cfg.hyperparams.seed = s;
    }
    cfg.hyperparams
        .validate()
        .map_err(|e| CliError::config(a.params.display(), e))?;
    if cfg.ridge.is_some_and(|r| !(r >= 0.0)) {
        return Err(CliError::config(a.params.display(), "ridge must be nonnegative"));
    }
    let ds = formats::read_bag_csv(open(&a.data)?).map_err(|e| CliError::io(&a.data, e))?;
    let violations = validate_dataset(&ds);
    if !violations.is_empty() {
        let msg: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(CliError::Training(format!("{}: {}", a.data.display(), msg.join("; "))));
    }
    let report = train(&ds, &cfg.hyperparams).map_err(|e| CliError::Training(e.to_string()))?;
    let bg = fit_background(ds.negative_instances().map(|x| x.as_slice()), cfg.ridge)
        .map_err(|e| CliError::Training(format!("background statistics: {e}")))?;
    let model = ModelFile::new(&cfg.hyperparams, &report, &bg);
    write_text(&a.model, &formats::to_json(&model))?;
    write_with(&a.trace, |w| formats::write_trace_csv(&report, w))?;
    log::info!(
        "trained {} outer iterations, stop reason {}",
        report.iterations_run,
        model.metadata.stop_reason
    );
    Ok(())
}

/// Reads and validates a model file.
pub fn load_model(path: &Path) -> Result<ModelFile, CliError> {
    formats::parse_json(&read_text(path)?).map_err(|e| CliError::io(path, e))
}

fn detect_cmd(a: &DetectArgs) -> Result<(), CliError> {
    let model = load_model(&a.model)?;
    let det = model.detection_model().map_err(|e| CliError::io(&a.model, e))?;
    let scene = formats::read_bag_csv(open(&a.scene)?).map_err(|e| CliError::io(&a.scene, e))?;
    let pixels: Vec<_> = scene.instances().cloned().collect();
    let mut scores = detect(&pixels, &det, a.method).map_err(|e| CliError::Io(format!("detection: {e}")))?;
    for (e, id) in scores.entries.iter_mut().zip(formats::instance_ids(&scene)) {
        e.id = id;
    }
    if let Some(t) = &a.truth {
        let truth = formats::read_truth_csv(open(t)?).map_err(|e| CliError::io(t, e))?;
        formats::attach_truth(&mut scores, &truth).map_err(|e| CliError::io(t, e))?;
    }
    write_with(&a.out, |w| formats::write_scores_csv(&scores, w))
}

#[derive(Debug, Serialize)]
struct Metrics {
    n_instances: usize,
    n_positive: usize,
    n_negative: usize,
    auc: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    nauc: Option<NaucMetric>,
}

#[derive(Debug, Serialize)]
struct NaucMetric {
    far_cutoff: f64,
    area_per_sample: f64,
    value: f64,
}

fn eval_cmd(a: &EvalArgs) -> Result<(), CliError> {
    let mut scores = formats::read_scores_csv(open(&a.scores)?).map_err(|e| CliError::io(&a.scores, e))?;
    if let Some(t) = &a.truth {
        let truth = formats::read_truth_csv(open(t)?).map_err(|e| CliError::io(t, e))?;
        formats::attach_truth(&mut scores, &truth).map_err(|e| CliError::io(t, e))?;
    }
    let eval_err = |e: Error| CliError::Io(format!("evaluation: {e}"));
    let curve = roc_curve(&scores).map_err(eval_err)?;
    let nauc = match a.nauc_far {
        Some(far) => Some(NaucMetric {
            far_cutoff: far,
            area_per_sample: a.area_per_sample,
            value: nauc(&scores, far, a.area_per_sample).map_err(eval_err)?,
        }),
        None => None,
    };
    let n_positive = scores.entries.iter().filter(|e| e.truth == Some(true)).count();
    let metrics = Metrics {
        n_instances: scores.len(),
        n_positive,
        n_negative: scores.len() - n_positive,
        auc: auc_of_curve(&curve),
        nauc,
    };
    write_text(&a.metrics, &formats::to_json(&metrics))?;
    write_with(&a.roc, |w| formats::write_roc_csv(&curve, w))
}

fn sweep(a: &SweepArgs, seed: Option<u64>) -> Result<(), CliError> {
    let mut base: ExperimentFile = read_config(&a.config)?;
    let spec: SweepFile = read_config(&a.spec)?;
    if let Some(s) = seed {
        base.experiment.simulation.seed = s;
        base.experiment.hyperparams.seed = s;
    }
    let lib = load_library(a.library.as_deref())?;
    let rows = run_sweep(&lib, &base.experiment, &spec.sweep).map_err(|e| classify(e, CliError::Training))?;
    write_with(&a.out, |w| {
        write_sweep_csv(&rows, spec.sweep.joint, w).map_err(|e| e.to_string())
    })
}
