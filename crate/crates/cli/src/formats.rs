//! On-disk formats: bag and truth CSVs, score and ROC CSVs, JSON configs and
//! the trained model file.

use std::collections::HashMap;
use std::io::{Read, Write};

use mihe::detectors::{BackgroundStats, DetectionModel};
use mihe::eval::{RocPoint, ScoreEntry, ScoreSet};
use mihe::experiment::{ExperimentConfig, SweepSpec};
use mihe::linalg::Matrix;
use mihe::model::{Bag, BagDataset, BagLabel, ConceptDictionary, HyperParams, Instance};
use mihe::simgen::{InstanceTruth, SimConfig};
use mihe::sparse::IstaConfig;
use mihe::trainer::{StopReason, TrainReport};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Full round-trip decimal rendering (17 significant digits).
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn instance_id(bag_id: &str, index: usize) -> String {
    format!("{bag_id}:{index}")
}

/// Instance ids of a dataset in iteration order.
pub fn instance_ids(ds: &BagDataset<f64>) -> Vec<String> {
    ds.bags
        .iter()
        .flat_map(|b| (0..b.len()).map(move |i| instance_id(&b.id, i)))
        .collect()
}

type FormatResult<T> = std::result::Result<T, String>;

fn csv_err(e: csv::Error) -> String {
    e.to_string()
}

fn parse_f64(field: &str, line: u64) -> FormatResult<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| format!("line {line}: `{field}` is not a number"))
}

fn parse_bool(field: &str, line: u64) -> FormatResult<bool> {
    match field.trim() {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        other => Err(format!("line {line}: `{other}` is not a 0/1 label")),
    }
}

pub fn write_bag_csv(ds: &BagDataset<f64>, out: impl Write) -> FormatResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["bag_id".to_string(), "bag_label".to_string()];
    header.extend((0..ds.dim()).map(|i| format!("f{i}")));
    w.write_record(&header).map_err(csv_err)?;
    for bag in &ds.bags {
        let label = bag.label.as_int().to_string();
        for x in &bag.instances {
            let mut row = vec![bag.id.clone(), label.clone()];
            row.extend(x.as_slice().iter().map(|v| num(*v)));
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| e.to_string())
}

/// Reads a bag CSV. Rows sharing a `bag_id` form one bag; bags keep the
/// order of their first row.
pub fn read_bag_csv(input: impl Read) -> FormatResult<BagDataset<f64>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.len() < 3 || &header[0] != "bag_id" || &header[1] != "bag_label" {
        return Err("bag CSV header must start with `bag_id,bag_label` followed by feature columns".into());
    }
    let d = header.len() - 2;
    for (i, name) in header.iter().skip(2).enumerate() {
        if name != format!("f{i}") {
            return Err(format!("feature column {i} is named `{name}`, expected `f{i}`"));
        }
    }
    let mut order: Vec<String> = Vec::new();
    let mut bags: HashMap<String, (BagLabel, Vec<Instance<f64>>)> = HashMap::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != d + 2 {
            return Err(format!("line {line}: expected {} fields, found {}", d + 2, rec.len()));
        }
        let id = rec[0].to_string();
        let label = match parse_bool(&rec[1], line)? {
            true => BagLabel::Positive,
            false => BagLabel::Negative,
        };
        let x = rec.iter().skip(2).map(|f| parse_f64(f, line)).collect::<FormatResult<Vec<_>>>()?;
        match bags.get_mut(&id) {
            Some((l, inst)) => {
                if *l != label {
                    return Err(format!("line {line}: bag `{id}` has conflicting labels"));
                }
                inst.push(Instance::new(x));
            }
            None => {
                order.push(id.clone());
                bags.insert(id, (label, vec![Instance::new(x)]));
            }
        }
    }
    if order.is_empty() {
        return Err("bag CSV has no rows".into());
    }
    let bags = order
        .into_iter()
        .map(|id| {
            let (label, inst) = bags.remove(&id).expect("every ordered id was inserted");
            Bag::new(id, label, inst)
        })
        .collect();
    Ok(BagDataset::new(bags))
}

/// Truth CSV: `instance_id,bag_id,index,truth` followed by one proportion
/// column per endmember in `endmembers`.
pub fn write_truth_csv(truth: &[InstanceTruth], endmembers: &[String], out: impl Write) -> FormatResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["instance_id", "bag_id", "index", "truth"];
    header.extend(endmembers.iter().map(String::as_str));
    w.write_record(&header).map_err(csv_err)?;
    for t in truth {
        let mut row = vec![
            instance_id(&t.bag_id, t.index),
            t.bag_id.clone(),
            t.index.to_string(),
            (t.is_target as u8).to_string(),
        ];
        row.extend(endmembers.iter().map(|name| {
            let p = t.proportions.iter().find(|(n, _)| n == name).map_or(0.0, |(_, p)| *p);
            num(p)
        }));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| e.to_string())
}

/// Reads the `instance_id` and `truth` columns of a truth CSV.
pub fn read_truth_csv(input: impl Read) -> FormatResult<HashMap<String, bool>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| format!("truth CSV lacks a `{name}` column"))
    };
    let (id_col, truth_col) = (col("instance_id")?, col("truth")?);
    let mut out = HashMap::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let id = rec.get(id_col).ok_or(format!("line {line}: missing instance_id"))?;
        let t = parse_bool(rec.get(truth_col).ok_or(format!("line {line}: missing truth"))?, line)?;
        if out.insert(id.to_string(), t).is_some() {
            return Err(format!("line {line}: duplicate instance id `{id}`"));
        }
    }
    Ok(out)
}

/// Attaches truth labels by instance id.
pub fn attach_truth(scores: &mut ScoreSet<f64>, truth: &HashMap<String, bool>) -> FormatResult<()> {
    for e in &mut scores.entries {
        let t = truth
            .get(&e.id)
            .ok_or_else(|| format!("no truth label for instance `{}`", e.id))?;
        e.truth = Some(*t);
    }
    Ok(())
}

/// `instance_id,score[,truth]`; the truth column is written when every
/// entry has a label.
pub fn write_scores_csv(scores: &ScoreSet<f64>, out: impl Write) -> FormatResult<()> {
    let with_truth = !scores.is_empty() && scores.entries.iter().all(|e| e.truth.is_some());
    let mut w = csv::Writer::from_writer(out);
    if with_truth {
        w.write_record(["instance_id", "score", "truth"]).map_err(csv_err)?;
    } else {
        w.write_record(["instance_id", "score"]).map_err(csv_err)?;
    }
    for e in &scores.entries {
        let mut row = vec![e.id.clone(), num(e.score)];
        if with_truth {
            row.push(if e.truth == Some(true) { "1" } else { "0" }.to_string());
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| e.to_string())
}

pub fn read_scores_csv(input: impl Read) -> FormatResult<ScoreSet<f64>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    let with_truth = match header.iter().collect::<Vec<_>>().as_slice() {
        ["instance_id", "score"] => false,
        ["instance_id", "score", "truth"] => true,
        _ => return Err("scores CSV header must be `instance_id,score[,truth]`".into()),
    };
    let mut entries = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let truth = if with_truth { Some(parse_bool(&rec[2], line)?) } else { None };
        entries.push(ScoreEntry {
            id: rec[0].to_string(),
            score: parse_f64(&rec[1], line)?,
            truth,
        });
    }
    Ok(ScoreSet { entries })
}

pub fn write_roc_csv(curve: &[RocPoint], out: impl Write) -> FormatResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["fpr", "tpr", "threshold"]).map_err(csv_err)?;
    for p in curve {
        w.write_record([num(p.fpr), num(p.tpr), num(p.threshold)]).map_err(csv_err)?;
    }
    w.flush().map_err(|e| e.to_string())
}

/// `iter,gm,fidelity,incoherence,total`; row 0 is the initialization.
pub fn write_trace_csv(report: &TrainReport<f64>, out: impl Write) -> FormatResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iter", "gm", "fidelity", "incoherence", "total"]).map_err(csv_err)?;
    let rows = report
        .initial_objective
        .iter()
        .map(|o| (0, o))
        .chain(report.objective_trace.iter().enumerate().map(|(i, o)| (i + 1, o)));
    for (i, o) in rows {
        w.write_record([
            i.to_string(),
            num(o.gm_term),
            num(o.fidelity_term),
            num(o.incoherence_term),
            num(o.total),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| e.to_string())
}

fn check_schema(v: u32) -> FormatResult<()> {
    if v == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(format!("unsupported schema_version {v}, expected {SCHEMA_VERSION}"))
    }
}

/// Parses JSON into `T` and checks its `schema_version`.
pub fn parse_json<T: serde::de::DeserializeOwned + Versioned>(text: &str) -> FormatResult<T> {
    let v: T = serde_json::from_str(text).map_err(|e| e.to_string())?;
    check_schema(v.schema_version())?;
    Ok(v)
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("file types serialize");
    s.push('\n');
    s
}

pub trait Versioned {
    fn schema_version(&self) -> u32;
}

macro_rules! versioned {
    ($($t:ty),*) => {
        $(impl Versioned for $t {
            fn schema_version(&self) -> u32 {
                self.schema_version
            }
        })*
    };
}

versioned!(SimulateFile, TrainFile, ExperimentFile, SweepFile, ModelFile);

/// Input of `mihe simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateFile {
    pub schema_version: u32,
    pub simulation: SimConfig,
}

/// Input of `mihe train`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainFile {
    pub schema_version: u32,
    pub hyperparams: HyperParams,
    /// Covariance ridge for the stored background statistics.
    #[serde(default)]
    pub ridge: Option<f64>,
}

/// Base configuration of `mihe sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub schema_version: u32,
    pub experiment: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub schema_version: u32,
    pub sweep: SweepSpec,
}

/// Dense matrix stored row by row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixFile {
    pub fn from_matrix(m: &Matrix<f64>) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            data: m.to_row_major(),
        }
    }

    pub fn to_matrix(&self) -> FormatResult<Matrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(format!(
                "matrix has {} entries, expected {}x{}",
                self.data.len(),
                self.rows,
                self.cols
            ));
        }
        Ok(Matrix::from_row_major(self.rows, self.cols, &self.data))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DictionaryFile {
    /// `d × T`.
    pub targets: MatrixFile,
    /// `d × M`.
    pub backgrounds: MatrixFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundFile {
    pub mu: Vec<f64>,
    /// Covariance including the ridge.
    pub sigma: MatrixFile,
    pub ridge: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingMetadata {
    pub seed: u64,
    pub iterations: usize,
    pub stop_reason: String,
    pub final_objective: Option<f64>,
}

/// A trained model with everything detection needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema_version: u32,
    pub hyperparams: HyperParams,
    pub dictionary: DictionaryFile,
    pub background: BackgroundFile,
    pub metadata: TrainingMetadata,
}

impl ModelFile {
    pub fn new(hp: &HyperParams, report: &TrainReport<f64>, bg: &BackgroundStats<f64>) -> Self {
        let dict = &report.final_dictionary;
        Self {
            schema_version: SCHEMA_VERSION,
            hyperparams: hp.clone(),
            dictionary: DictionaryFile {
                targets: MatrixFile::from_matrix(&dict.targets),
                backgrounds: MatrixFile::from_matrix(&dict.backgrounds),
            },
            background: BackgroundFile {
                mu: bg.mu.clone(),
                sigma: MatrixFile::from_matrix(&bg.sigma),
                ridge: bg.ridge,
            },
            metadata: TrainingMetadata {
                seed: hp.seed,
                iterations: report.iterations_run,
                stop_reason: match report.stop_reason {
                    StopReason::MaxIters => "max_iters",
                    StopReason::Tolerance => "tolerance",
                }
                .into(),
                final_objective: report
                    .final_objective()
                    .map(|o| o.total)
                    .filter(|v| v.is_finite()),
            },
        }
    }

    pub fn dictionary(&self) -> FormatResult<ConceptDictionary<f64>> {
        ConceptDictionary::new(self.dictionary.targets.to_matrix()?, self.dictionary.backgrounds.to_matrix()?)
            .map_err(|e| e.to_string())
    }

    pub fn detection_model(&self) -> FormatResult<DetectionModel<f64>> {
        let background = BackgroundStats::from_regularized(
            self.background.mu.clone(),
            self.background.sigma.to_matrix()?,
            self.background.ridge,
        )
        .map_err(|e| e.to_string())?;
        Ok(DetectionModel {
            dictionary: self.dictionary()?,
            background,
            lambda: self.hyperparams.lambda,
            ista: IstaConfig {
                max_iters: self.hyperparams.ista_iters,
                tolerance: self.hyperparams.ista_tolerance,
                step_override: None,
            },
        })
    }
}
