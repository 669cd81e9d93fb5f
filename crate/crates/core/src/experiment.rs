//! End-to-end simulate → train → detect → score pipeline and parameter sweeps.

use serde::{Deserialize, Serialize};

use crate::detectors::{detect, fit_background, DetectionModel, Method};
use crate::error::{Error, Result};
use crate::eval::{auc, lower_median, ScoreSet};
use crate::model::{ConceptDictionary, HyperParams};
use crate::simgen::{generate_dataset, SimConfig, SimulatedData, SpectralLibrary};
use crate::sparse::IstaConfig;
use crate::trainer::{train, TrainReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub simulation: SimConfig,
    #[serde(default)]
    pub hyperparams: HyperParams,
    #[serde(default = "default_method")]
    pub method: Method,
    /// Covariance ridge; `None` uses the trace-scaled default.
    #[serde(default)]
    pub ridge: Option<f64>,
    /// Seed of the held-out test scene; `None` derives it from the training
    /// scene seed.
    #[serde(default)]
    pub test_seed: Option<u64>,
}

fn default_method() -> Method {
    Method::Ace
}

impl ExperimentConfig {
    pub fn new(simulation: SimConfig, hyperparams: HyperParams, method: Method) -> Self {
        Self {
            simulation,
            hyperparams,
            method,
            ridge: None,
            test_seed: None,
        }
    }

    pub fn test_seed(&self) -> u64 {
        self.test_seed.unwrap_or_else(|| derive_seed(self.simulation.seed, u64::MAX, 0))
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for run `run` of grid point `grid` under `base`.
pub fn derive_seed(base: u64, grid: u64, run: u64) -> u64 {
    mix64(mix64(mix64(base) ^ grid) ^ run)
}

/// Training and test scenes for one configuration.
#[derive(Debug, Clone)]
pub struct Scenes {
    pub train: SimulatedData,
    pub test: SimulatedData,
}

pub fn simulate_scenes(lib: &SpectralLibrary, cfg: &ExperimentConfig) -> Result<Scenes> {
    let train = generate_dataset(lib, &cfg.simulation)?;
    let mut test_cfg = cfg.simulation.clone();
    test_cfg.seed = cfg.test_seed();
    let test = generate_dataset(lib, &test_cfg)?;
    Ok(Scenes { train, test })
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub auc: f64,
    pub scores: ScoreSet<f64>,
    pub report: TrainReport<f64>,
}

impl ExperimentOutcome {
    pub fn dictionary(&self) -> &ConceptDictionary<f64> {
        &self.report.final_dictionary
    }
}

/// Trains on `scenes.train` with `hp`, fits background statistics on the
/// training negatives and scores the test scene.
pub fn run_on_scenes(scenes: &Scenes, hp: &HyperParams, method: Method, ridge: Option<f64>) -> Result<ExperimentOutcome> {
    let report = train(&scenes.train.dataset, hp)?;
    let background = fit_background(
        scenes.train.dataset.negative_instances().map(|x| x.as_slice()),
        ridge,
    )?;
    let model = DetectionModel {
        dictionary: report.final_dictionary.clone(),
        background,
        lambda: hp.lambda,
        ista: IstaConfig {
            max_iters: hp.ista_iters,
            tolerance: hp.ista_tolerance,
            step_override: None,
        },
    };
    let scene = scenes.test.instances();
    let scores = detect(&scene, &model, method)?.with_truth(&scenes.test.labels())?;
    Ok(ExperimentOutcome {
        auc: auc(&scores)?,
        scores,
        report,
    })
}

/// Full pipeline with the training seed overridden by `run_seed`.
pub fn run_experiment(lib: &SpectralLibrary, cfg: &ExperimentConfig, run_seed: u64) -> Result<ExperimentOutcome> {
    let scenes = simulate_scenes(lib, cfg)?;
    let mut hp = cfg.hyperparams.clone();
    hp.seed = run_seed;
    run_on_scenes(&scenes, &hp, cfg.method, cfg.ridge)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepParam {
    #[serde(rename = "M")]
    M,
    #[serde(rename = "beta")]
    Beta,
    #[serde(rename = "lambda")]
    Lambda,
    #[serde(rename = "b")]
    B,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::M => "M",
            SweepParam::Beta => "beta",
            SweepParam::Lambda => "lambda",
            SweepParam::B => "b",
        }
    }

    /// Default testing range.
    pub fn default_range(self) -> Vec<f64> {
        match self {
            SweepParam::M => vec![1., 2., 3., 5., 7., 9., 11., 13., 15., 17., 19., 21.],
            SweepParam::Beta => vec![0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1., 2., 5., 10., 20., 50., 100.],
            SweepParam::Lambda => vec![
                1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.,
            ],
            SweepParam::B => vec![-10., -5., -2., -1., 1e-10, 1., 2., 5., 10., 20., 50., 100.],
        }
    }

    /// Range of the joint four-parameter perturbation grid.
    pub fn joint_range(self) -> Vec<f64> {
        match self {
            SweepParam::M => vec![3., 5., 7., 9.],
            SweepParam::Beta => vec![1., 2., 5., 10.],
            SweepParam::Lambda => vec![1e-3, 2e-3, 5e-3, 0.01],
            SweepParam::B => vec![5., 10., 20., 50.],
        }
    }

    pub fn apply(self, hp: &mut HyperParams, value: f64) -> Result<()> {
        match self {
            SweepParam::M => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(Error::InvalidArgument(format!("M must be a positive integer, got {value}")));
                }
                hp.n_backgrounds = value as usize;
            }
            SweepParam::Beta => hp.beta = value,
            SweepParam::Lambda => hp.lambda = value,
            SweepParam::B => hp.b = value,
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: SweepParam,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
}

impl SweepAxis {
    fn values(&self, joint: bool) -> Vec<f64> {
        self.values.clone().unwrap_or_else(|| {
            if joint {
                self.param.joint_range()
            } else {
                self.param.default_range()
            }
        })
    }
}

/// One-at-a-time sweeps over each axis, or the full Cartesian grid when
/// `joint` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axes: Vec<SweepAxis>,
    #[serde(default)]
    pub joint: bool,
    #[serde(default = "default_runs")]
    pub runs_per_setting: usize,
}

fn default_runs() -> usize {
    5
}

impl SweepSpec {
    pub fn single(param: SweepParam, values: Vec<f64>, runs_per_setting: usize) -> Self {
        Self {
            axes: vec![SweepAxis {
                param,
                values: Some(values),
            }],
            joint: false,
            runs_per_setting,
        }
    }

    /// Settings in emission order.
    pub fn settings(&self) -> Result<Vec<Vec<(SweepParam, f64)>>> {
        if self.axes.is_empty() {
            return Err(Error::InvalidArgument("sweep has no parameters".into()));
        }
        if self.runs_per_setting == 0 {
            return Err(Error::InvalidArgument("runs_per_setting must be at least 1".into()));
        }
        let lists: Vec<(SweepParam, Vec<f64>)> =
            self.axes.iter().map(|a| (a.param, a.values(self.joint))).collect();
        if let Some((p, _)) = lists.iter().find(|(_, v)| v.is_empty()) {
            return Err(Error::InvalidArgument(format!("empty value list for `{}`", p.name())));
        }
        if !self.joint {
            return Ok(lists
                .iter()
                .flat_map(|(p, vs)| vs.iter().map(move |v| vec![(*p, *v)]))
                .collect());
        }
        let mut grid: Vec<Vec<(SweepParam, f64)>> = vec![Vec::new()];
        for (p, vs) in &lists {
            grid = grid
                .into_iter()
                .flat_map(|prefix| {
                    vs.iter().map(move |v| {
                        let mut row = prefix.clone();
                        row.push((*p, *v));
                        row
                    })
                })
                .collect();
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub grid_id: usize,
    pub setting: Vec<(SweepParam, f64)>,
    pub aucs: Vec<f64>,
    pub failed: usize,
}

impl SweepRow {
    pub fn median_auc(&self) -> Option<f64> {
        lower_median(&self.aucs)
    }

    pub fn min_auc(&self) -> Option<f64> {
        self.aucs.iter().copied().reduce(f64::min)
    }

    pub fn max_auc(&self) -> Option<f64> {
        self.aucs.iter().copied().reduce(f64::max)
    }

    /// `param_or_grid_id` and `value(s)` fields of the CSV row.
    pub fn key_fields(&self, joint: bool) -> (String, String) {
        if joint {
            let values = self
                .setting
                .iter()
                .map(|(p, v)| format!("{}={v}", p.name()))
                .collect::<Vec<_>>()
                .join(";");
            (self.grid_id.to_string(), values)
        } else {
            let (p, v) = self.setting[0];
            (p.name().to_string(), v.to_string())
        }
    }
}

/// Runs every setting `runs_per_setting` times on one pair of scenes. Each
/// run trains from its own derived seed; failed runs are counted and the
/// sweep continues.
pub fn run_sweep(lib: &SpectralLibrary, base: &ExperimentConfig, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    base.hyperparams.validate()?;
    let settings = spec.settings()?;
    let scenes = simulate_scenes(lib, base)?;
    let mut rows = Vec::with_capacity(settings.len());
    for (grid_id, setting) in settings.into_iter().enumerate() {
        let mut row = SweepRow {
            grid_id,
            setting: setting.clone(),
            aucs: Vec::new(),
            failed: 0,
        };
        let mut hp = base.hyperparams.clone();
        let applied = setting.iter().try_for_each(|(p, v)| p.apply(&mut hp, *v));
        if let Err(e) = applied {
            log::warn!("setting {grid_id}: {e}");
            row.failed = spec.runs_per_setting;
            rows.push(row);
            continue;
        }
        for run in 0..spec.runs_per_setting {
            hp.seed = derive_seed(base.hyperparams.seed, grid_id as u64, run as u64);
            match run_on_scenes(&scenes, &hp, base.method, base.ridge) {
                Ok(out) => row.aucs.push(out.auc),
                Err(e) => {
                    log::warn!("setting {grid_id} run {run} failed: {e}");
                    row.failed += 1;
                }
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Writes `param_or_grid_id,value(s),median_auc,min_auc,max_auc,failed`.
pub fn write_sweep_csv(rows: &[SweepRow], joint: bool, out: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::InvalidArgument(e.to_string());
    w.write_record(["param_or_grid_id", "value(s)", "median_auc", "min_auc", "max_auc", "failed"])
        .map_err(io)?;
    let num = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_else(|| "nan".into());
    for r in rows {
        let (key, values) = r.key_fields(joint);
        w.write_record([
            key,
            values,
            num(r.median_auc()),
            num(r.min_auc()),
            num(r.max_auc()),
            r.failed.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(())
}
