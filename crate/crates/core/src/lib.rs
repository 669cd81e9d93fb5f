//! Multiple-instance hybrid estimator (MI-HE).
//!
//! Learns discriminative target concepts from bag-level labels by
//! alternating lasso sparse coding with gradient steps on a dictionary of
//! target and background atoms, then scores pixels with the hybrid
//! sub-pixel detector, ACE or SMF.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix the common `f64` instantiation.

pub mod detectors;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod linalg;
pub mod model;
pub mod objective;
pub mod scalar;
pub mod simgen;
pub mod sparse;
pub mod trainer;

pub use detectors::{ace_score, detect, fit_background, hsd_score, smf_score, BackgroundStats, DetectionModel, Method};
pub use error::{Error, Result};
pub use eval::{auc, nauc, roc_curve, ScoreSet};
pub use linalg::Matrix;
pub use model::{Bag, BagDataset, BagLabel, ConceptDictionary, HyperParams, Instance, SparseCodes};
pub use objective::{evaluate_objective, grad_background_atom, grad_target_atom, ObjectiveBreakdown};
pub use scalar::Real;
pub use simgen::{generate_dataset, SimConfig, SpectralLibrary};
pub use sparse::{solve_lasso, IstaConfig};
pub use trainer::{train, TrainReport};

pub type Dataset = BagDataset<f64>;
pub type Dictionary = ConceptDictionary<f64>;
pub type Report = TrainReport<f64>;
pub type Scores = ScoreSet<f64>;
pub type Background = BackgroundStats<f64>;

pub type Dataset32 = BagDataset<f32>;
pub type Dictionary32 = ConceptDictionary<f32>;
pub type Report32 = TrainReport<f32>;
