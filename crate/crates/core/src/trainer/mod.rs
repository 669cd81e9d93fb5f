//! Alternating optimization of the concept dictionary.
//!
//! Each outer iteration visits the target atoms and then the background
//! atoms. Before every single-atom update the sparse codes of all instances
//! are solved against the current dictionary; the atom then takes one
//! backtracking gradient step on the objective (codes held fixed) and is
//! projected back to unit norm.

pub mod init;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::model::{
    validate_dataset, ArmijoParams, BackgroundInit, BagDataset, CodeBook, ConceptDictionary,
    HyperParams, SparseCodes,
};
use crate::objective::{ObjectiveBreakdown, ObjectiveEvaluator};
use crate::scalar::Real;
use crate::sparse::{IstaConfig, LassoSolver};

pub use init::{init_targets, init_targets_with_subset_size, kmeans_centers, negative_matrix, vca};

/// Result of one backtracking line search.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmijoOutcome<T> {
    pub atom: Vec<T>,
    /// Accepted step length, `None` when every trial failed.
    pub step: Option<T>,
    pub value_before: T,
    pub value_after: T,
    pub trials: usize,
}

impl<T> ArmijoOutcome<T> {
    pub fn accepted(&self) -> bool {
        self.step.is_some()
    }
}

/// Backtracking step on the unit sphere: tries `s₀, s₀·shrink, …` and accepts
/// the first `s` with `f(normalize(atom − s·grad)) ≤ f(atom) − c·s·‖grad‖²`.
/// Returns the atom unchanged when no trial passes.
pub fn armijo_update_atom<T: Real>(
    atom: &[T],
    grad: &[T],
    eval: impl Fn(&[T]) -> T,
    cfg: &ArmijoParams,
) -> ArmijoOutcome<T> {
    let f0 = eval(atom);
    let grad_sq = linalg::norm_sq(grad);
    let unchanged = |trials| ArmijoOutcome {
        atom: atom.to_vec(),
        step: None,
        value_before: f0,
        value_after: f0,
        trials,
    };
    if grad_sq == T::zero() || !grad_sq.is_finite() {
        return unchanged(0);
    }
    let c = T::lit(cfg.sufficient_decrease_c);
    let shrink = T::lit(cfg.shrink_factor);
    let mut step = T::lit(cfg.initial_step);
    let mut candidate = vec![T::zero(); atom.len()];
    for trial in 1..=cfg.max_backtracks {
        for ((c, a), g) in candidate.iter_mut().zip(atom).zip(grad) {
            *c = *a - step * *g;
        }
        if let Some(unit) = linalg::normalized(&candidate) {
            let f = eval(&unit);
            if f <= f0 - c * step * grad_sq {
                return ArmijoOutcome {
                    atom: unit,
                    step: Some(step),
                    value_before: f0,
                    value_after: f,
                    trials: trial,
                };
            }
        }
        step = step * shrink;
    }
    unchanged(cfg.max_backtracks)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIters,
    Tolerance,
}

/// One line search performed during training.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchRecord<T> {
    pub iteration: usize,
    /// Index into `[D⁺ D⁻]`.
    pub atom: usize,
    pub step: Option<T>,
    pub value_before: T,
    pub value_after: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport<T> {
    pub iterations_run: usize,
    /// Objective after each outer iteration.
    pub objective_trace: Vec<ObjectiveBreakdown<T>>,
    /// Largest deviation from unit column norm after each outer iteration.
    pub norm_error_trace: Vec<T>,
    /// Objective of the initial dictionary.
    pub initial_objective: Option<ObjectiveBreakdown<T>>,
    pub stop_reason: StopReason,
    pub initial_dictionary: ConceptDictionary<T>,
    pub final_dictionary: ConceptDictionary<T>,
    pub line_searches: Vec<LineSearchRecord<T>>,
}

impl<T: Real> TrainReport<T> {
    pub fn final_objective(&self) -> Option<ObjectiveBreakdown<T>> {
        self.objective_trace.last().copied().or(self.initial_objective)
    }
}

/// Builds the initial dictionary from `hp.seed`.
pub fn initialize_dictionary<T: Real>(ds: &BagDataset<T>, hp: &HyperParams) -> Result<ConceptDictionary<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    initialize_with_rng(ds, hp, &mut rng)
}

fn initialize_with_rng<T: Real>(
    ds: &BagDataset<T>,
    hp: &HyperParams,
    rng: &mut ChaCha8Rng,
) -> Result<ConceptDictionary<T>> {
    let targets = init_targets(ds, hp.n_targets, rng)?;
    let negatives = negative_matrix(ds);
    let backgrounds = match hp.background_init {
        BackgroundInit::Vca => vca(&negatives, hp.n_backgrounds, rng)?,
        BackgroundInit::KMeans => kmeans_centers(&negatives, hp.n_backgrounds, 100, rng)?,
    };
    ConceptDictionary::new(targets, backgrounds)
}

/// Solves the sparse codes `a` (over `D`) and `p` (over `D⁻`) of every
/// instance for one dictionary.
///
/// `Dᵀx` is cached per instance and refreshed one column at a time as atoms
/// change.
struct CodeSolver<'a, T> {
    ds: &'a BagDataset<T>,
    lambda: T,
    ista: IstaConfig,
    solve_negative_a: bool,
    /// `Dᵀx` per instance, aligned with the dataset bags.
    correlation: Vec<Vec<Vec<T>>>,
}

impl<'a, T: Real> CodeSolver<'a, T> {
    fn new(ds: &'a BagDataset<T>, dict: &ConceptDictionary<T>, hp: &HyperParams) -> Self {
        let full = dict.full();
        let correlation = ds
            .bags
            .iter()
            .map(|b| b.instances.iter().map(|x| full.tr_mul_vec(x.as_slice())).collect())
            .collect();
        Self {
            ds,
            lambda: T::lit(hp.lambda),
            ista: IstaConfig {
                max_iters: hp.ista_iters,
                tolerance: hp.ista_tolerance,
                step_override: None,
            },
            solve_negative_a: hp.alpha_incoh != 0.0,
            correlation,
        }
    }

    fn atom_changed(&mut self, k: usize, atom: &[T]) {
        for (bag, corr) in self.ds.bags.iter().zip(&mut self.correlation) {
            for (x, c) in bag.instances.iter().zip(corr.iter_mut()) {
                c[k] = linalg::dot(atom, x.as_slice());
            }
        }
    }

    /// Solves all codes. When `previous` is given and the background atoms
    /// did not change since it was computed, its `p` codes are reused: the
    /// solve is deterministic, so re-solving would give identical values.
    fn solve(
        &self,
        dict: &ConceptDictionary<T>,
        previous: Option<&CodeBook<T>>,
    ) -> Result<CodeBook<T>> {
        let n_targets = dict.n_targets();
        let n_atoms = dict.n_atoms();
        let full = LassoSolver::new(dict.full(), self.ista)?;
        let background = if previous.is_none() {
            Some(LassoSolver::new(dict.backgrounds.clone(), self.ista)?)
        } else {
            None
        };
        let mut book = Vec::with_capacity(self.ds.bags.len());
        for (i, bag) in self.ds.bags.iter().enumerate() {
            let mut codes = Vec::with_capacity(bag.len());
            for (j, x) in bag.instances.iter().enumerate() {
                let corr = &self.correlation[i][j];
                let a = if bag.label.is_positive() || self.solve_negative_a {
                    full.solve_correlated(corr, self.lambda, |_| {}).code
                } else {
                    vec![T::zero(); n_atoms]
                };
                let p = match (&background, previous) {
                    (Some(solver), _) => solver.solve_correlated(&corr[n_targets..], self.lambda, |_| {}).code,
                    (None, Some(prev)) => prev[i][j].p.clone(),
                    (None, None) => unreachable!("background solver exists when no codes are reused"),
                };
                codes.push(SparseCodes::new(x.as_slice(), dict, a, p));
            }
            book.push(codes);
        }
        Ok(book)
    }
}

fn relative_change<T: Real>(prev: T, next: T) -> T {
    let scale = prev.abs().max(T::min_positive_value());
    (next - prev).abs() / scale
}

/// Runs the alternating optimization from a seeded initialization.
pub fn train<T: Real>(ds: &BagDataset<T>, hp: &HyperParams) -> Result<TrainReport<T>> {
    let violations = validate_dataset(ds);
    if !violations.is_empty() {
        let msg = violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
        return Err(Error::InvalidDataset(msg));
    }
    hp.validate()?;
    let dict = initialize_dictionary(ds, hp)?;
    train_from(ds, hp, dict)
}

/// Runs the alternating optimization from a given dictionary.
pub fn train_from<T: Real>(
    ds: &BagDataset<T>,
    hp: &HyperParams,
    initial: ConceptDictionary<T>,
) -> Result<TrainReport<T>> {
    hp.validate()?;
    if initial.n_targets() != hp.n_targets || initial.n_backgrounds() != hp.n_backgrounds {
        return Err(Error::InvalidArgument(format!(
            "dictionary has {}+{} atoms, hyperparameters ask for {}+{}",
            initial.n_targets(),
            initial.n_backgrounds(),
            hp.n_targets,
            hp.n_backgrounds
        )));
    }
    if initial.dim() != ds.dim() {
        return Err(Error::DimensionMismatch {
            expected: ds.dim(),
            found: initial.dim(),
        });
    }

    let mut dict = initial.clone();
    let mut report = TrainReport {
        iterations_run: 0,
        objective_trace: Vec::new(),
        norm_error_trace: Vec::new(),
        initial_objective: None,
        stop_reason: StopReason::MaxIters,
        initial_dictionary: initial,
        final_dictionary: dict.clone(),
        line_searches: Vec::new(),
    };
    if hp.max_outer_iters == 0 {
        return Ok(report);
    }

    let n_targets = dict.n_targets();
    let n_atoms = dict.n_atoms();
    let mut solver = CodeSolver::new(ds, &dict, hp);

    // `valid` holds codes solved for the current dictionary; `stale` holds the
    // most recent codes for an older one, and `backgrounds_moved` records
    // whether D⁻ changed since `stale` was solved.
    let mut valid = Some(solver.solve(&dict, None)?);
    let initial_value = objective_of(ds, &dict, hp, valid.as_ref().unwrap())?;
    report.initial_objective = Some(initial_value);
    let mut previous_total = initial_value.total;
    let mut stale: Option<CodeBook<T>> = None;
    let mut backgrounds_moved = false;

    for iteration in 0..hp.max_outer_iters {
        for k in 0..n_atoms {
            let current = if let Some(c) = valid.take() {
                backgrounds_moved = false;
                c
            } else if hp.reuse_codes_within_iteration && k > 0 {
                stale.take().expect("codes solved earlier in this iteration")
            } else {
                let prev = if backgrounds_moved { None } else { stale.as_ref() };
                let c = solver.solve(&dict, prev)?;
                backgrounds_moved = false;
                c
            };

            let evaluator = ObjectiveEvaluator::new(ds, &dict, hp, &current)?;
            let grad = evaluator.atom_gradient(k);
            let outcome = armijo_update_atom(
                dict.atom(k),
                &grad,
                |cand| evaluator.with_atom(k, cand).total,
                &hp.armijo,
            );
            drop(evaluator);
            report.line_searches.push(LineSearchRecord {
                iteration,
                atom: k,
                step: outcome.step,
                value_before: outcome.value_before,
                value_after: outcome.value_after,
            });
            if outcome.accepted() {
                dict.set_atom(k, &outcome.atom);
                solver.atom_changed(k, &outcome.atom);
                backgrounds_moved |= k >= n_targets;
                stale = Some(current);
            } else {
                valid = Some(current);
            }
        }

        let fresh = match valid.take() {
            Some(c) => c,
            None => {
                let prev = if backgrounds_moved { None } else { stale.as_ref() };
                solver.solve(&dict, prev)?
            }
        };
        backgrounds_moved = false;
        stale = None;
        let value = objective_of(ds, &dict, hp, &fresh)?;
        valid = Some(fresh);

        report.objective_trace.push(value);
        report.norm_error_trace.push(dict.max_unit_norm_error());
        report.iterations_run = iteration + 1;
        log::debug!(
            "iteration {}: J = {:e} (gm {:e}, fidelity {:e}, incoherence {:e})",
            iteration + 1,
            value.total.to_f64_lossy(),
            value.gm_term.to_f64_lossy(),
            value.fidelity_term.to_f64_lossy(),
            value.incoherence_term.to_f64_lossy()
        );
        let change = relative_change(previous_total, value.total);
        previous_total = value.total;
        if change < T::lit(hp.change_tolerance) {
            report.stop_reason = StopReason::Tolerance;
            break;
        }
    }
    report.final_dictionary = dict;
    Ok(report)
}

fn objective_of<T: Real>(
    ds: &BagDataset<T>,
    dict: &ConceptDictionary<T>,
    hp: &HyperParams,
    codes: &CodeBook<T>,
) -> Result<ObjectiveBreakdown<T>> {
    let ev = ObjectiveEvaluator::new(ds, dict, hp, codes)?;
    if let Some(&(i, j)) = ev.degenerate_instances().first() {
        log::warn!(
            "bag `{}` instance {j}: background residual is degenerate; excluded from the generalized-mean term",
            ds.bags[i].id
        );
    }
    Ok(ev.breakdown())
}

/// Unit-norm columns helper used by callers that build dictionaries by hand.
pub fn unit_columns<T: Real>(m: &Matrix<T>) -> Option<Matrix<T>> {
    let cols: Option<Vec<Vec<T>>> = m.columns().map(linalg::normalized).collect();
    cols.map(|c| Matrix::from_columns(m.rows(), &c))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_keeps_atom() {
        let atom = [0.6, 0.8];
        let out = armijo_update_atom(&atom, &[0.0, 0.0], |v| v[0], &ArmijoParams::default());
        assert_eq!(out.atom, atom.to_vec());
        assert!(!out.accepted());
    }

    #[test]
    fn quadratic_step_decreases() {
        let target = [1.0, 0.0];
        let f = |v: &[f64]| (v[0] - target[0]).powi(2) + (v[1] - target[1]).powi(2);
        let atom = [0.6, 0.8];
        let grad = [2.0 * (0.6 - 1.0), 2.0 * 0.8];
        let cfg = ArmijoParams {
            initial_step: 1.0,
            ..ArmijoParams::default()
        };
        let out = armijo_update_atom(&atom, &grad, f, &cfg);
        assert!(out.accepted());
        assert!(out.value_after < out.value_before);
        assert!((linalg::norm(&out.atom) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ascent_direction_is_rejected() {
        let f = |v: &[f64]| v[0];
        let atom = [0.6, 0.8];
        // gradient pointing the wrong way: stepping along −grad increases f
        let out = armijo_update_atom(&atom, &[-1.0, 0.0], f, &ArmijoParams::default());
        assert!(!out.accepted());
        assert_eq!(out.atom, atom.to_vec());
        assert_eq!(out.trials, ArmijoParams::default().max_backtracks);
    }
}
