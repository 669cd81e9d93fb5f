//! Domain types: bags of instances, concept dictionaries, hyperparameters and
//! per-instance sparse codes.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::scalar::Real;

/// A single pixel spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance<T> {
    pub features: Vec<T>,
}

impl<T: Real> Instance<T> {
    pub fn new(features: Vec<T>) -> Self {
        Self { features }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.features.len()
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.features
    }
}

impl<T: Real> From<Vec<T>> for Instance<T> {
    fn from(features: Vec<T>) -> Self {
        Self { features }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BagLabel {
    Positive,
    Negative,
}

impl BagLabel {
    pub fn is_positive(self) -> bool {
        matches!(self, BagLabel::Positive)
    }

    /// `1` for positive, `0` for negative.
    pub fn as_int(self) -> u8 {
        match self {
            BagLabel::Positive => 1,
            BagLabel::Negative => 0,
        }
    }

    pub fn from_int(v: u8) -> Option<Self> {
        match v {
            1 => Some(BagLabel::Positive),
            0 => Some(BagLabel::Negative),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bag<T> {
    pub id: String,
    pub label: BagLabel,
    pub instances: Vec<Instance<T>>,
}

impl<T: Real> Bag<T> {
    pub fn new(id: impl Into<String>, label: BagLabel, instances: Vec<Instance<T>>) -> Self {
        Self {
            id: id.into(),
            label,
            instances,
        }
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }
}

/// Ordered collection of labelled bags.
#[derive(Debug, Clone, PartialEq)]
pub struct BagDataset<T> {
    pub bags: Vec<Bag<T>>,
    dim: usize,
}

impl<T: Real> BagDataset<T> {
    /// Wraps bags without validation; the dimensionality is taken from the
    /// first instance found. Use [`validate_dataset`] before training.
    pub fn new(bags: Vec<Bag<T>>) -> Self {
        let dim = bags
            .iter()
            .flat_map(|b| b.instances.first())
            .map(|i| i.dim())
            .next()
            .unwrap_or(0);
        Self { bags, dim }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn positive_bags(&self) -> impl Iterator<Item = &Bag<T>> {
        self.bags.iter().filter(|b| b.label.is_positive())
    }

    pub fn negative_bags(&self) -> impl Iterator<Item = &Bag<T>> {
        self.bags.iter().filter(|b| !b.label.is_positive())
    }

    /// K⁺
    pub fn n_positive_bags(&self) -> usize {
        self.positive_bags().count()
    }

    /// K⁻
    pub fn n_negative_bags(&self) -> usize {
        self.negative_bags().count()
    }

    /// N⁺, the number of instances in positive bags.
    pub fn n_positive_instances(&self) -> usize {
        self.positive_bags().map(Bag::len).sum()
    }

    /// N⁻, the number of instances in negative bags.
    pub fn n_negative_instances(&self) -> usize {
        self.negative_bags().map(Bag::len).sum()
    }

    pub fn n_instances(&self) -> usize {
        self.bags.iter().map(Bag::len).sum()
    }

    pub fn instances(&self) -> impl Iterator<Item = &Instance<T>> {
        self.bags.iter().flat_map(|b| b.instances.iter())
    }

    pub fn positive_instances(&self) -> impl Iterator<Item = &Instance<T>> {
        self.positive_bags().flat_map(|b| b.instances.iter())
    }

    pub fn negative_instances(&self) -> impl Iterator<Item = &Instance<T>> {
        self.negative_bags().flat_map(|b| b.instances.iter())
    }

    /// Converts every feature to another scalar type.
    pub fn cast<U: Real>(&self) -> BagDataset<U> {
        BagDataset {
            dim: self.dim,
            bags: self
                .bags
                .iter()
                .map(|b| Bag {
                    id: b.id.clone(),
                    label: b.label,
                    instances: b
                        .instances
                        .iter()
                        .map(|i| Instance::new(i.features.iter().map(|v| U::lit(v.to_f64_lossy())).collect()))
                        .collect(),
                })
                .collect(),
        }
    }
}

/// One failed dataset invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NoBags,
    ZeroDimension,
    NoPositiveBags,
    NoNegativeBags,
    EmptyBag { bag: String },
    DimensionMismatch { bag: String, instance: usize, expected: usize, found: usize },
    NonFinite { bag: String, instance: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoBags => write!(f, "dataset has no bags"),
            Violation::ZeroDimension => write!(f, "instance dimensionality is zero"),
            Violation::NoPositiveBags => write!(f, "no positive bags"),
            Violation::NoNegativeBags => write!(f, "no negative bags"),
            Violation::EmptyBag { bag } => write!(f, "bag `{bag}` is empty"),
            Violation::DimensionMismatch {
                bag,
                instance,
                expected,
                found,
            } => write!(
                f,
                "dimension mismatch in bag `{bag}` instance {instance}: expected {expected}, found {found}"
            ),
            Violation::NonFinite { bag, instance } => {
                write!(f, "non-finite feature in bag `{bag}` instance {instance}")
            }
        }
    }
}

/// Checks every dataset invariant and reports each violation found.
pub fn validate_dataset<T: Real>(ds: &BagDataset<T>) -> Vec<Violation> {
    let mut out = Vec::new();
    if ds.bags.is_empty() {
        out.push(Violation::NoBags);
        return out;
    }
    let d = ds.dim();
    if d == 0 {
        out.push(Violation::ZeroDimension);
    }
    for bag in &ds.bags {
        if bag.is_empty() {
            out.push(Violation::EmptyBag { bag: bag.id.clone() });
        }
        let mut mismatch_reported = false;
        for (j, inst) in bag.instances.iter().enumerate() {
            if inst.dim() != d && !mismatch_reported {
                out.push(Violation::DimensionMismatch {
                    bag: bag.id.clone(),
                    instance: j,
                    expected: d,
                    found: inst.dim(),
                });
                // one report per bag
                mismatch_reported = true;
            }
            if inst.features.iter().any(|v| !v.is_finite()) {
                out.push(Violation::NonFinite {
                    bag: bag.id.clone(),
                    instance: j,
                });
            }
        }
    }
    if ds.n_positive_bags() == 0 {
        out.push(Violation::NoPositiveBags);
    }
    if ds.n_negative_bags() == 0 {
        out.push(Violation::NoNegativeBags);
    }
    out
}

/// Target concepts `D⁺` (d × T) and background concepts `D⁻` (d × M).
///
/// Atoms are addressed with a single index over the concatenation
/// `D = [D⁺ D⁻]`: `0..T` are targets and `T..T+M` are backgrounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptDictionary<T> {
    pub targets: Matrix<T>,
    pub backgrounds: Matrix<T>,
}

impl<T: Real> ConceptDictionary<T> {
    pub fn new(targets: Matrix<T>, backgrounds: Matrix<T>) -> Result<Self> {
        if targets.rows() != backgrounds.rows() {
            return Err(Error::DimensionMismatch {
                expected: targets.rows(),
                found: backgrounds.rows(),
            });
        }
        if targets.cols() == 0 || backgrounds.cols() == 0 {
            return Err(Error::InvalidArgument(
                "dictionary needs at least one target and one background atom".into(),
            ));
        }
        Ok(Self {
            targets,
            backgrounds,
        })
    }

    /// Like [`ConceptDictionary::new`] but scales every column to unit norm.
    pub fn normalized(targets: Matrix<T>, backgrounds: Matrix<T>) -> Result<Self> {
        let mut dict = Self::new(targets, backgrounds)?;
        for k in 0..dict.n_atoms() {
            let unit = linalg::normalized(dict.atom(k))
                .ok_or_else(|| Error::InvalidArgument(format!("atom {k} is the zero vector")))?;
            dict.set_atom(k, &unit);
        }
        Ok(dict)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.targets.rows()
    }

    /// T
    #[inline]
    pub fn n_targets(&self) -> usize {
        self.targets.cols()
    }

    /// M
    #[inline]
    pub fn n_backgrounds(&self) -> usize {
        self.backgrounds.cols()
    }

    #[inline]
    pub fn n_atoms(&self) -> usize {
        self.n_targets() + self.n_backgrounds()
    }

    pub fn atom(&self, k: usize) -> &[T] {
        let t = self.n_targets();
        if k < t {
            self.targets.col(k)
        } else {
            self.backgrounds.col(k - t)
        }
    }

    pub fn set_atom(&mut self, k: usize, v: &[T]) {
        let t = self.n_targets();
        if k < t {
            self.targets.set_col(k, v)
        } else {
            self.backgrounds.set_col(k - t, v)
        }
    }

    /// `D = [D⁺ D⁻]`.
    pub fn full(&self) -> Matrix<T> {
        self.targets.hcat(&self.backgrounds)
    }

    /// Largest deviation of any column norm from one.
    pub fn max_unit_norm_error(&self) -> T {
        (0..self.n_atoms())
            .map(|k| (linalg::norm(self.atom(k)) - T::one()).abs())
            .fold(T::zero(), T::max)
    }

    pub fn cast<U: Real>(&self) -> ConceptDictionary<U> {
        let f = |v: T| U::lit(v.to_f64_lossy());
        ConceptDictionary {
            targets: self.targets.map(f),
            backgrounds: self.backgrounds.map(f),
        }
    }
}

/// How background concepts are initialized before training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackgroundInit {
    /// Vertex component analysis on the negative instances.
    #[default]
    Vca,
    /// k-means cluster centers of the negative instances.
    KMeans,
}

/// Backtracking line-search constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmijoParams {
    pub initial_step: f64,
    pub shrink_factor: f64,
    pub sufficient_decrease_c: f64,
    pub max_backtracks: usize,
}

impl Default for ArmijoParams {
    fn default() -> Self {
        Self {
            initial_step: 0.01,
            shrink_factor: 0.5,
            sufficient_decrease_c: 1e-4,
            max_backtracks: 20,
        }
    }
}

/// Model and optimizer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperParams {
    /// Number of target concepts `T`.
    pub n_targets: usize,
    /// Number of background concepts `M`.
    pub n_backgrounds: usize,
    /// Weight of the negative-bag fidelity term.
    pub rho: f64,
    /// Generalized-mean exponent; must be nonzero.
    pub b: f64,
    /// Hybrid detector scale.
    pub beta: f64,
    /// Sparsity weight of the lasso.
    pub lambda: f64,
    /// Weight of the cross-incoherence term.
    pub alpha_incoh: f64,
    pub max_outer_iters: usize,
    /// Relative change of the objective between outer iterations below which
    /// training stops.
    pub change_tolerance: f64,
    pub ista_iters: usize,
    pub ista_tolerance: f64,
    pub armijo: ArmijoParams,
    pub background_init: BackgroundInit,
    /// Solve sparse codes once per outer iteration instead of before every
    /// atom update.
    pub reuse_codes_within_iteration: bool,
    pub seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            n_targets: 1,
            n_backgrounds: 9,
            rho: 0.8,
            b: 5.0,
            beta: 5.0,
            lambda: 1e-3,
            alpha_incoh: 1.0,
            max_outer_iters: 100,
            change_tolerance: 1e-5,
            ista_iters: 200,
            ista_tolerance: 1e-6,
            armijo: ArmijoParams::default(),
            background_init: BackgroundInit::Vca,
            reuse_codes_within_iteration: false,
            seed: 0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        fn bad(name: &'static str, reason: impl Into<String>) -> Error {
            Error::InvalidHyperParam {
                name,
                reason: reason.into(),
            }
        }
        if self.n_targets == 0 {
            return Err(bad("n_targets", "must be at least 1"));
        }
        if self.n_backgrounds == 0 {
            return Err(bad("n_backgrounds", "must be at least 1"));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(bad("beta", "must be positive and finite"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(bad("lambda", "must be nonnegative and finite"));
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(bad("rho", "must be nonnegative and finite"));
        }
        if !(self.alpha_incoh >= 0.0 && self.alpha_incoh.is_finite()) {
            return Err(bad("alpha_incoh", "must be nonnegative and finite"));
        }
        if self.b == 0.0 || !self.b.is_finite() {
            return Err(bad("b", "must be finite and nonzero"));
        }
        if self.ista_iters == 0 {
            return Err(bad("ista_iters", "must be at least 1"));
        }
        if !(self.ista_tolerance >= 0.0) {
            return Err(bad("ista_tolerance", "must be nonnegative"));
        }
        if !(self.change_tolerance >= 0.0) {
            return Err(bad("change_tolerance", "must be nonnegative"));
        }
        let a = &self.armijo;
        if !(a.initial_step > 0.0) {
            return Err(bad("armijo.initial_step", "must be positive"));
        }
        if !(a.shrink_factor > 0.0 && a.shrink_factor < 1.0) {
            return Err(bad("armijo.shrink_factor", "must lie in (0, 1)"));
        }
        if !(a.sufficient_decrease_c >= 0.0 && a.sufficient_decrease_c < 1.0) {
            return Err(bad("armijo.sufficient_decrease_c", "must lie in [0, 1)"));
        }
        if a.max_backtracks == 0 {
            return Err(bad("armijo.max_backtracks", "must be at least 1"));
        }
        if self.rho >= 1.0 {
            log::warn!("rho = {} is not below one; negative bags will dominate", self.rho);
        }
        Ok(())
    }
}

/// Sparse codes of one instance with their reconstruction residuals.
///
/// `a` codes the instance over `D = [D⁺ D⁻]`, `p` over `D⁻` alone;
/// `r = x − D a` and `q = x − D⁻ p`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCodes<T> {
    pub a: Vec<T>,
    pub p: Vec<T>,
    pub r: Vec<T>,
    pub q: Vec<T>,
    n_targets: usize,
}

impl<T: Real> SparseCodes<T> {
    /// Stores the codes and computes both residuals against `dict`.
    pub fn new(x: &[T], dict: &ConceptDictionary<T>, a: Vec<T>, p: Vec<T>) -> Self {
        assert_eq!(a.len(), dict.n_atoms(), "code `a` must have T+M entries");
        assert_eq!(p.len(), dict.n_backgrounds(), "code `p` must have M entries");
        let (r, q) = residuals(x, dict, &a, &p);
        Self {
            a,
            p,
            r,
            q,
            n_targets: dict.n_targets(),
        }
    }

    /// `a⁺`
    pub fn a_plus(&self) -> &[T] {
        &self.a[..self.n_targets]
    }

    /// `a⁻`
    pub fn a_minus(&self) -> &[T] {
        &self.a[self.n_targets..]
    }

    pub fn n_targets(&self) -> usize {
        self.n_targets
    }

    /// Recomputes `r` and `q` for a (possibly modified) dictionary while
    /// keeping the codes fixed.
    pub fn refresh_residuals(&mut self, x: &[T], dict: &ConceptDictionary<T>) {
        let (r, q) = residuals(x, dict, &self.a, &self.p);
        self.r = r;
        self.q = q;
    }
}

/// `r = x − D a`, `q = x − D⁻ p`.
pub fn residuals<T: Real>(x: &[T], dict: &ConceptDictionary<T>, a: &[T], p: &[T]) -> (Vec<T>, Vec<T>) {
    let mut r = x.to_vec();
    for (k, &ak) in a.iter().enumerate() {
        if ak != T::zero() {
            linalg::axpy(-ak, dict.atom(k), &mut r);
        }
    }
    let mut q = x.to_vec();
    for (k, &pk) in p.iter().enumerate() {
        if pk != T::zero() {
            linalg::axpy(-pk, dict.backgrounds.col(k), &mut q);
        }
    }
    (r, q)
}

/// Sparse codes for every instance, aligned with `BagDataset::bags`.
pub type CodeBook<T> = Vec<Vec<SparseCodes<T>>>;
