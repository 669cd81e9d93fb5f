//! Signature-based detection statistics.
//!
//! SMF and ACE use the usual whitened forms with background mean `μ` and
//! covariance `Σ`:
//!
//! ```text
//! SMF(x) = sᵀΣ⁻¹(x−μ) / sqrt(sᵀΣ⁻¹s)
//! ACE(x) = (sᵀΣ⁻¹(x−μ))² / ((sᵀΣ⁻¹s) · (x−μ)ᵀΣ⁻¹(x−μ))
//! ```
//!
//! The hybrid statistic compares lasso reconstructions with the full
//! dictionary and with the background atoms alone, reported as the ratio
//! `‖x − D⁻p‖² / ‖x − D a‖²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::ScoreSet;
use crate::linalg::{self, dot, norm_sq, Cholesky, Matrix};
use crate::model::{ConceptDictionary, Instance};
use crate::scalar::Real;
use crate::sparse::{IstaConfig, LassoSolver};

/// Ratio returned when the full-dictionary residual vanishes.
pub const HSD_CAP: f64 = 1e30;
const HSD_DEGENERATE: f64 = 1e-30;

/// Background mean and (ridge-regularized) covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundStats<T> {
    pub mu: Vec<T>,
    pub sigma: Matrix<T>,
    pub sigma_inv: Matrix<T>,
    chol: Cholesky<T>,
    pub ridge: T,
}

impl<T: Real> BackgroundStats<T> {
    /// Builds the statistics from a known mean and covariance; the ridge is
    /// added to the diagonal.
    pub fn from_parts(mu: Vec<T>, mut sigma: Matrix<T>, ridge: T) -> Result<Self> {
        check_square(&mu, &sigma)?;
        for i in 0..mu.len() {
            sigma[(i, i)] = sigma[(i, i)] + ridge;
        }
        Self::from_regularized(mu, sigma, ridge)
    }

    /// Builds the statistics from a covariance that already includes
    /// `ridge · I`, as stored in [`BackgroundStats::sigma`].
    pub fn from_regularized(mu: Vec<T>, sigma: Matrix<T>, ridge: T) -> Result<Self> {
        check_square(&mu, &sigma)?;
        let chol = Cholesky::new(&sigma).ok_or(Error::SingularCovariance {
            ridge: ridge.to_f64_lossy(),
        })?;
        let sigma_inv = chol.inverse();
        Ok(Self {
            mu,
            sigma,
            sigma_inv,
            chol,
            ridge,
        })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// `L⁻¹(x − μ)` where `Σ = L Lᵀ`.
    pub fn whiten(&self, x: &[T]) -> Vec<T> {
        self.chol.solve_lower(&linalg::sub(x, &self.mu))
    }

    /// `(x − μ)ᵀ Σ⁻¹ (x − μ)`.
    pub fn mahalanobis_sq(&self, x: &[T]) -> T {
        norm_sq(&self.whiten(x))
    }
}

fn check_square<T: Real>(mu: &[T], sigma: &Matrix<T>) -> Result<()> {
    let d = mu.len();
    if sigma.rows() != d || sigma.cols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: if sigma.rows() != d { sigma.rows() } else { sigma.cols() },
        });
    }
    Ok(())
}

/// Default ridge `1e-6 · trace(Σ) / d`.
pub fn default_ridge<T: Real>(sigma: &Matrix<T>) -> T {
    let d = T::from_usize_lossy(sigma.rows().max(1));
    T::lit(1e-6) * sigma.trace() / d
}

/// Sample mean and covariance (denominator `N − 1`) of the negatives, plus
/// `ridge · I`. `None` selects [`default_ridge`].
pub fn fit_background<'a, T: Real>(
    negatives: impl IntoIterator<Item = &'a [T]>,
    ridge: Option<T>,
) -> Result<BackgroundStats<T>> {
    let rows: Vec<&[T]> = negatives.into_iter().collect();
    let Some(first) = rows.first() else {
        return Err(Error::InvalidArgument("no negative instances for background statistics".into()));
    };
    let d = first.len();
    if let Some(bad) = rows.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: bad.len(),
        });
    }
    let n = rows.len();
    if n < d + 1 {
        log::warn!("only {n} background instances for dimension {d}; covariance is rank deficient");
    }
    let nf = T::from_usize_lossy(n);
    let mut mu = vec![T::zero(); d];
    for r in &rows {
        linalg::axpy(T::one(), r, &mut mu);
    }
    mu.iter_mut().for_each(|v| *v = *v / nf);

    let mut sigma = Matrix::zeros(d, d);
    let mut c = vec![T::zero(); d];
    for r in &rows {
        for (ci, (x, m)) in c.iter_mut().zip(r.iter().zip(&mu)) {
            *ci = *x - *m;
        }
        for j in 0..d {
            let cj = c[j];
            for i in j..d {
                sigma[(i, j)] = sigma[(i, j)] + c[i] * cj;
            }
        }
    }
    let denom = T::from_usize_lossy(n.saturating_sub(1).max(1));
    for j in 0..d {
        for i in j..d {
            let v = sigma[(i, j)] / denom;
            sigma[(i, j)] = v;
            sigma[(j, i)] = v;
        }
    }
    let ridge = ridge.unwrap_or_else(|| default_ridge(&sigma));
    if ridge < T::zero() {
        return Err(Error::InvalidArgument("ridge must be nonnegative".into()));
    }
    BackgroundStats::from_parts(mu, sigma, ridge)
}

/// Precomputed `Σ⁻¹s` for repeated SMF/ACE scoring with one signature.
#[derive(Debug, Clone)]
pub struct SignatureFilter<'a, T> {
    bg: &'a BackgroundStats<T>,
    sinv_s: Vec<T>,
    s_sinv_s: T,
}

impl<'a, T: Real> SignatureFilter<'a, T> {
    pub fn new(signature: &[T], bg: &'a BackgroundStats<T>) -> Result<Self> {
        if signature.len() != bg.dim() {
            return Err(Error::DimensionMismatch {
                expected: bg.dim(),
                found: signature.len(),
            });
        }
        if signature.iter().all(|v| *v == T::zero()) {
            return Err(Error::InvalidArgument("target signature is the zero vector".into()));
        }
        let sinv_s = bg.chol.solve(signature);
        let s_sinv_s = dot(signature, &sinv_s);
        Ok(Self { bg, sinv_s, s_sinv_s })
    }

    fn correlation(&self, x: &[T]) -> T {
        self.sinv_s
            .iter()
            .zip(x.iter().zip(&self.bg.mu))
            .fold(T::zero(), |acc, (w, (xi, mi))| acc + *w * (*xi - *mi))
    }

    pub fn smf(&self, x: &[T]) -> T {
        self.correlation(x) / self.s_sinv_s.sqrt()
    }

    pub fn ace(&self, x: &[T]) -> T {
        let m = self.bg.mahalanobis_sq(x);
        if m <= T::zero() {
            return T::zero();
        }
        let c = self.correlation(x);
        let v = c * c / (self.s_sinv_s * m);
        v.min(T::one())
    }
}

/// Spectral matched filter statistic.
pub fn smf_score<T: Real>(x: &[T], s: &[T], bg: &BackgroundStats<T>) -> Result<T> {
    Ok(SignatureFilter::new(s, bg)?.smf(x))
}

/// Adaptive cosine estimator; `0` when `x = μ`.
pub fn ace_score<T: Real>(x: &[T], s: &[T], bg: &BackgroundStats<T>) -> Result<T> {
    Ok(SignatureFilter::new(s, bg)?.ace(x))
}

/// Hybrid statistic of one instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HsdScore<T> {
    pub ratio: T,
    /// Set when `‖x − D a‖²` vanished and the ratio was replaced by the cap.
    pub capped: bool,
}

/// Lasso solvers for `D` and `D⁻`, reused across pixels.
#[derive(Debug, Clone)]
pub struct HybridDetector<T> {
    full: LassoSolver<T>,
    background: LassoSolver<T>,
    lambda: T,
}

impl<T: Real> HybridDetector<T> {
    pub fn new(dict: &ConceptDictionary<T>, lambda: T, ista: IstaConfig) -> Result<Self> {
        Ok(Self {
            full: LassoSolver::new(dict.full(), ista)?,
            background: LassoSolver::new(dict.backgrounds.clone(), ista)?,
            lambda,
        })
    }

    pub fn score(&self, x: &[T]) -> HsdScore<T> {
        let a = self.full.solve(x, self.lambda).code;
        let p = self.background.solve(x, self.lambda).code;
        let r = linalg::sub(x, &self.full.dictionary().mul_vec(&a));
        let q = linalg::sub(x, &self.background.dictionary().mul_vec(&p));
        let r_sq = norm_sq(&r);
        if r_sq < T::lit(HSD_DEGENERATE) {
            return HsdScore {
                ratio: T::lit(HSD_CAP),
                capped: true,
            };
        }
        HsdScore {
            ratio: norm_sq(&q) / r_sq,
            capped: false,
        }
    }
}

/// `‖x − D⁻p‖² / ‖x − D a‖²` with both codes solved by ISTA.
pub fn hsd_score<T: Real>(x: &[T], dict: &ConceptDictionary<T>, lambda: T, ista: IstaConfig) -> Result<HsdScore<T>> {
    if x.len() != dict.dim() {
        return Err(Error::DimensionMismatch {
            expected: dict.dim(),
            found: x.len(),
        });
    }
    Ok(HybridDetector::new(dict, lambda, ista)?.score(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Hsd,
    Ace,
    Smf,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hsd" => Ok(Method::Hsd),
            "ace" => Ok(Method::Ace),
            "smf" => Ok(Method::Smf),
            other => Err(Error::InvalidArgument(format!("unknown detection method `{other}`"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Hsd => "hsd",
            Method::Ace => "ace",
            Method::Smf => "smf",
        })
    }
}

/// Everything needed to score pixels after training.
#[derive(Debug, Clone)]
pub struct DetectionModel<T> {
    pub dictionary: ConceptDictionary<T>,
    pub background: BackgroundStats<T>,
    pub lambda: T,
    pub ista: IstaConfig,
}

/// Per-pixel scores for `scene`. For ACE and SMF every target concept is
/// used as a signature and the maximum is kept; the hybrid ratio uses all
/// target concepts jointly. Entry ids are the pixel indices.
pub fn detect<T: Real>(scene: &[Instance<T>], model: &DetectionModel<T>, method: Method) -> Result<ScoreSet<T>> {
    let d = model.dictionary.dim();
    if model.background.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: model.background.dim(),
        });
    }
    if let Some(bad) = scene.iter().find(|x| x.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: bad.dim(),
        });
    }
    let scores: Vec<T> = match method {
        Method::Hsd => {
            let det = HybridDetector::new(&model.dictionary, model.lambda, model.ista)?;
            let mut capped = 0usize;
            let out = scene
                .iter()
                .map(|x| {
                    let s = det.score(x.as_slice());
                    capped += s.capped as usize;
                    s.ratio
                })
                .collect();
            if capped > 0 {
                log::warn!("{capped} pixels had a vanishing full-dictionary residual; ratio capped at {HSD_CAP:e}");
            }
            out
        }
        Method::Ace | Method::Smf => {
            let filters = model
                .dictionary
                .targets
                .columns()
                .map(|s| SignatureFilter::new(s, &model.background))
                .collect::<Result<Vec<_>>>()?;
            scene
                .iter()
                .map(|x| {
                    filters
                        .iter()
                        .map(|f| match method {
                            Method::Ace => f.ace(x.as_slice()),
                            _ => f.smf(x.as_slice()),
                        })
                        .fold(T::neg_infinity(), T::max)
                })
                .collect()
        }
    };
    Ok(ScoreSet::from_scores(scores))
}
