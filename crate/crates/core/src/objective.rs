//! The training objective: generalized-mean term over positive bags, background
//! fidelity and cross incoherence over negative bags, and its gradients with
//! respect to single dictionary atoms.
//!
//! Sparse codes are treated as constants everywhere in this module; residuals
//! are always recomputed from the codes and the dictionary passed in.

use crate::error::{Error, Result};
use crate::linalg::{self, dot, norm_sq};
use crate::model::{residuals, BagDataset, CodeBook, ConceptDictionary, HyperParams, SparseCodes};
use crate::scalar::Real;

/// Background residual energies below this are treated as degenerate.
pub const DEGENERATE_Q_SQ: f64 = 1e-30;

/// The three terms of the objective and their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveBreakdown<T> {
    pub gm_term: T,
    pub fidelity_term: T,
    pub incoherence_term: T,
    pub total: T,
}

impl<T: Real> ObjectiveBreakdown<T> {
    fn new(gm_term: T, fidelity_term: T, incoherence_term: T) -> Self {
        Self {
            gm_term,
            fidelity_term,
            incoherence_term,
            total: gm_term + fidelity_term + incoherence_term,
        }
    }
}

/// `exp(−β ‖r‖² / ‖q‖²)` for one instance, with `r = x − D a` and
/// `q = x − D⁻ p` recomputed from the stored codes.
pub fn hybrid_statistic<T: Real>(
    x: &[T],
    dict: &ConceptDictionary<T>,
    codes: &SparseCodes<T>,
    beta: T,
) -> Result<T> {
    let (r, q) = residuals(x, dict, &codes.a, &codes.p);
    let q_sq = norm_sq(&q);
    if q_sq < T::lit(DEGENERATE_Q_SQ) {
        return Err(Error::DegenerateBackground {
            q_norm_sq: q_sq.to_f64_lossy(),
            bag: None,
            instance: None,
        });
    }
    Ok((-beta * norm_sq(&r) / q_sq).exp())
}

/// `((1/N) Σ vᵇ)^(1/b)`, evaluated in log space.
pub fn generalized_mean<T: Real>(values: &[T], b: T) -> Result<T> {
    if b == T::zero() || !b.is_finite() {
        return Err(Error::InvalidArgument("generalized mean exponent must be finite and nonzero".into()));
    }
    if values.is_empty() {
        return Err(Error::InvalidArgument("generalized mean of an empty list".into()));
    }
    if values.iter().any(|v| !(*v > T::zero())) {
        return Err(Error::InvalidArgument("generalized mean requires positive values".into()));
    }
    let logs: Vec<T> = values.iter().map(|v| b * v.ln()).collect();
    let n = T::from_usize_lossy(values.len());
    Ok(((log_sum_exp(&logs) - n.ln()) / b).exp())
}

fn log_sum_exp<T: Real>(z: &[T]) -> T {
    let m = z.iter().copied().fold(T::neg_infinity(), T::max);
    if !m.is_finite() {
        return m;
    }
    m + z.iter().map(|v| (*v - m).exp()).sum::<T>().ln()
}

/// Model scalars converted to the working precision.
#[derive(Debug, Clone, Copy)]
struct Weights<T> {
    beta: T,
    b: T,
    rho: T,
    alpha: T,
}

impl<T: Real> Weights<T> {
    fn from_hp(hp: &HyperParams) -> Self {
        Self {
            beta: T::lit(hp.beta),
            b: T::lit(hp.b),
            rho: T::lit(hp.rho),
            alpha: T::lit(hp.alpha_incoh),
        }
    }
}

#[derive(Debug, Clone)]
struct PositiveCache<T> {
    r: Vec<T>,
    q: Vec<T>,
    r_sq: T,
    q_sq: T,
}

#[derive(Debug, Clone)]
struct NegativeCache<T> {
    q: Vec<T>,
    q_sq: T,
    /// `(D⁺ a⁺)ᵀ x`
    target_proj: T,
}

/// Objective and gradients with cached residuals.
///
/// The evaluator owns a copy of the dictionary; [`ObjectiveEvaluator::with_atom`]
/// evaluates the objective for a candidate replacement of one atom without
/// touching the cache, and [`ObjectiveEvaluator::commit_atom`] applies it.
#[derive(Debug, Clone)]
pub struct ObjectiveEvaluator<'a, T> {
    ds: &'a BagDataset<T>,
    codes: &'a CodeBook<T>,
    dict: ConceptDictionary<T>,
    w: Weights<T>,
    positive: Vec<(usize, Vec<PositiveCache<T>>)>,
    negative: Vec<(usize, Vec<NegativeCache<T>>)>,
}

impl<'a, T: Real> ObjectiveEvaluator<'a, T> {
    pub fn new(
        ds: &'a BagDataset<T>,
        dict: &ConceptDictionary<T>,
        hp: &HyperParams,
        codes: &'a CodeBook<T>,
    ) -> Result<Self> {
        if codes.len() != ds.bags.len() {
            return Err(Error::InvalidArgument(format!(
                "code book has {} bags, dataset has {}",
                codes.len(),
                ds.bags.len()
            )));
        }
        let mut positive = Vec::new();
        let mut negative = Vec::new();
        for (i, bag) in ds.bags.iter().enumerate() {
            if codes[i].len() != bag.len() {
                return Err(Error::InvalidArgument(format!(
                    "bag `{}` has {} instances but {} codes",
                    bag.id,
                    bag.len(),
                    codes[i].len()
                )));
            }
            if bag.label.is_positive() {
                let cache = bag
                    .instances
                    .iter()
                    .zip(&codes[i])
                    .map(|(x, c)| {
                        let (r, q) = residuals(x.as_slice(), dict, &c.a, &c.p);
                        PositiveCache {
                            r_sq: norm_sq(&r),
                            q_sq: norm_sq(&q),
                            r,
                            q,
                        }
                    })
                    .collect();
                positive.push((i, cache));
            } else {
                let cache = bag
                    .instances
                    .iter()
                    .zip(&codes[i])
                    .map(|(x, c)| {
                        let x = x.as_slice();
                        let (_, q) = residuals(x, dict, &c.a, &c.p);
                        NegativeCache {
                            q_sq: norm_sq(&q),
                            q,
                            target_proj: target_projection(x, dict, c.a_plus()),
                        }
                    })
                    .collect();
                negative.push((i, cache));
            }
        }
        Ok(Self {
            ds,
            codes,
            dict: dict.clone(),
            w: Weights::from_hp(hp),
            positive,
            negative,
        })
    }

    pub fn dictionary(&self) -> &ConceptDictionary<T> {
        &self.dict
    }

    pub fn breakdown(&self) -> ObjectiveBreakdown<T> {
        self.evaluate(|_, _, c| (c.r_sq, c.q_sq), |_, _, c| (c.q_sq, c.target_proj))
    }

    /// Objective with atom `k` (index into `[D⁺ D⁻]`) replaced by `candidate`.
    pub fn with_atom(&self, k: usize, candidate: &[T]) -> ObjectiveBreakdown<T> {
        let n_targets = self.dict.n_targets();
        let delta = linalg::sub(candidate, self.dict.atom(k));
        let delta_sq = norm_sq(&delta);
        let two = T::lit(2.0);
        self.evaluate(
            |i, j, c| {
                let code = &self.codes[i][j];
                let ak = code.a[k];
                let r_sq = if ak != T::zero() {
                    c.r_sq - two * ak * dot(&delta, &c.r) + ak * ak * delta_sq
                } else {
                    c.r_sq
                };
                let q_sq = if k >= n_targets {
                    let pk = code.p[k - n_targets];
                    if pk != T::zero() {
                        c.q_sq - two * pk * dot(&delta, &c.q) + pk * pk * delta_sq
                    } else {
                        c.q_sq
                    }
                } else {
                    c.q_sq
                };
                (r_sq, q_sq)
            },
            |i, j, c| {
                let code = &self.codes[i][j];
                if k >= n_targets {
                    let pk = code.p[k - n_targets];
                    let q_sq = if pk != T::zero() {
                        c.q_sq - two * pk * dot(&delta, &c.q) + pk * pk * delta_sq
                    } else {
                        c.q_sq
                    };
                    (q_sq, c.target_proj)
                } else {
                    let ak = code.a[k];
                    let x = self.ds.bags[i].instances[j].as_slice();
                    let s = if ak != T::zero() {
                        c.target_proj + ak * dot(&delta, x)
                    } else {
                        c.target_proj
                    };
                    (c.q_sq, s)
                }
            },
        )
    }

    fn evaluate(
        &self,
        pos: impl Fn(usize, usize, &PositiveCache<T>) -> (T, T),
        neg: impl Fn(usize, usize, &NegativeCache<T>) -> (T, T),
    ) -> ObjectiveBreakdown<T> {
        let Weights { beta, b, rho, alpha } = self.w;
        let degenerate = T::lit(DEGENERATE_Q_SQ);
        let mut gm = T::zero();
        let mut z = Vec::new();
        for (i, cache) in &self.positive {
            z.clear();
            for (j, c) in cache.iter().enumerate() {
                let (r_sq, q_sq) = pos(*i, j, c);
                if q_sq < degenerate {
                    continue;
                }
                z.push(-b * beta * r_sq / q_sq);
            }
            if z.is_empty() {
                continue;
            }
            let n = T::from_usize_lossy(cache.len());
            gm = gm - (log_sum_exp(&z) - n.ln()) / b;
        }
        let mut fidelity = T::zero();
        let mut incoherence = T::zero();
        for (i, cache) in &self.negative {
            for (j, c) in cache.iter().enumerate() {
                let (q_sq, s) = neg(*i, j, c);
                fidelity = fidelity + q_sq;
                incoherence = incoherence + s * s;
            }
        }
        ObjectiveBreakdown::new(gm, rho * fidelity, alpha * T::lit(0.5) * incoherence)
    }

    /// Softmax weights `Λ_ijᵇ / Σ_j Λ_ijᵇ` for one positive bag; degenerate
    /// instances get weight zero.
    fn bag_weights(&self, cache: &[PositiveCache<T>]) -> Vec<T> {
        let Weights { beta, b, .. } = self.w;
        let degenerate = T::lit(DEGENERATE_Q_SQ);
        let z: Vec<T> = cache
            .iter()
            .map(|c| {
                if c.q_sq < degenerate {
                    T::neg_infinity()
                } else {
                    -b * beta * c.r_sq / c.q_sq
                }
            })
            .collect();
        let lse = log_sum_exp(&z);
        if !lse.is_finite() {
            return vec![T::zero(); z.len()];
        }
        z.iter().map(|v| (*v - lse).exp()).collect()
    }

    /// Gradient of the objective with respect to target atom `t` (`0..T`).
    pub fn target_gradient(&self, t: usize) -> Vec<T> {
        assert!(t < self.dict.n_targets(), "target index out of range");
        let d = self.dict.dim();
        let Weights { beta, alpha, .. } = self.w;
        let two_beta = T::lit(2.0) * beta;
        let mut grad = vec![T::zero(); d];
        for (i, cache) in &self.positive {
            let weights = self.bag_weights(cache);
            for (j, (c, w)) in cache.iter().zip(weights).enumerate() {
                let at = self.codes[*i][j].a[t];
                if w == T::zero() || at == T::zero() {
                    continue;
                }
                linalg::axpy(-w * two_beta * at / c.q_sq, &c.r, &mut grad);
            }
        }
        if alpha != T::zero() {
            for (i, cache) in &self.negative {
                for (j, c) in cache.iter().enumerate() {
                    let at = self.codes[*i][j].a[t];
                    if at == T::zero() {
                        continue;
                    }
                    let x = self.ds.bags[*i].instances[j].as_slice();
                    linalg::axpy(alpha * c.target_proj * at, x, &mut grad);
                }
            }
        }
        grad
    }

    /// Gradient of the objective with respect to background atom `k` (`0..M`).
    pub fn background_gradient(&self, k: usize) -> Vec<T> {
        let n_targets = self.dict.n_targets();
        assert!(k < self.dict.n_backgrounds(), "background index out of range");
        let d = self.dict.dim();
        let Weights { beta, rho, .. } = self.w;
        let two = T::lit(2.0);
        let two_beta = two * beta;
        let mut grad = vec![T::zero(); d];
        for (i, cache) in &self.positive {
            let weights = self.bag_weights(cache);
            for (j, (c, w)) in cache.iter().zip(weights).enumerate() {
                if w == T::zero() {
                    continue;
                }
                let code = &self.codes[*i][j];
                let ak = code.a[n_targets + k];
                let pk = code.p[k];
                let q4 = c.q_sq * c.q_sq;
                if ak != T::zero() {
                    linalg::axpy(-w * two_beta * ak * c.q_sq / q4, &c.r, &mut grad);
                }
                if pk != T::zero() {
                    linalg::axpy(w * two_beta * pk * c.r_sq / q4, &c.q, &mut grad);
                }
            }
        }
        if rho != T::zero() {
            for (i, cache) in &self.negative {
                for (j, c) in cache.iter().enumerate() {
                    let pk = self.codes[*i][j].p[k];
                    if pk != T::zero() {
                        linalg::axpy(-rho * two * pk, &c.q, &mut grad);
                    }
                }
            }
        }
        grad
    }

    /// Gradient for atom `k` of `[D⁺ D⁻]`.
    pub fn atom_gradient(&self, k: usize) -> Vec<T> {
        let n_targets = self.dict.n_targets();
        if k < n_targets {
            self.target_gradient(k)
        } else {
            self.background_gradient(k - n_targets)
        }
    }

    /// Replaces atom `k` and updates every cached residual.
    pub fn commit_atom(&mut self, k: usize, new_atom: &[T]) {
        let n_targets = self.dict.n_targets();
        let delta = linalg::sub(new_atom, self.dict.atom(k));
        for (i, cache) in &mut self.positive {
            for (j, c) in cache.iter_mut().enumerate() {
                let code = &self.codes[*i][j];
                let ak = code.a[k];
                if ak != T::zero() {
                    linalg::axpy(-ak, &delta, &mut c.r);
                    c.r_sq = norm_sq(&c.r);
                }
                if k >= n_targets {
                    let pk = code.p[k - n_targets];
                    if pk != T::zero() {
                        linalg::axpy(-pk, &delta, &mut c.q);
                        c.q_sq = norm_sq(&c.q);
                    }
                }
            }
        }
        for (i, cache) in &mut self.negative {
            for (j, c) in cache.iter_mut().enumerate() {
                let code = &self.codes[*i][j];
                if k >= n_targets {
                    let pk = code.p[k - n_targets];
                    if pk != T::zero() {
                        linalg::axpy(-pk, &delta, &mut c.q);
                        c.q_sq = norm_sq(&c.q);
                    }
                } else {
                    let ak = code.a[k];
                    if ak != T::zero() {
                        let x = self.ds.bags[*i].instances[j].as_slice();
                        c.target_proj = c.target_proj + ak * dot(&delta, x);
                    }
                }
            }
        }
        self.dict.set_atom(k, new_atom);
    }

    /// Positions of positive-bag instances whose background residual is
    /// degenerate, as `(bag index, instance index)`.
    pub fn degenerate_instances(&self) -> Vec<(usize, usize)> {
        let degenerate = T::lit(DEGENERATE_Q_SQ);
        self.positive
            .iter()
            .flat_map(|(i, cache)| {
                cache
                    .iter()
                    .enumerate()
                    .filter(move |(_, c)| c.q_sq < degenerate)
                    .map(move |(j, _)| (*i, j))
            })
            .collect()
    }
}

/// `(D⁺ a⁺)ᵀ x`
fn target_projection<T: Real>(x: &[T], dict: &ConceptDictionary<T>, a_plus: &[T]) -> T {
    a_plus
        .iter()
        .enumerate()
        .filter(|(_, a)| **a != T::zero())
        .map(|(t, a)| *a * dot(dict.targets.col(t), x))
        .sum()
}

fn warn_degenerate<T: Real>(ev: &ObjectiveEvaluator<'_, T>) {
    for (i, j) in ev.degenerate_instances() {
        log::warn!(
            "bag `{}` instance {j}: background residual is degenerate; excluded from the generalized-mean term",
            ev.ds.bags[i].id
        );
    }
}

/// Objective value and its three terms for the given codes.
pub fn evaluate_objective<T: Real>(
    ds: &BagDataset<T>,
    dict: &ConceptDictionary<T>,
    hp: &HyperParams,
    codes: &CodeBook<T>,
) -> Result<ObjectiveBreakdown<T>> {
    let ev = ObjectiveEvaluator::new(ds, dict, hp, codes)?;
    warn_degenerate(&ev);
    Ok(ev.breakdown())
}

/// Gradient of the objective with respect to target atom `t` (`0..T`).
pub fn grad_target_atom<T: Real>(
    t: usize,
    ds: &BagDataset<T>,
    dict: &ConceptDictionary<T>,
    hp: &HyperParams,
    codes: &CodeBook<T>,
) -> Result<Vec<T>> {
    if t >= dict.n_targets() {
        return Err(Error::InvalidArgument(format!(
            "target index {t} out of range 0..{}",
            dict.n_targets()
        )));
    }
    Ok(ObjectiveEvaluator::new(ds, dict, hp, codes)?.target_gradient(t))
}

/// Gradient of the objective with respect to background atom `k` (`0..M`).
pub fn grad_background_atom<T: Real>(
    k: usize,
    ds: &BagDataset<T>,
    dict: &ConceptDictionary<T>,
    hp: &HyperParams,
    codes: &CodeBook<T>,
) -> Result<Vec<T>> {
    if k >= dict.n_backgrounds() {
        return Err(Error::InvalidArgument(format!(
            "background index {k} out of range 0..{}",
            dict.n_backgrounds()
        )));
    }
    Ok(ObjectiveEvaluator::new(ds, dict, hp, codes)?.background_gradient(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn toy_dict() -> ConceptDictionary<f64> {
        let t = Matrix::from_columns(3, &[vec![1.0, 0.0, 0.0]]);
        let b = Matrix::from_columns(3, &[vec![0.0, 1.0, 0.0]]);
        ConceptDictionary::new(t, b).unwrap()
    }

    #[test]
    fn hybrid_is_one_when_residual_vanishes() {
        let d = toy_dict();
        let x = [2.0, 1.0, 0.0];
        let codes = SparseCodes::new(&x, &d, vec![2.0, 1.0], vec![1.0]);
        assert_eq!(hybrid_statistic(&x, &d, &codes, 5.0).unwrap(), 1.0);
    }

    #[test]
    fn hybrid_equal_residuals() {
        let d = toy_dict();
        let x = [0.0, 1.0, 3.0];
        let codes = SparseCodes::new(&x, &d, vec![0.0, 1.0], vec![1.0]);
        let v = hybrid_statistic(&x, &d, &codes, 5.0).unwrap();
        assert!((v - (-5.0f64).exp()).abs() < 1e-15);
        assert!((v - 6.7379e-3).abs() < 1e-7);
    }

    #[test]
    fn hybrid_degenerate_background_errors() {
        let d = toy_dict();
        let x = [0.0, 1.0, 0.0];
        let codes = SparseCodes::new(&x, &d, vec![0.0, 1.0], vec![1.0]);
        assert!(matches!(
            hybrid_statistic(&x, &d, &codes, 5.0),
            Err(Error::DegenerateBackground { .. })
        ));
    }

    #[test]
    fn generalized_mean_examples() {
        assert!((generalized_mean(&[0.3f64, 0.3, 0.3], 7.0).unwrap() - 0.3).abs() < 1e-15);
        assert!((generalized_mean(&[0.2f64, 0.8], 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((generalized_mean(&[0.2f64, 0.8], 100.0).unwrap() - 0.79447).abs() < 1e-5);
        assert!(generalized_mean(&[0.2, 0.8], 0.0).is_err());
        assert!(generalized_mean::<f64>(&[], 1.0).is_err());
    }

    #[test]
    fn log_sum_exp_is_stable() {
        let v = log_sum_exp(&[-1000.0, -1000.0]);
        assert!((v - (-1000.0 + 2f64.ln())).abs() < 1e-12);
    }
}
