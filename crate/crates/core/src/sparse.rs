//! Lasso sparse coding by iterative shrinkage-thresholding (ISTA).
//!
//! Each iteration takes a gradient step on `½‖x − D a‖²` followed by
//! soft-thresholding. Iterations run in coefficient space using the Gram
//! matrix `DᵀD` and the correlation `Dᵀx`, which is algebraically identical to
//! `a + δ Dᵀ(x − D a)` and much cheaper when `d ≫ T + M`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::scalar::Real;

const POWER_ITER_TOL: f64 = 1e-10;
const POWER_ITER_MAX: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IstaConfig {
    pub max_iters: usize,
    /// Stop once the largest absolute coefficient change drops below this.
    pub tolerance: f64,
    /// Fixed step length; `None` uses `1 / Eig_max(DᵀD)`.
    pub step_override: Option<f64>,
}

impl Default for IstaConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tolerance: 1e-6,
            step_override: None,
        }
    }
}

/// `sign(v) · max(|v| − λ, 0)` elementwise.
pub fn soft_threshold<T: Real>(v: &[T], lambda: T) -> Vec<T> {
    v.iter().map(|&x| shrink(x, lambda)).collect()
}

#[inline]
fn shrink<T: Real>(x: T, lambda: T) -> T {
    let m = x.abs() - lambda;
    if m > T::zero() {
        x.signum() * m
    } else {
        T::zero()
    }
}

/// Dot product with four independent accumulators.
#[inline]
fn dot4<T: Real>(u: &[T], v: &[T]) -> T {
    let mut acc = [T::zero(); 4];
    let (uc, vc) = (u.chunks_exact(4), v.chunks_exact(4));
    let tail = uc
        .remainder()
        .iter()
        .zip(vc.remainder())
        .fold(T::zero(), |s, (&x, &y)| s + x * y);
    for (x, y) in uc.zip(vc) {
        for k in 0..4 {
            acc[k] = acc[k] + x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `1 / Eig_max(DᵀD)`, the largest step for which ISTA is monotone.
pub fn ista_step_length<T: Real>(d: &Matrix<T>) -> Result<T> {
    step_from_gram(&d.gram())
}

fn step_from_gram<T: Real>(gram: &Matrix<T>) -> Result<T> {
    let eig = linalg::power_iteration_max_eig(gram, T::lit(POWER_ITER_TOL), POWER_ITER_MAX);
    if !(eig > T::zero()) || !eig.is_finite() {
        return Err(Error::ZeroDictionary);
    }
    Ok(T::one() / eig)
}

/// `½‖x − D a‖² + λ‖a‖₁`.
pub fn lasso_objective<T: Real>(x: &[T], d: &Matrix<T>, a: &[T], lambda: T) -> T {
    let recon = d.mul_vec(a);
    let half = T::lit(0.5);
    let fit = x
        .iter()
        .zip(&recon)
        .map(|(xi, ri)| (*xi - *ri) * (*xi - *ri))
        .sum::<T>();
    half * fit + lambda * a.iter().map(|v| v.abs()).sum::<T>()
}

/// Outcome of one lasso solve.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoSolution<T> {
    pub code: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
}

/// ISTA solver bound to one dictionary; reusable across many instances.
#[derive(Debug, Clone)]
pub struct LassoSolver<T> {
    dict: Matrix<T>,
    gram: Matrix<T>,
    step: T,
    cfg: IstaConfig,
}

impl<T: Real> LassoSolver<T> {
    pub fn new(dict: Matrix<T>, cfg: IstaConfig) -> Result<Self> {
        if dict.cols() == 0 || dict.is_zero() {
            return Err(Error::ZeroDictionary);
        }
        if cfg.max_iters == 0 {
            return Err(Error::InvalidArgument("ISTA max_iters must be at least 1".into()));
        }
        let gram = dict.gram();
        let step = match cfg.step_override {
            Some(s) if s > 0.0 => T::lit(s),
            Some(s) => {
                return Err(Error::InvalidArgument(format!(
                    "ISTA step override must be positive, got {s}"
                )))
            }
            None => step_from_gram(&gram)?,
        };
        Ok(Self {
            dict,
            gram,
            step,
            cfg,
        })
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn dictionary(&self) -> &Matrix<T> {
        &self.dict
    }

    /// `Dᵀx`.
    pub fn correlate(&self, x: &[T]) -> Vec<T> {
        self.dict.tr_mul_vec(x)
    }

    pub fn solve(&self, x: &[T], lambda: T) -> LassoSolution<T> {
        assert_eq!(x.len(), self.dict.rows(), "instance length must match dictionary rows");
        self.solve_correlated(&self.correlate(x), lambda, |_| {})
    }

    /// Runs ISTA given `Dᵀx`; `observe` sees every iterate after its
    /// thresholding step.
    pub fn solve_correlated(
        &self,
        dtx: &[T],
        lambda: T,
        mut observe: impl FnMut(&[T]),
    ) -> LassoSolution<T> {
        let m = self.gram.cols();
        assert_eq!(dtx.len(), m);
        let tol = T::lit(self.cfg.tolerance);
        let threshold = self.step * lambda;
        let mut a = vec![T::zero(); m];
        let mut next = vec![T::zero(); m];
        let mut iterations = 0;
        let mut converged = false;
        let g = self.gram.as_col_major();
        for _ in 0..self.cfg.max_iters {
            iterations += 1;
            // next = a + δ (Dᵀx − G a); G is symmetric so its columns serve as rows.
            let mut change = T::zero();
            for (i, row) in g.chunks_exact(m).enumerate() {
                let v = shrink(a[i] + self.step * (dtx[i] - dot4(row, &a)), threshold);
                let diff = (v - a[i]).abs();
                if diff > change {
                    change = diff;
                }
                next[i] = v;
            }
            std::mem::swap(&mut a, &mut next);
            observe(&a);
            if change < tol {
                converged = true;
                break;
            }
        }
        LassoSolution {
            code: a,
            iterations,
            converged,
        }
    }
}

/// Solves `argmin ½‖x − D a‖² + λ‖a‖₁` by ISTA from `a = 0`.
pub fn solve_lasso<T: Real>(x: &[T], d: &Matrix<T>, lambda: T, cfg: IstaConfig) -> Result<Vec<T>> {
    if x.len() != d.rows() {
        return Err(Error::DimensionMismatch {
            expected: d.rows(),
            found: x.len(),
        });
    }
    if x.iter().all(|v| *v == T::zero()) {
        return Ok(vec![T::zero(); d.cols()]);
    }
    let solver = LassoSolver::new(d.clone(), cfg)?;
    Ok(solver.solve(x, lambda).code)
}
