//! Small dense linear algebra kernel: column-major matrices, Cholesky,
//! symmetric eigendecomposition and power iteration.
//!
//! Dimensions in this crate are modest (hundreds of bands, tens of atoms), so
//! everything here is a straightforward dense implementation.

use crate::scalar::Real;

/// Dense column-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds a matrix from column-major storage.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "column-major buffer has wrong length");
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major storage.
    pub fn from_row_major(rows: usize, cols: usize, data: &[T]) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major buffer has wrong length");
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = data[i * cols + j];
            }
        }
        m
    }

    /// Builds a matrix whose columns are the given vectors. All columns must
    /// share a length; `rows` is needed when `columns` is empty.
    pub fn from_columns<C: AsRef<[T]>>(rows: usize, columns: &[C]) -> Self {
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            let c = c.as_ref();
            assert_eq!(c.len(), rows, "column length mismatch");
            data.extend_from_slice(c);
        }
        Self {
            rows,
            cols: columns.len(),
            data,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn set_col(&mut self, j: usize, v: &[T]) {
        self.col_mut(j).copy_from_slice(v);
    }

    pub fn columns(&self) -> impl Iterator<Item = &[T]> {
        (0..self.cols).map(move |j| self.col(j))
    }

    pub fn as_col_major(&self) -> &[T] {
        &self.data
    }

    pub fn to_row_major(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.data.len());
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.push(self[(i, j)]);
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `self * v`.
    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols);
        let mut out = vec![T::zero(); self.rows];
        for (j, &vj) in v.iter().enumerate() {
            if vj != T::zero() {
                axpy(vj, self.col(j), &mut out);
            }
        }
        out
    }

    /// `selfᵀ * v`.
    pub fn tr_mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.rows);
        self.columns().map(|c| dot(c, v)).collect()
    }

    /// `self * other`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let prod = self.mul_vec(other.col(j));
            out.set_col(j, &prod);
        }
        out
    }

    /// Gram matrix `selfᵀ * self`.
    pub fn gram(&self) -> Self {
        let n = self.cols;
        let mut g = Self::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = dot(self.col(i), self.col(j));
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    /// Horizontal concatenation `[self other]`.
    pub fn hcat(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows);
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Self {
            rows: self.rows,
            cols: self.cols + other.cols,
            data,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == T::zero())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn map<U: Real>(&self, f: impl Fn(T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| f(*v)).collect(),
        }
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[j * self.rows + i]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[j * self.rows + i]
    }
}

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

#[inline]
pub fn norm_sq<T: Real>(a: &[T]) -> T {
    dot(a, a)
}

#[inline]
pub fn norm<T: Real>(a: &[T]) -> T {
    norm_sq(a).sqrt()
}

/// `y += alpha * x`.
#[inline]
pub fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * *xi;
    }
}

pub fn sub<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(x, y)| *x - *y).collect()
}

/// Scales `v` to unit Euclidean norm. Returns `None` for a zero vector.
pub fn normalized<T: Real>(v: &[T]) -> Option<Vec<T>> {
    let n = norm(v);
    if n == T::zero() || !n.is_finite() {
        return None;
    }
    Some(v.iter().map(|x| *x / n).collect())
}

/// Largest eigenvalue of a symmetric positive semi-definite matrix by power
/// iteration on the Rayleigh quotient.
pub fn power_iteration_max_eig<T: Real>(a: &Matrix<T>, tol: T, max_iters: usize) -> T {
    let n = a.rows();
    assert_eq!(n, a.cols());
    if n == 0 {
        return T::zero();
    }
    // deterministic start vector with no special symmetry
    let start: Vec<T> = (0..n)
        .map(|i| T::one() + T::lit(0.1) * T::from_usize_lossy(i % 7))
        .collect();
    let mut v = normalized(&start).expect("nonzero start vector");
    let mut lambda = dot(&v, &a.mul_vec(&v));
    for _ in 0..max_iters {
        let w = a.mul_vec(&v);
        let Some(next) = normalized(&w) else {
            return T::zero();
        };
        let next_lambda = dot(&next, &a.mul_vec(&next));
        v = next;
        let done = (next_lambda - lambda).abs() <= tol * next_lambda.abs().max(T::min_positive_value());
        lambda = next_lambda;
        if done {
            break;
        }
    }
    lambda
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky<T> {
    l: Matrix<T>,
}

impl<T: Real> Cholesky<T> {
    /// Returns `None` when the matrix is not numerically positive definite.
    pub fn new(a: &Matrix<T>) -> Option<Self> {
        let n = a.rows();
        assert_eq!(n, a.cols());
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut diag = a[(j, j)];
            for k in 0..j {
                diag = diag - l[(j, k)] * l[(j, k)];
            }
            if diag <= T::zero() || !diag.is_finite() {
                return None;
            }
            let ljj = diag.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s = s - l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Some(Self { l })
    }

    pub fn factor(&self) -> &Matrix<T> {
        &self.l
    }

    /// Solves `L y = b`.
    pub fn solve_lower(&self, b: &[T]) -> Vec<T> {
        let n = self.l.rows();
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s = s - self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.l.rows();
        let mut x = self.solve_lower(b);
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s = s - self.l[(k, i)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
        x
    }

    pub fn inverse(&self) -> Matrix<T> {
        let n = self.l.rows();
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = T::zero());
            e[j] = T::one();
            let x = self.solve(&e);
            inv.set_col(j, &x);
        }
        // symmetrize round-off
        for i in 0..n {
            for j in (i + 1)..n {
                let m = (inv[(i, j)] + inv[(j, i)]) * T::lit(0.5);
                inv[(i, j)] = m;
                inv[(j, i)] = m;
            }
        }
        inv
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues sorted in descending order together with the matching
/// unit eigenvectors as columns.
pub fn symmetric_eigen<T: Real>(a: &Matrix<T>) -> (Vec<T>, Matrix<T>) {
    let n = a.rows();
    assert_eq!(n, a.cols());
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    let eps = T::epsilon();

    for _sweep in 0..100 {
        let mut off = T::zero();
        let mut total = T::zero();
        for j in 0..n {
            for i in 0..n {
                let x = m[(i, j)] * m[(i, j)];
                total = total + x;
                if i != j {
                    off = off + x;
                }
            }
        }
        if off <= eps * eps * total || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                // rotate columns p, q
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                // rotate rows p, q
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[(j, j)]
            .partial_cmp(&m[(i, i)])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_col(dst, v.col(src));
    }
    (values, vectors)
}

/// Moore-Penrose style projector onto the orthogonal complement of the
/// column space of `a`, applied to `w`: returns `w - A (AᵀA)⁺ Aᵀ w`.
///
/// Implemented by modified Gram-Schmidt over the columns of `a`; columns that
/// are numerically dependent on earlier ones are skipped.
pub fn project_out_columns<T: Real>(a: &Matrix<T>, w: &[T]) -> Vec<T> {
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(a.cols());
    let tol = T::lit(1e3) * T::epsilon();
    for c in a.columns() {
        let scale = norm(c);
        if scale == T::zero() {
            continue;
        }
        let mut u = c.to_vec();
        for b in &basis {
            let proj = dot(b, &u);
            axpy(-proj, b, &mut u);
        }
        let n = norm(&u);
        if n > tol * scale {
            basis.push(u.iter().map(|x| *x / n).collect());
        }
    }
    let mut out = w.to_vec();
    for b in &basis {
        let proj = dot(b, &out);
        axpy(-proj, b, &mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = Matrix::<f64>::from_row_major(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let ch = Cholesky::new(&a).unwrap();
        let x = ch.solve(&[1.0, 2.0, 3.0]);
        let back = a.mul_vec(&x);
        for (b, e) in back.iter().zip([1.0, 2.0, 3.0]) {
            assert!((b - e).abs() < 1e-12);
        }
        let inv = ch.inverse();
        let id = a.mul(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Matrix::from_row_major(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(Cholesky::new(&a).is_none());
    }

    #[test]
    fn jacobi_recovers_diagonal() {
        let a = Matrix::<f64>::from_row_major(3, 3, &[2.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 1.0]);
        let (vals, vecs) = symmetric_eigen(&a);
        assert_eq!(vals, vec![5.0, 2.0, 1.0]);
        assert!((vecs[(1, 0)].abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_reconstructs_matrix() {
        let a = Matrix::<f64>::from_row_major(
            4,
            4,
            &[
                4.0, 1.0, -2.0, 0.5, 1.0, 3.0, 0.0, 0.1, -2.0, 0.0, 5.0, 0.3, 0.5, 0.1, 0.3, 1.0,
            ],
        );
        let (vals, vecs) = symmetric_eigen(&a);
        for k in 0..4 {
            let av = a.mul_vec(vecs.col(k));
            for i in 0..4 {
                assert!((av[i] - vals[k] * vecs[(i, k)]).abs() < 1e-10);
            }
        }
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn power_iteration_diag() {
        let a = Matrix::<f64>::from_row_major(2, 2, &[4.0, 0.0, 0.0, 1.0]);
        let l = power_iteration_max_eig(&a, 1e-12, 1000);
        assert!((l - 4.0).abs() < 1e-10);
    }

    #[test]
    fn projection_removes_span() {
        let a = Matrix::from_columns(3, &[vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0]]);
        let out = project_out_columns(&a, &[3.0, 4.0, 5.0]);
        assert_eq!(out, vec![0.0, 4.0, 5.0]);
    }

    #[test]
    fn row_major_round_trip() {
        let m = Matrix::from_row_major(2, 3, &[1.0f32, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(m[(0, 2)], 3.0);
        assert_eq!(m.to_row_major(), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(m.transpose()[(2, 1)], 6.0);
    }
}
