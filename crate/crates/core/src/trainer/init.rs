//! Dictionary initialization: random-subset means for target concepts, vertex
//! component analysis (or k-means) on negative instances for backgrounds.

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, dot, norm_sq, symmetric_eigen, Matrix};
use crate::model::BagDataset;
use crate::scalar::Real;

/// Each target column is the normalized mean of an independent random subset
/// of `⌈N⁺/2⌉` positive-bag instances drawn without replacement.
pub fn init_targets<T: Real, R: Rng + ?Sized>(
    ds: &BagDataset<T>,
    n_targets: usize,
    rng: &mut R,
) -> Result<Matrix<T>> {
    let subset = ds.n_positive_instances().div_ceil(2);
    init_targets_with_subset_size(ds, n_targets, subset, rng)
}

/// [`init_targets`] with an explicit subset size (clamped to `1..=N⁺`).
pub fn init_targets_with_subset_size<T: Real, R: Rng + ?Sized>(
    ds: &BagDataset<T>,
    n_targets: usize,
    subset_size: usize,
    rng: &mut R,
) -> Result<Matrix<T>> {
    if n_targets == 0 {
        return Err(Error::Initialization("need at least one target concept".into()));
    }
    let positives: Vec<&[T]> = ds.positive_instances().map(|i| i.as_slice()).collect();
    if positives.is_empty() {
        return Err(Error::Initialization("no positive instances to initialize targets".into()));
    }
    let d = ds.dim();
    let subset = subset_size.clamp(1, positives.len());
    let mut out = Matrix::zeros(d, n_targets);
    for t in 0..n_targets {
        let mut mean = vec![T::zero(); d];
        for idx in index::sample(rng, positives.len(), subset) {
            linalg::axpy(T::one(), positives[idx], &mut mean);
        }
        let col = linalg::normalized(&mean)
            .ok_or_else(|| Error::Initialization("positive instances average to zero".into()))?;
        out.set_col(t, &col);
    }
    Ok(out)
}

/// Vertex component analysis on the columns of `data` (d × N); returns the
/// selected vertices (projected onto the signal subspace) with unit norm.
pub fn vca<T: Real, R: Rng + ?Sized>(data: &Matrix<T>, n_endmembers: usize, rng: &mut R) -> Result<Matrix<T>> {
    let (d, n) = (data.rows(), data.cols());
    let p = n_endmembers;
    if p == 0 {
        return Err(Error::Initialization("need at least one background concept".into()));
    }
    if n < p {
        return Err(Error::Initialization(format!(
            "{n} negative instances are fewer than the {p} requested background concepts"
        )));
    }
    if p > d {
        return Err(Error::Initialization(format!(
            "cannot extract {p} endmembers from {d}-dimensional data"
        )));
    }
    let nf = T::from_usize_lossy(n);

    let mut mean = vec![T::zero(); d];
    for c in data.columns() {
        linalg::axpy(T::one() / nf, c, &mut mean);
    }

    // correlation (uncentered) subspace
    let corr = second_moment(data, None);
    let (_, corr_vecs) = symmetric_eigen(&corr);

    if p == 1 {
        let dir = corr_vecs.col(0);
        let k = argmax_abs(data.columns().map(|c| dot(dir, c)));
        let proj = project(&dir_matrix(&corr_vecs, 1), data.col(k));
        return unit_columns(d, &[proj]);
    }

    // SNR estimate from the centered projection
    let cov = second_moment(data, Some(&mean));
    let (_, cov_vecs) = symmetric_eigen(&cov);
    let cov_basis = dir_matrix(&cov_vecs, p);
    let power_total = data.columns().map(norm_sq).sum::<T>() / nf;
    let power_signal = data
        .columns()
        .map(|c| norm_sq(&cov_basis.tr_mul_vec(&linalg::sub(c, &mean))))
        .sum::<T>()
        / nf
        + norm_sq(&mean);
    let pf = T::from_usize_lossy(p);
    let noise = power_total - power_signal;
    let snr_db = if noise <= T::zero() {
        T::infinity()
    } else {
        T::lit(10.0) * ((power_signal - pf / T::from_usize_lossy(d) * power_total) / noise).log10()
    };
    let snr_threshold = T::lit(15.0) + T::lit(10.0) * pf.log10();

    // y: p × N projective coordinates; basis maps them back to data space
    let (y, reconstruct): (Matrix<T>, Box<dyn Fn(usize) -> Vec<T>>) = if snr_db > snr_threshold || snr_db.is_nan() {
        let basis = dir_matrix(&corr_vecs, p);
        let xp: Vec<Vec<T>> = data.columns().map(|c| basis.tr_mul_vec(c)).collect();
        let mut u = vec![T::zero(); p];
        for x in &xp {
            linalg::axpy(T::one() / nf, x, &mut u);
        }
        let mut y = Matrix::zeros(p, n);
        for (j, x) in xp.iter().enumerate() {
            let s = dot(x, &u);
            let scale = if s.abs() > T::min_positive_value() { T::one() / s } else { T::one() };
            let col: Vec<T> = x.iter().map(|v| *v * scale).collect();
            y.set_col(j, &col);
        }
        let data_ref = data.clone();
        (y, Box::new(move |k| basis.mul_vec(&basis.tr_mul_vec(data_ref.col(k)))))
    } else {
        let basis = dir_matrix(&cov_vecs, p - 1);
        let xs: Vec<Vec<T>> = data
            .columns()
            .map(|c| basis.tr_mul_vec(&linalg::sub(c, &mean)))
            .collect();
        let c_max = xs.iter().map(|x| norm_sq(x).sqrt()).fold(T::zero(), T::max);
        let mut y = Matrix::zeros(p, n);
        for (j, x) in xs.iter().enumerate() {
            let mut col = x.clone();
            col.push(c_max);
            y.set_col(j, &col);
        }
        let xs_ref = xs;
        (
            y,
            Box::new(move |k| {
                let mut v = basis.mul_vec(&xs_ref[k]);
                linalg::axpy(T::one(), &mean, &mut v);
                v
            }),
        )
    };

    let mut a = Matrix::zeros(p, p);
    a[(p - 1, 0)] = T::one();
    let mut chosen = Vec::with_capacity(p);
    for i in 0..p {
        let mut f = vec![T::zero(); p];
        // retry if the random direction falls in span(A)
        for _ in 0..16 {
            let w: Vec<T> = (0..p)
                .map(|_| T::lit(rng.sample::<f64, _>(StandardNormal)))
                .collect();
            f = linalg::project_out_columns(&a, &w);
            if norm_sq(&f) > T::epsilon() {
                break;
            }
        }
        let f = linalg::normalized(&f).unwrap_or(f);
        let k = argmax_abs(y.columns().map(|c| dot(&f, c)));
        a.set_col(i, y.col(k));
        chosen.push(k);
    }

    let cols: Vec<Vec<T>> = chosen.iter().map(|&k| reconstruct(k)).collect();
    unit_columns(d, &cols)
}

/// k-means (k-means++ seeding, Lloyd iterations) cluster centers with unit
/// norm.
pub fn kmeans_centers<T: Real, R: Rng + ?Sized>(
    data: &Matrix<T>,
    k: usize,
    max_iters: usize,
    rng: &mut R,
) -> Result<Matrix<T>> {
    let (d, n) = (data.rows(), data.cols());
    if k == 0 || n < k {
        return Err(Error::Initialization(format!(
            "cannot form {k} clusters from {n} instances"
        )));
    }
    let dist = |a: &[T], b: &[T]| a.iter().zip(b).map(|(x, y)| (*x - *y) * (*x - *y)).sum::<T>();

    let mut centers: Vec<Vec<T>> = vec![data.col(rng.random_range(0..n)).to_vec()];
    let mut best: Vec<T> = data.columns().map(|c| dist(c, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = best.iter().map(|v| v.to_f64_lossy()).sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (j, v) in best.iter().enumerate() {
                target -= v.to_f64_lossy();
                if target <= 0.0 {
                    pick = j;
                    break;
                }
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        let c = data.col(next).to_vec();
        for (j, b) in best.iter_mut().enumerate() {
            *b = b.min(dist(data.col(j), &c));
        }
        centers.push(c);
    }

    let mut assign = vec![usize::MAX; n];
    for _ in 0..max_iters {
        let mut changed = false;
        for (j, col) in data.columns().enumerate() {
            let mut bi = 0;
            let mut bd = T::infinity();
            for (ci, c) in centers.iter().enumerate() {
                let dd = dist(col, c);
                if dd < bd {
                    bd = dd;
                    bi = ci;
                }
            }
            if assign[j] != bi {
                assign[j] = bi;
                changed = true;
            }
        }
        let mut sums = vec![vec![T::zero(); d]; k];
        let mut counts = vec![0usize; k];
        for (j, col) in data.columns().enumerate() {
            linalg::axpy(T::one(), col, &mut sums[assign[j]]);
            counts[assign[j]] += 1;
        }
        for ci in 0..k {
            if counts[ci] > 0 {
                let inv = T::one() / T::from_usize_lossy(counts[ci]);
                centers[ci] = sums[ci].iter().map(|v| *v * inv).collect();
            }
        }
        if !changed {
            break;
        }
    }
    unit_columns(d, &centers)
}

/// Gathers the negative instances of a dataset as columns.
pub fn negative_matrix<T: Real>(ds: &BagDataset<T>) -> Matrix<T> {
    let cols: Vec<&[T]> = ds.negative_instances().map(|i| i.as_slice()).collect();
    Matrix::from_columns(ds.dim(), &cols)
}

fn second_moment<T: Real>(data: &Matrix<T>, center: Option<&[T]>) -> Matrix<T> {
    let d = data.rows();
    let nf = T::from_usize_lossy(data.cols());
    let mut m = Matrix::zeros(d, d);
    let mut buf = vec![T::zero(); d];
    for c in data.columns() {
        match center {
            Some(mu) => buf.iter_mut().zip(c.iter().zip(mu)).for_each(|(b, (x, m))| *b = *x - *m),
            None => buf.copy_from_slice(c),
        }
        for j in 0..d {
            let bj = buf[j];
            if bj == T::zero() {
                continue;
            }
            for i in j..d {
                m[(i, j)] = m[(i, j)] + buf[i] * bj;
            }
        }
    }
    for j in 0..d {
        for i in j..d {
            let v = m[(i, j)] / nf;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

fn dir_matrix<T: Real>(vecs: &Matrix<T>, k: usize) -> Matrix<T> {
    let cols: Vec<&[T]> = (0..k).map(|j| vecs.col(j)).collect();
    Matrix::from_columns(vecs.rows(), &cols)
}

fn project<T: Real>(basis: &Matrix<T>, x: &[T]) -> Vec<T> {
    basis.mul_vec(&basis.tr_mul_vec(x))
}

fn argmax_abs<T: Real>(values: impl Iterator<Item = T>) -> usize {
    let mut best = 0;
    let mut best_v = T::neg_infinity();
    for (j, v) in values.enumerate() {
        if v.abs() > best_v {
            best_v = v.abs();
            best = j;
        }
    }
    best
}

fn unit_columns<T: Real>(d: usize, cols: &[Vec<T>]) -> Result<Matrix<T>> {
    let unit: Option<Vec<Vec<T>>> = cols.iter().map(|c| linalg::normalized(c)).collect();
    let unit = unit.ok_or_else(|| Error::Initialization("initializer produced a zero column".into()))?;
    Ok(Matrix::from_columns(d, &unit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Bag, BagLabel, Instance};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ds_with(pos: Vec<Vec<f64>>, neg: Vec<Vec<f64>>) -> BagDataset<f64> {
        BagDataset::new(vec![
            Bag::new("p", BagLabel::Positive, pos.into_iter().map(Instance::new).collect()),
            Bag::new("n", BagLabel::Negative, neg.into_iter().map(Instance::new).collect()),
        ])
    }

    #[test]
    fn identical_positives_give_their_direction() {
        let v = vec![1.0, 2.0, 2.0];
        let ds = ds_with(vec![v.clone(); 5], vec![vec![1.0, 0.0, 0.0]]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = init_targets(&ds, 1, &mut rng).unwrap();
        for (a, b) in t.col(0).iter().zip([1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn full_subset_of_basis_vectors_is_their_mean() {
        let ds = ds_with(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]], vec![vec![1.0, 1.0, 1.0]]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = init_targets_with_subset_size(&ds, 1, 2, &mut rng).unwrap();
        let h = 0.5f64.sqrt();
        for (a, b) in t.col(0).iter().zip([h, h, 0.0]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn targets_are_deterministic_per_seed() {
        let pos: Vec<Vec<f64>> = (0..20).map(|i| vec![1.0 + i as f64, 2.0, (i % 3) as f64]).collect();
        let ds = ds_with(pos, vec![vec![1.0, 0.0, 0.0]]);
        let a = init_targets(&ds, 2, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = init_targets(&ds, 2, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert!(a.columns().all(|c| (linalg::norm(c) - 1.0).abs() < 1e-12));
    }

    #[test]
    fn no_positives_is_an_error() {
        let ds = BagDataset::new(vec![Bag::new(
            "n",
            BagLabel::Negative,
            vec![Instance::new(vec![1.0, 0.0])],
        )]);
        assert!(init_targets(&ds, 1, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn vca_rejects_too_few_instances() {
        let m = Matrix::from_columns(3, &[vec![1.0, 0.0, 0.0]]);
        assert!(vca(&m, 2, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn kmeans_separates_clusters() {
        let mut cols = Vec::new();
        for i in 0..10 {
            let e = 1e-3 * i as f64;
            cols.push(vec![1.0 + e, 0.0, 0.0]);
            cols.push(vec![0.0, 0.0, 1.0 + e]);
        }
        let m = Matrix::from_columns(3, &cols);
        let c = kmeans_centers(&m, 2, 50, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let mut firsts: Vec<f64> = c.columns().map(|c| c[0]).collect();
        firsts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(firsts[0] < 1e-9 && (firsts[1] - 1.0).abs() < 1e-9);
    }
}
