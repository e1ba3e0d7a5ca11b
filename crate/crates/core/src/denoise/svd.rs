use nalgebra::DMatrix;

use crate::error::{invalid_param, Error, Result};
use crate::tensor::Tensor;

/// Thin SVD `X = U·diag(S)·Vᵀ` with singular values in nonincreasing order.
///
/// Signs are fixed so that the largest-magnitude entry of every column of
/// `V` is nonnegative.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    /// `rows × q`, `q = min(rows, cols)`.
    pub u: DMatrix<f64>,
    pub singular: Vec<f64>,
    /// `cols × q`.
    pub v: DMatrix<f64>,
}

impl SvdFactors {
    pub fn rank_k(&self, k: usize) -> DMatrix<f64> {
        let mut us = self.u.columns(0, k).into_owned();
        for (j, mut col) in us.column_iter_mut().enumerate() {
            col *= self.singular[j];
        }
        us * self.v.columns(0, k).transpose()
    }
}

pub(crate) fn to_matrix(x: &Tensor) -> Result<DMatrix<f64>> {
    x.expect_ndim(2, "matrix operation")?;
    let (r, c) = (x.dims()[0], x.dims()[1]);
    Ok(DMatrix::from_row_slice(r, c, x.values()))
}

pub(crate) fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

pub fn svd_factors(x: &DMatrix<f64>) -> Result<SvdFactors> {
    let svd = x.clone().svd(true, true);
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return Err(Error::Degenerate("SVD did not produce singular vectors".into()));
    };
    let q = svd.singular_values.len();
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut su = DMatrix::zeros(u.nrows(), q);
    let mut sv = DMatrix::zeros(v_t.ncols(), q);
    let mut singular = Vec::with_capacity(q);
    for (dst, &src) in order.iter().enumerate() {
        let mut vcol = v_t.row(src).transpose();
        let mut ucol = u.column(src).into_owned();
        let pivot = vcol.iter().copied().fold(0.0f64, |acc, x| {
            if x.abs() > acc.abs() {
                x
            } else {
                acc
            }
        });
        if pivot < 0.0 {
            vcol.neg_mut();
            ucol.neg_mut();
        }
        su.set_column(dst, &ucol);
        sv.set_column(dst, &vcol);
        singular.push(svd.singular_values[src]);
    }
    Ok(SvdFactors {
        u: su,
        singular,
        v: sv,
    })
}

/// Best rank-`rank` approximation of a matrix (rows × cols tensor).
pub fn truncated_svd(x: &Tensor, rank: usize) -> Result<Tensor> {
    let m = to_matrix(x)?;
    let q = m.nrows().min(m.ncols());
    if rank == 0 || rank > q {
        return Err(invalid_param!("rank must lie in 1..={q}, got {rank}"));
    }
    let f = svd_factors(&m)?;
    x.with_values(row_major(&f.rank_k(rank)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::make_rng;

    fn random(r: usize, c: usize, seed: u64) -> Tensor {
        let mut rng = make_rng(seed);
        Tensor::new(vec![r, c], (0..r * c).map(|_| rng.standard_normal()).collect()).unwrap()
    }

    fn frob(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
    }

    #[test]
    fn full_rank_reconstructs() {
        let x = random(10, 50, 1);
        let out = truncated_svd(&x, 10).unwrap();
        let norm = frob(x.values(), &vec![0.0; 500]);
        assert!(frob(x.values(), out.values()) / norm < 1e-8);
    }

    #[test]
    fn factors_are_sorted_and_orthonormal() {
        let x = random(7, 12, 2);
        let f = svd_factors(&to_matrix(&x).unwrap()).unwrap();
        assert!(f.singular.windows(2).all(|w| w[0] >= w[1]));
        let vtv = f.v.transpose() * &f.v;
        assert!((vtv - DMatrix::identity(7, 7)).norm() < 1e-10);
        for col in f.v.column_iter() {
            let big = col.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
            assert!(big >= 0.0);
        }
    }

    #[test]
    fn error_nonincreasing_and_matches_discarded_energy() {
        let x = random(10, 50, 3);
        let f = svd_factors(&to_matrix(&x).unwrap()).unwrap();
        let mut last = f64::INFINITY;
        for k in 1..=10 {
            let out = truncated_svd(&x, k).unwrap();
            let e = frob(x.values(), out.values());
            assert!(e <= last + 1e-12);
            last = e;
            let tail: f64 = f.singular[k..].iter().map(|s| s * s).sum::<f64>().sqrt();
            assert!((e - tail).abs() < 1e-8, "rank {k}: {e} vs {tail}");
        }
    }

    #[test]
    fn rank_one_outer_product_recovered() {
        let u = [1.0, -2.0, 0.5, 3.0];
        let v = [0.2, 0.0, 1.5, -1.0, 2.0];
        let vals: Vec<f64> = u.iter().flat_map(|a| v.iter().map(move |b| a * b)).collect();
        let x = Tensor::new(vec![4, 5], vals).unwrap();
        let out = truncated_svd(&x, 1).unwrap();
        let norm = frob(x.values(), &[0.0; 20]);
        assert!(frob(x.values(), out.values()) / norm < 1e-8);
    }

    #[test]
    fn rank_bounds() {
        let x = random(3, 4, 4);
        assert!(truncated_svd(&x, 0).is_err());
        assert!(truncated_svd(&x, 4).is_err());
        let s = Tensor::from_vec(vec![1.0, 2.0]).unwrap();
        assert!(matches!(truncated_svd(&s, 1), Err(Error::Shape(_))));
    }
}
