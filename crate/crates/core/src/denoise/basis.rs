use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

const ORTHONORMAL_TOL: f64 = 1e-10;

/// Orthonormal columns spanning a subspace of length-`T` series.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    columns: DMatrix<f64>,
}

impl Basis {
    pub fn new(columns: DMatrix<f64>) -> Result<Self> {
        let k = columns.ncols();
        if k == 0 || k > columns.nrows() {
            return Err(Error::Shape(format!(
                "basis needs 1..={} columns, got {k}",
                columns.nrows()
            )));
        }
        let gram = columns.transpose() * &columns;
        let dev = (gram - DMatrix::identity(k, k)).abs().max();
        if dev > ORTHONORMAL_TOL {
            return Err(Error::InvalidInput(format!(
                "basis columns are not orthonormal (max deviation {dev:e})"
            )));
        }
        Ok(Self { columns })
    }

    pub fn columns(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.nrows() == 0
    }

    pub fn k(&self) -> usize {
        self.columns.ncols()
    }
}

/// Orthogonal projection `B(Bᵀx)` of a series onto the basis span.
pub fn basis_restrict(series: &Tensor, basis: &Basis) -> Result<Tensor> {
    series.expect_ndim(1, "basis restriction")?;
    if series.len() != basis.len() {
        return Err(Error::Shape(format!(
            "series of length {} against a basis of length {}",
            series.len(),
            basis.len()
        )));
    }
    let x = DVector::from_column_slice(series.values());
    let coef = basis.columns.transpose() * x;
    let y = &basis.columns * coef;
    series.with_values(y.as_slice().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis() -> Basis {
        // two orthonormal columns in R^4
        let h = 0.5;
        Basis::new(DMatrix::from_column_slice(
            4,
            2,
            &[h, h, h, h, h, -h, h, -h],
        ))
        .unwrap()
    }

    #[test]
    fn projection_properties() {
        let b = basis();
        let inside = Tensor::from_vec(vec![2.0, 0.0, 2.0, 0.0]).unwrap();
        let p = basis_restrict(&inside, &b).unwrap();
        for (a, c) in p.values().iter().zip(inside.values()) {
            assert!((a - c).abs() < 1e-10);
        }
        let x = Tensor::from_vec(vec![1.0, 4.0, -2.0, 0.5]).unwrap();
        let once = basis_restrict(&x, &b).unwrap();
        let twice = basis_restrict(&once, &b).unwrap();
        for (a, c) in once.values().iter().zip(twice.values()) {
            assert!((a - c).abs() < 1e-10);
        }
        let resid: Vec<f64> = x.values().iter().zip(once.values()).map(|(a, c)| a - c).collect();
        for col in b.columns().column_iter() {
            let dot: f64 = col.iter().zip(&resid).map(|(a, c)| a * c).sum();
            assert!(dot.abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        let b = basis();
        assert!(basis_restrict(&Tensor::from_vec(vec![1.0; 3]).unwrap(), &b).is_err());
        assert!(Basis::new(DMatrix::from_column_slice(2, 1, &[1.0, 1.0])).is_err());
    }
}
