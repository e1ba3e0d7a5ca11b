//! Dense row-major tensor with an optional boolean mask.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape-tagged array of `f64` values, 1 to 3 axes, last axis fastest.
///
/// The mask, when present, selects the points that metrics are computed over.
/// Denoisers carry it through untouched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    dims: Vec<usize>,
    values: Vec<f64>,
    mask: Option<Vec<bool>>,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if dims.is_empty() || dims.len() > 3 {
            return Err(Error::Shape(format!(
                "tensor must have 1 to 3 axes, got {}",
                dims.len()
            )));
        }
        if dims.contains(&0) {
            return Err(Error::Shape(format!("zero-length axis in {dims:?}")));
        }
        let len: usize = dims.iter().product();
        if len != values.len() {
            return Err(Error::Shape(format!(
                "dims {dims:?} need {len} values, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value {} at flat index {i}",
                values[i]
            )));
        }
        Ok(Self {
            dims,
            values,
            mask: None,
        })
    }

    pub fn zeros(dims: Vec<usize>) -> Result<Self> {
        let len = dims.iter().product();
        Self::new(dims, vec![0.0; len])
    }

    pub fn from_vec(values: Vec<f64>) -> Result<Self> {
        Self::new(vec![values.len()], values)
    }

    pub fn with_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.values.len() {
            return Err(Error::Shape(format!(
                "mask length {} does not match {} values",
                mask.len(),
                self.values.len()
            )));
        }
        self.mask = Some(mask);
        Ok(self)
    }

    pub fn without_mask(mut self) -> Self {
        self.mask = None;
        self
    }

    /// Same dims and mask as `self`, new values. Rejects non-finite output.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        let mut out = Self::new(self.dims.clone(), values)?;
        out.mask = self.mask.clone();
        Ok(out)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    /// Flat indices of the points selected by the mask (all points when unmasked).
    pub fn selected_indices(&self) -> Vec<usize> {
        match &self.mask {
            Some(m) => m
                .iter()
                .enumerate()
                .filter_map(|(i, &keep)| keep.then_some(i))
                .collect(),
            None => (0..self.values.len()).collect(),
        }
    }

    /// Row-major strides, in elements.
    pub fn strides(&self) -> Vec<usize> {
        strides_of(&self.dims)
    }

    pub fn same_shape(&self, other: &Tensor) -> bool {
        self.dims == other.dims
    }

    pub(crate) fn expect_ndim(&self, n: usize, what: &str) -> Result<()> {
        if self.dims.len() != n {
            return Err(Error::Shape(format!(
                "{what} expects a {n}-D tensor, got dims {:?}",
                self.dims
            )));
        }
        Ok(())
    }
}

pub(crate) fn strides_of(dims: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; dims.len()];
    for ax in (0..dims.len().saturating_sub(1)).rev() {
        strides[ax] = strides[ax + 1] * dims[ax + 1];
    }
    strides
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_length_mismatch_and_nan() {
        assert!(matches!(
            Tensor::new(vec![2, 3], vec![0.0; 5]),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            Tensor::new(vec![2], vec![0.0, f64::NAN]),
            Err(Error::InvalidInput(_))
        ));
        assert!(Tensor::new(vec![1, 2, 3, 4], vec![0.0; 24]).is_err());
    }

    #[test]
    fn mask_must_match() {
        let t = Tensor::zeros(vec![4]).unwrap();
        assert!(t.clone().with_mask(vec![true; 3]).is_err());
        let t = t.with_mask(vec![true, false, true, false]).unwrap();
        assert_eq!(t.selected_indices(), vec![0, 2]);
    }

    #[test]
    fn strides_are_row_major() {
        assert_eq!(strides_of(&[4, 5, 6]), vec![30, 6, 1]);
        assert_eq!(strides_of(&[7]), vec![1]);
    }
}
