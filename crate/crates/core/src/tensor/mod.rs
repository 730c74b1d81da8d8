//! Minimal reverse-mode automatic differentiation over dense f32 tensors.
//!
//! The engine records an eager tape: every operation computes its output
//! immediately and appends a node describing how to propagate gradients.
//! Parameters live outside the tape in a [`ParamSet`]; a [`Graph`] borrows
//! the set read-only, so forward passes can run concurrently across workers
//! while optimizer updates are serialized by the caller.

mod checkpoint;
mod graph;
mod optim;
mod param;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use graph::{Graph, LossMode, NodeId};
pub use optim::{Optimizer, OptimizerKind};
pub use param::{GradBuffer, Param, ParamId, ParamSet};

use crate::error::{Error, Result};

/// Dense row-major f32 tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
    requires_grad: bool,
    grad: Option<Vec<f32>>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::shape(
                "tensor_new",
                format!("shape {:?} wants {} elements, got {}", shape, n, data.len()),
            ));
        }
        Ok(Tensor {
            shape,
            data,
            requires_grad: false,
            grad: None,
        })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n: usize = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; n],
            requires_grad: false,
            grad: None,
        }
    }

    pub fn scalar(v: f32) -> Self {
        Tensor {
            shape: vec![1],
            data: vec![v],
            requires_grad: false,
            grad: None,
        }
    }

    pub fn from_vec(data: Vec<f32>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
            requires_grad: false,
            grad: None,
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn requires_grad(&self) -> bool {
        self.requires_grad
    }

    /// Marks the tensor as a gradient target and allocates its grad slot.
    pub fn with_grad(mut self) -> Self {
        self.requires_grad = true;
        if self.grad.is_none() {
            self.grad = Some(vec![0.0; self.data.len()]);
        }
        self
    }

    pub fn grad(&self) -> Option<&[f32]> {
        self.grad.as_deref()
    }

    pub fn grad_mut(&mut self) -> Option<&mut [f32]> {
        self.grad.as_deref_mut()
    }

    pub fn zero_grad(&mut self) {
        if let Some(g) = self.grad.as_mut() {
            g.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// FNV-1a over the raw little-endian bit patterns of a float slice.
/// Used to assert that parameter storage is untouched by observers.
pub fn bits_checksum(data: &[f32]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for v in data {
        for b in v.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_shape_product_must_match_data() {
        assert!(Tensor::new(vec![2, 3], vec![0.0; 6]).is_ok());
        assert!(Tensor::new(vec![2, 3], vec![0.0; 5]).is_err());
    }

    #[test]
    fn checksum_sensitive_to_single_bit() {
        let a = bits_checksum(&[1.0, 2.0, 3.0]);
        let b = bits_checksum(&[1.0, 2.0000002, 3.0]);
        assert_ne!(a, b);
        assert_eq!(a, bits_checksum(&[1.0, 2.0, 3.0]));
    }
}
