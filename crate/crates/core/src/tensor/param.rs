//! Named parameter storage shared by the three networks.

use super::{bits_checksum, Tensor};
use crate::error::{Error, Result};

pub type ParamId = usize;

#[derive(Debug, Clone)]
pub struct Param {
    pub name: String,
    pub tensor: Tensor,
}

/// Flat, named, shape-tagged parameter storage with gradient slots.
///
/// Reads are lock-free (`&ParamSet` is `Sync`); mutation happens only
/// through `&mut` access, which the training loop serializes.
#[derive(Debug, Clone, Default)]
pub struct ParamSet {
    params: Vec<Param>,
}

impl ParamSet {
    pub fn new() -> Self {
        ParamSet { params: Vec::new() }
    }

    pub fn add(&mut self, name: impl Into<String>, tensor: Tensor) -> ParamId {
        let id = self.params.len();
        self.params.push(Param {
            name: name.into(),
            tensor: tensor.with_grad(),
        });
        id
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Param {
        &self.params[id]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Param {
        &mut self.params[id]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param> {
        self.params.iter()
    }

    pub fn index_of(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name)
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.tensor.zero_grad();
        }
    }

    /// Adds an externally accumulated gradient buffer into the per-tensor
    /// grad slots.
    pub fn accumulate(&mut self, grads: &GradBuffer) -> Result<()> {
        if grads.grads.len() != self.params.len() {
            return Err(Error::contract(
                "accumulate",
                "gradient buffer does not match parameter set",
            ));
        }
        for (p, g) in self.params.iter_mut().zip(&grads.grads) {
            let slot = p
                .tensor
                .grad_mut()
                .ok_or_else(|| Error::contract("accumulate", "parameter missing grad slot"))?;
            for (s, v) in slot.iter_mut().zip(g) {
                *s += *v;
            }
        }
        Ok(())
    }

    pub fn total_values(&self) -> usize {
        self.params.iter().map(|p| p.tensor.numel()).sum()
    }

    /// Checksum over the raw bits of every value, in declaration order.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for p in &self.params {
            h ^= bits_checksum(p.tensor.data());
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }
}

/// Gradient accumulator aligned with a [`ParamSet`].
///
/// Workers compute per-transition gradients into private buffers which the
/// update step folds together in a fixed order, keeping results independent
/// of thread scheduling.
#[derive(Debug, Clone)]
pub struct GradBuffer {
    grads: Vec<Vec<f32>>,
}

impl GradBuffer {
    pub fn zeros_like(params: &ParamSet) -> Self {
        GradBuffer {
            grads: params
                .iter()
                .map(|p| vec![0.0; p.tensor.numel()])
                .collect(),
        }
    }

    pub fn clear(&mut self) {
        for g in &mut self.grads {
            g.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    pub fn slot(&self, id: ParamId) -> &[f32] {
        &self.grads[id]
    }

    pub(crate) fn slot_mut(&mut self, id: ParamId) -> &mut [f32] {
        &mut self.grads[id]
    }

    /// Folds `other` into `self` elementwise.
    pub fn add_from(&mut self, other: &GradBuffer) {
        for (a, b) in self.grads.iter_mut().zip(&other.grads) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += *y;
            }
        }
    }

    pub fn max_abs(&self) -> f32 {
        self.grads
            .iter()
            .flat_map(|g| g.iter())
            .fold(0.0f32, |m, v| m.max(v.abs()))
    }
}
