//! Parameter updates: adaptive-moment estimation by default, plain SGD
//! behind a switch for reproducibility studies.

use super::ParamSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    Adam { beta1: f32, beta2: f32, eps: f32 },
    Sgd,
}

impl Default for OptimizerKind {
    fn default() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f32,
    step: u64,
    m: Vec<Vec<f32>>,
    v: Vec<Vec<f32>>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f32, params: &ParamSet) -> Self {
        let shapes: Vec<usize> = params.iter().map(|p| p.tensor.numel()).collect();
        Optimizer {
            kind,
            lr,
            step: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn lr(&self) -> f32 {
        self.lr
    }

    /// Applies one update using the gradients stored on each parameter.
    /// Gradients are left untouched; the caller zeroes them.
    pub fn step(&mut self, params: &mut ParamSet) -> Result<()> {
        if params.len() != self.m.len() {
            return Err(Error::contract(
                "optimizer_step",
                "optimizer state does not match parameter set",
            ));
        }
        self.step += 1;
        let t = self.step as i32;
        for id in 0..params.len() {
            let p = params.get_mut(id);
            let n = p.tensor.numel();
            let grad = p
                .tensor
                .grad()
                .ok_or_else(|| Error::contract("optimizer_step", "missing gradient"))?;
            if grad.len() != n {
                return Err(Error::contract("optimizer_step", "gradient length mismatch"));
            }
            match self.kind {
                OptimizerKind::Adam { beta1, beta2, eps } => {
                    let bc1 = 1.0 - beta1.powi(t);
                    let bc2 = 1.0 - beta2.powi(t);
                    let m = &mut self.m[id];
                    let v = &mut self.v[id];
                    // split borrows: grads copied out per element below
                    let g: Vec<f32> = grad.to_vec();
                    let data = p.tensor.data_mut();
                    for i in 0..n {
                        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                        let mh = m[i] / bc1;
                        let vh = v[i] / bc2;
                        data[i] -= self.lr * mh / (vh.sqrt() + eps);
                    }
                }
                OptimizerKind::Sgd => {
                    let g: Vec<f32> = grad.to_vec();
                    let data = p.tensor.data_mut();
                    for i in 0..n {
                        data[i] -= self.lr * g[i];
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    fn scalar_param(v: f32) -> ParamSet {
        let mut ps = ParamSet::new();
        ps.add("x", Tensor::scalar(v));
        ps
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut ps = scalar_param(1.5);
        let mut opt = Optimizer::new(OptimizerKind::default(), 0.1, &ps);
        ps.zero_grads();
        opt.step(&mut ps).unwrap();
        assert_eq!(ps.get(0).tensor.data()[0], 1.5);
    }

    #[test]
    fn first_adam_step_moves_by_about_lr() {
        // m-hat = g, v-hat = g^2, so the step is lr * g / (|g| + eps)
        let mut ps = scalar_param(0.0);
        ps.get_mut(0).tensor.grad_mut().unwrap()[0] = 1.0;
        let mut opt = Optimizer::new(OptimizerKind::default(), 0.1, &ps);
        opt.step(&mut ps).unwrap();
        let x = ps.get(0).tensor.data()[0];
        assert!((x + 0.1).abs() < 1e-6, "expected ~-0.1, got {x}");
    }

    #[test]
    fn adam_descends_quadratic() {
        // f(x) = x^2, grad = 2x, from x = 5
        let mut ps = scalar_param(5.0);
        let mut opt = Optimizer::new(OptimizerKind::default(), 0.01, &ps);
        for _ in 0..2000 {
            let x = ps.get(0).tensor.data()[0];
            ps.zero_grads();
            ps.get_mut(0).tensor.grad_mut().unwrap()[0] = 2.0 * x;
            opt.step(&mut ps).unwrap();
        }
        let x = ps.get(0).tensor.data()[0];
        assert!(x.abs() < 0.1, "did not descend: {x}");
    }

    #[test]
    fn sgd_step_is_lr_times_grad() {
        let mut ps = scalar_param(1.0);
        ps.get_mut(0).tensor.grad_mut().unwrap()[0] = 2.0;
        let mut opt = Optimizer::new(OptimizerKind::Sgd, 0.5, &ps);
        opt.step(&mut ps).unwrap();
        assert_eq!(ps.get(0).tensor.data()[0], 0.0);
    }
}
