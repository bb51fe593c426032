use super::model::{Gradients, SirenModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub lr: f64,
    pub weight_decay: f64,
    pub betas: (f64, f64),
    pub eps: f64,
}

impl AdamParams {
    pub fn new(lr: f64, weight_decay: f64) -> Self {
        Self { lr, weight_decay, betas: (0.9, 0.999), eps: 1e-8 }
    }
}

/// First and second moment estimates, one pair per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
}

impl AdamState {
    pub fn new(model: &SirenModel) -> Self {
        let zeros: Vec<Vec<f64>> = model.param_slices().map(|s| vec![0.0; s.len()]).collect();
        Self { m: zeros.clone(), v: zeros, step: 0 }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// One Adam update with bias correction. Weight decay is decoupled and hits
/// weight matrices only: `w ← w·(1 − lr·wd)` before the moment step.
pub fn adam_step(model: &mut SirenModel, grads: &Gradients, state: &mut AdamState, params: &AdamParams) -> Result<()> {
    let shapes_match = state.m.len() == grads.layers.len() * 2
        && model.param_slices().zip(grads.param_slices()).all(|(p, g)| p.len() == g.len())
        && model.param_slices().zip(&state.m).all(|(p, m)| p.len() == m.len());
    if !shapes_match {
        return Err(Error::ShapeMismatch("optimizer state, gradients and model disagree".into()));
    }
    state.step += 1;
    let (b1, b2) = params.betas;
    let c1 = 1.0 - b1.powf(state.step as f64);
    let c2 = 1.0 - b2.powf(state.step as f64);
    let shrink = 1.0 - params.lr * params.weight_decay;
    let slices = model.param_slices_mut().zip(grads.param_slices()).zip(state.m.iter_mut().zip(state.v.iter_mut()));
    for (k, ((p, g), (m, v))) in slices.enumerate() {
        // even slices are weight matrices, odd ones biases
        let decay = k % 2 == 0 && params.weight_decay != 0.0;
        for i in 0..p.len() {
            if decay {
                p[i] *= shrink;
            }
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= params.lr * m_hat / (v_hat.sqrt() + params.eps);
        }
    }
    Ok(())
}
