use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geodata::TaskKind;

/// One affine layer, `x·weight + bias` with `weight` shaped `(in, out)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Layer {
    fn zeros(input: usize, output: usize) -> Self {
        Self { weight: Array2::zeros((input, output)), bias: Array1::zeros(output) }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.ncols()
    }

    fn slices(&self) -> [&[f64]; 2] {
        [self.weight.as_slice().expect("standard layout"), self.bias.as_slice().expect("standard layout")]
    }

    fn slices_mut(&mut self) -> [&mut [f64]; 2] {
        [self.weight.as_slice_mut().expect("standard layout"), self.bias.as_slice_mut().expect("standard layout")]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub hidden_dim: usize,
    /// Number of sine layers; the affine output layer comes on top.
    pub n_layers: usize,
    pub omega0: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { hidden_dim: 64, n_layers: 2, omega0: 30.0 }
    }
}

/// A sinusoidal MLP with a single output.
///
/// The first layer computes `sin(ω0·(xW+b))`, later hidden layers `sin(xW+b)`,
/// and the last layer is affine. Classification models return logits.
/// Regression models are trained on targets mapped through
/// `(t − target_shift) / target_scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct SirenModel {
    pub layers: Vec<Layer>,
    pub omega0: f64,
    pub hidden_dim: usize,
    pub n_layers: usize,
    pub task: TaskKind,
    pub target_shift: f64,
    pub target_scale: f64,
    /// Fingerprint of the encoding the model was trained on; empty if unknown.
    pub spec_fingerprint: String,
}

/// Gradients shaped like the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    pub fn param_slices(&self) -> impl Iterator<Item = &[f64]> {
        self.layers.iter().flat_map(|l| l.slices())
    }

    /// Euclidean norm over all parameters.
    pub fn norm(&self) -> f64 {
        self.param_slices().flatten().map(|g| g * g).sum::<f64>().sqrt()
    }
}

/// A freshly initialised model, deterministic per seed.
///
/// First-layer weights are uniform in `±1/input_dim`, later weights in
/// `±√(6/fan_in)/ω0`, biases in `±1/√fan_in`.
pub fn siren_init(input_dim: usize, config: &ModelConfig, task: TaskKind, seed: u64) -> Result<SirenModel> {
    let ModelConfig { hidden_dim, n_layers, omega0 } = *config;
    if input_dim == 0 || hidden_dim == 0 || n_layers == 0 {
        return Err(Error::invalid(format!(
            "model dimensions must be at least 1 (input {input_dim}, hidden {hidden_dim}, layers {n_layers})"
        )));
    }
    if !(omega0 > 0.0 && omega0.is_finite()) {
        return Err(Error::invalid(format!("omega0 must be positive, got {omega0}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(n_layers + 1);
    for i in 0..=n_layers {
        let fan_in = if i == 0 { input_dim } else { hidden_dim };
        let fan_out = if i == n_layers { 1 } else { hidden_dim };
        let w_bound = if i == 0 { 1.0 / fan_in as f64 } else { (6.0 / fan_in as f64).sqrt() / omega0 };
        let b_bound = 1.0 / (fan_in as f64).sqrt();
        let w_dist = Uniform::new_inclusive(-w_bound, w_bound);
        let b_dist = Uniform::new_inclusive(-b_bound, b_bound);
        let weight = Array2::from_shape_simple_fn((fan_in, fan_out), || w_dist.sample(&mut rng));
        let bias = Array1::from_shape_simple_fn(fan_out, || b_dist.sample(&mut rng));
        layers.push(Layer { weight, bias });
    }
    Ok(SirenModel {
        layers,
        omega0,
        hidden_dim,
        n_layers,
        task,
        target_shift: 0.0,
        target_scale: 1.0,
        spec_fingerprint: String::new(),
    })
}

/// Loss of a single prediction. Binary tasks use cross-entropy on the logit,
/// regression the squared error.
#[inline]
pub fn point_loss(prediction: f64, target: f64, task: TaskKind) -> f64 {
    match task {
        TaskKind::BinaryClassification => prediction.max(0.0) - prediction * target + (-prediction.abs()).exp().ln_1p(),
        TaskKind::Regression => (prediction - target).powi(2),
    }
}

#[inline]
fn point_loss_grad(prediction: f64, target: f64, task: TaskKind) -> f64 {
    match task {
        TaskKind::BinaryClassification => sigmoid(prediction) - target,
        TaskKind::Regression => 2.0 * (prediction - target),
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean loss over a batch.
pub fn loss(predictions: &[f64], targets: &[f64], task: TaskKind) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::ShapeMismatch(format!("{} predictions for {} targets", predictions.len(), targets.len())));
    }
    if predictions.is_empty() {
        return Err(Error::invalid("loss of an empty batch"));
    }
    Ok(predictions.iter().zip(targets).map(|(&p, &t)| point_loss(p, t, task)).sum::<f64>() / predictions.len() as f64)
}

impl SirenModel {
    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    /// Weights then bias, layer by layer.
    pub fn param_slices(&self) -> impl Iterator<Item = &[f64]> {
        self.layers.iter().flat_map(|l| l.slices())
    }

    pub fn param_slices_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.layers.iter_mut().flat_map(|l| l.slices_mut())
    }

    pub fn all_finite(&self) -> bool {
        self.param_slices().flatten().all(|p| p.is_finite())
    }

    /// Content hash of the parameters.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for s in self.param_slices() {
            for p in s {
                hasher.update(p.to_le_bytes());
            }
        }
        hex::encode(&hasher.finalize()[..8])
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::ShapeMismatch(format!(
                "batch has {} features, model expects {}",
                x.ncols(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    fn pre_activation(&self, i: usize, input: &ArrayView2<f64>) -> Array2<f64> {
        let layer = &self.layers[i];
        let mut z = input.dot(&layer.weight);
        z += &layer.bias;
        if i == 0 {
            z *= self.omega0;
        }
        z
    }

    /// Raw outputs (logits for classification, normalized values for
    /// regression), one per row of `x`.
    pub fn forward(&self, x: ArrayView2<f64>) -> Result<Array1<f64>> {
        self.check_input(&x)?;
        let last = self.layers.len() - 1;
        let mut act: Option<Array2<f64>> = None;
        for i in 0..last {
            let mut z = match &act {
                None => self.pre_activation(i, &x),
                Some(a) => self.pre_activation(i, &a.view()),
            };
            z.mapv_inplace(f64::sin);
            act = Some(z);
        }
        let out = self.pre_activation(last, &act.as_ref().expect("at least one hidden layer").view());
        Ok(out.index_axis_move(Axis(1), 0))
    }

    /// Maps raw outputs to target units (identity for classification logits).
    pub fn denormalize(&self, raw: f64) -> f64 {
        match self.task {
            TaskKind::BinaryClassification => raw,
            TaskKind::Regression => raw * self.target_scale + self.target_shift,
        }
    }

    /// Maps targets to the space the loss is computed in.
    pub fn normalize_target(&self, target: f64) -> f64 {
        match self.task {
            TaskKind::BinaryClassification => target,
            TaskKind::Regression => (target - self.target_shift) / self.target_scale,
        }
    }

    /// Mean loss and its exact gradient with respect to every parameter.
    /// `targets` are in loss space (already normalized).
    pub fn gradients(&self, x: ArrayView2<f64>, targets: ArrayView1<f64>) -> Result<(f64, Gradients)> {
        self.check_input(&x)?;
        let n = x.nrows();
        if targets.len() != n {
            return Err(Error::ShapeMismatch(format!("{n} rows for {} targets", targets.len())));
        }
        if n == 0 {
            return Err(Error::invalid("gradient of an empty batch"));
        }
        let last = self.layers.len() - 1;
        // activations[i] is the input to layer i; cosines[i] the derivative of its sine
        let mut activations: Vec<Array2<f64>> = Vec::with_capacity(last);
        let mut cosines: Vec<Array2<f64>> = Vec::with_capacity(last);
        for i in 0..last {
            let z = if i == 0 { self.pre_activation(0, &x) } else { self.pre_activation(i, &activations[i - 1].view()) };
            cosines.push(z.mapv(f64::cos));
            activations.push(z.mapv(f64::sin));
        }
        let out = self.pre_activation(last, &activations[last - 1].view());

        let scale = 1.0 / n as f64;
        let mut total = 0.0;
        let mut delta = Array2::zeros((n, 1));
        for r in 0..n {
            let (p, t) = (out[[r, 0]], targets[r]);
            total += point_loss(p, t, self.task);
            delta[[r, 0]] = point_loss_grad(p, t, self.task) * scale;
        }

        let mut grads: Vec<Layer> = self.layers.iter().map(|l| Layer::zeros(l.input_dim(), l.output_dim())).collect();
        for i in (0..=last).rev() {
            let input = if i == 0 { x.view() } else { activations[i - 1].view() };
            if i < last {
                delta *= &cosines[i];
                if i == 0 {
                    delta *= self.omega0;
                }
            }
            grads[i].weight = input.t().dot(&delta).as_standard_layout().into_owned();
            grads[i].bias = delta.sum_axis(Axis(0));
            if i > 0 {
                delta = delta.dot(&self.layers[i].weight.t());
            }
        }
        Ok((total * scale, Gradients { layers: grads }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, s};
    use rand::Rng;

    fn random_batch(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_simple_fn((rows, cols), || rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn parameter_count_and_bounds() {
        let m = siren_init(100, &ModelConfig { hidden_dim: 64, n_layers: 2, omega0: 30.0 }, TaskKind::BinaryClassification, 1).unwrap();
        assert_eq!(m.n_params(), 100 * 64 + 64 + 64 * 64 + 64 + 64 + 1);
        assert_eq!(m.n_params(), 10_689);
        let hidden_bound = (6.0f64 / 64.0).sqrt() / 30.0;
        assert!(m.layers[1].weight.iter().all(|w| w.abs() <= hidden_bound));
        assert!(m.layers[0].weight.iter().all(|w| w.abs() <= 0.01));
        assert_eq!(m, siren_init(100, &ModelConfig::default(), TaskKind::BinaryClassification, 1).unwrap());
        assert_ne!(m, siren_init(100, &ModelConfig::default(), TaskKind::BinaryClassification, 2).unwrap());
        assert!(siren_init(0, &ModelConfig::default(), TaskKind::Regression, 1).is_err());
    }

    #[test]
    fn zero_model_outputs_final_bias() {
        let mut m = siren_init(5, &ModelConfig::default(), TaskKind::Regression, 0).unwrap();
        for s in m.param_slices_mut() {
            s.fill(0.0);
        }
        m.layers.last_mut().unwrap().bias[0] = 0.75;
        let out = m.forward(random_batch(4, 5, 0).view()).unwrap();
        assert!(out.iter().all(|&o| o == 0.75));
        assert!(m.forward(random_batch(4, 6, 0).view()).is_err());
    }

    #[test]
    fn batching_is_row_independent() {
        let m = siren_init(8, &ModelConfig::default(), TaskKind::BinaryClassification, 3).unwrap();
        let x = random_batch(10, 8, 4);
        let all = m.forward(x.view()).unwrap();
        for r in 0..10 {
            let one = m.forward(x.slice(s![r..r + 1, ..])).unwrap();
            assert_eq!(one[0], all[r]);
        }
    }

    #[test]
    fn loss_examples() {
        assert!((loss(&[0.0], &[1.0], TaskKind::BinaryClassification).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(loss(&[0.3, -2.0], &[0.3, -2.0], TaskKind::Regression).unwrap(), 0.0);
        let l = loss(&[20.0], &[1.0], TaskKind::BinaryClassification).unwrap();
        // ln(1 + e^−20) by its series
        let e = (-20f64).exp();
        assert!((l - (e - e * e / 2.0)).abs() < 1e-22 && l < 1e-8);
        assert!(loss(&[1e4], &[0.0], TaskKind::BinaryClassification).unwrap().is_finite());
        assert!(loss(&[], &[], TaskKind::Regression).is_err());
        assert!(loss(&[0.0], &[], TaskKind::Regression).is_err());
    }

    #[test]
    fn zero_regression_residual_has_zero_gradient() {
        let mut m = siren_init(4, &ModelConfig::default(), TaskKind::Regression, 9).unwrap();
        let last = m.layers.last_mut().unwrap();
        last.weight.fill(0.0);
        last.bias.fill(0.0);
        let x = random_batch(6, 4, 1);
        let (l, g) = m.gradients(x.view(), Array1::zeros(6).view()).unwrap();
        assert_eq!(l, 0.0);
        assert_eq!(g.norm(), 0.0);
    }

    #[test]
    fn duplicated_batch_has_same_gradient() {
        let m = siren_init(3, &ModelConfig { hidden_dim: 8, n_layers: 2, omega0: 30.0 }, TaskKind::BinaryClassification, 2).unwrap();
        let x = random_batch(5, 3, 2);
        let t = array![0.0, 1.0, 1.0, 0.0, 1.0];
        let x2 = ndarray::concatenate(Axis(0), &[x.view(), x.view()]).unwrap();
        let t2 = ndarray::concatenate(Axis(0), &[t.view(), t.view()]).unwrap();
        let (l1, g1) = m.gradients(x.view(), t.view()).unwrap();
        let (l2, g2) = m.gradients(x2.view(), t2.view()).unwrap();
        assert!((l1 - l2).abs() < 1e-14);
        for (a, b) in g1.param_slices().flatten().zip(g2.param_slices().flatten()) {
            assert!((a - b).abs() <= 1e-14 * a.abs().max(1e-3), "{a} vs {b}");
        }
    }

    fn finite_difference_check(task: TaskKind, seed: u64) -> f64 {
        let mut m = siren_init(64, &ModelConfig { hidden_dim: 64, n_layers: 2, omega0: 30.0 }, task, seed).unwrap();
        let x = random_batch(16, 64, seed + 100);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 200);
        let t: Array1<f64> = match task {
            TaskKind::BinaryClassification => Array1::from_shape_simple_fn(16, || f64::from(rng.gen::<bool>() as u8)),
            TaskKind::Regression => Array1::from_shape_simple_fn(16, || rng.gen_range(-1.0..1.0)),
        };
        let (_, g) = m.gradients(x.view(), t.view()).unwrap();
        let analytic: Vec<f64> = g.param_slices().flatten().copied().collect();
        let n = m.n_params();
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let k = rng.gen_range(0..n);
            let nudge = |m: &mut SirenModel, delta: f64| {
                let mut offset = k;
                for s in m.param_slices_mut() {
                    if offset < s.len() {
                        s[offset] += delta;
                        return;
                    }
                    offset -= s.len();
                }
            };
            nudge(&mut m, h);
            let up = loss(m.forward(x.view()).unwrap().as_slice().unwrap(), t.as_slice().unwrap(), task).unwrap();
            nudge(&mut m, -2.0 * h);
            let down = loss(m.forward(x.view()).unwrap().as_slice().unwrap(), t.as_slice().unwrap(), task).unwrap();
            nudge(&mut m, h);
            let numeric = (up - down) / (2.0 * h);
            let rel = (numeric - analytic[k]).abs() / numeric.abs().max(analytic[k].abs()).max(1e-6);
            worst = worst.max(rel);
        }
        worst
    }

    #[test]
    fn gradients_match_finite_differences() {
        for task in [TaskKind::BinaryClassification, TaskKind::Regression] {
            let worst = finite_difference_check(task, 5);
            assert!(worst < 1e-4, "{task:?}: max relative error {worst}");
        }
    }
}
