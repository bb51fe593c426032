use std::io::Write;
use std::time::Instant;

use ndarray::{Array1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::{adam_step, AdamParams, AdamState};
use super::model::{point_loss, siren_init, ModelConfig, SirenModel};
use crate::config::KvDocument;
use crate::encodings::Encoder;
use crate::error::{Error, Result};
use crate::geodata::{SampleSet, TaskKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub weight_decay: f64,
    pub seed: u64,
    /// Validation points per training point.
    pub validation_fraction: f64,
    pub early_stop_patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            batch_size: 2048,
            max_epochs: 500,
            weight_decay: 0.0,
            seed: 0,
            validation_fraction: 0.2,
            early_stop_patience: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::invalid("batch size and epoch count must be at least 1"));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::invalid(format!("weight decay must be non-negative, got {}", self.weight_decay)));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::invalid(format!("validation fraction must lie in (0, 1), got {}", self.validation_fraction)));
        }
        if self.early_stop_patience == Some(0) {
            return Err(Error::invalid("early stop patience must be at least 1"));
        }
        Ok(())
    }

    /// Validation sample size for `n_train` training points (at least 1).
    pub fn validation_size(&self, n_train: usize) -> usize {
        ((n_train as f64 * self.validation_fraction).round() as usize).max(1)
    }

    pub fn write_kv(&self, doc: &mut KvDocument, section: &str) {
        doc.set(section, "learning_rate", self.learning_rate);
        doc.set(section, "batch_size", self.batch_size);
        doc.set(section, "max_epochs", self.max_epochs);
        doc.set(section, "weight_decay", self.weight_decay);
        doc.set(section, "weight_decay_mode", "decoupled");
        doc.set(section, "seed", self.seed);
        doc.set(section, "validation_fraction", self.validation_fraction);
        doc.set(section, "early_stop_patience", self.early_stop_patience.map_or("none".to_string(), |p| p.to_string()));
    }

    pub fn from_kv(doc: &KvDocument, section: &str) -> Result<Self> {
        let d = Self::default();
        let patience = match doc.get(section, "early_stop_patience") {
            None | Some("none") | Some("") => None,
            Some(_) => Some(doc.parse(section, "early_stop_patience")?),
        };
        let cfg = Self {
            learning_rate: doc.parse_or(section, "learning_rate", d.learning_rate)?,
            batch_size: doc.parse_or(section, "batch_size", d.batch_size)?,
            max_epochs: doc.parse_or(section, "max_epochs", d.max_epochs)?,
            weight_decay: doc.parse_or(section, "weight_decay", d.weight_decay)?,
            seed: doc.parse_or(section, "seed", d.seed)?,
            validation_fraction: doc.parse_or(section, "validation_fraction", d.validation_fraction)?,
            early_stop_patience: patience,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl ModelConfig {
    pub fn write_kv(&self, doc: &mut KvDocument, section: &str) {
        doc.set(section, "hidden_dim", self.hidden_dim);
        doc.set(section, "n_layers", self.n_layers);
        doc.set(section, "omega0", self.omega0);
    }

    pub fn from_kv(doc: &KvDocument, section: &str) -> Result<Self> {
        let d = Self::default();
        Ok(Self {
            hidden_dim: doc.parse_or(section, "hidden_dim", d.hidden_dim)?,
            n_layers: doc.parse_or(section, "n_layers", d.n_layers)?,
            omega0: doc.parse_or(section, "omega0", d.omega0)?,
        })
    }
}

/// Per-epoch record of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub wall_time_s: Vec<f64>,
    /// Zero-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub params_fingerprint: String,
}

impl TrainHistory {
    pub fn epochs(&self) -> usize {
        self.train_loss.len()
    }

    pub fn best_val_loss(&self) -> f64 {
        self.val_loss[self.best_epoch]
    }

    /// `epoch,train_loss,val_loss`, one row per epoch. Timings are left out so
    /// the file is reproducible.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "epoch,train_loss,val_loss")?;
        for (i, (t, v)) in self.train_loss.iter().zip(&self.val_loss).enumerate() {
            writeln!(w, "{},{t},{v}", i + 1)?;
        }
        Ok(())
    }

    /// `epoch,wall_time_s`.
    pub fn write_timing_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "epoch,wall_time_s")?;
        for (i, t) in self.wall_time_s.iter().enumerate() {
            writeln!(w, "{},{t}", i + 1)?;
        }
        Ok(())
    }
}

fn check_targets(task: TaskKind, targets: &[f64]) -> Result<()> {
    for (i, &t) in targets.iter().enumerate() {
        let ok = t.is_finite() && (task == TaskKind::Regression || t == 0.0 || t == 1.0);
        if !ok {
            return Err(Error::invalid(format!("target {t} at position {i} is not valid for a {} task", task.as_str())));
        }
    }
    Ok(())
}

fn diagnostics(model: &SirenModel) -> String {
    let maxes: Vec<String> = model
        .layers
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let w = l.weight.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            let b = l.bias.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            format!("layer {i} max|w|={w:e} max|b|={b:e}")
        })
        .collect();
    maxes.join(", ")
}

fn mean_loss(model: &SirenModel, x: ArrayView2<f64>, targets: &[f64]) -> Result<f64> {
    let raw = model.forward(x)?;
    Ok(raw.iter().zip(targets).map(|(&p, &t)| point_loss(p, t, model.task)).sum::<f64>() / targets.len() as f64)
}

/// Trains on pre-encoded features. Targets are in task units; regression
/// targets are normalized with the training mean and standard deviation.
#[allow(clippy::too_many_arguments)]
pub fn train_on_features(
    x_train: ArrayView2<f64>,
    y_train: &[f64],
    x_val: ArrayView2<f64>,
    y_val: &[f64],
    task: TaskKind,
    model_config: &ModelConfig,
    config: &TrainConfig,
    spec_fingerprint: &str,
) -> Result<(SirenModel, TrainHistory)> {
    config.validate()?;
    if x_train.nrows() == 0 || x_val.nrows() == 0 {
        return Err(Error::invalid("training and validation sets must be nonempty"));
    }
    if x_train.nrows() != y_train.len() || x_val.nrows() != y_val.len() {
        return Err(Error::ShapeMismatch("feature rows and targets differ in length".into()));
    }
    if x_train.ncols() != x_val.ncols() {
        return Err(Error::ShapeMismatch("training and validation features differ in width".into()));
    }
    check_targets(task, y_train)?;
    check_targets(task, y_val)?;

    let mut model = siren_init(x_train.ncols(), model_config, task, config.seed)?;
    model.spec_fingerprint = spec_fingerprint.to_string();
    if task == TaskKind::Regression {
        let n = y_train.len() as f64;
        let mean = y_train.iter().sum::<f64>() / n;
        let std = (y_train.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n).sqrt();
        model.target_shift = mean;
        model.target_scale = if std > 0.0 { std } else { 1.0 };
    }
    let t_train: Array1<f64> = y_train.iter().map(|&t| model.normalize_target(t)).collect();
    let t_val: Vec<f64> = y_val.iter().map(|&t| model.normalize_target(t)).collect();

    let adam = AdamParams::new(config.learning_rate, config.weight_decay);
    let mut state = AdamState::new(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..x_train.nrows()).collect();

    let mut history = TrainHistory {
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        wall_time_s: Vec::new(),
        best_epoch: 0,
        params_fingerprint: String::new(),
    };
    let mut best = model.clone();
    let mut best_val = f64::INFINITY;
    for epoch in 0..config.max_epochs {
        let start = Instant::now();
        order.shuffle(&mut rng);
        let mut running = 0.0;
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let xb = x_train.select(Axis(0), batch);
            let tb = t_train.select(Axis(0), batch);
            let (l, grads) = model.gradients(xb.view(), tb.view())?;
            if !l.is_finite() {
                return Err(Error::Diverged {
                    epoch: epoch + 1,
                    detail: format!("batch {b} loss {l}, gradient norm {:e}; {}", grads.norm(), diagnostics(&model)),
                });
            }
            adam_step(&mut model, &grads, &mut state, &adam)?;
            running += l * batch.len() as f64;
        }
        if !model.all_finite() {
            return Err(Error::Diverged { epoch: epoch + 1, detail: format!("non-finite parameters; {}", diagnostics(&model)) });
        }
        let val = mean_loss(&model, x_val, &t_val)?;
        if !val.is_finite() {
            return Err(Error::Diverged { epoch: epoch + 1, detail: format!("validation loss {val}; {}", diagnostics(&model)) });
        }
        history.train_loss.push(running / x_train.nrows() as f64);
        history.val_loss.push(val);
        history.wall_time_s.push(start.elapsed().as_secs_f64());
        if val < best_val {
            best_val = val;
            best.clone_from(&model);
            history.best_epoch = epoch;
        }
        if let Some(patience) = config.early_stop_patience {
            if epoch - history.best_epoch >= patience {
                break;
            }
        }
    }
    history.params_fingerprint = best.fingerprint();
    Ok((best, history))
}

/// Encodes both sets once and trains. The model keeps the parameters with
/// the lowest validation loss.
pub fn train(
    train_set: &SampleSet,
    validation: &SampleSet,
    encoder: &Encoder,
    model_config: &ModelConfig,
    config: &TrainConfig,
) -> Result<(SirenModel, TrainHistory)> {
    if train_set.task != validation.task {
        return Err(Error::invalid("training and validation sets come from different tasks"));
    }
    let x_train = encoder.encode_batch(&train_set.points);
    let x_val = encoder.encode_batch(&validation.points);
    train_on_features(
        x_train.view(),
        &train_set.targets,
        x_val.view(),
        &validation.targets,
        train_set.task,
        model_config,
        config,
        encoder.fingerprint(),
    )
}

/// Per-point predictions (task units) and unreduced losses (loss space).
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub predictions: Vec<f64>,
    pub losses: Vec<f64>,
}

impl Evaluation {
    pub fn mean_loss(&self) -> f64 {
        self.losses.iter().sum::<f64>() / self.losses.len() as f64
    }
}

/// Evaluates pre-encoded features.
pub fn evaluate_features(model: &SirenModel, x: ArrayView2<f64>, targets: &[f64]) -> Result<Evaluation> {
    if x.nrows() != targets.len() {
        return Err(Error::ShapeMismatch(format!("{} rows for {} targets", x.nrows(), targets.len())));
    }
    let raw = model.forward(x)?;
    Ok(Evaluation {
        predictions: raw.iter().map(|&r| model.denormalize(r)).collect(),
        losses: raw.iter().zip(targets).map(|(&r, &t)| point_loss(r, model.normalize_target(t), model.task)).collect(),
    })
}

const EVAL_CHUNK: usize = 8192;

/// Evaluates a dataset in chunks, so full grids never sit in memory encoded.
pub fn evaluate(model: &SirenModel, encoder: &Encoder, dataset: &SampleSet) -> Result<Evaluation> {
    if !model.spec_fingerprint.is_empty() && model.spec_fingerprint != encoder.fingerprint() {
        return Err(Error::ShapeMismatch(format!(
            "model was trained on encoding {} but evaluated with {}",
            model.spec_fingerprint,
            encoder.fingerprint()
        )));
    }
    let mut out = Evaluation { predictions: Vec::with_capacity(dataset.len()), losses: Vec::with_capacity(dataset.len()) };
    for (points, targets) in dataset.points.chunks(EVAL_CHUNK).zip(dataset.targets.chunks(EVAL_CHUNK)) {
        let x = encoder.encode_batch(points);
        let part = evaluate_features(model, x.view(), targets)?;
        out.predictions.extend(part.predictions);
        out.losses.extend(part.losses);
    }
    Ok(out)
}
