//! Minibatch training with augmentation, validation in inference mode and
//! best-checkpoint selection.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rfsep_autograd::{clip_grad_norm, Adam, AdamConfig, Graph, Tensor};
use rfsep_core::mixing::{Augmentation, Dataset, MixtureExample};
use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::layout::{lit, to_tensor, wide, Element};
use crate::model::Model;

/// What the decoder sees as the previous SOI window during training.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Feedback {
    /// The true SOI.
    Teacher,
    /// The true SOI plus white noise of the given standard deviation per component.
    Noisy { std: f64 },
    /// With probability `prob` per batch, the model's own teacher-forced
    /// estimate (no gradient through it) replaces the true SOI.
    SelfConditioned { prob: f64, std: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Global gradient-norm limit; 0 disables clipping.
    pub grad_clip: f64,
    /// Random crop length per example, or the full slice when absent.
    pub crop_length: Option<usize>,
    /// Largest circular shift drawn by the augmentation; 0 disables shifts
    /// (phase rotation stays on).
    pub max_shift: usize,
    pub augment: bool,
    pub feedback: Feedback,
    /// Examples per inference batch during validation.
    pub eval_batch: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 16,
            lr: 1e-3,
            grad_clip: 1.0,
            crop_length: None,
            max_shift: 2047,
            augment: true,
            feedback: Feedback::Teacher,
            eval_batch: 64,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.eval_batch == 0 {
            return Err(config!("epochs, batch_size and eval_batch must be positive"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(config!("lr must be positive and finite, got {}", self.lr));
        }
        if !(self.grad_clip >= 0.0) {
            return Err(config!("grad_clip must be non-negative"));
        }
        match self.feedback {
            Feedback::Teacher => {}
            Feedback::Noisy { std } if std >= 0.0 => {}
            Feedback::SelfConditioned { prob, std } if (0.0..=1.0).contains(&prob) && std >= 0.0 => {}
            other => return Err(config!("invalid feedback setting {other:?}")),
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_mse: f64,
    /// Inference-mode validation error (the decoder feeds back its own output).
    pub val_mse: f64,
    /// Teacher-forced validation error, decoder only.
    pub val_teacher_mse: Option<f64>,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best_val_mse: f64,
    /// `mean(κ²)/2`, exact for unit-power interference slices.
    pub passthrough_mse_closed_form: f64,
    /// Mean squared error of returning the mixture unchanged.
    pub passthrough_mse: f64,
}

impl TrainReport {
    pub fn best_ratio(&self) -> f64 {
        self.best_val_mse / self.passthrough_mse
    }

    /// `epoch,train_mse,val_mse` rows; no timing, so reruns compare byte for byte.
    pub fn loss_curve_csv(&self) -> String {
        let mut s = String::from("epoch,train_mse,val_mse\n");
        for e in &self.epochs {
            let _ = writeln!(s, "{},{:e},{:e}", e.epoch, e.train_mse, e.val_mse);
        }
        s
    }

    pub fn train_log_csv(&self) -> String {
        let mut s = String::from("epoch,train_mse,val_mse,wall_time\n");
        for e in &self.epochs {
            let _ = writeln!(s, "{},{:e},{:e},{:.3}", e.epoch, e.train_mse, e.val_mse, e.wall_time_s);
        }
        s
    }
}

fn mse<T: Element>(a: &[T], b: &[T]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (wide(*x) - wide(*y)).powi(2)).sum::<f64>() / a.len() as f64
}

/// Mean over examples of the componentwise MSE of `mixture` against `soi`.
pub fn passthrough_mse<'a, T: Element>(examples: impl IntoIterator<Item = &'a MixtureExample<T>>) -> f64 {
    let (mut acc, mut n) = (0.0, 0usize);
    for e in examples {
        let d: f64 = e.interference_scaled.samples().iter().map(|c| wide(c.norm_sqr())).sum();
        acc += d / (2 * e.len()) as f64;
        n += 1;
    }
    acc / n.max(1) as f64
}

struct Batch<T: Element> {
    mixture: Tensor<T>,
    soi: Tensor<T>,
}

fn make_batch<T: Element>(examples: &[&MixtureExample<T>], cfg: &TrainConfig, rng: &mut ChaCha8Rng, quantum: usize) -> Result<Batch<T>> {
    let mut mix = Vec::with_capacity(examples.len());
    let mut soi = Vec::with_capacity(examples.len());
    for e in examples {
        let (m, s) = if cfg.augment {
            let a = Augmentation::draw(rng, cfg.max_shift.min(e.len().saturating_sub(1)));
            (a.apply_samples(e.mixture.samples()), a.apply_samples(e.soi.samples()))
        } else {
            (e.mixture.samples().to_vec(), e.soi.samples().to_vec())
        };
        let (m, s) = match cfg.crop_length {
            Some(c) if c < m.len() => {
                let c = c / quantum * quantum;
                let start = rng.random_range(0..=m.len() - c);
                (m[start..start + c].to_vec(), s[start..start + c].to_vec())
            }
            _ => (m, s),
        };
        mix.push(m);
        soi.push(s);
    }
    let mr: Vec<&[_]> = mix.iter().map(|v| v.as_slice()).collect();
    let sr: Vec<&[_]> = soi.iter().map(|v| v.as_slice()).collect();
    Ok(Batch { mixture: to_tensor(&mr)?, soi: to_tensor(&sr)? })
}

fn add_noise<T: Element>(t: &Tensor<T>, std: f64, rng: &mut ChaCha8Rng) -> Tensor<T> {
    if std <= 0.0 {
        return t.clone();
    }
    let normal = Normal::new(0.0, std).expect("std is positive");
    let data = t.data().iter().map(|&v| v + lit::<T>(normal.sample(rng))).collect();
    Tensor::new(t.shape(), data).expect("same shape")
}

/// Validation MSE in inference mode and, for the decoder, teacher forced.
pub fn evaluate_mse<T: Element>(model: &Model<T>, examples: &[&MixtureExample<T>], batch: usize) -> Result<(f64, Option<f64>)> {
    let (mut acc, mut acc_tf, mut n) = (0.0, 0.0, 0usize);
    for group in examples.chunks(batch.max(1)) {
        let mr: Vec<&[_]> = group.iter().map(|e| e.mixture.samples()).collect();
        let sr: Vec<&[_]> = group.iter().map(|e| e.soi.samples()).collect();
        let (m, s) = (to_tensor(&mr)?, to_tensor(&sr)?);
        let y = model.infer(&m)?;
        acc += mse(y.data(), s.data()) * group.len() as f64;
        if let Model::Decoder(d) = model {
            let y = d.infer_teacher_forced(&m, &s)?;
            acc_tf += mse(y.data(), s.data()) * group.len() as f64;
        }
        n += group.len();
    }
    let n = n.max(1) as f64;
    let tf = matches!(model, Model::Decoder(_)).then_some(acc_tf / n);
    Ok((acc / n, tf))
}

/// Trains `model` in place on the training split and leaves it holding the
/// parameters of the best validation epoch. With `out_dir`, writes
/// `best.bin`/`best.json`, `loss_curve.csv` and `train_log.csv` there.
pub fn train<T: Element>(model: &mut Model<T>, data: &Dataset<T>, cfg: &TrainConfig, out_dir: Option<&Path>) -> Result<TrainReport> {
    cfg.validate()?;
    let train_set: Vec<&MixtureExample<T>> = data.train_examples().collect();
    let val_set: Vec<&MixtureExample<T>> = data.val_examples().collect();
    if train_set.is_empty() || val_set.is_empty() {
        return Err(config!(
            "training needs nonempty train and validation splits (got {} and {})",
            train_set.len(),
            val_set.len()
        ));
    }
    let quantum = model.config().length_quantum();
    for e in train_set.iter().chain(&val_set) {
        model.check_length(e.len())?;
    }
    if let Some(c) = cfg.crop_length {
        if c < quantum {
            return Err(config!("crop_length {c} is shorter than the model's window {quantum}"));
        }
    }
    let kappa_sq: f64 = val_set.iter().map(|e| e.kappa * e.kappa).sum::<f64>() / val_set.len() as f64;
    let passthrough_closed = kappa_sq / 2.0;
    let passthrough = passthrough_mse(val_set.iter().copied());

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(AdamConfig { lr: cfg.lr, ..AdamConfig::default() });
    let start = Instant::now();
    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, f64, rfsep_autograd::ParamStore<T>)> = None;
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let (mut loss_acc, mut count) = (0.0, 0usize);
        for (step, idx) in order.chunks(cfg.batch_size).enumerate() {
            let examples: Vec<&MixtureExample<T>> = idx.iter().map(|&i| train_set[i]).collect();
            let batch = make_batch(&examples, cfg, &mut rng, quantum)?;
            let feedback = match (model as &Model<T>, cfg.feedback) {
                (Model::WaveNet(_), _) | (_, Feedback::Teacher) => batch.soi.clone(),
                (_, Feedback::Noisy { std }) => add_noise(&batch.soi, std, &mut rng),
                (Model::Decoder(d), Feedback::SelfConditioned { prob, std }) => {
                    if rng.random_bool(prob) {
                        let est = d.infer_teacher_forced(&batch.mixture, &batch.soi)?;
                        add_noise(&est, std, &mut rng)
                    } else {
                        add_noise(&batch.soi, std, &mut rng)
                    }
                }
            };
            let mut g = Graph::new();
            g.set_check_finite(false);
            let m = g.input(batch.mixture);
            let f = g.input(feedback);
            let s = g.input(batch.soi);
            let y = model.forward(&mut g, m, f)?;
            let loss = g.mse(y, s)?;
            let lv = wide(g.data(loss)[0]);
            if !lv.is_finite() {
                return Err(Error::Diverged { epoch, step, loss: lv, lr: cfg.lr, suggested: cfg.lr / 10.0 });
            }
            g.backward(loss)?;
            let params = model.params_mut();
            params.zero_grad();
            g.accumulate_grads(params);
            if cfg.grad_clip > 0.0 {
                clip_grad_norm(params, cfg.grad_clip);
            }
            adam.step(params);
            loss_acc += lv * examples.len() as f64;
            count += examples.len();
        }
        let (val, val_tf) = evaluate_mse(model, &val_set, cfg.eval_batch)?;
        if !val.is_finite() {
            return Err(Error::Diverged { epoch, step: order.len().div_ceil(cfg.batch_size), loss: val, lr: cfg.lr, suggested: cfg.lr / 10.0 });
        }
        let log = EpochLog { epoch, train_mse: loss_acc / count as f64, val_mse: val, val_teacher_mse: val_tf, wall_time_s: start.elapsed().as_secs_f64() };
        log::info!(
            "epoch {epoch}: train {:.5} val {:.5} (passthrough {:.5}){}",
            log.train_mse,
            log.val_mse,
            passthrough,
            val_tf.map(|v| format!(" teacher-forced {v:.5}")).unwrap_or_default()
        );
        epochs.push(log);
        if best.as_ref().is_none_or(|(_, b, _)| val < *b) {
            best = Some((epoch, val, model.params().clone()));
            if let Some(dir) = out_dir {
                model.save(&dir.join("best.bin"), serde_json::json!({ "epoch": epoch, "val_mse": val, "seed": cfg.seed }))?;
            }
        }
    }
    let (best_epoch, best_val, params) = best.expect("at least one epoch ran");
    *model.params_mut() = params;
    let report = TrainReport { epochs, best_epoch, best_val_mse: best_val, passthrough_mse_closed_form: passthrough_closed, passthrough_mse: passthrough };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("loss_curve.csv"), report.loss_curve_csv())?;
        std::fs::write(dir.join("train_log.csv"), report.train_log_csv())?;
    }
    Ok(report)
}
