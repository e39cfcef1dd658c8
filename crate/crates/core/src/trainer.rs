//! Optimization loop: initialization, RMSprop with gradient clipping and
//! annealed gradient noise, dropout, minibatching and epoch scheduling.
//!
//! Every update runs, in order: minibatch gradient (mean over sentences),
//! global-norm clipping, Gaussian noise, RMSprop.
//!
//! Per-sentence gradients in a minibatch are computed in parallel but summed
//! sequentially in batch order, and every random draw comes from a generator
//! seeded from `(seed, update, position)`. Training is therefore
//! bit-reproducible for a given seed regardless of the thread count.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::autodiff::{compute_gradients, GradientContext, ParamSet};
use crate::decoder::decode;
use crate::encoder::{encode, score_sentence, DropoutPlan, FeatureMatrix, ModelDims, ModelParams, ModelVars, ScoringMode};
use crate::error::{Error, Result};
use crate::losses::GoldTarget;
use crate::projection::subsample;
use crate::tensor::DenseTensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LossMode {
    #[serde(rename = "xent")]
    CrossEntropy,
    Mse,
}

impl LossMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            LossMode::CrossEntropy => "xent",
            LossMode::Mse => "mse",
        }
    }
}

/// When training ends and which model is returned.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schedule {
    /// Stop once dev UAS has not improved for `patience` epochs and return
    /// the best-dev model.
    EarlyStopping { patience: usize, max_epochs: usize },
    /// Run exactly this many epochs and return the final model.
    FixedEpochs(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub loss: LossMode,
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    /// Noise variance at update `t` is `1 / (1 + t)^noise_exponent`.
    pub noise_exponent: f64,
    pub gradient_noise: bool,
    pub clip: f64,
    pub dropout_hidden: f64,
    pub dropout_input: f64,
    pub hidden: usize,
    pub layers: usize,
    pub schedule: Schedule,
    pub seed: u64,
    pub subsample: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            loss: LossMode::CrossEntropy,
            learning_rate: 0.1,
            decay: 0.9,
            epsilon: 1e-8,
            batch_size: 64,
            noise_exponent: 0.55,
            gradient_noise: true,
            clip: 15.0,
            dropout_hidden: 0.5,
            dropout_input: 0.2,
            hidden: 100,
            layers: 4,
            schedule: Schedule::EarlyStopping {
                patience: 5,
                max_epochs: 100,
            },
            seed: 0,
            subsample: None,
        }
    }
}

impl TrainConfig {
    /// Treebank training with early stopping on dev UAS.
    pub fn monolingual(loss: LossMode) -> Self {
        TrainConfig {
            loss,
            ..TrainConfig::default()
        }
    }

    /// Training on projected data for a fixed number of epochs: 6 with cross
    /// entropy, 5 with mean squared error.
    pub fn cross_lingual(loss: LossMode) -> Self {
        let epochs = match loss {
            LossMode::CrossEntropy => 6,
            LossMode::Mse => 5,
        };
        TrainConfig {
            loss,
            schedule: Schedule::FixedEpochs(epochs),
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be in [0, 1), got {v}")))
            }
        };
        unit("dropout_hidden", self.dropout_hidden)?;
        unit("dropout_input", self.dropout_input)?;
        unit("decay", self.decay)?;
        if !(self.learning_rate > 0.0) || !(self.clip > 0.0) || !(self.epsilon > 0.0) {
            return Err(Error::Config(
                "learning rate, clip threshold and epsilon must be positive".into(),
            ));
        }
        if self.batch_size == 0 || self.hidden == 0 || self.layers == 0 {
            return Err(Error::Config("batch size, hidden and layers must be >= 1".into()));
        }
        if self.subsample == Some(0) {
            return Err(Error::Config("subsample size must be >= 1".into()));
        }
        match self.schedule {
            Schedule::FixedEpochs(0) => Err(Error::Config("epoch count must be >= 1".into())),
            Schedule::EarlyStopping { patience, max_epochs } if patience == 0 || max_epochs == 0 => {
                Err(Error::Config("patience and max_epochs must be >= 1".into()))
            }
            _ => Ok(()),
        }
    }
}

/// A training sentence with its target.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingExample {
    pub features: FeatureMatrix,
    pub target: GoldTarget,
}

/// A sentence with gold heads for evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalExample {
    pub features: FeatureMatrix,
    pub heads: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dev_uas: Option<f64>,
    pub wall_time_secs: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: ModelParams,
    pub metrics: Vec<EpochMetrics>,
    /// 1-based epoch whose parameters were returned.
    pub selected_epoch: usize,
}

/// Running RMSprop statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub mean_square: Vec<DenseTensor>,
    pub step: u64,
}

impl OptimizerState {
    pub fn new(params: &ParamSet) -> Self {
        OptimizerState {
            mean_square: params
                .tensors()
                .iter()
                .map(|t| DenseTensor::zeros(t.shape()))
                .collect(),
            step: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RmsProp {
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
}

impl Default for RmsProp {
    fn default() -> Self {
        RmsProp {
            learning_rate: 0.1,
            decay: 0.9,
            epsilon: 1e-8,
        }
    }
}

impl RmsProp {
    /// `E ← γE + (1−γ)g²`, `θ ← θ − α g / √(E + ε)`.
    pub fn step(&self, params: &mut [DenseTensor], grads: &[DenseTensor], state: &mut OptimizerState) -> Result<()> {
        if params.len() != grads.len() || params.len() != state.mean_square.len() {
            return Err(Error::shape("parameter, gradient and state counts differ"));
        }
        for ((p, g), e) in params.iter().zip(grads).zip(&state.mean_square) {
            if p.shape() != g.shape() || p.shape() != e.shape() {
                return Err(Error::shape(format!(
                    "parameter {:?} vs gradient {:?}",
                    p.shape(),
                    g.shape()
                )));
            }
        }
        for ((p, g), e) in params.iter_mut().zip(grads).zip(state.mean_square.iter_mut()) {
            for ((theta, &grad), ms) in p.data_mut().iter_mut().zip(g.data()).zip(e.data_mut()) {
                *ms = self.decay * *ms + (1.0 - self.decay) * grad * grad;
                *theta -= self.learning_rate * grad / (*ms + self.epsilon).sqrt();
                if !theta.is_finite() {
                    return Err(Error::Numeric {
                        op: "rmsprop".into(),
                        detail: format!("update produced {theta}"),
                    });
                }
            }
        }
        state.step += 1;
        Ok(())
    }
}

/// Uniform samples on `±√(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<R: Rng>(shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut R) -> DenseTensor {
    assert!(fan_in >= 1 && fan_out >= 1, "fans must be positive");
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let mut t = DenseTensor::zeros(shape);
    for v in t.data_mut() {
        *v = rng.random_range(-bound..=bound);
    }
    t
}

pub fn glorot_init(shape: &[usize], fan_in: usize, fan_out: usize, seed: u64) -> DenseTensor {
    glorot_uniform(shape, fan_in, fan_out, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Glorot-initialized weights, zero biases except the forget gate at 1.
pub fn init_model(dims: ModelDims, seed: u64) -> Result<ModelParams> {
    let mut model = ModelParams::zeros(dims)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for layer in &mut model.layers {
        for p in layer.directions_mut() {
            let (rows, cols) = (p.w_input.rows(), p.w_input.cols());
            for w in [&mut p.w_input, &mut p.w_forget, &mut p.w_output, &mut p.w_cell] {
                *w = glorot_uniform(&[rows, cols], cols, rows, &mut rng);
            }
            p.b_forget = DenseTensor::filled(&[rows], 1.0);
        }
    }
    let d = model.output_weights.len();
    model.output_weights = glorot_uniform(&[d], d, 1, &mut rng);
    Ok(model)
}

/// Rescales all gradients so their joint L2 norm is at most `threshold`.
/// Returns the norm before clipping.
pub fn clip_gradients(grads: &mut [DenseTensor], threshold: f64) -> f64 {
    let norm = grads.iter().map(DenseTensor::squared_norm).sum::<f64>().sqrt();
    if norm > threshold {
        let factor = threshold / norm;
        for g in grads.iter_mut() {
            for v in g.data_mut() {
                *v *= factor;
            }
        }
    }
    norm
}

/// Noise variance after `t` updates.
pub fn noise_variance(t: u64, exponent: f64) -> f64 {
    1.0 / (1.0 + t as f64).powf(exponent)
}

/// Adds `N(0, 1/(1+t)^exponent)` noise to every gradient component.
pub fn add_gradient_noise<R: Rng>(grads: &mut [DenseTensor], t: u64, exponent: f64, rng: &mut R) {
    let normal = Normal::new(0.0, noise_variance(t, exponent).sqrt()).expect("finite std");
    for g in grads.iter_mut() {
        for v in g.data_mut() {
            *v += normal.sample(rng);
        }
    }
}

/// Inverted-dropout mask: 0 with probability `p`, else `1/(1−p)`.
pub fn dropout_mask<R: Rng>(shape: &[usize], p: f64, rng: &mut R) -> DenseTensor {
    let keep = 1.0 / (1.0 - p);
    let mut mask = DenseTensor::zeros(shape);
    for v in mask.data_mut() {
        *v = if rng.random::<f64>() < p { 0.0 } else { keep };
    }
    mask
}

pub fn apply_dropout(t: &DenseTensor, p: f64, seed: u64, train_mode: bool) -> Result<DenseTensor> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Argument(format!("dropout probability {p} not in [0, 1)")));
    }
    if !train_mode || p == 0.0 {
        return Ok(t.clone());
    }
    let mask = dropout_mask(t.shape(), p, &mut ChaCha8Rng::seed_from_u64(seed));
    t.zip_map(&mask, |a, m| a * m)
}

/// Share of tokens whose predicted head equals the gold head.
pub fn attachment_score(gold: &[Vec<usize>], predicted: &[Vec<usize>]) -> Result<f64> {
    if gold.len() != predicted.len() {
        return Err(Error::data(
            "treebank",
            format!("{} gold vs {} predicted sentences", gold.len(), predicted.len()),
        ));
    }
    let mut total = 0usize;
    let mut correct = 0usize;
    for (k, (g, p)) in gold.iter().zip(predicted).enumerate() {
        if g.len() != p.len() {
            return Err(Error::data(
                format!("sentence {}", k + 1),
                format!("{} gold vs {} predicted tokens", g.len(), p.len()),
            ));
        }
        total += g.len();
        correct += g.iter().zip(p).filter(|(a, b)| a == b).count();
    }
    if total == 0 {
        return Err(Error::Argument("UAS of an empty treebank is undefined".into()));
    }
    Ok(correct as f64 / total as f64)
}

/// Decodes every sentence with `model`.
pub fn predict_heads(model: &ModelParams, sentences: &[FeatureMatrix]) -> Result<Vec<Vec<usize>>> {
    sentences
        .par_iter()
        .map(|s| Ok(decode(&score_sentence(s, model, ScoringMode::Eval)?).into_heads()))
        .collect()
}

pub fn evaluate_uas(model: &ModelParams, treebank: &[EvalExample]) -> Result<f64> {
    let features: Vec<FeatureMatrix> = treebank.iter().map(|e| e.features.clone()).collect();
    let predicted = predict_heads(model, &features)?;
    let gold: Vec<Vec<usize>> = treebank.iter().map(|e| e.heads.clone()).collect();
    attachment_score(&gold, &predicted)
}

fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    // splitmix64 finalizer over the combined words
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Loss and gradients of one training sentence.
pub fn example_gradients(
    params: &ParamSet,
    dims: &ModelDims,
    example: &TrainingExample,
    loss: LossMode,
    mode: ScoringMode,
) -> Result<GradientContext> {
    compute_gradients(params, |tape, vars| {
        let model = ModelVars::new(dims, vars)?;
        let scores = encode(tape, &model, &example.features, mode)?;
        match (&example.target, loss) {
            (GoldTarget::Tree(tree), LossMode::CrossEntropy) => tape.cross_entropy(scores, tree.heads()),
            (GoldTarget::Scores(target), LossMode::Mse) => tape.mse(scores, target.values()),
            (GoldTarget::Tree(tree), LossMode::Mse) => {
                let target = crate::decoder::heads_to_matrix(tree.heads())?;
                tape.mse(scores, &target)
            }
            (GoldTarget::Scores(_), LossMode::CrossEntropy) => Err(Error::Config(
                "cross entropy needs tree targets; decode score targets first".into(),
            )),
        }
    })
}

/// Replaces score targets by their maximum spanning trees (early decoding).
pub fn decode_targets(data: &[TrainingExample]) -> Vec<TrainingExample> {
    data.iter()
        .map(|ex| TrainingExample {
            features: ex.features.clone(),
            target: match &ex.target {
                GoldTarget::Scores(s) => GoldTarget::Tree(crate::decoder::decode(s)),
                tree => tree.clone(),
            },
        })
        .collect()
}

/// Trains a model on `data`, optionally monitoring `dev`.
pub fn train(data: &[TrainingExample], dev: Option<&[EvalExample]>, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Config("no training data".into()));
    }
    let dev = dev.filter(|d| !d.is_empty());
    let (patience, max_epochs) = match cfg.schedule {
        Schedule::EarlyStopping { patience, max_epochs } => {
            if dev.is_none() {
                return Err(Error::Config("early stopping needs a non-empty dev set".into()));
            }
            (Some(patience), max_epochs)
        }
        Schedule::FixedEpochs(n) => (None, n),
    };
    let width = data[0].features.width();
    for (k, ex) in data.iter().enumerate() {
        if ex.features.width() != width || ex.target.len() != ex.features.words() {
            return Err(Error::data(
                format!("training sentence {}", k + 1),
                "inconsistent feature width or target length",
            ));
        }
    }
    let data: Vec<TrainingExample> = match cfg.subsample {
        Some(n) => subsample(data, n, cfg.seed),
        None => data.to_vec(),
    };

    let dims = ModelDims {
        features: width,
        hidden: cfg.hidden,
        layers: cfg.layers,
    };
    let mut params = init_model(dims, cfg.seed)?.to_param_set();
    let mut state = OptimizerState::new(&params);
    let optimizer = RmsProp {
        learning_rate: cfg.learning_rate,
        decay: cfg.decay,
        epsilon: cfg.epsilon,
    };
    let mut order_rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, u64::MAX, 0));
    let mut order: Vec<usize> = (0..data.len()).collect();

    let mut metrics = Vec::new();
    let mut best: Option<(f64, usize, ParamSet)> = None;
    let started = Instant::now();

    for epoch in 1..=max_epochs {
        order.shuffle(&mut order_rng);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let t = state.step;
            let results: Vec<Result<GradientContext>> = batch
                .par_iter()
                .enumerate()
                .map(|(pos, &idx)| {
                    let mode = ScoringMode::Train(DropoutPlan {
                        input: cfg.dropout_input,
                        hidden: cfg.dropout_hidden,
                        seed: mix_seed(cfg.seed, t, pos as u64),
                    });
                    example_gradients(&params, &dims, &data[idx], cfg.loss, mode)
                })
                .collect();
            let mut grads: Vec<DenseTensor> =
                params.tensors().iter().map(|p| DenseTensor::zeros(p.shape())).collect();
            for r in results {
                let ctx = r.map_err(|e| divergence(e, epoch))?;
                loss_sum += ctx.loss;
                for (acc, g) in grads.iter_mut().zip(&ctx.grads) {
                    acc.add_assign(g);
                }
            }
            let scale = 1.0 / batch.len() as f64;
            for g in grads.iter_mut() {
                for v in g.data_mut() {
                    *v *= scale;
                }
            }
            clip_gradients(&mut grads, cfg.clip);
            if cfg.gradient_noise {
                let mut noise_rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, t, u64::MAX));
                add_gradient_noise(&mut grads, t, cfg.noise_exponent, &mut noise_rng);
            }
            optimizer
                .step(params.tensors_mut(), &grads, &mut state)
                .map_err(|e| divergence(e, epoch))?;
        }

        let model = ModelParams::from_param_set(dims, &params)?;
        let dev_uas = match dev {
            Some(d) => Some(evaluate_uas(&model, d)?),
            None => None,
        };
        metrics.push(EpochMetrics {
            epoch,
            train_loss: loss_sum / data.len() as f64,
            dev_uas,
            wall_time_secs: started.elapsed().as_secs_f64(),
        });

        if let (Some(patience), Some(uas)) = (patience, dev_uas) {
            let improved = best.as_ref().is_none_or(|(b, _, _)| uas > *b);
            if improved {
                best = Some((uas, epoch, params.clone()));
            } else if epoch - best.as_ref().map(|b| b.1).unwrap_or(0) >= patience {
                break;
            }
        }
    }

    let (selected_epoch, params) = match best {
        Some((_, epoch, p)) => (epoch, p),
        None => (metrics.len(), params),
    };
    Ok(TrainOutcome {
        model: ModelParams::from_param_set(dims, &params)?,
        metrics,
        selected_epoch,
    })
}

fn divergence(err: Error, epoch: usize) -> Error {
    match err {
        Error::Numeric { op, detail } => Error::Numeric {
            op,
            detail: format!("training diverged in epoch {epoch}: {detail}"),
        },
        other => other,
    }
}
