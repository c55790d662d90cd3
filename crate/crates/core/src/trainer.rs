//! Two-step DaNN training.
//!
//! Each iteration (one epoch):
//!
//! 1. shuffle the labeled training rows and sweep mini-batches, updating `U1`
//!    and `U2` by momentum SGD on the log-likelihood loss plus L2, with dropout;
//! 2. take one full-batch plain gradient step on `U1` against `γ·MMD²` between
//!    the pre-activations of all source and all target samples (dropout off).
//!
//! The NN baseline is the same loop without step 2. The Gaussian bandwidth is
//! fixed before training from the source features.

use alloc::format;
use alloc::vec::Vec;

use crate::dae::{dae_train, init_from_dae, DaeParams, DaeTrainConfig, NoiseSpec};
use crate::data::{one_hot, Dataset};
use crate::kernel::{median_heuristic_bandwidth, projected_mmd_sq, projected_mmd_sq_with_grad, KernelConfig};
use crate::network::{
    backward, forward, nll_loss, predict, sgd_momentum_step, DannParams, Dropout, Velocity,
};
use crate::{Error, Matrix, RandomStream, Result};

/// Stream id used for pretraining so it never disturbs the main stream.
pub const PRETRAIN_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Setting {
    /// Labeled source plus unlabeled target.
    Unsupervised,
    /// Additionally a few labeled target rows join the supervised loss.
    SemiSupervised,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Pretraining {
    None,
    /// Train a denoising auto-encoder on all source and target features first.
    Dae {
        noise: NoiseSpec,
        config: DaeTrainConfig,
    },
    /// Use an already trained encoder.
    Encoder(DaeParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub iterations: usize,
    pub momentum: f64,
    pub l2: f64,
    pub dropout_fraction: f64,
    pub gamma: f64,
    pub hidden: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub pretraining: Pretraining,
    pub setting: Setting,
    /// Explicit kernel bandwidth; `None` selects the median heuristic.
    pub bandwidth: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.02,
            iterations: 900,
            momentum: 0.05,
            l2: 0.003,
            dropout_fraction: 0.5,
            gamma: 1e3,
            hidden: 256,
            batch_size: 20,
            seed: 0,
            pretraining: Pretraining::None,
            setting: Setting::Unsupervised,
            bandwidth: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::invalid(format!("{what} out of range: {v}")));
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return bad("learning rate", self.lr);
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return bad("gamma", self.gamma);
        }
        if !(0.0..1.0).contains(&self.dropout_fraction) {
            return bad("dropout fraction", self.dropout_fraction);
        }
        if !(self.momentum >= 0.0) || !self.momentum.is_finite() {
            return bad("momentum", self.momentum);
        }
        if !(self.l2 >= 0.0) || !self.l2.is_finite() {
            return bad("l2", self.l2);
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        if self.hidden == 0 {
            return Err(Error::invalid("hidden width must be at least 1"));
        }
        if let Some(s) = self.bandwidth {
            KernelConfig::explicit(s)?;
        }
        Ok(())
    }
}

/// Datasets for one training run. All feature matrices must share a width.
#[derive(Debug, Clone, Copy)]
pub struct TrainInputs<'a> {
    /// Labeled source samples.
    pub source: &'a Dataset,
    /// Target samples; labels, if any, are ignored for training.
    pub target: &'a Dataset,
    /// Labeled target rows used in the semi-supervised setting.
    pub target_labeled: Option<&'a Dataset>,
    /// Held-out labeled rows for the final accuracy. When absent in the
    /// unsupervised setting, a labeled `target` is used instead.
    pub evaluation: Option<&'a Dataset>,
}

impl<'a> TrainInputs<'a> {
    pub fn new(source: &'a Dataset, target: &'a Dataset) -> Self {
        TrainInputs {
            source,
            target,
            target_labeled: None,
            evaluation: None,
        }
    }
}

/// Milliseconds since the start of a run; `dann-core` has no clock of its own.
pub trait Clock {
    fn elapsed_ms(&self) -> f64;
}

/// Always reports zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn elapsed_ms(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// 1-based.
    pub iteration: usize,
    /// Mean mini-batch log-likelihood loss over the epoch.
    pub j_nns: f64,
    /// MMD² between projected source and target after the supervised sweep.
    pub mmd_sq: f64,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub records: Vec<IterationRecord>,
    /// MMD² on the final `U1`.
    pub final_mmd_sq: f64,
    pub accuracy: Option<f64>,
    pub seed: u64,
    pub kernel: KernelConfig,
    pub config: TrainConfig,
    /// Parameters right after initialisation (and pretraining), before step 1.
    pub initial_params: DannParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Method {
    Dann,
    Nn,
}

pub fn train_dann(inputs: &TrainInputs<'_>, cfg: &TrainConfig) -> Result<(DannParams, TrainReport)> {
    run(inputs, cfg, Method::Dann, &NoClock)
}

pub fn train_dann_with_clock(
    inputs: &TrainInputs<'_>,
    cfg: &TrainConfig,
    clock: &dyn Clock,
) -> Result<(DannParams, TrainReport)> {
    run(inputs, cfg, Method::Dann, clock)
}

/// Baseline without the MMD step.
pub fn train_nn(inputs: &TrainInputs<'_>, cfg: &TrainConfig) -> Result<(DannParams, TrainReport)> {
    run(inputs, cfg, Method::Nn, &NoClock)
}

pub fn train_nn_with_clock(
    inputs: &TrainInputs<'_>,
    cfg: &TrainConfig,
    clock: &dyn Clock,
) -> Result<(DannParams, TrainReport)> {
    run(inputs, cfg, Method::Nn, clock)
}

fn diverged(iteration: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::NonFinite { .. } => Error::Divergence {
            stage: "iteration",
            index: iteration,
        },
        other => other,
    }
}

fn run(
    inputs: &TrainInputs<'_>,
    cfg: &TrainConfig,
    method: Method,
    clock: &dyn Clock,
) -> Result<(DannParams, TrainReport)> {
    cfg.validate()?;
    let source = inputs.source;
    let target = inputs.target;
    let source_labels = source.require_labels("source dataset")?;
    let d = source.dim();
    if target.dim() != d {
        return Err(Error::shape(
            "train",
            source.features().shape(),
            target.features().shape(),
        ));
    }

    let (sup_x, sup_labels, classes) = match (cfg.setting, inputs.target_labeled) {
        (Setting::Unsupervised, _) => (
            source.features().clone(),
            source_labels.to_vec(),
            source.class_count(),
        ),
        (Setting::SemiSupervised, Some(extra)) => {
            let extra_labels = extra.require_labels("labeled target dataset")?;
            let x = source.features().vstack(extra.features())?;
            let labels = source_labels.iter().chain(extra_labels).copied().collect();
            (x, labels, source.class_count().max(extra.class_count()))
        }
        (Setting::SemiSupervised, None) => {
            return Err(Error::MissingLabels(
                "semi-supervised setting (labeled target rows)",
            ))
        }
    };
    if classes == 0 {
        return Err(Error::invalid("no classes in the labeled training data"));
    }
    let sup_y = one_hot(&sup_labels, classes)?;

    let kernel = match cfg.bandwidth {
        Some(s) => KernelConfig::explicit(s)?,
        None => median_heuristic_bandwidth(source.features())?,
    };
    let zs = source.features().augment_ones();
    let zt = target.features().augment_ones();

    let mut stream = RandomStream::new(cfg.seed);
    let mut params = DannParams::init(d, cfg.hidden, classes, &mut stream)?;
    match &cfg.pretraining {
        Pretraining::None => {}
        Pretraining::Dae { noise, config } => {
            let unlabeled = source.features().vstack(target.features())?;
            let config = DaeTrainConfig {
                hidden: cfg.hidden,
                ..config.clone()
            };
            let mut dae_stream = RandomStream::substream(cfg.seed, PRETRAIN_STREAM);
            let out = dae_train(&unlabeled, noise, &config, &mut dae_stream)?;
            init_from_dae(&out.params, &mut params)?;
        }
        Pretraining::Encoder(dae) => init_from_dae(dae, &mut params)?,
    }
    let initial_params = params.clone();
    let mut velocity = Velocity::zeros_like(&params);
    let apply_mmd = method == Method::Dann && cfg.gamma != 0.0;
    let n = sup_x.rows();
    let mut records = Vec::with_capacity(cfg.iterations);

    for it in 1..=cfg.iterations {
        let on_err = diverged(it);
        let order = stream.permutation(n);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let xb = sup_x.select_rows(batch);
            let yb = sup_y.select_rows(batch);
            let dropout = if cfg.dropout_fraction > 0.0 {
                Dropout::Train {
                    fraction: cfg.dropout_fraction,
                    stream: &mut stream,
                }
            } else {
                Dropout::Off
            };
            let cache = forward(&params, &xb, dropout).map_err(&on_err)?;
            let loss = nll_loss(&cache.o, &yb)?;
            if !loss.is_finite() {
                return Err(on_err(Error::NonFinite { op: "nll_loss" }));
            }
            loss_sum += loss * batch.len() as f64;
            let grads = backward(&params, &cache, &xb, &yb, cfg.l2).map_err(&on_err)?;
            sgd_momentum_step(&mut params, &mut velocity, &grads, cfg.lr, cfg.momentum).map_err(&on_err)?;
        }

        let mmd_sq = if apply_mmd {
            let step = projected_mmd_sq_with_grad(&zs, &zt, params.u1(), &kernel).map_err(&on_err)?;
            let u1 = params
                .u1()
                .add_scaled(&step.grad, -cfg.lr * cfg.gamma)
                .map_err(&on_err)?;
            params.set_u1(u1)?;
            step.value.max(0.0)
        } else {
            projected_mmd_sq(&zs, &zt, params.u1(), &kernel).map_err(&on_err)?
        };

        records.push(IterationRecord {
            iteration: it,
            j_nns: loss_sum / n as f64,
            mmd_sq,
            elapsed_ms: clock.elapsed_ms(),
        });
    }

    let final_mmd_sq = projected_mmd_sq(&zs, &zt, params.u1(), &kernel)?;
    let params = params.fold_dropout(cfg.dropout_fraction);
    let eval_set = match (inputs.evaluation, cfg.setting) {
        (Some(e), _) => Some(e),
        (None, Setting::Unsupervised) if target.labels().is_some() => Some(target),
        _ => None,
    };
    let accuracy = eval_set.map(|e| evaluate(&params, e)).transpose()?;

    let report = TrainReport {
        records,
        final_mmd_sq,
        accuracy,
        seed: cfg.seed,
        kernel,
        config: cfg.clone(),
        initial_params,
    };
    Ok((params, report))
}

/// Fraction of rows whose predicted class equals the label.
pub fn evaluate(params: &DannParams, test: &Dataset) -> Result<f64> {
    let labels = test.require_labels("evaluation dataset")?;
    if labels.is_empty() {
        return Err(Error::EmptySampleSet("evaluate"));
    }
    let preds = predict(params, test.features())?;
    Ok(accuracy(&preds, labels))
}

pub fn accuracy(predictions: &[usize], labels: &[usize]) -> f64 {
    let hits = predictions.iter().zip(labels).filter(|(p, y)| p == y).count();
    hits as f64 / labels.len() as f64
}

/// First `per_class` rows of each class (in dataset order) and the rest.
#[derive(Debug, Clone)]
pub struct SemiSupervisedSplit {
    pub selected: Dataset,
    pub remainder: Option<Dataset>,
    pub selected_rows: Vec<usize>,
    pub remainder_rows: Vec<usize>,
}

pub fn semi_supervised_select(pool: &Dataset, per_class: usize) -> Result<SemiSupervisedSplit> {
    let labels = pool.require_labels("target pool")?;
    let mut taken = alloc::vec![0usize; pool.class_count()];
    let mut selected_rows = Vec::new();
    let mut remainder_rows = Vec::new();
    for (i, &c) in labels.iter().enumerate() {
        if taken[c] < per_class {
            taken[c] += 1;
            selected_rows.push(i);
        } else {
            remainder_rows.push(i);
        }
    }
    if let Some((class, &available)) = taken.iter().enumerate().find(|(_, &t)| t < per_class) {
        return Err(Error::InsufficientClass {
            class,
            available,
            required: per_class,
        });
    }
    let selected = pool.select(&selected_rows)?;
    let remainder = if remainder_rows.is_empty() {
        None
    } else {
        Some(pool.select(&remainder_rows)?)
    };
    Ok(SemiSupervisedSplit {
        selected,
        remainder,
        selected_rows,
        remainder_rows,
    })
}

/// Projected MMD² of `params` between two sample sets (unaugmented features).
pub fn domain_mmd_sq(params: &DannParams, xs: &Matrix, xt: &Matrix, kernel: &KernelConfig) -> Result<f64> {
    projected_mmd_sq(&xs.augment_ones(), &xt.augment_ones(), params.u1(), kernel)
}
