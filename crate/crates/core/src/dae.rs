//! Denoising auto-encoder pretraining with zero-masking noise.
//!
//! Encoder `h = softplus([1|x̃]·E)` with `E = [b_encᵀ; W_enc]`, linear decoder
//! `x̂ = [1|h]·D` with `D = [b_decᵀ; W_dec]` (untied). The loss is the mean
//! squared reconstruction error of the clean input, `(1/n) Σ ‖x - x̂‖²`.

use alloc::format;
use alloc::vec::Vec;

use crate::network::{logistic, softplus, DannParams};
use crate::{Error, Matrix, RandomStream, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    ZeroMasking,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub destruction_fraction: f64,
}

impl NoiseSpec {
    pub fn zero_masking(destruction_fraction: f64) -> Result<Self> {
        let spec = NoiseSpec {
            kind: NoiseKind::ZeroMasking,
            destruction_fraction,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if (0.0..=1.0).contains(&self.destruction_fraction) {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "destruction fraction must lie in [0, 1], got {}",
                self.destruction_fraction
            )))
        }
    }
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            kind: NoiseKind::ZeroMasking,
            destruction_fraction: 0.3,
        }
    }
}

/// Zeroes each entry independently with probability `destruction_fraction`.
/// Survivors are left untouched.
pub fn corrupt(x: &Matrix, spec: &NoiseSpec, stream: &mut RandomStream) -> Result<Matrix> {
    spec.validate()?;
    let keep = stream.bernoulli_mask(x.rows(), x.cols(), 1.0 - spec.destruction_fraction)?;
    x.hadamard(&keep)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DaeParams {
    encoder: Matrix,
    decoder: Matrix,
}

impl DaeParams {
    /// From augmented matrices: `encoder` is `(d+1) × k`, `decoder` is `(k+1) × d`,
    /// biases in row 0 of each.
    pub fn new(encoder: Matrix, decoder: Matrix) -> Result<Self> {
        let (d1, k) = encoder.shape();
        if d1 < 2 || k == 0 || decoder.shape() != (k + 1, d1 - 1) {
            return Err(Error::shape("DaeParams", encoder.shape(), decoder.shape()));
        }
        encoder.check_finite("DaeParams")?;
        decoder.check_finite("DaeParams")?;
        Ok(DaeParams { encoder, decoder })
    }

    pub fn from_parts(w_enc: &Matrix, b_enc: &[f64], w_dec: &Matrix, b_dec: &[f64]) -> Result<Self> {
        let encoder = Matrix::row_vector(b_enc)?.vstack(w_enc)?;
        let decoder = Matrix::row_vector(b_dec)?.vstack(w_dec)?;
        Self::new(encoder, decoder)
    }

    pub fn init(d: usize, k: usize, stream: &mut RandomStream) -> Result<Self> {
        if d == 0 || k == 0 {
            return Err(Error::invalid(format!(
                "auto-encoder sizes must be positive, got d={d} k={k}"
            )));
        }
        let r = libm::sqrt(6.0 / (d + k) as f64);
        let encoder = stream.uniform_matrix(d + 1, k, -r, r)?;
        let decoder = stream.uniform_matrix(k + 1, d, -r, r)?;
        Ok(DaeParams { encoder, decoder })
    }

    pub fn input_dim(&self) -> usize {
        self.encoder.rows() - 1
    }

    pub fn hidden(&self) -> usize {
        self.encoder.cols()
    }

    /// `[b_encᵀ; W_enc]`.
    pub fn encoder(&self) -> &Matrix {
        &self.encoder
    }

    /// `[b_decᵀ; W_dec]`.
    pub fn decoder(&self) -> &Matrix {
        &self.decoder
    }

    pub fn b_enc(&self) -> &[f64] {
        self.encoder.row(0)
    }

    pub fn w_enc(&self) -> Matrix {
        self.encoder.row_range(1, self.encoder.rows())
    }

    pub fn b_dec(&self) -> &[f64] {
        self.decoder.row(0)
    }

    pub fn w_dec(&self) -> Matrix {
        self.decoder.row_range(1, self.decoder.rows())
    }
}

/// Returns `(hidden, reconstruction)`.
pub fn dae_forward(params: &DaeParams, x_corrupt: &Matrix) -> Result<(Matrix, Matrix)> {
    if x_corrupt.cols() != params.input_dim() {
        return Err(Error::shape(
            "dae_forward",
            x_corrupt.shape(),
            params.encoder.shape(),
        ));
    }
    let q = x_corrupt.augment_ones().matmul_unchecked(&params.encoder);
    let hidden = softplus(&q);
    let recon = hidden.augment_ones().matmul_unchecked(&params.decoder);
    recon.check_finite("dae_forward")?;
    Ok((hidden, recon))
}

/// Mean over rows of the squared reconstruction error.
pub fn reconstruction_loss(recon: &Matrix, clean: &Matrix) -> Result<f64> {
    if recon.shape() != clean.shape() {
        return Err(Error::shape("reconstruction_loss", recon.shape(), clean.shape()));
    }
    if recon.rows() == 0 {
        return Err(Error::EmptySampleSet("reconstruction_loss"));
    }
    let sum: f64 = recon
        .as_slice()
        .iter()
        .zip(clean.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / recon.rows() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DaeGradients {
    pub encoder: Matrix,
    pub decoder: Matrix,
}

/// Loss and gradients for one batch of corrupted inputs and their clean
/// originals.
pub fn dae_gradients(
    params: &DaeParams,
    x_corrupt: &Matrix,
    x_clean: &Matrix,
) -> Result<(f64, DaeGradients)> {
    if x_corrupt.shape() != x_clean.shape() {
        return Err(Error::shape("dae_gradients", x_corrupt.shape(), x_clean.shape()));
    }
    let x_aug = x_corrupt.augment_ones();
    let q = x_aug.matmul_unchecked(&params.encoder);
    let hidden = softplus(&q);
    let h_aug = hidden.augment_ones();
    let recon = h_aug.matmul_unchecked(&params.decoder);
    let loss = reconstruction_loss(&recon, x_clean)?;

    let scale = 2.0 / x_clean.rows() as f64;
    let d_recon = recon.add_scaled(x_clean, -1.0)?.map_unchecked(|v| v * scale);
    let g_dec = h_aug.t_matmul_unchecked(&d_recon);
    let w_dec = params.decoder.row_range(1, params.decoder.rows());
    let mut d_hidden = d_recon.matmul_t_unchecked(&w_dec);
    for (g, &qv) in d_hidden.data_mut().iter_mut().zip(q.as_slice()) {
        *g *= logistic(qv);
    }
    let g_enc = x_aug.t_matmul_unchecked(&d_hidden);
    g_enc.check_finite("dae_gradients")?;
    g_dec.check_finite("dae_gradients")?;
    Ok((
        loss,
        DaeGradients {
            encoder: g_enc,
            decoder: g_dec,
        },
    ))
}

/// The default learning rate is well below the supervised one. The linear
/// decoder's curvature grows with `2·‖[1|h]‖²`, roughly 250 at 256 softplus
/// units, and SGD on the squared error diverges once `lr` times that exceeds 2.
#[derive(Debug, Clone, PartialEq)]
pub struct DaeTrainConfig {
    pub hidden: usize,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for DaeTrainConfig {
    fn default() -> Self {
        DaeTrainConfig {
            hidden: 256,
            lr: 0.001,
            epochs: 200,
            batch_size: 20,
        }
    }
}

impl DaeTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.batch_size == 0 {
            return Err(Error::invalid("hidden size and batch size must be positive"));
        }
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(Error::invalid(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DaeTrainOutput {
    pub params: DaeParams,
    /// Mean batch loss for each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Mini-batch SGD on the reconstruction loss with fresh corruption for every
/// presentation. The stream supplies the initial weights, the batch order and
/// the noise, in that order.
pub fn dae_train(
    x: &Matrix,
    noise: &NoiseSpec,
    cfg: &DaeTrainConfig,
    stream: &mut RandomStream,
) -> Result<DaeTrainOutput> {
    if x.rows() == 0 {
        return Err(Error::EmptySampleSet("dae_train"));
    }
    noise.validate()?;
    cfg.validate()?;
    let mut params = DaeParams::init(x.cols(), cfg.hidden, stream)?;
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let order = stream.permutation(x.rows());
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let clean = x.select_rows(batch);
            let noisy = corrupt(&clean, noise, stream)?;
            let (loss, grads) = dae_gradients(&params, &noisy, &clean).map_err(|e| match e {
                Error::NonFinite { .. } => Error::Divergence {
                    stage: "epoch",
                    index: epoch + 1,
                },
                other => other,
            })?;
            total += loss * batch.len() as f64;
            sgd(&mut params.encoder, &grads.encoder, cfg.lr);
            sgd(&mut params.decoder, &grads.decoder, cfg.lr);
        }
        let mean = total / x.rows() as f64;
        if !mean.is_finite() || !params.encoder.is_finite() || !params.decoder.is_finite() {
            return Err(Error::Divergence {
                stage: "epoch",
                index: epoch + 1,
            });
        }
        epoch_losses.push(mean);
    }
    Ok(DaeTrainOutput { params, epoch_losses })
}

fn sgd(param: &mut Matrix, grad: &Matrix, lr: f64) {
    for (p, g) in param.data_mut().iter_mut().zip(grad.as_slice()) {
        *p -= lr * g;
    }
}

/// Copies the encoder into `U1` (`b_enc` into row 0, `W_enc` below it).
/// `U2` is left as it was.
pub fn init_from_dae(dae: &DaeParams, params: &mut DannParams) -> Result<()> {
    if dae.encoder.shape() != params.u1().shape() {
        return Err(Error::shape(
            "init_from_dae",
            dae.encoder.shape(),
            params.u1().shape(),
        ));
    }
    params.set_u1(dae.encoder.clone())
}
