//! Single-hidden-layer feed-forward network.
//!
//! Parameters use the augmented layout: `U1` is `(d+1) × k` with the hidden
//! biases in row 0, `U2` is `(k+1) × l` with the output biases in row 0.
//! Forward pass: `q = [1|X]·U1`, `h = softplus(q)` (gated by dropout),
//! `o = softmax([1|h]·U2)`.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Matrix, RandomStream, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DannParams {
    u1: Matrix,
    u2: Matrix,
}

impl DannParams {
    pub fn new(u1: Matrix, u2: Matrix) -> Result<Self> {
        if u1.rows() < 1 || u2.rows() != u1.cols() + 1 || u2.cols() == 0 {
            return Err(Error::shape("DannParams", u1.shape(), u2.shape()));
        }
        u1.check_finite("DannParams")?;
        u2.check_finite("DannParams")?;
        Ok(DannParams { u1, u2 })
    }

    /// Uniform init on `[-r, r)`, `r = sqrt(6 / (fan_in + fan_out))` per layer,
    /// drawing `U1` first and then `U2`.
    pub fn init(d: usize, k: usize, l: usize, stream: &mut RandomStream) -> Result<Self> {
        if d == 0 || k == 0 || l == 0 {
            return Err(Error::invalid(format!(
                "network sizes must be positive, got d={d} k={k} l={l}"
            )));
        }
        let r1 = libm::sqrt(6.0 / (d + k) as f64);
        let r2 = libm::sqrt(6.0 / (k + l) as f64);
        let u1 = stream.uniform_matrix(d + 1, k, -r1, r1)?;
        let u2 = stream.uniform_matrix(k + 1, l, -r2, r2)?;
        Ok(DannParams { u1, u2 })
    }

    pub fn u1(&self) -> &Matrix {
        &self.u1
    }

    pub fn u2(&self) -> &Matrix {
        &self.u2
    }

    pub fn input_dim(&self) -> usize {
        self.u1.rows() - 1
    }

    pub fn hidden(&self) -> usize {
        self.u1.cols()
    }

    pub fn classes(&self) -> usize {
        self.u2.cols()
    }

    /// Replaces `U1`, keeping its shape.
    pub fn set_u1(&mut self, u1: Matrix) -> Result<()> {
        if u1.shape() != self.u1.shape() {
            return Err(Error::shape("set_u1", self.u1.shape(), u1.shape()));
        }
        u1.check_finite("set_u1")?;
        self.u1 = u1;
        Ok(())
    }

    /// Weight-scaling form of dropout inference: scaling `h` by
    /// `1 - fraction` is the same as scaling the weight rows of `U2`.
    pub fn fold_dropout(&self, fraction: f64) -> DannParams {
        let keep = 1.0 - fraction;
        let mut u2 = self.u2.clone();
        let l = u2.cols();
        for v in &mut u2.data_mut()[l..] {
            *v *= keep;
        }
        DannParams {
            u1: self.u1.clone(),
            u2,
        }
    }
}

/// Elementwise `log(1 + exp(u))`.
pub fn softplus(u: &Matrix) -> Matrix {
    u.map_unchecked(softplus_scalar)
}

#[inline]
pub(crate) fn softplus_scalar(u: f64) -> f64 {
    if u > 30.0 {
        u + libm::log1p(libm::exp(-u))
    } else {
        libm::log1p(libm::exp(u))
    }
}

/// Derivative of softplus.
#[inline]
pub(crate) fn logistic(u: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-u))
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(v: &Matrix) -> Matrix {
    let mut out = v.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for x in row.iter_mut() {
            *x = libm::exp(*x - max);
            sum += *x;
        }
        for x in row.iter_mut() {
            *x /= sum;
        }
    }
    out
}

/// How dropout acts on the hidden layer in a forward pass.
pub enum Dropout<'a> {
    /// No masking and no scaling.
    Off,
    /// Draw a fresh mask keeping each unit with probability `1 - fraction`.
    Train {
        fraction: f64,
        stream: &'a mut RandomStream,
    },
    /// Scale `h` by `1 - fraction`.
    Inference { fraction: f64 },
    /// Use a caller-supplied 0/1 mask.
    Mask(&'a Matrix),
}

#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Pre-activations `[1|X]·U1`.
    pub q: Matrix,
    /// Hidden activations after dropout gating or scaling.
    pub h: Matrix,
    /// Output probabilities.
    pub o: Matrix,
    pub dropout_mask: Option<Matrix>,
    /// Inference-time factor applied to `h` (1 when unused).
    pub hidden_scale: f64,
}

pub fn forward(params: &DannParams, x: &Matrix, dropout: Dropout<'_>) -> Result<ForwardCache> {
    if x.cols() != params.input_dim() {
        return Err(Error::shape("forward", x.shape(), params.u1.shape()));
    }
    let q = x.augment_ones().matmul_unchecked(&params.u1);
    let mut h = softplus(&q);
    let (dropout_mask, hidden_scale) = match dropout {
        Dropout::Off => (None, 1.0),
        Dropout::Train { fraction, stream } => {
            check_fraction(fraction)?;
            let mask = stream.bernoulli_mask(h.rows(), h.cols(), 1.0 - fraction)?;
            h = h.hadamard(&mask)?;
            (Some(mask), 1.0)
        }
        Dropout::Inference { fraction } => {
            check_fraction(fraction)?;
            let keep = 1.0 - fraction;
            h = h.map_unchecked(|v| v * keep);
            (None, keep)
        }
        Dropout::Mask(mask) => {
            h = h.hadamard(mask)?;
            (Some(mask.clone()), 1.0)
        }
    };
    let o = softmax_rows(&h.augment_ones().matmul_unchecked(&params.u2));
    q.check_finite("forward")?;
    o.check_finite("forward")?;
    Ok(ForwardCache {
        q,
        h,
        o,
        dropout_mask,
        hidden_scale,
    })
}

fn check_fraction(fraction: f64) -> Result<()> {
    if (0.0..1.0).contains(&fraction) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "dropout fraction must lie in [0, 1), got {fraction}"
        )))
    }
}

/// Floor applied inside the log so a zero probability gives a large finite loss.
const PROB_FLOOR: f64 = 1e-300;

/// Mean negative log-likelihood `-(1/n) Σᵢ Σₖ Yᵢₖ log oᵢₖ`.
pub fn nll_loss(o: &Matrix, y: &Matrix) -> Result<f64> {
    if o.shape() != y.shape() {
        return Err(Error::shape("nll_loss", o.shape(), y.shape()));
    }
    if o.rows() == 0 {
        return Err(Error::EmptySampleSet("nll_loss"));
    }
    let total: f64 = o
        .as_slice()
        .iter()
        .zip(y.as_slice())
        .filter(|(_, &t)| t != 0.0)
        .map(|(&p, &t)| t * libm::log(p.max(PROB_FLOOR)))
        .sum();
    Ok(-total / o.rows() as f64)
}

/// `(l2/2)(‖W1‖² + ‖W2‖²)`, bias rows excluded.
pub fn l2_penalty(params: &DannParams, l2: f64) -> f64 {
    let sq = |m: &Matrix| m.as_slice()[m.cols()..].iter().map(|v| v * v).sum::<f64>();
    0.5 * l2 * (sq(&params.u1) + sq(&params.u2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub u1: Matrix,
    pub u2: Matrix,
}

/// Gradients of `nll_loss + l2_penalty` with respect to `U1` and `U2`.
pub fn backward(
    params: &DannParams,
    cache: &ForwardCache,
    x: &Matrix,
    y: &Matrix,
    l2: f64,
) -> Result<Gradients> {
    let n = x.rows();
    let (k, l) = (params.hidden(), params.classes());
    if x.cols() != params.input_dim() || cache.q.shape() != (n, k) || cache.h.shape() != (n, k) {
        return Err(Error::shape("backward", x.shape(), cache.q.shape()));
    }
    if cache.o.shape() != (n, l) || y.shape() != (n, l) {
        return Err(Error::shape("backward", cache.o.shape(), y.shape()));
    }
    if let Some(mask) = &cache.dropout_mask {
        if mask.shape() != (n, k) {
            return Err(Error::shape("backward", mask.shape(), (n, k)));
        }
    }
    let inv_n = 1.0 / n as f64;
    let d_out = cache.o.add_scaled(y, -1.0)?.map_unchecked(|v| v * inv_n);

    let mut g2 = cache.h.augment_ones().t_matmul_unchecked(&d_out);
    add_weight_decay(&mut g2, &params.u2, l2);

    // back through the output weights (bias row excluded)
    let w2 = params.u2.row_range(1, k + 1);
    let mut d_hidden = d_out.matmul_t_unchecked(&w2);
    {
        let data = d_hidden.data_mut();
        let q = cache.q.as_slice();
        match &cache.dropout_mask {
            Some(mask) => {
                for ((g, &m), &qv) in data.iter_mut().zip(mask.as_slice()).zip(q) {
                    *g *= m * logistic(qv);
                }
            }
            None => {
                let s = cache.hidden_scale;
                for (g, &qv) in data.iter_mut().zip(q) {
                    *g *= s * logistic(qv);
                }
            }
        }
    }
    let mut g1 = x.augment_ones().t_matmul_unchecked(&d_hidden);
    add_weight_decay(&mut g1, &params.u1, l2);

    g1.check_finite("backward")?;
    g2.check_finite("backward")?;
    Ok(Gradients { u1: g1, u2: g2 })
}

fn add_weight_decay(grad: &mut Matrix, weights: &Matrix, l2: f64) {
    if l2 == 0.0 {
        return;
    }
    let cols = weights.cols();
    for (g, w) in grad.data_mut()[cols..]
        .iter_mut()
        .zip(&weights.as_slice()[cols..])
    {
        *g += l2 * w;
    }
}

/// Momentum buffers, zero at the start of training.
#[derive(Debug, Clone, PartialEq)]
pub struct Velocity {
    pub u1: Matrix,
    pub u2: Matrix,
}

impl Velocity {
    pub fn zeros_like(params: &DannParams) -> Self {
        Velocity {
            u1: Matrix::zeros(params.u1.rows(), params.u1.cols()),
            u2: Matrix::zeros(params.u2.rows(), params.u2.cols()),
        }
    }
}

/// `v ← momentum·v − lr·g`, `U ← U + v` for both layers.
pub fn sgd_momentum_step(
    params: &mut DannParams,
    velocity: &mut Velocity,
    grads: &Gradients,
    lr: f64,
    momentum: f64,
) -> Result<()> {
    momentum_update(&mut params.u1, &mut velocity.u1, &grads.u1, lr, momentum)?;
    momentum_update(&mut params.u2, &mut velocity.u2, &grads.u2, lr, momentum)
}

pub(crate) fn momentum_update(
    param: &mut Matrix,
    velocity: &mut Matrix,
    grad: &Matrix,
    lr: f64,
    momentum: f64,
) -> Result<()> {
    if param.shape() != velocity.shape() || param.shape() != grad.shape() {
        return Err(Error::shape("sgd_momentum_step", param.shape(), grad.shape()));
    }
    for ((p, v), &g) in param
        .data_mut()
        .iter_mut()
        .zip(velocity.data_mut().iter_mut())
        .zip(grad.as_slice())
    {
        *v = momentum * *v - lr * g;
        *p += *v;
    }
    param.check_finite("sgd_momentum_step")?;
    velocity.check_finite("sgd_momentum_step")
}

/// Output probabilities with dropout off.
pub fn predict_proba(params: &DannParams, x: &Matrix) -> Result<Matrix> {
    forward(params, x, Dropout::Off).map(|c| c.o)
}

/// Index of the largest output per row; ties go to the lowest index.
pub fn predict(params: &DannParams, x: &Matrix) -> Result<Vec<usize>> {
    Ok(argmax_rows(&predict_proba(params, x)?))
}

pub fn argmax_rows(m: &Matrix) -> Vec<usize> {
    m.iter_rows()
        .map(|row| {
            let mut best = 0;
            for (i, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn one_hot(labels: &[usize], l: usize) -> Matrix {
        let mut m = Matrix::zeros(labels.len(), l);
        for (i, &c) in labels.iter().enumerate() {
            m.set(i, c, 1.0).unwrap();
        }
        m
    }

    fn random_params(seed: u64, d: usize, k: usize, l: usize) -> DannParams {
        let mut s = RandomStream::new(seed);
        DannParams::new(
            s.uniform_matrix(d + 1, k, -1.0, 1.0).unwrap(),
            s.uniform_matrix(k + 1, l, -1.0, 1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn softplus_limits() {
        let m = Matrix::from_rows(&[[0.0, 100.0, -100.0]]).unwrap();
        let s = softplus(&m);
        assert!((s.get(0, 0) - core::f64::consts::LN_2).abs() < 1e-15);
        assert!((s.get(0, 1) - 100.0).abs() < 1e-9);
        assert!(s.get(0, 2) > 0.0 && s.get(0, 2) < 1e-40);
    }

    #[test]
    fn softmax_cases() {
        let u = softmax_rows(&Matrix::from_rows(&[[0.0, 0.0, 0.0]]).unwrap());
        for &v in u.as_slice() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let a = softmax_rows(&Matrix::from_rows(&[[0.3, -1.2]]).unwrap());
        let b = softmax_rows(&Matrix::from_rows(&[[0.3 + 7.5, -1.2 + 7.5]]).unwrap());
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((x - y).abs() < 1e-15);
        }
        let c = softmax_rows(&Matrix::from_rows(&[[0.0, libm::log(3.0)]]).unwrap());
        assert!((c.get(0, 0) - 0.25).abs() < 1e-15);
        assert!((c.get(0, 1) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn constant_network() {
        let p = DannParams::new(Matrix::zeros(4, 5), Matrix::zeros(6, 3)).unwrap();
        let x = RandomStream::new(1).uniform_matrix(7, 3, -2.0, 2.0).unwrap();
        let c = forward(&p, &x, Dropout::Off).unwrap();
        assert!(c
            .h
            .as_slice()
            .iter()
            .all(|&v| (v - core::f64::consts::LN_2).abs() < 1e-15));
        assert!(c.o.as_slice().iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn hand_computed_forward() {
        // d = 2, k = 2, l = 2, x = [1, -1]
        let u1 = Matrix::from_rows(&[[0.1, -0.2], [0.5, 0.3], [-0.4, 0.6]]).unwrap();
        let u2 = Matrix::from_rows(&[[0.05, -0.05], [1.0, -1.0], [0.5, 0.25]]).unwrap();
        let p = DannParams::new(u1, u2).unwrap();
        let x = Matrix::from_rows(&[[1.0, -1.0]]).unwrap();
        let c = forward(&p, &x, Dropout::Off).unwrap();
        // q = [0.1 + 0.5 + 0.4, -0.2 + 0.3 - 0.6] = [1.0, -0.5]
        assert!((c.q.get(0, 0) - 1.0).abs() < 1e-12);
        assert!((c.q.get(0, 1) + 0.5).abs() < 1e-12);
        let h0 = libm::log(1.0 + libm::exp(1.0));
        let h1 = libm::log(1.0 + libm::exp(-0.5));
        assert!((c.h.get(0, 0) - h0).abs() < 1e-12);
        assert!((c.h.get(0, 1) - h1).abs() < 1e-12);
        let v0 = 0.05 + h0 + 0.5 * h1;
        let v1 = -0.05 - h0 + 0.25 * h1;
        let o0 = libm::exp(v0) / (libm::exp(v0) + libm::exp(v1));
        assert!((c.o.get(0, 0) - o0).abs() < 1e-12);
        assert!((c.o.get(0, 1) - (1.0 - o0)).abs() < 1e-12);
    }

    #[test]
    fn inference_is_deterministic_and_scaled() {
        let p = random_params(3, 4, 6, 3);
        let x = RandomStream::new(4).uniform_matrix(5, 4, -1.0, 1.0).unwrap();
        let a = forward(&p, &x, Dropout::Inference { fraction: 0.5 }).unwrap();
        let b = forward(&p, &x, Dropout::Inference { fraction: 0.5 }).unwrap();
        assert_eq!(a.o, b.o);
        let plain = forward(&p, &x, Dropout::Off).unwrap();
        for (s, h) in a.h.as_slice().iter().zip(plain.h.as_slice()) {
            assert_eq!(*s, 0.5 * h);
        }
        // folding the scale into U2 gives the same probabilities
        let folded = forward(&p.fold_dropout(0.5), &x, Dropout::Off).unwrap();
        for (u, v) in a.o.as_slice().iter().zip(folded.o.as_slice()) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn training_dropout_is_seeded() {
        let p = random_params(5, 3, 8, 2);
        let x = RandomStream::new(6).uniform_matrix(4, 3, -1.0, 1.0).unwrap();
        let run = || {
            let mut s = RandomStream::new(77);
            forward(
                &p,
                &x,
                Dropout::Train {
                    fraction: 0.5,
                    stream: &mut s,
                },
            )
            .unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.h, b.h);
        assert_eq!(a.dropout_mask, b.dropout_mask);
        assert!(a.h.as_slice().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn forward_rejects_bad_width() {
        let p = random_params(1, 3, 2, 2);
        assert!(forward(&p, &Matrix::zeros(2, 4), Dropout::Off).is_err());
    }

    #[test]
    fn loss_cases() {
        let y = one_hot(&[0, 1], 2);
        assert!(nll_loss(&y, &y).unwrap().abs() < 1e-12);
        let uniform = Matrix::filled(3, 10, 0.1);
        let y10 = one_hot(&[1, 4, 9], 10);
        assert!((nll_loss(&uniform, &y10).unwrap() - libm::log(10.0)).abs() < 1e-12);
        let o = Matrix::from_rows(&[[0.7, 0.3], [0.2, 0.8]]).unwrap();
        let expected = -(libm::log(0.7) + libm::log(0.8)) / 2.0;
        assert!((nll_loss(&o, &y).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.28990).abs() < 1e-5);
        let zero = Matrix::from_rows(&[[0.0, 1.0]]).unwrap();
        let floored = nll_loss(&zero, &one_hot(&[0], 2)).unwrap();
        assert!(floored.is_finite() && floored > 690.0);
    }

    fn total_loss(p: &DannParams, x: &Matrix, y: &Matrix, mask: &Matrix, l2: f64) -> f64 {
        let c = forward(p, x, Dropout::Mask(mask)).unwrap();
        nll_loss(&c.o, y).unwrap() + l2_penalty(p, l2)
    }

    fn fd_relative_error(seed: u64) -> f64 {
        let (d, k, l, n) = (5, 4, 3, 8);
        let p = random_params(seed, d, k, l);
        let mut s = RandomStream::new(seed + 500);
        let x = s.uniform_matrix(n, d, -1.0, 1.0).unwrap();
        let labels: Vec<usize> = (0..n).map(|i| (i + seed as usize) % l).collect();
        let y = one_hot(&labels, l);
        let mask = s.bernoulli_mask(n, k, 0.5).unwrap();
        let l2 = 0.003;
        let c = forward(&p, &x, Dropout::Mask(&mask)).unwrap();
        let g = backward(&p, &c, &x, &y, l2).unwrap();
        let h = 1e-5;
        let mut analytic = Vec::new();
        let mut numeric = Vec::new();
        for layer in 0..2 {
            let len = if layer == 0 {
                p.u1.as_slice().len()
            } else {
                p.u2.as_slice().len()
            };
            for idx in 0..len {
                let bump = |delta: f64| {
                    let mut q = p.clone();
                    let m = if layer == 0 { &mut q.u1 } else { &mut q.u2 };
                    m.data_mut()[idx] += delta;
                    total_loss(&q, &x, &y, &mask, l2)
                };
                numeric.push((bump(h) - bump(-h)) / (2.0 * h));
                let gm = if layer == 0 { &g.u1 } else { &g.u2 };
                analytic.push(gm.as_slice()[idx]);
            }
        }
        let scale = numeric.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-8);
        analytic
            .iter()
            .zip(&numeric)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            / scale
    }

    #[test]
    fn backward_matches_finite_differences() {
        for seed in 0..20 {
            let err = fd_relative_error(seed);
            assert!(err < 1e-6, "seed {seed}: relative error {err}");
        }
    }

    #[test]
    fn output_bias_gradient_vanishes_at_balanced_stationary_point() {
        let mut p = random_params(9, 3, 4, 2);
        p.u2 = Matrix::zeros(5, 2);
        let x = RandomStream::new(10).uniform_matrix(4, 3, -1.0, 1.0).unwrap();
        let y = one_hot(&[0, 1, 0, 1], 2);
        let c = forward(&p, &x, Dropout::Off).unwrap();
        let g = backward(&p, &c, &x, &y, 0.0).unwrap();
        assert!(g.u2.row(0).iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn l2_only_touches_weight_rows() {
        let p = random_params(11, 3, 4, 2);
        let x = RandomStream::new(12).uniform_matrix(6, 3, -1.0, 1.0).unwrap();
        let y = one_hot(&[0, 1, 1, 0, 1, 0], 2);
        let c = forward(&p, &x, Dropout::Off).unwrap();
        let g0 = backward(&p, &c, &x, &y, 0.0).unwrap();
        let g1 = backward(&p, &c, &x, &y, 0.003).unwrap();
        for (g_a, g_b, w) in [(&g0.u1, &g1.u1, &p.u1), (&g0.u2, &g1.u2, &p.u2)] {
            let cols = w.cols();
            for i in 0..w.as_slice().len() {
                let diff = g_b.as_slice()[i] - g_a.as_slice()[i];
                let expected = if i < cols { 0.0 } else { 0.003 * w.as_slice()[i] };
                assert!((diff - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn momentum_cases() {
        let p0 = random_params(13, 2, 3, 2);
        let g = Gradients {
            u1: Matrix::filled(3, 3, 1.0),
            u2: Matrix::filled(4, 2, -2.0),
        };
        let mut p = p0.clone();
        let mut v = Velocity::zeros_like(&p);
        sgd_momentum_step(&mut p, &mut v, &g, 0.1, 0.0).unwrap();
        for i in 0..9 {
            assert_eq!(p.u1.as_slice()[i], p0.u1.as_slice()[i] - 0.1 * 1.0);
        }

        // constant gradient: deltas -lr g, then -(lr + momentum lr) g
        let mut p = p0.clone();
        let mut v = Velocity::zeros_like(&p);
        sgd_momentum_step(&mut p, &mut v, &g, 0.02, 0.05).unwrap();
        let after1 = p.clone();
        sgd_momentum_step(&mut p, &mut v, &g, 0.02, 0.05).unwrap();
        for i in 0..9 {
            let d1 = after1.u1.as_slice()[i] - p0.u1.as_slice()[i];
            let d2 = p.u1.as_slice()[i] - after1.u1.as_slice()[i];
            assert!((d1 + 0.02).abs() < 1e-15);
            assert!((d2 + 0.021).abs() < 1e-15);
        }

        // zero gradient: velocity decays by the momentum factor
        let zero = Gradients {
            u1: Matrix::zeros(3, 3),
            u2: Matrix::zeros(4, 2),
        };
        let before = v.u1.get(0, 0);
        sgd_momentum_step(&mut p, &mut v, &zero, 0.02, 0.05).unwrap();
        assert!((v.u1.get(0, 0) - 0.05 * before).abs() < 1e-18);
    }

    #[test]
    fn argmax_ties_and_rows() {
        let m = Matrix::from_rows(&[[0.1, 0.8, 0.1], [0.5, 0.5, 0.0]]).unwrap();
        assert_eq!(argmax_rows(&m), vec![1, 0]);
    }

    #[test]
    fn predict_matches_argmax_loop() {
        let p = random_params(14, 3, 5, 4);
        let x = RandomStream::new(15).uniform_matrix(20, 3, -2.0, 2.0).unwrap();
        let o = predict_proba(&p, &x).unwrap();
        let preds = predict(&p, &x).unwrap();
        for r in 0..20 {
            let mut best = 0;
            for c in 1..4 {
                if o.get(r, c) > o.get(r, best) {
                    best = c;
                }
            }
            assert_eq!(preds[r], best);
        }
    }

    #[test]
    fn loss_decreases_on_separable_toy() {
        let mut s = RandomStream::new(21);
        let n = 40;
        let mut x = Matrix::zeros(n, 2);
        let mut labels = Vec::new();
        for i in 0..n {
            let c = i % 2;
            let off = if c == 0 { -1.5 } else { 1.5 };
            x.set(i, 0, off + 0.3 * s.standard_normal()).unwrap();
            x.set(i, 1, 0.3 * s.standard_normal()).unwrap();
            labels.push(c);
        }
        let y = one_hot(&labels, 2);
        let mut p = DannParams::init(2, 8, 2, &mut s).unwrap();
        let mut v = Velocity::zeros_like(&p);
        let mut losses = Vec::new();
        for _ in 0..50 {
            let c = forward(&p, &x, Dropout::Off).unwrap();
            losses.push(nll_loss(&c.o, &y).unwrap());
            let g = backward(&p, &c, &x, &y, 0.0).unwrap();
            sgd_momentum_step(&mut p, &mut v, &g, 0.1, 0.05).unwrap();
        }
        let ups = losses.windows(2).filter(|w| w[1] > w[0]).count();
        assert!(ups <= 5, "{ups} non-monotone steps");
        assert!(losses[49] < losses[0]);
    }

    proptest! {
        #[test]
        fn softmax_rows_sum_to_one(vals in proptest::collection::vec(-1e3f64..1e3, 1..12)) {
            let m = Matrix::row_vector(&vals).unwrap();
            let s: f64 = softmax_rows(&m).as_slice().iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }

        #[test]
        fn argmax_shift_invariant(vals in proptest::collection::vec(-50f64..50.0, 2..8), shift in -100f64..100.0) {
            let a = softmax_rows(&Matrix::row_vector(&vals).unwrap());
            let shifted: Vec<f64> = vals.iter().map(|v| v + shift).collect();
            let b = softmax_rows(&Matrix::row_vector(&shifted).unwrap());
            prop_assert_eq!(argmax_rows(&Matrix::row_vector(&vals).unwrap()), argmax_rows(&b));
            prop_assert_eq!(argmax_rows(&a), argmax_rows(&b));
        }
    }
}
