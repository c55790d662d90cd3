//! Gaussian kernel and the biased (V-statistic) maximum mean discrepancy.
//!
//! `k(x, y) = exp(-‖x - y‖² / 2s²)` with `s` the kernel standard deviation.
//! The squared MMD between samples `Xs` (n_s rows) and `Xt` (n_t rows) is
//!
//! ```text
//! MMD² = ΣΣ k(xs, xs') / n_s² + ΣΣ k(xt, xt') / n_t² - 2 ΣΣ k(xs, xt) / (n_s n_t)
//! ```
//!
//! computed here from the entry sums of the three gram matrices.
//!
//! For training, MMD² is taken between the first-layer pre-activations
//! `q = U1ᵀ x̃` of augmented source and target samples (leading 1 for the bias),
//! and [`projected_mmd_sq_with_grad`] returns its exact gradient with respect
//! to `U1`.

use alloc::format;
use alloc::vec::Vec;

use crate::matrix::{dot, sq_dist};
use crate::{Error, Matrix, Result};

/// Where a bandwidth came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandwidthSource {
    Explicit,
    MedianHeuristic,
}

impl BandwidthSource {
    pub fn as_str(self) -> &'static str {
        match self {
            BandwidthSource::Explicit => "explicit",
            BandwidthSource::MedianHeuristic => "median_heuristic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConfig {
    bandwidth: f64,
    source: BandwidthSource,
}

impl KernelConfig {
    /// Kernel with an explicit standard deviation `s > 0`.
    pub fn explicit(bandwidth: f64) -> Result<Self> {
        Self::new(bandwidth, BandwidthSource::Explicit)
    }

    fn new(bandwidth: f64, source: BandwidthSource) -> Result<Self> {
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(Error::DegenerateBandwidth(format!(
                "bandwidth must be positive and finite, got {bandwidth}"
            )));
        }
        Ok(KernelConfig { bandwidth, source })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn source(&self) -> BandwidthSource {
        self.source
    }

    #[inline]
    fn eval_sq(&self, sq_distance: f64) -> f64 {
        libm::exp(-sq_distance / (2.0 * self.bandwidth * self.bandwidth))
    }
}

pub fn gaussian_kernel(x: &[f64], y: &[f64], cfg: &KernelConfig) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::shape("gaussian_kernel", (1, x.len()), (1, y.len())));
    }
    Ok(cfg.eval_sq(sq_dist(x, y)))
}

/// Kernel values between every row of one sample set and every row of another.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    values: Matrix,
}

impl GramMatrix {
    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn left_count(&self) -> usize {
        self.values.rows()
    }

    pub fn right_count(&self) -> usize {
        self.values.cols()
    }

    /// Sum of all entries.
    pub fn total(&self) -> f64 {
        self.values.as_slice().iter().sum()
    }
}

pub fn gram(a: &Matrix, b: &Matrix, cfg: &KernelConfig) -> Result<GramMatrix> {
    if a.cols() != b.cols() {
        return Err(Error::shape("gram", a.shape(), b.shape()));
    }
    let mut values = Matrix::zeros(a.rows(), b.rows());
    for i in 0..a.rows() {
        let ai = a.row(i);
        let out = values.row_mut(i);
        for (j, o) in out.iter_mut().enumerate() {
            *o = cfg.eval_sq(sq_dist(ai, b.row(j)));
        }
    }
    Ok(GramMatrix { values })
}

/// Biased squared MMD, clamped at zero.
pub fn mmd_sq_biased(xs: &Matrix, xt: &Matrix, cfg: &KernelConfig) -> Result<f64> {
    mmd_sq_unclamped(xs, xt, cfg).map(|v| v.max(0.0))
}

pub(crate) fn mmd_sq_unclamped(xs: &Matrix, xt: &Matrix, cfg: &KernelConfig) -> Result<f64> {
    if xs.rows() == 0 {
        return Err(Error::EmptySampleSet("mmd_sq_biased (source)"));
    }
    if xt.rows() == 0 {
        return Err(Error::EmptySampleSet("mmd_sq_biased (target)"));
    }
    if xs.cols() != xt.cols() {
        return Err(Error::shape("mmd_sq_biased", xs.shape(), xt.shape()));
    }
    let ns = xs.rows() as f64;
    let nt = xt.rows() as f64;
    let ss = gram(xs, xs, cfg)?.total();
    let tt = gram(xt, xt, cfg)?.total();
    let st = gram(xs, xt, cfg)?.total();
    Ok(ss / (ns * ns) + tt / (nt * nt) - 2.0 * st / (ns * nt))
}

/// `s = sqrt(MSD / 2)` where MSD is the median squared Euclidean distance over
/// all unordered pairs of rows. For an even number of pairs the lower median
/// is used.
pub fn median_heuristic_bandwidth(xs: &Matrix) -> Result<KernelConfig> {
    let n = xs.rows();
    if n < 2 {
        return Err(Error::DegenerateBandwidth(format!(
            "median heuristic needs at least 2 samples, got {n}"
        )));
    }
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            dists.push(sq_dist(xs.row(i), xs.row(j)));
        }
    }
    let mid = (dists.len() - 1) / 2;
    let (_, &mut msd, _) = dists.select_nth_unstable_by(mid, f64::total_cmp);
    if !(msd > 0.0) {
        return Err(Error::DegenerateBandwidth(
            "median squared distance between samples is zero".into(),
        ));
    }
    KernelConfig::new(libm::sqrt(msd / 2.0), BandwidthSource::MedianHeuristic)
}

/// Value and `U1`-gradient of MMD² between projected samples.
#[derive(Debug, Clone)]
pub struct MmdGradient {
    pub value: f64,
    pub grad: Matrix,
}

/// Gradient of `MMD²(Xs_aug·U1, Xt_aug·U1)` with respect to `U1`.
pub fn mmd_sq_grad_u1(xs_aug: &Matrix, xt_aug: &Matrix, u1: &Matrix, cfg: &KernelConfig) -> Result<Matrix> {
    projected_mmd_sq_with_grad(xs_aug, xt_aug, u1, cfg).map(|g| g.grad)
}

/// MMD² between the projections `Xs_aug·U1` and `Xt_aug·U1` (unclamped) plus
/// its gradient with respect to `U1`.
///
/// Per ordered pair the kernel gradient is
/// `-(1/s²) k(U1ᵀzᵢ, U1ᵀzⱼ) (zᵢ - zⱼ)(zᵢ - zⱼ)ᵀ U1`. Stacking all samples into
/// `Z` and weighting pairs by `ω_ij = c_ij k_ij` (with `c` = `1/n_s²`, `1/n_t²`
/// or `-1/(n_s n_t)` by block) the weighted sum of outer products collapses to
/// `2 Zᵀ (D - Ω) Z`, `D = diag(Ω 1)`, so the gradient is
/// `-(2/s²) Zᵀ (D - Ω) Z U1`.
pub fn projected_mmd_sq_with_grad(
    xs_aug: &Matrix,
    xt_aug: &Matrix,
    u1: &Matrix,
    cfg: &KernelConfig,
) -> Result<MmdGradient> {
    let (z, ns, nt) = stack_checked(xs_aug, xt_aug, u1)?;
    let weights = pair_weights(&z, ns, nt, u1, cfg);
    let n = ns + nt;
    let value: f64 = weights.as_slice().iter().sum();

    let mut lap = weights.map_unchecked(|w| -w);
    for i in 0..n {
        let row_sum: f64 = weights.row(i).iter().sum();
        lap.row_mut(i)[i] += row_sum;
    }

    let (d1, k) = u1.shape();
    let lz = if d1 <= k {
        // (Zᵀ L Z) U1: cheap when the augmented input is narrower than the hidden layer
        let m = z.t_matmul_unchecked(&lap.matmul_unchecked(&z));
        m.matmul_unchecked(u1)
    } else {
        let q = z.matmul_unchecked(u1);
        z.t_matmul_unchecked(&lap.matmul_unchecked(&q))
    };
    let s2 = cfg.bandwidth * cfg.bandwidth;
    let grad = lz.map_unchecked(|v| -2.0 / s2 * v);
    grad.check_finite("mmd_sq_grad_u1")?;
    if !value.is_finite() {
        return Err(Error::NonFinite {
            op: "projected_mmd_sq",
        });
    }
    Ok(MmdGradient { value, grad })
}

/// MMD² (clamped) between `Xs_aug·U1` and `Xt_aug·U1`.
pub fn projected_mmd_sq(xs_aug: &Matrix, xt_aug: &Matrix, u1: &Matrix, cfg: &KernelConfig) -> Result<f64> {
    let (z, ns, nt) = stack_checked(xs_aug, xt_aug, u1)?;
    let value: f64 = pair_weights(&z, ns, nt, u1, cfg).as_slice().iter().sum();
    if !value.is_finite() {
        return Err(Error::NonFinite {
            op: "projected_mmd_sq",
        });
    }
    Ok(value.max(0.0))
}

fn stack_checked(xs: &Matrix, xt: &Matrix, u1: &Matrix) -> Result<(Matrix, usize, usize)> {
    if xs.rows() == 0 {
        return Err(Error::EmptySampleSet("projected MMD (source)"));
    }
    if xt.rows() == 0 {
        return Err(Error::EmptySampleSet("projected MMD (target)"));
    }
    if xs.cols() != u1.rows() {
        return Err(Error::shape("projected MMD", xs.shape(), u1.shape()));
    }
    Ok((xs.vstack(xt)?, xs.rows(), xt.rows()))
}

/// Symmetric `n × n` matrix of `c_ij · k(U1ᵀzᵢ, U1ᵀzⱼ)`.
fn pair_weights(z: &Matrix, ns: usize, nt: usize, u1: &Matrix, cfg: &KernelConfig) -> Matrix {
    let n = ns + nt;
    let sq = projected_sq_distances(z, u1);
    let css = 1.0 / (ns * ns) as f64;
    let ctt = 1.0 / (nt * nt) as f64;
    let cst = -1.0 / (ns * nt) as f64;
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let c = match (i < ns, j < ns) {
                (true, true) => css,
                (false, false) => ctt,
                _ => cst,
            };
            let v = c * cfg.eval_sq(sq.get(i, j));
            w.row_mut(i)[j] = v;
            w.row_mut(j)[i] = v;
        }
    }
    w
}

/// `‖U1ᵀ(zᵢ - zⱼ)‖²` for all pairs; upper triangle mirrored.
fn projected_sq_distances(z: &Matrix, u1: &Matrix) -> Matrix {
    let n = z.rows();
    let (d1, k) = u1.shape();
    let mut out = Matrix::zeros(n, n);
    if d1 * d1 < k {
        // quadratic form with P = U1 U1ᵀ in input space
        let p = u1.matmul_t_unchecked(u1);
        let mut diff = alloc::vec![0.0; d1];
        let mut pd = alloc::vec![0.0; d1];
        for i in 0..n {
            for j in (i + 1)..n {
                for ((d, a), b) in diff.iter_mut().zip(z.row(i)).zip(z.row(j)) {
                    *d = a - b;
                }
                for (r, o) in pd.iter_mut().enumerate() {
                    *o = dot(p.row(r), &diff);
                }
                let v = dot(&diff, &pd).max(0.0);
                out.row_mut(i)[j] = v;
                out.row_mut(j)[i] = v;
            }
        }
    } else {
        let q = z.matmul_unchecked(u1);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = sq_dist(q.row(i), q.row(j));
                out.row_mut(i)[j] = v;
                out.row_mut(j)[i] = v;
            }
        }
    }
    out
}
