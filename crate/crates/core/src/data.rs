//! Datasets, z-score normalisation, one-hot targets and a synthetic
//! covariate-shift generator.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, Matrix, RandomStream, Result};

/// Features plus optional integer labels, tagged with a domain name.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Option<Vec<usize>>,
    class_count: usize,
    domain: String,
}

impl Dataset {
    pub fn new(
        features: Matrix,
        labels: Option<Vec<usize>>,
        class_count: usize,
        domain: impl Into<String>,
    ) -> Result<Self> {
        if features.rows() == 0 {
            return Err(Error::EmptySampleSet("dataset"));
        }
        features.check_finite("dataset")?;
        if let Some(labels) = &labels {
            if labels.len() != features.rows() {
                return Err(Error::shape(
                    "dataset labels",
                    features.shape(),
                    (labels.len(), 1),
                ));
            }
            if let Some(&bad) = labels.iter().find(|&&c| c >= class_count) {
                return Err(Error::LabelOutOfRange {
                    label: bad,
                    class_count,
                });
            }
        }
        Ok(Dataset {
            features,
            labels,
            class_count,
            domain: domain.into(),
        })
    }

    /// Labeled dataset with `class_count = max label + 1`.
    pub fn labeled(features: Matrix, labels: Vec<usize>, domain: impl Into<String>) -> Result<Self> {
        let l = labels.iter().max().map_or(0, |m| m + 1);
        Self::new(features, Some(labels), l, domain)
    }

    pub fn unlabeled(features: Matrix, domain: impl Into<String>) -> Result<Self> {
        Self::new(features, None, 0, domain)
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn require_labels(&self, what: &'static str) -> Result<&[usize]> {
        self.labels().ok_or(Error::MissingLabels(what))
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn domain(&self) -> &str {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Same dataset with the labels dropped.
    pub fn without_labels(&self) -> Dataset {
        Dataset {
            features: self.features.clone(),
            labels: None,
            class_count: self.class_count,
            domain: self.domain.clone(),
        }
    }

    /// Rows `indices` in order. Fails on an empty selection.
    pub fn select(&self, indices: &[usize]) -> Result<Dataset> {
        let labels = self
            .labels
            .as_ref()
            .map(|l| indices.iter().map(|&i| l[i]).collect());
        Dataset::new(
            self.features.select_rows(indices),
            labels,
            self.class_count,
            self.domain.clone(),
        )
    }

    /// Rows of `self` followed by rows of `other`; labels kept only when both
    /// sides have them.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        let features = self.features.vstack(&other.features)?;
        let labels = match (&self.labels, &other.labels) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).copied().collect()),
            _ => None,
        };
        Dataset::new(
            features,
            labels,
            self.class_count.max(other.class_count),
            self.domain.clone(),
        )
    }

    pub fn with_class_count(mut self, class_count: usize) -> Result<Dataset> {
        if let Some(labels) = &self.labels {
            if let Some(&bad) = labels.iter().find(|&&c| c >= class_count) {
                return Err(Error::LabelOutOfRange {
                    label: bad,
                    class_count,
                });
            }
        }
        self.class_count = class_count;
        Ok(self)
    }
}

/// Floor for per-dimension standard deviations.
pub const STD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn identity(d: usize) -> Self {
        NormStats {
            mean: alloc::vec![0.0; d],
            std: alloc::vec![1.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        self.check_dim(x)?;
        let mut out = x.clone();
        for r in 0..out.rows() {
            for ((v, m), s) in out.row_mut(r).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        out.check_finite("zscore_apply")?;
        Ok(out)
    }

    pub fn invert(&self, z: &Matrix) -> Result<Matrix> {
        self.check_dim(z)?;
        let mut out = z.clone();
        for r in 0..out.rows() {
            for ((v, m), s) in out.row_mut(r).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = *v * s + m;
            }
        }
        out.check_finite("zscore_invert")?;
        Ok(out)
    }

    fn check_dim(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.dim() {
            return Err(Error::shape("zscore", x.shape(), (1, self.dim())));
        }
        Ok(())
    }
}

/// Per-dimension mean and population standard deviation over the rows of all
/// given datasets together.
pub fn zscore_fit(datasets: &[&Dataset]) -> Result<NormStats> {
    let first = datasets.first().ok_or(Error::EmptySampleSet("zscore_fit"))?;
    let d = first.dim();
    let mut n = 0usize;
    let mut mean = alloc::vec![0.0; d];
    for ds in datasets {
        if ds.dim() != d {
            return Err(Error::shape(
                "zscore_fit",
                first.features.shape(),
                ds.features.shape(),
            ));
        }
        for row in ds.features.iter_rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        n += ds.len();
    }
    if n == 0 {
        return Err(Error::EmptySampleSet("zscore_fit"));
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut var = alloc::vec![0.0; d];
    for ds in datasets {
        for row in ds.features.iter_rows() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
    }
    let std = var
        .into_iter()
        .map(|s| libm::sqrt(s / n as f64).max(STD_FLOOR))
        .collect();
    Ok(NormStats { mean, std })
}

pub fn zscore_apply(ds: &Dataset, stats: &NormStats) -> Result<Dataset> {
    Dataset::new(
        stats.apply(&ds.features)?,
        ds.labels.clone(),
        ds.class_count,
        ds.domain.clone(),
    )
}

/// `n × l` indicator matrix.
pub fn one_hot(labels: &[usize], l: usize) -> Result<Matrix> {
    let mut m = Matrix::zeros(labels.len(), l);
    for (i, &c) in labels.iter().enumerate() {
        if c >= l {
            return Err(Error::LabelOutOfRange {
                label: c,
                class_count: l,
            });
        }
        m.row_mut(i)[c] = 1.0;
    }
    Ok(m)
}

/// Two-dimensional Gaussian blobs with a rotated and translated target copy.
///
/// Class `c` of `classes` is centred at `spacing · (cos 2πc/C, sin 2πc/C)`.
/// Every target point is drawn like a source point, then rotated by
/// `rotation_deg` about the origin and shifted by `translation`.
///
/// The default shift is 1.5σ along 105°, perpendicular to the bisector of
/// the source and rotated class axes. Along the x axis instead, the
/// two-blob marginals can be matched by a point reflection that swaps the
/// classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSpec {
    pub classes: usize,
    pub per_class: usize,
    pub spacing: f64,
    pub rotation_deg: f64,
    pub translation: [f64; 2],
    pub noise_std: f64,
}

/// `1.5 · (cos 105°, sin 105°)`.
pub const DEFAULT_TRANSLATION: [f64; 2] = [-0.388_228_567_653_781_3, 1.448_888_739_433_602_5];

impl Default for ShiftSpec {
    fn default() -> Self {
        ShiftSpec {
            classes: 2,
            per_class: 50,
            spacing: 1.5,
            rotation_deg: 30.0,
            translation: DEFAULT_TRANSLATION,
            noise_std: 1.0,
        }
    }
}

impl ShiftSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 classes, got {}",
                self.classes
            )));
        }
        if self.per_class == 0 {
            return Err(Error::invalid("per-class count must be positive"));
        }
        if !(self.noise_std > 0.0) || !self.noise_std.is_finite() {
            return Err(Error::invalid(format!(
                "noise std must be positive, got {}",
                self.noise_std
            )));
        }
        let finite = [
            self.spacing,
            self.rotation_deg,
            self.translation[0],
            self.translation[1],
        ];
        if finite.iter().any(|v| !v.is_finite()) || self.spacing < 0.0 {
            return Err(Error::invalid(
                "spacing, rotation and translation must be finite, spacing ≥ 0",
            ));
        }
        Ok(())
    }

    pub fn center(&self, class: usize) -> [f64; 2] {
        let a = 2.0 * core::f64::consts::PI * class as f64 / self.classes as f64;
        [self.spacing * libm::cos(a), self.spacing * libm::sin(a)]
    }

    /// Rotation then translation applied to a source-space point.
    pub fn transform(&self, p: [f64; 2]) -> [f64; 2] {
        let t = self.rotation_deg.to_radians();
        let (s, c) = (libm::sin(t), libm::cos(t));
        [
            c * p[0] - s * p[1] + self.translation[0],
            s * p[0] + c * p[1] + self.translation[1],
        ]
    }
}

/// Source and target datasets; row `i` belongs to class `i mod classes`.
/// Both carry labels, the target's meant for evaluation only.
pub fn gen_synthetic_shift(spec: &ShiftSpec, stream: &mut RandomStream) -> Result<(Dataset, Dataset)> {
    spec.validate()?;
    let n = spec.classes * spec.per_class;
    let labels: Vec<usize> = (0..n).map(|i| i % spec.classes).collect();
    let mut draw = |shift: bool| -> Result<Dataset> {
        let mut data = Vec::with_capacity(2 * n);
        for &c in &labels {
            let centre = spec.center(c);
            let mut p = [
                centre[0] + spec.noise_std * stream.standard_normal(),
                centre[1] + spec.noise_std * stream.standard_normal(),
            ];
            if shift {
                p = spec.transform(p);
            }
            data.extend_from_slice(&p);
        }
        Dataset::new(
            Matrix::from_vec(n, 2, data)?,
            Some(labels.clone()),
            spec.classes,
            if shift { "target" } else { "source" },
        )
    };
    let source = draw(false)?;
    let target = draw(true)?;
    Ok((source, target))
}
