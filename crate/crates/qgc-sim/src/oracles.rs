//! Classical reference estimators and evaluation metrics.
//!
//! Everything here is implemented independently of the circuit code paths —
//! plain kernel sums and rank statistics — so the quantum model has a ground
//! truth to be compared against rather than being tested against itself.
//!
//! - [`kde`]: Gaussian kernel density estimate, `(M_h/N)·Σ_j
//!   exp(−‖x_j−x‖²/(2h²))`.
//! - [`KdcModel`]: the class-resolved variant. Its joint density for class
//!   `y` restricts the sum to that class while keeping the full-sample `N`
//!   in the normalizer, so the class densities add up to the overall KDE.
//! - metrics: [`accuracy`], [`mean_absolute_error`], tie-aware Spearman rank
//!   correlation ([`spearman`]), and its per-class aggregation
//!   ([`spc_per_class`], [`mspc`]).
//! - [`write_density_csv`]: the common artifact layout (feature columns,
//!   then `label`, then `density`).

use std::io::Write;

use crate::encodings::KernelBandwidth;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Gaussian kernel density estimate at `x` from all sample points.
pub fn kde<S: Scalar>(points: &[Vec<S>], bandwidth: &KernelBandwidth<S>, x: &[S]) -> Result<S> {
    if points.is_empty() {
        return Err(Error::InvalidDataset { reason: "KDE needs at least one point".into() });
    }
    let dim = bandwidth.input_dim();
    if x.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, actual: x.len() });
    }
    let inv_two_h2 = S::one() / (S::from_f64_lossy(2.0) * bandwidth.h() * bandwidth.h());
    let mut acc = S::zero();
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, actual: p.len() });
        }
        let dist_sq: S = p.iter().zip(x).map(|(&a, &b)| (a - b) * (a - b)).sum();
        acc += (-dist_sq * inv_two_h2).exp();
    }
    Ok(bandwidth.m_h() * acc / S::from_usize_lossy(points.len()))
}

/// Kernel density classifier: per-class joint densities that sum to the
/// overall KDE, plus argmax prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct KdcModel<S: Scalar> {
    features: Vec<Vec<S>>,
    labels: Vec<usize>,
    bandwidth: KernelBandwidth<S>,
    classes: usize,
}

impl<S: Scalar> KdcModel<S> {
    /// Memorize the labeled sample. Labels must lie in `[0, classes)` and
    /// every feature row must match the bandwidth's input dimension.
    pub fn fit(
        features: Vec<Vec<S>>,
        labels: Vec<usize>,
        bandwidth: KernelBandwidth<S>,
        classes: usize,
    ) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::InvalidDataset { reason: "KDC needs at least one point".into() });
        }
        if features.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.len(),
                actual: labels.len(),
            });
        }
        if classes < 2 {
            return Err(Error::InvalidConfig { reason: "KDC needs at least 2 classes".into() });
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
            return Err(Error::LabelOutOfRange { label: bad, classes });
        }
        let dim = bandwidth.input_dim();
        if let Some(row) = features.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, actual: row.len() });
        }
        Ok(Self { features, labels, bandwidth, classes })
    }

    /// Number of classes.
    pub fn classes(&self) -> usize {
        self.classes
    }

    /// Joint density estimate `p̂(x, y)`: the kernel sum over class-`y`
    /// points with the full-sample normalizer.
    pub fn joint_density(&self, x: &[S], y: usize) -> Result<S> {
        if y >= self.classes {
            return Err(Error::LabelOutOfRange { label: y, classes: self.classes });
        }
        if x.len() != self.bandwidth.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.bandwidth.input_dim(),
                actual: x.len(),
            });
        }
        let h = self.bandwidth.h();
        let inv_two_h2 = S::one() / (S::from_f64_lossy(2.0) * h * h);
        let mut acc = S::zero();
        for (p, &label) in self.features.iter().zip(&self.labels) {
            if label != y {
                continue;
            }
            let dist_sq: S = p.iter().zip(x).map(|(&a, &b)| (a - b) * (a - b)).sum();
            acc += (-dist_sq * inv_two_h2).exp();
        }
        Ok(self.bandwidth.m_h() * acc / S::from_usize_lossy(self.features.len()))
    }

    /// All class joint densities at `x`.
    pub fn joint_densities(&self, x: &[S]) -> Result<Vec<S>> {
        (0..self.classes).map(|y| self.joint_density(x, y)).collect()
    }

    /// Argmax class, ties resolved to the smallest label.
    pub fn predict(&self, x: &[S]) -> Result<usize> {
        let d = self.joint_densities(x)?;
        let mut best = 0usize;
        for (y, &v) in d.iter().enumerate().skip(1) {
            if v > d[best] {
                best = y;
            }
        }
        Ok(best)
    }
}

/// Fraction of matching entries.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.is_empty() || predicted.len() != truth.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), actual: predicted.len() });
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / predicted.len() as f64)
}

/// Mean absolute error between two equal-length series.
pub fn mean_absolute_error<S: Scalar>(a: &[S], b: &[S]) -> Result<f64> {
    if a.is_empty() || a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: b.len(), actual: a.len() });
    }
    let acc: f64 = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| (x - y).abs().to_f64_lossy())
        .sum();
    Ok(acc / a.len() as f64)
}

/// Average ranks (1-based, ties share the mean of their positions).
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("finite values"));
    let mut ranks = vec![0.0f64; n];
    let mut i = 0usize;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &slot in &order[i..=j] {
            ranks[slot] = shared;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average-rank tie handling.
///
/// Returns `None` when either series is constant (the correlation is
/// undefined, not zero). Non-finite inputs are rejected.
pub fn spearman<S: Scalar>(a: &[S], b: &[S]) -> Result<Option<f64>> {
    if a.len() < 2 || a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: b.len(), actual: a.len() });
    }
    let to_f64 = |v: &[S]| -> Result<Vec<f64>> {
        v.iter()
            .map(|x| {
                let f = x.to_f64_lossy();
                if f.is_finite() {
                    Ok(f)
                } else {
                    Err(Error::InvalidDataset {
                        reason: "rank correlation over non-finite values".into(),
                    })
                }
            })
            .collect()
    };
    let ra = average_ranks(&to_f64(a)?);
    let rb = average_ranks(&to_f64(b)?);
    let n = ra.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let mut num = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        let (dx, dy) = (x - mean, y - mean);
        num += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    let den = (var_a * var_b).sqrt();
    if den == 0.0 {
        return Ok(None);
    }
    Ok(Some(num / den))
}

/// Per-class Spearman correlation between two density tables.
///
/// Both tables are indexed `[class][evaluation point]`. Classes where either
/// series is constant come back as `None` so the caller sees exactly which
/// comparisons were undefined instead of a silently shrunken mean.
pub fn spc_per_class<S: Scalar>(
    model: &[Vec<S>],
    reference: &[Vec<S>],
) -> Result<Vec<Option<f64>>> {
    if model.is_empty() || model.len() != reference.len() {
        return Err(Error::DimensionMismatch {
            expected: reference.len(),
            actual: model.len(),
        });
    }
    model
        .iter()
        .zip(reference)
        .map(|(m, r)| spearman(m, r))
        .collect()
}

/// Mean of the defined per-class correlations; `None` if every class was
/// undefined.
pub fn mspc(spc: &[Option<f64>]) -> Option<f64> {
    let defined: Vec<f64> = spc.iter().flatten().copied().collect();
    if defined.is_empty() {
        None
    } else {
        Some(defined.iter().sum::<f64>() / defined.len() as f64)
    }
}

/// Write a density table as CSV: feature columns `x0..x{D−1}`, then `label`,
/// then `density`, one row per (point, label) pair.
pub fn write_density_csv<S: Scalar, W: Write>(
    writer: W,
    points: &[Vec<S>],
    labels: &[usize],
    densities: &[S],
) -> Result<()> {
    if points.len() != labels.len() || points.len() != densities.len() {
        return Err(Error::DimensionMismatch { expected: points.len(), actual: densities.len() });
    }
    if points.is_empty() {
        return Err(Error::InvalidDataset { reason: "empty density table".into() });
    }
    let dim = points[0].len();
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    header.push("label".into());
    header.push("density".into());
    w.write_record(&header).map_err(csv_error)?;
    for ((p, &y), &d) in points.iter().zip(labels).zip(densities) {
        if p.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, actual: p.len() });
        }
        let mut row: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
        row.push(y.to_string());
        row.push(format!("{d}"));
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::io("<density table>", e))?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::CsvFormat { path: "<density table>".into(), reason: e.to_string() }
}
