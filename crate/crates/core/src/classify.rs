//! Log spectrally-weighted power features and shrinkage LDA.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithms::{train, AlgoError, AlgoTag, FilterPair, SacspConfig, TrainedFilterBank};
use crate::linalg::{dot, unitary_dft_fast, LinalgError, RealMatrix};
use crate::preprocess::{ClassId, Epoch, EpochSet, PreprocessConfig};
use crate::spectral::{segment_len, StatsError};

/// Quadratic forms are floored here before the log.
pub const POWER_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("feature error: filter {index} produced power {value}")]
    Feature { index: usize, value: f64 },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("compatibility error: {0}")]
    Compatibility(String),

    #[error(transparent)]
    Algo(#[from] AlgoError),

    #[error(transparent)]
    Stats(#[from] StatsError),

    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

/// `E[|DFT(wᵀx)_k|²]/t·h_k` summed over bins, averaged over segments.
fn pair_power(pair: &FilterPair, data: &RealMatrix, seg: usize) -> Result<f64, ClassifyError> {
    let mut y = vec![0.0; data.cols()];
    for (c, &wc) in pair.spatial.iter().enumerate() {
        for (yj, x) in y.iter_mut().zip(data.row(c)) {
            *yj += wc * x;
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Ok(f64::NAN);
    }
    let h = pair.spectral.weights();
    let n_seg = data.cols() / seg;
    let mut total = 0.0;
    for s in 0..n_seg {
        let block = RealMatrix::from_vec(1, seg, y[s * seg..(s + 1) * seg].to_vec())?;
        let spec = unitary_dft_fast(&block)?;
        total += spec.row(0).iter().zip(h).map(|(c, hk)| hk * c.norm_sqr()).sum::<f64>();
    }
    Ok(total / (seg as f64 * n_seg as f64))
}

/// Natural log of each pair's spectrally-weighted power.
pub fn extract_features(bank: &TrainedFilterBank, epoch: &Epoch) -> Result<FeatureVector, ClassifyError> {
    if epoch.n_channels() != bank.n_channels() {
        return Err(ClassifyError::Dimension(format!(
            "epoch has {} channels, filters expect {}",
            epoch.n_channels(),
            bank.n_channels()
        )));
    }
    let seg = segment_len(epoch.n_samples(), epoch.fs)?;
    let mut values = Vec::with_capacity(bank.pairs.len());
    for (index, pair) in bank.pairs.iter().enumerate() {
        if pair.spectral.len() != seg {
            return Err(ClassifyError::Dimension(format!(
                "filter {index} has {} spectral bins, epoch segments have {seg} samples",
                pair.spectral.len()
            )));
        }
        let p = pair_power(pair, &epoch.data, seg)?;
        if p.is_nan() || p == f64::INFINITY {
            return Err(ClassifyError::Feature { index, value: p });
        }
        values.push(p.max(POWER_FLOOR).ln());
    }
    Ok(FeatureVector { values })
}

/// Features of every epoch, in set order.
pub fn extract_all(bank: &TrainedFilterBank, set: &EpochSet) -> Result<Vec<Vec<f64>>, ClassifyError> {
    set.iter().map(|e| extract_features(bank, e).map(|f| f.values)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shrinkage {
    /// Ledoit-Wolf optimal coefficient.
    #[default]
    Auto,
    Fixed(f64),
}

/// `(1−γ)·S + γ·(tr S/d)·I` with the Ledoit-Wolf `γ`; `S` is the biased sample covariance.
pub fn ledoit_wolf_covariance(samples: &[Vec<f64>]) -> Result<(RealMatrix, f64), ClassifyError> {
    let (centered, _) = center(samples)?;
    let s = scatter(&centered);
    let gamma = ledoit_wolf_gamma(&centered, &s);
    Ok((shrink(&s, gamma), gamma))
}

fn center(samples: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, Vec<f64>), ClassifyError> {
    if samples.len() < 2 {
        return Err(ClassifyError::Estimation(format!("need at least 2 samples, got {}", samples.len())));
    }
    let d = samples[0].len();
    if d == 0 || samples.iter().any(|s| s.len() != d) {
        return Err(ClassifyError::Dimension("samples must share a nonzero dimension".into()));
    }
    if samples.iter().flatten().any(|v| !v.is_finite()) {
        return Err(ClassifyError::Estimation("samples contain non-finite values".into()));
    }
    let mean = mean_of(samples);
    let centered = samples
        .iter()
        .map(|s| s.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();
    Ok((centered, mean))
}

fn mean_of(samples: &[Vec<f64>]) -> Vec<f64> {
    let d = samples[0].len();
    let mut mean = vec![0.0; d];
    for s in samples {
        for (m, x) in mean.iter_mut().zip(s) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= samples.len() as f64);
    mean
}

/// `Xᵀ·X/N` of already-centred rows.
fn scatter(x: &[Vec<f64>]) -> RealMatrix {
    let d = x[0].len();
    let n = x.len() as f64;
    RealMatrix::from_fn(d, d, |i, j| x.iter().map(|r| r[i] * r[j]).sum::<f64>() / n)
}

/// Ledoit-Wolf coefficient for centred rows `x` with scatter `s`.
///
/// `d = 1` gives 0; zero distance to the target (including zero scatter) gives 1.
fn ledoit_wolf_gamma(x: &[Vec<f64>], s: &RealMatrix) -> f64 {
    let d = s.rows();
    if d == 1 {
        return 0.0;
    }
    let n = x.len() as f64;
    let mu = s.trace() / d as f64;
    let delta = s.sub(&RealMatrix::identity(d).scale(mu)).frobenius_norm().powi(2) / d as f64;
    if delta <= 0.0 {
        return 1.0;
    }
    let mut beta = 0.0;
    for r in x {
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                let diff = r[i] * r[j] - s.get(i, j);
                acc += diff * diff;
            }
        }
        beta += acc;
    }
    beta /= n * n * d as f64;
    (beta.min(delta) / delta).clamp(0.0, 1.0)
}

fn shrink(s: &RealMatrix, gamma: f64) -> RealMatrix {
    let d = s.rows();
    let mu = s.trace() / d as f64;
    s.scale(1.0 - gamma).add(&RealMatrix::identity(d).scale(gamma * mu))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub shrinkage_used: f64,
    pub class_means: [Vec<f64>; 2],
}

impl LdaModel {
    pub fn decision_value(&self, features: &[f64]) -> f64 {
        dot(&self.weights, features) + self.bias
    }

    /// Class 1 iff the decision value is strictly positive.
    pub fn classify(&self, features: &[f64]) -> (ClassId, f64) {
        let v = self.decision_value(features);
        (if v > 0.0 { ClassId::One } else { ClassId::Two }, v)
    }
}

/// Equal-prior LDA on a pooled, within-class-centred shrunk covariance.
pub fn lda_train(features: &[Vec<f64>], labels: &[ClassId], shrinkage: Shrinkage) -> Result<LdaModel, ClassifyError> {
    if features.len() != labels.len() {
        return Err(ClassifyError::Dimension(format!(
            "{} feature rows but {} labels",
            features.len(),
            labels.len()
        )));
    }
    let mut by_class: [Vec<Vec<f64>>; 2] = [Vec::new(), Vec::new()];
    for (f, l) in features.iter().zip(labels) {
        by_class[l.index()].push(f.clone());
    }
    let mut pooled = Vec::with_capacity(features.len());
    let mut means = Vec::with_capacity(2);
    for (class, rows) in ClassId::BOTH.into_iter().zip(&by_class) {
        if rows.len() < 2 {
            return Err(ClassifyError::Training(format!("{class} has {} samples, need at least 2", rows.len())));
        }
        let (centered, mean) = center(rows)?;
        pooled.extend(centered);
        means.push(mean);
    }
    if means[0].len() != means[1].len() {
        return Err(ClassifyError::Dimension("classes have different feature dimensions".into()));
    }
    let s = scatter(&pooled);
    let gamma = match shrinkage {
        Shrinkage::Auto => ledoit_wolf_gamma(&pooled, &s),
        Shrinkage::Fixed(g) if (0.0..=1.0).contains(&g) => g,
        Shrinkage::Fixed(g) => return Err(ClassifyError::Training(format!("shrinkage {g} outside [0, 1]"))),
    };
    let cov = shrink(&s, gamma);
    let inv = cov
        .inverse()
        .map_err(|e| ClassifyError::Training(format!("shrunk covariance is singular: {e}")))?;
    let diff: Vec<f64> = means[0].iter().zip(&means[1]).map(|(a, b)| a - b).collect();
    let sum: Vec<f64> = means[0].iter().zip(&means[1]).map(|(a, b)| a + b).collect();
    let weights = inv.mul_vec(&diff);
    if weights.iter().any(|w| !w.is_finite()) || weights.iter().all(|&w| w == 0.0) {
        return Err(ClassifyError::Training("discriminant weights are zero or non-finite".into()));
    }
    let bias = -dot(&weights, &sum) / 2.0;
    let [m1, m2]: [Vec<f64>; 2] = means.try_into().expect("two classes");
    Ok(LdaModel {
        weights,
        bias,
        shrinkage_used: gamma,
        class_means: [m1, m2],
    })
}

/// Preprocessing a model's inputs must match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub fs: f64,
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    pub n_channels: usize,
    /// Epoch length in samples.
    pub t: usize,
}

impl Fingerprint {
    pub fn of(set: &EpochSet, preprocess: &PreprocessConfig) -> Self {
        Self {
            fs: set.fs(),
            band_low_hz: preprocess.band_low_hz,
            band_high_hz: preprocess.band_high_hz,
            n_channels: set.n_channels(),
            t: set.n_samples(),
        }
    }

    pub fn check(&self, epoch: &Epoch) -> Result<(), ClassifyError> {
        if epoch.fs != self.fs || epoch.n_channels() != self.n_channels || epoch.n_samples() != self.t {
            return Err(ClassifyError::Compatibility(format!(
                "epoch is {}x{} @ {} Hz, model expects {}x{} @ {} Hz",
                epoch.n_channels(),
                epoch.n_samples(),
                epoch.fs,
                self.n_channels,
                self.t,
                self.fs
            )));
        }
        Ok(())
    }
}

/// Filter bank, classifier and the preprocessing they were fitted under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SacspModel {
    pub bank: TrainedFilterBank,
    pub lda: LdaModel,
    pub fingerprint: Fingerprint,
}

impl SacspModel {
    pub fn predict(&self, epoch: &Epoch) -> Result<(ClassId, f64), ClassifyError> {
        self.fingerprint.check(epoch)?;
        let f = extract_features(&self.bank, epoch)?;
        Ok(self.lda.classify(&f.values))
    }
}

/// Trains the filter bank and an auto-shrinkage LDA on its features.
pub fn fit_model(
    set: &EpochSet,
    algo: AlgoTag,
    config: &SacspConfig,
    fingerprint: Fingerprint,
) -> Result<SacspModel, ClassifyError> {
    let bank = train(set, algo, config)?;
    let features = extract_all(&bank, set)?;
    let labels: Vec<ClassId> = set.iter().map(|e| e.label).collect();
    let lda = lda_train(&features, &labels, Shrinkage::Auto)?;
    Ok(SacspModel { bank, lda, fingerprint })
}

/// Fraction of epochs predicted correctly.
pub fn accuracy(model: &SacspModel, set: &EpochSet) -> Result<f64, ClassifyError> {
    if set.is_empty() {
        return Err(ClassifyError::Dimension("cannot score an empty set".into()));
    }
    let mut correct = 0usize;
    for e in set {
        if model.predict(e)?.0 == e.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / set.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_shrinks_fully() {
        let (cov, g) = ledoit_wolf_covariance(&[vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        assert_eq!(g, 1.0);
        assert_eq!(cov.max_abs(), 0.0);
    }

    #[test]
    fn scalar_needs_no_shrinkage() {
        let (cov, g) = ledoit_wolf_covariance(&[vec![1.0], vec![3.0]]).unwrap();
        assert_eq!(g, 0.0);
        assert_eq!(cov.get(0, 0), 1.0);
        assert!(ledoit_wolf_covariance(&[vec![1.0]]).is_err());
    }

    #[test]
    fn tie_goes_to_class_two() {
        let lda = LdaModel {
            weights: vec![1.0, -1.0],
            bias: 0.0,
            shrinkage_used: 0.0,
            class_means: [vec![0.0; 2], vec![0.0; 2]],
        };
        assert_eq!(lda.classify(&[2.0, 2.0]), (ClassId::Two, 0.0));
        assert_eq!(lda.classify(&[2.0, 1.0]).0, ClassId::One);
    }

    #[test]
    fn lda_rejects_thin_classes() {
        let f = vec![vec![0.0], vec![1.0], vec![2.0]];
        let l = [ClassId::One, ClassId::One, ClassId::Two];
        assert!(matches!(lda_train(&f, &l, Shrinkage::Auto), Err(ClassifyError::Training(_))));
    }
}
