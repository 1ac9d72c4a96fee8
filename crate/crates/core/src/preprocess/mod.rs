//! Continuous recording → balanced, referenced, band-limited epochs.
//!
//! Default order: decimate → epoch → common average reference → zero-phase
//! bandpass (applied to each epoch) → per-channel demean.

mod butterworth;
mod types;

pub use butterworth::{
    design_butter_bandpass, design_butter_lowpass, filtfilt, Biquad, BiquadCascade, FilterDesign,
    FilterKind,
};
pub use types::{ClassId, ContinuousRecording, Epoch, EpochSet, Marker};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::RealMatrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PreprocessError {
    #[error("filter design error: {0}")]
    Design(String),

    #[error("signal of {len} samples is too short for zero-phase filtering (need at least {min})")]
    SignalTooShort { len: usize, min: usize },

    #[error("resample error: {0}")]
    Resample(String),

    #[error("common average reference needs at least 2 channels, got {0}")]
    Reference(usize),

    #[error("epoching error: marker {marker} at sample {sample} needs {needed} samples but the recording ends at {len}")]
    Epoching {
        marker: usize,
        sample: usize,
        needed: usize,
        len: usize,
    },

    #[error("balance error: {0} has no epochs")]
    Balance(ClassId),

    #[error("{0}")]
    Invalid(String),
}

/// Anti-alias filter used by [`decimate`].
const DECIMATE_ORDER: usize = 8;
const DECIMATE_CUTOFF_RATIO: f64 = 0.45;

/// Zero-phase bandpass of every row.
pub fn bandpass_rows(data: &RealMatrix, filter: &BiquadCascade) -> Result<RealMatrix, PreprocessError> {
    let mut out = RealMatrix::zeros(data.rows(), data.cols());
    for c in 0..data.rows() {
        let y = filtfilt(filter, data.row(c))?;
        out.row_mut(c).copy_from_slice(&y);
    }
    Ok(out)
}

/// Subtracts the across-channel mean at each time sample.
pub fn common_average_reference(data: &RealMatrix) -> Result<RealMatrix, PreprocessError> {
    let n = data.rows();
    if n < 2 {
        return Err(PreprocessError::Reference(n));
    }
    let t = data.cols();
    let mut mean = vec![0.0; t];
    for c in 0..n {
        for (m, v) in mean.iter_mut().zip(data.row(c)) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut out = data.clone();
    for c in 0..n {
        for (v, m) in out.row_mut(c).iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    Ok(out)
}

/// Removes each channel's time mean.
pub fn demean_rows(data: &RealMatrix) -> RealMatrix {
    let mut out = data.clone();
    for c in 0..out.rows() {
        let row = out.row_mut(c);
        let mean = row.iter().sum::<f64>() / row.len().max(1) as f64;
        row.iter_mut().for_each(|v| *v -= mean);
    }
    out
}

/// Integer-factor downsampling after an 8th-order zero-phase lowpass at
/// `0.45·target_fs`. Marker indices are divided by the factor.
pub fn decimate(recording: &ContinuousRecording, target_fs: f64) -> Result<ContinuousRecording, PreprocessError> {
    if !(target_fs > 0.0) {
        return Err(PreprocessError::Resample(format!("target rate must be positive, got {target_fs}")));
    }
    let ratio = recording.fs / target_fs;
    let factor = ratio.round();
    if factor < 1.0 || (ratio - factor).abs() > 1e-9 * ratio.max(1.0) {
        return Err(PreprocessError::Resample(format!(
            "{} Hz → {target_fs} Hz is not an integer downsampling factor",
            recording.fs
        )));
    }
    let factor = factor as usize;
    if factor == 1 {
        return Ok(recording.clone());
    }
    let lp = design_butter_lowpass(DECIMATE_ORDER, DECIMATE_CUTOFF_RATIO * target_fs, recording.fs)?;
    let filtered = bandpass_rows(&recording.samples, &lp)?;
    let kept: Vec<usize> = (0..filtered.cols()).step_by(factor).collect();
    let samples = RealMatrix::from_fn(filtered.rows(), kept.len(), |c, j| filtered.get(c, kept[j]));
    let markers = recording
        .markers
        .iter()
        .map(|m| Marker {
            sample: m.sample / factor,
            ..*m
        })
        .collect();
    Ok(ContinuousRecording {
        fs: target_fs,
        samples,
        markers,
    })
}

/// Cuts `[marker, marker + round(window_s·fs))` for every marker, optionally
/// skipping trial-end markers.
pub fn epoch_stream(
    recording: &ContinuousRecording,
    window_s: f64,
    drop_trial_end: bool,
) -> Result<EpochSet, PreprocessError> {
    let t = (window_s * recording.fs).round() as usize;
    if t == 0 {
        return Err(PreprocessError::Invalid(format!("window of {window_s} s holds no samples")));
    }
    let len = recording.len();
    let mut set = EpochSet::empty(recording.fs, recording.n_channels(), t);
    for (i, m) in recording.markers.iter().enumerate() {
        if drop_trial_end && m.trial_end {
            continue;
        }
        if m.sample + t > len {
            return Err(PreprocessError::Epoching {
                marker: i,
                sample: m.sample,
                needed: t,
                len,
            });
        }
        let data = RealMatrix::from_fn(recording.n_channels(), t, |c, j| {
            recording.samples.get(c, m.sample + j)
        });
        set.push(Epoch {
            data,
            label: m.label,
            fs: recording.fs,
        })?;
    }
    Ok(set)
}

/// Equalizes class counts by seeded subsampling of the majority class
/// without replacement. Kept epochs retain their original order.
pub fn balance_classes(set: &EpochSet, seed: u64) -> Result<EpochSet, PreprocessError> {
    let idx = [set.class_indices(ClassId::One), set.class_indices(ClassId::Two)];
    for c in ClassId::BOTH {
        if idx[c.index()].is_empty() {
            return Err(PreprocessError::Balance(c));
        }
    }
    let target = idx[0].len().min(idx[1].len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = Vec::with_capacity(2 * target);
    for class_idx in &idx {
        if class_idx.len() == target {
            keep.extend_from_slice(class_idx);
        } else {
            keep.extend(index::sample(&mut rng, class_idx.len(), target).into_iter().map(|k| class_idx[k]));
        }
    }
    keep.sort_unstable();
    Ok(set.subset(&keep))
}

/// Where the bandpass sits relative to epoching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageOrder {
    /// decimate → epoch → CAR → bandpass each epoch
    #[default]
    EpochThenFilter,
    /// decimate → CAR → bandpass continuous data → epoch
    FilterThenEpoch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub target_fs: f64,
    pub window_s: f64,
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    pub filter_order: usize,
    pub drop_trial_end: bool,
    pub common_average: bool,
    pub demean: bool,
    pub stage_order: StageOrder,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            target_fs: 100.0,
            window_s: 1.0,
            band_low_hz: 7.0,
            band_high_hz: 30.0,
            filter_order: 6,
            drop_trial_end: true,
            common_average: true,
            demean: true,
            stage_order: StageOrder::EpochThenFilter,
        }
    }
}

impl PreprocessConfig {
    pub fn bandpass(&self, fs: f64) -> Result<BiquadCascade, PreprocessError> {
        design_butter_bandpass(self.filter_order, self.band_low_hz, self.band_high_hz, fs)
    }

    /// Per-epoch stages; `filter` is `None` when CAR and bandpass already ran on continuous data.
    fn finish_epoch(&self, data: &RealMatrix, filter: Option<&BiquadCascade>) -> Result<RealMatrix, PreprocessError> {
        let mut out = if self.common_average && filter.is_some() {
            common_average_reference(data)?
        } else {
            data.clone()
        };
        if let Some(f) = filter {
            out = bandpass_rows(&out, f)?;
        }
        if self.demean {
            out = demean_rows(&out);
        }
        Ok(out)
    }
}

/// Runs the full pipeline on a continuous recording.
pub fn preprocess_recording(
    recording: &ContinuousRecording,
    config: &PreprocessConfig,
) -> Result<EpochSet, PreprocessError> {
    let down = decimate(recording, config.target_fs)?;
    let filter = config.bandpass(down.fs)?;
    match config.stage_order {
        StageOrder::EpochThenFilter => {
            let raw = epoch_stream(&down, config.window_s, config.drop_trial_end)?;
            raw.try_map(|d| config.finish_epoch(d, Some(&filter)))
        }
        StageOrder::FilterThenEpoch => {
            let mut samples = down.samples.clone();
            if config.common_average {
                samples = common_average_reference(&samples)?;
            }
            samples = bandpass_rows(&samples, &filter)?;
            let filtered = ContinuousRecording { samples, ..down };
            let raw = epoch_stream(&filtered, config.window_s, config.drop_trial_end)?;
            raw.try_map(|d| config.finish_epoch(d, None))
        }
    }
}

/// Applies the per-epoch stages (CAR, bandpass, demean) to an existing epoch set.
pub fn preprocess_epochs(set: &EpochSet, config: &PreprocessConfig) -> Result<EpochSet, PreprocessError> {
    let filter = config.bandpass(set.fs())?;
    set.try_map(|d| config.finish_epoch(d, Some(&filter)))
}
