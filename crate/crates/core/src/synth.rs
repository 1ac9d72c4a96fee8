//! Seeded generator of labelled epochs with planted band-limited sources.
//!
//! Epoch `i` = Σ_s a_s·(amp_s(class)·u_s) + σ·noise, where `u_s` is unit-variance
//! Gaussian noise bandpassed to `center ± bandwidth/2`. Epoch `i` draws from
//! ChaCha stream `i` of `seed`, so epochs can be generated in any order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithms::TrainedFilterBank;
use crate::linalg::{abs_cosine, norm2, RealMatrix};
use crate::preprocess::{design_butter_bandpass, BiquadCascade, ClassId, Epoch, EpochSet};

/// Total order of the source-shaping bandpass.
pub const SOURCE_FILTER_ORDER: usize = 8;
const MIXING_STREAM: u64 = u64::MAX;
/// Mixed into the calibration seed to derive the online seed.
pub const ONLINE_SEED_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid synth spec: {field}: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> SynthError {
    SynthError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Source {
    /// Unit-norm channel weights.
    pub mixing_column: Vec<f64>,
    pub center_hz: f64,
    pub bandwidth_hz: f64,
    pub class1_amp: f64,
    pub class2_amp: f64,
}

impl Source {
    pub fn amp(&self, class: ClassId) -> f64 {
        match class {
            ClassId::One => self.class1_amp,
            ClassId::Two => self.class2_amp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub n_channels: usize,
    pub fs: f64,
    pub epoch_seconds: f64,
    pub n_epochs_per_class: usize,
    pub sources: Vec<Source>,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn n_samples(&self) -> usize {
        (self.epoch_seconds * self.fs).round() as usize
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_channels == 0 {
            return Err(invalid("n_channels", "must be at least 1"));
        }
        if !(self.fs > 0.0 && self.fs.is_finite()) {
            return Err(invalid("fs", format!("must be positive, got {}", self.fs)));
        }
        let t = self.epoch_seconds * self.fs;
        if !(t >= 2.0) || (t - t.round()).abs() > 1e-9 {
            return Err(invalid(
                "epoch_seconds",
                format!("epoch_seconds·fs must be a whole number of at least 2 samples, got {t}"),
            ));
        }
        if self.n_epochs_per_class == 0 {
            return Err(invalid("n_epochs_per_class", "must be at least 1"));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(invalid("noise_sigma", format!("must be nonnegative, got {}", self.noise_sigma)));
        }
        let nyquist = self.fs / 2.0;
        for (i, s) in self.sources.iter().enumerate() {
            let field = |name: &str| format!("sources[{i}].{name}");
            if s.mixing_column.len() != self.n_channels {
                return Err(invalid(
                    field("mixing_column"),
                    format!("has {} entries, expected {}", s.mixing_column.len(), self.n_channels),
                ));
            }
            if (norm2(&s.mixing_column) - 1.0).abs() > 1e-9 {
                return Err(invalid(field("mixing_column"), "must have unit norm"));
            }
            if !(s.bandwidth_hz > 0.0) {
                return Err(invalid(field("bandwidth_hz"), format!("must be positive, got {}", s.bandwidth_hz)));
            }
            let (lo, hi) = (s.center_hz - s.bandwidth_hz / 2.0, s.center_hz + s.bandwidth_hz / 2.0);
            if !(lo > 0.0 && hi < nyquist) {
                return Err(invalid(
                    field("center_hz"),
                    format!("band {lo}..{hi} Hz must lie strictly inside 0..{nyquist} Hz"),
                ));
            }
            for (name, a) in [("class1_amp", s.class1_amp), ("class2_amp", s.class2_amp)] {
                if !(a >= 0.0 && a.is_finite()) {
                    return Err(invalid(field(name), format!("must be nonnegative, got {a}")));
                }
            }
        }
        Ok(())
    }

    /// Label of epoch `i`: classes alternate, starting with class 1.
    pub fn label(i: usize) -> ClassId {
        if i % 2 == 0 {
            ClassId::One
        } else {
            ClassId::Two
        }
    }

    /// Index of the source with the largest `amp(class)/amp(other)` above 1.
    pub fn discriminative_source(&self, class: ClassId) -> Option<usize> {
        let score = |s: &Source| {
            let (a, b) = (s.amp(class), s.amp(class.other()));
            if b == 0.0 {
                if a > 0.0 { f64::INFINITY } else { 0.0 }
            } else {
                a / b
            }
        };
        self.sources
            .iter()
            .enumerate()
            .filter(|(_, s)| score(s) > 1.0)
            .max_by(|(_, a), (_, b)| score(a).total_cmp(&score(b)))
            .map(|(i, _)| i)
    }
}

/// `count` unit-norm Gaussian columns of length `n`, reproducible from `seed`.
pub fn random_mixing_columns(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(MIXING_STREAM);
    (0..count)
        .map(|_| {
            let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let norm = norm2(&v);
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect()
}

/// Shaping filter and the RMS gain it applies to unit white noise.
fn source_filter(s: &Source, fs: f64) -> (BiquadCascade, f64) {
    let f = design_butter_bandpass(
        SOURCE_FILTER_ORDER,
        s.center_hz - s.bandwidth_hz / 2.0,
        s.center_hz + s.bandwidth_hz / 2.0,
        fs,
    )
    .expect("validated band");
    // Output variance of unit white noise = mean of |H|² over 0..fs/2.
    const GRID: usize = 20_000;
    let power: f64 = (0..GRID)
        .map(|i| f.magnitude((i as f64 + 0.5) * fs / 2.0 / GRID as f64).powi(2))
        .sum::<f64>()
        / GRID as f64;
    (f, power.sqrt())
}

fn generate_epoch(spec: &SynthSpec, filters: &[(BiquadCascade, f64)], index: usize) -> Epoch {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64);
    let label = SynthSpec::label(index);
    let (n, t) = (spec.n_channels, spec.n_samples());
    let mut data = RealMatrix::zeros(n, t);
    for (s, (filter, gain)) in spec.sources.iter().zip(filters) {
        // Burn-in of one epoch on each side of the kept window.
        let white: Vec<f64> = (0..3 * t).map(|_| rng.sample(StandardNormal)).collect();
        let shaped = filter.filter(&white);
        let amp = s.amp(label) / gain;
        for (c, &a) in s.mixing_column.iter().enumerate() {
            let row = data.row_mut(c);
            for (x, u) in row.iter_mut().zip(&shaped[t..2 * t]) {
                *x += a * amp * u;
            }
        }
    }
    if spec.noise_sigma > 0.0 {
        for x in data.data_mut() {
            *x += spec.noise_sigma * rng.sample::<f64, _>(StandardNormal);
        }
    }
    Epoch {
        data,
        label,
        fs: spec.fs,
    }
}

/// Generates `2·n_epochs_per_class` epochs with alternating labels.
pub fn generate(spec: &SynthSpec) -> Result<(EpochSet, SynthSpec), SynthError> {
    spec.validate()?;
    let filters: Vec<_> = spec.sources.iter().map(|s| source_filter(s, spec.fs)).collect();
    let epochs: Vec<Epoch> = (0..2 * spec.n_epochs_per_class)
        .into_par_iter()
        .map(|i| generate_epoch(spec, &filters, i))
        .collect();
    let set = EpochSet::new(epochs).expect("epochs share the spec geometry");
    Ok((set, spec.clone()))
}

/// Default acceptance dataset: 16 channels at 100 Hz, 1-s epochs, 68 per class.
///
/// Source 0 (10 Hz) is stronger in class 1, source 1 (10 Hz) in class 2, and
/// source 2 is a broadband 5–35 Hz distractor of equal power in both classes.
pub fn default_spec(seed: u64) -> SynthSpec {
    spec_with_channels(16, seed)
}

/// [`default_spec`] with `n_channels` channels.
pub fn spec_with_channels(n_channels: usize, seed: u64) -> SynthSpec {
    let cols = random_mixing_columns(n_channels, 3, seed);
    let src = |i: usize, center_hz: f64, bandwidth_hz: f64, class1_amp: f64, class2_amp: f64| Source {
        mixing_column: cols[i].clone(),
        center_hz,
        bandwidth_hz,
        class1_amp,
        class2_amp,
    };
    SynthSpec {
        n_channels,
        fs: 100.0,
        epoch_seconds: 1.0,
        n_epochs_per_class: 68,
        sources: vec![
            src(0, 10.0, 2.0, 1.0, 0.4),
            src(1, 10.0, 2.0, 0.4, 1.0),
            src(2, 20.0, 30.0, 1.0, 1.0),
        ],
        noise_sigma: 0.5,
        seed,
    }
}

/// Calibration/online pair whose distractor favours class 1 in calibration and neither class online.
///
/// The 10 Hz sources and all mixing columns are shared; the online set has
/// 136 epochs per class and its own noise seed.
pub fn transfer_specs(seed: u64) -> (SynthSpec, SynthSpec) {
    transfer_specs_with_channels(16, seed)
}

/// [`transfer_specs`] with `n_channels` channels.
pub fn transfer_specs_with_channels(n_channels: usize, seed: u64) -> (SynthSpec, SynthSpec) {
    let mut calib = spec_with_channels(n_channels, seed);
    calib.sources[2].class1_amp = 1.5;
    calib.sources[2].class2_amp = 0.5;
    let mut online = calib.clone();
    online.sources[2].class1_amp = 1.0;
    online.sources[2].class2_amp = 1.0;
    online.n_epochs_per_class = 136;
    online.seed = seed ^ ONLINE_SEED_SALT;
    (calib, online)
}

/// How well a bank recovered the planted discriminative sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryScore {
    /// Per class: max |cosine| between a selected pattern and the class's discriminative column.
    pub pattern_cosines: [Option<f64>; 2],
    /// Per class: |peak frequency − planted center| of every selected spectral filter, in Hz.
    pub peak_bin_errors: [Vec<f64>; 2],
}

pub fn reference_recovery_score(bank: &TrainedFilterBank, spec: &SynthSpec) -> RecoveryScore {
    let mut cosines = [None, None];
    let mut errors = [Vec::new(), Vec::new()];
    for class in ClassId::BOTH {
        let Some(si) = spec.discriminative_source(class) else {
            continue;
        };
        let source = &spec.sources[si];
        let mut best: Option<f64> = None;
        for (j, pair) in bank.pairs.iter().enumerate() {
            if pair.class_id != class {
                continue;
            }
            let c = abs_cosine(&bank.patterns.column(j), &source.mixing_column);
            best = Some(best.map_or(c, |b| b.max(c)));
            errors[class.index()].push((pair.spectral.peak_hz() - source.center_hz).abs());
        }
        cosines[class.index()] = best;
    }
    RecoveryScore {
        pattern_cosines: cosines,
        peak_bin_errors: errors,
    }
}
