//! Expectation statistics over DFT bins.
//!
//! Every expectation over time carries a `1/t` factor: `Σ = E[X·Xᵀ]/t`,
//! `Γ(h) = E[Re(X̂·diag(h)·X̂ᴴ)]/t`, `power[k] = E[|wᵀ·x̂_k|²]/t`. With the
//! unitary DFT this gives `Γ(1) = Σ`, and uniform unit-norm weights give
//! `Γ = Σ/√t`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{dot, norm2, unitary_dft_fast, ComplexMatrix, LinalgError, RealMatrix, WhiteningProjector};
use crate::preprocess::{ClassId, EpochSet};

const NORM_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("stats error: {0} has no epochs")]
    EmptyClass(ClassId),

    #[error("stats error: {0}")]
    Segmentation(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("degenerate filter: bin power is zero everywhere")]
    DegenerateFilter,

    #[error("init error: {0}")]
    Init(String),

    #[error("invalid spectral weights: {0}")]
    InvalidWeights(String),

    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Starting spectral weights for one SACSP initialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    /// All bins.
    Uniform,
    /// 7–15 Hz.
    MuBand,
    /// 15–30 Hz.
    BetaBand,
}

impl InitKind {
    pub const ALL: [InitKind; 3] = [InitKind::Uniform, InitKind::MuBand, InitKind::BetaBand];

    /// Inclusive band in Hz, `None` for all bins.
    pub fn band_hz(self) -> Option<(f64, f64)> {
        match self {
            InitKind::Uniform => None,
            InitKind::MuBand => Some((7.0, 15.0)),
            InitKind::BetaBand => Some((15.0, 30.0)),
        }
    }
}

/// Per-bin spectral weights over a full two-sided spectrum of length `t`.
///
/// Invariants (checked by [`SpectralWeights::new`]): nonnegative, `‖h‖₂ ≤ 1`,
/// `h[k] = h[t−k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralWeights {
    weights: Vec<f64>,
    fs: f64,
}

impl SpectralWeights {
    pub fn new(weights: Vec<f64>, fs: f64) -> Result<Self, StatsError> {
        let t = weights.len();
        if t < 2 {
            return Err(StatsError::InvalidWeights(format!("need at least 2 bins, got {t}")));
        }
        if !(fs > 0.0) {
            return Err(StatsError::InvalidWeights(format!("sampling rate must be positive, got {fs}")));
        }
        if let Some(k) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(StatsError::InvalidWeights(format!(
                "weight {k} is {} (must be finite and nonnegative)",
                weights[k]
            )));
        }
        let norm = norm2(&weights);
        if norm > 1.0 + NORM_TOL {
            return Err(StatsError::InvalidWeights(format!("norm {norm} exceeds 1")));
        }
        for k in 1..t {
            if (weights[k] - weights[t - k]).abs() > SYMMETRY_TOL {
                return Err(StatsError::InvalidWeights(format!(
                    "bin {k} and its mirror {} differ",
                    t - k
                )));
            }
        }
        Ok(Self { weights, fs })
    }

    /// `1/√t` in every bin.
    pub fn uniform(t: usize, fs: f64) -> Result<Self, StatsError> {
        Self::new(vec![1.0 / (t as f64).sqrt(); t], fs)
    }

    /// Raw `cos(2πk/t)` weights.
    ///
    /// Deliberately outside the feasible set: entries go negative above
    /// `t/4` and the norm is `√(t/2)`.
    pub fn cosine(t: usize, fs: f64) -> Self {
        let weights = (0..t)
            .map(|k| (2.0 * std::f64::consts::PI * k as f64 / t as f64).cos())
            .collect();
        Self { weights, fs }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn bin_hz(&self, k: usize) -> f64 {
        k as f64 * self.fs / self.len() as f64
    }

    /// Bins `0..=t/2` with their frequencies.
    pub fn one_sided(&self) -> Vec<(f64, f64)> {
        (0..=self.len() / 2).map(|k| (self.bin_hz(k), self.weights[k])).collect()
    }

    /// Largest-weight bin in `0..=t/2`; lowest bin on ties.
    pub fn peak_bin(&self) -> usize {
        let mut best = 0;
        for k in 1..=self.len() / 2 {
            if self.weights[k] > self.weights[best] {
                best = k;
            }
        }
        best
    }

    pub fn peak_hz(&self) -> f64 {
        self.bin_hz(self.peak_bin())
    }
}

/// `power[k] = E[|wᵀ·x̂_k|²]/t` for one class and one spatial filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinPowerVector {
    pub power: Vec<f64>,
    pub fs: f64,
}

impl BinPowerVector {
    /// `⟨h, power⟩`
    pub fn inner(&self, h: &[f64]) -> f64 {
        dot(h, &self.power)
    }
}

/// Per-class statistics cached once per training run.
#[derive(Debug, Clone)]
pub struct TrainStats {
    pub sigma1: RealMatrix,
    pub sigma2: RealMatrix,
    /// One unitary spectrum per 1-s segment of every class-1 epoch.
    pub spectra1: Vec<ComplexMatrix>,
    pub spectra2: Vec<ComplexMatrix>,
    /// Segment length in samples.
    pub t: usize,
    pub fs: f64,
    /// `bins[c][k] = E[Re(x̂_k·x̂_kᴴ)]/t` for `k = 0..=t/2`; bin `t−k` reuses `k`.
    bins: [Vec<RealMatrix>; 2],
}

/// Segment length used for statistics: 1 s when the epoch is longer than that.
pub fn segment_len(n_samples: usize, fs: f64) -> Result<usize, StatsError> {
    let one_second = fs.round() as usize;
    if one_second == 0 || n_samples <= one_second {
        return Ok(n_samples);
    }
    if n_samples % one_second != 0 {
        return Err(StatsError::Segmentation(format!(
            "epochs of {n_samples} samples do not split into 1-s segments of {one_second} samples"
        )));
    }
    Ok(one_second)
}

/// Unitary spectra of the consecutive `seg`-sample segments of `data`.
pub fn segment_spectra(data: &RealMatrix, seg: usize) -> Result<Vec<ComplexMatrix>, StatsError> {
    if seg == 0 || data.cols() % seg != 0 {
        return Err(StatsError::Segmentation(format!(
            "{} samples do not split into segments of {seg}",
            data.cols()
        )));
    }
    (0..data.cols() / seg)
        .map(|s| {
            let block = RealMatrix::from_fn(data.rows(), seg, |i, j| data.get(i, s * seg + j));
            Ok(unitary_dft_fast(&block)?)
        })
        .collect()
}

/// `Re(x̂_k·x̂_kᴴ)/t` summed over `spectra`, for `k = 0..=t/2`.
fn bin_outer_sums(spectra: &[ComplexMatrix], n: usize, t: usize) -> Vec<RealMatrix> {
    let scale = 1.0 / t as f64;
    (0..=t / 2)
        .map(|k| {
            let mut acc = RealMatrix::zeros(n, n);
            let mut col: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); n];
            for s in spectra {
                for (i, c) in col.iter_mut().enumerate() {
                    *c = s.get(i, k);
                }
                let d = acc.data_mut();
                for i in 0..n {
                    let (ar, ai) = (col[i].re, col[i].im);
                    for j in i..n {
                        d[i * n + j] += ar * col[j].re + ai * col[j].im;
                    }
                }
            }
            let d = acc.data_mut();
            for i in 0..n {
                for j in i..n {
                    d[i * n + j] *= scale;
                    d[j * n + i] = d[i * n + j];
                }
            }
            acc
        })
        .collect()
}

pub fn build_train_stats(set: &EpochSet) -> Result<TrainStats, StatsError> {
    let n = set.n_channels();
    let total = set.n_samples();
    let seg = segment_len(total, set.fs())?;
    if seg < 2 {
        return Err(StatsError::Segmentation(format!("segments of {seg} samples are too short")));
    }
    let mut sigmas = Vec::with_capacity(2);
    let mut spectra = Vec::with_capacity(2);
    let mut bins = Vec::with_capacity(2);
    for class in ClassId::BOTH {
        let epochs: Vec<_> = set.of_class(class).collect();
        if epochs.is_empty() {
            return Err(StatsError::EmptyClass(class));
        }
        let per_epoch: Vec<(RealMatrix, Vec<ComplexMatrix>)> = epochs
            .par_iter()
            .map(|e| {
                let xxt = e.data.matmul(&e.data.transpose());
                Ok((xxt, segment_spectra(&e.data, seg)?))
            })
            .collect::<Result<_, StatsError>>()?;
        let mut sigma = RealMatrix::zeros(n, n);
        let mut class_spectra = Vec::with_capacity(per_epoch.len() * (total / seg));
        for (xxt, s) in per_epoch {
            sigma.add_scaled(1.0, &xxt);
            class_spectra.extend(s);
        }
        let sigma = sigma.scale(1.0 / (total as f64 * epochs.len() as f64)).symmetrized();
        // Chunk sums are added in chunk order so the result is thread-count independent.
        let partial: Vec<Vec<RealMatrix>> = class_spectra
            .par_chunks(16)
            .map(|chunk| bin_outer_sums(chunk, n, seg))
            .collect();
        let mut partial = partial.into_iter();
        let mut class_bins = partial.next().expect("class has at least one segment");
        for p in partial {
            for (x, y) in class_bins.iter_mut().zip(&p) {
                x.add_scaled(1.0, y);
            }
        }
        let inv = 1.0 / class_spectra.len() as f64;
        for b in &mut class_bins {
            *b = b.scale(inv);
        }
        sigmas.push(sigma);
        spectra.push(class_spectra);
        bins.push(class_bins);
    }
    let [sigma1, sigma2]: [RealMatrix; 2] = sigmas.try_into().expect("two classes");
    let [spectra1, spectra2]: [Vec<ComplexMatrix>; 2] = spectra.try_into().expect("two classes");
    let bins: [Vec<RealMatrix>; 2] = bins.try_into().expect("two classes");
    if sigma1.add(&sigma2).trace() <= 0.0 {
        return Err(StatsError::Linalg(LinalgError::DegenerateCovariance));
    }
    Ok(TrainStats {
        sigma1,
        sigma2,
        spectra1,
        spectra2,
        t: seg,
        fs: set.fs(),
        bins,
    })
}

impl TrainStats {
    pub fn n_channels(&self) -> usize {
        self.sigma1.rows()
    }

    pub fn sigma(&self, class: ClassId) -> &RealMatrix {
        match class {
            ClassId::One => &self.sigma1,
            ClassId::Two => &self.sigma2,
        }
    }

    pub fn sigma_sum(&self) -> RealMatrix {
        self.sigma1.add(&self.sigma2)
    }

    pub fn spectra(&self, class: ClassId) -> &[ComplexMatrix] {
        match class {
            ClassId::One => &self.spectra1,
            ClassId::Two => &self.spectra2,
        }
    }

    /// `E[Re(x̂_k·x̂_kᴴ)]/t` for any bin `k < t`.
    pub fn bin_cov(&self, class: ClassId, k: usize) -> &RealMatrix {
        let folded = if k > self.t / 2 { self.t - k } else { k };
        &self.bins[class.index()][folded]
    }

    /// `Γ(h)` for a validated weight vector.
    pub fn weighted_cov(&self, class: ClassId, h: &SpectralWeights) -> Result<RealMatrix, StatsError> {
        self.weighted_cov_raw(class, h.weights())
    }

    /// `Γ(h)` for arbitrary real weights (linear in `h`; may be indefinite).
    pub fn weighted_cov_raw(&self, class: ClassId, h: &[f64]) -> Result<RealMatrix, StatsError> {
        if h.len() != self.t {
            return Err(StatsError::Dimension(format!(
                "spectral weights have {} bins, statistics have {}",
                h.len(),
                self.t
            )));
        }
        let n = self.n_channels();
        let mut gamma = RealMatrix::zeros(n, n);
        for (k, &hk) in h.iter().enumerate() {
            if hk != 0.0 {
                gamma.add_scaled(hk, self.bin_cov(class, k));
            }
        }
        Ok(gamma)
    }

    pub fn bin_power(&self, class: ClassId, w: &[f64]) -> Result<BinPowerVector, StatsError> {
        if w.len() != self.n_channels() {
            return Err(StatsError::Dimension(format!(
                "spatial filter has {} entries, statistics have {} channels",
                w.len(),
                self.n_channels()
            )));
        }
        let half: Vec<f64> = self.bins[class.index()]
            .iter()
            .map(|c| c.quad_form(w).max(0.0))
            .collect();
        let power = (0..self.t)
            .map(|k| half[if k > self.t / 2 { self.t - k } else { k }])
            .collect();
        Ok(BinPowerVector { power, fs: self.fs })
    }

    /// Statistics of `Q·X`: every covariance becomes `Q·C·Qᵀ`, every spectrum `Q·X̂`.
    pub fn project(&self, p: &WhiteningProjector) -> Result<TrainStats, StatsError> {
        if p.n_channels() != self.n_channels() {
            return Err(StatsError::Dimension(format!(
                "projector expects {} channels, statistics have {}",
                p.n_channels(),
                self.n_channels()
            )));
        }
        let spectra = |s: &[ComplexMatrix]| -> Vec<ComplexMatrix> {
            s.par_iter().map(|m| m.left_mul_real(&p.q)).collect()
        };
        let bins = |b: &[RealMatrix]| -> Vec<RealMatrix> { b.iter().map(|c| p.project_cov(c)).collect() };
        Ok(TrainStats {
            sigma1: p.project_cov(&self.sigma1),
            sigma2: p.project_cov(&self.sigma2),
            spectra1: spectra(&self.spectra1),
            spectra2: spectra(&self.spectra2),
            t: self.t,
            fs: self.fs,
            bins: [bins(&self.bins[0]), bins(&self.bins[1])],
        })
    }
}

/// Closed-form maximizer of `⟨h, power⟩` over `‖h‖₂ ≤ 1`: `power/‖power‖₂`.
pub fn update_weights(power: &BinPowerVector) -> Result<SpectralWeights, StatsError> {
    let norm = norm2(&power.power);
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(StatsError::DegenerateFilter);
    }
    let weights = power.power.iter().map(|p| p / norm).collect();
    SpectralWeights::new(weights, power.fs)
}

/// Band indicator on bins and mirror bins, normalized to unit norm.
pub fn make_init_weights(kind: InitKind, t: usize, fs: f64) -> Result<SpectralWeights, StatsError> {
    if t < 2 {
        return Err(StatsError::Init(format!("need at least 2 bins, got {t}")));
    }
    let mut w = vec![0.0; t];
    match kind.band_hz() {
        None => w.iter_mut().for_each(|x| *x = 1.0),
        Some((lo, hi)) => {
            for k in 0..=t / 2 {
                let f = k as f64 * fs / t as f64;
                if f >= lo - 1e-9 && f <= hi + 1e-9 {
                    w[k] = 1.0;
                    w[(t - k) % t] = 1.0;
                }
            }
        }
    }
    let norm = norm2(&w);
    if norm == 0.0 {
        return Err(StatsError::Init(format!(
            "{kind:?} band contains no DFT bin at t = {t}, fs = {fs} Hz"
        )));
    }
    SpectralWeights::new(w.iter().map(|x| x / norm).collect(), fs)
}
