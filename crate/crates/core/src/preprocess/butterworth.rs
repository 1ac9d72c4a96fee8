//! Butterworth IIR design (analog prototype → bilinear transform → biquads)
//! and zero-phase forward-backward filtering.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::PreprocessError;

/// Second-order section `(b0 + b1 z⁻¹ + b2 z⁻²) / (1 + a1 z⁻¹ + a2 z⁻²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        (self.b0 + z_inv * self.b1 + z2 * self.b2) / (1.0 + z_inv * self.a1 + z2 * self.a2)
    }

    fn dc_gain(&self) -> f64 {
        (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2)
    }

    /// Poles lie strictly inside the unit circle.
    pub fn is_stable(&self) -> bool {
        // Jury conditions for a monic quadratic denominator.
        self.a2.abs() < 1.0 && self.a1.abs() < 1.0 + self.a2
    }

    /// Transposed direct form II state for a unit step in steady state.
    fn step_state(&self) -> [f64; 2] {
        let g = self.dc_gain();
        let z2 = self.b2 - self.a2 * g;
        let z1 = self.b1 - self.a1 * g + z2;
        [z1, z2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FilterKind {
    Bandpass { low_hz: f64, high_hz: f64 },
    Lowpass { cutoff_hz: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterDesign {
    /// Total filter order (number of poles).
    pub order: usize,
    pub kind: FilterKind,
    pub fs: f64,
}

/// Cascade of biquads with its design record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiquadCascade {
    pub sections: Vec<Biquad>,
    pub design: FilterDesign,
}

impl BiquadCascade {
    pub fn order(&self) -> usize {
        self.design.order
    }

    /// Complex single-pass response at `freq_hz`.
    pub fn response(&self, freq_hz: f64) -> Complex64 {
        let w = 2.0 * PI * freq_hz / self.design.fs;
        let z_inv = Complex64::from_polar(1.0, -w);
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
    }

    pub fn magnitude(&self, freq_hz: f64) -> f64 {
        self.response(freq_hz).norm()
    }

    pub fn magnitude_db(&self, freq_hz: f64) -> f64 {
        20.0 * self.magnitude(freq_hz).log10()
    }

    /// Causal single pass starting from the given per-section states.
    fn run(&self, signal: &mut [f64], mut states: Vec<[f64; 2]>) {
        for (s, st) in self.sections.iter().zip(states.iter_mut()) {
            for x in signal.iter_mut() {
                let input = *x;
                let y = s.b0 * input + st[0];
                st[0] = s.b1 * input - s.a1 * y + st[1];
                st[1] = s.b2 * input - s.a2 * y;
                *x = y;
            }
        }
    }

    /// Causal filtering from rest.
    pub fn filter(&self, signal: &[f64]) -> Vec<f64> {
        let mut out = signal.to_vec();
        self.run(&mut out, vec![[0.0; 2]; self.sections.len()]);
        out
    }

    /// Steady-state initial conditions for a step of height `x0`.
    fn initial_states(&self, x0: f64) -> Vec<[f64; 2]> {
        let mut scale = x0;
        self.sections
            .iter()
            .map(|s| {
                let [z1, z2] = s.step_state();
                let st = [z1 * scale, z2 * scale];
                scale *= s.dc_gain();
                st
            })
            .collect()
    }

    /// Edge padding length used by [`filtfilt`].
    pub fn pad_len(&self) -> usize {
        3 * self.design.order
    }
}

fn validate_fs(fs: f64) -> Result<(), PreprocessError> {
    if !(fs > 0.0 && fs.is_finite()) {
        return Err(PreprocessError::Design(format!("sampling rate must be positive, got {fs}")));
    }
    Ok(())
}

/// Poles of the order-`n` analog Butterworth lowpass prototype (cutoff 1 rad/s).
fn prototype_poles(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|k| {
            let theta = PI * (2 * k + n + 1) as f64 / (2 * n) as f64;
            Complex64::from_polar(1.0, theta)
        })
        .collect()
}

fn bilinear(s: Complex64, fs: f64) -> Complex64 {
    let fs2 = 2.0 * fs;
    (fs2 + s) / (fs2 - s)
}

/// Groups digital poles into conjugate pairs (or pairs of real poles).
fn pole_pairs(poles: &[Complex64]) -> Vec<(f64, f64)> {
    const IM_TOL: f64 = 1e-12;
    let mut out = Vec::new();
    let mut reals = Vec::new();
    for p in poles {
        if p.im > IM_TOL {
            out.push((-2.0 * p.re, p.norm_sqr()));
        } else if p.im.abs() <= IM_TOL {
            reals.push(p.re);
        }
    }
    reals.sort_by(f64::total_cmp);
    for pair in reals.chunks(2) {
        match pair {
            [r1, r2] => out.push((-(r1 + r2), r1 * r2)),
            [r] => out.push((-r, 0.0)),
            _ => unreachable!(),
        }
    }
    out
}

/// Scales every section to unit magnitude at `freq_hz`.
fn normalize_sections(sections: &mut [Biquad], freq_hz: f64, fs: f64) {
    let z_inv = Complex64::from_polar(1.0, -2.0 * PI * freq_hz / fs);
    for s in sections {
        let g = s.response(z_inv).norm();
        s.b0 /= g;
        s.b1 /= g;
        s.b2 /= g;
    }
}

/// Butterworth bandpass of total order `order` (even; `order/2` prototype poles).
pub fn design_butter_bandpass(
    order: usize,
    low_hz: f64,
    high_hz: f64,
    fs: f64,
) -> Result<BiquadCascade, PreprocessError> {
    validate_fs(fs)?;
    if order == 0 || order % 2 != 0 {
        return Err(PreprocessError::Design(format!(
            "bandpass order must be a positive even number, got {order}"
        )));
    }
    if !(low_hz > 0.0 && low_hz < high_hz && high_hz < fs / 2.0) {
        return Err(PreprocessError::Design(format!(
            "band {low_hz}–{high_hz} Hz must satisfy 0 < low < high < fs/2 = {}",
            fs / 2.0
        )));
    }
    let n = order / 2;
    // Pre-warped analog band edges.
    let w1 = 2.0 * fs * (PI * low_hz / fs).tan();
    let w2 = 2.0 * fs * (PI * high_hz / fs).tan();
    let bw = w2 - w1;
    let w0_sq = w1 * w2;

    let mut analog = Vec::with_capacity(2 * n);
    for p in prototype_poles(n) {
        let half = p * bw / 2.0;
        let disc = (half * half - w0_sq).sqrt();
        analog.push(half + disc);
        analog.push(half - disc);
    }
    let digital: Vec<Complex64> = analog.iter().map(|&s| bilinear(s, fs)).collect();

    let mut sections: Vec<Biquad> = pole_pairs(&digital)
        .into_iter()
        .map(|(a1, a2)| Biquad {
            b0: 1.0,
            b1: 0.0,
            b2: -1.0,
            a1,
            a2,
        })
        .collect();
    // The analog centre √(w1·w2) maps back to this digital frequency.
    let center_hz = fs / PI * (w0_sq.sqrt() / (2.0 * fs)).atan();
    normalize_sections(&mut sections, center_hz, fs);
    finish(sections, FilterDesign {
        order,
        kind: FilterKind::Bandpass { low_hz, high_hz },
        fs,
    })
}

/// Butterworth lowpass of order `order`.
pub fn design_butter_lowpass(order: usize, cutoff_hz: f64, fs: f64) -> Result<BiquadCascade, PreprocessError> {
    validate_fs(fs)?;
    if order == 0 {
        return Err(PreprocessError::Design("lowpass order must be positive".into()));
    }
    if !(cutoff_hz > 0.0 && cutoff_hz < fs / 2.0) {
        return Err(PreprocessError::Design(format!(
            "cutoff {cutoff_hz} Hz must lie in (0, fs/2 = {})",
            fs / 2.0
        )));
    }
    let wc = 2.0 * fs * (PI * cutoff_hz / fs).tan();
    let digital: Vec<Complex64> = prototype_poles(order)
        .into_iter()
        .map(|p| bilinear(p * wc, fs))
        .collect();
    let mut sections: Vec<Biquad> = pole_pairs(&digital)
        .into_iter()
        .map(|(a1, a2)| {
            // A lone real pole gets a single zero at z = -1.
            let (b1, b2) = if a2 == 0.0 { (1.0, 0.0) } else { (2.0, 1.0) };
            Biquad { b0: 1.0, b1, b2, a1, a2 }
        })
        .collect();
    normalize_sections(&mut sections, 0.0, fs);
    finish(sections, FilterDesign {
        order,
        kind: FilterKind::Lowpass { cutoff_hz },
        fs,
    })
}

fn finish(sections: Vec<Biquad>, design: FilterDesign) -> Result<BiquadCascade, PreprocessError> {
    if let Some(i) = sections.iter().position(|s| !s.is_stable()) {
        return Err(PreprocessError::Design(format!("section {i} is unstable")));
    }
    Ok(BiquadCascade { sections, design })
}

/// Zero-phase filtering: forward pass, reverse, forward pass, reverse.
///
/// Both ends are extended by odd reflection of length `3·order` and each pass
/// starts from the steady-state response to the first padded sample.
pub fn filtfilt(filter: &BiquadCascade, signal: &[f64]) -> Result<Vec<f64>, PreprocessError> {
    let pad = filter.pad_len();
    let len = signal.len();
    if len <= pad {
        return Err(PreprocessError::SignalTooShort { len, min: pad + 1 });
    }
    let first = signal[0];
    let last = signal[len - 1];
    let mut ext = Vec::with_capacity(len + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * first - signal[i]));
    ext.extend_from_slice(signal);
    ext.extend((1..=pad).map(|i| 2.0 * last - signal[len - 1 - i]));

    let x0 = ext[0];
    filter.run(&mut ext, filter.initial_states(x0));
    ext.reverse();
    let y0 = ext[0];
    filter.run(&mut ext, filter.initial_states(y0));
    ext.reverse();
    Ok(ext[pad..pad + len].to_vec())
}
