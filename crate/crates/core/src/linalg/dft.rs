//! Row-wise unitary DFT, `X̂[c, k] = t^(-1/2) · Σ_j X[c, j]·exp(-2πi·jk/t)`.
//!
//! Bin `k` corresponds to frequency `k·fs/t` for `k ≤ t/2`; bins above `t/2`
//! are the negative frequencies and mirror the lower half for real input.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{ComplexMatrix, LinalgError, RealMatrix};

/// Precomputed unitary DFT matrix for a fixed length.
#[derive(Debug, Clone)]
pub struct UnitaryDft {
    t: usize,
    /// `table[m] = exp(-2πi·m/t) / √t`, indexed by `(j·k) mod t`.
    table: Vec<Complex64>,
}

impl UnitaryDft {
    pub fn new(t: usize) -> Result<Self, LinalgError> {
        if t < 2 {
            return Err(LinalgError::DftSize(t));
        }
        let scale = 1.0 / (t as f64).sqrt();
        let table = (0..t)
            .map(|m| Complex64::from_polar(scale, -2.0 * PI * m as f64 / t as f64))
            .collect();
        Ok(Self { t, table })
    }

    pub fn len(&self) -> usize {
        self.t
    }

    pub fn is_empty(&self) -> bool {
        self.t == 0
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<Complex64> {
        assert_eq!(row.len(), self.t);
        (0..self.t)
            .map(|k| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, &x) in row.iter().enumerate() {
                    acc += self.table[(j * k) % self.t] * x;
                }
                acc
            })
            .collect()
    }

    pub fn transform(&self, epoch: &RealMatrix) -> ComplexMatrix {
        assert_eq!(epoch.cols(), self.t);
        let data = (0..epoch.rows())
            .flat_map(|c| self.transform_row(epoch.row(c)))
            .collect();
        ComplexMatrix::from_vec(epoch.rows(), self.t, data).expect("shape is consistent")
    }
}

/// Reference O(n·t²) unitary DFT of every row.
pub fn unitary_dft(epoch: &RealMatrix) -> Result<ComplexMatrix, LinalgError> {
    Ok(UnitaryDft::new(epoch.cols())?.transform(epoch))
}

/// Mixed-radix FFT path; agrees with [`unitary_dft`] to rounding.
pub fn unitary_dft_fast(epoch: &RealMatrix) -> Result<ComplexMatrix, LinalgError> {
    let t = epoch.cols();
    if t < 2 {
        return Err(LinalgError::DftSize(t));
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(t);
    let scale = 1.0 / (t as f64).sqrt();
    let mut data: Vec<Complex64> = epoch
        .data()
        .iter()
        .map(|&x| Complex64::new(x, 0.0))
        .collect();
    for row in data.chunks_mut(t) {
        fft.process(row);
        for v in row.iter_mut() {
            *v *= scale;
        }
    }
    ComplexMatrix::from_vec(epoch.rows(), t, data)
}
