//! Binary epoch container.
//!
//! Layout: `b"EPD1"`, then little-endian `u32` n_channels, n_samples,
//! n_epochs, fs_hz, then one label byte per epoch (1 or 2), then
//! `n_epochs·n_channels·n_samples` little-endian `f64`, epoch-major, row-major.

use std::fs;
use std::path::Path;

use sacsp_core::linalg::RealMatrix;
use sacsp_core::{ClassId, Epoch, EpochSet};

use crate::error::CliError;

pub const MAGIC: &[u8; 4] = b"EPD1";
const HEADER_LEN: usize = 4 + 4 * 4;

pub fn encode(set: &EpochSet) -> Result<Vec<u8>, String> {
    let fs = set.fs();
    if fs.fract() != 0.0 || !(1.0..=u32::MAX as f64).contains(&fs) {
        return Err(format!("sampling rate {fs} Hz is not a whole number of Hz"));
    }
    let dims = [set.n_channels(), set.n_samples(), set.len()];
    if dims.iter().any(|&d| d > u32::MAX as usize) {
        return Err("epoch set is too large for the container".into());
    }
    let mut out = Vec::with_capacity(HEADER_LEN + set.len() * (1 + 8 * dims[0] * dims[1]));
    out.extend_from_slice(MAGIC);
    for d in dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.extend_from_slice(&(fs as u32).to_le_bytes());
    out.extend(set.iter().map(|e| e.label.label()));
    for e in set {
        for v in e.data.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<EpochSet, String> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err("not an EPD1 epoch file".into());
    }
    let field = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().expect("4 bytes")) as usize;
    let (n_channels, n_samples, n_epochs, fs) = (field(0), field(1), field(2), field(3) as f64);
    if fs == 0.0 {
        return Err("sampling rate is zero".into());
    }
    let per_epoch = n_channels
        .checked_mul(n_samples)
        .and_then(|x| x.checked_mul(8))
        .ok_or("header dimensions overflow")?;
    let expected = n_epochs
        .checked_mul(per_epoch)
        .and_then(|x| x.checked_add(HEADER_LEN + n_epochs))
        .ok_or("header dimensions overflow")?;
    if bytes.len() != expected {
        return Err(format!("payload is {} bytes, header implies {expected}", bytes.len()));
    }
    let labels = &bytes[HEADER_LEN..HEADER_LEN + n_epochs];
    let payload = &bytes[HEADER_LEN + n_epochs..];
    let mut set = EpochSet::empty(fs, n_channels, n_samples);
    for (i, &l) in labels.iter().enumerate() {
        let label = ClassId::try_from(l).map_err(|_| format!("epoch {i} has label {l} (expected 1 or 2)"))?;
        let chunk = &payload[i * per_epoch..(i + 1) * per_epoch];
        let data: Vec<f64> = chunk
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        let data = RealMatrix::from_vec(n_channels, n_samples, data).map_err(|e| e.to_string())?;
        set.push(Epoch { data, label, fs }).map_err(|e| e.to_string())?;
    }
    Ok(set)
}

pub fn write(path: &Path, set: &EpochSet) -> Result<(), CliError> {
    let bytes = encode(set).map_err(|e| CliError::io(path, e))?;
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn read(path: &Path) -> Result<EpochSet, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode(&bytes).map_err(|e| CliError::io(path, e))
}
