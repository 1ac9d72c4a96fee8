//! Evaluation protocols and the paired signed-rank test.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::algorithms::{train, AlgoTag, SacspConfig};
use crate::classify::{extract_all, lda_train, ClassifyError, Shrinkage};
use crate::preprocess::{balance_classes, ClassId, EpochSet, PreprocessError};

/// Largest sample size tested with the exact null distribution.
pub const EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("compatibility error: {0}")]
    Compatibility(String),

    #[error("split error: {0}")]
    Split(String),

    #[error("test error: {0}")]
    Test(String),

    #[error(transparent)]
    Classify(#[from] ClassifyError),

    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Transfer,
    Kfold,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Transfer => "transfer",
            Protocol::Kfold => "kfold",
        }
    }
}

impl std::str::FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "transfer" => Ok(Protocol::Transfer),
            "kfold" => Ok(Protocol::Kfold),
            other => Err(format!("unknown protocol {other:?} (expected transfer or kfold)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub protocol: Protocol,
    /// Folds; ignored by the transfer protocol.
    pub k: usize,
    pub n_repeats: usize,
    pub seed: u64,
}

impl SplitPlan {
    pub fn transfer(n_repeats: usize, seed: u64) -> Self {
        Self {
            protocol: Protocol::Transfer,
            k: 0,
            n_repeats,
            seed,
        }
    }

    pub fn kfold(k: usize, n_repeats: usize, seed: u64) -> Self {
        Self {
            protocol: Protocol::Kfold,
            k,
            n_repeats,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if self.n_repeats < 1 {
            return Err(EvalError::Split("n_repeats must be at least 1".into()));
        }
        if self.protocol == Protocol::Kfold && self.k < 2 {
            return Err(EvalError::Split(format!("k-fold needs k >= 2, got {}", self.k)));
        }
        Ok(())
    }

    /// Seed of repeat `r`, shared by every algorithm evaluated under this plan.
    pub fn repeat_seed(&self, r: usize) -> u64 {
        let mut z = self.seed.wrapping_add((r as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_repeat_accuracy: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation over repeats.
    pub dispersion: f64,
    pub algo_tag: AlgoTag,
    pub protocol_tag: Protocol,
}

impl EvalReport {
    pub fn new(per_repeat_accuracy: Vec<f64>, algo_tag: AlgoTag, protocol_tag: Protocol) -> Self {
        let n = per_repeat_accuracy.len() as f64;
        let mean = per_repeat_accuracy.iter().sum::<f64>() / n;
        let var = per_repeat_accuracy.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
        Self {
            per_repeat_accuracy,
            mean,
            dispersion: var.sqrt(),
            algo_tag,
            protocol_tag,
        }
    }
}

/// Trains on `train_set` and returns the fraction of `test_set` classified correctly.
pub fn train_and_score(
    train_set: &EpochSet,
    test_set: &EpochSet,
    algo: AlgoTag,
    config: &SacspConfig,
) -> Result<f64, EvalError> {
    let bank = train(train_set, algo, config).map_err(ClassifyError::from)?;
    let labels: Vec<ClassId> = train_set.iter().map(|e| e.label).collect();
    let lda = lda_train(&extract_all(&bank, train_set)?, &labels, Shrinkage::Auto)?;
    let features = extract_all(&bank, test_set)?;
    let correct = features
        .iter()
        .zip(test_set)
        .filter(|(f, e)| lda.classify(f).0 == e.label)
        .count();
    Ok(correct as f64 / test_set.len() as f64)
}

fn check_compatible(a: &EpochSet, b: &EpochSet) -> Result<(), EvalError> {
    if a.n_channels() != b.n_channels() || a.n_samples() != b.n_samples() || a.fs() != b.fs() {
        return Err(EvalError::Compatibility(format!(
            "calibration epochs are {}x{} @ {} Hz, online epochs are {}x{} @ {} Hz",
            a.n_channels(),
            a.n_samples(),
            a.fs(),
            b.n_channels(),
            b.n_samples(),
            b.fs()
        )));
    }
    Ok(())
}

/// Balanced calibration and online subsets for repeat `r`.
pub fn transfer_split(calib: &EpochSet, online: &EpochSet, plan: &SplitPlan, r: usize) -> Result<(EpochSet, EpochSet), EvalError> {
    let seed = plan.repeat_seed(r);
    Ok((balance_classes(calib, seed)?, balance_classes(online, seed ^ 1)?))
}

/// Train on balanced calibration data, test on balanced online data, once per repeat.
pub fn run_transfer(
    calib: &EpochSet,
    online: &EpochSet,
    algo: AlgoTag,
    config: &SacspConfig,
    plan: &SplitPlan,
) -> Result<EvalReport, EvalError> {
    plan.validate()?;
    if plan.protocol != Protocol::Transfer {
        return Err(EvalError::Split("run_transfer needs a transfer plan".into()));
    }
    check_compatible(calib, online)?;
    let acc = (0..plan.n_repeats)
        .into_par_iter()
        .map(|r| {
            let (train_set, test_set) = transfer_split(calib, online, plan, r)?;
            train_and_score(&train_set, &test_set, algo, config)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EvalReport::new(acc, algo, Protocol::Transfer))
}

/// Fold index of every epoch: each class is shuffled and dealt round-robin into `k` folds.
pub fn stratified_folds(set: &EpochSet, k: usize, seed: u64) -> Result<Vec<usize>, EvalError> {
    let min = set.class_counts().into_iter().min().unwrap_or(0);
    if k < 2 || k > min {
        return Err(EvalError::Split(format!(
            "k = {k} folds needs 2 <= k <= smallest class count ({min})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold = vec![0; set.len()];
    for class in ClassId::BOTH {
        let mut idx = set.class_indices(class);
        idx.shuffle(&mut rng);
        for (pos, i) in idx.into_iter().enumerate() {
            fold[i] = pos % k;
        }
    }
    Ok(fold)
}

/// Stratified k-fold on a balanced draw of `set`; one pooled accuracy per repeat.
pub fn run_kfold(set: &EpochSet, algo: AlgoTag, config: &SacspConfig, plan: &SplitPlan) -> Result<EvalReport, EvalError> {
    plan.validate()?;
    if plan.protocol != Protocol::Kfold {
        return Err(EvalError::Split("run_kfold needs a kfold plan".into()));
    }
    let acc = (0..plan.n_repeats)
        .into_par_iter()
        .map(|r| {
            let seed = plan.repeat_seed(r);
            let balanced = balance_classes(set, seed)?;
            let fold = stratified_folds(&balanced, plan.k, seed)?;
            let mut correct = 0.0;
            for f in 0..plan.k {
                let (test, train_idx): (Vec<usize>, Vec<usize>) = (0..balanced.len()).partition(|&i| fold[i] == f);
                let test_set = balanced.subset(&test);
                let a = train_and_score(&balanced.subset(&train_idx), &test_set, algo, config)?;
                correct += a * test_set.len() as f64;
            }
            Ok(correct / balanced.len() as f64)
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok(EvalReport::new(acc, algo, Protocol::Kfold))
}

/// Average ranks (1-based) of `v`, ties sharing the mean of their positions.
fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided paired signed-rank test: `(min(W+, W−), p)`.
///
/// Zero differences are dropped. Exact null distribution for `n ≤ 25`,
/// tie-corrected normal approximation (no continuity correction) above.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<(f64, f64), EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::Test(format!("sequences differ in length ({} vs {})", a.len(), b.len())));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if d.iter().any(|x| !x.is_finite()) {
        return Err(EvalError::Test("differences must be finite".into()));
    }
    let n = d.len();
    if n < 5 {
        return Err(EvalError::Test(format!("{n} nonzero differences, need at least 5")));
    }
    let ranks = average_ranks(&d.iter().map(|x| x.abs()).collect::<Vec<_>>());
    let w_plus: f64 = ranks.iter().zip(&d).filter(|(_, x)| **x > 0.0).map(|(r, _)| r).sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let stat = w_plus.min(total - w_plus);
    let p = if n <= EXACT_MAX_N {
        2.0 * exact_lower_tail(&ranks, stat)
    } else {
        let mean = total / 2.0;
        let mut var = (n * (n + 1) * (2 * n + 1)) as f64 / 24.0;
        let mut sorted = ranks.clone();
        sorted.sort_by(f64::total_cmp);
        for group in sorted.chunk_by(|x, y| x == y) {
            let t = group.len() as f64;
            var -= (t * t * t - t) / 48.0;
        }
        if var <= 0.0 {
            return Err(EvalError::Test("all differences tie; variance is zero".into()));
        }
        let z = (stat - mean) / var.sqrt();
        2.0 * Normal::new(0.0, 1.0).expect("unit normal").cdf(z)
    };
    Ok((stat, p.min(1.0)))
}

/// `P(W+ ≤ stat)` under random signs, by counting subsets of doubled ranks.
fn exact_lower_tail(ranks: &[f64], stat: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; max + 1];
    counts[0] = 1.0;
    for &r in &doubled {
        for s in (r..=max).rev() {
            counts[s] += counts[s - r];
        }
    }
    let limit = (2.0 * stat).round() as usize;
    let hits: f64 = counts[..=limit.min(max)].iter().sum();
    hits / 2f64.powi(ranks.len() as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shifted_by_one() {
        let b: Vec<f64> = (0..12).map(|i| i as f64 * 0.3).collect();
        let a: Vec<f64> = b.iter().map(|x| x + 1.0).collect();
        let (stat, p) = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(stat, 0.0);
        assert!((p - 2.0 / 4096.0).abs() < 1e-15);
    }

    #[test]
    fn too_few_differences() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert!(matches!(wilcoxon_signed_rank(&a, &a), Err(EvalError::Test(_))));
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn large_sample_is_approximate() {
        let a: Vec<f64> = (0..40).map(|i| ((i * 7) % 11) as f64 - 4.5).collect();
        let b = vec![0.0; 40];
        let (_, p) = wilcoxon_signed_rank(&a, &b).unwrap();
        assert!(p > 0.0 && p <= 1.0);
    }

    #[test]
    fn plan_checks() {
        assert!(SplitPlan::kfold(1, 1, 0).validate().is_err());
        assert!(SplitPlan::transfer(0, 0).validate().is_err());
        assert_ne!(SplitPlan::transfer(2, 0).repeat_seed(0), SplitPlan::transfer(2, 0).repeat_seed(1));
    }
}
