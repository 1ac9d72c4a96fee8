//! CSP, CCACSP and SACSP trainers.
//!
//! All three work on whitened statistics (`Q·Σ·Qᵀ`), solve against the fixed
//! denominator `Q·(Σ₁+Σ₂)·Qᵀ`, and map filters back with `Qᵀ`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{
    whitening_projector, EigenPairs, GeneralizedEigSolver, LinalgError, RealMatrix, WhiteningProjector,
    DEFAULT_WHITEN_THRESHOLD,
};
use crate::preprocess::{ClassId, EpochSet};
use crate::spectral::{
    build_train_stats, make_init_weights, update_weights, InitKind, SpectralWeights, StatsError, TrainStats,
};

/// Relative objective decrease treated as rounding rather than a real descent.
pub const MONOTONE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgoError {
    #[error(transparent)]
    Stats(#[from] StatsError),

    #[error(transparent)]
    Linalg(#[from] LinalgError),

    #[error("config error: {0}")]
    Config(String),

    #[error("degenerate filter: {0}")]
    DegenerateFilter(String),

    #[error("optimization error: {0}")]
    Optimization(String),

    #[error("pattern error: {0}")]
    Pattern(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgoTag {
    Csp,
    Ccacsp,
    Sacsp,
}

impl AlgoTag {
    pub const ALL: [AlgoTag; 3] = [AlgoTag::Csp, AlgoTag::Ccacsp, AlgoTag::Sacsp];

    pub fn as_str(self) -> &'static str {
        match self {
            AlgoTag::Csp => "csp",
            AlgoTag::Ccacsp => "ccacsp",
            AlgoTag::Sacsp => "sacsp",
        }
    }
}

impl fmt::Display for AlgoTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgoTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AlgoTag::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| format!("unknown algorithm {s:?} (expected csp, ccacsp or sacsp)"))
    }
}

/// One spatial filter (channel space) with its spectral weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterPair {
    pub spatial: Vec<f64>,
    pub spectral: SpectralWeights,
    pub class_id: ClassId,
    pub objective: f64,
}

/// Objective log of one (class, initialization, filter) inner loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterTrace {
    pub class_id: ClassId,
    pub init: usize,
    pub init_kind: InitKind,
    pub rank: usize,
    /// `objectives[0]` is the starting point; one entry per completed iteration after it.
    pub objectives: Vec<f64>,
    pub hit_max_iters: bool,
    pub selected: bool,
}

impl FilterTrace {
    pub fn iterations(&self) -> usize {
        self.objectives.len() - 1
    }

    /// Largest relative drop between consecutive objectives (0 when monotone).
    pub fn max_violation(&self) -> f64 {
        self.objectives
            .windows(2)
            .map(|w| ((w[0] - w[1]) / w[0].abs().max(f64::MIN_POSITIVE)).max(0.0))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedFilterBank {
    /// R class-1 pairs followed by R class-2 pairs.
    pub pairs: Vec<FilterPair>,
    pub projector: WhiteningProjector,
    /// `n × 2R`; column `j` belongs to `pairs[j]`.
    pub patterns: RealMatrix,
    pub algo_tag: AlgoTag,
    /// Empty for CSP and CCACSP.
    pub trace: Vec<FilterTrace>,
}

impl TrainedFilterBank {
    pub fn n_channels(&self) -> usize {
        self.projector.n_channels()
    }

    pub fn pairs_of(&self, class: ClassId) -> impl Iterator<Item = &FilterPair> {
        self.pairs.iter().filter(move |p| p.class_id == class)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SacspConfig {
    pub r_filters: usize,
    pub m_inits: usize,
    pub epsilon: f64,
    pub max_iters: usize,
    pub init_kinds: Vec<InitKind>,
    pub whiten_threshold: f64,
    /// Diagnostic switch: `false` keeps the initial weights and skips the inner loop.
    pub spectral_updates: bool,
}

impl Default for SacspConfig {
    fn default() -> Self {
        Self {
            r_filters: 3,
            m_inits: 3,
            epsilon: 1e-6,
            max_iters: 100,
            init_kinds: InitKind::ALL.to_vec(),
            whiten_threshold: DEFAULT_WHITEN_THRESHOLD,
            spectral_updates: true,
        }
    }
}

impl SacspConfig {
    pub fn validate(&self) -> Result<(), AlgoError> {
        let fail = |m: String| Err(AlgoError::Config(m));
        if self.r_filters < 1 {
            return fail("r_filters must be at least 1".into());
        }
        if !(self.epsilon > 0.0) {
            return fail(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.max_iters < 1 {
            return fail("max_iters must be at least 1".into());
        }
        if self.init_kinds.is_empty() {
            return fail("init_kinds must not be empty".into());
        }
        if self.m_inits != self.init_kinds.len() {
            return fail(format!(
                "m_inits is {} but init_kinds lists {} kinds",
                self.m_inits,
                self.init_kinds.len()
            ));
        }
        if !(self.whiten_threshold > 0.0 && self.whiten_threshold < 1.0) {
            return fail(format!("whiten_threshold must lie in (0, 1), got {}", self.whiten_threshold));
        }
        Ok(())
    }
}

/// `wᵀ·Γ_c(h)·w / wᵀ·(Σ₁+Σ₂)·w` in channel space.
pub fn objective(stats: &TrainStats, class: ClassId, w: &[f64], h: &SpectralWeights) -> Result<f64, AlgoError> {
    let num = stats.weighted_cov(class, h)?.quad_form(w);
    ratio(num, stats.sigma_sum().quad_form(w))
}

fn ratio(num: f64, den: f64) -> Result<f64, AlgoError> {
    if !(den > 0.0) || !den.is_finite() {
        return Err(AlgoError::DegenerateFilter(format!(
            "filter has non-positive total power {den:e}"
        )));
    }
    Ok(num / den)
}

/// Channel-space patterns `Q⁺·A⁻ᵀ` for whitened-space eigenvectors `A`.
pub fn compute_patterns(eig: &EigenPairs, projector: &WhiteningProjector) -> Result<RealMatrix, AlgoError> {
    let a = &eig.vectors;
    if !a.is_square() || a.rows() != projector.rank {
        return Err(AlgoError::Pattern(format!(
            "eigenvector matrix is {}x{}, projector rank is {}",
            a.rows(),
            a.cols(),
            projector.rank
        )));
    }
    let inv = a
        .inverse()
        .map_err(|e| AlgoError::Pattern(format!("eigenvector matrix is not invertible: {e}")))?;
    Ok(projector.pattern_map().matmul(&inv.transpose()))
}

/// Whitened statistics and the fixed-denominator solver shared by all trainers.
struct Prepared {
    projector: WhiteningProjector,
    white: TrainStats,
    solver: GeneralizedEigSolver,
    denominator: RealMatrix,
}

impl Prepared {
    fn new(set: &EpochSet, whiten_threshold: f64, r_filters: usize) -> Result<Self, AlgoError> {
        let stats = build_train_stats(set)?;
        let projector = whitening_projector(&stats.sigma_sum(), whiten_threshold)?;
        if r_filters > projector.rank {
            return Err(AlgoError::Config(format!(
                "r_filters = {r_filters} exceeds the whitened rank {}",
                projector.rank
            )));
        }
        let white = stats.project(&projector)?;
        let denominator = white.sigma_sum();
        let solver = GeneralizedEigSolver::new(&denominator)?;
        Ok(Self {
            projector,
            white,
            solver,
            denominator,
        })
    }

    fn objective(&self, class: ClassId, w: &[f64], h: &SpectralWeights) -> Result<f64, AlgoError> {
        let num = self.white.weighted_cov(class, h)?.quad_form(w);
        ratio(num, self.denominator.quad_form(w))
    }

    /// Channel-space filter and pattern for column `col` of `eig`, sign-fixed together.
    fn finish(&self, eig: &EigenPairs, col: usize) -> Result<(Vec<f64>, Vec<f64>), AlgoError> {
        let mut spatial = self.projector.filter_to_channels(&eig.vector(col));
        let mut pattern = compute_patterns(eig, &self.projector)?.column(col);
        if spatial.iter().all(|&v| v == 0.0) {
            return Err(AlgoError::DegenerateFilter("spatial filter is zero".into()));
        }
        let peak = spatial
            .iter()
            .copied()
            .fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
        if peak < 0.0 {
            spatial.iter_mut().for_each(|v| *v = -*v);
            pattern.iter_mut().for_each(|v| *v = -*v);
        }
        Ok((spatial, pattern))
    }

    fn bank(self, selected: Vec<(FilterPair, Vec<f64>)>, algo_tag: AlgoTag, trace: Vec<FilterTrace>) -> TrainedFilterBank {
        let patterns = RealMatrix::from_columns(&selected.iter().map(|(_, p)| p.clone()).collect::<Vec<_>>())
            .expect("patterns share the channel count");
        TrainedFilterBank {
            pairs: selected.into_iter().map(|(p, _)| p).collect(),
            projector: self.projector,
            patterns,
            algo_tag,
            trace,
        }
    }
}

/// Classic CSP: one eigenproblem on `Σ₁`; class 1 takes the top `r`, class 2 the bottom `r`.
pub fn train_csp(set: &EpochSet, r_filters: usize, whiten_threshold: f64) -> Result<TrainedFilterBank, AlgoError> {
    if r_filters < 1 {
        return Err(AlgoError::Config("r_filters must be at least 1".into()));
    }
    let prep = Prepared::new(set, whiten_threshold, r_filters)?;
    let eig = prep.solver.solve(&prep.white.sigma1)?;
    let uniform = SpectralWeights::uniform(prep.white.t, prep.white.fs)?;
    let rank = prep.projector.rank;
    let mut selected = Vec::with_capacity(2 * r_filters);
    for class in ClassId::BOTH {
        for r in 0..r_filters {
            let col = match class {
                ClassId::One => r,
                ClassId::Two => rank - 1 - r,
            };
            let objective = prep.objective(class, &eig.vector(col), &uniform)?;
            let (spatial, pattern) = prep.finish(&eig, col)?;
            let pair = FilterPair {
                spatial,
                spectral: uniform.clone(),
                class_id: class,
                objective,
            };
            selected.push((pair, pattern));
        }
    }
    Ok(prep.bank(selected, AlgoTag::Csp, Vec::new()))
}

/// CSP with the numerator of each class weighted by raw `cos(2πk/t)`.
pub fn train_ccacsp(set: &EpochSet, r_filters: usize, whiten_threshold: f64) -> Result<TrainedFilterBank, AlgoError> {
    if r_filters < 1 {
        return Err(AlgoError::Config("r_filters must be at least 1".into()));
    }
    let prep = Prepared::new(set, whiten_threshold, r_filters)?;
    let cosine = SpectralWeights::cosine(prep.white.t, prep.white.fs);
    let mut selected = Vec::with_capacity(2 * r_filters);
    for class in ClassId::BOTH {
        let gamma = prep.white.weighted_cov_raw(class, cosine.weights())?;
        let eig = prep.solver.solve(&gamma)?;
        for r in 0..r_filters {
            let objective = ratio(gamma.quad_form(&eig.vector(r)), prep.denominator.quad_form(&eig.vector(r)))?;
            let (spatial, pattern) = prep.finish(&eig, r)?;
            let pair = FilterPair {
                spatial,
                spectral: cosine.clone(),
                class_id: class,
                objective,
            };
            selected.push((pair, pattern));
        }
    }
    Ok(prep.bank(selected, AlgoTag::Ccacsp, Vec::new()))
}

/// Result of one inner loop, before selection.
struct Candidate {
    objective: f64,
    init: usize,
    rank: usize,
    w: Vec<f64>,
    h: SpectralWeights,
    /// Eigenproblem whose column `col` is `w`; source of the pattern.
    eig: EigenPairs,
    col: usize,
    trace: FilterTrace,
}

fn optimize_init(
    prep: &Prepared,
    class: ClassId,
    init: usize,
    config: &SacspConfig,
) -> Result<Vec<Candidate>, AlgoError> {
    let kind = config.init_kinds[init];
    let white = &prep.white;
    let h0 = make_init_weights(kind, white.t, white.fs)?;
    let eig0 = prep.solver.solve(&white.weighted_cov(class, &h0)?)?;
    let mut out = Vec::with_capacity(config.r_filters);
    for r in 0..config.r_filters {
        let mut w = eig0.vector(r);
        let mut h = h0.clone();
        let mut eig = eig0.clone();
        let mut col = r;
        let mut current = prep.objective(class, &w, &h)?;
        let mut objectives = vec![current];
        let mut hit_max_iters = false;
        if config.spectral_updates {
            let mut converged = false;
            for step in 0..config.max_iters {
                let h_next = update_weights(&white.bin_power(class, &w)?)
                    .map_err(|e| AlgoError::DegenerateFilter(format!("{class}, init {init}, filter {r}: {e}")))?;
                let eig_next = prep.solver.solve(&white.weighted_cov(class, &h_next)?)?;
                let w_next = eig_next.vector(0);
                let next = prep.objective(class, &w_next, &h_next)?;
                objectives.push(next);
                if step == 0 && next < current - MONOTONE_TOL * current.abs() {
                    return Err(AlgoError::Optimization(format!(
                        "{class}, init {init}, filter {r}: objective fell from {current:e} to {next:e} on the first step"
                    )));
                }
                let gain = next - current;
                (w, h, eig, col, current) = (w_next, h_next, eig_next, 0, next);
                if gain <= config.epsilon {
                    converged = true;
                    break;
                }
            }
            hit_max_iters = !converged;
        }
        out.push(Candidate {
            objective: current,
            init,
            rank: r,
            w,
            h,
            eig,
            col,
            trace: FilterTrace {
                class_id: class,
                init,
                init_kind: kind,
                rank: r,
                objectives,
                hit_max_iters,
                selected: false,
            },
        });
    }
    Ok(out)
}

/// Orders candidates by objective (descending), then initialization, then filter index.
fn selection_order(a: &Candidate, b: &Candidate) -> Ordering {
    b.objective
        .total_cmp(&a.objective)
        .then(a.init.cmp(&b.init))
        .then(a.rank.cmp(&b.rank))
}

/// Alternating maximization over spatial and spectral filters.
pub fn train_sacsp(set: &EpochSet, config: &SacspConfig) -> Result<TrainedFilterBank, AlgoError> {
    config.validate()?;
    let prep = Prepared::new(set, config.whiten_threshold, config.r_filters)?;
    let jobs: Vec<(ClassId, usize)> = ClassId::BOTH
        .into_iter()
        .flat_map(|c| (0..config.m_inits).map(move |m| (c, m)))
        .collect();
    let results: Vec<Vec<Candidate>> = jobs
        .par_iter()
        .map(|&(class, m)| optimize_init(&prep, class, m, config))
        .collect::<Result<_, _>>()?;

    let mut selected = Vec::with_capacity(2 * config.r_filters);
    let mut trace = Vec::new();
    let mut per_class: [Vec<Candidate>; 2] = [Vec::new(), Vec::new()];
    for (job, cands) in jobs.iter().zip(results) {
        per_class[job.0.index()].extend(cands);
    }
    for (class, mut cands) in ClassId::BOTH.into_iter().zip(per_class) {
        let mut order: Vec<usize> = (0..cands.len()).collect();
        order.sort_by(|&i, &j| selection_order(&cands[i], &cands[j]));
        for &i in order.iter().take(config.r_filters) {
            cands[i].trace.selected = true;
            let c = &cands[i];
            let (spatial, pattern) = prep.finish(&c.eig, c.col)?;
            debug_assert_eq!(c.eig.vector(c.col), c.w);
            let pair = FilterPair {
                spatial,
                spectral: c.h.clone(),
                class_id: class,
                objective: c.objective,
            };
            selected.push((pair, pattern));
        }
        trace.extend(cands.into_iter().map(|c| c.trace));
    }
    Ok(prep.bank(selected, AlgoTag::Sacsp, trace))
}

/// Trains the requested algorithm; CSP and CCACSP use `r_filters` and `whiten_threshold` only.
pub fn train(set: &EpochSet, algo: AlgoTag, config: &SacspConfig) -> Result<TrainedFilterBank, AlgoError> {
    match algo {
        AlgoTag::Csp => train_csp(set, config.r_filters, config.whiten_threshold),
        AlgoTag::Ccacsp => train_ccacsp(set, config.r_filters, config.whiten_threshold),
        AlgoTag::Sacsp => train_sacsp(set, config),
    }
}
