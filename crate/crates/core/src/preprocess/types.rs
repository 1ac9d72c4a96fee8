use serde::{Deserialize, Serialize};

use super::PreprocessError;
use crate::linalg::RealMatrix;

/// One of the two classes. Serialized as the integer label 1 or 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum ClassId {
    One,
    Two,
}

impl ClassId {
    pub const BOTH: [ClassId; 2] = [ClassId::One, ClassId::Two];

    /// 0 for class 1, 1 for class 2.
    pub fn index(self) -> usize {
        match self {
            ClassId::One => 0,
            ClassId::Two => 1,
        }
    }

    pub fn label(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn other(self) -> ClassId {
        match self {
            ClassId::One => ClassId::Two,
            ClassId::Two => ClassId::One,
        }
    }
}

impl TryFrom<u8> for ClassId {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(ClassId::One),
            2 => Ok(ClassId::Two),
            other => Err(format!("class label must be 1 or 2, got {other}")),
        }
    }
}

impl From<ClassId> for u8 {
    fn from(c: ClassId) -> u8 {
        c.label()
    }
}

impl std::fmt::Display for ClassId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "class {}", self.label())
    }
}

/// Event marker in a continuous recording.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    pub sample: usize,
    pub label: ClassId,
    /// The last cursor movement of a trial; excluded from epoching on request.
    pub trial_end: bool,
}

/// Continuous multichannel recording (`n_channels × T`, microvolts).
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousRecording {
    pub fs: f64,
    pub samples: RealMatrix,
    pub markers: Vec<Marker>,
}

impl ContinuousRecording {
    pub fn new(fs: f64, samples: RealMatrix, markers: Vec<Marker>) -> Result<Self, PreprocessError> {
        if !(fs > 0.0) {
            return Err(PreprocessError::Invalid(format!("sampling rate must be positive, got {fs}")));
        }
        let len = samples.cols();
        for (i, w) in markers.windows(2).enumerate() {
            if w[1].sample <= w[0].sample {
                return Err(PreprocessError::Invalid(format!(
                    "marker {} at sample {} does not follow sample {}",
                    i + 1,
                    w[1].sample,
                    w[0].sample
                )));
            }
        }
        if let Some(m) = markers.iter().find(|m| m.sample >= len) {
            return Err(PreprocessError::Invalid(format!(
                "marker at sample {} lies beyond the recording ({len} samples)",
                m.sample
            )));
        }
        Ok(Self { fs, samples, markers })
    }

    pub fn n_channels(&self) -> usize {
        self.samples.rows()
    }

    pub fn len(&self) -> usize {
        self.samples.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.cols() == 0
    }
}

/// One labelled `n × t` data window.
#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    pub data: RealMatrix,
    pub label: ClassId,
    pub fs: f64,
}

impl Epoch {
    pub fn n_channels(&self) -> usize {
        self.data.rows()
    }

    pub fn n_samples(&self) -> usize {
        self.data.cols()
    }
}

/// Labelled epochs sharing channel count, length and sampling rate.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochSet {
    epochs: Vec<Epoch>,
    fs: f64,
    n_channels: usize,
    n_samples: usize,
}

impl EpochSet {
    /// An empty set with the given geometry.
    pub fn empty(fs: f64, n_channels: usize, n_samples: usize) -> Self {
        Self {
            epochs: Vec::new(),
            fs,
            n_channels,
            n_samples,
        }
    }

    pub fn new(epochs: Vec<Epoch>) -> Result<Self, PreprocessError> {
        let first = epochs
            .first()
            .ok_or_else(|| PreprocessError::Invalid("an epoch set needs at least one epoch to infer its shape".into()))?;
        let (fs, n, t) = (first.fs, first.n_channels(), first.n_samples());
        let mut set = Self::empty(fs, n, t);
        for e in epochs {
            set.push(e)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, epoch: Epoch) -> Result<(), PreprocessError> {
        if epoch.n_channels() != self.n_channels
            || epoch.n_samples() != self.n_samples
            || epoch.fs != self.fs
        {
            return Err(PreprocessError::Invalid(format!(
                "epoch shape {}x{} @ {} Hz does not match set shape {}x{} @ {} Hz",
                epoch.n_channels(),
                epoch.n_samples(),
                epoch.fs,
                self.n_channels,
                self.n_samples,
                self.fs
            )));
        }
        self.epochs.push(epoch);
        Ok(())
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn epochs(&self) -> &[Epoch] {
        &self.epochs
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Epoch> {
        self.epochs.iter()
    }

    pub fn of_class(&self, class: ClassId) -> impl Iterator<Item = &Epoch> {
        self.epochs.iter().filter(move |e| e.label == class)
    }

    pub fn class_indices(&self, class: ClassId) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.epochs[i].label == class).collect()
    }

    /// `[count of class 1, count of class 2]`
    pub fn class_counts(&self) -> [usize; 2] {
        let mut counts = [0; 2];
        for e in &self.epochs {
            counts[e.label.index()] += 1;
        }
        counts
    }

    /// New set holding the epochs at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> EpochSet {
        EpochSet {
            epochs: indices.iter().map(|&i| self.epochs[i].clone()).collect(),
            ..Self::empty(self.fs, self.n_channels, self.n_samples)
        }
    }

    /// Applies `f` to every epoch's data, keeping labels.
    pub fn try_map<E>(
        &self,
        mut f: impl FnMut(&RealMatrix) -> Result<RealMatrix, E>,
    ) -> Result<EpochSet, E> {
        let mut epochs = Vec::with_capacity(self.len());
        let mut n_samples = self.n_samples;
        let mut n_channels = self.n_channels;
        for e in &self.epochs {
            let data = f(&e.data)?;
            n_channels = data.rows();
            n_samples = data.cols();
            epochs.push(Epoch {
                data,
                label: e.label,
                fs: e.fs,
            });
        }
        Ok(EpochSet {
            epochs,
            fs: self.fs,
            n_channels,
            n_samples,
        })
    }

    /// Same data with labels replaced (used for label-permutation checks).
    pub fn with_labels(&self, labels: &[ClassId]) -> EpochSet {
        assert_eq!(labels.len(), self.len());
        let mut out = self.clone();
        for (e, &l) in out.epochs.iter_mut().zip(labels) {
            e.label = l;
        }
        out
    }
}

impl<'a> IntoIterator for &'a EpochSet {
    type Item = &'a Epoch;
    type IntoIter = std::slice::Iter<'a, Epoch>;

    fn into_iter(self) -> Self::IntoIter {
        self.epochs.iter()
    }
}
