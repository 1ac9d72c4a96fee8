//! JSON run configuration with sections `preprocess`, `sacsp`, `synth`, `eval`.
//!
//! Every section and field is optional; missing values take their defaults.
//! Unknown fields are rejected with their path.

use std::path::Path;

use sacsp_core::algorithms::SacspConfig;
use sacsp_core::eval::Protocol;
use sacsp_core::preprocess::PreprocessConfig;
use sacsp_core::synth::{transfer_specs_with_channels, SynthSpec, ONLINE_SEED_SALT};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub preprocess: PreprocessConfig,
    pub sacsp: SacspConfig,
    pub synth: SynthSection,
    pub eval: EvalSection,
}

/// Either explicit specs, or the built-in transfer pair at `n_channels`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub seed: u64,
    pub n_channels: usize,
    pub calib: Option<SynthSpec>,
    pub online: Option<SynthSpec>,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self {
            seed: 0,
            n_channels: 16,
            calib: None,
            online: None,
        }
    }
}

impl SynthSection {
    /// Calibration and online specs; `seed` overrides the seeds of explicit specs.
    pub fn specs(&self, seed: Option<u64>) -> Result<(SynthSpec, SynthSpec), CliError> {
        let seed = seed.unwrap_or(self.seed);
        if self.n_channels == 0 {
            return Err(CliError::Config("synth.n_channels: must be at least 1".into()));
        }
        let (mut calib, mut online) = transfer_specs_with_channels(self.n_channels, seed);
        if let Some(c) = &self.calib {
            calib = c.clone();
        }
        if let Some(o) = &self.online {
            online = o.clone();
        }
        if self.calib.is_some() && seed != self.seed {
            calib.seed = seed;
        }
        if self.online.is_some() && seed != self.seed {
            online.seed = seed ^ ONLINE_SEED_SALT;
        }
        for (name, spec) in [("calib", &calib), ("online", &online)] {
            spec.validate()
                .map_err(|e| CliError::Config(format!("synth.{name}.{}", e.to_string().trim_start_matches("invalid synth spec: "))))?;
        }
        Ok((calib, online))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub protocol: Protocol,
    /// Folds for the k-fold protocol.
    pub k: usize,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            protocol: Protocol::Transfer,
            k: 5,
            repeats: 10,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("{path}: {}", e.into_inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                Self::parse(&text)
            }
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.sacsp
            .validate()
            .map_err(|e| CliError::Config(format!("sacsp: {e}")))?;
        self.preprocess
            .bandpass(self.preprocess.target_fs)
            .map_err(|e| CliError::Config(format!("preprocess: {e}")))?;
        if self.eval.repeats < 1 {
            return Err(CliError::Config("eval.repeats: must be at least 1".into()));
        }
        if self.eval.protocol == Protocol::Kfold && self.eval.k < 2 {
            return Err(CliError::Config("eval.k: must be at least 2".into()));
        }
        Ok(())
    }
}
