//! The four subcommands. Each returns the text it prints on success.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sacsp_core::algorithms::AlgoTag;
use sacsp_core::classify::{accuracy, fit_model, Fingerprint};
use sacsp_core::eval::{run_kfold, run_transfer, EvalReport, Protocol, SplitPlan};
use sacsp_core::preprocess::{balance_classes, preprocess_epochs, PreprocessConfig};
use sacsp_core::synth::{generate, SynthSpec};
use sacsp_core::EpochSet;
use serde::Serialize;

use crate::config::RunConfig;
use crate::epoch_file;
use crate::error::CliError;
use crate::export::export_all;
use crate::model_file::ModelFile;

pub const CALIB_FILE: &str = "calib.epd";
pub const ONLINE_FILE: &str = "online.epd";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";

fn describe(name: &str, spec: &SynthSpec) -> String {
    let mut s = format!(
        "{name}: {} epochs ({} per class), {} channels, {} samples @ {} Hz, noise sigma {}, seed {}\n",
        2 * spec.n_epochs_per_class,
        spec.n_epochs_per_class,
        spec.n_channels,
        spec.n_samples(),
        spec.fs,
        spec.noise_sigma,
        spec.seed
    );
    for (i, src) in spec.sources.iter().enumerate() {
        let _ = writeln!(
            s,
            "  source {i}: {} Hz +/- {} Hz, amplitude class1 {} class2 {}",
            src.center_hz,
            src.bandwidth_hz / 2.0,
            src.class1_amp,
            src.class2_amp
        );
    }
    s
}

/// Writes `calib.epd` and `online.epd` into `out_dir`.
pub fn cmd_synth(config: Option<&Path>, seed: Option<u64>, out_dir: &Path) -> Result<String, CliError> {
    let cfg = RunConfig::load(config)?;
    let (calib_spec, online_spec) = cfg.synth.specs(seed)?;
    let gen = |s: &SynthSpec| generate(s).map(|(set, _)| set).map_err(|e| CliError::Config(e.to_string()));
    let (calib, online) = (gen(&calib_spec)?, gen(&online_spec)?);
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    epoch_file::write(&out_dir.join(CALIB_FILE), &calib)?;
    epoch_file::write(&out_dir.join(ONLINE_FILE), &online)?;
    Ok(format!("{}{}", describe("calibration", &calib_spec), describe("online", &online_spec)))
}

fn load_preprocessed(path: &Path, pre: &PreprocessConfig) -> Result<EpochSet, CliError> {
    let raw = epoch_file::read(path)?;
    preprocess_epochs(&raw, pre).map_err(|e| CliError::Config(format!("{}: preprocessing failed: {e}", path.display())))
}

/// Trains filters and LDA on `epochs` and writes the model document.
pub fn cmd_train(epochs: &Path, algo: AlgoTag, config: Option<&Path>, out: &Path) -> Result<String, CliError> {
    let cfg = RunConfig::load(config)?;
    let set = load_preprocessed(epochs, &cfg.preprocess)?;
    let fingerprint = Fingerprint::of(&set, &cfg.preprocess);
    let model = fit_model(&set, algo, &cfg.sacsp, fingerprint).map_err(|e| CliError::Training(e.to_string()))?;
    let mut s = format!("{algo}: {} filters on {} epochs\n", model.bank.pairs.len(), set.len());
    for tr in &model.bank.trace {
        let _ = writeln!(
            s,
            "  class {} init {} ({:?}) filter {}: objective {:.6e} after {} iterations{}{}",
            tr.class_id.label(),
            tr.init,
            tr.init_kind,
            tr.rank + 1,
            tr.objectives.last().copied().unwrap_or(f64::NAN),
            tr.iterations(),
            if tr.hit_max_iters { " (iteration cap reached)" } else { "" },
            if tr.selected { " [selected]" } else { "" }
        );
    }
    for (j, p) in model.bank.pairs.iter().enumerate() {
        let _ = writeln!(
            s,
            "  selected {j}: class {} objective {:.6e} spectral peak {} Hz{}",
            p.class_id.label(),
            p.objective,
            p.spectral.peak_hz(),
            if model.bank.trace.is_empty() { " (closed form, 0 iterations)" } else { "" }
        );
    }
    ModelFile::new(algo, cfg.preprocess, cfg.sacsp, model).save(out)?;
    Ok(s)
}

#[derive(Debug, Clone, Default)]
pub struct EvalArgs {
    pub model: Option<PathBuf>,
    pub algo: Option<AlgoTag>,
    pub config: Option<PathBuf>,
    pub calib: Option<PathBuf>,
    pub online: Option<PathBuf>,
    pub protocol: Option<Protocol>,
    pub repeats: Option<usize>,
    pub seed: Option<u64>,
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct ReportDocument<'a> {
    #[serde(flatten)]
    report: &'a EvalReport,
    seed: u64,
    k: Option<usize>,
    dispersion_kind: &'static str,
}

fn need<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    p.as_deref().ok_or_else(|| CliError::Config(format!("{flag} is required for this evaluation")))
}

/// Scores a fixed model on `n_repeats` balanced draws of the online set.
fn eval_fixed_model(model_file: &ModelFile, online: &EpochSet, plan: &SplitPlan) -> Result<EvalReport, CliError> {
    let acc = (0..plan.n_repeats)
        .map(|r| {
            let balanced = balance_classes(online, plan.repeat_seed(r) ^ 1).map_err(|e| CliError::Eval(e.to_string()))?;
            accuracy(&model_file.model, &balanced).map_err(|e| CliError::Eval(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EvalReport::new(acc, model_file.algo, Protocol::Transfer))
}

/// Runs the requested protocol and writes `report.json` and `report.csv` into `args.out`.
pub fn cmd_eval(args: &EvalArgs) -> Result<String, CliError> {
    let cfg = RunConfig::load(args.config.as_deref())?;
    let protocol = args.protocol.unwrap_or(cfg.eval.protocol);
    let repeats = args.repeats.unwrap_or(cfg.eval.repeats);
    let seed = args.seed.unwrap_or(cfg.eval.seed);
    let plan = match protocol {
        Protocol::Transfer => SplitPlan::transfer(repeats, seed),
        Protocol::Kfold => SplitPlan::kfold(cfg.eval.k, repeats, seed),
    };
    plan.validate().map_err(|e| CliError::Config(e.to_string()))?;

    let report = match (&args.model, args.algo) {
        (Some(_), Some(_)) => return Err(CliError::Config("pass either --model or --algo, not both".into())),
        (None, None) => return Err(CliError::Config("one of --model or --algo is required".into())),
        (Some(m), None) => {
            if protocol != Protocol::Transfer {
                return Err(CliError::Eval("a trained model can only be scored with the transfer protocol".into()));
            }
            let mf = ModelFile::load(m)?;
            let online = load_preprocessed(need(&args.online, "--online")?, &mf.preprocess)?;
            eval_fixed_model(&mf, &online, &plan)?
        }
        (None, Some(algo)) => match protocol {
            Protocol::Transfer => {
                let calib = load_preprocessed(need(&args.calib, "--calib")?, &cfg.preprocess)?;
                let online = load_preprocessed(need(&args.online, "--online")?, &cfg.preprocess)?;
                run_transfer(&calib, &online, algo, &cfg.sacsp, &plan).map_err(|e| CliError::Eval(e.to_string()))?
            }
            Protocol::Kfold => {
                let path = args.calib.as_ref().or(args.online.as_ref()).ok_or_else(|| {
                    CliError::Config("--calib (or --online) is required for k-fold evaluation".into())
                })?;
                let set = load_preprocessed(path, &cfg.preprocess)?;
                run_kfold(&set, algo, &cfg.sacsp, &plan).map_err(|e| CliError::Eval(e.to_string()))?
            }
        },
    };

    std::fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    let doc = ReportDocument {
        report: &report,
        seed,
        k: (protocol == Protocol::Kfold).then_some(plan.k),
        dispersion_kind: "population standard deviation over repeats",
    };
    let json_path = args.out.join(REPORT_JSON);
    let json = serde_json::to_string_pretty(&doc).expect("report serializes");
    std::fs::write(&json_path, json).map_err(|e| CliError::io(&json_path, e))?;
    let csv_path = args.out.join(REPORT_CSV);
    let mut w = csv::Writer::from_path(&csv_path).map_err(|e| CliError::io(&csv_path, e))?;
    w.write_record(["repeat", "accuracy", "algo", "protocol"]).map_err(|e| CliError::io(&csv_path, e))?;
    for (r, a) in report.per_repeat_accuracy.iter().enumerate() {
        w.write_record([r.to_string(), a.to_string(), report.algo_tag.to_string(), protocol.as_str().to_string()])
            .map_err(|e| CliError::io(&csv_path, e))?;
    }
    w.flush().map_err(|e| CliError::io(&csv_path, e))?;
    Ok(format!(
        "{} {} ({} repeats): {:.2}/{:.3}\n",
        report.algo_tag,
        protocol.as_str(),
        report.per_repeat_accuracy.len(),
        report.mean,
        report.dispersion
    ))
}

/// Writes `spectral_filters.csv`, `spatial_patterns.csv` and `spectral_filters.svg`.
pub fn cmd_export(model: &Path, out_dir: &Path) -> Result<String, CliError> {
    let mf = ModelFile::load(model)?;
    export_all(&mf.model, out_dir)?;
    Ok(format!(
        "exported {} filters to {}\n",
        mf.model.bank.pairs.len(),
        out_dir.display()
    ))
}
