mod common;

use common::rel_err;
use sacsp_core::algorithms::{train_sacsp, SacspConfig};
use sacsp_core::linalg::{unitary_dft, RealMatrix};
use sacsp_core::spectral::build_train_stats;
use sacsp_core::synth::*;
use sacsp_core::ClassId;

fn unit(n: usize, i: usize) -> Vec<f64> {
    (0..n).map(|j| if j == i { 1.0 } else { 0.0 }).collect()
}

fn source(col: Vec<f64>, center_hz: f64, bandwidth_hz: f64, a1: f64, a2: f64) -> Source {
    Source { mixing_column: col, center_hz, bandwidth_hz, class1_amp: a1, class2_amp: a2 }
}

fn spec(n: usize, sources: Vec<Source>, noise: f64, per_class: usize, seconds: f64) -> SynthSpec {
    SynthSpec {
        n_channels: n,
        fs: 100.0,
        epoch_seconds: seconds,
        n_epochs_per_class: per_class,
        sources,
        noise_sigma: noise,
        seed: 5,
    }
}

#[test]
fn silent_class_is_all_zero() {
    let s = spec(3, vec![source(unit(3, 1), 10.0, 4.0, 2.0, 0.0)], 0.0, 5, 1.0);
    let (set, truth) = generate(&s).unwrap();
    assert_eq!(truth, s);
    assert_eq!(set.class_counts(), [5, 5]);
    assert!(set.of_class(ClassId::Two).all(|e| e.data.max_abs() == 0.0));
    assert!(set.of_class(ClassId::One).all(|e| e.data.max_abs() > 0.0));
}

#[test]
fn covariance_matches_mixing_model() {
    let (a1, a2, sigma) = (2.0, 1.0, 0.5);
    let s = spec(
        4,
        vec![source(unit(4, 0), 20.0, 30.0, a1, a1), source(unit(4, 2), 20.0, 30.0, a2, a2)],
        sigma,
        100,
        1.0,
    );
    let (set, _) = generate(&s).unwrap();
    let mut cov = RealMatrix::zeros(4, 4);
    for e in &set {
        cov.add_scaled(1.0 / (100.0 * set.len() as f64), &e.data.matmul(&e.data.transpose()));
    }
    let mut model = RealMatrix::identity(4).scale(sigma * sigma);
    model.set(0, 0, model.get(0, 0) + a1 * a1);
    model.set(2, 2, model.get(2, 2) + a2 * a2);
    assert!(rel_err(&cov, &model) <= 0.1, "relative error {}", rel_err(&cov, &model));
}

#[test]
fn generation_is_deterministic_across_threads() {
    let s = default_spec(9);
    let (a, _) = generate(&s).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let (b, _) = pool.install(|| generate(&s)).unwrap();
    assert_eq!(a, b);
    let (c, _) = generate(&default_spec(10)).unwrap();
    assert_ne!(a, c);
}

#[test]
fn center_bin_power_scales_with_amplitude_squared() {
    let s = spec(2, vec![source(unit(2, 0), 10.0, 4.0, 1.0, 2.0)], 0.0, 100, 1.0);
    let (set, _) = generate(&s).unwrap();
    let stats = build_train_stats(&set).unwrap();
    let p1 = stats.bin_power(ClassId::One, &[1.0, 0.0]).unwrap().power[10];
    let p2 = stats.bin_power(ClassId::Two, &[1.0, 0.0]).unwrap().power[10];
    let ratio = p2 / p1;
    assert!((ratio / 4.0 - 1.0).abs() <= 0.1, "ratio {ratio}");
}

#[test]
fn sources_are_band_limited() {
    // Power is averaged over 20 noiseless 10-s epochs; single epochs scatter
    // around the mean through rectangular-window leakage.
    for (center, bw) in [(10.0, 2.0), (20.0, 30.0), (30.0, 6.0)] {
        let s = spec(1, vec![source(vec![1.0], center, bw, 1.0, 1.0)], 0.0, 10, 10.0);
        let (set, _) = generate(&s).unwrap();
        let t = 1000;
        let (mut inside, mut outside) = (0.0, 0.0);
        for e in &set {
            let spectrum = unitary_dft(&e.data).unwrap();
            for k in 0..t {
                let f = (if k > t / 2 { t - k } else { k }) as f64 * 0.1;
                let p = spectrum.get(0, k).norm_sqr();
                if f >= center - bw && f <= center + bw {
                    inside += p;
                } else {
                    outside += p;
                }
            }
        }
        assert!(outside <= 0.01 * inside, "{center} Hz: out/in = {}", outside / inside);
    }
}

#[test]
fn identity_mixing_recovers_patterns() {
    let s = spec(
        3,
        vec![
            source(unit(3, 0), 10.0, 2.0, 3.0, 0.5),
            source(unit(3, 1), 10.0, 2.0, 0.5, 3.0),
            source(unit(3, 2), 22.0, 6.0, 1.0, 1.0),
        ],
        0.0,
        60,
        1.0,
    );
    let (set, _) = generate(&s).unwrap();
    let cfg = SacspConfig { r_filters: 1, ..SacspConfig::default() };
    let bank = train_sacsp(&set, &cfg).unwrap();
    let score = reference_recovery_score(&bank, &s);
    for class in ClassId::BOTH {
        let c = score.pattern_cosines[class.index()].unwrap();
        assert!(c >= 0.99, "{class}: cosine {c}");
        assert!(score.peak_bin_errors[class.index()].iter().all(|e| *e <= 1.0));
    }
}

#[test]
fn default_spec_peaks_at_ten_hz() {
    let s = spec_with_channels(8, 33);
    let (set, _) = generate(&s).unwrap();
    let bank = train_sacsp(&set, &SacspConfig::default()).unwrap();
    let score = reference_recovery_score(&bank, &s);
    for class in ClassId::BOTH {
        assert_eq!(score.peak_bin_errors[class.index()].len(), 3);
        assert!(score.peak_bin_errors[class.index()].iter().all(|e| *e <= 1.0));
    }
}

#[test]
fn no_class_difference_gives_no_scores() {
    let s = spec(3, vec![source(unit(3, 0), 10.0, 2.0, 1.0, 1.0)], 0.3, 20, 1.0);
    assert_eq!(s.discriminative_source(ClassId::One), None);
    let (set, _) = generate(&s).unwrap();
    let bank = train_sacsp(&set, &SacspConfig { r_filters: 1, ..SacspConfig::default() }).unwrap();
    let score = reference_recovery_score(&bank, &s);
    assert_eq!(score.pattern_cosines, [None, None]);
    assert!(score.peak_bin_errors.iter().all(Vec::is_empty));
}

#[test]
fn invalid_specs_name_the_field() {
    let base = default_spec(1);
    let check = |mutate: &dyn Fn(&mut SynthSpec), field: &str| {
        let mut s = base.clone();
        mutate(&mut s);
        match generate(&s) {
            Err(SynthError::Invalid { field: f, .. }) => assert_eq!(f, field),
            other => panic!("expected error on {field}, got {other:?}"),
        }
    };
    check(&|s| s.sources[1].center_hz = 49.5, "sources[1].center_hz");
    check(&|s| s.sources[0].mixing_column[0] += 0.5, "sources[0].mixing_column");
    check(&|s| s.sources[2].class2_amp = -1.0, "sources[2].class2_amp");
    check(&|s| s.noise_sigma = f64::NAN, "noise_sigma");
    check(&|s| s.epoch_seconds = 0.015, "epoch_seconds");
    check(&|s| s.n_epochs_per_class = 0, "n_epochs_per_class");
}

#[test]
fn mixing_columns_are_unit_norm() {
    for col in random_mixing_columns(16, 5, 3) {
        assert!((col.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
    }
    assert_eq!(random_mixing_columns(4, 2, 3), random_mixing_columns(4, 2, 3));
    let (calib, online) = transfer_specs(4);
    assert_eq!(calib.sources[0].mixing_column, online.sources[0].mixing_column);
    assert_ne!(calib.seed, online.seed);
}
