use sdt::bench::{
    ablation_sweep, robustness_suite, roundtrip_suite, run_bench, AblationParam, BenchConfig, Perturbation,
    Representation, RoundtripOptions, SuiteKind,
};
use sdt::decode::DecodeParams;
use sdt::representations::{QuantParams, SdtParams};
use sdt::synth::{standard_suite, PerturbKind};

fn noisy() -> RoundtripOptions {
    RoundtripOptions {
        noise: 0.1,
        ..Default::default()
    }
}

#[test]
fn alpha_sweep_gives_one_row_per_value() {
    let scenes = standard_suite(7, 0);
    let rows = ablation_sweep(
        AblationParam::Alpha,
        &[0.6, 0.8, 1.0],
        &scenes,
        &SdtParams::default(),
        &DecodeParams::default(),
        &noisy(),
        1,
    )
    .unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.parameter == "alpha" && r.scenes == 7));
    assert!(ablation_sweep(
        AblationParam::Alpha,
        &[],
        &scenes,
        &SdtParams::default(),
        &DecodeParams::default(),
        &noisy(),
        1
    )
    .is_err());
}

#[test]
fn seed_set_shrinks_as_theta_grows_on_every_scene() {
    let scenes = standard_suite(21, 0);
    let sdt = SdtParams::default();
    let per_theta: Vec<Vec<usize>> = [0.5, 0.6, 0.7, 0.8, 0.9]
        .iter()
        .map(|&t| {
            let dec = DecodeParams::new(t, 16, false).unwrap();
            roundtrip_suite(&scenes, &sdt, &dec, &noisy(), 1)
                .unwrap()
                .scenes
                .iter()
                .map(|s| s.seed_pixels)
                .collect()
        })
        .collect();
    for pair in per_theta.windows(2) {
        for (lo, hi) in pair[0].iter().zip(&pair[1]) {
            assert!(hi <= lo);
        }
    }
}

#[test]
fn more_bins_never_hurt_on_exact_energies() {
    let scenes = standard_suite(35, 0);
    let ious: Vec<f64> = [5u16, 10, 20]
        .iter()
        .map(|&k| {
            let opts = RoundtripOptions {
                bins: Some(QuantParams::new(k).unwrap()),
                ..Default::default()
            };
            roundtrip_suite(&scenes, &SdtParams::default(), &DecodeParams::default(), &opts, 1)
                .unwrap()
                .mean_iou
                .unwrap()
        })
        .collect();
    assert!(ious.windows(2).all(|w| w[1] >= w[0]), "{ious:?}");
}

#[test]
fn every_representation_is_exact_without_perturbation() {
    let cfg = BenchConfig {
        scenes: 20,
        ..Default::default()
    };
    let rows = robustness_suite(
        "touching-pairs",
        &cfg.touching_pairs(),
        &[Perturbation::exact()],
        &Representation::ALL,
        &cfg.sdt().unwrap(),
        &cfg.decode().unwrap(),
        cfg.perturb_seed,
        1,
    )
    .unwrap();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert_eq!(r.mean_f1, 1.0, "{}", r.representation);
        assert_eq!((r.splits, r.merges), (0, 0), "{}", r.representation);
    }
}

#[test]
fn dropout_rows_share_dropped_pixels_across_representations() {
    let cfg = BenchConfig {
        scenes: 10,
        ..Default::default()
    };
    let pert = [Perturbation {
        kind: Some(PerturbKind::BoundaryDropout),
        level: 0.05,
    }];
    let run = |reps: &[Representation]| {
        robustness_suite(
            "t",
            &cfg.touching_pairs(),
            &pert,
            reps,
            &cfg.sdt().unwrap(),
            &cfg.decode().unwrap(),
            cfg.perturb_seed,
            1,
        )
        .unwrap()
    };
    // a representation's row does not depend on which others run beside it
    let both = run(&[Representation::Boundary, Representation::Sdt]);
    let alone = run(&[Representation::Boundary]);
    assert_eq!(both[0], alone[0]);
}

#[test]
fn robustness_run_reports_rates_in_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = BenchConfig {
        scenes: 3,
        dropout: vec![0.01],
        noise: vec![],
        blur: vec![],
        ..Default::default()
    };
    let out = run_bench(SuiteKind::Robustness, &cfg, dir.path(), 1).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("robustness.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    for col in ["suite", "representation", "split_rate", "merge_rate", "mean_f1"] {
        assert!(header.split(',').any(|h| h == col), "{header}");
    }
    // 4 suites x 4 representations x (exact + one dropout level)
    assert_eq!(csv.lines().count(), 1 + 4 * 4 * 2);
    assert!(out.artifacts.iter().all(|a| a.exists()));
}
