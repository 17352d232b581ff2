use std::collections::BTreeMap;
use std::path::Path;

use gait_core::params::{Parameter, Summary, TrialAggregate};
use gait_core::report::{
    build_report, emit_plot_data, emit_tables, run_analyze, run_trials, write_synth_study, AnalysisConfig, Cell,
    Manifest, ReportError, StudyReport, SystemSummary,
};
use gait_core::stats::{bland_altman, PairedSeries};
use gait_core::synth::{SynthNoise, SynthParams};

fn moderate_noise() -> SynthParams {
    SynthParams {
        n_strides: 6,
        noise: SynthNoise { grf_sigma_n: 2.0, kp_sigma_px: 2.0, confidence_dropout_rate: 0.05 },
        seed: 100,
        ..Default::default()
    }
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect()
}

#[test]
fn synthetic_study_correlates_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = write_synth_study(&moderate_noise(), 20, dir.path(), true).unwrap();
    let m = Manifest::load(&manifest_path).unwrap();
    assert_eq!(m.trials.len(), 60);
    let cfg = AnalysisConfig { plot_svg: true, ..Default::default() };

    let r = run_analyze(&m, &cfg, 4).unwrap();
    assert_eq!(r.systems(), vec!["DLCCT_16", "OPPT", "Platforms"]);
    assert_eq!(r.table_b.len(), 8);
    for c in r.pearson.iter().filter(|c| c.parameter == Parameter::StepTime) {
        let v = c.value.unwrap();
        assert!(v > 0.7, "{} step time r = {v}", c.system);
    }
    for c in &r.table_b {
        let half = c.value.loa_upper - c.value.bias;
        assert!((half - (c.value.bias - c.value.loa_lower)).abs() <= 1e-12);
    }
    for c in r.table_c.iter().filter(|c| c.parameter == Parameter::StepTime) {
        assert!(c.value.accuracy_mu < 0.02, "{}: {}", c.system, c.value.accuracy_mu);
    }

    let out1 = dir.path().join("out1");
    let out2 = dir.path().join("out2");
    emit_tables(&r, &out1).unwrap();
    emit_plot_data(&r, &out1, cfg.plot_svg).unwrap();
    let r2 = run_analyze(&m, &cfg, 1).unwrap();
    emit_tables(&r2, &out2).unwrap();
    emit_plot_data(&r2, &out2, cfg.plot_svg).unwrap();
    let (a, b) = (read_dir(&out1), read_dir(&out2));
    assert_eq!(a.len(), 7 + 8 * 4);
    assert_eq!(a, b);

    // violin summaries agree with table_c before rounding
    for c in &r.table_c {
        let text = String::from_utf8(a[&format!("violin_{}_{}.csv", c.system, c.parameter.key())].clone()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "video_id,abs_error,q1,median,q3,mean,sd");
        let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').skip(1).map(|v| v.parse().unwrap()).collect()).collect();
        assert_eq!(rows.len(), 20);
        let errs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let mu = errs.iter().sum::<f64>() / errs.len() as f64;
        let sd = (errs.iter().map(|e| (e - mu) * (e - mu)).sum::<f64>() / (errs.len() - 1) as f64).sqrt();
        assert!((rows[0][4] - c.value.accuracy_mu).abs() <= 1e-9 && (mu - c.value.accuracy_mu).abs() <= 1e-9);
        assert!((rows[0][5] - c.value.precision_sigma).abs() <= 1e-9 && (sd - c.value.precision_sigma).abs() <= 1e-9);
    }
}

fn small_study(dir: &Path) -> Manifest {
    let p = SynthParams { n_strides: 4, ..moderate_noise() };
    Manifest::load(&write_synth_study(&p, 3, dir, false).unwrap()).unwrap()
}

#[test]
fn identity_pairing_gives_zero_agreement_error() {
    let dir = tempfile::tempdir().unwrap();
    let m = small_study(dir.path());
    let cfg = AnalysisConfig::default();
    let mut outcomes = run_trials(&m, &cfg, 2).unwrap();
    let copies: Vec<_> = outcomes
        .iter()
        .filter(|o| o.entry.system == "Platforms")
        .map(|o| {
            let mut c = o.clone();
            c.entry.system = "MIRROR".into();
            c
        })
        .collect();
    outcomes.retain(|o| o.entry.system == "Platforms");
    outcomes.extend(copies);
    let r = build_report(&outcomes, &cfg).unwrap();
    assert_eq!(r.systems(), vec!["MIRROR", "Platforms"]);
    for c in &r.table_b {
        assert_eq!((c.value.bias, c.value.loa_lower, c.value.loa_upper), (0.0, 0.0, 0.0));
        assert!(c.value.points.iter().all(|p| p.pair_diff == 0.0));
    }
    for c in &r.table_c {
        assert_eq!((c.value.accuracy_mu, c.value.precision_sigma), (0.0, 0.0));
    }
    let out = dir.path().join("plots");
    emit_plot_data(&r, &out, false).unwrap();
    let ba = std::fs::read_to_string(out.join("ba_MIRROR_step_time.csv")).unwrap();
    assert!(ba.contains("# bias,0\n# loa_lower,0\n# loa_upper,0\n"));
}

#[test]
fn missing_reference_names_the_system() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = small_study(dir.path());
    m.trials.retain(|t| t.system != "Platforms");
    let err = run_analyze(&m, &AnalysisConfig::default(), 1).unwrap_err();
    assert!(matches!(&err, ReportError::MissingSystem { system } if system == "Platforms"));
    assert!(err.to_string().contains("Platforms"));
    assert!(!err.is_input_error());

    let mut m = small_study(dir.path());
    let victim = m.trials.iter().position(|t| t.system == "Platforms").unwrap();
    m.trials.remove(victim);
    let err = run_analyze(&m, &AnalysisConfig::default(), 1).unwrap_err();
    assert!(matches!(&err, ReportError::MissingPairing { video_id, .. } if video_id == "trial_00"), "{err}");
}

#[test]
fn input_errors_are_classified() {
    let dir = tempfile::tempdir().unwrap();
    let m = small_study(dir.path());
    std::fs::write(dir.path().join("trial_01/dlc.csv"), "not,a\ndlc,file\n").unwrap();
    let err = run_analyze(&m, &AnalysisConfig::default(), 2).unwrap_err();
    assert!(err.is_input_error(), "{err}");
    assert!(err.to_string().contains("DLCCT_16/trial_01"));
    std::fs::remove_file(dir.path().join("trial_02/grf.csv")).unwrap();
    let err = run_analyze(&m, &AnalysisConfig::default(), 2).unwrap_err();
    assert!(matches!(err, ReportError::MissingInput { .. }));
}

fn summary(mean: f64, sd: f64) -> Summary {
    Summary { mean, sd, cv_percent: 100.0 * sd / mean, n: 40 }
}

#[test]
fn table_formats() {
    let agg = TrialAggregate {
        step_time: summary(0.557, 0.039),
        cadence: summary(108.139, 7.544),
        stance_time: summary(0.695, 0.053),
        double_support: summary(0.136, 0.018),
    };
    let pairs = PairedSeries::new(vec![2.0, 1.0], vec![1.0, 2.0], vec!["a".into(), "b".into()]).unwrap();
    let ba = bland_altman(&pairs).unwrap();
    let abs = gait_core::stats::absolute_errors(&pairs).unwrap();
    let r = StudyReport {
        table_a: vec![
            SystemSummary { system: "X".into(), n_trials: 2, aggregate: agg },
            SystemSummary { system: "Platforms".into(), n_trials: 2, aggregate: agg },
        ],
        table_b: vec![Cell { system: "X".into(), parameter: Parameter::StepTime, value: ba }],
        table_c: vec![Cell { system: "X".into(), parameter: Parameter::StepTime, value: abs }],
        pearson: vec![Cell { system: "X".into(), parameter: Parameter::StepTime, value: None }],
        normality: vec![],
        videos: vec![],
    };
    let dir = tempfile::tempdir().unwrap();
    emit_tables(&r, dir.path()).unwrap();
    let a = std::fs::read_to_string(dir.path().join("table_a.csv")).unwrap();
    let header: Vec<&str> = a.lines().next().unwrap().split(',').collect();
    assert_eq!(header[..4], ["system", "step_time_mean", "step_time_sd", "step_time_cv_percent"]);
    assert_eq!(header.len(), 13);
    assert!(a.contains("\nPlatforms,0.557,0.039,7.002,108.139,7.544,6.976,"), "{a}");
    let b = std::fs::read_to_string(dir.path().join("table_b.csv")).unwrap();
    assert_eq!(b, "system,parameter,bias,loa_lower,loa_upper\nX,step_time,0.000,-2.772,2.772\n");
    let c = std::fs::read_to_string(dir.path().join("table_c.csv")).unwrap();
    assert_eq!(c, "system,parameter,accuracy_mu,precision_sigma\nX,step_time,1.000,0.000\n");
    assert!(std::fs::read_to_string(dir.path().join("pearson.csv")).unwrap().contains("X,step_time,NA,NA"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["table_a"][1]["aggregate"]["step_time"]["mean"], 0.557);

    emit_plot_data(&r, dir.path(), false).unwrap();
    let ba_csv = std::fs::read_to_string(dir.path().join("ba_X_step_time.csv")).unwrap();
    let header: BTreeMap<&str, f64> = ba_csv
        .lines()
        .filter_map(|l| l.strip_prefix("# "))
        .filter_map(|l| l.split_once(','))
        .filter_map(|(k, v)| v.parse().ok().map(|v| (k, v)))
        .collect();
    assert_eq!(header["bias"], 0.0);
    assert!((header["loa_upper"] - 2.772).abs() < 1e-3 && (header["loa_lower"] + 2.772).abs() < 1e-3);
}

#[test]
fn empty_report_writes_nothing() {
    let r = StudyReport {
        table_a: vec![],
        table_b: vec![],
        table_c: vec![],
        pearson: vec![],
        normality: vec![],
        videos: vec![],
    };
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert!(matches!(emit_tables(&r, &out), Err(ReportError::EmptyReport)));
    assert!(matches!(emit_plot_data(&r, &out, true), Err(ReportError::EmptyReport)));
    assert!(!out.exists());
}
