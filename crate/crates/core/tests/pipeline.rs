use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use speakerid_core::fusion::OutcomeRecord;
use speakerid_core::pipeline::{
    frame_seed, run_experiment, run_scenario, ExperimentParams, ModeChoice, ScenarioConfig,
    EXPERIMENT_NAMES,
};
use speakerid_core::Error;

fn small_config(out: &Path) -> ScenarioConfig {
    ScenarioConfig {
        frames: 4,
        image_width: 320,
        image_height: 240,
        out: out.to_path_buf(),
        ..ScenarioConfig::default()
    }
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect()
}

#[test]
fn scenario_is_reproducible_and_contained() {
    let root = tempfile::tempdir().unwrap();
    let (a, b) = (root.path().join("a"), root.path().join("b"));
    let scenario = small_config(&a).resolve().unwrap();
    let ra = run_scenario(&scenario, &a).unwrap();
    let rb = run_scenario(&small_config(&b).resolve().unwrap(), &b).unwrap();
    assert_eq!(snapshot(&a), snapshot(&b));
    assert!(ra.artifacts.iter().all(|p| p.starts_with(&a)));
    assert!(rb.artifacts.iter().all(|p| p.starts_with(&b)));
    // nothing but the two output directories appeared
    assert_eq!(fs::read_dir(root.path()).unwrap().count(), 2);

    let files = snapshot(&a);
    assert_eq!(files.keys().filter(|k| k.ends_with(".ppm")).count(), 4);
    let lines: Vec<OutcomeRecord> = String::from_utf8(files["outcomes.jsonl"].clone())
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(
        lines.iter().map(|r| r.frame).collect::<Vec<_>>(),
        vec![0, 1, 2, 3]
    );
    let summary: serde_json::Value = serde_json::from_slice(&files["summary.json"]).unwrap();
    assert_eq!(summary["frames"], 4);
    assert_eq!(summary["expected_speaker"], "alice");
    let ppm = &files["frame_0000.ppm"];
    let header: Vec<String> = String::from_utf8_lossy(&ppm[..ppm.len() - 320 * 240 * 3])
        .split_whitespace()
        .map(String::from)
        .collect();
    assert_eq!(header, ["P6", "320", "240", "255"]);
}

#[test]
fn fixed_modes_are_honored() {
    let root = tempfile::tempdir().unwrap();
    for (mode, name) in [
        (ModeChoice::Phat, "SRP_PHAT"),
        (ModeChoice::Const, "SRP_CONST"),
    ] {
        let out = root.path().join(name);
        let cfg = ScenarioConfig {
            mode,
            frames: 2,
            ..small_config(&out)
        };
        let report = run_scenario(&cfg.resolve().unwrap(), &out).unwrap();
        assert_eq!(
            report.summary.modes.get(name),
            Some(&2),
            "{:?}",
            report.summary.modes
        );
    }
}

#[test]
fn missing_files_name_the_path() {
    let root = tempfile::tempdir().unwrap();
    let missing = root.path().join("no_such_scene.json");
    let cfg = ScenarioConfig {
        scene: Some(missing.clone()),
        ..small_config(root.path())
    };
    let err = cfg.resolve().unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("no_such_scene.json"), "{err}");

    let cfg = ScenarioConfig {
        cascade: Some(root.path().join("cascade.json")),
        ..small_config(root.path())
    };
    assert!(cfg
        .resolve()
        .unwrap_err()
        .to_string()
        .contains("cascade.json"));
}

#[test]
fn config_errors_name_the_field() {
    let err = ScenarioConfig::from_json(r#"{"frames": 2, "colour": 1}"#).unwrap_err();
    assert!(err.to_string().contains("colour"), "{err}");
    let err = ScenarioConfig::from_json(r#"{"frames": "two"}"#).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
    let zero = ScenarioConfig {
        frames: 0,
        ..ScenarioConfig::default()
    };
    assert!(zero.validate().unwrap_err().to_string().contains("frames"));
}

#[test]
fn failing_frame_is_reported_by_index() {
    let root = tempfile::tempdir().unwrap();
    let mut scenario = small_config(root.path()).resolve().unwrap();
    // a sprite the frame renderer rejects makes every frame fail; the
    // first index is the one reported
    scenario.scene.face_sprites[0].x = 5_000.0;
    match run_scenario(&scenario, root.path()).unwrap_err() {
        Error::Frame { frame, source } => {
            assert_eq!(frame, 0);
            assert!(matches!(*source, Error::InvalidScene(_)));
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn frame_seeds_differ() {
    let seeds: std::collections::HashSet<u64> = (0..1000).map(|f| frame_seed(42, 0, f)).collect();
    assert_eq!(seeds.len(), 1000);
    assert_ne!(frame_seed(42, 0, 0), frame_seed(43, 0, 0));
}

#[test]
fn experiment_tables() {
    let err = run_experiment("accuracy_vs_colour", &ExperimentParams::default()).unwrap_err();
    let msg = err.to_string();
    for name in EXPERIMENT_NAMES {
        assert!(msg.contains(name), "{msg}");
    }

    let params = ExperimentParams {
        max_components: 1,
        train_per_class: 1,
        test_per_class: 2,
        snr_levels_db: vec![20.0],
        trials: 1,
        ..ExperimentParams::default()
    };
    for name in EXPERIMENT_NAMES {
        let table = run_experiment(name, &params).unwrap();
        let text = table.to_text();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap().split('\t').count(),
            table.header.len()
        );
        assert_eq!(lines.count(), 1, "{name}: one data row");
    }
}

#[test]
fn training_image_table_grows_to_full_set() {
    let params = ExperimentParams {
        train_per_class: 4,
        test_per_class: 4,
        ..ExperimentParams::default()
    };
    let table = run_experiment("accuracy_vs_training_images", &params).unwrap();
    assert_eq!(table.rows.len(), 4);
    // Fisher needs more images than classes
    assert_eq!(table.column("fisher_accuracy").unwrap()[0], None);
    for col in ["eigen_accuracy", "lbph_accuracy"] {
        let v = table.column(col).unwrap();
        assert!(v
            .iter()
            .all(|x| x.is_some_and(|a| (0.0..=1.0).contains(&a))));
    }
}

#[test]
fn component_table_shape() {
    let params = ExperimentParams::default();
    let table = run_experiment("accuracy_vs_components", &params).unwrap();
    let eigen: Vec<f64> = table
        .column("eigen_accuracy")
        .unwrap()
        .into_iter()
        .map(Option::unwrap)
        .collect();
    let best = eigen.iter().cloned().fold(0.0, f64::max);
    let peak = eigen.iter().position(|&a| a == best).unwrap();
    // rises to its best value, then stays near it
    assert!(eigen[..=peak].windows(2).all(|w| w[1] >= w[0]), "{eigen:?}");
    assert!(eigen[peak..].iter().all(|&a| a >= best - 0.05), "{eigen:?}");
    let fisher = table.column("fisher_accuracy").unwrap();
    let cap = params.classes - 1;
    assert!(
        fisher[cap - 1..].iter().all(|f| *f == fisher[cap - 1]),
        "{fisher:?}"
    );
}

#[test]
fn localization_error_does_not_grow_with_snr() {
    let table = run_experiment("localization_vs_snr", &ExperimentParams::default()).unwrap();
    let snr: Vec<f64> = table
        .column("snr_db")
        .unwrap()
        .into_iter()
        .map(Option::unwrap)
        .collect();
    assert_eq!(snr, [0.0, 10.0, 20.0, 40.0]);
    let med: Vec<f64> = table
        .column("median_error_cells")
        .unwrap()
        .into_iter()
        .map(Option::unwrap)
        .collect();
    assert!(med.windows(2).all(|w| w[1] <= w[0]), "{med:?}");
}
