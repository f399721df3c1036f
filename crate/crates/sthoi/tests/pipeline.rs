//! Integration coverage of the command layer: the ground-truth-trajectory
//! regime, the tagging and tracking surfaces, and the error paths with their
//! exit-code classes.

use sthoi::commands::{
    cmd_detect, cmd_evaluate, cmd_synth, cmd_tag, cmd_track, cmd_train, SynthArgs,
};
use sthoi::config::PipelineConfig;
use sthoi::io::{load_predictions, save_predictions, DatasetManifest};
use sthoi::Error;

fn small_suite(dir: &std::path::Path, noise: f64) -> std::path::PathBuf {
    cmd_synth(
        &SynthArgs {
            seed: 19,
            scenes: 4,
            frames: 80,
            jitter_sigma: noise,
            drop_rate: if noise > 0.0 { 0.1 } else { 0.0 },
            ..SynthArgs::default()
        },
        dir,
    )
    .unwrap()
}

#[test]
fn gt_trajectory_regime_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_suite(&dir.path().join("data"), 0.0);
    let cfg = PipelineConfig::default();

    let trained = cmd_train(&manifest, &cfg, &dir.path().join("model")).unwrap();
    assert!(trained.final_loss.is_finite());

    // detection with annotated trajectories (the evaluation regime that
    // removes trajectory-detection influence)
    let preds = dir.path().join("preds_gt.jsonl");
    cmd_detect(&manifest, &trained.model_path, &cfg, &preds, true).unwrap();
    let report = cmd_evaluate(&preds, &manifest, &cfg, None, None).unwrap();
    assert!(
        report.video_map >= 0.95,
        "gt regime video mAP {}",
        report.video_map
    );

    // tagging output ranks deduplicated labels
    let tags = cmd_tag(&preds, &cfg, None).unwrap();
    assert_eq!(tags.tags.len(), 4);
    for ranked in tags.tags.values() {
        assert!(!ranked.is_empty());
        for pair in ranked.windows(2) {
            assert!(pair[0].2 >= pair[1].2, "tag ranking out of order");
        }
        let mut labels: Vec<(String, String)> = ranked
            .iter()
            .map(|(p, o, _)| (p.clone(), o.clone()))
            .collect();
        labels.dedup();
        assert_eq!(labels.len(), ranked.len(), "duplicate label in tags");
    }
}

#[test]
fn track_writes_trajectories_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_suite(&dir.path().join("data"), 0.0);
    let out = dir.path().join("tracks");
    let report = cmd_track(&manifest, &PipelineConfig::default(), &out).unwrap();
    assert_eq!(report.videos, 4);
    assert!(report.fps > 0.0);
    // zero-noise synthetic scenes track perfectly
    assert!(report.detection_map.unwrap() > 0.999);
    assert!(out.join("track_report.txt").is_file());

    let loaded = DatasetManifest::load(&manifest).unwrap();
    for video in &loaded.videos {
        let path = out.join(format!("{}.trajectories.json", video.id));
        let record = sthoi::io::load_annotations(&path, &loaded.labels).unwrap();
        assert!(!record.trajectories.is_empty());
        assert!(record.instances.is_empty());
    }
}

#[test]
fn evaluate_rejects_orphan_videos() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_suite(&dir.path().join("data"), 0.0);
    let cfg = PipelineConfig::default();

    let mut preds = sthoi::evaluation::VideoInstances::new();
    preds.insert("not_in_manifest".into(), Vec::new());
    let path = dir.path().join("preds.jsonl");
    save_predictions(&path, &preds).unwrap();
    // an empty instance list writes no lines, so force one real record
    let manifest_loaded = DatasetManifest::load(&manifest).unwrap();
    let ann = sthoi::io::load_annotations(
        manifest_loaded.videos[0].annotations.as_ref().unwrap(),
        &manifest_loaded.labels,
    )
    .unwrap();
    let mut preds = sthoi::evaluation::VideoInstances::new();
    preds.insert("not_in_manifest".into(), ann.gt_instances().unwrap());
    save_predictions(&path, &preds).unwrap();

    match cmd_evaluate(&path, &manifest, &cfg, None, None) {
        Err(e @ Error::Mismatch(_)) => {
            assert!(e.to_string().contains("not_in_manifest"));
            assert_eq!(e.exit_code(), 2);
        }
        other => panic!("expected orphan error, got {other:?}"),
    }
}

#[test]
fn detect_rejects_label_space_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let manifest_a = small_suite(&dir.path().join("a"), 0.0);
    let cfg = PipelineConfig::default();
    let trained = cmd_train(&manifest_a, &cfg, &dir.path().join("model")).unwrap();

    // a manifest with a different label space
    let mut manifest = DatasetManifest::load(&manifest_a).unwrap();
    manifest.labels =
        sthoi::LabelSpace::new(vec!["alien".into()], vec!["probe".into()], "human".into()).unwrap();
    let other_path = dir.path().join("a").join("other_manifest.json");
    // keep paths relative to the original directory
    let raw = std::fs::read_to_string(&manifest_a).unwrap();
    let mut value: serde_json::Value = serde_json::from_str(&raw).unwrap();
    value["labels"] = serde_json::json!({
        "objects": ["alien"],
        "predicates": ["probe"],
        "human": "human",
    });
    std::fs::write(&other_path, serde_json::to_string(&value).unwrap()).unwrap();
    drop(manifest);

    match cmd_detect(
        &other_path,
        &trained.model_path,
        &cfg,
        &dir.path().join("p.jsonl"),
        true,
    ) {
        Err(e) => assert_eq!(e.exit_code(), 2, "unexpected error class: {e}"),
        Ok(_) => panic!("label mismatch accepted"),
    }
}

#[test]
fn masked_pairs_never_reach_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_suite(&dir.path().join("data"), 0.0);
    let cfg = PipelineConfig::default();
    let trained = cmd_train(&manifest, &cfg, &dir.path().join("model")).unwrap();
    let preds_path = dir.path().join("preds.jsonl");
    cmd_detect(&manifest, &trained.model_path, &cfg, &preds_path, false).unwrap();

    // the suite ties each predicate to one object category
    let allowed = [
        ("carry", "bag"),
        ("feed", "dog"),
        ("pet", "cat"),
        ("wave_to", "human"),
    ];
    for (_, instances) in load_predictions(&preds_path).unwrap() {
        for inst in instances {
            assert!(
                allowed.contains(&(inst.predicate.as_str(), inst.object_category.as_str())),
                "unexpected label ({}, {})",
                inst.predicate,
                inst.object_category
            );
        }
    }
}

#[test]
fn config_errors_are_validation_class() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[recognition]\nscore_threshold = 1.5\n").unwrap();
    match PipelineConfig::load(&path) {
        Err(e @ Error::Invalid { .. }) => {
            assert_eq!(e.exit_code(), 1);
            assert!(e.to_string().contains("score_threshold"));
        }
        other => panic!("expected validation error, got {other:?}"),
    }

    // data errors map to exit code 2
    let missing = Error::MissingFile {
        path: "nope".into(),
    };
    assert_eq!(missing.exit_code(), 2);
}

#[test]
fn empty_manifest_yields_empty_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let labels = sthoi::synth::suite_labels();
    let table = sthoi::synth::synthetic_embeddings(&labels, 8, 1).unwrap();
    sthoi::io::save_embeddings(&dir.path().join("embeddings.txt"), &table).unwrap();
    let manifest = DatasetManifest {
        labels,
        embeddings: Some("embeddings.txt".into()),
        videos: Vec::new(),
    };
    let path = dir.path().join("manifest.json");
    manifest.save(&path).unwrap();

    let report = cmd_track(&path, &PipelineConfig::default(), &dir.path().join("out")).unwrap();
    assert_eq!(report.videos, 0);
    assert_eq!(report.trajectories, 0);

    // training on a manifest with no annotated videos is an error
    match cmd_train(&path, &PipelineConfig::default(), &dir.path().join("model")) {
        Err(Error::Invalid { .. }) => {}
        other => panic!("expected no-training-instances error, got {other:?}"),
    }
}
