//! The full detection pipeline: track, pair, featurize, predict, associate.
//! Prints every recognized instance next to the scripted ground truth.
//!
//! ```sh
//! cargo run --release --example detect_interactions
//! ```

use sthoi::commands::{cmd_detect, cmd_synth, cmd_train, SynthArgs};
use sthoi::config::PipelineConfig;
use sthoi::io::{load_annotations, load_predictions, DatasetManifest};

fn main() -> sthoi::Result<()> {
    let out = std::env::temp_dir().join("sthoi-examples/detect_interactions");
    let _ = std::fs::remove_dir_all(&out);

    let manifest_path = cmd_synth(
        &SynthArgs {
            seed: 12,
            scenes: 3,
            frames: 100,
            jitter_sigma: 1.0,
            drop_rate: 0.05,
            ..SynthArgs::default()
        },
        &out.join("data"),
    )?;

    let cfg = PipelineConfig::default();
    let trained = cmd_train(&manifest_path, &cfg, &out.join("model"))?;
    let preds_path = out.join("predictions.jsonl");
    let summary = cmd_detect(
        &manifest_path,
        &trained.model_path,
        &cfg,
        &preds_path,
        false,
    )?;
    println!(
        "{} instances across {} videos\n",
        summary.instances, summary.videos
    );

    let manifest = DatasetManifest::load(&manifest_path)?;
    let predictions = load_predictions(&preds_path)?;
    for video in &manifest.videos {
        println!("{}", video.id);
        let ann = load_annotations(video.annotations.as_ref().unwrap(), &manifest.labels)?;
        for inst in &ann.instances {
            let object = ann.trajectory(inst.object)?;
            println!(
                "  gt:   {:<8} {:<6} [{:>3}, {:>3}]",
                inst.predicate, object.category, inst.span.begin, inst.span.end
            );
        }
        for inst in predictions
            .get(&video.id)
            .map(|v| v.as_slice())
            .unwrap_or_default()
        {
            println!(
                "  pred: {:<8} {:<6} [{:>3}, {:>3}]  score {:.3}",
                inst.predicate, inst.object_category, inst.span.begin, inst.span.end, inst.score
            );
        }
        println!();
    }
    Ok(())
}
