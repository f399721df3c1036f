//! The whole pipeline in one run, clean and noisy: synthesize, track, train,
//! detect, tag, evaluate.
//!
//! ```sh
//! cargo run --release --example end_to_end
//! ```

use sthoi::commands::{
    cmd_detect, cmd_evaluate, cmd_synth, cmd_tag, cmd_track, cmd_train, SynthArgs,
};
use sthoi::config::PipelineConfig;

fn main() -> sthoi::Result<()> {
    let out = std::env::temp_dir().join("sthoi-examples/end_to_end");
    let _ = std::fs::remove_dir_all(&out);
    let cfg = PipelineConfig::default();

    for (name, sigma, drops) in [("clean", 0.0, 0.0), ("noisy", 2.0, 0.1)] {
        let base = out.join(name);
        let manifest = cmd_synth(
            &SynthArgs {
                seed: 7,
                scenes: 8,
                frames: 100,
                jitter_sigma: sigma,
                drop_rate: drops,
                ..SynthArgs::default()
            },
            &base.join("data"),
        )?;

        let track = cmd_track(&manifest, &cfg, &base.join("tracks"))?;
        let trained = cmd_train(&manifest, &cfg, &base.join("model"))?;
        let preds = base.join("predictions.jsonl");
        let detect = cmd_detect(&manifest, &trained.model_path, &cfg, &preds, false)?;
        cmd_tag(&preds, &cfg, Some(&base.join("tags.tsv")))?;
        let report = cmd_evaluate(
            &preds,
            &manifest,
            &cfg,
            Some(&base.join("metrics.txt")),
            None,
        )?;

        println!("== {name} (jitter {sigma} px, {:.0}% drops)", drops * 100.0);
        println!(
            "   tracking: {} trajectories at {:.0} fps, detection mAP {:.3}",
            track.trajectories,
            track.fps,
            track.detection_map.unwrap_or(0.0)
        );
        println!(
            "   training: {} samples, final loss {:.4}",
            trained.samples, trained.final_loss
        );
        println!("   detection: {} instances", detect.instances);
        for line in report.render().lines() {
            println!("   {line}");
        }
        println!();
    }
    println!("artifacts in {}", out.display());
    Ok(())
}
