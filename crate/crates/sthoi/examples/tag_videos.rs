//! HOI tagging: per-video ranked label lists, ignoring localization.
//!
//! ```sh
//! cargo run --release --example tag_videos
//! ```

use sthoi::commands::{cmd_detect, cmd_synth, cmd_tag, cmd_train, SynthArgs};
use sthoi::config::PipelineConfig;

fn main() -> sthoi::Result<()> {
    let out = std::env::temp_dir().join("sthoi-examples/tag_videos");
    let _ = std::fs::remove_dir_all(&out);

    let manifest = cmd_synth(
        &SynthArgs {
            seed: 31,
            scenes: 5,
            frames: 100,
            ..SynthArgs::default()
        },
        &out.join("data"),
    )?;

    let cfg = PipelineConfig::default();
    let trained = cmd_train(&manifest, &cfg, &out.join("model"))?;
    let preds = out.join("predictions.jsonl");
    cmd_detect(&manifest, &trained.model_path, &cfg, &preds, false)?;

    let tags = cmd_tag(&preds, &cfg, Some(&out.join("tags.tsv")))?;
    for (video, ranked) in &tags.tags {
        println!("{video}:");
        for (rank, (predicate, object, score)) in ranked.iter().enumerate() {
            println!("  {}. {predicate} {object}  ({score:.3})", rank + 1);
        }
    }
    Ok(())
}
