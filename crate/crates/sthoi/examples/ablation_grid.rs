//! Train and evaluate the recognizer with each training technique disabled
//! in turn: BP (body-part behavior descriptor), OC (object-conditioned
//! mask), LF (late fusion), CF (factorized recognition).
//!
//! ```sh
//! cargo run --release --example ablation_grid
//! ```

use sthoi::commands::{cmd_detect, cmd_evaluate, cmd_synth, cmd_train, SynthArgs};
use sthoi::config::PipelineConfig;

fn main() -> sthoi::Result<()> {
    let out = std::env::temp_dir().join("sthoi-examples/ablation_grid");
    let _ = std::fs::remove_dir_all(&out);

    let manifest = cmd_synth(
        &SynthArgs {
            seed: 7,
            scenes: 10,
            frames: 100,
            ..SynthArgs::default()
        },
        &out.join("data"),
    )?;

    type Tweak = fn(&mut PipelineConfig);
    let variants: [(&str, Tweak); 5] = [
        ("full", |_| {}),
        ("w/o BP", |c| c.recognition.behavior_descriptor = false),
        ("w/o OC", |c| c.recognition.object_mask = false),
        ("w/o LF", |c| c.recognition.late_fusion = false),
        ("w/o CF", |c| c.recognition.factorized = false),
    ];

    println!(
        "{:<8} {:>9} {:>9} {:>7} {:>7} {:>7}",
        "variant", "class mAP", "video mAP", "R@50", "P@1", "P@5"
    );
    for (name, tweak) in variants {
        let mut cfg = PipelineConfig::default();
        tweak(&mut cfg);
        let slug = name.replace([' ', '/'], "_");
        let trained = cmd_train(&manifest, &cfg, &out.join(format!("model_{slug}")))?;
        let preds = out.join(format!("preds_{slug}.jsonl"));
        cmd_detect(&manifest, &trained.model_path, &cfg, &preds, false)?;
        let report = cmd_evaluate(&preds, &manifest, &cfg, None, None)?;
        let metric = |pairs: &[(usize, f64)], k: usize| {
            pairs
                .iter()
                .find(|(n, _)| *n == k)
                .map(|(_, v)| *v)
                .unwrap_or(0.0)
        };
        println!(
            "{:<8} {:>9.3} {:>9.3} {:>7.3} {:>7.3} {:>7.3}",
            name,
            report.class_map,
            report.video_map,
            metric(&report.recall, 50),
            metric(&report.precision, 1),
            metric(&report.precision, 5),
        );
    }
    Ok(())
}
