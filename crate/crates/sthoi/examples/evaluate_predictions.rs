//! Score predictions against ground truth: class mAP, video mAP, recall@K,
//! and tagging precision@N, plus the per-class AP table.
//!
//! ```sh
//! cargo run --release --example evaluate_predictions
//! ```

use sthoi::commands::{cmd_detect, cmd_evaluate, cmd_synth, cmd_train, SynthArgs};
use sthoi::config::PipelineConfig;

fn main() -> sthoi::Result<()> {
    let out = std::env::temp_dir().join("sthoi-examples/evaluate_predictions");
    let _ = std::fs::remove_dir_all(&out);

    let manifest = cmd_synth(
        &SynthArgs {
            seed: 23,
            scenes: 6,
            frames: 100,
            jitter_sigma: 2.0,
            drop_rate: 0.1,
            ..SynthArgs::default()
        },
        &out.join("data"),
    )?;

    let cfg = PipelineConfig::default();
    let trained = cmd_train(&manifest, &cfg, &out.join("model"))?;
    let preds = out.join("predictions.jsonl");
    cmd_detect(&manifest, &trained.model_path, &cfg, &preds, false)?;

    let report_path = out.join("metrics.txt");
    let csv_path = out.join("per_class.csv");
    let report = cmd_evaluate(&preds, &manifest, &cfg, Some(&report_path), Some(&csv_path))?;
    print!("{}", report.render());
    println!("\nper-class AP:");
    for row in &report.per_class {
        println!(
            "  {:<8} {:<6} ap {:.3} ({} ground-truth instances)",
            row.predicate, row.object, row.ap, row.num_gt
        );
    }
    println!("\nreport: {}", report_path.display());
    println!("csv:    {}", csv_path.display());
    Ok(())
}
