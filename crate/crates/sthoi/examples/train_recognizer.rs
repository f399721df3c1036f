//! Train the masked multi-label interaction recognizer on a synthetic suite
//! and inspect the loss curve and the learned feasibility mask.
//!
//! ```sh
//! cargo run --release --example train_recognizer
//! ```

use sthoi::commands::{cmd_synth, cmd_train, SynthArgs};
use sthoi::config::PipelineConfig;
use sthoi::io::load_model;

fn main() -> sthoi::Result<()> {
    let out = std::env::temp_dir().join("sthoi-examples/train_recognizer");
    let _ = std::fs::remove_dir_all(&out);

    let manifest = cmd_synth(
        &SynthArgs {
            seed: 8,
            scenes: 8,
            frames: 100,
            ..SynthArgs::default()
        },
        &out.join("data"),
    )?;

    let cfg = PipelineConfig::default();
    let summary = cmd_train(&manifest, &cfg, &out.join("model"))?;
    println!(
        "{} samples, {} epochs, final mean loss {:.4}",
        summary.samples, summary.epochs, summary.final_loss
    );

    let curve = std::fs::read_to_string(&summary.curve_path)?;
    let losses: Vec<f64> = curve.lines().map(|l| l.parse().unwrap()).collect();
    println!("\nloss curve (every 20th epoch):");
    for (i, loss) in losses.iter().enumerate().step_by(20) {
        let bar = "#".repeat((loss * 12.0).round() as usize);
        println!("  epoch {i:>3}  {loss:.4}  {bar}");
    }

    let (model, _) = load_model(&summary.model_path)?;
    println!("\nlearned object-conditioned mask (1 = feasible predicate):");
    print!("{:>10}", "");
    for p in model.labels.predicates() {
        print!("{p:>9}");
    }
    println!();
    for (o, object) in model.labels.objects().iter().enumerate() {
        print!("{object:>10}");
        for p in 0..model.labels.num_predicates() {
            print!("{:>9}", if model.mask.is_allowed(o, p) { 1 } else { 0 });
        }
        println!();
    }
    Ok(())
}
