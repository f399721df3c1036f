//! Generate a synthetic scene suite and look at what it contains.
//!
//! ```sh
//! cargo run --release --example generate_scenes
//! ```

use sthoi::commands::{cmd_synth, SynthArgs};
use sthoi::io::{load_annotations, DatasetManifest};

fn main() -> sthoi::Result<()> {
    let out = std::env::temp_dir().join("sthoi-examples/generate_scenes");
    let _ = std::fs::remove_dir_all(&out);

    let manifest_path = cmd_synth(
        &SynthArgs {
            seed: 42,
            scenes: 4,
            frames: 100,
            jitter_sigma: 1.5,
            drop_rate: 0.05,
            false_positive_rate: 0.02,
            ..SynthArgs::default()
        },
        &out,
    )?;
    println!("suite written to {}", out.display());

    let manifest = DatasetManifest::load(&manifest_path)?;
    println!(
        "label space: {} objects, {} predicates, human token {:?}",
        manifest.labels.num_objects(),
        manifest.labels.num_predicates(),
        manifest.labels.human()
    );
    for video in &manifest.videos {
        let ann = load_annotations(video.annotations.as_ref().unwrap(), &manifest.labels)?;
        println!("\n{} ({} frames)", video.id, video.frames);
        for t in &ann.trajectories {
            println!(
                "  entity {}: {:<6} frames [{}, {}]",
                t.id, t.trajectory.category, t.trajectory.span.begin, t.trajectory.span.end
            );
        }
        for inst in &ann.instances {
            println!(
                "  interaction: entity {} {} entity {} on [{}, {}]",
                inst.subject, inst.predicate, inst.object, inst.span.begin, inst.span.end
            );
        }
    }
    Ok(())
}
