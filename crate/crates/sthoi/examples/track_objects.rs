//! Object trajectory detection: greedy tracklet absorption inside
//! overlapping segments, cross-segment merging, and the throughput report.
//!
//! ```sh
//! cargo run --release --example track_objects
//! ```

use sthoi::commands::{cmd_synth, cmd_track, SynthArgs};
use sthoi::config::PipelineConfig;

fn main() -> sthoi::Result<()> {
    let out = std::env::temp_dir().join("sthoi-examples/track_objects");
    let _ = std::fs::remove_dir_all(&out);

    let manifest = cmd_synth(
        &SynthArgs {
            seed: 5,
            scenes: 6,
            frames: 120,
            jitter_sigma: 2.0,
            drop_rate: 0.1,
            ..SynthArgs::default()
        },
        &out.join("data"),
    )?;

    let cfg = PipelineConfig::default();
    println!(
        "segments of {} frames, stride {}, absorption IoU > {}, merge threshold {}",
        cfg.tracking.segment_len,
        cfg.tracking.segment_stride,
        cfg.tracking.iou_threshold,
        cfg.tracking.merge_threshold
    );

    let report = cmd_track(&manifest, &cfg, &out.join("tracks"))?;
    print!("{}", report.render());
    println!(
        "\ntrajectory files in {} (same container as annotations, empty instance list)",
        out.join("tracks").display()
    );
    Ok(())
}
