//! The three per-segment features on one candidate segment, computed from a
//! generated scene: body-part behavior descriptor, relative motion feature,
//! and semantic embedding feature.
//!
//! ```sh
//! cargo run --release --example inspect_features
//! ```

use sthoi::features::{
    assign_skeletons, behavior_descriptor, motion_feature, semantic_feature, FeatureConfig,
    FeatureGrid,
};
use sthoi::pairing::{co_occurrent_pairs, split_candidate_segments};
use sthoi::synth::{generate_scene, suite_labels, suite_specs, synthetic_embeddings, SuiteSpec};

fn main() -> sthoi::Result<()> {
    let spec = &suite_specs(&SuiteSpec {
        seed: 3,
        scenes: 1,
        frames: 100,
        ..SuiteSpec::default()
    })?[0];
    let scene = generate_scene(spec)?;
    let labels = suite_labels();

    let trajectories: Vec<_> = scene
        .annotations
        .trajectories
        .iter()
        .map(|t| t.trajectory.clone())
        .collect();
    let skeletons = assign_skeletons(&scene.keypoints, &trajectories, labels.human());
    let pairs = co_occurrent_pairs(&trajectories, labels.human());
    println!(
        "{}: {} entities, {} candidate pairs",
        scene.video,
        trajectories.len(),
        pairs.len()
    );

    let pair = pairs
        .iter()
        .find(|p| trajectories[p.object].category != labels.human())
        .expect("suite scenes always pair a human with an object");
    let segments = split_candidate_segments(pair, &trajectories, 10)?;
    let segment = &segments[3];
    println!(
        "pair human#{} -> {}#{}: window [{}, {}]",
        pair.human,
        trajectories[pair.object].category,
        pair.object,
        segment.span.begin,
        segment.span.end
    );

    let cfg = FeatureConfig::default();
    let grids: Vec<FeatureGrid> = segment
        .span
        .frames()
        .map(|f| FeatureGrid {
            frame: f,
            values: scene.grids[f].clone(),
            frame_width: scene.frame_width,
            frame_height: scene.frame_height,
        })
        .collect();
    let sk = skeletons.iter().find(|s| s.host == pair.human);

    let behavior = behavior_descriptor(segment, sk, &grids, &cfg)?;
    let channels = grids[0].channels();
    println!(
        "\nbehavior descriptor: {} parts x {} channels = {} values",
        behavior.len() / channels,
        channels,
        behavior.len()
    );
    for (k, predicate) in labels.predicates().iter().enumerate() {
        let channel_max = (0..behavior.len() / channels)
            .map(|part| behavior[part * channels + k])
            .fold(f64::NEG_INFINITY, f64::max);
        println!("  channel {k} ({predicate:<8}): max pooled activation {channel_max:.3}");
    }

    let motion = motion_feature(segment)?;
    println!("\nmotion feature (first frame / last frame / difference):");
    for block in 0..3 {
        let vals: Vec<String> = (0..5)
            .map(|i| format!("{:+.3}", motion[block * 5 + i]))
            .collect();
        println!("  ({})", vals.join(", "));
    }

    let table = synthetic_embeddings(&labels, 16, 3)?;
    let semantic = semantic_feature(labels.human(), &trajectories[pair.object].category, &table)?;
    println!(
        "\nsemantic feature: {} values (2 x {}-dim embeddings)",
        semantic.len(),
        table.dim()
    );
    Ok(())
}
