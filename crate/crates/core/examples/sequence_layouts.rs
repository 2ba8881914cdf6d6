//! The four supervised sequence layouts built from one synthetic sample:
//! generation (endpoint-first), understanding, endpoint probe, and
//! coarse-to-fine refinement.
//!
//! Run with: `cargo run --release --example sequence_layouts`

use bevplan::codebook::build_codebook;
use bevplan::grid_codec::GridSpec;
use bevplan::sequence_builder::{ActionBlock, GenOrder, SequenceBuilder};
use bevplan::soft_label::SoftTargetParams;
use bevplan::synth_world::{generate_scenario, scene_to_tokens, InstrClass, WorldConfig, WORD_LIST};

fn main() {
    let spec = GridSpec::default();
    let world = WorldConfig::default();
    let cb = build_codebook(WORD_LIST, spec).unwrap();
    let sample = generate_scenario(InstrClass::LaneChange, 3, &spec, &world).unwrap();
    println!("instruction: {:?}\n", sample.instruction);

    let v = scene_to_tokens(&sample.scene, &cb, &spec);
    let path = sample.dreamer_path_wps();
    let speed = sample.dreamer_speed_waypoints();
    let block = ActionBlock::from_waypoints(&path, &speed, &spec).unwrap();
    let builder = SequenceBuilder::new(&cb, SoftTargetParams::default());

    let gen = builder
        .build_generation_sample(&v, &sample.instruction, &block, GenOrder::EndpointFirst)
        .unwrap();
    let und = builder.build_understanding_sample(&v, &sample.instruction, &block).unwrap();
    let probe = builder.build_endpoint_probe_sample(&v, &sample.instruction, &block).unwrap();
    let refine = builder
        .build_refinement_sample(&v, &sample.instruction, &path, &speed)
        .unwrap();

    for (name, seq) in [
        ("generation (endpoint-first)", &gen),
        ("understanding", &und),
        ("endpoint probe", &probe),
        ("refinement", &refine),
    ] {
        println!(
            "== {name}: {} tokens, {} supervised positions",
            seq.len(),
            seq.supervised_positions().len()
        );
    }

    println!("\nfull dump of the endpoint probe layout:\n");
    print!("{}", probe.dump(&cb));

    println!("\nrefinement layout, first 12 positions:\n");
    for line in refine.dump(&cb).lines().take(12) {
        println!("{line}");
    }
}
