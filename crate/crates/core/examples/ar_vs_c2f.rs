//! Decoding cost comparison: 30 sequential forward passes (autoregressive)
//! against 2 passes (coarse-to-fine), on identical inputs at a pinned
//! sequence length.
//!
//! Run with: `cargo run --release --example ar_vs_c2f`

use bevplan::c2f_decoder::{bench_decode, decode_ar, decode_c2f, DecodeInput};
use bevplan::codebook::build_codebook;
use bevplan::grid_codec::GridSpec;
use bevplan::neural_core::{Model, ModelConfig};
use bevplan::synth_world::{generate_scenario, scene_to_tokens, InstrClass, WorldConfig, WORD_LIST};

fn main() {
    let spec = GridSpec::default();
    let world = WorldConfig::default();
    let cb = build_codebook(WORD_LIST, spec).unwrap();
    // timing only depends on shapes, so a fresh init is fine here
    let model: Model<f32> = Model::init(ModelConfig::toy_for(&cb), 3).unwrap();

    let sample = generate_scenario(InstrClass::LaneChange, 9, &spec, &world).unwrap();
    let v = scene_to_tokens(&sample.scene, &cb, &spec);

    let ar = decode_ar(&model, &cb, &v, &sample.instruction).unwrap();
    let c2f = decode_c2f(&model, &cb, &v, &sample.instruction).unwrap();
    println!("forward passes: ar = {}, c2f = {}", ar.forward_passes, c2f.forward_passes);
    println!(
        "pass-count ratio: {}/{} = {:.3}\n",
        c2f.forward_passes,
        ar.forward_passes,
        c2f.forward_passes as f64 / ar.forward_passes as f64
    );

    let mut input = DecodeInput { v_ids: v, instruction: sample.instruction.clone() };
    input.pad_to_layout_len(&cb, 120);
    println!("benchmarking at layout length >= 120 (50 trials)...");
    let report = bench_decode(&model, &cb, &[input], 50).unwrap();
    print!("{}", report.to_csv());
    let ratio = report.row("c2f").unwrap().p50_ms / report.row("ar").unwrap().p50_ms;
    println!("\nmedian wall-clock ratio c2f/ar = {ratio:.3}");
}
