//! Synthetic world preview: one sample per instruction class, the
//! self-consistency gate, and an SVG rendering.
//!
//! Run with: `cargo run --release --example world_preview`

use bevplan::dreaming_eval::{evaluate_sample, EvalParams, Prediction};
use bevplan::grid_codec::GridSpec;
use bevplan::plot::render_sample;
use bevplan::synth_world::{generate_scenario, InstrClass, WorldConfig};
use bevplan::util::polyline_length;

fn main() {
    let spec = GridSpec::default();
    let world = WorldConfig::default();
    let params = EvalParams::with_dt(world.speed_dt);

    for class in InstrClass::ALL {
        let s = generate_scenario(class, 42, &spec, &world).unwrap();
        let pts: Vec<(f64, f64)> = s.dreamer_path.iter().map(|p| (p[0], p[1])).collect();
        let dreamer_len = polyline_length(&pts);
        let final_speed = {
            let a = s.dreamer_speed_wps[8];
            let b = s.dreamer_speed_wps[9];
            ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt() / world.speed_dt
        };
        let gate = evaluate_sample(
            &Prediction {
                path: s.dreamer_path_wps(),
                speed_wps: s.dreamer_speed_waypoints(),
            },
            &s,
            &params,
        )
        .unwrap();
        println!(
            "{:<13} {:<38} lanes {}  objects {}  path {:>5.1} m  final v {:>4.1} m/s  gate {}",
            class.name(),
            format!("{:?}", s.instruction),
            s.scene.lanes.len(),
            s.scene.objects.len(),
            dreamer_len,
            final_speed,
            if gate.success { "ok" } else { "FAIL" }
        );
    }

    let sample = generate_scenario(InstrClass::LaneChange, 42, &spec, &world).unwrap();
    let svg = render_sample(&sample, None, &spec, true);
    let out = std::env::temp_dir().join("bevplan_world_preview.svg");
    std::fs::write(&out, svg).unwrap();
    println!("\nwrote {}", out.display());
}
