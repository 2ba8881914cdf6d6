//! Tour of the signed-log action grid: the coordinate transform, cell
//! counts, tokenize/detokenize round trips, and the resolution profile.
//!
//! Run with: `cargo run --release --example grid_tour`

use bevplan::grid_codec::{
    detokenize, grid_size, inverse_log_transform, log_transform, tokenize_waypoint, GridSpec,
    Waypoint,
};

fn main() {
    let spec = GridSpec::default();
    println!("grid spec: {spec:?}\n");

    println!("signed-log transform (k = {}):", spec.k);
    for z in [0.0, 0.5, 2.0, 10.0, 50.0, -5.0, -30.0] {
        let t = log_transform(z, spec.k).unwrap();
        let back = inverse_log_transform(t, spec.k).unwrap();
        println!("  T({z:>6.1}) = {t:>8.4}   back: {back:>8.4}");
    }

    let (nx, ny, k) = grid_size(&spec).unwrap();
    println!("\ncell counts: {nx} x {ny} = {k} action tokens");
    let k10 = GridSpec { k: 10.0, ..spec };
    let (nx, ny, k) = grid_size(&k10).unwrap();
    println!("with k = 10: {nx} x {ny} = {k} action tokens");

    println!("\ntokenize / detokenize:");
    for w in [
        Waypoint::new(0.0, 0.0),
        Waypoint::new(10.0, -5.0),
        Waypoint::new(49.9, 29.9),
        Waypoint::new(1.0, 0.2),
    ] {
        let id = tokenize_waypoint(w, &spec);
        let (ix, iy) = spec.cell_of(id).unwrap();
        let back = detokenize(id, &spec).unwrap();
        println!(
            "  ({:>5.2}, {:>5.2}) -> id {:>4} (cell {ix:>2},{iy:>3}) -> ({:>6.3}, {:>6.3})",
            w.x, w.y, id.0, back.x, back.y
        );
    }

    println!("\ncell width along x (resolution concentrates near the ego):");
    for x in [0.0, 1.0, 5.0, 10.0, 20.0, 40.0] {
        let id = tokenize_waypoint(Waypoint::new(x, 0.0), &spec);
        let (ix, _) = spec.cell_of(id).unwrap();
        let lo = inverse_log_transform(ix as f64 * spec.step, spec.k).unwrap();
        let hi = inverse_log_transform((ix + 1) as f64 * spec.step, spec.k).unwrap();
        println!("  x = {x:>5.1} m -> cell width {:.3} m", hi - lo);
    }
}
