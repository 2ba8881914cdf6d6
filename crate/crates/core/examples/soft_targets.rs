//! Spatial soft labels: the truncated Gaussian target around a ground-truth
//! cell, boundary renormalization, and the soft-label cross-entropy loss.
//!
//! Run with: `cargo run --release --example soft_targets`

use bevplan::grid_codec::{tokenize_waypoint, ActionTokenId, GridSpec, Waypoint};
use bevplan::soft_label::{generation_loss, soft_target, SoftTargetParams};

fn main() {
    let spec = GridSpec::default();
    let params = SoftTargetParams::default();
    println!("sigma = {}, radius = {} cells\n", params.sigma, params.radius);

    let center = tokenize_waypoint(Waypoint::new(10.0, 0.0), &spec);
    let q = soft_target(center, &params, &spec).unwrap();
    println!(
        "interior center {}: {} support cells, total mass {:.12}",
        center.0,
        q.entries().len(),
        q.total_mass()
    );
    let (cx, cy) = spec.cell_of(center).unwrap();
    println!("mass by ring (Euclidean cell distance):");
    for r in 0..=4 {
        let mass: f64 = q
            .entries()
            .iter()
            .filter(|(id, _)| {
                let (ix, iy) = spec.cell_of(ActionTokenId(*id)).unwrap();
                let d2 = (ix as i64 - cx as i64).pow(2) + (iy as i64 - cy as i64).pow(2);
                (d2 as f64).sqrt().round() as i64 == r
            })
            .map(|(_, p)| p)
            .sum();
        println!("  r = {r}: {mass:.4}");
    }

    let corner = spec.id_of(0, 0);
    let qc = soft_target(corner, &params, &spec).unwrap();
    println!(
        "\ncorner center {}: {} support cells (truncated by the grid edge), mass {:.12}",
        corner.0,
        qc.entries().len(),
        qc.total_mass()
    );

    // losses against three candidate predictions
    let k = spec.k_action();
    let uniform = vec![0.0; k];
    println!("\ngeneration loss (soft-label cross entropy):");
    println!("  uniform logits: {:.4} (= ln {k})", generation_loss(&uniform, &q).unwrap());
    let mut sharp = vec![-30.0; k];
    sharp[center.0 as usize] = 0.0;
    println!("  one-hot at the center: {:.4}", generation_loss(&sharp, &q).unwrap());
    let mut matched = vec![-30.0; k];
    for &(id, p) in q.entries() {
        matched[id as usize] = p.ln();
    }
    println!(
        "  logits matching q exactly: {:.4} (= H(q) = {:.4}, the lower bound)",
        generation_loss(&matched, &q).unwrap(),
        q.entropy()
    );
}
