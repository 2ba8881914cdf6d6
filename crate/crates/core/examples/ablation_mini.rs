//! Miniature ablation: the bidirectional objective (lambda = 1) against
//! generation-only training (lambda = 0), one seed, identical data order
//! and step budget. A scaled-down version of the `ablate` subcommand.
//!
//! Run with: `cargo run --release --example ablation_mini`

use bevplan::experiment::{run_ablation, ExperimentPlan, Variant};

fn main() {
    let plan = ExperimentPlan {
        name: "alignment-mini".into(),
        seed: 5,
        n_seeds: 1,
        n_train: 300,
        n_eval: 90,
        epochs: 3,
        batch_size: 16,
        d_model: 64,
        n_layers: 2,
        n_heads: 4,
        d_ff: 128,
        bench_trials: 3,
        variants: vec![
            Variant { name: "generation_only".into(), lambda: Some(0.0), ..Default::default() },
            Variant { name: "joint".into(), lambda: Some(1.0), ..Default::default() },
        ],
        ..Default::default()
    };
    let report = run_ablation(&plan, |msg| eprintln!("[plan] {msg}")).unwrap();
    println!("{}", report.to_markdown());
}
