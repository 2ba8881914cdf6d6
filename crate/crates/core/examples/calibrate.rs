use bevplan::experiment::{run_ablation, ExperimentPlan, Variant};

fn main() {
    let plan = ExperimentPlan {
        name: "alignment".into(),
        seed: 41,
        n_seeds: 3,
        n_train: 400,
        n_eval: 240,
        epochs: 10,
        batch_size: 16,
        d_model: 128,
        n_layers: 4,
        n_heads: 4,
        d_ff: 256,
        dropout: 0.0,
        lr: 1e-3,
        weight_decay: 0.01,
        bench_trials: 1,
        variants: vec![
            Variant { name: "lambda0".into(), lambda: Some(0.0), ..Default::default() },
            Variant { name: "lambda1".into(), lambda: Some(1.0), ..Default::default() },
        ],
        ..Default::default()
    };
    let report = run_ablation(&plan, |m| eprintln!("{m}")).unwrap();
    println!("{}", report.to_csv());
}
