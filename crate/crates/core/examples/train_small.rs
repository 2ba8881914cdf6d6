//! Small end-to-end training run: generate data, train the toy model for a
//! few epochs, and score instruction-following success on held-out samples.
//! Takes a few minutes on a laptop CPU.
//!
//! Run with: `cargo run --release --example train_small`

use bevplan::codebook::build_codebook;
use bevplan::dreaming_eval::EvalParams;
use bevplan::experiment::evaluate_model;
use bevplan::grid_codec::GridSpec;
use bevplan::neural_core::{
    prepare_training_sequences, train, Model, ModelConfig, OptimSettings, TrainSettings,
};
use bevplan::soft_label::SoftTargetParams;
use bevplan::synth_world::{generate_samples, WorldConfig, WORD_LIST};

fn main() {
    let spec = GridSpec::default();
    let world = WorldConfig::default();
    let cb = build_codebook(WORD_LIST, spec).unwrap();

    let (n_train, n_eval, epochs) = (800, 160, 5);
    println!("generating {} samples...", n_train + n_eval);
    let all = generate_samples(n_train + n_eval, &[1.0; 6], 7, &spec, &world).unwrap();
    let (train_samples, eval_samples) = all.split_at(n_train);

    let data =
        prepare_training_sequences(train_samples, &cb, SoftTargetParams::default(), true).unwrap();
    let heldout =
        prepare_training_sequences(eval_samples, &cb, SoftTargetParams::default(), true).unwrap();

    let mut model: Model<f32> = Model::init(ModelConfig::toy_for(&cb), 7).unwrap();
    println!(
        "model: {} parameters, vocab {}\n",
        model.n_params(),
        model.cfg.vocab_size
    );
    let settings = TrainSettings {
        optim: OptimSettings::default(),
        epochs,
        batch_size: 16,
        seed: 7,
    };
    let log = train(&mut model, &data, &heldout, &settings).unwrap();
    for e in &log.epochs {
        println!(
            "epoch {:>2}  train gen/und {:.3}/{:.3}  heldout {:.3}/{:.3}  ({:.0}s)",
            e.epoch, e.train_gen, e.train_und, e.heldout_gen, e.heldout_und, e.seconds
        );
    }

    println!("\nscoring {} held-out samples with two-pass decoding...", eval_samples.len());
    let report =
        evaluate_model(&model, &cb, eval_samples, &EvalParams::with_dt(world.speed_dt)).unwrap();
    println!("{report}");
}
