//! Seeded ablation plans: train a base configuration and declared variants
//! under identical data order and step budgets, evaluate each with the
//! dreaming scorer and the latency benchmark, and emit CSV/markdown tables
//! with per-seed values and medians.

use crate::c2f_decoder::{bench_decode, decode_ar, decode_c2f, DecodeInput};
use crate::codebook::{build_codebook, Codebook};
use crate::dreaming_eval::{evaluate_dataset, EvalParams, EvalReport, Prediction};
use crate::error::{Error, Result};
use crate::grid_codec::GridSpec;
use crate::neural_core::{
    prepare_training_sequences, train, Model, ModelConfig, OptimSettings, TrainSettings,
};
use crate::soft_label::SoftTargetParams;
use crate::synth_world::{scene_to_tokens, Sample, WorldConfig, WORD_LIST};
use crate::util::median;
use serde::{Deserialize, Serialize};

/// Overridable knobs of one variant. Unset fields inherit the base plan.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Variant {
    pub name: String,
    pub lambda: Option<f64>,
    pub sigma: Option<f64>,
    pub radius: Option<u32>,
    /// `false` switches to one-hot targets (the soft-label ablation).
    pub soft_label: Option<bool>,
    /// Log-grid scale override (vocabulary sweep).
    pub k: Option<f64>,
    pub c2f: Option<bool>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentPlan {
    pub name: String,
    pub seed: u64,
    pub n_seeds: usize,
    pub n_train: usize,
    pub n_eval: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub dropout: f64,
    pub lambda: f64,
    pub sigma: f64,
    pub radius: u32,
    pub lr: f64,
    pub weight_decay: f64,
    pub bench_trials: usize,
    pub variants: Vec<Variant>,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        ExperimentPlan {
            name: "ablation".into(),
            seed: 1,
            n_seeds: 3,
            n_train: 600,
            n_eval: 150,
            epochs: 3,
            batch_size: 16,
            d_model: 64,
            n_layers: 3,
            n_heads: 4,
            d_ff: 128,
            dropout: 0.0,
            lambda: 1.0,
            sigma: 1.2,
            radius: 10,
            lr: 1e-3,
            weight_decay: 0.01,
            bench_trials: 5,
            variants: Vec::new(),
        }
    }
}

impl ExperimentPlan {
    pub fn from_toml(text: &str) -> Result<ExperimentPlan> {
        let plan: ExperimentPlan =
            toml::from_str(text).map_err(|e| Error::usage(format!("bad plan file: {e}")))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_seeds < 1 || self.n_train < 1 || self.n_eval < 1 || self.variants.is_empty() {
            return Err(Error::usage(
                "plan needs n_seeds >= 1, data sizes >= 1, and at least one variant",
            ));
        }
        Ok(())
    }

    fn resolved(&self, v: &Variant) -> ResolvedVariant {
        ResolvedVariant {
            name: v.name.clone(),
            lambda: v.lambda.unwrap_or(self.lambda),
            soft: if v.soft_label == Some(false) {
                SoftTargetParams::hard()
            } else {
                SoftTargetParams {
                    sigma: v.sigma.unwrap_or(self.sigma),
                    radius: v.radius.unwrap_or(self.radius),
                }
            },
            k: v.k,
            c2f: v.c2f.unwrap_or(true),
        }
    }
}

struct ResolvedVariant {
    name: String,
    lambda: f64,
    soft: SoftTargetParams,
    k: Option<f64>,
    c2f: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AblationRow {
    pub variant: String,
    pub seed: u64,
    pub failed: bool,
    pub mean_success: f64,
    pub per_class: Vec<(String, Option<f64>)>,
    pub final_gen_loss: f64,
    pub final_und_loss: f64,
    pub ar_p50_ms: f64,
    pub c2f_p50_ms: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AblationReport {
    pub plan_name: String,
    pub rows: Vec<AblationRow>,
    /// (variant, median mean-success over seeds).
    pub medians: Vec<(String, f64)>,
}

impl AblationReport {
    pub fn median_of(&self, variant: &str) -> Option<f64> {
        self.medians.iter().find(|(v, _)| v == variant).map(|(_, m)| *m)
    }

    pub fn rows_of(&self, variant: &str) -> Vec<&AblationRow> {
        self.rows.iter().filter(|r| r.variant == variant).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "variant,seed,failed,mean_success,final_gen_loss,final_und_loss,ar_p50_ms,c2f_p50_ms\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:.4},{:.4},{:.4},{:.3},{:.3}\n",
                r.variant,
                r.seed,
                r.failed,
                r.mean_success,
                r.final_gen_loss,
                r.final_und_loss,
                r.ar_p50_ms,
                r.c2f_p50_ms
            ));
        }
        out.push('\n');
        for (v, m) in &self.medians {
            out.push_str(&format!("median,{v},,{m:.4},,,,\n"));
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = format!("# Ablation: {}\n\n", self.plan_name);
        out.push_str("| variant | seed | mean success | gen loss | und loss | ar p50 ms | c2f p50 ms |\n");
        out.push_str("|---|---|---|---|---|---|---|\n");
        for r in &self.rows {
            out.push_str(&format!(
                "| {} | {} | {} | {:.3} | {:.3} | {:.2} | {:.2} |\n",
                r.variant,
                r.seed,
                if r.failed { "failed".into() } else { format!("{:.1}%", 100.0 * r.mean_success) },
                r.final_gen_loss,
                r.final_und_loss,
                r.ar_p50_ms,
                r.c2f_p50_ms
            ));
        }
        out.push_str("\n| variant | median mean success |\n|---|---|\n");
        for (v, m) in &self.medians {
            out.push_str(&format!("| {v} | {:.1}% |\n", 100.0 * m));
        }
        out
    }
}

/// Decode every sample with the model and score the predictions.
pub fn evaluate_model<T: crate::neural_core::Scalar>(
    model: &Model<T>,
    cb: &Codebook,
    samples: &[Sample],
    params: &EvalParams,
) -> Result<EvalReport> {
    let preds: Result<Vec<Prediction>> = samples
        .iter()
        .map(|s| {
            let v = scene_to_tokens(&s.scene, cb, cb.grid());
            let r = if model.cfg.c2f {
                decode_c2f(model, cb, &v, &s.instruction)?
            } else {
                decode_ar(model, cb, &v, &s.instruction)?
            };
            Ok(Prediction { path: r.path, speed_wps: r.speed_wps })
        })
        .collect();
    evaluate_dataset(&preds?, samples, params)
}

/// Run the full plan. Per seed, the dataset and the training stream are
/// generated once and shared by all variants, so every variant consumes the
/// same tuples in the same order with the same step budget. A diverging
/// variant is marked failed and the report is still produced.
pub fn run_ablation(plan: &ExperimentPlan, mut progress: impl FnMut(&str)) -> Result<AblationReport> {
    plan.validate()?;
    let world = WorldConfig::default();
    let mut rows: Vec<AblationRow> = Vec::new();

    for seed_idx in 0..plan.n_seeds {
        let seed = plan.seed + seed_idx as u64;
        let base_spec = GridSpec::default();
        progress(&format!("seed {seed}: generating {} samples", plan.n_train + plan.n_eval));
        let all = crate::synth_world::generate_samples(
            plan.n_train + plan.n_eval,
            &[1.0; 6],
            seed,
            &base_spec,
            &world,
        )?;
        let (train_samples, eval_samples) = all.split_at(plan.n_train);

        for variant in &plan.variants {
            let rv = plan.resolved(variant);
            progress(&format!("seed {seed}: variant {}", rv.name));
            match run_variant(plan, &rv, seed, train_samples, eval_samples, &world) {
                Ok(row) => rows.push(row),
                Err(e) => {
                    progress(&format!("variant {} failed: {e}", rv.name));
                    rows.push(AblationRow {
                        variant: rv.name.clone(),
                        seed,
                        failed: true,
                        mean_success: f64::NAN,
                        per_class: Vec::new(),
                        final_gen_loss: f64::NAN,
                        final_und_loss: f64::NAN,
                        ar_p50_ms: f64::NAN,
                        c2f_p50_ms: f64::NAN,
                    });
                }
            }
        }
    }

    let mut medians = Vec::new();
    for variant in &plan.variants {
        let vals: Vec<f64> = rows
            .iter()
            .filter(|r| r.variant == variant.name && !r.failed)
            .map(|r| r.mean_success)
            .collect();
        medians.push((variant.name.clone(), median(&vals)));
    }
    Ok(AblationReport { plan_name: plan.name.clone(), rows, medians })
}

fn run_variant(
    plan: &ExperimentPlan,
    rv: &ResolvedVariant,
    seed: u64,
    train_samples: &[Sample],
    eval_samples: &[Sample],
    world: &WorldConfig,
) -> Result<AblationRow> {
    let spec = match rv.k {
        Some(k) => GridSpec { k, ..GridSpec::default() },
        None => GridSpec::default(),
    };
    let cb = build_codebook(WORD_LIST, spec)?;
    let data = prepare_training_sequences(train_samples, &cb, rv.soft, rv.c2f)?;
    let cfg = ModelConfig {
        d_model: plan.d_model,
        n_layers: plan.n_layers,
        n_heads: plan.n_heads,
        d_ff: plan.d_ff,
        dropout: plan.dropout,
        lambda: rv.lambda,
        c2f: rv.c2f,
        ..ModelConfig::toy_for(&cb)
    };
    let mut model: Model<f32> = Model::init(cfg, seed)?;
    let settings = TrainSettings {
        optim: OptimSettings {
            lr: plan.lr,
            weight_decay: plan.weight_decay,
            ..OptimSettings::default()
        },
        epochs: plan.epochs,
        batch_size: plan.batch_size,
        seed,
    };
    let log = train(&mut model, &data, &[], &settings)?;
    let report = evaluate_model(&model, &cb, eval_samples, &EvalParams::with_dt(world.speed_dt))?;

    let mut input = DecodeInput {
        v_ids: scene_to_tokens(&eval_samples[0].scene, &cb, cb.grid()),
        instruction: eval_samples[0].instruction.clone(),
    };
    input.pad_to_layout_len(&cb, 120);
    let bench = bench_decode(&model, &cb, &[input], plan.bench_trials)?;

    let last = log.epochs.last();
    Ok(AblationRow {
        variant: rv.name.clone(),
        seed,
        failed: false,
        mean_success: report.mean_rate,
        per_class: report.per_class.iter().map(|r| (r.class.clone(), r.rate)).collect(),
        final_gen_loss: last.map_or(f64::NAN, |e| e.train_gen),
        final_und_loss: last.map_or(f64::NAN, |e| e.train_und),
        ar_p50_ms: bench.row("ar").unwrap().p50_ms,
        c2f_p50_ms: bench.row("c2f").unwrap().p50_ms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_parses_from_toml() {
        let text = r#"
name = "mini"
seed = 3
n_seeds = 1
n_train = 12
n_eval = 6
epochs = 1

[[variants]]
name = "base"

[[variants]]
name = "hard_labels"
soft_label = false
"#;
        let plan = ExperimentPlan::from_toml(text).unwrap();
        assert_eq!(plan.variants.len(), 2);
        assert_eq!(plan.n_train, 12);
        assert_eq!(plan.variants[1].soft_label, Some(false));
    }

    #[test]
    fn plan_without_variants_rejected() {
        assert!(ExperimentPlan::from_toml("name = \"x\"").is_err());
    }

    #[test]
    fn identical_variants_produce_identical_rows() {
        let plan = ExperimentPlan {
            n_seeds: 1,
            n_train: 8,
            n_eval: 6,
            epochs: 1,
            batch_size: 8,
            d_model: 16,
            n_layers: 1,
            n_heads: 2,
            d_ff: 16,
            bench_trials: 1,
            variants: vec![
                Variant { name: "a".into(), ..Default::default() },
                Variant { name: "b".into(), ..Default::default() },
            ],
            ..Default::default()
        };
        let report = run_ablation(&plan, |_| {}).unwrap();
        let a = report.rows_of("a")[0];
        let b = report.rows_of("b")[0];
        assert_eq!(a.mean_success, b.mean_success);
        assert_eq!(a.final_gen_loss, b.final_gen_loss);
        assert!(report.to_markdown().contains("| a |"));
        assert!(report.to_csv().contains("median,a"));
    }
}
