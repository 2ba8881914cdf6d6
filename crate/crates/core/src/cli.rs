//! Command-line surface. Every pipeline stage is a subcommand; all state
//! flows through flags and files, and seeded commands are bit-reproducible.
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric/training
//! failure.

use crate::c2f_decoder::{bench_decode, DecodeInput};
use crate::codebook::build_codebook;
use crate::dreaming_eval::{evaluate_dataset, EvalParams, Prediction};
use crate::error::{Error, Result};
use crate::experiment::{evaluate_model, run_ablation, ExperimentPlan};
use crate::grid_codec::{
    detokenize, grid_size, tokenize_waypoint, ActionTokenId, GridSpec, Waypoint,
};
use crate::neural_core::{
    load_checkpoint, prepare_training_sequences, save_checkpoint, train, Model, ModelConfig,
    OptimSettings, TrainSettings,
};
use crate::soft_label::{soft_target, SoftTargetParams};
use crate::synth_world::{
    build_dataset, load_dataset, scene_to_tokens, Sample, WorldConfig, WORD_LIST,
};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "bevplan",
    about = "Tokenized BEV trajectory planning: log-grid action codec, soft-label training, coarse-to-fine decoding"
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Precision {
    F32,
    F64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum DecodeMode {
    C2f,
    Ar,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Quantize waypoints from a JSON file ([[x,y],...]) into action token ids.
    Tokenize {
        #[arg(long = "in")]
        input: PathBuf,
        /// Grid spec TOML; defaults to the reference grid.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decode action token ids back to cell-center waypoints.
    Detokenize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump one soft-target distribution as CSV (id, i_x, i_y, prob).
    SoftTarget {
        /// Center action token id.
        #[arg(long)]
        id: u32,
        #[arg(long, default_value_t = 1.2)]
        sigma: f64,
        #[arg(long, default_value_t = 10)]
        radius: u32,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic driving dataset (JSONL + summary).
    GenData {
        #[arg(long)]
        n: usize,
        /// Six comma-separated class weights: faster,slower,target_speed,lane_change,object,stop.
        #[arg(long, default_value = "1,1,1,1,1,1")]
        mix: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        spec: Option<PathBuf>,
        /// World config TOML overriding the frozen defaults.
        #[arg(long)]
        world: Option<PathBuf>,
    },
    /// Train a model on a dataset; writes checkpoint, metrics CSV, codebook.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Training config TOML; defaults are the documented toy settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Precision::F32)]
        precision: Precision,
    },
    /// Score a model (or a prediction file) on a dataset.
    EvalDream {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        ckpt: Option<PathBuf>,
        /// Prediction JSONL with pred_path / pred_speed_wps per line.
        #[arg(long)]
        pred: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Latency/pass-count comparison of AR vs coarse-to-fine decoding.
    Bench {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        /// Pad scene tokens until the generation layout reaches this length.
        #[arg(long, default_value_t = 120)]
        pad_to: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an ablation plan (TOML) and emit CSV + markdown reports.
    Ablate {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Render a dataset sample (and optional prediction) as SVG.
    Plot {
        #[arg(long)]
        data: PathBuf,
        /// Sample index within the dataset.
        #[arg(long, default_value_t = 0)]
        sample: usize,
        #[arg(long)]
        pred: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Overlay the log-grid cell boundaries.
        #[arg(long, default_value_t = false)]
        grid: bool,
    },
}

fn load_spec(path: &Option<PathBuf>) -> Result<GridSpec> {
    let spec = match path {
        None => GridSpec::default(),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            toml::from_str(&text).map_err(|e| Error::usage(format!("bad grid spec: {e}")))?
        }
    };
    spec.validate()?;
    Ok(spec)
}

fn write_or_print(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

/// Training file config; every field has the documented default.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainFileConfig {
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub max_seq_len: usize,
    pub dropout: f64,
    pub lambda: f64,
    pub c2f: bool,
    pub sigma: f64,
    pub radius: u32,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub holdout_frac: f64,
    pub lr: f64,
    pub weight_decay: f64,
}

impl Default for TrainFileConfig {
    fn default() -> Self {
        TrainFileConfig {
            d_model: 128,
            n_layers: 4,
            n_heads: 4,
            d_ff: 256,
            max_seq_len: 160,
            dropout: 0.1,
            lambda: 1.0,
            c2f: true,
            sigma: 1.2,
            radius: 10,
            epochs: 8,
            batch_size: 16,
            seed: 1,
            holdout_frac: 0.05,
            lr: 1e-3,
            weight_decay: 0.01,
        }
    }
}

fn run_train_generic<T: crate::neural_core::Scalar>(
    samples: &[Sample],
    spec: GridSpec,
    tc: &TrainFileConfig,
    out: &Path,
) -> Result<()> {
    let cb = build_codebook(WORD_LIST, spec)?;
    let n_holdout = ((samples.len() as f64) * tc.holdout_frac) as usize;
    let n_train = samples.len() - n_holdout;
    let soft = SoftTargetParams { sigma: tc.sigma, radius: tc.radius };
    let data = prepare_training_sequences(&samples[..n_train], &cb, soft, tc.c2f)?;
    let heldout = prepare_training_sequences(&samples[n_train..], &cb, soft, tc.c2f)?;
    let cfg = ModelConfig {
        d_model: tc.d_model,
        n_layers: tc.n_layers,
        n_heads: tc.n_heads,
        d_ff: tc.d_ff,
        max_seq_len: tc.max_seq_len,
        dropout: tc.dropout,
        lambda: tc.lambda,
        c2f: tc.c2f,
        ..ModelConfig::toy_for(&cb)
    };
    let mut model: Model<T> = Model::init(cfg, tc.seed)?;
    let settings = TrainSettings {
        optim: OptimSettings {
            lr: tc.lr,
            weight_decay: tc.weight_decay,
            ..OptimSettings::default()
        },
        epochs: tc.epochs,
        batch_size: tc.batch_size,
        seed: tc.seed,
    };
    let log = train(&mut model, &data, &heldout, &settings)?;
    for e in &log.epochs {
        eprintln!(
            "epoch {:>3}  gen {:.4}  und {:.4}  heldout {:.4}/{:.4}  ({:.1}s)",
            e.epoch, e.train_gen, e.train_und, e.heldout_gen, e.heldout_und, e.seconds
        );
    }
    save_checkpoint(&model, cb.hash(), out)?;
    std::fs::write(out.with_extension("metrics.csv"), log.to_csv())?;
    cb.save(&out.with_extension("codebook.txt"))?;
    Ok(())
}

fn parse_mix(mix: &str) -> Result<[f64; 6]> {
    let parts: Vec<f64> = mix
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::usage(format!("bad --mix: {e}")))?;
    if parts.len() != 6 {
        return Err(Error::usage(format!("--mix needs 6 weights, got {}", parts.len())));
    }
    Ok([parts[0], parts[1], parts[2], parts[3], parts[4], parts[5]])
}

fn load_predictions(path: &Path, expect: usize) -> Result<Vec<Prediction>> {
    #[derive(Deserialize)]
    struct PredLine {
        pred_path: Vec<[f64; 2]>,
        pred_speed_wps: Vec<[f64; 2]>,
    }
    let text = std::fs::read_to_string(path)?;
    let preds: Vec<Prediction> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let p: PredLine =
                serde_json::from_str(l).map_err(|e| Error::data(format!("bad prediction line: {e}")))?;
            Ok(Prediction {
                path: p.pred_path.iter().map(|&w| w.into()).collect(),
                speed_wps: p.pred_speed_wps.iter().map(|&w| w.into()).collect(),
            })
        })
        .collect::<Result<_>>()?;
    if preds.len() != expect {
        return Err(Error::data(format!(
            "{} predictions for {expect} samples",
            preds.len()
        )));
    }
    Ok(preds)
}

fn dataset_grid(header_grid: Option<GridSpec>) -> GridSpec {
    header_grid.unwrap_or_default()
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Tokenize { input, spec, out } => {
            let spec = load_spec(&spec)?;
            let text = std::fs::read_to_string(&input)?;
            let wps: Vec<[f64; 2]> = serde_json::from_str(&text)
                .map_err(|e| Error::data(format!("waypoint JSON: {e}")))?;
            let ids: Vec<u32> = wps
                .iter()
                .map(|&w| tokenize_waypoint(Waypoint::from(w), &spec).0)
                .collect();
            let json =
                serde_json::to_string(&ids).map_err(|e| Error::data(e.to_string()))?;
            write_or_print(&out, &(json + "\n"))
        }
        Cmd::Detokenize { input, spec, out } => {
            let spec = load_spec(&spec)?;
            let text = std::fs::read_to_string(&input)?;
            let ids: Vec<u32> = serde_json::from_str(&text)
                .map_err(|e| Error::data(format!("token id JSON: {e}")))?;
            let wps: Result<Vec<[f64; 2]>> = ids
                .iter()
                .map(|&id| detokenize(ActionTokenId(id), &spec).map(<[f64; 2]>::from))
                .collect();
            let json = serde_json::to_string(&wps?).map_err(|e| Error::data(e.to_string()))?;
            write_or_print(&out, &(json + "\n"))
        }
        Cmd::SoftTarget { id, sigma, radius, spec, out } => {
            let spec = load_spec(&spec)?;
            let k = grid_size(&spec)?.2;
            if id as usize >= k {
                return Err(Error::data(format!("--id {id} out of range (K_action = {k})")));
            }
            let q = soft_target(ActionTokenId(id), &SoftTargetParams { sigma, radius }, &spec)?;
            let mut csv = String::from("id,i_x,i_y,prob\n");
            for &(gid, p) in q.entries() {
                let (ix, iy) = spec.cell_of(ActionTokenId(gid)).unwrap();
                csv.push_str(&format!("{gid},{ix},{iy},{p:.12}\n"));
            }
            write_or_print(&out, &csv)
        }
        Cmd::GenData { n, mix, seed, out, spec, world } => {
            let spec = load_spec(&spec)?;
            let world: WorldConfig = match world {
                None => WorldConfig::default(),
                Some(p) => toml::from_str(&std::fs::read_to_string(p)?)
                    .map_err(|e| Error::usage(format!("bad world config: {e}")))?,
            };
            let mix = parse_mix(&mix)?;
            let summary = build_dataset(n, &mix, seed, &out, &spec, &world)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&summary).map_err(|e| Error::data(e.to_string()))?
            );
            Ok(())
        }
        Cmd::Train { data, out, config, precision } => {
            let tc: TrainFileConfig = match config {
                None => TrainFileConfig::default(),
                Some(p) => toml::from_str(&std::fs::read_to_string(p)?)
                    .map_err(|e| Error::usage(format!("bad train config: {e}")))?,
            };
            let (samples, header) = load_dataset(&data)?;
            if samples.is_empty() {
                return Err(Error::data("empty dataset"));
            }
            let spec = dataset_grid(header.map(|h| h.grid));
            match precision {
                Precision::F32 => run_train_generic::<f32>(&samples, spec, &tc, &out),
                Precision::F64 => run_train_generic::<f64>(&samples, spec, &tc, &out),
            }
        }
        Cmd::EvalDream { data, ckpt, pred, out } => {
            let (samples, header) = load_dataset(&data)?;
            let spec = dataset_grid(header.map(|h| h.grid));
            let params = EvalParams::with_dt(WorldConfig::default().speed_dt);
            let report = match (ckpt, pred) {
                (Some(ckpt), None) => {
                    let cb = build_codebook(WORD_LIST, spec)?;
                    let (model, _) = load_checkpoint::<f64>(&ckpt, Some(cb.hash()))?;
                    evaluate_model(&model, &cb, &samples, &params)?
                }
                (None, Some(pred)) => {
                    let preds = load_predictions(&pred, samples.len())?;
                    evaluate_dataset(&preds, &samples, &params)?
                }
                _ => {
                    return Err(Error::usage(
                        "eval-dream needs exactly one of --ckpt or --pred",
                    ))
                }
            };
            print!("{report}");
            if let Some(out) = out {
                std::fs::write(out, report.to_csv())?;
            }
            Ok(())
        }
        Cmd::Bench { ckpt, data, trials, pad_to, out } => {
            let (samples, header) = load_dataset(&data)?;
            if samples.is_empty() {
                return Err(Error::data("empty dataset"));
            }
            let spec = dataset_grid(header.map(|h| h.grid));
            let cb = build_codebook(WORD_LIST, spec)?;
            let (model, _) = load_checkpoint::<f64>(&ckpt, Some(cb.hash()))?;
            let inputs: Vec<DecodeInput> = samples
                .iter()
                .take(8)
                .map(|s| {
                    let mut input = DecodeInput {
                        v_ids: scene_to_tokens(&s.scene, &cb, cb.grid()),
                        instruction: s.instruction.clone(),
                    };
                    input.pad_to_layout_len(&cb, pad_to);
                    input
                })
                .collect();
            // pass-1/pass-2 endpoint convention: both goals probed jointly
            let report = bench_decode(&model, &cb, &inputs, trials)?;
            print!("{}", report.to_csv());
            if let Some(out) = out {
                std::fs::write(out, report.to_csv())?;
            }
            Ok(())
        }
        Cmd::Ablate { plan, out_dir } => {
            let plan = ExperimentPlan::from_toml(&std::fs::read_to_string(&plan)?)?;
            let report = run_ablation(&plan, |msg| eprintln!("{msg}"))?;
            std::fs::create_dir_all(&out_dir)?;
            let base = out_dir.join(&plan.name);
            std::fs::write(base.with_extension("csv"), report.to_csv())?;
            std::fs::write(base.with_extension("md"), report.to_markdown())?;
            println!("{}", report.to_markdown());
            Ok(())
        }
        Cmd::Plot { data, sample, pred, out, grid } => {
            let (samples, header) = load_dataset(&data)?;
            let spec = dataset_grid(header.map(|h| h.grid));
            let s = samples
                .get(sample)
                .ok_or_else(|| Error::data(format!("sample {sample} beyond dataset")))?;
            let preds = match pred {
                Some(p) => Some(load_predictions(&p, samples.len())?),
                None => None,
            };
            let svg = crate::plot::render_sample(
                s,
                preds.as_ref().map(|ps| &ps[sample]),
                &spec,
                grid,
            );
            std::fs::write(out, svg)?;
            Ok(())
        }
    }
}
