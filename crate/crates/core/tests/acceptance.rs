//! Acceptance suite: one pass/fail line per criterion, exit code 0 only if
//! every criterion holds. Run via `cargo test --test acceptance` (it is a
//! harness-free test target).
//!
//! The heavy criteria (end-to-end training, the alignment ablation) run at
//! the documented scales and dominate the wall time; the whole suite is
//! sized for a commodity 2-core CPU.

use bevplan::c2f_decoder::{bench_decode, decode_ar, decode_c2f, DecodeInput};
use bevplan::codebook::build_codebook;
use bevplan::dreaming_eval::{evaluate_sample, EvalParams, Prediction};
use bevplan::experiment::{evaluate_model, run_ablation, ExperimentPlan, Variant};
use bevplan::grid_codec::{
    detokenize, grid_size, log_transform, tokenize_waypoint, ActionTokenId, GridSpec, Waypoint,
};
use bevplan::neural_core::{
    finite_difference_check, prepare_training_sequences, train, Model, ModelConfig,
    OptimSettings, TrainSettings,
};
use bevplan::sequence_builder::TokenSequence;
use bevplan::soft_label::{soft_target, SoftTargetParams};
use bevplan::synth_world::{
    generate_samples, generate_scenario, scene_to_tokens, InstrClass, Sample, WorldConfig,
    WORD_LIST,
};
use bevplan::util::Rng;
use std::time::Instant;

struct Outcome {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
    seconds: f64,
}

fn report(
    outcomes: &mut Vec<Outcome>,
    id: usize,
    name: &'static str,
    t0: Instant,
    result: Result<String, String>,
) {
    let seconds = t0.elapsed().as_secs_f64();
    let (pass, detail) = match result {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    println!(
        "criterion {id:>2} [{}] {name}: {detail} ({seconds:.1}s)",
        if pass { "PASS" } else { "FAIL" }
    );
    outcomes.push(Outcome { id, name, pass, detail, seconds });
}

fn main() {
    let mut outcomes = Vec::new();
    let world = WorldConfig::default();
    let spec = GridSpec::default();
    let eval_params = EvalParams::with_dt(world.speed_dt);

    // 1. vocabulary exactness at k = 5
    let t0 = Instant::now();
    let r = (|| {
        let got = grid_size(&spec).map_err(|e| e.to_string())?;
        if got == (56, 101, 5656) && t0.elapsed().as_secs_f64() < 1.0 {
            Ok(format!("{got:?}"))
        } else {
            Err(format!("expected (56, 101, 5656), got {got:?}"))
        }
    })();
    report(&mut outcomes, 1, "vocabulary exactness (k=5)", t0, r);

    // 2. sweep exactness at k = 10
    let t0 = Instant::now();
    let r = (|| {
        let got = grid_size(&GridSpec { k: 10.0, ..spec }).map_err(|e| e.to_string())?;
        if got == (63, 115, 7245) {
            Ok(format!("{got:?}"))
        } else {
            Err(format!("expected (63, 115, 7245), got {got:?}"))
        }
    })();
    report(&mut outcomes, 2, "vocabulary exactness (k=10)", t0, r);

    // 3. codec round trip over 10,000 random waypoints
    let t0 = Instant::now();
    let r = (|| {
        let mut rng = Rng::new(9001);
        let mut worst = 0.0f64;
        for _ in 0..10_000 {
            let w =
                Waypoint::new(rng.range(spec.x_min, spec.x_max), rng.range(spec.y_min, spec.y_max));
            let back = detokenize(tokenize_waypoint(w, &spec), &spec).map_err(|e| e.to_string())?;
            let t = |z: f64| log_transform(z, spec.k).unwrap();
            let err = (t(back.x) - t(w.x)).abs().max((t(back.y) - t(w.y)).abs());
            worst = worst.max(err);
            if err > spec.step / 2.0 {
                return Err(format!("violation at ({}, {}): {err}", w.x, w.y));
            }
        }
        Ok(format!("10,000 points, worst transformed error {worst:.5} <= 0.05"))
    })();
    report(&mut outcomes, 3, "codec round-trip bound", t0, r);

    // 4. soft-target properties over all 5,656 centers
    let t0 = Instant::now();
    let r = (|| {
        let params = SoftTargetParams::default();
        let r2 = (params.radius * params.radius) as i64;
        for id in 0..spec.k_action() as u32 {
            let q = soft_target(ActionTokenId(id), &params, &spec).map_err(|e| e.to_string())?;
            let mass = q.total_mass();
            if (mass - 1.0).abs() > 1e-9 {
                return Err(format!("center {id}: mass {mass}"));
            }
            let (cx, cy) = spec.cell_of(ActionTokenId(id)).unwrap();
            let mut by_d2: Vec<(i64, f64)> = Vec::with_capacity(q.entries().len());
            let mut best = (0.0f64, 0u32);
            for &(gid, p) in q.entries() {
                let (ix, iy) = spec.cell_of(ActionTokenId(gid)).unwrap();
                let d2 = (ix as i64 - cx as i64).pow(2) + (iy as i64 - cy as i64).pow(2);
                if d2 > r2 {
                    return Err(format!("center {id}: support escapes radius"));
                }
                if p > best.0 {
                    best = (p, gid);
                }
                by_d2.push((d2, p));
            }
            if best.1 != id {
                return Err(format!("center {id}: argmax {}", best.1));
            }
            by_d2.sort_by_key(|e| e.0);
            for w in by_d2.windows(2) {
                let radial_ok = if w[0].0 == w[1].0 {
                    (w[0].1 - w[1].1).abs() < 1e-15
                } else {
                    w[0].1 > w[1].1
                };
                if !radial_ok {
                    return Err(format!("center {id}: radial monotonicity broken"));
                }
            }
        }
        if t0.elapsed().as_secs_f64() >= 30.0 {
            return Err(format!("took {:.1}s (budget 30s)", t0.elapsed().as_secs_f64()));
        }
        Ok("all 5,656 centers: mass, mode, monotonicity, support".into())
    })();
    report(&mut outcomes, 4, "soft-target properties", t0, r);

    // shared codebook for the neural criteria
    let cb = build_codebook(WORD_LIST, spec).expect("codebook");

    // 5. gradient correctness on the small double-precision config
    let t0 = Instant::now();
    let r = (|| {
        let samples: Vec<Sample> = (0..3)
            .map(|i| generate_scenario(InstrClass::ALL[i * 2], 7 + i as u64, &spec, &world).unwrap())
            .collect();
        let data = prepare_training_sequences(&samples, &cb, SoftTargetParams::default(), true)
            .map_err(|e| e.to_string())?;
        let model: Model<f64> =
            Model::init(ModelConfig::tiny_for(&cb), 3).map_err(|e| e.to_string())?;
        let batch: Vec<&TokenSequence> = vec![
            &data[0].gen,
            &data[1].und,
            data[2].refine.as_ref().unwrap(),
            data[0].probe.as_ref().unwrap(),
        ];
        let rep = finite_difference_check(&model, &batch, 1.0, 120, 1e-4, 11)
            .map_err(|e| e.to_string())?;
        if rep.max_rel_err <= 1e-3 {
            Ok(format!(
                "{} params sampled, max relative error {:.2e}",
                rep.n_checked, rep.max_rel_err
            ))
        } else {
            Err(format!(
                "max relative error {:.3e} at flat index {} (analytic {:.6e}, fd {:.6e})",
                rep.max_rel_err, rep.worst.0, rep.worst.1, rep.worst.2
            ))
        }
    })();
    report(&mut outcomes, 5, "analytic gradients vs finite differences", t0, r);

    // 6. pass-count exactness and wall-clock ratio at sequence length >= 120
    let t0 = Instant::now();
    let r = (|| {
        let model: Model<f32> =
            Model::init(ModelConfig::toy_for(&cb), 5).map_err(|e| e.to_string())?;
        let samples = generate_samples(5, &[1.0; 6], 31, &spec, &world).map_err(|e| e.to_string())?;
        for s in &samples {
            let v = scene_to_tokens(&s.scene, &cb, &spec);
            let ar = decode_ar(&model, &cb, &v, &s.instruction).map_err(|e| e.to_string())?;
            let c2 = decode_c2f(&model, &cb, &v, &s.instruction).map_err(|e| e.to_string())?;
            if ar.forward_passes != 30 || c2.forward_passes != 2 {
                return Err(format!("pass counts {} / {}", ar.forward_passes, c2.forward_passes));
            }
        }
        let mut input = DecodeInput {
            v_ids: scene_to_tokens(&samples[0].scene, &cb, &spec),
            instruction: samples[0].instruction.clone(),
        };
        input.pad_to_layout_len(&cb, 120);
        let seq_len = input.v_ids.len() + cb.encode_text(&input.instruction).len() + 36;
        let bench = bench_decode(&model, &cb, &[input], 50).map_err(|e| e.to_string())?;
        let ar = bench.row("ar").unwrap();
        let c2 = bench.row("c2f").unwrap();
        let ratio = c2.p50_ms / ar.p50_ms;
        if ratio <= 0.25 {
            Ok(format!(
                "passes 30/2 on all samples; seq_len {seq_len}; median wall {:.1} ms vs {:.1} ms, ratio {ratio:.3} <= 0.25",
                c2.p50_ms, ar.p50_ms
            ))
        } else {
            Err(format!("wall-clock ratio {ratio:.3} > 0.25"))
        }
    })();
    report(&mut outcomes, 6, "decode pass counts and latency ratio", t0, r);

    // 7. end-to-end desk-scale training
    let t0 = Instant::now();
    let mut trained: Option<(Model<f32>, Vec<Sample>)> = None;
    let r = (|| {
        let (n_train, n_eval) = (5000, 500);
        let all = generate_samples(n_train + n_eval, &[1.0; 6], 77, &spec, &world)
            .map_err(|e| e.to_string())?;
        let (train_samples, eval_samples) = all.split_at(n_train);
        let data =
            prepare_training_sequences(train_samples, &cb, SoftTargetParams::default(), true)
                .map_err(|e| e.to_string())?;
        let mut model: Model<f32> =
            Model::init(ModelConfig::toy_for(&cb), 1).map_err(|e| e.to_string())?;
        let settings = TrainSettings {
            optim: OptimSettings::default(),
            epochs: 6,
            batch_size: 16,
            seed: 1,
        };
        train(&mut model, &data, &[], &settings).map_err(|e| e.to_string())?;
        let train_secs = t0.elapsed().as_secs_f64();
        if train_secs > 30.0 * 60.0 {
            return Err(format!("training took {train_secs:.0}s > 30 min"));
        }
        let report =
            evaluate_model(&model, &cb, eval_samples, &eval_params).map_err(|e| e.to_string())?;
        let stop = report.rate_of(InstrClass::Stop).unwrap_or(0.0);
        let detail = format!(
            "5000 train / 500 held-out in {:.0}s; stop {:.1}%, mean {:.1}% ({})",
            train_secs,
            100.0 * stop,
            100.0 * report.mean_rate,
            report
                .per_class
                .iter()
                .map(|r| format!("{} {:.0}%", r.class, 100.0 * r.rate.unwrap_or(0.0)))
                .collect::<Vec<_>>()
                .join(", ")
        );
        let ok = stop >= 0.90 && report.mean_rate >= 0.70;
        trained = Some((model, eval_samples.to_vec()));
        if ok {
            Ok(detail)
        } else {
            Err(detail)
        }
    })();
    report(&mut outcomes, 7, "end-to-end training thresholds", t0, r);

    // 8. alignment objective: joint (lambda=1) beats generation-only (lambda=0)
    let t0 = Instant::now();
    let r = (|| {
        let plan = ExperimentPlan {
            name: "alignment".into(),
            seed: 41,
            n_seeds: 3,
            n_train: 700,
            n_eval: 240,
            epochs: 2,
            batch_size: 16,
            d_model: 64,
            n_layers: 2,
            n_heads: 4,
            d_ff: 128,
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
        let report = run_ablation(&plan, |_| {}).map_err(|e| e.to_string())?;
        let m0 = report.median_of("lambda0").unwrap();
        let m1 = report.median_of("lambda1").unwrap();
        let mut min_margin = f64::INFINITY;
        let mut pairs = Vec::new();
        for (a, b) in report.rows_of("lambda0").iter().zip(report.rows_of("lambda1").iter()) {
            if a.failed || b.failed {
                return Err("a variant run diverged".into());
            }
            min_margin = min_margin.min(b.mean_success - a.mean_success);
            pairs.push(format!(
                "seed {}: {:.1}% -> {:.1}%",
                a.seed,
                100.0 * a.mean_success,
                100.0 * b.mean_success
            ));
        }
        let detail =
            format!("median {:.1}% -> {:.1}%; {}", 100.0 * m0, 100.0 * m1, pairs.join("; "));
        if m1 > m0 && min_margin >= -0.01 {
            Ok(detail)
        } else {
            Err(detail)
        }
    })();
    report(&mut outcomes, 8, "alignment objective directional gain", t0, r);

    // 9. evaluator oracle equivalence + generation self-consistency
    let t0 = Instant::now();
    let r = (|| {
        let mut rng = Rng::new(4242);
        let base = generate_samples(120, &[1.0; 6], 900, &spec, &world).map_err(|e| e.to_string())?;
        for case in 0..1000 {
            let s = &base[case % base.len()];
            let pred = mutate_prediction(s, &mut rng);
            let mine = evaluate_sample(&pred, s, &eval_params).map_err(|e| e.to_string())?;
            let oracle = oracle::evaluate(&pred, s, &eval_params);
            if mine.success != oracle {
                return Err(format!(
                    "disagreement on case {case} ({:?}): mine {} oracle {} [{}]",
                    s.class, mine.success, oracle, mine.detail
                ));
            }
        }
        let gate = generate_samples(300, &[1.0; 6], 1900, &spec, &world).map_err(|e| e.to_string())?;
        for s in &gate {
            let pred = Prediction {
                path: s.dreamer_path_wps(),
                speed_wps: s.dreamer_speed_waypoints(),
            };
            if !evaluate_sample(&pred, s, &eval_params).map_err(|e| e.to_string())?.success {
                return Err(format!("self-consistency gate failed for seed {}", s.seed));
            }
        }
        Ok("1000 randomized cases, zero disagreements; 300/300 dreamer-as-prediction successes"
            .into())
    })();
    report(&mut outcomes, 9, "evaluator oracle equivalence", t0, r);

    // 10. refinement fixed point + endpoint agreement
    let t0 = Instant::now();
    let r = (|| {
        // (a) memorizing model on exactly straight dreamer paths
        let mut straight = Vec::new();
        let mut seed = 5000u64;
        while straight.len() < 6 {
            let class = [
                InstrClass::Faster,
                InstrClass::Slower,
                InstrClass::Stop,
                InstrClass::TargetSpeed,
            ][straight.len() % 4];
            let s = generate_scenario(class, seed, &spec, &world).map_err(|e| e.to_string())?;
            if s.dreamer_path.iter().all(|p| p[1].abs() < 1e-12) {
                straight.push(s);
            }
            seed += 1;
        }
        let data = prepare_training_sequences(&straight, &cb, SoftTargetParams::default(), true)
            .map_err(|e| e.to_string())?;
        let cfg = ModelConfig {
            d_model: 48,
            n_layers: 2,
            n_heads: 4,
            d_ff: 96,
            dropout: 0.0,
            ..ModelConfig::tiny_for(&cb)
        };
        let mut memo: Model<f32> = Model::init(cfg, 9).map_err(|e| e.to_string())?;
        let settings = TrainSettings {
            optim: OptimSettings { weight_decay: 0.0, ..OptimSettings::default() },
            epochs: 280,
            batch_size: 8,
            seed: 9,
        };
        train(&mut memo, &data, &[], &settings).map_err(|e| e.to_string())?;
        for s in &straight {
            let v = scene_to_tokens(&s.scene, &cb, &spec);
            let out = decode_c2f(&memo, &cb, &v, &s.instruction).map_err(|e| e.to_string())?;
            if out.path_tokens != out.coarse_path_tokens {
                return Err(format!(
                    "straight sample seed {}: refined path differs from its scaffold",
                    s.seed
                ));
            }
        }

        // (b) endpoint vs last-refined-token agreement on held-out data
        let (model, eval_samples) =
            trained.as_ref().ok_or_else(|| "criterion 7 model unavailable".to_string())?;
        let mut agree = 0usize;
        for s in eval_samples.iter() {
            let v = scene_to_tokens(&s.scene, &cb, &spec);
            let out = decode_c2f(model, &cb, &v, &s.instruction).map_err(|e| e.to_string())?;
            if out.endpoint_path_token == out.path_tokens.last().copied() {
                agree += 1;
            }
        }
        let rate = agree as f64 / eval_samples.len() as f64;
        if rate >= 0.95 {
            Ok(format!(
                "6/6 straight samples are refinement fixed points; endpoint agreement {:.1}% on {} held-out",
                100.0 * rate,
                eval_samples.len()
            ))
        } else {
            Err(format!("endpoint agreement {:.1}% < 95%", 100.0 * rate))
        }
    })();
    report(&mut outcomes, 10, "refinement fixed point and endpoint agreement", t0, r);

    let failed: Vec<&Outcome> = outcomes.iter().filter(|o| !o.pass).collect();
    let total: f64 = outcomes.iter().map(|o| o.seconds).sum();
    println!(
        "\nacceptance: {}/{} criteria passed in {:.0}s",
        outcomes.len() - failed.len(),
        outcomes.len(),
        total
    );
    if !failed.is_empty() {
        for f in &failed {
            println!("  FAILED criterion {}: {} — {}", f.id, f.name, f.detail);
        }
        std::process::exit(1);
    }
}

/// Randomized prediction mutations for the oracle-equivalence sweep.
fn mutate_prediction(s: &Sample, rng: &mut Rng) -> Prediction {
    let base = Prediction {
        path: s.dreamer_path_wps(),
        speed_wps: s.dreamer_speed_waypoints(),
    };
    match rng.below(6) {
        0 => base, // dreamer verbatim
        1 => Prediction {
            // expert as the prediction
            path: s.expert_path_wps(),
            speed_wps: s.expert_speed_waypoints(),
        },
        2 => {
            // jittered dreamer
            let sigma = rng.range(0.05, 1.2);
            let jig = |wps: &[Waypoint], rng: &mut Rng| -> Vec<Waypoint> {
                wps.iter()
                    .map(|w| Waypoint::new(w.x + sigma * rng.gauss(), w.y + sigma * rng.gauss()))
                    .collect()
            };
            let path = jig(&base.path, rng);
            let speed = jig(&base.speed_wps, rng);
            Prediction { path, speed_wps: speed }
        }
        3 => {
            // speed block rescaled in place
            let f = rng.range(0.3, 1.8);
            let mut out = vec![base.speed_wps[0]];
            for i in 1..base.speed_wps.len() {
                let prev = base.speed_wps[i - 1];
                let cur = base.speed_wps[i];
                let last = *out.last().unwrap();
                out.push(Waypoint::new(
                    last.x + f * (cur.x - prev.x),
                    last.y + f * (cur.y - prev.y),
                ));
            }
            Prediction { path: base.path, speed_wps: out }
        }
        4 => {
            // random drift
            let mut p = Waypoint::ORIGIN;
            let path = (0..20)
                .map(|_| {
                    p = Waypoint::new(p.x + rng.range(0.0, 2.0), p.y + rng.range(-0.5, 0.5));
                    p
                })
                .collect();
            let mut q = Waypoint::ORIGIN;
            let speed = (0..10)
                .map(|_| {
                    q = Waypoint::new(q.x + rng.range(0.0, 1.5), q.y + rng.range(-0.3, 0.3));
                    q
                })
                .collect();
            Prediction { path, speed_wps: speed }
        }
        _ => {
            // grid-quantized dreamer (what a perfect model could emit)
            let spec = GridSpec::default();
            let quant = |wps: &[Waypoint]| -> Vec<Waypoint> {
                wps.iter()
                    .map(|w| detokenize(tokenize_waypoint(*w, &spec), &spec).unwrap())
                    .collect()
            };
            Prediction { path: quant(&base.path), speed_wps: quant(&base.speed_wps) }
        }
    }
}

/// Independent brute-force scorer: a direct, separate transcription of the
/// per-class success rules, sharing no helpers with the library.
mod oracle {
    use super::{EvalParams, InstrClass, Prediction, Sample};

    fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    }

    fn speeds(wps: &[[f64; 2]], dt: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for i in 0..wps.len() - 1 {
            out.push(dist(wps[i], wps[i + 1]) / dt);
        }
        out
    }

    fn slope(v: &[f64], dt: f64) -> f64 {
        // plain least squares of v against t = i * dt
        let n = v.len() as f64;
        let mut st = 0.0;
        let mut sv = 0.0;
        let mut stt = 0.0;
        let mut stv = 0.0;
        for (i, &x) in v.iter().enumerate() {
            let t = i as f64 * dt;
            st += t;
            sv += x;
            stt += t * t;
            stv += t * x;
        }
        (n * stv - st * sv) / (n * stt - st * st)
    }

    fn mean(v: &[f64]) -> f64 {
        v.iter().sum::<f64>() / v.len() as f64
    }

    fn ade(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
        assert_eq!(a.len(), b.len(), "oracle only handles equal lengths");
        let total: f64 = a.iter().zip(b).map(|(p, q)| dist(*p, *q)).sum();
        total / a.len() as f64
    }

    pub fn evaluate(pred: &Prediction, s: &Sample, p: &EvalParams) -> bool {
        let pred_path: Vec<[f64; 2]> = pred.path.iter().map(|w| [w.x, w.y]).collect();
        let pred_speed: Vec<[f64; 2]> = pred.speed_wps.iter().map(|w| [w.x, w.y]).collect();
        let vp = speeds(&pred_speed, p.dt);
        let vd = speeds(&s.dreamer_speed_wps, p.dt);
        match s.class {
            InstrClass::Faster => slope(&vp, p.dt) > p.faster_slope_frac * vd[0],
            InstrClass::Slower => slope(&vp, p.dt) < -p.faster_slope_frac * vd[0],
            InstrClass::TargetSpeed => {
                let target = s.target_speed.unwrap();
                let last_pred = dist(pred_speed[8], pred_speed[9]) / p.dt;
                let last_gt = dist(s.dreamer_speed_wps[8], s.dreamer_speed_wps[9]) / p.dt;
                (last_pred - target).abs() <= p.target_band * target
                    || (last_pred - last_gt).abs() <= p.target_band * last_gt
            }
            InstrClass::LaneChange => {
                let pf = pred_path[19];
                dist(pf, s.dreamer_path[19]) < dist(pf, s.expert_path[19])
            }
            InstrClass::Stop => vp.iter().cloned().fold(f64::INFINITY, f64::min) < p.stop_speed,
            InstrClass::Object => {
                let split = ade(&s.expert_path, &s.dreamer_path);
                if split > p.object_ade_gate {
                    ade(&pred_path, &s.expert_path) > ade(&pred_path, &s.dreamer_path)
                } else {
                    ade(&pred_path, &s.dreamer_path) < p.object_ade_gate
                        && (mean(&vp) - mean(&vd)).abs() <= p.object_speed_band * mean(&vd)
                }
            }
        }
    }
}
