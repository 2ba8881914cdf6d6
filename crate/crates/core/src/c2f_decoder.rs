//! Inference-time decoding.
//!
//! `decode_ar` emits the 30 action tokens one forward pass at a time.
//! `decode_c2f` collapses that into two passes: an endpoint probe over the
//! adjacent goal tokens, then one parallel refinement pass over the
//! interpolated coarse scaffold. Both count their forward invocations
//! exactly and time only the network calls.

use crate::codebook::{Codebook, Special};
use crate::error::{Error, Result};
use crate::grid_codec::{detokenize, detokenize_path, tokenize_path, ActionTokenId, Waypoint};
use crate::neural_core::{Model, Scalar};
use crate::sequence_builder::{
    coarse_from_endpoint, undo_endpoint_first, PATH_LEN, SPEED_LEN,
};
use crate::util::{mean, percentile};
use std::time::Instant;

/// Decoded trajectory with exact forward-pass accounting.
#[derive(Clone, Debug)]
pub struct DecodeResult {
    pub path: Vec<Waypoint>,
    pub speed_wps: Vec<Waypoint>,
    pub forward_passes: usize,
    /// Seconds spent inside network forwards only.
    pub wall_clock: f64,
    /// Refined (or AR-emitted) tokens in natural order.
    pub path_tokens: Vec<ActionTokenId>,
    pub speed_tokens: Vec<ActionTokenId>,
    /// Two-pass extras; empty for AR decoding.
    pub coarse_path_tokens: Vec<ActionTokenId>,
    pub coarse_speed_tokens: Vec<ActionTokenId>,
    pub endpoint_path_token: Option<ActionTokenId>,
    pub endpoint_speed_token: Option<ActionTokenId>,
}

struct CountedForward<'m, T: Scalar> {
    model: &'m Model<T>,
    passes: usize,
    elapsed: f64,
}

impl<'m, T: Scalar> CountedForward<'m, T> {
    fn new(model: &'m Model<T>) -> Self {
        CountedForward { model, passes: 0, elapsed: 0.0 }
    }

    fn forward(&mut self, ids: &[u32], want: &[usize]) -> Result<Vec<T>> {
        let t0 = Instant::now();
        let out = self.model.forward(ids, want)?;
        self.elapsed += t0.elapsed().as_secs_f64();
        self.passes += 1;
        Ok(out)
    }
}

/// Argmax restricted to the action segment of the unified vocabulary.
fn argmax_action<T: Scalar>(logits: &[T], offset: usize, k_action: usize) -> ActionTokenId {
    let mut best = 0usize;
    let mut best_v = logits[offset];
    for (i, &v) in logits[offset..offset + k_action].iter().enumerate() {
        if v > best_v {
            best_v = v;
            best = i;
        }
    }
    ActionTokenId(best as u32)
}

fn prompt_prefix(cb: &Codebook, v_ids: &[u32], instruction: &str) -> Vec<u32> {
    let mut ids = Vec::with_capacity(v_ids.len() + 12);
    ids.push(cb.special(Special::Bos));
    ids.extend_from_slice(v_ids);
    ids.push(cb.special(Special::Sep));
    ids.extend(cb.encode_text(instruction));
    ids.push(cb.special(Special::Sep));
    ids
}

/// Greedy autoregressive decoding: 30 sequential forwards, one per emitted
/// action token. Works for both training orders; endpoint-first models have
/// their blocks un-permuted back to natural order.
pub fn decode_ar<T: Scalar>(
    model: &Model<T>,
    cb: &Codebook,
    v_ids: &[u32],
    instruction: &str,
) -> Result<DecodeResult> {
    let spec = cb.grid();
    let offset = model.cfg.action_offset;
    let k_action = model.cfg.k_action();
    let mut fwd = CountedForward::new(model);

    let mut ids = prompt_prefix(cb, v_ids, instruction);
    let emit_block = |ids: &mut Vec<u32>,
                          fwd: &mut CountedForward<T>,
                          goal: Special,
                          len: usize|
     -> Result<Vec<ActionTokenId>> {
        ids.push(cb.special(goal));
        let mut block = Vec::with_capacity(len);
        for _ in 0..len {
            let logits = fwd.forward(ids, &[ids.len() - 1])?;
            let tok = argmax_action(&logits, offset, k_action);
            block.push(tok);
            ids.push(cb.action_to_unified(tok));
        }
        Ok(block)
    };
    let path_emitted = emit_block(&mut ids, &mut fwd, Special::PathGoal, PATH_LEN)?;
    let speed_emitted = emit_block(&mut ids, &mut fwd, Special::SpeedGoal, SPEED_LEN)?;

    let (path_tokens, speed_tokens) = if model.cfg.c2f {
        (undo_endpoint_first(&path_emitted), undo_endpoint_first(&speed_emitted))
    } else {
        (path_emitted, speed_emitted)
    };
    Ok(DecodeResult {
        path: detokenize_path(&path_tokens, spec)?,
        speed_wps: detokenize_path(&speed_tokens, spec)?,
        forward_passes: fwd.passes,
        wall_clock: fwd.elapsed,
        path_tokens,
        speed_tokens,
        coarse_path_tokens: Vec::new(),
        coarse_speed_tokens: Vec::new(),
        endpoint_path_token: None,
        endpoint_speed_token: None,
    })
}

/// Two-pass coarse-to-fine decoding.
///
/// Pass 1 forwards `[BOS, V, SEP, L, SEP, PATH_GOAL, SPEED_GOAL]` and reads
/// both endpoint tokens at the goal positions. The endpoints are
/// detokenized, linearly interpolated from the origin, and re-tokenized into
/// coarse scaffolds. Pass 2 forwards the full refinement layout and reads
/// the refined token at each coarse position.
pub fn decode_c2f<T: Scalar>(
    model: &Model<T>,
    cb: &Codebook,
    v_ids: &[u32],
    instruction: &str,
) -> Result<DecodeResult> {
    if !model.cfg.c2f {
        return Err(Error::usage(
            "decode_c2f requires a model trained with endpoint-first (c2f) ordering",
        ));
    }
    let spec = cb.grid();
    let offset = model.cfg.action_offset;
    let k_action = model.cfg.k_action();
    let mut fwd = CountedForward::new(model);

    // pass 1: adjacent goal probe
    let prefix = prompt_prefix(cb, v_ids, instruction);
    let mut probe = prefix.clone();
    probe.push(cb.special(Special::PathGoal));
    probe.push(cb.special(Special::SpeedGoal));
    let n = probe.len();
    let logits = fwd.forward(&probe, &[n - 2, n - 1])?;
    let k = model.cfg.vocab_size;
    let path_end = argmax_action(&logits[..k], offset, k_action);
    let speed_end = argmax_action(&logits[k..], offset, k_action);

    // scaffold construction (not timed: pure codec work)
    let path_end_wp = detokenize(path_end, spec)?;
    let speed_end_wp = detokenize(speed_end, spec)?;
    let coarse_path = tokenize_path(
        &coarse_from_endpoint(Waypoint::ORIGIN, path_end_wp, PATH_LEN),
        spec,
    );
    let coarse_speed = tokenize_path(
        &coarse_from_endpoint(Waypoint::ORIGIN, speed_end_wp, SPEED_LEN),
        spec,
    );

    // pass 2: parallel refinement at the coarse positions
    let mut ids = prefix;
    ids.push(cb.special(Special::PathGoal));
    let path_positions: Vec<usize> = (0..PATH_LEN).map(|i| ids.len() + i).collect();
    ids.extend(coarse_path.iter().map(|t| cb.action_to_unified(*t)));
    ids.push(cb.special(Special::SpeedGoal));
    let speed_positions: Vec<usize> = (0..SPEED_LEN).map(|i| ids.len() + i).collect();
    ids.extend(coarse_speed.iter().map(|t| cb.action_to_unified(*t)));

    let want: Vec<usize> = path_positions.iter().chain(&speed_positions).copied().collect();
    let logits = fwd.forward(&ids, &want)?;
    let refined: Vec<ActionTokenId> = (0..want.len())
        .map(|row| argmax_action(&logits[row * k..(row + 1) * k], offset, k_action))
        .collect();
    let path_tokens = refined[..PATH_LEN].to_vec();
    let speed_tokens = refined[PATH_LEN..].to_vec();

    Ok(DecodeResult {
        path: detokenize_path(&path_tokens, spec)?,
        speed_wps: detokenize_path(&speed_tokens, spec)?,
        forward_passes: fwd.passes,
        wall_clock: fwd.elapsed,
        path_tokens,
        speed_tokens,
        coarse_path_tokens: coarse_path,
        coarse_speed_tokens: coarse_speed,
        endpoint_path_token: Some(path_end),
        endpoint_speed_token: Some(speed_end),
    })
}

/// One decode input: scene tokens plus instruction.
#[derive(Clone, Debug)]
pub struct DecodeInput {
    pub v_ids: Vec<u32>,
    pub instruction: String,
}

impl DecodeInput {
    /// Pad the scene segment (cycling its element pairs) until the full
    /// generation layout reaches `target_len` tokens; benchmark plumbing to
    /// pin the sequence length.
    pub fn pad_to_layout_len(&mut self, cb: &Codebook, target_len: usize) {
        let l_len = cb.encode_text(&self.instruction).len();
        // BOS + V + SEP + L + SEP + PATH_GOAL + 20 + SPEED_GOAL + 10 + EOS
        let layout = |v: usize| v + l_len + 36;
        if self.v_ids.is_empty() {
            return;
        }
        let mut i = 0;
        while layout(self.v_ids.len()) < target_len {
            let pair = [self.v_ids[i % self.v_ids.len()], self.v_ids[(i + 1) % self.v_ids.len()]];
            self.v_ids.extend_from_slice(&pair);
            i += 2;
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchRow {
    pub method: &'static str,
    pub n_params: usize,
    pub seq_len: usize,
    pub passes: usize,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
}

#[derive(Clone, Debug)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub trials: usize,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,n_params,seq_len,passes,mean_ms,p50_ms,p95_ms\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{:.3},{:.3},{:.3}\n",
                r.method, r.n_params, r.seq_len, r.passes, r.mean_ms, r.p50_ms, r.p95_ms
            ));
        }
        out
    }

    pub fn row(&self, method: &str) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.method == method)
    }
}

/// Wall-clock comparison of the two decoders on identical inputs. Runs
/// sequential trials on one thread; a few warmup decodes are excluded.
pub fn bench_decode<T: Scalar>(
    model: &Model<T>,
    cb: &Codebook,
    inputs: &[DecodeInput],
    n_trials: usize,
) -> Result<BenchReport> {
    if n_trials < 1 {
        return Err(Error::usage("bench needs at least one trial"));
    }
    if inputs.is_empty() {
        return Err(Error::usage("bench needs at least one input"));
    }
    let l_len = cb.encode_text(&inputs[0].instruction).len();
    let seq_len = inputs[0].v_ids.len() + l_len + 36;

    for input in inputs.iter().take(3.min(inputs.len())) {
        decode_ar(model, cb, &input.v_ids, &input.instruction)?;
        decode_c2f(model, cb, &input.v_ids, &input.instruction)?;
    }

    let mut ar_times = Vec::with_capacity(n_trials);
    let mut c2f_times = Vec::with_capacity(n_trials);
    let mut ar_passes = 0usize;
    let mut c2f_passes = 0usize;
    for trial in 0..n_trials {
        let input = &inputs[trial % inputs.len()];
        let ar = decode_ar(model, cb, &input.v_ids, &input.instruction)?;
        let c2 = decode_c2f(model, cb, &input.v_ids, &input.instruction)?;
        ar_passes = ar.forward_passes;
        c2f_passes = c2.forward_passes;
        ar_times.push(ar.wall_clock * 1e3);
        c2f_times.push(c2.wall_clock * 1e3);
    }
    let row = |method: &'static str, times: &[f64], passes: usize| BenchRow {
        method,
        n_params: model.n_params(),
        seq_len,
        passes,
        mean_ms: mean(times),
        p50_ms: percentile(times, 0.5),
        p95_ms: percentile(times, 0.95),
    };
    Ok(BenchReport {
        rows: vec![row("ar", &ar_times, ar_passes), row("c2f", &c2f_times, c2f_passes)],
        trials: n_trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::build_codebook;
    use crate::grid_codec::GridSpec;
    use crate::neural_core::ModelConfig;
    use crate::synth_world::WORD_LIST;

    fn setup() -> (Codebook, Model<f64>) {
        let cb = build_codebook(WORD_LIST, GridSpec::default()).unwrap();
        let model = Model::init(ModelConfig::tiny_for(&cb), 3).unwrap();
        (cb, model)
    }

    fn v_ids(cb: &Codebook) -> Vec<u32> {
        vec![
            cb.special(Special::ClsEgo),
            cb.action_to_unified(crate::grid_codec::tokenize_waypoint(Waypoint::ORIGIN, cb.grid())),
        ]
    }

    #[test]
    fn ar_pass_count_is_thirty() {
        let (cb, model) = setup();
        let r = decode_ar(&model, &cb, &v_ids(&cb), "speed up").unwrap();
        assert_eq!(r.forward_passes, 30);
        assert_eq!(r.path.len(), PATH_LEN);
        assert_eq!(r.speed_wps.len(), SPEED_LEN);
    }

    #[test]
    fn c2f_pass_count_is_two() {
        let (cb, model) = setup();
        let r = decode_c2f(&model, &cb, &v_ids(&cb), "speed up").unwrap();
        assert_eq!(r.forward_passes, 2);
        assert_eq!(r.coarse_path_tokens.len(), PATH_LEN);
        assert!(r.endpoint_path_token.is_some());
    }

    #[test]
    fn c2f_requires_c2f_model() {
        let (cb, mut model) = setup();
        model.cfg.c2f = false;
        assert!(decode_c2f(&model, &cb, &v_ids(&cb), "go").is_err());
    }

    #[test]
    fn greedy_decoding_is_deterministic() {
        let (cb, model) = setup();
        let a = decode_ar(&model, &cb, &v_ids(&cb), "stop the car").unwrap();
        let b = decode_ar(&model, &cb, &v_ids(&cb), "stop the car").unwrap();
        assert_eq!(a.path_tokens, b.path_tokens);
        assert_eq!(a.speed_tokens, b.speed_tokens);
        let c = decode_c2f(&model, &cb, &v_ids(&cb), "stop the car").unwrap();
        let d = decode_c2f(&model, &cb, &v_ids(&cb), "stop the car").unwrap();
        assert_eq!(c.path_tokens, d.path_tokens);
    }

    #[test]
    fn decoded_waypoints_stay_in_grid_box() {
        let (cb, model) = setup();
        let spec = cb.grid();
        for r in [
            decode_ar(&model, &cb, &v_ids(&cb), "go").unwrap(),
            decode_c2f(&model, &cb, &v_ids(&cb), "go").unwrap(),
        ] {
            for w in r.path.iter().chain(r.speed_wps.iter()) {
                assert!(w.x >= spec.x_min && w.x <= spec.x_max);
                assert!(w.y >= spec.y_min && w.y <= spec.y_max);
            }
        }
    }

    #[test]
    fn scaffold_endpoint_echoes_pass1_endpoint() {
        // idempotence: the last coarse token always equals the pass-1 token
        let (cb, model) = setup();
        let r = decode_c2f(&model, &cb, &v_ids(&cb), "go").unwrap();
        assert_eq!(*r.coarse_path_tokens.last().unwrap(), r.endpoint_path_token.unwrap());
        assert_eq!(*r.coarse_speed_tokens.last().unwrap(), r.endpoint_speed_token.unwrap());
    }

    #[test]
    fn padding_reaches_target_length() {
        let (cb, _) = setup();
        let mut input = DecodeInput { v_ids: v_ids(&cb), instruction: "speed up".into() };
        input.pad_to_layout_len(&cb, 120);
        let layout_len = input.v_ids.len() + cb.encode_text(&input.instruction).len() + 36;
        assert!(layout_len >= 120);
    }

    #[test]
    fn bench_produces_two_rows() {
        let (cb, model) = setup();
        let inputs = vec![DecodeInput { v_ids: v_ids(&cb), instruction: "go".into() }];
        let report = bench_decode(&model, &cb, &inputs, 3).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.row("ar").unwrap().passes, 30);
        assert_eq!(report.row("c2f").unwrap().passes, 2);
        assert!(report.to_csv().lines().count() == 3);
        assert!(bench_decode(&model, &cb, &inputs, 0).is_err());
    }
}
