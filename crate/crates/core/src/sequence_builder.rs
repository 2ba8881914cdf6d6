//! Assembly of supervised token sequences for the four training modes:
//! action generation, action understanding, endpoint probing, and
//! coarse-to-fine refinement.
//!
//! Targets are logit-aligned: `targets[p]` scores the network's logits at
//! position `p`. Next-token supervision therefore sits at the position
//! *before* the token it predicts, while refinement supervision sits at the
//! coarse position itself (the refined token is read in place).

use crate::codebook::{Codebook, Special};
use crate::error::{Error, Result};
use crate::grid_codec::{detokenize, tokenize_path, ActionTokenId, Waypoint};
use crate::soft_label::{soft_target, SoftTargetParams, TargetDistribution};
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

/// Geometric path tokens per action block.
pub const PATH_LEN: usize = 20;
/// Temporal speed waypoints per action block.
pub const SPEED_LEN: usize = 10;

/// Per-position segment tag.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SegTag {
    V,
    L,
    A,
    Coarse,
    Goal,
    Special,
}

/// Supervision attached to one logit position.
#[derive(Clone, Debug)]
pub enum Target {
    /// Next-token cross entropy against a unified id (language targets).
    Hard(u32),
    /// Soft-label cross entropy over the action segment (action targets).
    Soft(Arc<TargetDistribution>),
}

/// One training or inference sequence with per-position supervision.
#[derive(Clone, Debug)]
pub struct TokenSequence {
    pub input_ids: Vec<u32>,
    pub targets: Vec<Option<Target>>,
    pub tags: Vec<SegTag>,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.input_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.input_ids.is_empty()
    }

    pub fn supervised_positions(&self) -> Vec<usize> {
        self.targets
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.as_ref().map(|_| i))
            .collect()
    }

    /// Debug dump: one token per line with id, name, tag, and target.
    pub fn dump(&self, cb: &Codebook) -> String {
        let mut out = String::new();
        for i in 0..self.len() {
            let target = match &self.targets[i] {
                None => "-".to_string(),
                Some(Target::Hard(id)) => format!("hard:{}", cb.token_name(*id)),
                Some(Target::Soft(d)) => format!("soft:act{}", d.center.0),
            };
            out.push_str(&format!(
                "{i}\t{}\t{}\t{:?}\t{target}\n",
                self.input_ids[i],
                cb.token_name(self.input_ids[i]),
                self.tags[i]
            ));
        }
        out
    }
}

/// Fixed-length action block: 20 path tokens plus 10 speed tokens.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionBlock {
    pub path: Vec<ActionTokenId>,
    pub speed: Vec<ActionTokenId>,
}

impl ActionBlock {
    pub fn new(path: Vec<ActionTokenId>, speed: Vec<ActionTokenId>) -> Result<Self> {
        if path.len() != PATH_LEN || speed.len() != SPEED_LEN {
            return Err(Error::data(format!(
                "action block must be {PATH_LEN}+{SPEED_LEN} tokens, got {}+{}",
                path.len(),
                speed.len()
            )));
        }
        Ok(ActionBlock { path, speed })
    }

    pub fn from_waypoints(
        path_wps: &[Waypoint],
        speed_wps: &[Waypoint],
        spec: &crate::grid_codec::GridSpec,
    ) -> Result<Self> {
        ActionBlock::new(tokenize_path(path_wps, spec), tokenize_path(speed_wps, spec))
    }
}

/// Token order for the action segment of generation samples.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum GenOrder {
    /// Plain autoregressive baseline: w_1 .. w_T.
    Natural,
    /// Coarse-to-fine training order: w_T, w_1, .., w_{T-1}.
    EndpointFirst,
}

/// Reorder a block endpoint-first: `{w_T, w_1, ..., w_{T-1}}`.
pub fn reorder_endpoint_first<T: Copy>(block: &[T]) -> Vec<T> {
    match block.split_last() {
        None => Vec::new(),
        Some((last, rest)) => {
            let mut out = Vec::with_capacity(block.len());
            out.push(*last);
            out.extend_from_slice(rest);
            out
        }
    }
}

/// Inverse of [`reorder_endpoint_first`].
pub fn undo_endpoint_first<T: Copy>(block: &[T]) -> Vec<T> {
    match block.split_first() {
        None => Vec::new(),
        Some((first, rest)) => {
            let mut out = Vec::with_capacity(block.len());
            out.extend_from_slice(rest);
            out.push(*first);
            out
        }
    }
}

/// Linear interpolation scaffold: `w_i = w0 + (i/T)(wT - w0)` for i in 1..=T.
pub fn coarse_from_endpoint(w0: Waypoint, w_t: Waypoint, t: usize) -> Vec<Waypoint> {
    assert!(t >= 1);
    (1..=t)
        .map(|i| {
            let f = i as f64 / t as f64;
            Waypoint::new(w0.x + f * (w_t.x - w0.x), w0.y + f * (w_t.y - w0.y))
        })
        .collect()
}

/// True when the sequence is exactly its own endpoint interpolation from the
/// origin, i.e. straight and uniformly spaced.
pub fn is_endpoint_interpolation(wps: &[Waypoint], tol: f64) -> bool {
    if wps.is_empty() {
        return false;
    }
    let end = *wps.last().unwrap();
    let scale = (end.x.abs() + end.y.abs()).max(1.0);
    let t = wps.len();
    wps.iter().enumerate().all(|(i, w)| {
        let f = (i + 1) as f64 / t as f64;
        (w.x - f * end.x).abs() <= tol * scale && (w.y - f * end.y).abs() <= tol * scale
    })
}

/// Builds supervised sequences against a fixed codebook and soft-label
/// configuration. Soft target distributions are memoized per center cell
/// and shared across sequences.
pub struct SequenceBuilder<'a> {
    cb: &'a Codebook,
    soft: SoftTargetParams,
    cache: RefCell<HashMap<u32, Arc<TargetDistribution>>>,
}

impl<'a> SequenceBuilder<'a> {
    pub fn new(cb: &'a Codebook, soft: SoftTargetParams) -> Self {
        SequenceBuilder { cb, soft, cache: RefCell::new(HashMap::new()) }
    }

    pub fn codebook(&self) -> &Codebook {
        self.cb
    }

    pub fn soft_params(&self) -> SoftTargetParams {
        self.soft
    }

    fn soft_of(&self, a: ActionTokenId) -> Result<Arc<TargetDistribution>> {
        if let Some(d) = self.cache.borrow().get(&a.0) {
            return Ok(d.clone());
        }
        let d = Arc::new(soft_target(a, &self.soft, self.cb.grid())?);
        self.cache.borrow_mut().insert(a.0, d.clone());
        Ok(d)
    }

    fn push_special(&self, seq: &mut TokenSequence, s: Special, tag: SegTag) {
        seq.input_ids.push(self.cb.special(s));
        seq.targets.push(None);
        seq.tags.push(tag);
    }

    fn push_prefix(&self, seq: &mut TokenSequence, v_ids: &[u32], l_ids: &[u32]) {
        self.push_special(seq, Special::Bos, SegTag::Special);
        for &id in v_ids {
            seq.input_ids.push(id);
            seq.targets.push(None);
            seq.tags.push(SegTag::V);
        }
        self.push_special(seq, Special::Sep, SegTag::Special);
        for &id in l_ids {
            seq.input_ids.push(id);
            seq.targets.push(None);
            seq.tags.push(SegTag::L);
        }
        self.push_special(seq, Special::Sep, SegTag::Special);
    }

    /// `[BOS, V, SEP, L, SEP, PATH_GOAL, path.., SPEED_GOAL, speed.., EOS]`
    /// with soft next-token supervision on the 30 action tokens. Endpoint
    /// first reordering is applied per block when `order` is
    /// [`GenOrder::EndpointFirst`].
    pub fn build_generation_sample(
        &self,
        v_ids: &[u32],
        instruction: &str,
        block: &ActionBlock,
        order: GenOrder,
    ) -> Result<TokenSequence> {
        let l_ids = self.cb.encode_text(instruction);
        let mut seq = TokenSequence {
            input_ids: Vec::new(),
            targets: Vec::new(),
            tags: Vec::new(),
        };
        self.push_prefix(&mut seq, v_ids, &l_ids);
        let (path, speed) = match order {
            GenOrder::Natural => (block.path.clone(), block.speed.clone()),
            GenOrder::EndpointFirst => (
                reorder_endpoint_first(&block.path),
                reorder_endpoint_first(&block.speed),
            ),
        };
        self.append_supervised_block(&mut seq, Special::PathGoal, &path)?;
        self.append_supervised_block(&mut seq, Special::SpeedGoal, &speed)?;
        self.push_special(&mut seq, Special::Eos, SegTag::Special);
        Ok(seq)
    }

    /// Goal token, then the block, with next-token soft targets at the goal
    /// and at every block position except the last.
    fn append_supervised_block(
        &self,
        seq: &mut TokenSequence,
        goal: Special,
        tokens: &[ActionTokenId],
    ) -> Result<()> {
        seq.input_ids.push(self.cb.special(goal));
        seq.targets.push(Some(Target::Soft(self.soft_of(tokens[0])?)));
        seq.tags.push(SegTag::Goal);
        for (i, a) in tokens.iter().enumerate() {
            seq.input_ids.push(self.cb.action_to_unified(*a));
            seq.targets.push(if i + 1 < tokens.len() {
                Some(Target::Soft(self.soft_of(tokens[i + 1])?))
            } else {
                None
            });
            seq.tags.push(SegTag::A);
        }
        Ok(())
    }

    /// `[BOS, V, SEP, A(natural), SEP, L, EOS]` with hard next-token targets
    /// on the language tokens only.
    pub fn build_understanding_sample(
        &self,
        v_ids: &[u32],
        instruction: &str,
        block: &ActionBlock,
    ) -> Result<TokenSequence> {
        let l_ids = self.cb.encode_text(instruction);
        let mut seq = TokenSequence {
            input_ids: Vec::new(),
            targets: Vec::new(),
            tags: Vec::new(),
        };
        self.push_special(&mut seq, Special::Bos, SegTag::Special);
        for &id in v_ids {
            seq.input_ids.push(id);
            seq.targets.push(None);
            seq.tags.push(SegTag::V);
        }
        self.push_special(&mut seq, Special::Sep, SegTag::Special);
        for a in block.path.iter().chain(block.speed.iter()) {
            seq.input_ids.push(self.cb.action_to_unified(*a));
            seq.targets.push(None);
            seq.tags.push(SegTag::A);
        }
        self.push_special(&mut seq, Special::Sep, SegTag::Special);
        // The SEP logits predict the first word; each word predicts the next.
        if let Some(&first) = l_ids.first() {
            let sep_pos = seq.len() - 1;
            seq.targets[sep_pos] = Some(Target::Hard(first));
        }
        for (i, &id) in l_ids.iter().enumerate() {
            seq.input_ids.push(id);
            seq.targets.push(l_ids.get(i + 1).map(|&next| Target::Hard(next)));
            seq.tags.push(SegTag::L);
        }
        self.push_special(&mut seq, Special::Eos, SegTag::Special);
        Ok(seq)
    }

    /// `[BOS, V, SEP, L, SEP, PATH_GOAL, SPEED_GOAL]`: the coarse-to-fine
    /// pass-1 layout, supervised with both endpoint tokens. Training on this
    /// arrangement keeps the adjacent-goal probe on distribution.
    pub fn build_endpoint_probe_sample(
        &self,
        v_ids: &[u32],
        instruction: &str,
        block: &ActionBlock,
    ) -> Result<TokenSequence> {
        let l_ids = self.cb.encode_text(instruction);
        let mut seq = TokenSequence {
            input_ids: Vec::new(),
            targets: Vec::new(),
            tags: Vec::new(),
        };
        self.push_prefix(&mut seq, v_ids, &l_ids);
        seq.input_ids.push(self.cb.special(Special::PathGoal));
        seq.targets
            .push(Some(Target::Soft(self.soft_of(*block.path.last().unwrap())?)));
        seq.tags.push(SegTag::Goal);
        seq.input_ids.push(self.cb.special(Special::SpeedGoal));
        seq.targets
            .push(Some(Target::Soft(self.soft_of(*block.speed.last().unwrap())?)));
        seq.tags.push(SegTag::Goal);
        Ok(seq)
    }

    /// Refinement training sample. The layout mirrors the generation layout
    /// but the action slots hold coarse scaffold tokens, interpolated from
    /// the quantized ground-truth endpoints (the same construction inference
    /// uses after pass 1). Supervision:
    ///
    /// - each goal position predicts the fine endpoint token (next token);
    /// - each coarse position predicts its refined token in place.
    ///
    /// For a block that is exactly its own endpoint interpolation the
    /// refinement is the identity, so the targets equal the scaffold tokens;
    /// otherwise the targets are the fine tokens.
    pub fn build_refinement_sample(
        &self,
        v_ids: &[u32],
        instruction: &str,
        path_wps: &[Waypoint],
        speed_wps: &[Waypoint],
    ) -> Result<TokenSequence> {
        if path_wps.len() != PATH_LEN || speed_wps.len() != SPEED_LEN {
            return Err(Error::data(format!(
                "refinement sample needs {PATH_LEN}+{SPEED_LEN} waypoints, got {}+{}",
                path_wps.len(),
                speed_wps.len()
            )));
        }
        let l_ids = self.cb.encode_text(instruction);
        let mut seq = TokenSequence {
            input_ids: Vec::new(),
            targets: Vec::new(),
            tags: Vec::new(),
        };
        self.push_prefix(&mut seq, v_ids, &l_ids);
        self.append_refinement_block(&mut seq, Special::PathGoal, path_wps)?;
        self.append_refinement_block(&mut seq, Special::SpeedGoal, speed_wps)?;
        self.push_special(&mut seq, Special::Eos, SegTag::Special);
        Ok(seq)
    }

    fn append_refinement_block(
        &self,
        seq: &mut TokenSequence,
        goal: Special,
        wps: &[Waypoint],
    ) -> Result<()> {
        let spec = self.cb.grid();
        let fine = tokenize_path(wps, spec);
        let endpoint = *fine.last().unwrap();
        let scaffold_end = detokenize(endpoint, spec)?;
        let coarse = tokenize_path(
            &coarse_from_endpoint(Waypoint::ORIGIN, scaffold_end, wps.len()),
            spec,
        );
        let targets: &[ActionTokenId] = if is_endpoint_interpolation(wps, 1e-9) {
            &coarse
        } else {
            &fine
        };
        seq.input_ids.push(self.cb.special(goal));
        seq.targets.push(Some(Target::Soft(self.soft_of(endpoint)?)));
        seq.tags.push(SegTag::Goal);
        for (c, t) in coarse.iter().zip(targets.iter()) {
            seq.input_ids.push(self.cb.action_to_unified(*c));
            seq.targets.push(Some(Target::Soft(self.soft_of(*t)?)));
            seq.tags.push(SegTag::Coarse);
        }
        Ok(())
    }
}
