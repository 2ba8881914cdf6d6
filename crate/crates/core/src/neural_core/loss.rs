//! Batch loss: soft-label cross entropy at generation/refinement positions,
//! next-token cross entropy at understanding positions, combined as
//! `mean(gen) + lambda * mean(und)`. Gradients are exact.

use super::model::Model;
use super::scalar::Scalar;
use crate::error::{Error, Result};
use crate::sequence_builder::{Target, TokenSequence};
use crate::util::Rng;
use rayon::prelude::*;

/// Sequences per work unit; fixed so the reduction order (and therefore
/// every float) is independent of thread count.
const CHUNK: usize = 4;

#[derive(Copy, Clone, Debug, Default)]
pub struct BatchLoss {
    pub gen_sum: f64,
    pub gen_count: usize,
    pub und_sum: f64,
    pub und_count: usize,
}

impl BatchLoss {
    pub fn gen_mean(&self) -> f64 {
        if self.gen_count == 0 {
            0.0
        } else {
            self.gen_sum / self.gen_count as f64
        }
    }
    pub fn und_mean(&self) -> f64 {
        if self.und_count == 0 {
            0.0
        } else {
            self.und_sum / self.und_count as f64
        }
    }
    pub fn total(&self, lambda: f64) -> f64 {
        self.gen_mean() + lambda * self.und_mean()
    }
}

fn count_targets(batch: &[&TokenSequence]) -> (usize, usize) {
    let mut gen = 0;
    let mut und = 0;
    for seq in batch {
        for t in seq.targets.iter().flatten() {
            match t {
                Target::Soft(_) => gen += 1,
                Target::Hard(_) => und += 1,
            }
        }
    }
    (gen, und)
}

/// Loss and parameter gradients for a batch.
///
/// Soft target distributions live in grid-id space; the model config's
/// `action_offset` lifts them into the unified vocabulary.
/// `dropout_seed` enables dropout with a per-sequence derived stream;
/// `None` runs deterministically without dropout (the gradient-check path).
pub fn loss_total<T: Scalar>(
    model: &Model<T>,
    batch: &[&TokenSequence],
    lambda: f64,
    dropout_seed: Option<u64>,
) -> Result<(BatchLoss, Vec<T>)> {
    if batch.is_empty() {
        return Err(Error::data("loss_total: empty batch"));
    }
    let (n_gen, n_und) = count_targets(batch);
    let w_gen = if n_gen > 0 { 1.0 / n_gen as f64 } else { 0.0 };
    let w_und = if n_und > 0 { lambda / n_und as f64 } else { 0.0 };
    let action_offset = model.cfg.action_offset as u32;

    let partials: Vec<Result<(BatchLoss, Vec<T>)>> = batch
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(chunk_idx, chunk)| {
            let mut grad = vec![T::ZERO; model.layout.total];
            let mut loss = BatchLoss::default();
            for (i, seq) in chunk.iter().enumerate() {
                let seq_index = chunk_idx * CHUNK + i;
                let mut rng = dropout_seed.map(|s| Rng::new(s).fork(seq_index as u64));
                seq_loss_grad(model, seq, w_gen, w_und, action_offset, rng.as_mut(), &mut grad, &mut loss)?;
            }
            Ok((loss, grad))
        })
        .collect();

    let mut grad = vec![T::ZERO; model.layout.total];
    let mut loss = BatchLoss::default();
    for part in partials {
        let (pl, pg) = part?;
        loss.gen_sum += pl.gen_sum;
        loss.gen_count += pl.gen_count;
        loss.und_sum += pl.und_sum;
        loss.und_count += pl.und_count;
        for (g, p) in grad.iter_mut().zip(&pg) {
            *g += *p;
        }
    }
    if !loss.total(lambda).is_finite() {
        return Err(Error::numeric(format!(
            "non-finite loss: gen {} und {}",
            loss.gen_mean(),
            loss.und_mean()
        )));
    }
    Ok((loss, grad))
}

#[allow(clippy::too_many_arguments)]
fn seq_loss_grad<T: Scalar>(
    model: &Model<T>,
    seq: &TokenSequence,
    w_gen: f64,
    w_und: f64,
    action_offset: u32,
    dropout_rng: Option<&mut Rng>,
    grad: &mut [T],
    loss: &mut BatchLoss,
) -> Result<()> {
    let want = seq.supervised_positions();
    if want.is_empty() {
        return Ok(());
    }
    let (logits, cache) = model.forward_cached(&seq.input_ids, &want, dropout_rng)?;
    let k = model.cfg.vocab_size;
    let mut dlogits = vec![T::ZERO; want.len() * k];
    for (row, &pos) in want.iter().enumerate() {
        let lrow = &logits[row * k..(row + 1) * k];
        // softmax over the full unified vocabulary
        let mut maxv = T::from_f64(f64::NEG_INFINITY);
        for &v in lrow {
            maxv = maxv.maximum(v);
        }
        let mut z = T::ZERO;
        let drow = &mut dlogits[row * k..(row + 1) * k];
        for (i, &v) in lrow.iter().enumerate() {
            let e = (v - maxv).exp();
            drow[i] = e;
            z += e;
        }
        let log_z = z.ln().to_f64() + maxv.to_f64();
        let inv_z = T::ONE / z;
        for v in drow.iter_mut() {
            *v *= inv_z; // now softmax probabilities
        }
        match seq.targets[pos].as_ref().unwrap() {
            Target::Hard(id) => {
                if *id as usize >= k {
                    return Err(Error::data(format!("hard target {id} >= vocab {k}")));
                }
                let lp = lrow[*id as usize].to_f64() - log_z;
                loss.und_sum += -lp;
                loss.und_count += 1;
                let w = T::from_f64(w_und);
                for v in drow.iter_mut() {
                    *v *= w;
                }
                drow[*id as usize] -= w;
            }
            Target::Soft(dist) => {
                let mut l = 0.0;
                for &(gid, q) in dist.entries() {
                    let uid = (action_offset + gid) as usize;
                    if uid >= k {
                        return Err(Error::data(format!("soft target id {uid} >= vocab {k}")));
                    }
                    l -= q * (lrow[uid].to_f64() - log_z);
                }
                loss.gen_sum += l;
                loss.gen_count += 1;
                let w = T::from_f64(w_gen);
                for v in drow.iter_mut() {
                    *v *= w;
                }
                for &(gid, q) in dist.entries() {
                    let uid = (action_offset + gid) as usize;
                    drow[uid] -= T::from_f64(q) * w;
                }
            }
        }
    }
    model.backward(&cache, &dlogits, grad);
    Ok(())
}
