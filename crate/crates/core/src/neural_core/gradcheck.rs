//! Central finite-difference verification of the analytic gradients.
//! The oracle only evaluates the loss (forward passes); it never touches
//! the backward code it is checking.

use super::loss::loss_total;
use super::model::Model;
use crate::error::Result;
use crate::sequence_builder::TokenSequence;
use crate::util::Rng;

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub n_checked: usize,
    pub max_rel_err: f64,
    /// (flat parameter index, analytic, finite difference) of the worst case.
    pub worst: (usize, f64, f64),
}

/// Compare analytic gradients of the batch loss against central finite
/// differences at `n_samples` parameters drawn across every tensor. Uses
/// dropout-free double-precision evaluation; `eps` is the half-step.
pub fn finite_difference_check(
    model: &Model<f64>,
    batch: &[&TokenSequence],
    lambda: f64,
    n_samples: usize,
    eps: f64,
    seed: u64,
) -> Result<GradCheckReport> {
    let (_, analytic) = loss_total(model, batch, lambda, None)?;

    // Sample across tensors that are guaranteed to be live: layer weights,
    // norms, output head, plus embedding rows of tokens actually present.
    let mut rng = Rng::new(seed ^ 0xfd);
    let d = model.cfg.d_model;
    let mut indices: Vec<usize> = Vec::with_capacity(n_samples);
    let mut used_tokens: Vec<u32> = batch.iter().flat_map(|s| s.input_ids.iter().copied()).collect();
    used_tokens.sort();
    used_tokens.dedup();
    let max_pos = batch.iter().map(|s| s.len()).max().unwrap_or(1);
    while indices.len() < n_samples {
        match indices.len() % 5 {
            0 => {
                let tok = used_tokens[rng.below(used_tokens.len())] as usize;
                indices.push(model.layout.tok_emb.start + tok * d + rng.below(d));
            }
            1 => {
                indices.push(model.layout.pos_emb.start + rng.below(max_pos) * d + rng.below(d));
            }
            2 => {
                let lr = &model.layout.layers[rng.below(model.layout.layers.len())];
                let ranges = [&lr.wq, &lr.wk, &lr.wv, &lr.wo, &lr.w1, &lr.w2];
                let r = ranges[rng.below(ranges.len())];
                indices.push(r.start + rng.below(r.len()));
            }
            3 => {
                let norms = model.layout.norm_ranges();
                let r = &norms[rng.below(norms.len())];
                indices.push(r.start + rng.below(r.len()));
            }
            _ => {
                indices.push(model.layout.w_out.start + rng.below(model.layout.w_out.len()));
            }
        }
    }

    let mut probe = model.clone();
    let mut max_rel = 0.0f64;
    let mut worst = (0usize, 0.0, 0.0);
    for &idx in &indices {
        let orig = probe.params[idx];
        probe.params[idx] = orig + eps;
        let (hi, _) = loss_total(&probe, batch, lambda, None)?;
        probe.params[idx] = orig - eps;
        let (lo, _) = loss_total(&probe, batch, lambda, None)?;
        probe.params[idx] = orig;
        let fd = (hi.total(lambda) - lo.total(lambda)) / (2.0 * eps);
        let ga = analytic[idx];
        let rel = (ga - fd).abs() / ga.abs().max(fd.abs()).max(1e-4);
        if rel > max_rel {
            max_rel = rel;
            worst = (idx, ga, fd);
        }
    }
    Ok(GradCheckReport { n_checked: indices.len(), max_rel_err: max_rel, worst })
}
