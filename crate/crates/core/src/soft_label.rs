//! Spatial soft targets and the soft-label cross-entropy generation loss.
//!
//! The target for a ground-truth cell is a 2D Gaussian over grid cells,
//! truncated to Euclidean grid distance <= `radius` and renormalized so the
//! retained mass sums to one. Distances are measured in integer cell units,
//! not meters: on the non-uniform grid both the radius and sigma are
//! cell-space quantities.

use crate::error::{Error, Result};
use crate::grid_codec::{ActionTokenId, GridSpec};
use serde::{Deserialize, Serialize};

#[derive(Copy, Clone, Debug, Serialize, Deserialize)]
pub struct SoftTargetParams {
    /// Gaussian spread in cells.
    pub sigma: f64,
    /// Truncation radius in cells.
    pub radius: u32,
}

impl Default for SoftTargetParams {
    fn default() -> Self {
        SoftTargetParams { sigma: 1.2, radius: 10 }
    }
}

impl SoftTargetParams {
    pub fn validate(&self) -> Result<()> {
        if self.sigma > 0.0 && self.sigma.is_finite() {
            Ok(())
        } else {
            Err(Error::usage(format!("sigma must be positive, got {}", self.sigma)))
        }
    }

    /// One-hot targets: the sigma -> 0 limit used by the soft-label ablation.
    pub fn hard() -> Self {
        SoftTargetParams { sigma: 1e-6, radius: 0 }
    }
}

/// Sparse probability distribution over action tokens, sorted by id.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetDistribution {
    pub center: ActionTokenId,
    entries: Vec<(u32, f64)>,
}

impl TargetDistribution {
    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn prob_of(&self, id: u32) -> f64 {
        self.entries
            .binary_search_by_key(&id, |e| e.0)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn entropy(&self) -> f64 {
        -self
            .entries
            .iter()
            .filter(|e| e.1 > 0.0)
            .map(|e| e.1 * e.1.ln())
            .sum::<f64>()
    }
}

/// Build the truncated, renormalized Gaussian target centered on `a_gt`.
/// Out-of-grid neighbors are simply absent before normalization; the
/// normalizer absorbs the deficit, so the result always sums to one.
pub fn soft_target(
    a_gt: ActionTokenId,
    params: &SoftTargetParams,
    spec: &GridSpec,
) -> Result<TargetDistribution> {
    params.validate()?;
    let (cx, cy) = spec.cell_of(a_gt)?;
    let (n_x, n_y) = (spec.n_x() as i64, spec.n_y() as i64);
    let (cx, cy) = (cx as i64, cy as i64);
    let r = params.radius as i64;
    let r2 = r * r;
    let inv_two_sigma2 = 1.0 / (2.0 * params.sigma * params.sigma);

    let mut entries = Vec::new();
    let mut mass = 0.0;
    for dx in -r..=r {
        let ix = cx + dx;
        if ix < 0 || ix >= n_x {
            continue;
        }
        for dy in -r..=r {
            let iy = cy + dy;
            if iy < 0 || iy >= n_y {
                continue;
            }
            let d2 = dx * dx + dy * dy;
            if d2 > r2 {
                continue;
            }
            let w = (-(d2 as f64) * inv_two_sigma2).exp();
            entries.push(((ix * n_y + iy) as u32, w));
            mass += w;
        }
    }
    for e in &mut entries {
        e.1 /= mass;
    }
    // Ascending ids by construction: ix outer, iy inner.
    debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
    Ok(TargetDistribution { center: a_gt, entries })
}

/// Soft-label cross entropy: `-sum_a q(a) * log softmax(logits)[a]`, with
/// logits indexed over the action vocabulary.
pub fn generation_loss(pred_logits: &[f64], q: &TargetDistribution) -> Result<f64> {
    if pred_logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("generation_loss: non-finite logit"));
    }
    let max = pred_logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_z = pred_logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
    let mut loss = 0.0;
    for &(id, p) in q.entries() {
        let lp = pred_logits[id as usize] - log_z;
        loss -= p * lp;
    }
    Ok(loss)
}

/// Analytic gradient of [`generation_loss`] w.r.t. the logits:
/// `softmax(logits) - q`.
pub fn generation_loss_grad(pred_logits: &[f64], q: &TargetDistribution) -> Result<Vec<f64>> {
    if pred_logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("generation_loss_grad: non-finite logit"));
    }
    let max = pred_logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = pred_logits.iter().map(|v| (v - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    let mut grad: Vec<f64> = exps.iter().map(|e| e / z).collect();
    for &(id, p) in q.entries() {
        grad[id as usize] -= p;
    }
    Ok(grad)
}
