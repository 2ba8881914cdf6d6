//! AdamW with decoupled weight decay and a cosine learning-rate schedule.

use super::model::Layout;
use super::scalar::Scalar;
use serde::{Deserialize, Serialize};

#[derive(Copy, Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimSettings {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    /// Final lr as a fraction of the initial lr.
    pub lr_min_frac: f64,
}

impl Default for OptimSettings {
    fn default() -> Self {
        OptimSettings {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
            lr_min_frac: 0.05,
        }
    }
}

impl OptimSettings {
    /// Cosine schedule from `lr` down to `lr * lr_min_frac`.
    pub fn lr_at(&self, step: usize, total_steps: usize) -> f64 {
        if total_steps <= 1 {
            return self.lr;
        }
        let t = step as f64 / (total_steps - 1) as f64;
        let min = self.lr * self.lr_min_frac;
        min + 0.5 * (self.lr - min) * (1.0 + (std::f64::consts::PI * t).cos())
    }
}

pub struct AdamW<T: Scalar> {
    m: Vec<T>,
    v: Vec<T>,
    /// Positions exempt from weight decay (norm gains).
    no_decay: Vec<bool>,
    step: usize,
    settings: OptimSettings,
}

impl<T: Scalar> AdamW<T> {
    pub fn new(layout: &Layout, settings: OptimSettings) -> Self {
        let mut no_decay = vec![false; layout.total];
        for r in layout.norm_ranges() {
            for nd in &mut no_decay[r] {
                *nd = true;
            }
        }
        AdamW {
            m: vec![T::ZERO; layout.total],
            v: vec![T::ZERO; layout.total],
            no_decay,
            step: 0,
            settings,
        }
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    pub fn step(&mut self, params: &mut [T], grad: &[T], lr: f64) {
        self.step += 1;
        let s = &self.settings;
        let b1 = T::from_f64(s.beta1);
        let b2 = T::from_f64(s.beta2);
        let one_m_b1 = T::from_f64(1.0 - s.beta1);
        let one_m_b2 = T::from_f64(1.0 - s.beta2);
        let bc1 = T::from_f64(1.0 / (1.0 - s.beta1.powi(self.step as i32)));
        let bc2 = T::from_f64(1.0 / (1.0 - s.beta2.powi(self.step as i32)));
        let eps = T::from_f64(s.eps);
        let lr_t = T::from_f64(lr);
        let decay = T::from_f64(lr * s.weight_decay);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = b1 * self.m[i] + one_m_b1 * g;
            self.v[i] = b2 * self.v[i] + one_m_b2 * g * g;
            let mh = self.m[i] * bc1;
            let vh = self.v[i] * bc2;
            params[i] -= lr_t * mh / (vh.sqrt() + eps);
            if !self.no_decay[i] {
                params[i] -= decay * params[i];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural_core::model::{Layout, ModelConfig};

    #[test]
    fn cosine_schedule_endpoints() {
        let s = OptimSettings::default();
        let total = 100;
        assert!((s.lr_at(0, total) - s.lr).abs() < 1e-12);
        assert!((s.lr_at(total - 1, total) - s.lr * s.lr_min_frac).abs() < 1e-9);
        // monotone decreasing
        for t in 1..total {
            assert!(s.lr_at(t, total) <= s.lr_at(t - 1, total) + 1e-12);
        }
    }

    #[test]
    fn adam_moves_against_gradient() {
        let cfg = ModelConfig::tiny(20, 1);
        let layout = Layout::new(&cfg);
        let mut opt: AdamW<f64> = AdamW::new(&layout, OptimSettings { weight_decay: 0.0, ..Default::default() });
        let mut params = vec![1.0f64; layout.total];
        let grad = vec![0.5f64; layout.total];
        opt.step(&mut params, &grad, 1e-2);
        assert!(params.iter().all(|&p| p < 1.0));
    }

    #[test]
    fn norm_gains_skip_decay() {
        let cfg = ModelConfig::tiny(20, 1);
        let layout = Layout::new(&cfg);
        let mut opt: AdamW<f64> = AdamW::new(&layout, OptimSettings { weight_decay: 0.5, ..Default::default() });
        let mut params = vec![1.0f64; layout.total];
        let grad = vec![0.0f64; layout.total];
        opt.step(&mut params, &grad, 1e-2);
        let norm_start = layout.layers[0].norm1.start;
        assert_eq!(params[norm_start], 1.0, "norm gain decayed");
        assert!(params[0] < 1.0, "matrix weight should decay");
    }
}
