//! Decoder-only transformer: embeddings, pre-RMSNorm causal self-attention,
//! SiLU feed-forward blocks, and a full-vocabulary output head. Forward
//! caches every intermediate needed for an exact manual backward pass.

use super::scalar::{axpy, dot, gemm_nt, grad_input, grad_weight, Scalar};
use crate::error::{Error, Result};
use crate::util::Rng;
use serde::{Deserialize, Serialize};
use std::ops::Range;

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub max_seq_len: usize,
    /// Unified vocabulary size K.
    pub vocab_size: usize,
    /// First action id in the unified vocabulary; the action segment runs
    /// from here up to the special tokens. Needed for loss targets and for
    /// masking logits to the action segment while decoding.
    pub action_offset: usize,
    pub dropout: f64,
    /// Understanding-loss weight.
    pub lambda: f64,
    /// Whether action blocks are trained endpoint-first for two-pass decoding.
    pub c2f: bool,
}

impl ModelConfig {
    /// Default toy configuration: trains in minutes on a CPU.
    pub fn toy(vocab_size: usize, action_offset: usize) -> Self {
        ModelConfig {
            d_model: 128,
            n_layers: 4,
            n_heads: 4,
            d_ff: 256,
            max_seq_len: 160,
            vocab_size,
            action_offset,
            dropout: 0.1,
            lambda: 1.0,
            c2f: true,
        }
    }

    /// Sized for a codebook.
    pub fn toy_for(cb: &crate::codebook::Codebook) -> Self {
        Self::toy(cb.k_total() as usize, cb.action_offset() as usize)
    }

    /// Tiny configuration for gradient checks and fast tests.
    pub fn tiny(vocab_size: usize, action_offset: usize) -> Self {
        ModelConfig {
            d_model: 16,
            n_layers: 2,
            n_heads: 2,
            d_ff: 32,
            max_seq_len: 160,
            vocab_size,
            action_offset,
            dropout: 0.0,
            lambda: 1.0,
            c2f: true,
        }
    }

    pub fn tiny_for(cb: &crate::codebook::Codebook) -> Self {
        Self::tiny(cb.k_total() as usize, cb.action_offset() as usize)
    }

    /// Size of the action segment (everything between text and specials).
    pub fn k_action(&self) -> usize {
        self.vocab_size - self.action_offset - crate::codebook::SPECIALS.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_model == 0
            || self.n_heads == 0
            || self.d_model % self.n_heads != 0
            || self.n_layers == 0
            || self.d_ff == 0
            || self.max_seq_len == 0
            || self.vocab_size == 0
            || self.action_offset + crate::codebook::SPECIALS.len() >= self.vocab_size
            || !(0.0..1.0).contains(&self.dropout)
            || self.lambda < 0.0
        {
            return Err(Error::usage(format!("invalid model config: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct LayerRanges {
    pub norm1: Range<usize>,
    pub wq: Range<usize>,
    pub wk: Range<usize>,
    pub wv: Range<usize>,
    pub wo: Range<usize>,
    pub norm2: Range<usize>,
    pub w1: Range<usize>,
    pub w2: Range<usize>,
}

/// Offsets of every tensor inside the flat parameter vector. The order is
/// the checkpoint order: embeddings, positions, layers, final norm, head.
#[derive(Clone, Debug)]
pub struct Layout {
    pub tok_emb: Range<usize>,
    pub pos_emb: Range<usize>,
    pub layers: Vec<LayerRanges>,
    pub final_norm: Range<usize>,
    pub w_out: Range<usize>,
    pub total: usize,
}

impl Layout {
    pub fn new(cfg: &ModelConfig) -> Layout {
        let d = cfg.d_model;
        let mut at = 0usize;
        let mut take = |len: usize| {
            let r = at..at + len;
            at += len;
            r
        };
        let tok_emb = take(cfg.vocab_size * d);
        let pos_emb = take(cfg.max_seq_len * d);
        let layers = (0..cfg.n_layers)
            .map(|_| LayerRanges {
                norm1: take(d),
                wq: take(d * d),
                wk: take(d * d),
                wv: take(d * d),
                wo: take(d * d),
                norm2: take(d),
                w1: take(cfg.d_ff * d),
                w2: take(d * cfg.d_ff),
            })
            .collect();
        let final_norm = take(d);
        let w_out = take(cfg.vocab_size * d);
        Layout { tok_emb, pos_emb, layers, final_norm, w_out, total: at }
    }

    /// Ranges that hold RMSNorm gains; excluded from weight decay.
    pub fn norm_ranges(&self) -> Vec<Range<usize>> {
        let mut out = vec![self.final_norm.clone()];
        for l in &self.layers {
            out.push(l.norm1.clone());
            out.push(l.norm2.clone());
        }
        out
    }
}

#[derive(Clone)]
pub struct Model<T: Scalar> {
    pub cfg: ModelConfig,
    pub layout: Layout,
    pub params: Vec<T>,
}

const RMS_EPS: f64 = 1e-5;

impl<T: Scalar> Model<T> {
    /// Gaussian init (std 0.02) for matrices and embeddings, unit norms.
    pub fn init(cfg: ModelConfig, seed: u64) -> Result<Model<T>> {
        cfg.validate()?;
        let layout = Layout::new(&cfg);
        let mut rng = Rng::new(seed ^ 0x6d6f64656c);
        let mut params = vec![T::ZERO; layout.total];
        for p in params.iter_mut() {
            *p = T::from_f64(0.02 * rng.gauss());
        }
        for r in layout.norm_ranges() {
            for p in &mut params[r] {
                *p = T::ONE;
            }
        }
        Ok(Model { cfg, layout, params })
    }

    pub fn n_params(&self) -> usize {
        self.layout.total
    }

    /// Convert parameter precision (used by checkpoint loading).
    pub fn map_params<U: Scalar>(&self) -> Model<U> {
        Model {
            cfg: self.cfg,
            layout: self.layout.clone(),
            params: self.params.iter().map(|p| U::from_f64(p.to_f64())).collect(),
        }
    }

    /// Eval-mode forward: logits at the requested positions, row-major
    /// `want.len() x vocab_size`.
    pub fn forward(&self, ids: &[u32], want: &[usize]) -> Result<Vec<T>> {
        let (logits, _) = self.forward_cached(ids, want, None)?;
        Ok(logits)
    }

    /// Forward keeping the activation cache. `dropout_rng` enables dropout.
    pub fn forward_cached(
        &self,
        ids: &[u32],
        want: &[usize],
        dropout_rng: Option<&mut Rng>,
    ) -> Result<(Vec<T>, Cache<T>)> {
        let n = ids.len();
        let cfg = &self.cfg;
        if n == 0 {
            return Err(Error::data("forward: empty sequence"));
        }
        if n > cfg.max_seq_len {
            return Err(Error::data(format!(
                "sequence length {n} exceeds max_seq_len {}",
                cfg.max_seq_len
            )));
        }
        if let Some(&bad) = ids.iter().find(|&&id| id as usize >= cfg.vocab_size) {
            return Err(Error::data(format!("token id {bad} >= vocab {}", cfg.vocab_size)));
        }
        if want.iter().any(|&w| w >= n) {
            return Err(Error::data("requested logit position beyond sequence end"));
        }
        let d = cfg.d_model;
        let p = &self.params;

        let mut drop = DropoutSource::new(dropout_rng, cfg.dropout);

        // embeddings
        let mut x = vec![T::ZERO; n * d];
        for (pos, &id) in ids.iter().enumerate() {
            let tok = &p[self.layout.tok_emb.clone()][id as usize * d..(id as usize + 1) * d];
            let pe = &p[self.layout.pos_emb.clone()][pos * d..(pos + 1) * d];
            for i in 0..d {
                x[pos * d + i] = tok[i] + pe[i];
            }
        }
        let emb_mask = drop.apply(&mut x);

        let mut cache = Cache {
            n,
            ids: ids.to_vec(),
            want: want.to_vec(),
            emb_mask,
            layers: Vec::with_capacity(cfg.n_layers),
            x_last: Vec::new(),
            rmsf_inv: Vec::new(),
            xf: Vec::new(),
        };

        for lr in &self.layout.layers {
            let x_in = x.clone();
            // attention sublayer
            let (xn1, rms1_inv) = rmsnorm_fwd(&x_in, &p[lr.norm1.clone()], n, d);
            let mut q = vec![T::ZERO; n * d];
            let mut k = vec![T::ZERO; n * d];
            let mut v = vec![T::ZERO; n * d];
            gemm_nt(&xn1, &p[lr.wq.clone()], &mut q, n, d, d);
            gemm_nt(&xn1, &p[lr.wk.clone()], &mut k, n, d, d);
            gemm_nt(&xn1, &p[lr.wv.clone()], &mut v, n, d, d);
            let (ctx, probs) = attention_fwd(&q, &k, &v, n, d, cfg.n_heads);
            let mut attn_out = vec![T::ZERO; n * d];
            gemm_nt(&ctx, &p[lr.wo.clone()], &mut attn_out, n, d, d);
            let attn_mask = drop.apply(&mut attn_out);
            for i in 0..n * d {
                x[i] = x_in[i] + attn_out[i];
            }
            let x_mid = x.clone();

            // feed-forward sublayer
            let (xn2, rms2_inv) = rmsnorm_fwd(&x_mid, &p[lr.norm2.clone()], n, d);
            let mut a1 = vec![T::ZERO; n * cfg.d_ff];
            gemm_nt(&xn2, &p[lr.w1.clone()], &mut a1, n, d, cfg.d_ff);
            let mut act = vec![T::ZERO; n * cfg.d_ff];
            for i in 0..n * cfg.d_ff {
                act[i] = silu(a1[i]);
            }
            let mut ff_out = vec![T::ZERO; n * d];
            gemm_nt(&act, &p[lr.w2.clone()], &mut ff_out, n, cfg.d_ff, d);
            let ff_mask = drop.apply(&mut ff_out);
            for i in 0..n * d {
                x[i] = x_mid[i] + ff_out[i];
            }

            cache.layers.push(LayerCache {
                x_in,
                rms1_inv,
                q,
                k,
                v,
                probs,
                ctx,
                attn_mask,
                x_mid,
                rms2_inv,
                a1,
                ff_mask,
            });
        }

        let (xf, rmsf_inv) = rmsnorm_fwd(&x, &p[self.layout.final_norm.clone()], n, d);
        let kv = cfg.vocab_size;
        let mut logits = vec![T::ZERO; want.len() * kv];
        let xw: Vec<T> = want
            .iter()
            .flat_map(|&w| xf[w * d..(w + 1) * d].iter().copied())
            .collect();
        gemm_nt(&xw, &p[self.layout.w_out.clone()], &mut logits, want.len(), d, kv);

        cache.x_last = x;
        cache.rmsf_inv = rmsf_inv;
        cache.xf = xf;
        Ok((logits, cache))
    }

    /// Exact backward from per-position logit gradients; accumulates into
    /// `grad` (same layout as `params`).
    pub fn backward(&self, cache: &Cache<T>, dlogits: &[T], grad: &mut [T]) {
        let cfg = &self.cfg;
        let (n, d, kv) = (cache.n, cfg.d_model, cfg.vocab_size);
        debug_assert_eq!(dlogits.len(), cache.want.len() * kv);
        debug_assert_eq!(grad.len(), self.layout.total);
        let p = &self.params;

        // output head
        let mut dxf = vec![T::ZERO; n * d];
        {
            let w_out = &p[self.layout.w_out.clone()];
            let dw_out = &mut grad[self.layout.w_out.clone()];
            let nw = cache.want.len();
            let xw: Vec<T> = cache
                .want
                .iter()
                .flat_map(|&w| cache.xf[w * d..(w + 1) * d].iter().copied())
                .collect();
            let mut dxw = vec![T::ZERO; nw * d];
            grad_weight(dlogits, &xw, dw_out, nw, d, kv);
            grad_input(dlogits, w_out, &mut dxw, nw, d, kv);
            for (i, &w) in cache.want.iter().enumerate() {
                axpy(&mut dxf[w * d..(w + 1) * d], T::ONE, &dxw[i * d..(i + 1) * d]);
            }
        }

        // final norm
        let mut dx = vec![T::ZERO; n * d];
        rmsnorm_bwd(
            &dxf,
            &cache.x_last,
            &cache.rmsf_inv,
            &p[self.layout.final_norm.clone()],
            &mut dx,
            grad,
            self.layout.final_norm.clone(),
            n,
            d,
        );

        for (li, lr) in self.layout.layers.iter().enumerate().rev() {
            let lc = &cache.layers[li];
            let d_ff = cfg.d_ff;

            // feed-forward sublayer: x = x_mid + drop(ff_out)
            let mut dff_out = dx.clone();
            if let Some(mask) = &lc.ff_mask {
                for i in 0..n * d {
                    dff_out[i] *= mask[i];
                }
            }
            // recompute act from a1
            let mut act = vec![T::ZERO; n * d_ff];
            for i in 0..n * d_ff {
                act[i] = silu(lc.a1[i]);
            }
            let mut dact = vec![T::ZERO; n * d_ff];
            grad_weight(&dff_out, &act, &mut grad[lr.w2.clone()], n, d_ff, d);
            grad_input(&dff_out, &p[lr.w2.clone()], &mut dact, n, d_ff, d);
            let mut da1 = vec![T::ZERO; n * d_ff];
            for i in 0..n * d_ff {
                da1[i] = dact[i] * silu_grad(lc.a1[i]);
            }
            let (xn2, _) = rmsnorm_fwd(&lc.x_mid, &p[lr.norm2.clone()], n, d);
            let mut dxn2 = vec![T::ZERO; n * d];
            grad_weight(&da1, &xn2, &mut grad[lr.w1.clone()], n, d, d_ff);
            grad_input(&da1, &p[lr.w1.clone()], &mut dxn2, n, d, d_ff);
            // dx flows through the residual identity plus the norm path
            rmsnorm_bwd(
                &dxn2,
                &lc.x_mid,
                &lc.rms2_inv,
                &p[lr.norm2.clone()],
                &mut dx,
                grad,
                lr.norm2.clone(),
                n,
                d,
            );

            // attention sublayer: x_mid = x_in + drop(attn_out)
            let mut dattn_out = dx.clone();
            if let Some(mask) = &lc.attn_mask {
                for i in 0..n * d {
                    dattn_out[i] *= mask[i];
                }
            }
            let mut dctx = vec![T::ZERO; n * d];
            grad_weight(&dattn_out, &lc.ctx, &mut grad[lr.wo.clone()], n, d, d);
            grad_input(&dattn_out, &p[lr.wo.clone()], &mut dctx, n, d, d);
            let (dq, dk, dv) = attention_bwd(&dctx, lc, n, d, cfg.n_heads);
            let (xn1, _) = rmsnorm_fwd(&lc.x_in, &p[lr.norm1.clone()], n, d);
            let mut dxn1 = vec![T::ZERO; n * d];
            grad_weight(&dq, &xn1, &mut grad[lr.wq.clone()], n, d, d);
            grad_input(&dq, &p[lr.wq.clone()], &mut dxn1, n, d, d);
            grad_weight(&dk, &xn1, &mut grad[lr.wk.clone()], n, d, d);
            grad_input(&dk, &p[lr.wk.clone()], &mut dxn1, n, d, d);
            grad_weight(&dv, &xn1, &mut grad[lr.wv.clone()], n, d, d);
            grad_input(&dv, &p[lr.wv.clone()], &mut dxn1, n, d, d);
            rmsnorm_bwd(
                &dxn1,
                &lc.x_in,
                &lc.rms1_inv,
                &p[lr.norm1.clone()],
                &mut dx,
                grad,
                lr.norm1.clone(),
                n,
                d,
            );
        }

        // embeddings
        if let Some(mask) = &cache.emb_mask {
            for i in 0..n * d {
                dx[i] *= mask[i];
            }
        }
        let dtok = &mut grad[self.layout.tok_emb.clone()];
        for (pos, &id) in cache.ids.iter().enumerate() {
            axpy(
                &mut dtok[id as usize * d..(id as usize + 1) * d],
                T::ONE,
                &dx[pos * d..(pos + 1) * d],
            );
        }
        let dpos = &mut grad[self.layout.pos_emb.clone()];
        for pos in 0..n {
            axpy(&mut dpos[pos * d..(pos + 1) * d], T::ONE, &dx[pos * d..(pos + 1) * d]);
        }
    }
}

/// Activation cache for one sequence.
pub struct Cache<T: Scalar> {
    n: usize,
    ids: Vec<u32>,
    pub want: Vec<usize>,
    emb_mask: Option<Vec<T>>,
    layers: Vec<LayerCache<T>>,
    x_last: Vec<T>,
    rmsf_inv: Vec<T>,
    xf: Vec<T>,
}

struct LayerCache<T: Scalar> {
    x_in: Vec<T>,
    rms1_inv: Vec<T>,
    q: Vec<T>,
    k: Vec<T>,
    v: Vec<T>,
    probs: Vec<T>,
    ctx: Vec<T>,
    attn_mask: Option<Vec<T>>,
    x_mid: Vec<T>,
    rms2_inv: Vec<T>,
    a1: Vec<T>,
    ff_mask: Option<Vec<T>>,
}

struct DropoutSource<'a> {
    rng: Option<&'a mut Rng>,
    rate: f64,
}

impl<'a> DropoutSource<'a> {
    fn new(rng: Option<&'a mut Rng>, rate: f64) -> Self {
        DropoutSource { rng: if rate > 0.0 { rng } else { None }, rate }
    }

    /// Inverted dropout in place; returns the multiplier mask when active.
    fn apply<T: Scalar>(&mut self, x: &mut [T]) -> Option<Vec<T>> {
        let rng = self.rng.as_deref_mut()?;
        let keep = T::from_f64(1.0 / (1.0 - self.rate));
        let mut mask = vec![T::ZERO; x.len()];
        for i in 0..x.len() {
            if rng.uniform() >= self.rate {
                mask[i] = keep;
            }
            x[i] *= mask[i];
        }
        Some(mask)
    }
}

#[inline]
fn silu<T: Scalar>(x: T) -> T {
    x * sigmoid(x)
}

#[inline]
fn sigmoid<T: Scalar>(x: T) -> T {
    T::ONE / (T::ONE + (-x).exp())
}

#[inline]
fn silu_grad<T: Scalar>(x: T) -> T {
    let s = sigmoid(x);
    s * (T::ONE + x * (T::ONE - s))
}

/// Per-position RMS normalization with gain: y = g * x / rms(x).
fn rmsnorm_fwd<T: Scalar>(x: &[T], gain: &[T], n: usize, d: usize) -> (Vec<T>, Vec<T>) {
    let mut y = vec![T::ZERO; n * d];
    let mut inv = vec![T::ZERO; n];
    let dd = T::from_f64(d as f64);
    let eps = T::from_f64(RMS_EPS);
    for p in 0..n {
        let row = &x[p * d..(p + 1) * d];
        let ms = dot(row, row) / dd;
        let r = T::ONE / (ms + eps).sqrt();
        inv[p] = r;
        for i in 0..d {
            y[p * d + i] = gain[i] * row[i] * r;
        }
    }
    (y, inv)
}

/// Backward of [`rmsnorm_fwd`]: accumulates dx into `dx_acc` and the gain
/// gradient into `grad[gain_range]`.
#[allow(clippy::too_many_arguments)]
fn rmsnorm_bwd<T: Scalar>(
    dy: &[T],
    x: &[T],
    inv: &[T],
    gain: &[T],
    dx_acc: &mut [T],
    grad: &mut [T],
    gain_range: Range<usize>,
    n: usize,
    d: usize,
) {
    let dgain = &mut grad[gain_range];
    let dd = T::from_f64(d as f64);
    for p in 0..n {
        let row = &x[p * d..(p + 1) * d];
        let dyr = &dy[p * d..(p + 1) * d];
        let r = inv[p];
        // dgain_i += dy_i * x_i * r
        for i in 0..d {
            dgain[i] += dyr[i] * row[i] * r;
        }
        // u = dy * gain;  dx = r*u - x * (r^3/d) * dot(u, x)
        let mut u_dot_x = T::ZERO;
        for i in 0..d {
            u_dot_x += dyr[i] * gain[i] * row[i];
        }
        let coef = r * r * r / dd * u_dot_x;
        let dxr = &mut dx_acc[p * d..(p + 1) * d];
        for i in 0..d {
            dxr[i] += r * dyr[i] * gain[i] - coef * row[i];
        }
    }
}

/// Multi-head causal attention. Returns (ctx, probs); probs is
/// `heads * n * n`, rows are softmaxed prefixes.
fn attention_fwd<T: Scalar>(
    q: &[T],
    k: &[T],
    v: &[T],
    n: usize,
    d: usize,
    heads: usize,
) -> (Vec<T>, Vec<T>) {
    let dh = d / heads;
    let scale = T::from_f64(1.0 / (dh as f64).sqrt());
    let mut ctx = vec![T::ZERO; n * d];
    let mut probs = vec![T::ZERO; heads * n * n];
    let mut scores = vec![T::ZERO; n];
    for h in 0..heads {
        let off = h * dh;
        for p in 0..n {
            let qrow = &q[p * d + off..p * d + off + dh];
            let mut maxv = T::from_f64(f64::NEG_INFINITY);
            for j in 0..=p {
                let s = dot(qrow, &k[j * d + off..j * d + off + dh]) * scale;
                scores[j] = s;
                maxv = maxv.maximum(s);
            }
            let mut z = T::ZERO;
            for j in 0..=p {
                scores[j] = (scores[j] - maxv).exp();
                z += scores[j];
            }
            let prow = &mut probs[h * n * n + p * n..h * n * n + p * n + n];
            let crow = &mut ctx[p * d + off..p * d + off + dh];
            for j in 0..=p {
                let pr = scores[j] / z;
                prow[j] = pr;
                axpy(crow, pr, &v[j * d + off..j * d + off + dh]);
            }
        }
    }
    (ctx, probs)
}

fn attention_bwd<T: Scalar>(
    dctx: &[T],
    lc: &LayerCache<T>,
    n: usize,
    d: usize,
    heads: usize,
) -> (Vec<T>, Vec<T>, Vec<T>) {
    let dh = d / heads;
    let scale = T::from_f64(1.0 / (dh as f64).sqrt());
    let mut dq = vec![T::ZERO; n * d];
    let mut dk = vec![T::ZERO; n * d];
    let mut dv = vec![T::ZERO; n * d];
    let mut dpr = vec![T::ZERO; n];
    for h in 0..heads {
        let off = h * dh;
        for p in 0..n {
            let dcrow = &dctx[p * d + off..p * d + off + dh];
            let prow = &lc.probs[h * n * n + p * n..h * n * n + p * n + n];
            // dprobs and softmax backward
            let mut inner = T::ZERO;
            for j in 0..=p {
                dpr[j] = dot(dcrow, &lc.v[j * d + off..j * d + off + dh]);
                inner += prow[j] * dpr[j];
            }
            let qrow = &lc.q[p * d + off..p * d + off + dh];
            let dqrow_start = p * d + off;
            for j in 0..=p {
                let ds = prow[j] * (dpr[j] - inner) * scale;
                if ds != T::ZERO {
                    axpy(
                        &mut dq[dqrow_start..dqrow_start + dh],
                        ds,
                        &lc.k[j * d + off..j * d + off + dh],
                    );
                    axpy(&mut dk[j * d + off..j * d + off + dh], ds, qrow);
                }
                if prow[j] != T::ZERO {
                    axpy(&mut dv[j * d + off..j * d + off + dh], prow[j], dcrow);
                }
            }
        }
    }
    (dq, dk, dv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Model<f64> {
        Model::init(ModelConfig::tiny(40, 1), 7).unwrap()
    }

    #[test]
    fn logits_shape_single_token() {
        let m = tiny();
        let logits = m.forward(&[3], &[0]).unwrap();
        assert_eq!(logits.len(), 40);
    }

    #[test]
    fn forward_is_deterministic_without_dropout() {
        let m = tiny();
        let ids = [1u32, 5, 9, 2];
        let a = m.forward(&ids, &[0, 1, 2, 3]).unwrap();
        let b = m.forward(&ids, &[0, 1, 2, 3]).unwrap();
        assert_eq!(a, b, "eval forward must be bitwise deterministic");
    }

    #[test]
    fn causality_later_tokens_do_not_leak() {
        let m = tiny();
        let base = [1u32, 5, 9, 2, 11, 4];
        let want: Vec<usize> = (0..base.len()).collect();
        let l0 = m.forward(&base, &want).unwrap();
        // perturb position 3: logits at 0..3 must be identical
        let mut mutated = base;
        mutated[3] = 17;
        let l1 = m.forward(&mutated, &want).unwrap();
        let k = m.cfg.vocab_size;
        for p in 0..3 {
            assert_eq!(l0[p * k..(p + 1) * k], l1[p * k..(p + 1) * k], "leak at {p}");
        }
        assert_ne!(l0[3 * k..4 * k], l1[3 * k..4 * k]);
    }

    #[test]
    fn rejects_overlong_and_bad_ids() {
        let m = tiny();
        let too_long = vec![0u32; m.cfg.max_seq_len + 1];
        assert!(m.forward(&too_long, &[0]).is_err());
        assert!(m.forward(&[1000], &[0]).is_err());
        assert!(m.forward(&[1], &[5]).is_err());
    }

    #[test]
    fn softmax_rows_form_simplex() {
        let m = tiny();
        let ids = [1u32, 2, 3, 4, 5];
        let logits = m.forward(&ids, &[4]).unwrap();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = logits.iter().map(|v| (v - max).exp()).sum();
        let total: f64 = logits.iter().map(|v| (v - max).exp() / z).sum();
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn dropout_scales_and_masks() {
        let mut cfg = ModelConfig::tiny(40, 1);
        cfg.dropout = 0.5;
        let m: Model<f64> = Model::init(cfg, 3).unwrap();
        let mut rng = Rng::new(11);
        let (a, _) = m.forward_cached(&[1, 2, 3], &[2], Some(&mut rng)).unwrap();
        let b = m.forward(&[1, 2, 3], &[2]).unwrap();
        assert_ne!(a, b, "dropout should perturb the activations");
    }
}

