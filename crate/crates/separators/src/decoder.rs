//! Autoregressive decoder-only transformer over windows of I/Q samples, with
//! a sliding key/value cache for streaming.
//!
//! Token `t` is the flattened mixture window `t` concatenated with the SOI
//! window `t − 1` (zeros for the first token). Training feeds the true SOI
//! (teacher forcing); streaming feeds back the model's own previous output.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rfsep_autograd::{attention_mask, Graph, Init, ParamId, ParamStore, Tensor, Var};
use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::layout::{lit, Element};

const LN_EPS: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecoderConfig {
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub num_heads: usize,
    /// Samples per token `W`.
    pub window_samples: usize,
    /// Tokens visible to each query `K`, the query included.
    pub context_windows: usize,
    /// MLP width as a multiple of `hidden_dim`.
    pub mlp_ratio: usize,
    /// Add the mixture window to the head output.
    pub residual_output: bool,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl DecoderConfig {
    pub fn desk() -> Self {
        Self {
            num_layers: 4,
            hidden_dim: 96,
            num_heads: 4,
            window_samples: 64,
            context_windows: 32,
            mlp_ratio: 4,
            residual_output: true,
        }
    }

    /// 14 layers, width 480, 12 heads, 80-sample windows, 20-token context.
    pub fn full_scale() -> Self {
        Self {
            num_layers: 14,
            hidden_dim: 480,
            num_heads: 12,
            window_samples: 80,
            context_windows: 20,
            mlp_ratio: 4,
            residual_output: false,
        }
    }

    /// Same as [`DecoderConfig::full_scale`] with window and context swapped.
    pub fn full_scale_swapped() -> Self {
        Self { window_samples: 20, context_windows: 80, ..Self::full_scale() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_layers == 0 || self.hidden_dim == 0 || self.num_heads == 0 || self.mlp_ratio == 0 {
            return Err(config!("num_layers, hidden_dim, num_heads and mlp_ratio must be positive"));
        }
        if self.hidden_dim % self.num_heads != 0 {
            return Err(config!(
                "hidden_dim ({}) must be divisible by num_heads ({})",
                self.hidden_dim,
                self.num_heads
            ));
        }
        if self.head_dim() % 2 != 0 {
            return Err(config!("head dimension {} must be even for rotary encoding", self.head_dim()));
        }
        if self.window_samples == 0 || self.context_windows == 0 {
            return Err(config!("window_samples and context_windows must be positive"));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.hidden_dim / self.num_heads
    }

    pub fn check_length(&self, len: usize) -> Result<usize> {
        if len == 0 || len % self.window_samples != 0 {
            return Err(Error::Input(format!(
                "signal length {len} is not a positive multiple of the window size {}",
                self.window_samples
            )));
        }
        Ok(len / self.window_samples)
    }

    /// Closed-form parameter count, equal to what [`Decoder::new`] allocates.
    pub fn num_params(&self) -> usize {
        let (h, w, m) = (self.hidden_dim, self.window_samples, self.mlp_ratio * self.hidden_dim);
        let layer = 2 * h + (h * 3 * h + 3 * h) + (h * h + h) + 2 * h + (h * m + m) + (m * h + h);
        (4 * w * h + h) + self.num_layers * layer + 2 * h + (h * 2 * w + 2 * w)
    }
}

#[derive(Clone, Debug)]
struct Layer {
    ln1_g: ParamId,
    ln1_b: ParamId,
    qkv_w: ParamId,
    qkv_b: ParamId,
    proj_w: ParamId,
    proj_b: ParamId,
    ln2_g: ParamId,
    ln2_b: ParamId,
    fc1_w: ParamId,
    fc1_b: ParamId,
    fc2_w: ParamId,
    fc2_b: ParamId,
}

/// Rotated keys and values of the most recent tokens of one layer, each `[B, heads, 1, head_dim]`.
type LayerCache<T> = VecDeque<(Tensor<T>, Tensor<T>)>;

/// Incremental decoding state for a batch of independent streams.
#[derive(Clone, Debug)]
pub struct StreamState<T: Element> {
    batch: usize,
    caches: Vec<LayerCache<T>>,
    prev: Tensor<T>,
    position: usize,
}

impl<T: Element> StreamState<T> {
    /// Tokens processed since the last reset.
    pub fn position(&self) -> usize {
        self.position
    }

    pub fn batch_size(&self) -> usize {
        self.batch
    }

    /// Cached tokens per layer.
    pub fn cache_lens(&self) -> Vec<usize> {
        self.caches.iter().map(|c| c.len()).collect()
    }

    /// Last emitted SOI window, `[B, 2, W]`.
    pub fn last_output(&self) -> &Tensor<T> {
        &self.prev
    }

    /// Empties the caches and rewinds to position 0.
    pub fn reset(&mut self) {
        self.caches.iter_mut().for_each(|c| c.clear());
        self.prev = Tensor::zeros(self.prev.shape());
        self.position = 0;
    }
}

/// Where attention keys come from.
enum Keys<'a, T: Element> {
    /// Whole sequence at once under a sliding causal mask.
    Masked(&'a [bool]),
    /// One new token against the cache.
    Cached(&'a mut LayerCache<T>),
}

#[derive(Clone, Debug)]
pub struct Decoder<T: Element> {
    cfg: DecoderConfig,
    params: ParamStore<T>,
    in_w: ParamId,
    in_b: ParamId,
    layers: Vec<Layer>,
    lnf_g: ParamId,
    lnf_b: ParamId,
    head_w: ParamId,
    head_b: ParamId,
}

fn linear_init(fan_in: usize, gain: f64) -> Init {
    Init::Normal { std: gain / (fan_in as f64).sqrt() }
}

impl<T: Element> Decoder<T> {
    /// Random initialization; the output head starts at zero.
    pub fn new(cfg: DecoderConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ParamStore::new();
        let (h, w, m) = (cfg.hidden_dim, cfg.window_samples, cfg.mlp_ratio * cfg.hidden_dim);
        let depth_gain = 1.0 / (2.0 * cfg.num_layers as f64).sqrt();
        let in_w = p.add_init("embed.w", &[4 * w, h], linear_init(4 * w, 1.0), &mut rng)?;
        let in_b = p.add_init("embed.b", &[h], Init::Zeros, &mut rng)?;
        let mut layers = Vec::with_capacity(cfg.num_layers);
        for i in 0..cfg.num_layers {
            let mut add = |name: &str, shape: &[usize], init: Init| p.add_init(&format!("layer{i}.{name}"), shape, init, &mut rng);
            layers.push(Layer {
                ln1_g: add("ln1.g", &[h], Init::Ones)?,
                ln1_b: add("ln1.b", &[h], Init::Zeros)?,
                qkv_w: add("attn.qkv.w", &[h, 3 * h], linear_init(h, 1.0))?,
                qkv_b: add("attn.qkv.b", &[3 * h], Init::Zeros)?,
                proj_w: add("attn.proj.w", &[h, h], linear_init(h, depth_gain))?,
                proj_b: add("attn.proj.b", &[h], Init::Zeros)?,
                ln2_g: add("ln2.g", &[h], Init::Ones)?,
                ln2_b: add("ln2.b", &[h], Init::Zeros)?,
                fc1_w: add("mlp.fc1.w", &[h, m], linear_init(h, 1.0))?,
                fc1_b: add("mlp.fc1.b", &[m], Init::Zeros)?,
                fc2_w: add("mlp.fc2.w", &[m, h], linear_init(m, depth_gain))?,
                fc2_b: add("mlp.fc2.b", &[h], Init::Zeros)?,
            });
        }
        let lnf_g = p.add_init("final_ln.g", &[h], Init::Ones, &mut rng)?;
        let lnf_b = p.add_init("final_ln.b", &[h], Init::Zeros, &mut rng)?;
        let head_w = p.add_init("head.w", &[h, 2 * w], Init::Zeros, &mut rng)?;
        let head_b = p.add_init("head.b", &[2 * w], Init::Zeros, &mut rng)?;
        Ok(Self { cfg, params: p, in_w, in_b, layers, lnf_g, lnf_b, head_w, head_b })
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ParamStore<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.params
    }

    /// `[B, 2, T·W]` to `[B, T, 2W]`: I samples of a window, then its Q samples.
    fn tokens(&self, g: &mut Graph<T>, x: Var) -> Result<Var> {
        let s = g.shape(x).to_vec();
        if s.len() != 3 || s[1] != 2 {
            return Err(Error::Input(format!("decoder expects [B, 2, L], got {s:?}")));
        }
        let w = self.cfg.window_samples;
        let t = self.cfg.check_length(s[2])?;
        let y = g.reshape(x, &[s[0], 2, t, w])?;
        let y = g.permute(y, &[0, 2, 1, 3])?;
        Ok(g.reshape(y, &[s[0], t, 2 * w])?)
    }

    fn untokens(&self, g: &mut Graph<T>, y: Var) -> Result<Var> {
        let s = g.shape(y).to_vec();
        let w = self.cfg.window_samples;
        let y = g.reshape(y, &[s[0], s[1], 2, w])?;
        let y = g.permute(y, &[0, 2, 1, 3])?;
        Ok(g.reshape(y, &[s[0], 2, s[1] * w])?)
    }

    fn block(&self, g: &mut Graph<T>, layer: &Layer, x: Var, offset: usize, keys: Keys<'_, T>) -> Result<Var> {
        let p = &self.params;
        let s = g.shape(x).to_vec();
        let (b, t, h) = (s[0], s[1], s[2]);
        let (nh, dh) = (self.cfg.num_heads, self.cfg.head_dim());
        let (lg, lb) = (g.param(p, layer.ln1_g), g.param(p, layer.ln1_b));
        let a = g.layer_norm(x, lg, lb, LN_EPS)?;
        let (w, bias) = (g.param(p, layer.qkv_w), g.param(p, layer.qkv_b));
        let qkv = g.linear(a, w, Some(bias))?;
        let qkv = g.reshape(qkv, &[b, t, 3, nh, dh])?;
        let qkv = g.permute(qkv, &[2, 0, 3, 1, 4])?;
        let split = |i: usize, g: &mut Graph<T>| -> Result<Var> {
            let v = g.slice(qkv, 0, i, 1)?;
            Ok(g.reshape(v, &[b, nh, t, dh])?)
        };
        let q = split(0, g)?;
        let k = split(1, g)?;
        let v = split(2, g)?;
        let q = g.rotary(q, offset)?;
        let k = g.rotary(k, offset)?;
        let scale = lit::<T>(1.0 / (dh as f64).sqrt());
        let ctx = match keys {
            Keys::Masked(mask) => {
                let scores = g.matmul_t(q, k)?;
                let scores = g.scale(scores, scale)?;
                let att = g.masked_softmax(scores, mask)?;
                g.matmul(att, v)?
            }
            Keys::Cached(cache) => {
                cache.push_back((g.value(k).clone(), g.value(v).clone()));
                while cache.len() > self.cfg.context_windows {
                    cache.pop_front();
                }
                let n = cache.len();
                let ks: Vec<Var> = cache.iter().map(|(kt, _)| g.input(kt.clone())).collect();
                let vs: Vec<Var> = cache.iter().map(|(_, vt)| g.input(vt.clone())).collect();
                let ks = if n == 1 { ks[0] } else { g.concat(&ks, 2)? };
                let vs = if n == 1 { vs[0] } else { g.concat(&vs, 2)? };
                let scores = g.matmul_t(q, ks)?;
                let scores = g.scale(scores, scale)?;
                let att = g.softmax(scores, 3)?;
                g.matmul(att, vs)?
            }
        };
        let ctx = g.permute(ctx, &[0, 2, 1, 3])?;
        let ctx = g.reshape(ctx, &[b, t, h])?;
        let (w, bias) = (g.param(p, layer.proj_w), g.param(p, layer.proj_b));
        let attn = g.linear(ctx, w, Some(bias))?;
        let x = g.add(x, attn)?;
        let (lg, lb) = (g.param(p, layer.ln2_g), g.param(p, layer.ln2_b));
        let m = g.layer_norm(x, lg, lb, LN_EPS)?;
        let (w, bias) = (g.param(p, layer.fc1_w), g.param(p, layer.fc1_b));
        let m = g.linear(m, w, Some(bias))?;
        let m = g.gelu(m)?;
        let (w, bias) = (g.param(p, layer.fc2_w), g.param(p, layer.fc2_b));
        let m = g.linear(m, w, Some(bias))?;
        Ok(g.add(x, m)?)
    }

    /// Embedding, layers and head for tokens `[B, T, 2W]` plus previous-SOI tokens.
    fn run(&self, g: &mut Graph<T>, mix_tokens: Var, prev_tokens: Var, offset: usize, mut caches: Option<&mut [LayerCache<T>]>) -> Result<Var> {
        let p = &self.params;
        let inp = g.concat(&[mix_tokens, prev_tokens], 2)?;
        let (w, b) = (g.param(p, self.in_w), g.param(p, self.in_b));
        let mut x = g.linear(inp, w, Some(b))?;
        let t = g.shape(x)[1];
        let mask = attention_mask(t, self.cfg.context_windows);
        for (i, layer) in self.layers.iter().enumerate() {
            let keys = match caches.as_deref_mut() {
                Some(c) => Keys::Cached(&mut c[i]),
                None => Keys::Masked(&mask),
            };
            x = self.block(g, layer, x, offset, keys)?;
        }
        let (lg, lb) = (g.param(p, self.lnf_g), g.param(p, self.lnf_b));
        let x = g.layer_norm(x, lg, lb, LN_EPS)?;
        let (w, b) = (g.param(p, self.head_w), g.param(p, self.head_b));
        let y = g.linear(x, w, Some(b))?;
        if self.cfg.residual_output {
            Ok(g.add(y, mix_tokens)?)
        } else {
            Ok(y)
        }
    }

    /// Teacher-forced batch path: `mixture` and `feedback` are `[B, 2, L]`;
    /// token `t` sees feedback window `t − 1`.
    pub fn forward(&self, g: &mut Graph<T>, mixture: Var, feedback: Var) -> Result<Var> {
        if g.shape(mixture) != g.shape(feedback) {
            return Err(Error::Input(format!(
                "mixture {:?} and feedback {:?} differ in shape",
                g.shape(mixture),
                g.shape(feedback)
            )));
        }
        let mix = self.tokens(g, mixture)?;
        let fb = self.tokens(g, feedback)?;
        let s = g.shape(fb).to_vec();
        let zeros = g.input(Tensor::zeros(&[s[0], 1, s[2]]));
        let prev = if s[1] == 1 {
            zeros
        } else {
            let head = g.slice(fb, 1, 0, s[1] - 1)?;
            g.concat(&[zeros, head], 1)?
        };
        let y = self.run(g, mix, prev, 0, None)?;
        self.untokens(g, y)
    }

    /// Teacher-forced forward outside of training.
    pub fn infer_teacher_forced(&self, mixture: &Tensor<T>, feedback: &Tensor<T>) -> Result<Tensor<T>> {
        let mut g = Graph::new();
        g.set_check_finite(false);
        let m = g.input(mixture.clone());
        let f = g.input(feedback.clone());
        let y = self.forward(&mut g, m, f)?;
        Ok(g.value(y).clone())
    }

    pub fn stream_reset(&self, batch_size: usize) -> StreamState<T> {
        StreamState {
            batch: batch_size,
            caches: vec![VecDeque::new(); self.cfg.num_layers],
            prev: Tensor::zeros(&[batch_size, 2, self.cfg.window_samples]),
            position: 0,
        }
    }

    /// Advances one token. `window` is the mixture `[B, 2, W]`; the previous
    /// SOI window is the state's last output unless `feedback` overrides it.
    pub fn stream_step(&self, state: &mut StreamState<T>, window: &Tensor<T>, feedback: Option<&Tensor<T>>) -> Result<Tensor<T>> {
        let want = [state.batch, 2, self.cfg.window_samples];
        if window.shape() != want {
            return Err(Error::Input(format!("stream window has shape {:?}, expected {want:?}", window.shape())));
        }
        if let Some(f) = feedback {
            if f.shape() != want {
                return Err(Error::Input(format!("feedback window has shape {:?}, expected {want:?}", f.shape())));
            }
        }
        let mut g = Graph::new();
        g.set_check_finite(false);
        let m = g.input(window.clone());
        let f = g.input(feedback.unwrap_or(&state.prev).clone());
        let mt = self.tokens(&mut g, m)?;
        let ft = self.tokens(&mut g, f)?;
        let y = self.run(&mut g, mt, ft, state.position, Some(&mut state.caches))?;
        let y = self.untokens(&mut g, y)?;
        let out = g.value(y).clone();
        state.prev = out.clone();
        state.position += 1;
        Ok(out)
    }

    /// Autoregressive inference over whole sequences `[B, 2, L]`, feeding back
    /// the model's own estimates.
    pub fn infer(&self, mixture: &Tensor<T>) -> Result<Tensor<T>> {
        let s = mixture.shape().to_vec();
        if s.len() != 3 || s[1] != 2 {
            return Err(Error::Input(format!("decoder expects [B, 2, L], got {s:?}")));
        }
        let w = self.cfg.window_samples;
        let t = self.cfg.check_length(s[2])?;
        let mut state = self.stream_reset(s[0]);
        let mut out = vec![lit::<T>(0.0); mixture.numel()];
        for step in 0..t {
            let win = window_of(mixture, step, w);
            let y = self.stream_step(&mut state, &win, None)?;
            put_window(&mut out, &s, step, w, y.data());
        }
        Ok(Tensor::new(&s, out)?)
    }
}

/// Window `step` of `[B, 2, L]` as `[B, 2, W]`.
pub fn window_of<T: Element>(x: &Tensor<T>, step: usize, w: usize) -> Tensor<T> {
    let s = x.shape();
    let l = s[2];
    let mut data = Vec::with_capacity(s[0] * 2 * w);
    for row in x.data().chunks(l) {
        data.extend_from_slice(&row[step * w..(step + 1) * w]);
    }
    Tensor::new(&[s[0], 2, w], data).expect("window shape is consistent")
}

fn put_window<T: Element>(dst: &mut [T], shape: &[usize], step: usize, w: usize, src: &[T]) {
    let l = shape[2];
    for (row, chunk) in dst.chunks_mut(l).zip(src.chunks(w)) {
        row[step * w..(step + 1) * w].copy_from_slice(chunk);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_counts_match_allocation() {
        let cfg = DecoderConfig { num_layers: 2, hidden_dim: 24, num_heads: 3, window_samples: 8, context_windows: 4, ..DecoderConfig::desk() };
        let d = Decoder::<f32>::new(cfg.clone(), 0).unwrap();
        assert_eq!(d.params().num_params(), cfg.num_params());
        assert_eq!(DecoderConfig::full_scale().num_params(), 39_026_560);
        assert_eq!(DecoderConfig::full_scale_swapped().num_params(), 38_853_640);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(DecoderConfig { hidden_dim: 10, num_heads: 3, ..DecoderConfig::desk() }.validate().is_err());
        assert!(DecoderConfig { hidden_dim: 12, num_heads: 4, ..DecoderConfig::desk() }.validate().is_err());
        let d = Decoder::<f32>::new(DecoderConfig { num_layers: 1, hidden_dim: 8, num_heads: 2, window_samples: 4, context_windows: 2, ..DecoderConfig::desk() }, 0).unwrap();
        assert!(d.infer(&Tensor::zeros(&[1, 2, 10])).is_err());
        let mut st = d.stream_reset(1);
        assert!(d.stream_step(&mut st, &Tensor::zeros(&[1, 2, 5]), None).is_err());
    }
}
