//! Dilated-convolution separator operating directly on I/Q samples.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rfsep_autograd::{Graph, Init, Padding, ParamId, ParamStore, Tensor, Var};
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::layout::Element;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WaveNetConfig {
    pub residual_channels: usize,
    pub num_blocks: usize,
    pub kernel_size: usize,
    /// Dilation of block `i` is `dilation_cycle[i % len]`.
    pub dilation_cycle: Vec<usize>,
    /// Causal padding; `false` centres every kernel instead.
    pub causal: bool,
    /// Add the mixture to the head output, so the network predicts a correction.
    pub residual_output: bool,
}

impl Default for WaveNetConfig {
    fn default() -> Self {
        Self::desk()
    }
}

impl WaveNetConfig {
    /// Small enough to train on one CPU core in minutes.
    pub fn desk() -> Self {
        Self {
            residual_channels: 32,
            num_blocks: 10,
            kernel_size: 3,
            dilation_cycle: vec![1, 2, 4, 8, 16],
            causal: true,
            residual_output: true,
        }
    }

    /// 128 channels, 30 blocks, dilations 1..512 repeated three times.
    pub fn full_scale() -> Self {
        Self {
            residual_channels: 128,
            num_blocks: 30,
            kernel_size: 3,
            dilation_cycle: (0..10).map(|i| 1 << i).collect(),
            causal: true,
            residual_output: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.residual_channels == 0 || self.num_blocks == 0 {
            return Err(config!("residual_channels and num_blocks must be positive"));
        }
        if self.kernel_size == 0 {
            return Err(config!("kernel_size must be positive"));
        }
        if self.dilation_cycle.is_empty() || self.dilation_cycle.contains(&0) {
            return Err(config!("dilation_cycle must be nonempty with positive entries, got {:?}", self.dilation_cycle));
        }
        Ok(())
    }

    pub fn dilations(&self) -> Vec<usize> {
        (0..self.num_blocks).map(|i| self.dilation_cycle[i % self.dilation_cycle.len()]).collect()
    }

    /// `1 + (K − 1)·Σ d` samples.
    pub fn receptive_field(&self) -> usize {
        1 + (self.kernel_size - 1) * self.dilations().iter().sum::<usize>()
    }

    /// Closed-form parameter count, equal to what [`WaveNet::new`] allocates.
    pub fn num_params(&self) -> usize {
        let c = self.residual_channels;
        let input = 2 * c + c;
        let block = (c * 2 * c * self.kernel_size + 2 * c) + 2 * (c * c + c);
        let head = (c * c + c) + (2 * c + 2);
        input + self.num_blocks * block + head
    }
}

#[derive(Clone, Debug)]
struct Block {
    dilation: usize,
    conv_w: ParamId,
    conv_b: ParamId,
    res_w: ParamId,
    res_b: ParamId,
    skip_w: ParamId,
    skip_b: ParamId,
}

/// Input 1×1 projection, gated dilated residual blocks feeding summed skip
/// connections, then ReLU → 1×1 → ReLU → 1×1 back to two channels.
#[derive(Clone, Debug)]
pub struct WaveNet<T: Element> {
    cfg: WaveNetConfig,
    params: ParamStore<T>,
    in_w: ParamId,
    in_b: ParamId,
    blocks: Vec<Block>,
    head_w: ParamId,
    head_b: ParamId,
    out_w: ParamId,
    out_b: ParamId,
}

fn conv_init(fan_in: usize) -> Init {
    Init::Normal { std: (1.0 / fan_in as f64).sqrt() }
}

impl<T: Element> WaveNet<T> {
    /// Random initialization; the output projection starts at zero.
    pub fn new(cfg: WaveNetConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ParamStore::new();
        let c = cfg.residual_channels;
        let k = cfg.kernel_size;
        let in_w = p.add_init("input.w", &[c, 2, 1], conv_init(2), &mut rng)?;
        let in_b = p.add_init("input.b", &[c], Init::Zeros, &mut rng)?;
        let mut blocks = Vec::with_capacity(cfg.num_blocks);
        for (i, dilation) in cfg.dilations().into_iter().enumerate() {
            blocks.push(Block {
                dilation,
                conv_w: p.add_init(&format!("block{i}.conv.w"), &[2 * c, c, k], conv_init(c * k), &mut rng)?,
                conv_b: p.add_init(&format!("block{i}.conv.b"), &[2 * c], Init::Zeros, &mut rng)?,
                res_w: p.add_init(&format!("block{i}.res.w"), &[c, c, 1], conv_init(c), &mut rng)?,
                res_b: p.add_init(&format!("block{i}.res.b"), &[c], Init::Zeros, &mut rng)?,
                skip_w: p.add_init(&format!("block{i}.skip.w"), &[c, c, 1], conv_init(c), &mut rng)?,
                skip_b: p.add_init(&format!("block{i}.skip.b"), &[c], Init::Zeros, &mut rng)?,
            });
        }
        let head_w = p.add_init("head.w", &[c, c, 1], conv_init(c), &mut rng)?;
        let head_b = p.add_init("head.b", &[c], Init::Zeros, &mut rng)?;
        let out_w = p.add_init("out.w", &[2, c, 1], Init::Zeros, &mut rng)?;
        let out_b = p.add_init("out.b", &[2], Init::Zeros, &mut rng)?;
        Ok(Self { cfg, params: p, in_w, in_b, blocks, head_w, head_b, out_w, out_b })
    }

    pub fn config(&self) -> &WaveNetConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ParamStore<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.params
    }

    fn padding(&self) -> Padding {
        if self.cfg.causal {
            Padding::Causal
        } else {
            Padding::Same
        }
    }

    /// `[B, 2, L]` mixture to `[B, 2, L]` estimate.
    pub fn forward(&self, g: &mut Graph<T>, x: Var) -> Result<Var> {
        let shape = g.shape(x).to_vec();
        if shape.len() != 3 || shape[1] != 2 {
            return Err(crate::Error::Input(format!("WaveNet expects [B, 2, L], got {shape:?}")));
        }
        if shape[2] < self.cfg.receptive_field() {
            log::warn!(
                "input length {} is shorter than the receptive field {}; edges see zero padding",
                shape[2],
                self.cfg.receptive_field()
            );
        }
        let pad = self.padding();
        let c = self.cfg.residual_channels;
        let p = &self.params;
        let (w, b) = (g.param(p, self.in_w), g.param(p, self.in_b));
        let mut h = g.conv1d(x, w, Some(b), 1, pad)?;
        let mut skip: Option<Var> = None;
        for blk in &self.blocks {
            let (w, b) = (g.param(p, blk.conv_w), g.param(p, blk.conv_b));
            let z = g.conv1d(h, w, Some(b), blk.dilation, pad)?;
            let filt = g.slice(z, 1, 0, c)?;
            let gate = g.slice(z, 1, c, c)?;
            let filt = g.tanh(filt)?;
            let gate = g.sigmoid(gate)?;
            let act = g.mul(filt, gate)?;
            let (w, b) = (g.param(p, blk.res_w), g.param(p, blk.res_b));
            let res = g.conv1d(act, w, Some(b), 1, pad)?;
            h = g.add(h, res)?;
            let (w, b) = (g.param(p, blk.skip_w), g.param(p, blk.skip_b));
            let s = g.conv1d(act, w, Some(b), 1, pad)?;
            skip = Some(match skip {
                Some(acc) => g.add(acc, s)?,
                None => s,
            });
        }
        let s = g.relu(skip.expect("at least one block"))?;
        let (w, b) = (g.param(p, self.head_w), g.param(p, self.head_b));
        let s = g.conv1d(s, w, Some(b), 1, pad)?;
        let s = g.relu(s)?;
        let (w, b) = (g.param(p, self.out_w), g.param(p, self.out_b));
        let y = g.conv1d(s, w, Some(b), 1, pad)?;
        if self.cfg.residual_output {
            Ok(g.add(y, x)?)
        } else {
            Ok(y)
        }
    }

    /// Forward pass outside of training.
    pub fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let mut g = Graph::new();
        g.set_check_finite(false);
        let xv = g.input(x.clone());
        let y = self.forward(&mut g, xv)?;
        Ok(g.value(y).clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn receptive_fields_and_counts() {
        let one_cycle = WaveNetConfig {
            kernel_size: 2,
            num_blocks: 10,
            dilation_cycle: (0..10).map(|i| 1 << i).collect(),
            ..WaveNetConfig::desk()
        };
        assert_eq!(one_cycle.receptive_field(), 1024);
        assert_eq!(WaveNetConfig::full_scale().receptive_field(), 6139);
        assert_eq!(WaveNetConfig::desk().receptive_field(), 125);
        let net = WaveNet::<f32>::new(WaveNetConfig::desk(), 0).unwrap();
        assert_eq!(net.params().num_params(), WaveNetConfig::desk().num_params());
    }

    #[test]
    fn zero_head_gives_zero_output() {
        let cfg = WaveNetConfig { residual_output: false, num_blocks: 3, ..WaveNetConfig::desk() };
        let net = WaveNet::<f64>::new(cfg, 1).unwrap();
        let y = net.infer(&Tensor::zeros(&[2, 2, 40])).unwrap();
        assert_eq!(y.shape(), &[2, 2, 40]);
        assert!(y.data().iter().all(|&v| v == 0.0));
    }
}
