use std::path::Path;

use num_complex::Complex;
use rfsep_autograd::{load_checkpoint, save_checkpoint, Graph, ParamStore, Tensor, Var};
use rfsep_core::signal::IqSignal;
use rfsep_core::streaming::BatchProcessor;
use serde::{Deserialize, Serialize};

use crate::decoder::{Decoder, DecoderConfig};
use crate::error::{Error, Result};
use crate::layout::{flat_to_tensor, from_tensor, tensor_to_flat, to_tensor, Element};
use crate::wavenet::{WaveNet, WaveNetConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    Wavenet(WaveNetConfig),
    Decoder(DecoderConfig),
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::Decoder(DecoderConfig::desk())
    }
}

impl ModelConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ModelConfig::Wavenet(_) => "wavenet",
            ModelConfig::Decoder(_) => "decoder",
        }
    }

    pub fn num_params(&self) -> usize {
        match self {
            ModelConfig::Wavenet(c) => c.num_params(),
            ModelConfig::Decoder(c) => c.num_params(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelConfig::Wavenet(c) => c.validate(),
            ModelConfig::Decoder(c) => c.validate(),
        }
    }

    /// Lengths the model accepts must be multiples of this.
    pub fn length_quantum(&self) -> usize {
        match self {
            ModelConfig::Wavenet(_) => 1,
            ModelConfig::Decoder(c) => c.window_samples,
        }
    }
}

/// A trainable separator.
#[derive(Clone, Debug)]
pub enum Model<T: Element> {
    WaveNet(WaveNet<T>),
    Decoder(Decoder<T>),
}

impl<T: Element> Model<T> {
    pub fn new(cfg: &ModelConfig, seed: u64) -> Result<Self> {
        Ok(match cfg {
            ModelConfig::Wavenet(c) => Model::WaveNet(WaveNet::new(c.clone(), seed)?),
            ModelConfig::Decoder(c) => Model::Decoder(Decoder::new(c.clone(), seed)?),
        })
    }

    pub fn config(&self) -> ModelConfig {
        match self {
            Model::WaveNet(m) => ModelConfig::Wavenet(m.config().clone()),
            Model::Decoder(m) => ModelConfig::Decoder(m.config().clone()),
        }
    }

    pub fn name(&self) -> &'static str {
        self.config().name()
    }

    pub fn params(&self) -> &ParamStore<T> {
        match self {
            Model::WaveNet(m) => m.params(),
            Model::Decoder(m) => m.params(),
        }
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<T> {
        match self {
            Model::WaveNet(m) => m.params_mut(),
            Model::Decoder(m) => m.params_mut(),
        }
    }

    pub fn check_length(&self, len: usize) -> Result<()> {
        match self {
            Model::WaveNet(_) if len > 0 => Ok(()),
            Model::WaveNet(_) => Err(Error::Input("empty input".into())),
            Model::Decoder(m) => m.config().check_length(len).map(|_| ()),
        }
    }

    /// Training path; the decoder is conditioned on `feedback`, WaveNet ignores it.
    pub fn forward(&self, g: &mut Graph<T>, mixture: Var, feedback: Var) -> Result<Var> {
        match self {
            Model::WaveNet(m) => m.forward(g, mixture),
            Model::Decoder(m) => m.forward(g, mixture, feedback),
        }
    }

    /// Inference on `[B, 2, L]`; the decoder feeds back its own estimates.
    pub fn infer(&self, mixture: &Tensor<T>) -> Result<Tensor<T>> {
        match self {
            Model::WaveNet(m) => m.infer(mixture),
            Model::Decoder(m) => m.infer(mixture),
        }
    }

    /// Splits `x` into independent chunks of `chunk` samples (the last one
    /// zero padded), runs them `batch` at a time and stitches the result.
    pub fn separate(&self, x: &IqSignal<T>, chunk: usize, batch: usize) -> Result<IqSignal<T>> {
        self.check_length(chunk)?;
        if batch == 0 || x.is_empty() {
            return Err(Error::Input("separate needs a nonempty signal and a positive batch".into()));
        }
        let zero = Complex::new(T::zero(), T::zero());
        let mut chunks: Vec<Vec<Complex<T>>> = x.samples().chunks(chunk).map(|c| c.to_vec()).collect();
        if let Some(last) = chunks.last_mut() {
            last.resize(chunk, zero);
        }
        let mut out = Vec::with_capacity(chunks.len() * chunk);
        for group in chunks.chunks(batch) {
            let refs: Vec<&[Complex<T>]> = group.iter().map(|c| c.as_slice()).collect();
            let y = self.infer(&to_tensor(&refs)?)?;
            out.extend(from_tensor(&y)?.into_iter().flatten());
        }
        out.truncate(x.len());
        Ok(IqSignal::new(out, x.sample_rate_hz())?)
    }

    /// Writes `<path>` and its JSON index; the config travels in the metadata.
    pub fn save(&self, path: &Path, mut metadata: serde_json::Value) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        if !metadata.is_object() {
            metadata = serde_json::json!({});
        }
        metadata["model"] = serde_json::to_value(self.config())?;
        save_checkpoint(self.params(), path, metadata)?;
        Ok(())
    }

    /// Rebuilds the model from a checkpoint written by [`Model::save`].
    pub fn load(path: &Path) -> Result<(Self, serde_json::Value)> {
        let (_, metadata) = load_checkpoint(path)?;
        let cfg: ModelConfig = serde_json::from_value(metadata["model"].clone())
            .map_err(|e| Error::Input(format!("checkpoint {} has no usable model config: {e}", path.display())))?;
        let mut model = Self::new(&cfg, 0)?;
        model.load_params(path)?;
        Ok((model, metadata))
    }

    /// Loads parameters into this model, listing every name or shape difference on mismatch.
    pub fn load_params(&mut self, path: &Path) -> Result<serde_json::Value> {
        let (entries, metadata) = load_checkpoint(path)?;
        let store = self.params();
        let mut diffs = Vec::new();
        for e in &entries {
            match store.id(&e.name) {
                None => diffs.push(format!("unexpected tensor {} {:?}", e.name, e.shape)),
                Some(id) if store.get(id).shape() != e.shape.as_slice() => {
                    diffs.push(format!("{}: checkpoint {:?}, model {:?}", e.name, e.shape, store.get(id).shape()))
                }
                Some(_) => {}
            }
        }
        for (name, t) in store.iter() {
            if !entries.iter().any(|e| e.name == name) {
                diffs.push(format!("missing tensor {name} {:?}", t.shape()));
            }
        }
        if !diffs.is_empty() {
            return Err(Error::CheckpointMismatch { diffs });
        }
        self.params_mut()
            .assign(entries.iter().map(|e| (e.name.as_str(), e.shape.as_slice(), e.data.as_slice())))?;
        Ok(metadata)
    }
}

/// Adapter for the streaming runtime: each window of a batch goes through
/// [`Model::infer`].
pub struct ModelProcessor<T: Element> {
    model: Model<T>,
    name: String,
}

impl<T: Element> ModelProcessor<T> {
    pub fn new(model: Model<T>) -> Self {
        let name = model.name().to_string();
        Self { model, name }
    }
}

impl<T: Element> BatchProcessor<T> for ModelProcessor<T> {
    fn name(&self) -> &str {
        &self.name
    }

    fn check_length(&self, signal_length: usize) -> rfsep_core::Result<()> {
        self.model.check_length(signal_length).map_err(|e| rfsep_core::Error::Invalid(e.to_string()))
    }

    fn process(&mut self, input: &[Complex<T>], batch_size: usize) -> rfsep_core::Result<Vec<Complex<T>>> {
        let run = || -> Result<Vec<Complex<T>>> {
            let x = flat_to_tensor(input, batch_size)?;
            tensor_to_flat(&self.model.infer(&x)?)
        };
        run().map_err(|e| rfsep_core::Error::Numerical(e.to_string()))
    }
}
