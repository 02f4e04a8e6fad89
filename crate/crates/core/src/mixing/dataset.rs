use std::fs;
use std::path::Path;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::mix::{mix_at_sinr, MixtureExample};
use super::pool::{prepare_interference_pool, shift_schedule};
use crate::error::{invalid, Error, Result};
use crate::signal::{self, rfiq, FrequencyBand, IqSignal};
use crate::Scalar;

/// Declarative description of a mixture dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSpec {
    pub slice_length: usize,
    /// Inclusive SINR range in dB; draws are uniform in dB.
    pub sinr_range_db: [f64; 2],
    pub count: usize,
    /// Spacing of the interference frequency-shift schedule.
    pub shift_step_hz: f64,
    /// Width of the band the schedule cycles through.
    pub shift_span_hz: f64,
    pub include_awgn: bool,
    pub awgn_power: f64,
    pub train_fraction: f64,
    pub val_fraction: f64,
    /// Fixed SOI band; when absent the band holding `soi_band_fraction` of
    /// each clean SOI slice's power is measured.
    pub soi_band: Option<FrequencyBand>,
    pub soi_band_fraction: f64,
    pub seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            slice_length: 10_240,
            sinr_range_db: [-20.0, 20.0],
            count: 1000,
            shift_step_hz: 120_000.0,
            shift_span_hz: 720_000.0,
            include_awgn: false,
            awgn_power: 0.0,
            train_fraction: 0.9,
            val_fraction: 0.1,
            soi_band: None,
            soi_band_fraction: 0.99,
            seed: 0,
        }
    }
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.sinr_range_db;
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(invalid!("sinr_range_db must satisfy low <= high, got [{lo}, {hi}]"));
        }
        if self.count == 0 {
            return Err(invalid!("count must be at least 1"));
        }
        if self.slice_length == 0 {
            return Err(invalid!("slice_length must be at least 1"));
        }
        let sum = self.train_fraction + self.val_fraction;
        if self.train_fraction < 0.0 || self.val_fraction < 0.0 || (sum - 1.0).abs() > 1e-9 {
            return Err(invalid!(
                "train_fraction + val_fraction must equal 1, got {} + {}",
                self.train_fraction,
                self.val_fraction
            ));
        }
        if self.include_awgn && !(self.awgn_power >= 0.0) {
            return Err(invalid!("awgn_power must be non-negative"));
        }
        if !(self.soi_band_fraction > 0.0 && self.soi_band_fraction <= 1.0) {
            return Err(invalid!("soi_band_fraction must be in (0, 1]"));
        }
        Ok(())
    }

    pub fn shift_schedule(&self) -> Vec<f64> {
        shift_schedule(self.shift_step_hz, self.shift_span_hz)
    }

    pub fn interference_pool<T: Scalar>(&self, raw: &IqSignal<T>, target_rate_hz: f64) -> Result<Vec<IqSignal<T>>> {
        prepare_interference_pool(raw, &self.shift_schedule(), self.slice_length, target_rate_hz)
    }

    /// Number of training examples; the rest go to validation.
    pub fn train_count(&self) -> usize {
        ((self.count as f64 * self.train_fraction).round() as usize).min(self.count)
    }

    /// Seed of example `index`, independent of every other example.
    pub fn example_seed(&self, index: usize) -> u64 {
        // splitmix64 finalizer over (seed, index)
        let mut z = self.seed ^ (index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
}

/// Mixture examples plus the train/validation split.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<T: Scalar> {
    pub spec: DatasetSpec,
    pub examples: Vec<MixtureExample<T>>,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
}

/// Draws SOI slice, interference slice and SINR for each index from an RNG
/// seeded by `(spec.seed, index)`, so any subset can be rebuilt on its own.
pub fn build_dataset<T: Scalar>(
    soi_pool: &[IqSignal<T>],
    interference_pool: &[IqSignal<T>],
    spec: &DatasetSpec,
) -> Result<Dataset<T>> {
    spec.validate()?;
    if soi_pool.is_empty() || interference_pool.is_empty() {
        return Err(invalid!(
            "pools must be nonempty (SOI {}, interference {})",
            soi_pool.len(),
            interference_pool.len()
        ));
    }
    let examples = (0..spec.count).map(|i| build_example(soi_pool, interference_pool, spec, i)).collect::<Result<Vec<_>>>()?;
    let n_train = spec.train_count();
    Ok(Dataset {
        spec: spec.clone(),
        examples,
        train: (0..n_train).collect(),
        val: (n_train..spec.count).collect(),
    })
}

fn build_example<T: Scalar>(
    soi_pool: &[IqSignal<T>],
    interference_pool: &[IqSignal<T>],
    spec: &DatasetSpec,
    index: usize,
) -> Result<MixtureExample<T>> {
    let seed = spec.example_seed(index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = &soi_pool[rng.random_range(0..soi_pool.len())];
    let b = &interference_pool[rng.random_range(0..interference_pool.len())];
    let [lo, hi] = spec.sinr_range_db;
    let sinr = if lo < hi { rng.random_range(lo..=hi) } else { lo };
    let b = if spec.include_awgn && spec.awgn_power > 0.0 {
        let normal = Normal::new(0.0, (spec.awgn_power / 2.0).sqrt()).map_err(|e| invalid!("{e}"))?;
        let noisy = b
            .samples()
            .iter()
            .map(|&v| v + Complex::new(T::lit(normal.sample(&mut rng)), T::lit(normal.sample(&mut rng))))
            .collect();
        IqSignal::new(noisy, b.sample_rate_hz())?
    } else {
        b.clone()
    };
    let band = match spec.soi_band {
        Some(band) => band,
        None => signal::occupied_band(s, spec.soi_band_fraction)?,
    };
    let mut ex = mix_at_sinr(s, &b, sinr, band)?;
    ex.seed = seed;
    Ok(ex)
}

/// `manifest.json` written next to the example files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub seed: u64,
    pub sample_rate_hz: f64,
    pub spec: DatasetSpec,
    /// Free-form provenance added by the caller (config hash and the like).
    #[serde(default)]
    pub provenance: serde_json::Value,
    pub examples: Vec<ManifestEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub index: usize,
    pub split: Split,
    pub mixture: String,
    pub soi: String,
    pub interference: String,
    pub kappa: f64,
    pub target_sinr_db: f64,
    pub achieved_sinr_db: f64,
    pub soi_band: FrequencyBand,
    pub seed: u64,
}

impl<T: Scalar> Dataset<T> {
    pub fn train_examples(&self) -> impl Iterator<Item = &MixtureExample<T>> {
        self.train.iter().map(move |&i| &self.examples[i])
    }

    pub fn val_examples(&self) -> impl Iterator<Item = &MixtureExample<T>> {
        self.val.iter().map(move |&i| &self.examples[i])
    }

    /// Largest `|achieved - target|` over all examples, in dB.
    pub fn max_sinr_error_db(&self) -> f64 {
        self.examples.iter().map(|e| (e.achieved_sinr_db - e.target_sinr_db).abs()).fold(0.0, f64::max)
    }

    pub fn manifest(&self, provenance: serde_json::Value) -> Manifest {
        let split_of = |i: usize| if self.val.contains(&i) { Split::Val } else { Split::Train };
        Manifest {
            format_version: 1,
            seed: self.spec.seed,
            sample_rate_hz: self.examples.first().map(|e| e.mixture.sample_rate_hz()).unwrap_or(0.0),
            spec: self.spec.clone(),
            provenance,
            examples: self
                .examples
                .iter()
                .enumerate()
                .map(|(i, e)| ManifestEntry {
                    index: i,
                    split: split_of(i),
                    mixture: format!("examples/{i:05}_mixture.rfiq"),
                    soi: format!("examples/{i:05}_soi.rfiq"),
                    interference: format!("examples/{i:05}_interference.rfiq"),
                    kappa: e.kappa,
                    target_sinr_db: e.target_sinr_db,
                    achieved_sinr_db: e.achieved_sinr_db,
                    soi_band: e.soi_band,
                    seed: e.seed,
                })
                .collect(),
        }
    }

    /// Writes RFIQ files for every component plus `manifest.json`.
    pub fn save(&self, dir: &Path, provenance: serde_json::Value) -> Result<Manifest> {
        fs::create_dir_all(dir.join("examples"))?;
        let manifest = self.manifest(provenance);
        for (e, m) in self.examples.iter().zip(&manifest.examples) {
            rfiq::write(dir.join(&m.mixture), &e.mixture)?;
            rfiq::write(dir.join(&m.soi), &e.soi)?;
            rfiq::write(dir.join(&m.interference), &e.interference_scaled)?;
        }
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(manifest)
    }

    pub fn load(dir: &Path) -> Result<(Self, Manifest)> {
        let path = dir.join("manifest.json");
        let manifest: Manifest = serde_json::from_slice(&fs::read(&path)?)?;
        let mut examples = Vec::with_capacity(manifest.examples.len());
        let (mut train, mut val) = (Vec::new(), Vec::new());
        for (i, m) in manifest.examples.iter().enumerate() {
            if m.index != i {
                return Err(Error::Format { what: "dataset manifest", path, reason: format!("entry {i} has index {}", m.index) });
            }
            examples.push(MixtureExample {
                mixture: rfiq::read(dir.join(&m.mixture))?,
                soi: rfiq::read(dir.join(&m.soi))?,
                interference_scaled: rfiq::read(dir.join(&m.interference))?,
                target_sinr_db: m.target_sinr_db,
                achieved_sinr_db: m.achieved_sinr_db,
                kappa: m.kappa,
                soi_band: m.soi_band,
                seed: m.seed,
            });
            match m.split {
                Split::Train => train.push(i),
                Split::Val => val.push(i),
            }
        }
        Ok((Self { spec: manifest.spec.clone(), examples, train, val }, manifest))
    }
}
