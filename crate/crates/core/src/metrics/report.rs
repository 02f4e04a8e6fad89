use serde::{Deserialize, Serialize};

use super::{align, lsd, mel_cd, sdr, stoi, MelCdConfig};
use crate::error::{invalid, Result};
use crate::waveforms::AudioSignal;
use crate::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Good,
    Fair,
    Poor,
}

impl Band {
    pub fn as_str(self) -> &'static str {
        match self {
            Band::Good => "good",
            Band::Fair => "fair",
            Band::Poor => "poor",
        }
    }
}

/// Two cut points on one metric; `higher_is_better` orients the comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub good: f64,
    pub fair: f64,
    pub higher_is_better: bool,
}

impl Threshold {
    pub fn classify(&self, value: f64) -> Band {
        let at_least = |cut: f64| if self.higher_is_better { value >= cut } else { value <= cut };
        if at_least(self.good) {
            Band::Good
        } else if at_least(self.fair) {
            Band::Fair
        } else {
            Band::Poor
        }
    }
}

/// Report banding conventions. These are reporting defaults, not measured
/// quantities, and are meant to be overridden from configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BandThresholds {
    pub stoi: Threshold,
    pub sdr_db: Threshold,
    pub lsd_db: Threshold,
    pub mel_cd: Threshold,
}

impl Default for BandThresholds {
    fn default() -> Self {
        Self {
            stoi: Threshold { good: 0.75, fair: 0.45, higher_is_better: true },
            sdr_db: Threshold { good: 10.0, fair: 0.0, higher_is_better: true },
            lsd_db: Threshold { good: 1.0, fair: 2.5, higher_is_better: false },
            mel_cd: Threshold { good: 4.0, fair: 8.0, higher_is_better: false },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig {
    pub max_lag: usize,
    pub lsd_frame: usize,
    pub lsd_hop: usize,
    pub mel: MelCdConfig,
    pub thresholds: BandThresholds,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self { max_lag: 400, lsd_frame: 256, lsd_hop: 128, mel: MelCdConfig::default(), thresholds: BandThresholds::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricBands {
    pub sdr_db: Band,
    pub lsd_db: Band,
    pub mel_cd: Band,
    pub stoi: Band,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub sdr_db: f64,
    pub lsd_db: f64,
    pub mel_cd: f64,
    pub stoi: f64,
    pub bands: MetricBands,
    /// Lag applied to the estimate before scoring, in samples.
    pub alignment_lag: isize,
    /// Slots for externally computed scores.
    pub pesq: Option<f64>,
    pub estoi: Option<f64>,
}

impl MetricReport {
    pub const CSV_HEADER: &'static str = "method,sinr_db,metric,value";

    /// Named scalar values in a fixed order.
    pub fn values(&self) -> Vec<(&'static str, f64)> {
        let mut v = vec![("sdr_db", self.sdr_db), ("lsd_db", self.lsd_db), ("mel_cd", self.mel_cd), ("stoi", self.stoi)];
        if let Some(p) = self.pesq {
            v.push(("pesq", p));
        }
        if let Some(e) = self.estoi {
            v.push(("estoi", e));
        }
        v
    }

    /// One `method,sinr_db,metric,value` line per metric.
    pub fn csv_rows(&self, method: &str, sinr_db: f64) -> Vec<String> {
        self.values().into_iter().map(|(name, value)| format!("{method},{sinr_db},{name},{value}")).collect()
    }
}

/// Aligns `estimate` to `reference` and computes every metric.
pub fn evaluate<T: Scalar>(reference: &AudioSignal<T>, estimate: &AudioSignal<T>, cfg: &MetricConfig) -> Result<MetricReport> {
    if reference.sample_rate_hz() != estimate.sample_rate_hz() {
        return Err(invalid!(
            "reference at {} Hz and estimate at {} Hz must share a rate",
            reference.sample_rate_hz(),
            estimate.sample_rate_hz()
        ));
    }
    let fs = reference.sample_rate_hz();
    let a = align(reference.samples(), estimate.samples(), cfg.max_lag)?;
    let sdr_db = sdr(&a.reference, &a.estimate)?;
    let lsd_db = lsd(&a.reference, &a.estimate, cfg.lsd_frame, cfg.lsd_hop)?;
    let mcd = mel_cd(&a.reference, &a.estimate, fs, &cfg.mel)?;
    let st = stoi(&a.reference, &a.estimate, fs)?;
    let t = &cfg.thresholds;
    Ok(MetricReport {
        sdr_db,
        lsd_db,
        mel_cd: mcd,
        stoi: st,
        bands: MetricBands {
            sdr_db: t.sdr_db.classify(sdr_db),
            lsd_db: t.lsd_db.classify(lsd_db),
            mel_cd: t.mel_cd.classify(mcd),
            stoi: t.stoi.classify(st),
        },
        alignment_lag: a.lag,
        pesq: None,
        estoi: None,
    })
}
