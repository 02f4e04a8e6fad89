//! Method comparison over an SINR grid: every estimate is demodulated by the
//! matched filter and scored against the clean audio.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex;
use rfsep_core::metrics::{evaluate, MetricConfig, MetricReport};
use rfsep_core::signal::IqSignal;
use rfsep_core::waveforms::{fm_demodulate, AudioSignal, FmConfig};
use serde::{Deserialize, Serialize};

use crate::baselines::{matched_filter, Lmmse};
use crate::error::{Error, Result};
use crate::layout::Element;
use crate::model::Model;
use crate::task::EvalClip;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Demodulate the mixture as received.
    Passthrough,
    MatchedFilter,
    Lmmse,
    /// The trained separator followed by the matched filter.
    Model,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Passthrough => "passthrough",
            Method::MatchedFilter => "matched_filter",
            Method::Lmmse => "lmmse",
            Method::Model => "model",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "passthrough" => Method::Passthrough,
            "matched_filter" | "mf" => Method::MatchedFilter,
            "lmmse" => Method::Lmmse,
            "model" => Method::Model,
            other => return Err(Error::Config(format!("unknown method {other:?}; expected passthrough, matched_filter, lmmse or model"))),
        })
    }
}

/// Covariances estimated from unit-power training pools.
#[derive(Clone, Debug)]
pub struct LmmsePrior {
    pub soi: DMatrix<Complex<f64>>,
    pub interference: DMatrix<Complex<f64>>,
    pub loading: f64,
}

impl LmmsePrior {
    /// Estimator for a mixture whose interference was scaled by `kappa`.
    pub fn estimator(&self, kappa: f64) -> Result<Lmmse> {
        let cb = &self.interference * Complex::new(kappa * kappa, 0.0);
        Lmmse::new(&self.soi, &cb, self.loading)
    }
}

/// Everything needed to turn a mixture into audio with each method.
pub struct Separation<'a, T: Element> {
    pub fm: FmConfig,
    pub model: Option<&'a Model<T>>,
    pub lmmse: Option<&'a LmmsePrior>,
    /// Independent chunk length for model inference.
    pub chunk: usize,
    pub batch: usize,
}

impl<T: Element> Separation<'_, T> {
    /// RF-domain estimate of the SOI (before demodulation).
    pub fn estimate_iq(&self, method: Method, mixture: &IqSignal<T>, kappa: f64) -> Result<IqSignal<T>> {
        match method {
            Method::Passthrough | Method::MatchedFilter => Ok(mixture.clone()),
            Method::Lmmse => {
                let prior = self.lmmse.ok_or_else(|| Error::Config("lmmse needs covariance estimates".into()))?;
                prior.estimator(kappa)?.apply(mixture)
            }
            Method::Model => {
                let model = self.model.ok_or_else(|| Error::Config("method model needs a checkpoint".into()))?;
                model.separate(mixture, self.chunk, self.batch)
            }
        }
    }

    pub fn audio(&self, method: Method, ex: &rfsep_core::mixing::MixtureExample<T>) -> Result<AudioSignal<T>> {
        let est = self.estimate_iq(method, &ex.mixture, ex.kappa)?;
        match method {
            Method::Passthrough => Ok(fm_demodulate(&est, &self.fm)?),
            _ => matched_filter(&est, &ex.soi_band, &self.fm),
        }
    }
}

/// Mean metric values of one method at one SINR.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub method: Method,
    pub sinr_db: f64,
    pub values: BTreeMap<String, f64>,
    pub clips: usize,
}

/// Scores every method on every clip and SINR, averaging over clips.
pub fn evaluate_grid<T: Element>(
    sep: &Separation<'_, T>,
    clips: &[EvalClip<T>],
    methods: &[Method],
    metrics: &MetricConfig,
) -> Result<Vec<GridPoint>> {
    let mut out = Vec::new();
    let Some(first) = clips.first() else {
        return Err(Error::Input("evaluation needs at least one clip".into()));
    };
    for &method in methods {
        for (k, ex0) in first.mixtures.iter().enumerate() {
            let mut sums: BTreeMap<String, f64> = BTreeMap::new();
            for clip in clips {
                let ex = &clip.mixtures[k];
                let audio = sep.audio(method, ex)?;
                let reference = clip.audio.clone();
                let n = reference.len().min(audio.len());
                let report: MetricReport = evaluate(&reference.slice(0, n)?, &audio.slice(0, n)?, metrics)?;
                for (name, v) in report.values() {
                    *sums.entry(name.to_string()).or_default() += v;
                }
            }
            let values = sums.into_iter().map(|(k, v)| (k, v / clips.len() as f64)).collect();
            out.push(GridPoint { method, sinr_db: ex0.target_sinr_db, values, clips: clips.len() });
        }
    }
    Ok(out)
}

/// `method,sinr_db,metric,value` with one row per metric, in a fixed order.
pub fn metrics_csv(points: &[GridPoint]) -> String {
    let mut s = format!("{}\n", MetricReport::CSV_HEADER);
    for p in points {
        for (name, v) in &p.values {
            s.push_str(&format!("{},{},{},{}\n", p.method.as_str(), p.sinr_db, name, v));
        }
    }
    s
}
