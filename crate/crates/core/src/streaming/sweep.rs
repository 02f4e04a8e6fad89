use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{buffer_latency, inference_time, measure_tau, output_throughput, BatchProcessor, TauStats};
use crate::error::{invalid, Result};
use crate::Scalar;

/// Marginal throughput gain below which batching is considered flat.
pub const KNEE_GAIN: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub batch_size: usize,
    /// `ok`, or the error that stopped this batch size.
    pub status: String,
    pub tau: Option<TauStats>,
    pub inference_time_s: Option<f64>,
    pub output_throughput_hz: Option<f64>,
    pub buffer_latency_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub signal_length: usize,
    pub sample_rate_hz: f64,
    pub rows: Vec<SweepRow>,
    /// First batch size whose throughput gain over the previous successful
    /// row is below [`KNEE_GAIN`].
    pub knee: Option<usize>,
}

/// Measures `τ(B, L)` for each batch size. A failing batch size is recorded
/// with its error and the sweep continues.
pub fn batching_sweep<T: Scalar, P: BatchProcessor<T> + ?Sized>(
    model: &mut P,
    signal_length: usize,
    batch_sizes: &[usize],
    trials: usize,
    warmup: usize,
    sample_rate_hz: f64,
) -> Result<SweepTable> {
    if batch_sizes.is_empty() {
        return Err(invalid!("batch size list is empty"));
    }
    model.check_length(signal_length)?;
    let mut rows = Vec::with_capacity(batch_sizes.len());
    for &b in batch_sizes {
        let buffer_latency_s = buffer_latency(b, signal_length, sample_rate_hz);
        rows.push(match measure_tau(model, b, signal_length, trials, warmup) {
            Ok(tau) => {
                let inf = inference_time(tau.mean, b);
                SweepRow {
                    batch_size: b,
                    status: "ok".into(),
                    inference_time_s: Some(inf),
                    output_throughput_hz: Some(output_throughput(b, signal_length, inf)),
                    tau: Some(tau),
                    buffer_latency_s,
                }
            }
            Err(e) => {
                log::warn!("batch size {b} failed: {e}");
                SweepRow {
                    batch_size: b,
                    status: format!("error: {e}"),
                    tau: None,
                    inference_time_s: None,
                    output_throughput_hz: None,
                    buffer_latency_s,
                }
            }
        });
    }
    let knee = find_knee(&rows);
    Ok(SweepTable { signal_length, sample_rate_hz, rows, knee })
}

fn find_knee(rows: &[SweepRow]) -> Option<usize> {
    let ok: Vec<(usize, f64)> = rows.iter().filter_map(|r| Some((r.batch_size, r.output_throughput_hz?))).collect();
    ok.windows(2).find(|w| w[1].1 / w[0].1 - 1.0 < KNEE_GAIN).map(|w| w[1].0)
}

impl SweepTable {
    pub const CSV_HEADER: &'static str =
        "batch_size,status,tau_mean_s,tau_p50_s,tau_p95_s,inference_time_s,output_throughput_hz,buffer_latency_s,knee";

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.batch_size,
                r.status.replace(',', ";"),
                opt(r.tau.as_ref().map(|t| t.mean)),
                opt(r.tau.as_ref().map(|t| t.p50)),
                opt(r.tau.as_ref().map(|t| t.p95)),
                opt(r.inference_time_s),
                opt(r.output_throughput_hz),
                r.buffer_latency_s,
                self.knee == Some(r.batch_size)
            ));
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }

    /// `(B, τ mean)` and `(B, throughput)` series for plotting.
    pub fn plot_series(&self) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
        let tau = self.rows.iter().filter_map(|r| Some((r.batch_size as f64, r.tau.as_ref()?.mean))).collect();
        let thr = self.rows.iter().filter_map(|r| Some((r.batch_size as f64, r.output_throughput_hz?))).collect();
        (tau, thr)
    }
}
