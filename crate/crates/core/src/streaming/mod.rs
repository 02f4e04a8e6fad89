//! Real-time feasibility accounting: buffer latency, inference time and
//! throughput, measured forward-pass times, a pipelined two-stage stream
//! runner with backlog tracking, and batching sweeps.

mod reference;
mod stream;
mod stub;
mod sweep;
mod tau;

pub use reference::{reference_timings, ReferenceTiming};
pub use stream::{run_stream, BacklogPoint, LatencyReport, StreamConfig};
pub use stub::{IdentityModel, SleepStub};
pub use sweep::{batching_sweep, SweepRow, SweepTable};
pub use tau::{measure_tau, BatchProcessor, TauStats};

use std::io::Write;
use std::path::Path;

use crate::error::Result;

/// Time to accumulate one batch: `B·L / fs` seconds.
pub fn buffer_latency(batch_size: usize, signal_length: usize, sample_rate_hz: f64) -> f64 {
    (batch_size * signal_length) as f64 / sample_rate_hz
}

/// Time to run one batch: `τ(B, L) · B` seconds, with `τ` the per-window time.
pub fn inference_time(tau_s: f64, batch_size: usize) -> f64 {
    tau_s * batch_size as f64
}

/// Samples processed per second: `B·L / inference_time`.
pub fn output_throughput(batch_size: usize, signal_length: usize, inference_time_s: f64) -> f64 {
    (batch_size * signal_length) as f64 / inference_time_s
}

/// Writes an `x,y` two-column file for plotting.
pub fn write_plot_data(path: &Path, x_label: &str, y_label: &str, points: &[(f64, f64)]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{x_label},{y_label}")?;
    for (x, y) in points {
        writeln!(f, "{x},{y}")?;
    }
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_anchors() {
        assert_eq!(buffer_latency(1, 10240, 50_000.0), 0.2048);
        assert_eq!(buffer_latency(2, 10240, 50_000.0), 2.0 * buffer_latency(1, 10240, 50_000.0));
        assert_eq!(buffer_latency(16, 10240, 50_000.0), 3.2768);
        assert_eq!(output_throughput(1, 10240, 0.025), 409_600.0);
        assert_eq!(output_throughput(2, 10240, 0.025), 2.0 * output_throughput(1, 10240, 0.025));
        assert_eq!(output_throughput(1, 10240, 0.2048), 50_000.0);
        assert_eq!(inference_time(0.025, 4), 0.1);
    }
}
