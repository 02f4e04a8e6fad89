use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{buffer_latency, inference_time, output_throughput, BatchProcessor, TauStats};
use crate::error::{invalid, Result};
use crate::signal::IqSignal;
use crate::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StreamConfig {
    pub batch_size: usize,
    pub signal_length: usize,
    pub sample_rate_hz: f64,
    /// Buffers the queue between the two stages can hold.
    pub queue_capacity: usize,
    /// Simulated seconds per wall-clock second; values above 1 accelerate.
    pub time_scale: f64,
    pub memory_budget_bytes: u64,
}

impl Default for StreamConfig {
    fn default() -> Self {
        Self {
            batch_size: 1,
            signal_length: 10240,
            sample_rate_hz: 50_000.0,
            queue_capacity: 8,
            time_scale: 1.0,
            memory_budget_bytes: 1 << 30,
        }
    }
}

impl StreamConfig {
    pub fn buffer_samples(&self) -> usize {
        self.batch_size * self.signal_length
    }

    pub fn buffer_period_s(&self) -> f64 {
        buffer_latency(self.batch_size, self.signal_length, self.sample_rate_hz)
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.signal_length == 0 || self.queue_capacity == 0 {
            return Err(invalid!("batch size, signal length and queue capacity must be positive"));
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) || !(self.time_scale > 0.0) {
            return Err(invalid!("sample rate and time scale must be positive"));
        }
        // queued buffers plus one being filled and one in flight, complex f64 worst case
        let bytes = self.buffer_samples() as u64 * 16 * (self.queue_capacity as u64 + 2);
        if bytes > self.memory_budget_bytes {
            return Err(invalid!("buffers need {bytes} bytes, over the {} byte budget", self.memory_budget_bytes));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BacklogPoint {
    pub time_s: f64,
    pub queued_samples: usize,
}

/// Timing of one stream run. All times are in simulated seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub model: String,
    pub batch_size: usize,
    pub signal_length: usize,
    pub sample_rate_hz: f64,
    pub buffer_latency_s: f64,
    pub tau_stats: TauStats,
    pub inference_time_s: f64,
    pub output_throughput_hz: f64,
    pub input_throughput_hz: f64,
    pub realtime_feasible: bool,
    /// Time from the first input sample's arrival to its output.
    pub first_sample_latency_s: f64,
    /// First-sample latency minus buffer latency and the first batch's inference time.
    pub overhead_s: f64,
    /// Mean spacing of batch completions over the second half of the run.
    pub steady_period_s: Option<f64>,
    pub backlog_trace: Vec<BacklogPoint>,
    pub producer_blocked: usize,
    pub samples_in: usize,
    pub samples_out: usize,
    pub tail_samples: usize,
}

impl LatencyReport {
    pub fn max_backlog(&self) -> usize {
        self.backlog_trace.iter().map(|p| p.queued_samples).max().unwrap_or(0)
    }

    /// `(time, queued samples)` pairs for plotting.
    pub fn backlog_points(&self) -> Vec<(f64, f64)> {
        self.backlog_trace.iter().map(|p| (p.time_s, p.queued_samples as f64)).collect()
    }

    pub const CSV_HEADER: &'static str = "model,batch_size,signal_length,sample_rate_hz,buffer_latency_s,tau_mean_s,tau_p50_s,tau_p95_s,inference_time_s,output_throughput_hz,input_throughput_hz,realtime_feasible,first_sample_latency_s,max_backlog_samples";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.model,
            self.batch_size,
            self.signal_length,
            self.sample_rate_hz,
            self.buffer_latency_s,
            self.tau_stats.mean,
            self.tau_stats.p50,
            self.tau_stats.p95,
            self.inference_time_s,
            self.output_throughput_hz,
            self.input_throughput_hz,
            self.realtime_feasible,
            self.first_sample_latency_s,
            self.max_backlog()
        )
    }
}

struct Batch<T> {
    samples: Vec<num_complex::Complex<T>>,
}

/// Replays `duration_s` of `source` at its sample rate through a buffering
/// stage and an inference stage running on separate threads.
///
/// The buffering stage releases one batch of `B·L` samples per buffer
/// period; the inference stage runs the model on each batch as it arrives.
/// The final partial batch is not processed.
pub fn run_stream<T: Scalar, P: BatchProcessor<T> + ?Sized>(
    source: &IqSignal<T>,
    model: &mut P,
    cfg: &StreamConfig,
    duration_s: f64,
) -> Result<(IqSignal<T>, LatencyReport)> {
    cfg.validate()?;
    model.check_length(cfg.signal_length)?;
    if source.sample_rate_hz() != cfg.sample_rate_hz {
        return Err(invalid!("source at {} Hz does not match stream rate {} Hz", source.sample_rate_hz(), cfg.sample_rate_hz));
    }
    let samples_in = (duration_s * cfg.sample_rate_hz).floor() as usize;
    if !(duration_s > 0.0) || samples_in > source.len() {
        return Err(invalid!("source holds {} samples but {duration_s} s needs {samples_in}", source.len()));
    }
    let bl = cfg.buffer_samples();
    let num_buffers = samples_in / bl;
    if num_buffers == 0 {
        return Err(invalid!("{duration_s} s is shorter than one buffer of {bl} samples"));
    }
    let period = cfg.buffer_period_s();
    let scale = cfg.time_scale;
    let input = &source.samples()[..num_buffers * bl];

    let (tx, rx) = crossbeam_channel::bounded::<Batch<T>>(cfg.queue_capacity);
    let start = Instant::now();
    let sim_now = |t: Instant| t.duration_since(start).as_secs_f64() * scale;

    let (consumed, blocked) = std::thread::scope(|scope| {
        let producer = scope.spawn(move || {
            let mut blocked = 0usize;
            for (k, chunk) in input.chunks_exact(bl).enumerate() {
                let due = start + Duration::from_secs_f64((k + 1) as f64 * period / scale);
                if let Some(wait) = due.checked_duration_since(Instant::now()) {
                    std::thread::sleep(wait);
                }
                if tx.is_full() {
                    blocked += 1;
                }
                if tx.send(Batch { samples: chunk.to_vec() }).is_err() {
                    break;
                }
            }
            blocked
        });
        let mut out = Vec::with_capacity(num_buffers * bl);
        let mut spans = Vec::with_capacity(num_buffers);
        let result = (|| -> Result<()> {
            for batch in rx.iter() {
                let t0 = Instant::now();
                let y = model.process(&batch.samples, cfg.batch_size)?;
                let t1 = Instant::now();
                if y.len() != batch.samples.len() {
                    return Err(invalid!("model returned {} samples for a batch of {}", y.len(), batch.samples.len()));
                }
                out.extend(y);
                spans.push((sim_now(t0), sim_now(t1)));
            }
            Ok(())
        })();
        drop(rx);
        let blocked = producer.join().expect("buffering stage panicked");
        result.map(|_| ((out, spans), blocked))
    })?;
    let (out, spans) = consumed;

    let per_window: Vec<f64> = spans.iter().map(|(a, b)| (b - a) / cfg.batch_size as f64).collect();
    let tau = TauStats::from_samples(&per_window);
    let inf = inference_time(tau.mean, cfg.batch_size);
    let throughput = output_throughput(cfg.batch_size, cfg.signal_length, inf);
    let done: Vec<f64> = spans.iter().map(|s| s.1).collect();
    let first = done[0];
    let steady_period_s = (done.len() >= 4).then(|| {
        let tail = &done[done.len() / 2..];
        (tail[tail.len() - 1] - tail[0]) / (tail.len() - 1) as f64
    });

    let last = *done.last().expect("at least one batch");
    let ticks = (last / period).ceil() as usize + 1;
    let backlog_trace = (0..=ticks)
        .map(|j| {
            let t = j as f64 * period;
            let arrived = j.min(num_buffers) * bl;
            let finished = done.iter().filter(|&&d| d <= t).count() * bl;
            BacklogPoint { time_s: t, queued_samples: arrived.saturating_sub(finished) }
        })
        .collect();

    let report = LatencyReport {
        model: model.name().to_string(),
        batch_size: cfg.batch_size,
        signal_length: cfg.signal_length,
        sample_rate_hz: cfg.sample_rate_hz,
        buffer_latency_s: period,
        inference_time_s: inf,
        output_throughput_hz: throughput,
        input_throughput_hz: cfg.sample_rate_hz,
        realtime_feasible: throughput >= cfg.sample_rate_hz,
        first_sample_latency_s: first,
        overhead_s: first - period - per_window[0] * cfg.batch_size as f64,
        steady_period_s,
        backlog_trace,
        producer_blocked: blocked,
        samples_in,
        samples_out: out.len(),
        tail_samples: samples_in - out.len(),
        tau_stats: tau,
    };
    Ok((IqSignal::from_trusted(out, cfg.sample_rate_hz), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streaming::{IdentityModel, SleepStub};
    use num_complex::Complex;

    fn ramp(n: usize, fs: f64) -> IqSignal<f32> {
        IqSignal::new((0..n).map(|i| Complex::new(i as f32, -(i as f32))).collect(), fs).unwrap()
    }

    #[test]
    fn preserves_order_and_count() {
        let cfg = StreamConfig { batch_size: 2, signal_length: 100, sample_rate_hz: 10_000.0, time_scale: 20.0, ..Default::default() };
        let src = ramp(2_150, 10_000.0);
        let (y, r) = run_stream(&src, &mut IdentityModel, &cfg, 0.215).unwrap();
        assert_eq!(r.samples_in, 2150);
        assert_eq!(r.samples_out, 2000);
        assert_eq!(r.tail_samples, 150);
        assert_eq!(y.samples(), &src.samples()[..2000]);
        assert_eq!(r.buffer_latency_s, 0.02);
        assert_eq!(r.output_throughput_hz, output_throughput(2, 100, r.inference_time_s));
        assert_eq!(r.realtime_feasible, r.output_throughput_hz >= r.input_throughput_hz);
    }

    #[test]
    fn slow_model_is_flagged() {
        let cfg = StreamConfig { batch_size: 1, signal_length: 500, sample_rate_hz: 50_000.0, time_scale: 10.0, ..Default::default() };
        let src = ramp(50_000, 50_000.0);
        let mut slow = SleepStub::new(0.02, cfg.time_scale);
        let (_, r) = run_stream(&src, &mut slow, &cfg, 1.0).unwrap();
        assert!(!r.realtime_feasible);
        let q: Vec<usize> = r.backlog_trace.iter().map(|p| p.queued_samples).collect();
        assert!(q[q.len() / 2] > q[q.len() / 4]);
    }

    #[test]
    fn rejects_bad_config() {
        let src = ramp(1000, 1000.0);
        let cfg = StreamConfig { signal_length: 100, sample_rate_hz: 2000.0, ..Default::default() };
        assert!(run_stream(&src, &mut IdentityModel, &cfg, 0.5).is_err());
        let cfg = StreamConfig { signal_length: 100, sample_rate_hz: 1000.0, ..Default::default() };
        assert!(run_stream(&src, &mut IdentityModel, &cfg, 5.0).is_err());
        assert!(run_stream(&src, &mut IdentityModel, &cfg, 0.05).is_err());
        let cfg = StreamConfig { memory_budget_bytes: 10, ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
