//! One function per subcommand. Each reads its inputs from the run
//! directory and writes its outputs there.

use std::fs;
use std::path::{Path, PathBuf};

use rfsep_core::mixing::{build_dataset, mix_at_sinr, prepare_interference_pool, Dataset, Manifest};
use rfsep_core::signal::{rfiq, IqSignal};
use rfsep_core::streaming::{self, batching_sweep, run_stream, write_plot_data, BatchProcessor, SleepStub, StreamConfig};
use rfsep_core::waveforms::{fm_modulate, wav, AudioSignal};
use rfsep_separators::baselines::sample_covariance;
use rfsep_separators::evaluation::{evaluate_grid, metrics_csv, GridPoint, LmmsePrior, Method, Separation};
use rfsep_separators::{bandpass, matched_filter, train, Model, ModelProcessor};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

const SOURCES_DIR: &str = "sources";
const CHECKPOINT: &str = "checkpoints/model.bin";

/// Index of the generated source files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceIndex {
    pub config_hash: String,
    pub source_hash: String,
    pub seed: u64,
    pub sample_rate_hz: f64,
    pub soi: Vec<String>,
    pub audio: Vec<String>,
    pub interference: String,
    /// Audio came from user WAV files rather than the synthetic generator.
    pub from_wav: bool,
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|source| CliError::File { path: parent.to_path_buf(), source })?;
    }
    fs::write(path, contents).map_err(|source| CliError::File { path: path.to_path_buf(), source })
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| CliError::File { path: path.to_path_buf(), source })
}

/// SOI sources (synthetic, or FM-modulated `wavs`) and the raw interference recording.
pub fn generate(cfg: &ExperimentConfig, wavs: &[PathBuf]) -> Result<SourceIndex> {
    let dir = cfg.out_dir.join(SOURCES_DIR);
    fs::create_dir_all(&dir).map_err(|source| CliError::File { path: dir.clone(), source })?;
    let sources: Vec<(AudioSignal<f32>, IqSignal<f32>)> = if wavs.is_empty() {
        cfg.task.soi_sources::<f32>()?
    } else {
        wavs.iter()
            .map(|p| {
                let audio = wav::read::<f32>(p)?.resampled(cfg.task.fm.audio_rate_hz)?;
                let rf = fm_modulate(&audio, &cfg.task.fm)?;
                Ok((audio, rf))
            })
            .collect::<Result<_>>()?
    };
    let mut index = SourceIndex {
        config_hash: cfg.config_hash(),
        source_hash: cfg.source_hash(),
        seed: cfg.seed,
        sample_rate_hz: cfg.task.fm.rf_rate_hz,
        soi: Vec::new(),
        audio: Vec::new(),
        interference: format!("{SOURCES_DIR}/interference.rfiq"),
        from_wav: !wavs.is_empty(),
    };
    for (i, (audio, rf)) in sources.iter().enumerate() {
        let (r, a) = (format!("{SOURCES_DIR}/soi_{i:03}.rfiq"), format!("{SOURCES_DIR}/soi_{i:03}.wav"));
        rfiq::write(cfg.out_dir.join(&r), rf)?;
        wav::write(cfg.out_dir.join(&a), audio, wav::WavEncoding::Float32)?;
        index.soi.push(r);
        index.audio.push(a);
    }
    let raw = cfg.task.interference_source::<f32>(cfg.task.interference_s, 0)?;
    rfiq::write(cfg.out_dir.join(&index.interference), &raw)?;
    write_file(&dir.join("sources.json"), serde_json::to_string_pretty(&index)?)?;
    println!(
        "generated {} SOI sources and {:.1} s of interference in {}",
        index.soi.len(),
        raw.len() as f64 / raw.sample_rate_hz(),
        dir.display()
    );
    Ok(index)
}

fn load_sources(cfg: &ExperimentConfig) -> Result<(SourceIndex, Vec<IqSignal<f32>>, IqSignal<f32>)> {
    let path = cfg.out_dir.join(SOURCES_DIR).join("sources.json");
    let index: SourceIndex = serde_json::from_slice(&read_file(&path)?)?;
    if index.source_hash != cfg.source_hash() {
        return Err(CliError::Data(format!(
            "{} was generated for source hash {} but the [task] section gives {}; run generate again",
            path.display(),
            index.source_hash,
            cfg.source_hash()
        )));
    }
    let soi = index.soi.iter().map(|f| rfiq::read::<f32>(cfg.out_dir.join(f))).collect::<rfsep_core::Result<Vec<_>>>()?;
    let raw = rfiq::read::<f32>(cfg.out_dir.join(&index.interference))?;
    Ok((index, soi, raw))
}

/// Slices the sources into pools and mixes `dataset.count` examples into the run directory.
pub fn mix(cfg: &ExperimentConfig, force: bool) -> Result<Manifest> {
    let manifest_path = cfg.out_dir.join("manifest.json");
    if manifest_path.exists() && !force {
        let old: Manifest = serde_json::from_slice(&read_file(&manifest_path)?)?;
        let old_hash = old.provenance.get("data_hash").and_then(|h| h.as_str()).unwrap_or("unknown");
        let what = if old_hash == cfg.data_hash() { "this dataset (same hash)" } else { "a different dataset" };
        return Err(CliError::Data(format!(
            "{} already holds {what}, hash {old_hash}; pass --force to rebuild",
            manifest_path.display()
        )));
    }
    let (_, soi, raw) = load_sources(cfg)?;
    let (soi_pool, int_pool) = cfg.task.pools(&soi, &raw, &cfg.dataset)?;
    let pairs = soi_pool.len() * int_pool.len();
    println!("pools: {} SOI slices, {} interference slices of {} samples", soi_pool.len(), int_pool.len(), cfg.dataset.slice_length);
    if pairs < cfg.dataset.count {
        return Err(CliError::Data(format!(
            "pools too small: {} SOI x {} interference = {pairs} distinct pairs < {} requested examples",
            soi_pool.len(),
            int_pool.len(),
            cfg.dataset.count
        )));
    }
    let ds = build_dataset(&soi_pool, &int_pool, &cfg.dataset)?;
    let worst = ds.max_sinr_error_db();
    println!("audit: {} examples, max |achieved - target| SINR = {worst:.2e} dB", ds.examples.len());
    if worst > 0.1 {
        return Err(CliError::Data(format!("SINR calibration error {worst} dB exceeds 0.1 dB")));
    }
    if force && cfg.out_dir.join("examples").exists() {
        fs::remove_dir_all(cfg.out_dir.join("examples"))?;
    }
    Ok(ds.save(&cfg.out_dir, cfg.provenance())?)
}

fn load_dataset(cfg: &ExperimentConfig, force: bool) -> Result<Dataset<f32>> {
    let (ds, manifest) = Dataset::<f32>::load(&cfg.out_dir).map_err(|e| CliError::Data(format!("cannot load the dataset in {}: {e}; run mix first", cfg.out_dir.display())))?;
    let found = manifest.provenance.get("data_hash").and_then(|h| h.as_str()).unwrap_or("unknown");
    check_hash("dataset", found, &cfg.data_hash(), force)?;
    Ok(ds)
}

fn check_hash(what: &str, found: &str, expected: &str, force: bool) -> Result<()> {
    if found == expected {
        return Ok(());
    }
    let msg = format!("{what} data hash {found} does not match the config's {expected}");
    if force {
        log::warn!("{msg}; continuing because of --force");
        Ok(())
    } else {
        Err(CliError::Data(format!("{msg}; pass --force to use it anyway")))
    }
}

/// Trains the configured model; writes checkpoints, `loss_curve.csv` and `train_log.csv`.
pub fn train_model(cfg: &ExperimentConfig, force: bool) -> Result<rfsep_separators::TrainReport> {
    let ds = load_dataset(cfg, force)?;
    let mut model = Model::<f32>::new(&cfg.model, cfg.init_seed())?;
    println!("training {} ({} parameters) on {} examples", model.name(), model.params().num_params(), ds.train.len());
    let ckpt_dir = cfg.out_dir.join("checkpoints");
    let report = train(&mut model, &ds, &cfg.train, Some(&ckpt_dir))?;
    let meta = serde_json::json!({
        "config_hash": cfg.config_hash(),
        "data_hash": cfg.data_hash(),
        "model_hash": cfg.model_hash(),
        "seed": cfg.seed,
        "best_epoch": report.best_epoch,
        "best_val_mse": report.best_val_mse,
    });
    model.save(&cfg.out_dir.join(CHECKPOINT), meta)?;
    let comment = cfg.csv_comment();
    write_file(&cfg.out_dir.join("loss_curve.csv"), format!("{comment}{}", report.loss_curve_csv()))?;
    write_file(&cfg.out_dir.join("train_log.csv"), format!("{comment}{}", report.train_log_csv()))?;
    for e in &report.epochs {
        println!("epoch {:>3}  train {:.5}  val {:.5}", e.epoch, e.train_mse, e.val_mse);
    }
    println!(
        "best epoch {}: val MSE {:.5}, passthrough {:.5}, ratio {:.3}",
        report.best_epoch,
        report.best_val_mse,
        report.passthrough_mse,
        report.best_ratio()
    );
    Ok(report)
}

/// Builds the configured architecture and loads `path` into it, so a
/// config/checkpoint disagreement is reported tensor by tensor.
pub fn load_model(cfg: &ExperimentConfig, path: &Path, force: bool) -> Result<Model<f32>> {
    let mut model = Model::<f32>::new(&cfg.model, 0)?;
    let meta = model.load_params(path)?;
    let found = meta.get("data_hash").and_then(|h| h.as_str()).unwrap_or("unknown");
    check_hash("checkpoint", found, &cfg.data_hash(), force)?;
    Ok(model)
}

fn checkpoint_path(cfg: &ExperimentConfig, given: Option<&Path>) -> PathBuf {
    given.map(Path::to_path_buf).unwrap_or_else(|| cfg.out_dir.join(CHECKPOINT))
}

/// Covariances from the task's unit-power pools, regenerated from the config.
pub fn lmmse_prior(cfg: &ExperimentConfig) -> Result<LmmsePrior> {
    let ev = &cfg.evaluate;
    let soi: Vec<IqSignal<f32>> = cfg.task.soi_sources::<f32>()?.into_iter().map(|(_, s)| s).collect();
    let raw = cfg.task.interference_source::<f32>(cfg.task.interference_s, 0)?;
    let (sp, ip) = cfg.task.pools(&soi, &raw, &cfg.dataset)?;
    let n = ev.lmmse_slices;
    Ok(LmmsePrior {
        soi: sample_covariance(&sp[..n.min(sp.len())], ev.lmmse_window)?,
        interference: sample_covariance(&ip[..n.min(ip.len())], ev.lmmse_window)?,
        loading: ev.lmmse_loading,
    })
}

/// Interference scale estimated from received power, assuming a unit-power SOI.
fn blind_kappa(x: &IqSignal<f32>) -> f64 {
    let p = x.samples().iter().map(|c| c.norm_sqr() as f64).sum::<f64>() / x.len().max(1) as f64;
    (p - 1.0).max(1e-6).sqrt()
}

pub struct SeparateArgs<'a> {
    pub input: &'a Path,
    pub output: &'a Path,
    pub method: Method,
    pub checkpoint: Option<&'a Path>,
    pub wav: Option<&'a Path>,
    pub kappa: Option<f64>,
    pub force: bool,
}

/// Maps one mixture file to an SOI estimate file, optionally demodulated to WAV.
pub fn separate(cfg: &ExperimentConfig, args: &SeparateArgs<'_>) -> Result<IqSignal<f32>> {
    let x = rfiq::read::<f32>(args.input)?;
    let band = cfg.soi_band()?;
    let est = match args.method {
        Method::Passthrough => x.clone(),
        Method::MatchedFilter => bandpass(&x, &band)?,
        Method::Lmmse => {
            let kappa = args.kappa.unwrap_or_else(|| blind_kappa(&x));
            lmmse_prior(cfg)?.estimator(kappa)?.apply(&x)?
        }
        Method::Model => {
            let model = load_model(cfg, &checkpoint_path(cfg, args.checkpoint), args.force)?;
            model.separate(&x, cfg.evaluate.chunk, cfg.evaluate.batch)?
        }
    };
    rfiq::write(args.output, &est)?;
    if let Some(w) = args.wav {
        wav::write(w, &matched_filter(&est, &band, &cfg.task.fm)?, wav::WavEncoding::Float32)?;
    }
    println!("{} -> {} ({}, {} samples)", args.input.display(), args.output.display(), args.method.as_str(), est.len());
    Ok(est)
}

/// Scores every configured method over the SINR grid and writes `metrics.csv`.
pub fn evaluate(cfg: &ExperimentConfig, checkpoint: Option<&Path>, force: bool) -> Result<Vec<GridPoint>> {
    let ev = &cfg.evaluate;
    if cfg.out_dir.join("manifest.json").exists() {
        load_manifest_hash(cfg, force)?;
    }
    let model = if ev.methods.contains(&Method::Model) { Some(load_model(cfg, &checkpoint_path(cfg, checkpoint), force)?) } else { None };
    let prior = if ev.methods.contains(&Method::Lmmse) { Some(lmmse_prior(cfg)?) } else { None };
    let clips = cfg.task.eval_clips::<f32>(ev.clips, ev.clip_s, &ev.sinr_grid_db, &cfg.dataset)?;
    let sep = Separation { fm: cfg.task.fm.clone(), model: model.as_ref(), lmmse: prior.as_ref(), chunk: ev.chunk, batch: ev.batch };
    let grid = evaluate_grid(&sep, &clips, &ev.methods, &cfg.metrics)?;
    write_file(&cfg.out_dir.join("metrics.csv"), format!("{}{}", cfg.csv_comment(), metrics_csv(&grid)))?;
    print_grid(&grid);
    Ok(grid)
}

fn load_manifest_hash(cfg: &ExperimentConfig, force: bool) -> Result<()> {
    let m: Manifest = serde_json::from_slice(&read_file(&cfg.out_dir.join("manifest.json"))?)?;
    let found = m.provenance.get("data_hash").and_then(|h| h.as_str()).unwrap_or("unknown");
    check_hash("dataset", found, &cfg.data_hash(), force)
}

fn print_grid(grid: &[GridPoint]) {
    let names: Vec<&String> = grid.first().map(|p| p.values.keys().collect()).unwrap_or_default();
    print!("{:<16}{:>8}", "method", "sinr_db");
    for n in &names {
        print!("{n:>10}");
    }
    println!();
    for p in grid {
        print!("{:<16}{:>8}", p.method.as_str(), p.sinr_db);
        for n in &names {
            print!("{:>10.3}", p.values[*n]);
        }
        println!();
    }
}

fn processor(cfg: &ExperimentConfig, checkpoint: Option<&Path>, force: bool) -> Result<Box<dyn BatchProcessor<f32>>> {
    Ok(match cfg.bench.stub_tau_s {
        Some(tau) => Box::new(SleepStub::new(tau, cfg.bench.time_scale)),
        None => Box::new(ModelProcessor::new(load_model(cfg, &checkpoint_path(cfg, checkpoint), force)?)),
    })
}

/// A 0 dB FM + OFDM mixture at least `duration_s` long.
pub fn synthetic_stream(cfg: &ExperimentConfig, duration_s: f64) -> Result<IqSignal<f32>> {
    let len = duration_s + 0.1;
    let audio = cfg.task.audio::<f32>(2_000_000, len)?;
    let soi = fm_modulate(&audio, &cfg.task.fm)?;
    let raw = cfg.task.interference_source::<f32>(len * 1.05 + 0.01, 2_000_000)?;
    let b = prepare_interference_pool(&raw, &[0.0], soi.len(), cfg.task.fm.rf_rate_hz)?.remove(0);
    Ok(mix_at_sinr(&soi, &b, 0.0, cfg.soi_band()?)?.mixture)
}

/// Runs the two-stage stream and writes `latency.json` and the backlog plot data.
/// Returns [`CliError::Infeasible`] after writing when the model cannot keep up.
pub fn bench(cfg: &ExperimentConfig, checkpoint: Option<&Path>, input: Option<&Path>, force: bool) -> Result<streaming::LatencyReport> {
    let b = &cfg.bench;
    let stream_cfg = StreamConfig {
        batch_size: b.batch_size,
        signal_length: b.signal_length,
        sample_rate_hz: cfg.task.fm.rf_rate_hz,
        queue_capacity: b.queue_capacity,
        time_scale: b.time_scale,
        ..StreamConfig::default()
    };
    let source = match input {
        Some(p) => rfiq::read::<f32>(p)?,
        None => synthetic_stream(cfg, b.duration_s)?,
    };
    let mut proc = processor(cfg, checkpoint, force)?;
    let (_, report) = run_stream(&source, proc.as_mut(), &stream_cfg, b.duration_s)?;
    let doc = serde_json::json!({
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "report": report,
        "reference_timings": streaming::reference_timings(),
    });
    write_file(&cfg.out_dir.join("latency.json"), serde_json::to_string_pretty(&doc)?)?;
    write_plot_data(&cfg.out_dir.join("backlog.dat"), "time_s", "queued_samples", &report.backlog_points())?;
    println!(
        "{}: B={} L={} buffer {:.1} ms, inference {:.1} ms, first-sample latency {:.1} ms, throughput {:.0} Hz vs input {:.0} Hz, max backlog {} samples",
        report.model,
        report.batch_size,
        report.signal_length,
        report.buffer_latency_s * 1e3,
        report.inference_time_s * 1e3,
        report.first_sample_latency_s * 1e3,
        report.output_throughput_hz,
        report.input_throughput_hz,
        report.max_backlog()
    );
    if !report.realtime_feasible {
        return Err(CliError::Infeasible(format!(
            "output throughput {:.0} Hz is below the input rate {:.0} Hz; see latency.json",
            report.output_throughput_hz, report.input_throughput_hz
        )));
    }
    Ok(report)
}

/// Measures forward time over the batch grid and writes `sweep.csv` plus plot data.
pub fn sweep(cfg: &ExperimentConfig, checkpoint: Option<&Path>, force: bool) -> Result<streaming::SweepTable> {
    let b = &cfg.bench;
    let mut proc = processor(cfg, checkpoint, force)?;
    let table = batching_sweep(proc.as_mut(), b.signal_length, &b.batch_sizes, b.trials, b.warmup, cfg.task.fm.rf_rate_hz)?;
    write_file(&cfg.out_dir.join("sweep.csv"), format!("{}{}", cfg.csv_comment(), table.to_csv()))?;
    let (tau, throughput) = table.plot_series();
    write_plot_data(&cfg.out_dir.join("sweep_tau.dat"), "batch_size", "tau_mean_s", &tau)?;
    write_plot_data(&cfg.out_dir.join("sweep_throughput.dat"), "batch_size", "output_throughput_hz", &throughput)?;
    print!("{}", table.to_csv());
    match table.knee {
        Some(k) => println!("throughput gains flatten from B = {k}"),
        None => println!("throughput still rising at the largest batch size"),
    }
    Ok(table)
}
