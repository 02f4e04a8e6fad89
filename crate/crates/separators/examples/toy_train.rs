//! Trains a desk-scale separator on the synthetic task and prints the loss curve.
//!
//! `cargo run --release -p rfsep-separators --example toy_train -- decoder tone 2000 8`

use rfsep_core::metrics::MetricConfig;
use rfsep_separators::evaluation::{evaluate_grid, metrics_csv, Method, Separation};
use rfsep_separators::task::{default_dataset_spec, SoiAudio, ToyTaskConfig};
use rfsep_separators::{train, DecoderConfig, Feedback, Model, ModelConfig, TrainConfig, WaveNetConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let kind = args.get(1).map(String::as_str).unwrap_or("decoder");
    let audio = if args.get(2).map(String::as_str) == Some("speech") { SoiAudio::Speech } else { SoiAudio::Tone };
    let count: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let epochs: usize = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(8);
    let lr: f64 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(1e-3);
    let fb: f64 = args.get(6).and_then(|s| s.parse().ok()).unwrap_or(0.0);
    let lo: f64 = args.get(7).and_then(|s| s.parse().ok()).unwrap_or(0.0);
    let hi: f64 = args.get(8).and_then(|s| s.parse().ok()).unwrap_or(lo);
    let chunk: usize = args.get(9).and_then(|s| s.parse().ok()).unwrap_or(10240);

    let task = ToyTaskConfig { audio, ..Default::default() };
    let spec = rfsep_core::mixing::DatasetSpec { count, sinr_range_db: [lo, hi], ..default_dataset_spec() };
    let t0 = std::time::Instant::now();
    let data = task.dataset::<f32>(&spec)?;
    println!("dataset {} examples in {:.1}s", data.examples.len(), t0.elapsed().as_secs_f64());
    let (cfg, crop) = match kind {
        "wavenet" => (ModelConfig::Wavenet(WaveNetConfig::desk()), Some(512)),
        _ => (ModelConfig::Decoder(DecoderConfig::desk()), None),
    };
    let mut model = Model::<f32>::new(&cfg, 1)?;
    println!("{} with {} parameters", model.name(), model.params().num_params());
    let feedback = if fb > 0.0 { Feedback::SelfConditioned { prob: fb, std: 0.05 } } else { Feedback::Teacher };
    let tc = TrainConfig { epochs, lr, crop_length: crop, feedback, ..Default::default() };
    let report = train(&mut model, &data, &tc, None)?;
    for e in &report.epochs {
        println!(
            "epoch {} train {:.5} val {:.5} tf {:?} t {:.1}s",
            e.epoch, e.train_mse, e.val_mse, e.val_teacher_mse, e.wall_time_s
        );
    }
    println!(
        "passthrough {:.5} (closed form {:.5}); best ratio {:.3}",
        report.passthrough_mse,
        report.passthrough_mse_closed_form,
        report.best_ratio()
    );
    if audio == SoiAudio::Speech {
        let clips = task.eval_clips::<f32>(4, 1.0, &[-10.0, 0.0, 10.0], &spec)?;
        let sep = Separation { fm: task.fm.clone(), model: Some(&model), lmmse: None, chunk, batch: 8 };
        let methods = [Method::Passthrough, Method::MatchedFilter, Method::Model];
        let grid = evaluate_grid(&sep, &clips, &methods, &MetricConfig::default())?;
        print!("{}", metrics_csv(&grid));
    }
    Ok(())
}
