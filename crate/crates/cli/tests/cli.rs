use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rfsep_core::signal::rfiq;
use rfsep_core::waveforms::{wav, AudioSignal};

const TINY: &str = r#"
seed = 7

[task]
soi_sources = 2
soi_source_s = 0.5
interference_s = 1.0

[dataset]
count = 12

[model]
kind = "decoder"
num_layers = 1
hidden_dim = 16
num_heads = 2
window_samples = 64
context_windows = 4
mlp_ratio = 2

[train]
epochs = 1
batch_size = 4

[evaluate]
clips = 1
clip_s = 1.0
methods = ["passthrough", "matched_filter"]

[bench]
signal_length = 1000
duration_s = 2.0
time_scale = 10.0
trials = 10
warmup = 3
"#;

struct Run {
    _dir: tempfile::TempDir,
    config: PathBuf,
    out: PathBuf,
}

impl Run {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let config = dir.path().join("tiny.toml");
        std::fs::write(&config, TINY).unwrap();
        let out = dir.path().join("nested").join("run");
        Self { _dir: dir, config, out }
    }

    fn rfsep(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_rfsep"))
            .args(args)
            .arg("--config")
            .arg(&self.config)
            .arg("--out")
            .arg(&self.out)
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) -> String {
        let o = self.rfsep(args);
        assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
        String::from_utf8(o.stdout).unwrap()
    }
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn generate_is_deterministic_and_creates_the_run_directory() {
    let (a, b) = (Run::new(), Run::new());
    a.ok(&["generate"]);
    b.ok(&["generate"]);
    for f in ["sources/soi_000.rfiq", "sources/soi_001.wav", "sources/interference.rfiq", "sources/sources.json"] {
        assert_eq!(read(&a.out.join(f)), read(&b.out.join(f)), "{f}");
    }
    let soi = rfiq::read::<f32>(a.out.join("sources/soi_000.rfiq")).unwrap();
    assert_eq!(soi.sample_rate_hz(), 50_000.0);
}

#[test]
fn generate_from_wav_yields_50_khz_rfiq() {
    let run = Run::new();
    let wav_path = run.config.with_file_name("voice.wav");
    let audio = AudioSignal::new((0..16_000).map(|k| 0.5 * (k as f32 * 0.07).sin()).collect(), 16_000.0).unwrap();
    wav::write(&wav_path, &audio, wav::WavEncoding::Pcm16).unwrap();
    run.ok(&["generate", "--wav", wav_path.to_str().unwrap()]);
    let soi = rfiq::read::<f32>(run.out.join("sources/soi_000.rfiq")).unwrap();
    assert_eq!(soi.sample_rate_hz(), 50_000.0);
    assert!((soi.duration_s() - 1.0).abs() < 0.01, "{}", soi.duration_s());
    assert!(!run.out.join("sources/soi_001.rfiq").exists());
}

#[test]
fn mix_counts_audits_and_guards_reruns() {
    let run = Run::new();
    run.ok(&["generate"]);
    let stdout = run.ok(&["mix", "--count", "10"]);
    assert!(stdout.contains("audit: 10 examples"), "{stdout}");
    let manifest: serde_json::Value = serde_json::from_slice(&read(&run.out.join("manifest.json"))).unwrap();
    assert_eq!(manifest["examples"].as_array().unwrap().len(), 10);
    assert!(manifest["provenance"]["config_hash"].is_string());

    let again = run.rfsep(&["mix", "--count", "10"]);
    assert_eq!(again.status.code(), Some(3));
    assert!(stderr(&again).contains("--force"), "{}", stderr(&again));
    run.ok(&["mix", "--count", "10", "--force"]);
}

#[test]
fn mix_reports_pool_arithmetic_when_too_small() {
    let run = Run::new();
    run.ok(&["generate"]);
    let o = run.rfsep(&["mix", "--count", "100000"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("distinct pairs < 100000"), "{}", stderr(&o));
}

#[test]
fn invalid_config_names_the_field() {
    let run = Run::new();
    let o = run.rfsep(&["generate", "--set", "dataset.train_fraction=1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("[dataset]"), "{}", stderr(&o));
    let o = run.rfsep(&["generate", "--set", "task.no_such_key=1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("task.no_such_key"), "{}", stderr(&o));
}

#[test]
fn separate_passthrough_is_identity_and_baselines_write_audio() {
    let run = Run::new();
    run.ok(&["generate"]);
    run.ok(&["mix"]);
    let input = run.out.join("examples/00000_mixture.rfiq");
    let output = run.out.join("est.rfiq");
    run.ok(&["separate", "--method", "passthrough", "--input", input.to_str().unwrap(), "--output", output.to_str().unwrap()]);
    assert_eq!(rfiq::read::<f32>(&input).unwrap(), rfiq::read::<f32>(&output).unwrap());

    let audio = run.out.join("est.wav");
    run.ok(&[
        "separate",
        "--method",
        "matched_filter",
        "--input",
        input.to_str().unwrap(),
        "--output",
        output.to_str().unwrap(),
        "--wav",
        audio.to_str().unwrap(),
    ]);
    assert_eq!(wav::read::<f32>(&audio).unwrap().sample_rate_hz(), 8000.0);
}

#[test]
fn evaluate_on_clean_mixtures_and_csv_schema() {
    let run = Run::new();
    run.ok(&["evaluate", "--methods", "matched_filter", "--sinr", "60"]);
    let csv = String::from_utf8(read(&run.out.join("metrics.csv"))).unwrap();
    let stoi: f64 = csv.lines().find(|l| l.contains(",stoi,")).unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert!(stoi >= 0.95, "STOI {stoi}");

    run.ok(&["evaluate", "--methods", "passthrough,matched_filter", "--sinr", "-10,0,10"]);
    let csv = String::from_utf8(read(&run.out.join("metrics.csv"))).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# config_hash="));
    assert_eq!(lines.next().unwrap(), "method,sinr_db,metric,value");
    assert_eq!(lines.count(), 2 * 3 * 4);
}

#[test]
fn train_then_evaluate_checks_hashes_and_shapes() {
    let run = Run::new();
    run.ok(&["generate"]);
    run.ok(&["mix"]);
    run.ok(&["train"]);
    assert!(run.out.join("checkpoints/model.bin").exists());
    assert!(String::from_utf8(read(&run.out.join("loss_curve.csv"))).unwrap().starts_with("# config_hash="));
    run.ok(&["evaluate", "--methods", "model"]);

    // same architecture, different data: refused unless forced
    let o = run.rfsep(&["evaluate", "--methods", "model", "--seed", "8"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("data hash"), "{}", stderr(&o));

    // different architecture: every differing tensor is listed
    let o = run.rfsep(&["evaluate", "--methods", "model", "--set", "model.hidden_dim=32", "--force"]);
    assert_eq!(o.status.code(), Some(3));
    let msg = stderr(&o);
    assert!(msg.contains("checkpoint does not match") && msg.contains("model"), "{msg}");
    assert!(msg.lines().filter(|l| l.contains(": checkpoint [")).count() > 1, "{msg}");
}

#[test]
fn bench_exit_code_tracks_feasibility() {
    let run = Run::new();
    let fast = run.rfsep(&["bench", "--stub-tau", "0.001"]);
    assert!(fast.status.success(), "{}", stderr(&fast));
    let doc: serde_json::Value = serde_json::from_slice(&read(&run.out.join("latency.json"))).unwrap();
    assert_eq!(doc["report"]["realtime_feasible"], true);
    assert!(run.out.join("backlog.dat").exists());

    let slow = run.rfsep(&["bench", "--stub-tau", "0.05"]);
    assert_eq!(slow.status.code(), Some(4));
    let doc: serde_json::Value = serde_json::from_slice(&read(&run.out.join("latency.json"))).unwrap();
    assert_eq!(doc["report"]["realtime_feasible"], false);
}

#[test]
fn sweep_writes_one_row_per_batch_size() {
    let run = Run::new();
    let o = run.ok(&["sweep", "--stub-tau", "0.0005", "--batches", "1,2,4,8,16"]);
    let csv = String::from_utf8(read(&run.out.join("sweep.csv"))).unwrap();
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 1 + 5, "{csv}");
    assert!(o.contains("batch_size"));
    assert!(run.out.join("sweep_tau.dat").exists());
}
