//! Mono WAV (RIFF) audio, 16-bit PCM or 32-bit float.

use std::path::Path;

use super::AudioSignal;
use crate::error::{Error, Result};
use crate::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WavEncoding {
    Pcm16,
    Float32,
}

fn map_err(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::Io(io),
        hound::Error::Unsupported => Error::UnsupportedAudio(format!("{}: unsupported WAV encoding", path.display())),
        other => Error::Format { what: "WAV file", path: path.to_path_buf(), reason: other.to_string() },
    }
}

pub fn read<T: Scalar>(path: impl AsRef<Path>) -> Result<AudioSignal<T>> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| map_err(path, e))?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::UnsupportedAudio(format!(
            "{}: {} channels, only mono is supported",
            path.display(),
            spec.channels
        )));
    }
    let samples: Vec<T> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| T::lit(v as f64 / 32768.0)))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| map_err(path, e))?,
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| T::lit(v as f64)))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| map_err(path, e))?,
        (fmt, bits) => {
            return Err(Error::UnsupportedAudio(format!(
                "{}: {bits}-bit {fmt:?} samples, expected 16-bit PCM or 32-bit float",
                path.display()
            )))
        }
    };
    AudioSignal::new(samples, spec.sample_rate as f64)
}

pub fn write<T: Scalar>(path: impl AsRef<Path>, a: &AudioSignal<T>, encoding: WavEncoding) -> Result<()> {
    let path = path.as_ref();
    let rate = a.sample_rate_hz();
    if rate.fract() != 0.0 || rate > u32::MAX as f64 {
        return Err(Error::UnsupportedAudio(format!("WAV needs a whole-Hz sample rate, got {rate}")));
    }
    let (bits, format) = match encoding {
        WavEncoding::Pcm16 => (16, hound::SampleFormat::Int),
        WavEncoding::Float32 => (32, hound::SampleFormat::Float),
    };
    let spec = hound::WavSpec { channels: 1, sample_rate: rate as u32, bits_per_sample: bits, sample_format: format };
    let mut w = hound::WavWriter::create(path, spec).map_err(|e| map_err(path, e))?;
    for &s in a.samples() {
        let r = match encoding {
            WavEncoding::Pcm16 => {
                let v = (s.as_f64() * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                w.write_sample(v)
            }
            WavEncoding::Float32 => w.write_sample(s.as_f64() as f32),
        };
        r.map_err(|e| map_err(path, e))?;
    }
    w.finalize().map_err(|e| map_err(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone() -> AudioSignal<f64> {
        let s = (0..8000).map(|n| 0.8 * (2.0 * std::f64::consts::PI * 440.0 * n as f64 / 8000.0).sin()).collect();
        AudioSignal::new(s, 8000.0).unwrap()
    }

    #[test]
    fn pcm16_round_trip_within_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.wav");
        let a = tone();
        write(&p, &a, WavEncoding::Pcm16).unwrap();
        let b: AudioSignal<f64> = read(&p).unwrap();
        assert_eq!(b.len(), 8000);
        assert_eq!(b.sample_rate_hz(), 8000.0);
        let err = a.samples().iter().zip(b.samples()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(err <= 1.0 / 32768.0);
    }

    #[test]
    fn float_round_trip_is_bit_stable() {
        let dir = tempfile::tempdir().unwrap();
        let (p, q) = (dir.path().join("a.wav"), dir.path().join("b.wav"));
        let a = tone().cast::<f32>();
        write(&p, &a, WavEncoding::Float32).unwrap();
        let b: AudioSignal<f32> = read(&p).unwrap();
        assert_eq!(a, b);
        write(&q, &b, WavEncoding::Float32).unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&q).unwrap());
    }

    #[test]
    fn malformed_and_stereo_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.wav");
        std::fs::write(&p, b"RIFF\x10\0\0\0WAVEjunk").unwrap();
        assert!(read::<f32>(&p).is_err());

        let s = dir.path().join("stereo.wav");
        let spec = hound::WavSpec { channels: 2, sample_rate: 8000, bits_per_sample: 16, sample_format: hound::SampleFormat::Int };
        let mut w = hound::WavWriter::create(&s, spec).unwrap();
        w.write_sample(0i16).unwrap();
        w.write_sample(0i16).unwrap();
        w.finalize().unwrap();
        let err = read::<f32>(&s).unwrap_err();
        assert!(err.to_string().contains("mono"));
    }
}
