use std::io::Cursor;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::AudioBuffer;
use crate::error::{Error, Result};

/// Decodes RIFF PCM WAV (16 or 24 bit, mono or stereo) into floats in [-1, 1].
pub fn read_wav(bytes: &[u8]) -> Result<AudioBuffer> {
    let reader = WavReader::new(Cursor::new(bytes)).map_err(wav_err)?;
    let spec = reader.spec();
    if spec.sample_format != SampleFormat::Int {
        return Err(Error::UnsupportedFormat(
            "floating-point WAV; expected PCM".into(),
        ));
    }
    if !matches!(spec.bits_per_sample, 16 | 24) {
        return Err(Error::UnsupportedFormat(format!(
            "{}-bit PCM; expected 16 or 24",
            spec.bits_per_sample
        )));
    }
    if !matches!(spec.channels, 1 | 2) {
        return Err(Error::UnsupportedFormat(format!(
            "{} channels; expected 1 or 2",
            spec.channels
        )));
    }
    let scale = 1.0 / (1u32 << (spec.bits_per_sample - 1)) as f32;
    let n_channels = spec.channels as usize;
    let mut channels = vec![Vec::with_capacity(reader.len() as usize / n_channels); n_channels];
    for (i, sample) in reader.into_samples::<i32>().enumerate() {
        channels[i % n_channels].push(sample.map_err(wav_err)? as f32 * scale);
    }
    let buffer = AudioBuffer {
        sample_rate: spec.sample_rate,
        channels,
    };
    buffer.validate()?;
    Ok(buffer)
}

/// Encodes `buffer` as PCM WAV at 16 or 24 bits. Samples are clipped to [-1, 1].
pub fn write_wav(buffer: &AudioBuffer, bits_per_sample: u16) -> Result<Vec<u8>> {
    if !matches!(bits_per_sample, 16 | 24) {
        return Err(Error::UnsupportedFormat(format!(
            "{bits_per_sample}-bit output"
        )));
    }
    buffer.validate()?;
    let spec = WavSpec {
        channels: buffer.channels.len() as u16,
        sample_rate: buffer.sample_rate,
        bits_per_sample,
        sample_format: SampleFormat::Int,
    };
    let full_scale = (1i32 << (bits_per_sample - 1)) as f32;
    let mut out = Cursor::new(Vec::new());
    {
        let mut writer = WavWriter::new(&mut out, spec).map_err(wav_err)?;
        for i in 0..buffer.len() {
            for ch in &buffer.channels {
                let v = (ch[i].clamp(-1.0, 1.0) * full_scale)
                    .round()
                    .min(full_scale - 1.0) as i32;
                writer.write_sample(v).map_err(wav_err)?;
            }
        }
        writer.finalize().map_err(wav_err)?;
    }
    Ok(out.into_inner())
}

fn wav_err(e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::Io(io),
        hound::Error::Unsupported => Error::UnsupportedFormat("unsupported WAV encoding".into()),
        other => Error::UnsupportedFormat(other.to_string()),
    }
}
