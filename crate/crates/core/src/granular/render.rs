use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{validate_preset, ParamTimeline};
use crate::error::{Error, Result};
use crate::ingest::AudioBuffer;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrainParams {
    pub size_ms: f64,
    /// Grains sounding at once; the hop is `size / overlap`.
    pub overlap: usize,
}

impl Default for GrainParams {
    fn default() -> Self {
        GrainParams {
            size_ms: 100.0,
            overlap: 4,
        }
    }
}

/// Topology-preserving state-variable low-pass.
struct LowPass {
    a1: f64,
    a2: f64,
    a3: f64,
    ic1: f64,
    ic2: f64,
}

impl LowPass {
    fn new() -> Self {
        LowPass {
            a1: 0.0,
            a2: 0.0,
            a3: 0.0,
            ic1: 0.0,
            ic2: 0.0,
        }
    }

    fn tune(&mut self, cutoff_hz: f64, q: f64, rate: f64) {
        let g = (PI * cutoff_hz.min(0.49 * rate) / rate).tan();
        let k = 1.0 / q;
        self.a1 = 1.0 / (1.0 + g * (g + k));
        self.a2 = g * self.a1;
        self.a3 = g * self.a2;
    }

    fn process(&mut self, x: f64) -> f64 {
        let v3 = x - self.ic2;
        let v1 = self.a1 * self.ic1 + self.a2 * v3;
        let v2 = self.ic2 + self.a2 * self.ic1 + self.a3 * v3;
        self.ic1 = 2.0 * v1 - self.ic1;
        self.ic2 = 2.0 * v2 - self.ic2;
        v2
    }
}

/// Renders `timeline` against `source` with overlapping Hann grains.
///
/// Each grain reads from the current selection `[start, start + duration)`,
/// wrapping at its end. The read head moves by `speed` source samples per
/// output sample between grains, while samples inside a grain are read at a
/// step of `2^(pitch/12)`, so speed and pitch are independent. The summed
/// grains pass through a resonant low-pass retuned at each control step. The
/// result is scaled down only if it would clip.
pub fn render_offline(
    source: &AudioBuffer,
    timeline: &ParamTimeline,
    grain: GrainParams,
) -> Result<AudioBuffer> {
    source.validate()?;
    if source.is_empty() {
        return Err(Error::EmptyInput("source buffer is empty".into()));
    }
    if timeline.presets.is_empty() || !(timeline.rate > 0.0) {
        return Err(Error::param(
            "timeline needs a positive rate and at least one preset",
        ));
    }
    if !(10.0..=500.0).contains(&grain.size_ms) || !(1..=8).contains(&grain.overlap) {
        return Err(Error::param("grain size must be 10–500 ms and overlap 1–8"));
    }
    let len_s = source.duration_s();
    for p in &timeline.presets {
        validate_preset(*p)?;
        p.check_selection(len_s)?;
    }

    let sr = source.sample_rate as f64;
    let out_len = (timeline.duration_s() * sr).round() as usize;
    let hop = ((grain.size_ms * sr / 1000.0) as usize / grain.overlap).max(1);
    let size = hop * grain.overlap;
    let window: Vec<f64> = (0..size)
        .map(|j| 0.5 - 0.5 * (2.0 * PI * j as f64 / size as f64).cos())
        .collect();
    let gain = if grain.overlap >= 2 {
        2.0 / grain.overlap as f64
    } else {
        1.0
    };

    let channels = source
        .channels
        .iter()
        .map(|input| {
            let mut out = vec![0.0f64; out_len];
            // the first grains start before t = 0 so every output sample is fully covered
            let lead = (size - hop) as i64;
            let mut grain_start = -lead;
            let first = timeline.at(0.0);
            let mut phase = -(lead as f64) * first.speed;
            while grain_start < out_len as i64 {
                let centre = (grain_start + size as i64 / 2).clamp(0, out_len.max(1) as i64 - 1);
                let p = timeline.at(centre as f64 / sr);
                let sel_start = p.start_s * sr;
                let sel_len = (p.duration_s * sr).max(1.0);
                phase = phase.rem_euclid(sel_len);
                let ratio = 2f64.powf(p.pitch_shift / 12.0);
                for (j, w) in window.iter().enumerate() {
                    let o = grain_start + j as i64;
                    if o < 0 || o >= out_len as i64 {
                        continue;
                    }
                    let pos = sel_start + (phase + j as f64 * ratio).rem_euclid(sel_len);
                    out[o as usize] += gain * w * read(input, pos);
                }
                phase += p.speed * hop as f64;
                grain_start += hop as i64;
            }

            let mut filter = LowPass::new();
            let mut step = usize::MAX;
            for (n, v) in out.iter_mut().enumerate() {
                let s = ((n as f64 * timeline.rate / sr) as usize).min(timeline.presets.len() - 1);
                if s != step {
                    let p = &timeline.presets[s];
                    filter.tune(p.cutoff_hz, p.resonance, sr);
                    step = s;
                }
                *v = filter.process(*v);
            }
            out
        })
        .collect::<Vec<_>>();

    let peak = channels
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if peak > 1.0 { 1.0 / peak } else { 1.0 };
    let out = AudioBuffer {
        sample_rate: source.sample_rate,
        channels: channels
            .into_iter()
            .map(|c| {
                c.into_iter()
                    .map(|v| (v * scale) as f32)
                    .map(|v| v.clamp(-1.0, 1.0))
                    .collect()
            })
            .collect(),
    };
    Ok(out)
}

fn read(x: &[f32], pos: f64) -> f64 {
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    let last = x.len() - 1;
    let a = x[i.min(last)] as f64;
    let b = x[(i + 1).min(last)] as f64;
    a + (b - a) * frac
}
