//! Per-unit audio descriptors: duration, then mean and standard deviation
//! across analysis frames of pitch, energy, periodicity, lag-1
//! autocorrelation, loudness, and four spectral moments.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::Span;
use crate::error::{Error, Result};
use crate::ingest::AudioBuffer;

pub const DESCRIPTOR_LEN: usize = 19;

pub type Descriptor = [f64; DESCRIPTOR_LEN];

pub const DESCRIPTOR_NAMES: [&str; DESCRIPTOR_LEN] = [
    "duration",
    "frequency_mean",
    "frequency_std",
    "energy_mean",
    "energy_std",
    "periodicity_mean",
    "periodicity_std",
    "ac1_mean",
    "ac1_std",
    "loudness_mean",
    "loudness_std",
    "centroid_mean",
    "centroid_std",
    "spread_mean",
    "spread_std",
    "skewness_mean",
    "skewness_std",
    "kurtosis_mean",
    "kurtosis_std",
];

/// Spectral magnitudes are reduced by this level relative to the frame's
/// strongest bin before the spectral moments, so bins below it drop out. Without the gate, skewness and kurtosis of tonal
/// frames are dominated by window leakage 100 dB down and jitter from frame
/// to frame.
pub const SPECTRAL_FLOOR_DB: f64 = -60.0;

/// Pitch search range.
pub const PITCH_MIN_HZ: f64 = 50.0;
pub const PITCH_MAX_HZ: f64 = 2000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisParams {
    pub frame_ms: f64,
    pub hop_ms: f64,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        AnalysisParams {
            frame_ms: 46.0,
            hop_ms: 23.0,
        }
    }
}

impl AnalysisParams {
    pub(crate) fn frame_and_hop(&self, sample_rate: u32) -> Result<(usize, usize)> {
        if !(self.frame_ms > 0.0 && self.hop_ms > 0.0 && self.frame_ms >= self.hop_ms) {
            return Err(Error::param(
                "analysis frame must be positive and at least the hop",
            ));
        }
        let sr = sample_rate as f64;
        let frame = (self.frame_ms * sr / 1000.0).round() as usize;
        let hop = ((self.hop_ms * sr / 1000.0).round() as usize).max(1);
        if frame < 4 {
            return Err(Error::param("analysis frame is shorter than 4 samples"));
        }
        Ok((frame, hop))
    }
}

/// Reusable FFT plans and the analysis window for one frame size.
pub(crate) struct Analyzer {
    frame: usize,
    sample_rate: f64,
    window: Vec<f64>,
    spectrum_fft: Arc<dyn Fft<f64>>,
    corr_fft: Arc<dyn Fft<f64>>,
    corr_ifft: Arc<dyn Fft<f64>>,
    corr_len: usize,
}

#[derive(Debug, Clone, Copy, Default)]
struct FrameMeasures {
    frequency: f64,
    energy: f64,
    periodicity: f64,
    ac1: f64,
    loudness: f64,
    centroid: f64,
    spread: f64,
    skewness: f64,
    kurtosis: f64,
}

impl FrameMeasures {
    fn to_array(self) -> [f64; 9] {
        [
            self.frequency,
            self.energy,
            self.periodicity,
            self.ac1,
            self.loudness,
            self.centroid,
            self.spread,
            self.skewness,
            self.kurtosis,
        ]
    }
}

impl Analyzer {
    pub(crate) fn new(frame: usize, sample_rate: u32) -> Self {
        let mut planner = FftPlanner::new();
        let corr_len = (2 * frame).next_power_of_two();
        Analyzer {
            frame,
            sample_rate: sample_rate as f64,
            window: (0..frame)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / frame as f64).cos())
                .collect(),
            spectrum_fft: planner.plan_fft_forward(frame),
            corr_fft: planner.plan_fft_forward(corr_len),
            corr_ifft: planner.plan_fft_inverse(corr_len),
            corr_len,
        }
    }

    fn measure(&self, x: &[f64]) -> FrameMeasures {
        let n = x.len();
        let energy = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let loudness = 10.0 * (energy + 1e-12).log10();
        if energy == 0.0 {
            return FrameMeasures {
                loudness,
                ..Default::default()
            };
        }
        let (frequency, periodicity) = self.pitch(x);
        let ac1 = x.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / (energy * n as f64);
        let (centroid, spread, skewness, kurtosis) = self.moments(x);
        FrameMeasures {
            frequency,
            energy,
            periodicity,
            ac1,
            loudness,
            centroid,
            spread,
            skewness,
            kurtosis,
        }
    }

    /// Normalized autocorrelation pitch: the first lag whose correlation
    /// reaches 90% of the best peak in range, refined by a parabola.
    fn pitch(&self, x: &[f64]) -> (f64, f64) {
        let n = x.len();
        let mut buf: Vec<Complex<f64>> = x.iter().map(|v| Complex::new(*v, 0.0)).collect();
        buf.resize(self.corr_len, Complex::new(0.0, 0.0));
        self.corr_fft.process(&mut buf);
        for c in &mut buf {
            *c = Complex::new(c.norm_sqr(), 0.0);
        }
        self.corr_ifft.process(&mut buf);
        let scale = 1.0 / self.corr_len as f64;

        let mut prefix = vec![0.0; n + 1];
        for i in 0..n {
            prefix[i + 1] = prefix[i] + x[i] * x[i];
        }
        let min_lag = ((self.sample_rate / PITCH_MAX_HZ).floor() as usize).max(1);
        let max_lag = ((self.sample_rate / PITCH_MIN_HZ).ceil() as usize).min(n / 2);
        if max_lag < min_lag + 2 {
            return (0.0, 0.0);
        }
        // one lag of margin on each side for peak picking
        let lo = min_lag - 1;
        let r: Vec<f64> = (lo..=max_lag + 1)
            .map(|lag| {
                let head = prefix[n - lag];
                let tail = prefix[n] - prefix[lag];
                let denom = (head * tail).sqrt();
                if denom > 0.0 {
                    buf[lag].re * scale / denom
                } else {
                    0.0
                }
            })
            .collect();
        let peaks: Vec<usize> = (1..r.len() - 1)
            .filter(|&i| r[i] > r[i - 1] && r[i] >= r[i + 1])
            .collect();
        let Some(best) = peaks.iter().map(|&i| r[i]).reduce(f64::max) else {
            return (0.0, 0.0);
        };
        if best <= 0.0 {
            return (0.0, 0.0);
        }
        let i = *peaks.iter().find(|&&i| r[i] >= 0.9 * best).unwrap();
        let (a, b, c) = (r[i - 1], r[i], r[i + 1]);
        let denom = a - 2.0 * b + c;
        let offset = if denom != 0.0 {
            (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        let lag = (lo + i) as f64 + offset;
        (self.sample_rate / lag, b.clamp(0.0, 1.0))
    }

    /// Centroid, spread, skewness and kurtosis of the Hann-windowed
    /// magnitude spectrum, DC to Nyquist, less the floor.
    fn moments(&self, x: &[f64]) -> (f64, f64, f64, f64) {
        let mut buf: Vec<Complex<f64>> = x
            .iter()
            .zip(&self.window)
            .map(|(v, w)| Complex::new(v * w, 0.0))
            .collect();
        self.spectrum_fft.process(&mut buf);
        let bins = self.frame / 2 + 1;
        let hz = self.sample_rate / self.frame as f64;
        let mut mags: Vec<f64> = buf[..bins].iter().map(|c| c.norm()).collect();
        let gate = mags.iter().cloned().fold(0.0, f64::max) * 10f64.powf(SPECTRAL_FLOOR_DB / 20.0);
        // subtracting the floor keeps the moments continuous as bins cross it
        for m in &mut mags {
            *m = (*m - gate).max(0.0);
        }
        let total: f64 = mags.iter().sum();
        if total <= 0.0 {
            return (0.0, 0.0, 0.0, 0.0);
        }
        let centroid = mags
            .iter()
            .enumerate()
            .map(|(k, m)| k as f64 * hz * m)
            .sum::<f64>()
            / total;
        let central = |p: i32| {
            mags.iter()
                .enumerate()
                .map(|(k, m)| (k as f64 * hz - centroid).powi(p) * m)
                .sum::<f64>()
                / total
        };
        let var = central(2);
        let spread = var.sqrt();
        if spread <= 0.0 {
            return (centroid, 0.0, 0.0, 0.0);
        }
        (
            centroid,
            spread,
            central(3) / spread.powi(3),
            central(4) / (var * var),
        )
    }
}

/// Descriptor for one span of a buffer, mixed to mono. The span must hold at
/// least two analysis frames.
pub fn analyze_unit(
    buffer: &AudioBuffer,
    span: Span,
    analysis: AnalysisParams,
) -> Result<Descriptor> {
    let (frame, hop) = analysis.frame_and_hop(buffer.sample_rate)?;
    let mono: Vec<f64> = buffer.to_mono().into_iter().map(f64::from).collect();
    analyze_samples(&Analyzer::new(frame, buffer.sample_rate), &mono, span, hop)
}

pub(crate) fn analyze_samples(
    analyzer: &Analyzer,
    mono: &[f64],
    span: Span,
    hop: usize,
) -> Result<Descriptor> {
    if span.len == 0 || span.start + span.len > mono.len() {
        return Err(Error::Range {
            fields: vec!["span".into()],
        });
    }
    let frame = analyzer.frame;
    if span.len < frame + hop {
        return Err(Error::insufficient(format!(
            "unit of {} samples is shorter than two analysis frames",
            span.len
        )));
    }
    let unit = &mono[span.start..span.start + span.len];
    let frames: Vec<[f64; 9]> = (0..=(span.len - frame) / hop)
        .map(|i| analyzer.measure(&unit[i * hop..i * hop + frame]).to_array())
        .collect();
    let n = frames.len() as f64;
    let mut out = [0.0; DESCRIPTOR_LEN];
    out[0] = span.len as f64 / analyzer.sample_rate;
    for k in 0..9 {
        let mean = frames.iter().map(|f| f[k]).sum::<f64>() / n;
        let var = frames.iter().map(|f| (f[k] - mean).powi(2)).sum::<f64>() / n;
        out[1 + 2 * k] = mean;
        out[2 + 2 * k] = var.sqrt();
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("descriptor has non-finite values".into()));
    }
    Ok(out)
}
