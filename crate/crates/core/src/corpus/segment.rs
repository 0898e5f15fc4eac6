use serde::{Deserialize, Serialize};

use super::Span;
use crate::error::{Error, Result};
use crate::ingest::AudioBuffer;

/// How far back the running median looks, in milliseconds.
const MEDIAN_HISTORY_MS: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentParams {
    pub frame_ms: f64,
    pub hop_ms: f64,
    /// Frame energy must exceed this multiple of the recent median.
    pub threshold_ratio: f64,
    pub min_unit_ms: f64,
    /// Frames quieter than this never start a unit.
    pub floor_db: f64,
}

impl Default for SegmentParams {
    fn default() -> Self {
        SegmentParams {
            frame_ms: 20.0,
            hop_ms: 10.0,
            threshold_ratio: 4.0,
            min_unit_ms: 50.0,
            floor_db: -60.0,
        }
    }
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

/// Onset-to-onset units of a buffer (mixed to mono).
///
/// An onset is a frame whose mean-square energy crosses above both the
/// absolute floor and `threshold_ratio` times the median energy of the
/// preceding half second, coming from a frame that did not. Each unit runs to
/// the next onset, the last to the end of the buffer. Units shorter than
/// `min_unit_ms` are merged into the following unit (the last into the one
/// before). Silence yields no units.
pub fn segment_onsets(buffer: &AudioBuffer, params: SegmentParams) -> Result<Vec<Span>> {
    buffer.validate()?;
    if buffer.is_empty() {
        return Err(Error::EmptyInput("cannot segment an empty buffer".into()));
    }
    if !(params.frame_ms > 0.0 && params.hop_ms > 0.0 && params.frame_ms >= params.hop_ms) {
        return Err(Error::param(
            "segmentation frame must be positive and at least the hop",
        ));
    }
    if !(params.threshold_ratio >= 1.0) || !(params.min_unit_ms >= 0.0) {
        return Err(Error::param(
            "threshold ratio must be ≥ 1 and minimum unit length ≥ 0",
        ));
    }
    let sr = buffer.sample_rate as f64;
    let mono = buffer.to_mono();
    let frame = ((params.frame_ms * sr / 1000.0).round() as usize).max(1);
    let hop = ((params.hop_ms * sr / 1000.0).round() as usize).max(1);
    let history = ((MEDIAN_HISTORY_MS / params.hop_ms).round() as usize).max(1);
    let floor = 10f64.powf(params.floor_db / 10.0);

    let energies: Vec<f64> = (0..mono.len())
        .step_by(hop)
        .map(|s| {
            let chunk = &mono[s..(s + frame).min(mono.len())];
            chunk.iter().map(|v| (*v as f64).powi(2)).sum::<f64>() / frame as f64
        })
        .collect();

    let mut onsets = Vec::new();
    let mut above = false;
    let mut scratch = Vec::with_capacity(history);
    for (i, &e) in energies.iter().enumerate() {
        scratch.clear();
        scratch.extend_from_slice(&energies[i.saturating_sub(history)..i]);
        let now = e > floor && e > params.threshold_ratio * median(&mut scratch);
        if now && !above {
            onsets.push(i * hop);
        }
        above = now;
    }

    let min_len = (params.min_unit_ms * sr / 1000.0).round() as usize;
    let mut spans: Vec<Span> = onsets
        .iter()
        .enumerate()
        .map(|(k, &s)| Span {
            start: s,
            len: onsets.get(k + 1).copied().unwrap_or(mono.len()) - s,
        })
        .collect();
    let mut k = 0;
    while k + 1 < spans.len() {
        if spans[k].len < min_len {
            let next = spans.remove(k + 1);
            spans[k].len += next.len;
        } else {
            k += 1;
        }
    }
    if spans.len() >= 2 && spans[spans.len() - 1].len < min_len {
        let last = spans.pop().unwrap();
        spans.last_mut().unwrap().len += last.len;
    }
    Ok(spans)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn silence_has_no_units() {
        let b = AudioBuffer::mono(8000, vec![0.0; 8000]);
        assert!(segment_onsets(&b, SegmentParams::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn units_tile_from_first_onset() {
        let mut s = vec![0.0f32; 16000];
        for i in 2000..2800 {
            s[i] = 0.5;
        }
        for i in 10000..10800 {
            s[i] = -0.5;
        }
        let spans = segment_onsets(&AudioBuffer::mono(8000, s), SegmentParams::default()).unwrap();
        assert_eq!(spans.len(), 2);
        assert_eq!(spans[0].start + spans[0].len, spans[1].start);
        assert_eq!(spans[1].start + spans[1].len, 16000);
    }

    #[test]
    fn short_units_merge_forward() {
        let mut s = vec![0.0f32; 8000];
        // clicks 40 ms apart, then one well separated
        for c in [1000, 1320, 1640, 4000] {
            for v in &mut s[c..c + 8] {
                *v = 0.9;
            }
        }
        let p = SegmentParams {
            min_unit_ms: 100.0,
            ..Default::default()
        };
        let spans = segment_onsets(&AudioBuffer::mono(8000, s), p).unwrap();
        assert_eq!(spans.len(), 2);
        assert!(spans.iter().all(|s| s.len >= 800));
    }
}
