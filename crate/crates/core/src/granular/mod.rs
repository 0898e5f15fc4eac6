//! Six-parameter granular/subtractive synthesis: presets, four-anchor
//! breakpoint envelopes for sound tracing, and an offline renderer.

mod render;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use render::{render_offline, GrainParams};

/// Lower bounds used when clamping fields whose valid range is open at zero.
pub const MIN_DURATION_S: f64 = 1e-3;
pub const MIN_SPEED: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthPreset {
    /// Selection start in the source, seconds.
    pub start_s: f64,
    /// Selection length, seconds.
    pub duration_s: f64,
    /// Read-head rate relative to the source.
    pub speed: f64,
    /// Semitones, independent of speed.
    pub pitch_shift: f64,
    pub cutoff_hz: f64,
    /// Low-pass Q.
    pub resonance: f64,
}

impl SynthPreset {
    pub const FIELDS: [&'static str; 6] = [
        "start_s",
        "duration_s",
        "speed",
        "pitch_shift",
        "cutoff_hz",
        "resonance",
    ];

    pub fn to_array(&self) -> [f64; 6] {
        [
            self.start_s,
            self.duration_s,
            self.speed,
            self.pitch_shift,
            self.cutoff_hz,
            self.resonance,
        ]
    }

    pub fn from_array(v: [f64; 6]) -> Self {
        SynthPreset {
            start_s: v[0],
            duration_s: v[1],
            speed: v[2],
            pitch_shift: v[3],
            cutoff_hz: v[4],
            resonance: v[5],
        }
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        let arr: [f64; 6] = v
            .try_into()
            .map_err(|_| Error::Schema(format!("a preset has 6 parameters, got {}", v.len())))?;
        Ok(Self::from_array(arr))
    }

    fn violations(&self) -> Vec<String> {
        let ok = [
            self.start_s >= 0.0 && self.start_s.is_finite(),
            self.duration_s > 0.0 && self.duration_s.is_finite(),
            self.speed > 0.0 && self.speed.is_finite(),
            (-24.0..=24.0).contains(&self.pitch_shift),
            (20.0..=20000.0).contains(&self.cutoff_hz),
            (0.1..=20.0).contains(&self.resonance),
        ];
        Self::FIELDS
            .iter()
            .zip(ok)
            .filter(|(_, ok)| !ok)
            .map(|(f, _)| f.to_string())
            .collect()
    }

    /// Nearest valid preset. Non-finite fields fall back to the bottom of
    /// their range. With `source_len_s`, the selection is also pulled inside
    /// the source.
    pub fn clamped(&self, source_len_s: Option<f64>) -> Self {
        let c = |v: f64, lo: f64, hi: f64| if v.is_nan() { lo } else { v.clamp(lo, hi) };
        let mut p = SynthPreset {
            start_s: c(self.start_s, 0.0, f64::MAX),
            duration_s: c(self.duration_s, MIN_DURATION_S, f64::MAX),
            speed: c(self.speed, MIN_SPEED, f64::MAX),
            pitch_shift: c(self.pitch_shift, -24.0, 24.0),
            cutoff_hz: c(self.cutoff_hz, 20.0, 20000.0),
            resonance: c(self.resonance, 0.1, 20.0),
        };
        if let Some(len) = source_len_s {
            p.duration_s = p.duration_s.min(len).max(MIN_DURATION_S.min(len));
            p.start_s = p.start_s.min((len - p.duration_s).max(0.0));
        }
        p
    }

    /// Checks that the selection fits in a source of `len_s` seconds.
    pub fn check_selection(&self, len_s: f64) -> Result<()> {
        // relative slack absorbs rounding in spans computed from sample counts
        if self.start_s + self.duration_s > len_s * (1.0 + 1e-12) {
            return Err(Error::Range {
                fields: vec!["start_s".into(), "duration_s".into()],
            });
        }
        Ok(())
    }
}

impl Default for SynthPreset {
    fn default() -> Self {
        SynthPreset {
            start_s: 0.0,
            duration_s: 1.0,
            speed: 1.0,
            pitch_shift: 0.0,
            cutoff_hz: 20000.0,
            resonance: 0.707,
        }
    }
}

/// Returns the candidate if every field is in range, else a range error naming
/// each offending field.
pub fn validate_preset(candidate: SynthPreset) -> Result<SynthPreset> {
    let fields = candidate.violations();
    if fields.is_empty() {
        Ok(candidate)
    } else {
        Err(Error::Range { fields })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    /// Position within the envelope, 0 to 1.
    pub time: f64,
    pub preset: SynthPreset,
}

/// Start, two intermediate points, and end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Anchor>", into = "Vec<Anchor>")]
pub struct AnchorEnvelope {
    anchors: [Anchor; 4],
}

impl AnchorEnvelope {
    pub fn new(anchors: [Anchor; 4]) -> Result<Self> {
        if anchors[0].time != 0.0 || anchors[3].time != 1.0 {
            return Err(Error::param(
                "envelope anchors must start at 0 and end at 1",
            ));
        }
        if anchors.windows(2).any(|w| !(w[1].time > w[0].time)) {
            return Err(Error::param("envelope anchor times must strictly increase"));
        }
        for a in &anchors {
            validate_preset(a.preset)?;
        }
        Ok(AnchorEnvelope { anchors })
    }

    /// Anchors at 0, ⅓, ⅔ and 1.
    pub fn evenly_spaced(presets: [SynthPreset; 4]) -> Result<Self> {
        let times = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        Self::new(std::array::from_fn(|i| Anchor {
            time: times[i],
            preset: presets[i],
        }))
    }

    pub fn anchors(&self) -> &[Anchor; 4] {
        &self.anchors
    }
}

impl TryFrom<Vec<Anchor>> for AnchorEnvelope {
    type Error = Error;

    fn try_from(v: Vec<Anchor>) -> Result<Self> {
        let n = v.len();
        let anchors: [Anchor; 4] = v
            .try_into()
            .map_err(|_| Error::Schema(format!("an envelope has exactly 4 anchors, got {n}")))?;
        Self::new(anchors)
    }
}

impl From<AnchorEnvelope> for Vec<Anchor> {
    fn from(e: AnchorEnvelope) -> Self {
        e.anchors.to_vec()
    }
}

/// Piecewise-linear interpolation between the bracketing anchors; cutoff is
/// interpolated geometrically. Evaluating at an anchor time returns that
/// anchor exactly.
pub fn envelope_eval(env: &AnchorEnvelope, t: f64) -> Result<SynthPreset> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::param(format!(
            "envelope position {t} outside [0, 1]"
        )));
    }
    let a = &env.anchors;
    if let Some(hit) = a.iter().find(|x| x.time == t) {
        return Ok(hit.preset);
    }
    let i = a.windows(2).position(|w| t < w[1].time).unwrap_or(2);
    let (lo, hi) = (&a[i], &a[i + 1]);
    let f = (t - lo.time) / (hi.time - lo.time);
    let (p, q) = (lo.preset.to_array(), hi.preset.to_array());
    let mut v: [f64; 6] = std::array::from_fn(|k| p[k] + (q[k] - p[k]) * f);
    if p[4] != q[4] {
        v[4] = (p[4].ln() + (q[4].ln() - p[4].ln()) * f).exp();
    }
    Ok(SynthPreset::from_array(v))
}

/// Presets sampled from an envelope at a fixed control rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamTimeline {
    pub rate: f64,
    pub presets: Vec<SynthPreset>,
}

impl ParamTimeline {
    pub fn duration_s(&self) -> f64 {
        self.presets.len() as f64 / self.rate
    }

    /// Preset in force at `t` seconds (held between control steps).
    pub fn at(&self, t: f64) -> &SynthPreset {
        let i = (t * self.rate).floor().max(0.0) as usize;
        &self.presets[i.min(self.presets.len() - 1)]
    }
}

/// `⌈duration·rate⌉` presets spread evenly from the first anchor to the last.
pub fn envelope_to_timeline(
    env: &AnchorEnvelope,
    duration_s: f64,
    rate: f64,
) -> Result<ParamTimeline> {
    if !(duration_s > 0.0 && duration_s.is_finite() && rate > 0.0 && rate.is_finite()) {
        return Err(Error::param("timeline duration and rate must be positive"));
    }
    let n = (duration_s * rate).ceil() as usize;
    let presets = (0..n)
        .map(|i| {
            let t = if n == 1 {
                0.0
            } else {
                i as f64 / (n - 1) as f64
            };
            envelope_eval(env, t)
        })
        .collect::<Result<_>>()?;
    Ok(ParamTimeline { rate, presets })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn preset(speed: f64, cutoff_hz: f64) -> SynthPreset {
        SynthPreset {
            speed,
            cutoff_hz,
            resonance: 1.0,
            ..Default::default()
        }
    }

    fn env(speeds: [f64; 4], cutoffs: [f64; 4]) -> AnchorEnvelope {
        AnchorEnvelope::evenly_spaced(std::array::from_fn(|i| preset(speeds[i], cutoffs[i])))
            .unwrap()
    }

    #[test]
    fn validation_names_fields() {
        assert!(validate_preset(preset(1.0, 1000.0)).is_ok());
        let e = validate_preset(preset(1.0, 5.0)).unwrap_err();
        assert!(matches!(e, Error::Range { ref fields } if fields == &["cutoff_hz"]));
        let bad = SynthPreset {
            duration_s: 0.0,
            pitch_shift: 30.0,
            ..preset(1.0, 1000.0)
        };
        let e = validate_preset(bad).unwrap_err();
        assert!(
            matches!(e, Error::Range { ref fields } if fields == &["duration_s", "pitch_shift"])
        );
    }

    #[test]
    fn clamping_produces_valid_presets() {
        let wild = SynthPreset::from_array([-3.0, f64::NAN, 0.0, 99.0, 1e9, 0.0]);
        let c = wild.clamped(Some(2.0));
        assert!(validate_preset(c).is_ok());
        assert!(c.check_selection(2.0).is_ok());
        let long = SynthPreset {
            start_s: 1.5,
            duration_s: 1.0,
            ..Default::default()
        }
        .clamped(Some(2.0));
        assert!(long.start_s + long.duration_s <= 2.0);
    }

    #[test]
    fn endpoints_exact() {
        let e = env([1.0, 2.0, 3.0, 4.0], [100.0, 200.0, 300.0, 4000.0]);
        assert_eq!(envelope_eval(&e, 0.0).unwrap(), e.anchors()[0].preset);
        assert_eq!(envelope_eval(&e, 1.0).unwrap(), e.anchors()[3].preset);
        assert!(envelope_eval(&e, 1.5).is_err());
    }

    #[test]
    fn linear_and_log_interpolation() {
        let e = env([1.0, 2.0, 3.0, 4.0], [100.0, 400.0, 400.0, 400.0]);
        assert!((envelope_eval(&e, 0.5).unwrap().speed - 2.5).abs() < 1e-12);
        let mid = envelope_eval(&e, 1.0 / 6.0).unwrap().cutoff_hz;
        assert!((mid - 200.0).abs() < 1e-9, "{mid}");
    }

    #[test]
    fn anchors_must_be_monotone() {
        let p = preset(1.0, 1000.0);
        let bad = [0.0, 0.5, 0.5, 1.0].map(|time| Anchor { time, preset: p });
        assert!(AnchorEnvelope::new(bad).is_err());
        let json = serde_json::to_string(&vec![Anchor {
            time: 0.0,
            preset: p,
        }])
        .unwrap();
        assert!(serde_json::from_str::<AnchorEnvelope>(&json).is_err());
    }

    #[test]
    fn timeline_shape() {
        let e = env([1.0, 2.0, 3.0, 4.0], [100.0, 200.0, 300.0, 4000.0]);
        let tl = envelope_to_timeline(&e, 1.0, 10.0).unwrap();
        assert_eq!(tl.presets.len(), 10);
        assert_eq!(tl.presets[0], e.anchors()[0].preset);
        assert_eq!(tl.presets[9], e.anchors()[3].preset);
        let flat = env([2.0; 4], [500.0; 4]);
        let tl = envelope_to_timeline(&flat, 0.75, 40.0).unwrap();
        assert!(tl.presets.iter().all(|p| *p == flat.anchors()[0].preset));
    }

    #[test]
    fn preset_json_field_names() {
        let v: serde_json::Value = serde_json::to_value(SynthPreset::default()).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        for f in SynthPreset::FIELDS {
            assert!(keys.contains(&f));
        }
    }
}
