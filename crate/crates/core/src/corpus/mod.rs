//! Corpus-based concatenative synthesis: onset segmentation, unit
//! descriptors, nearest-unit retrieval, and crossfaded playback.

mod descriptors;
mod segment;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ingest::{read_wav, AudioBuffer};

pub use descriptors::{
    analyze_unit, AnalysisParams, Descriptor, DESCRIPTOR_LEN, DESCRIPTOR_NAMES, PITCH_MAX_HZ,
    PITCH_MIN_HZ, SPECTRAL_FLOOR_DB,
};
pub use segment::{segment_onsets, SegmentParams};

use descriptors::{analyze_samples, Analyzer};

pub const CORPUS_FORMAT_VERSION: u32 = 1;

/// Smallest standard deviation used for z-scoring.
pub const STD_FLOOR: f64 = 1e-9;

/// Sample range `[start, start + len)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioUnit {
    pub source_id: String,
    pub span: Span,
    pub descriptor: Descriptor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceEntry {
    pub id: String,
    /// WAV file the source was read from, if any.
    pub path: Option<PathBuf>,
    /// SHA-256 of the WAV file, or of the little-endian samples for
    /// in-memory sources.
    pub sha256: String,
    pub sample_rate: u32,
    pub frames: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: Descriptor,
    pub std: Descriptor,
}

impl Normalization {
    fn fit(units: &[AudioUnit]) -> Self {
        let n = units.len().max(1) as f64;
        let mut mean = [0.0; DESCRIPTOR_LEN];
        let mut std = [0.0; DESCRIPTOR_LEN];
        for k in 0..DESCRIPTOR_LEN {
            mean[k] = units.iter().map(|u| u.descriptor[k]).sum::<f64>() / n;
            let var = units
                .iter()
                .map(|u| (u.descriptor[k] - mean[k]).powi(2))
                .sum::<f64>()
                / n;
            std[k] = var.sqrt().max(STD_FLOOR);
        }
        Normalization { mean, std }
    }

    pub fn apply(&self, d: &[f64]) -> Descriptor {
        std::array::from_fn(|k| (d[k] - self.mean[k]) / self.std[k])
    }
}

/// Analyzed units with their z-score statistics and source registry. Audio
/// is held in memory but not serialized; [`Corpus::load`] re-reads it from
/// the recorded paths.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Corpus {
    version: u32,
    units: Vec<AudioUnit>,
    normalization: Normalization,
    sources: Vec<SourceEntry>,
    skipped: usize,
    #[serde(skip)]
    scaled: Vec<Descriptor>,
    #[serde(skip)]
    audio: HashMap<String, AudioBuffer>,
}

/// Summary figures for a built corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub units: usize,
    pub mean_duration_s: f64,
    pub skipped: usize,
}

/// A buffer to add to a corpus, optionally backed by a file on disk.
#[derive(Debug, Clone)]
pub struct SourceAudio {
    pub id: String,
    pub path: Option<PathBuf>,
    pub sha256: String,
    pub buffer: AudioBuffer,
}

impl SourceAudio {
    pub fn in_memory(id: impl Into<String>, buffer: AudioBuffer) -> Self {
        let mut h = Sha256::new();
        for c in &buffer.channels {
            for s in c {
                h.update(s.to_le_bytes());
            }
        }
        SourceAudio {
            id: id.into(),
            path: None,
            sha256: hex::encode(h.finalize()),
            buffer,
        }
    }

    pub fn from_wav_file(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        let buffer = read_wav(&bytes)?;
        Ok(SourceAudio {
            id: path.to_string_lossy().into_owned(),
            path: Some(path.to_path_buf()),
            sha256: hex::encode(Sha256::digest(&bytes)),
            buffer,
        })
    }
}

/// Segments and analyzes every source. Units too short to analyze are
/// skipped and counted; any other analysis failure aborts the build.
pub fn build_corpus(
    sources: Vec<SourceAudio>,
    segmentation: SegmentParams,
    analysis: AnalysisParams,
) -> Result<Corpus> {
    if sources.is_empty() {
        return Err(Error::EmptyInput(
            "no sources to build a corpus from".into(),
        ));
    }
    let mut seen = std::collections::HashSet::new();
    for s in &sources {
        if !seen.insert(&s.id) {
            return Err(Error::Registry(format!("duplicate source id {:?}", s.id)));
        }
        s.buffer.validate()?;
    }
    let mut units = Vec::new();
    let mut skipped = 0;
    for s in &sources {
        let spans = segment_onsets(&s.buffer, segmentation)?;
        let (frame, hop) = analysis.frame_and_hop(s.buffer.sample_rate)?;
        let analyzer = Analyzer::new(frame, s.buffer.sample_rate);
        let mono: Vec<f64> = s.buffer.to_mono().into_iter().map(f64::from).collect();
        let results: Vec<Result<Descriptor>> = spans
            .par_iter()
            .map(|span| analyze_samples(&analyzer, &mono, *span, hop))
            .collect();
        for (span, r) in spans.into_iter().zip(results) {
            match r {
                Ok(descriptor) => units.push(AudioUnit {
                    source_id: s.id.clone(),
                    span,
                    descriptor,
                }),
                Err(Error::InsufficientData(_)) => skipped += 1,
                Err(e) => return Err(e),
            }
        }
    }
    if skipped > 0 {
        log::warn!("skipped {skipped} units too short to analyze");
    }
    let entries = sources
        .iter()
        .map(|s| SourceEntry {
            id: s.id.clone(),
            path: s.path.clone(),
            sha256: s.sha256.clone(),
            sample_rate: s.buffer.sample_rate,
            frames: s.buffer.len(),
        })
        .collect();
    let audio = sources.into_iter().map(|s| (s.id, s.buffer)).collect();
    Ok(Corpus::assemble(units, entries, skipped, audio))
}

impl Corpus {
    fn assemble(
        units: Vec<AudioUnit>,
        sources: Vec<SourceEntry>,
        skipped: usize,
        audio: HashMap<String, AudioBuffer>,
    ) -> Self {
        let normalization = Normalization::fit(&units);
        let scaled = units
            .iter()
            .map(|u| normalization.apply(&u.descriptor))
            .collect();
        Corpus {
            version: CORPUS_FORMAT_VERSION,
            units,
            normalization,
            sources,
            skipped,
            scaled,
            audio,
        }
    }

    /// Corpus from precomputed units, e.g. for retrieval without audio.
    pub fn from_units(units: Vec<AudioUnit>) -> Result<Self> {
        if units
            .iter()
            .any(|u| u.span.len == 0 || u.descriptor.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::Data(
                "units need a nonempty span and finite descriptors".into(),
            ));
        }
        Ok(Self::assemble(units, Vec::new(), 0, HashMap::new()))
    }

    /// New corpus with `more` units appended and statistics refitted.
    pub fn with_units(&self, more: Vec<AudioUnit>) -> Result<Self> {
        let mut units = self.units.clone();
        units.extend(more);
        let mut c = Corpus::from_units(units)?;
        c.sources = self.sources.clone();
        c.audio = self.audio.clone();
        c.skipped = self.skipped;
        Ok(c)
    }

    pub fn units(&self) -> &[AudioUnit] {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn normalization(&self) -> &Normalization {
        &self.normalization
    }

    pub fn sources(&self) -> &[SourceEntry] {
        &self.sources
    }

    pub fn stats(&self) -> CorpusStats {
        let n = self.units.len();
        let total: f64 = self.units.iter().map(|u| u.descriptor[0]).sum();
        CorpusStats {
            units: n,
            mean_duration_s: if n > 0 { total / n as f64 } else { 0.0 },
            skipped: self.skipped,
        }
    }

    /// Unit audio, mixed to mono.
    pub fn unit_samples(&self, index: usize) -> Result<Vec<f32>> {
        let unit = self
            .units
            .get(index)
            .ok_or_else(|| Error::Registry(format!("no unit {index}")))?;
        let buffer = self
            .audio
            .get(&unit.source_id)
            .ok_or_else(|| Error::Registry(format!("source {:?} is not loaded", unit.source_id)))?;
        let mono = buffer.to_mono();
        let end = unit.span.start + unit.span.len;
        if end > mono.len() {
            return Err(Error::Registry(format!(
                "unit {index} lies outside source {:?}",
                unit.source_id
            )));
        }
        Ok(mono[unit.span.start..end].to_vec())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("corpus serializes")
    }

    /// Writes the index as JSON. Source audio stays in its own files.
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    /// Reads an index and reloads every file-backed source, checking its
    /// hash. Relative source paths resolve against the index's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut c: Corpus = serde_json::from_str(&text)?;
        if c.version != CORPUS_FORMAT_VERSION {
            return Err(Error::Version {
                found: c.version,
                expected: CORPUS_FORMAT_VERSION,
            });
        }
        let base = path.parent().unwrap_or(Path::new("."));
        for s in &c.sources {
            let Some(p) = &s.path else { continue };
            let full = if p.is_relative() {
                base.join(p)
            } else {
                p.clone()
            };
            let bytes = std::fs::read(&full)?;
            let hash = hex::encode(Sha256::digest(&bytes));
            if hash != s.sha256 {
                return Err(Error::Registry(format!(
                    "source {} changed since the corpus was built",
                    full.display()
                )));
            }
            c.audio.insert(s.id.clone(), read_wav(&bytes)?);
        }
        let units = std::mem::take(&mut c.units);
        let (sources, skipped, audio) = (
            std::mem::take(&mut c.sources),
            c.skipped,
            std::mem::take(&mut c.audio),
        );
        Ok(Corpus::assemble(units, sources, skipped, audio))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitMatch {
    pub index: usize,
    pub distance: f64,
}

/// The `k` units nearest to `target` under z-scored Euclidean distance,
/// nearest first; equal distances keep unit order. Optional per-dimension
/// weights scale each squared term.
pub fn retrieve_knn(
    corpus: &Corpus,
    target: &[f64],
    k: usize,
    weights: Option<&[f64]>,
) -> Result<Vec<UnitMatch>> {
    if corpus.is_empty() {
        return Err(Error::insufficient("corpus has no units"));
    }
    if target.len() != DESCRIPTOR_LEN {
        return Err(Error::Schema(format!(
            "target has {} values, expected {DESCRIPTOR_LEN}",
            target.len()
        )));
    }
    if k == 0 {
        return Err(Error::param("k must be at least 1"));
    }
    if let Some(w) = weights {
        if w.len() != DESCRIPTOR_LEN || w.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::param("weights need 19 non-negative values"));
        }
    }
    let z = corpus.normalization.apply(target);
    let dist = |u: &Descriptor| -> f64 {
        let mut acc = 0.0;
        for i in 0..DESCRIPTOR_LEN {
            let d = u[i] - z[i];
            acc += weights.map_or(1.0, |w| w[i]) * d * d;
        }
        acc.sqrt()
    };
    if k == 1 {
        let mut best = UnitMatch {
            index: 0,
            distance: f64::INFINITY,
        };
        for (i, u) in corpus.scaled.iter().enumerate() {
            let d = dist(u);
            if d < best.distance {
                best = UnitMatch {
                    index: i,
                    distance: d,
                };
            }
        }
        return Ok(vec![best]);
    }
    let mut all: Vec<UnitMatch> = corpus
        .scaled
        .iter()
        .enumerate()
        .map(|(index, u)| UnitMatch {
            index,
            distance: dist(u),
        })
        .collect();
    let order = |a: &UnitMatch, b: &UnitMatch| {
        a.distance
            .total_cmp(&b.distance)
            .then(a.index.cmp(&b.index))
    };
    if k < all.len() {
        all.select_nth_unstable_by(k - 1, order);
        all.truncate(k);
    }
    all.sort_by(order);
    Ok(all)
}

/// Concatenates units (mono) with equal-power crossfades of `crossfade_ms`,
/// shortened where a unit is briefer than the fade.
pub fn render_unit_sequence(
    corpus: &Corpus,
    units: &[usize],
    crossfade_ms: f64,
) -> Result<AudioBuffer> {
    if !(crossfade_ms >= 0.0) {
        return Err(Error::param("crossfade must be non-negative"));
    }
    let Some(&first) = units.first() else {
        return Err(Error::EmptyInput("no units to render".into()));
    };
    let rate_of = |i: usize| -> Result<u32> {
        let id = &corpus
            .units
            .get(i)
            .ok_or_else(|| Error::Registry(format!("no unit {i}")))?
            .source_id;
        corpus
            .audio
            .get(id)
            .map(|b| b.sample_rate)
            .ok_or_else(|| Error::Registry(format!("source {id:?} is not loaded")))
    };
    let sample_rate = rate_of(first)?;
    let fade = (crossfade_ms * sample_rate as f64 / 1000.0).round() as usize;
    let mut out: Vec<f32> = Vec::new();
    for (n, &u) in units.iter().enumerate() {
        if rate_of(u)? != sample_rate {
            return Err(Error::Data(
                "units come from sources with different sample rates".into(),
            ));
        }
        let samples = corpus.unit_samples(u)?;
        let c = if n == 0 {
            0
        } else {
            fade.min(samples.len()).min(out.len())
        };
        let base = out.len() - c;
        for (i, s) in samples[..c].iter().enumerate() {
            let theta = std::f64::consts::FRAC_PI_2 * (i as f64 + 0.5) / c as f64;
            let mixed = out[base + i] as f64 * theta.cos() + *s as f64 * theta.sin();
            out[base + i] = mixed as f32;
        }
        out.extend_from_slice(&samples[c..]);
    }
    for v in &mut out {
        *v = v.clamp(-1.0, 1.0);
    }
    Ok(AudioBuffer::mono(sample_rate, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn burst_buffer() -> AudioBuffer {
        let sr = 8000;
        let mut s = vec![0.0f32; sr * 2];
        for i in 1000..1800 {
            s[i] = 0.5 * ((i as f32) * 0.3).sin();
        }
        for i in 9800..10600 {
            s[i] = 0.5 * ((i as f32) * 0.7).sin();
        }
        AudioBuffer::mono(sr as u32, s)
    }

    fn unit(d0: f64) -> AudioUnit {
        let mut descriptor = [0.0; DESCRIPTOR_LEN];
        descriptor[0] = d0;
        descriptor[3] = d0 * d0;
        AudioUnit {
            source_id: "s".into(),
            span: Span { start: 0, len: 10 },
            descriptor,
        }
    }

    #[test]
    fn two_bursts_two_units() {
        let c = build_corpus(
            vec![SourceAudio::in_memory("a", burst_buffer())],
            SegmentParams::default(),
            AnalysisParams::default(),
        )
        .unwrap();
        assert_eq!(c.len(), 2);
        let stats = c.stats();
        assert_eq!(stats.units, 2);
        assert!(stats.mean_duration_s > 0.0);
    }

    #[test]
    fn empty_source_list() {
        assert!(build_corpus(vec![], SegmentParams::default(), AnalysisParams::default()).is_err());
    }

    #[test]
    fn retrieval_order_and_clamping() {
        let c = Corpus::from_units((0..5).map(|i| unit(i as f64)).collect()).unwrap();
        let hits = retrieve_knn(&c, &c.units()[2].descriptor, 10, None).unwrap();
        assert_eq!(hits.len(), 5);
        assert_eq!(
            hits[0],
            UnitMatch {
                index: 2,
                distance: 0.0
            }
        );
        assert!(hits.windows(2).all(|w| w[0].distance <= w[1].distance));
        // equidistant neighbours keep unit order
        assert_eq!((hits[1].index, hits[2].index), (1, 3));
    }

    #[test]
    fn retrieval_errors() {
        let c = Corpus::from_units(vec![unit(1.0)]).unwrap();
        assert!(retrieve_knn(&c, &[0.0; 3], 1, None).is_err());
        assert!(retrieve_knn(&c, &[0.0; 19], 0, None).is_err());
        let empty = Corpus::from_units(vec![]).unwrap();
        assert!(retrieve_knn(&empty, &[0.0; 19], 1, None).is_err());
    }

    #[test]
    fn single_unit_render_is_exact() {
        let b = burst_buffer();
        let c = build_corpus(
            vec![SourceAudio::in_memory("a", b.clone())],
            SegmentParams::default(),
            AnalysisParams::default(),
        )
        .unwrap();
        let out = render_unit_sequence(&c, &[0], 0.0).unwrap();
        let u = &c.units()[0];
        assert_eq!(
            out.channels[0],
            b.channels[0][u.span.start..u.span.start + u.span.len]
        );
    }

    #[test]
    fn crossfade_shortens_output() {
        let b = burst_buffer();
        let c = build_corpus(
            vec![SourceAudio::in_memory("a", b)],
            SegmentParams::default(),
            AnalysisParams::default(),
        )
        .unwrap();
        let (l0, l1) = (c.units()[0].span.len, c.units()[1].span.len);
        let out = render_unit_sequence(&c, &[0, 1], 10.0).unwrap();
        assert_eq!(out.len(), l0 + l1 - 80);
        assert!(out.channels[0]
            .iter()
            .all(|v| v.is_finite() && v.abs() <= 1.0));
    }

    #[test]
    fn missing_source_is_registry_error() {
        let c = Corpus::from_units(vec![unit(1.0)]).unwrap();
        assert!(matches!(
            render_unit_sequence(&c, &[0], 0.0),
            Err(Error::Registry(_))
        ));
    }
}
