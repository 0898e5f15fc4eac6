//! Corpus descriptors, segmentation and retrieval against fixtures and an
//! exhaustive scan.

use gesmap_core::corpus::{
    analyze_unit, build_corpus, retrieve_knn, AnalysisParams, AudioUnit, Corpus, SegmentParams,
    SourceAudio, Span, DESCRIPTOR_LEN, DESCRIPTOR_NAMES,
};
use gesmap_core::ingest::AudioBuffer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SR: u32 = 22050;

/// Half a second of a 0.5-amplitude tone at a random phase.
fn sine(rng: &mut ChaCha8Rng, freq: f64) -> AudioBuffer {
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let s = (0..SR / 2).map(|i| {
        (0.5 * (std::f64::consts::TAU * freq * i as f64 / SR as f64 + phase).sin()) as f32
    });
    AudioBuffer::mono(SR, s.collect())
}

/// Half a second of fresh uniform noise at the same peak level.
fn noise(rng: &mut ChaCha8Rng) -> AudioBuffer {
    AudioBuffer::mono(
        SR,
        (0..SR / 2)
            .map(|_| (0.5 * rng.random_range(-1.0..1.0)) as f32)
            .collect(),
    )
}

fn describe(b: &AudioBuffer, id: &str) -> AudioUnit {
    let span = Span {
        start: 0,
        len: b.len(),
    };
    AudioUnit {
        source_id: id.into(),
        span,
        descriptor: analyze_unit(b, span, AnalysisParams::default()).unwrap(),
    }
}

#[test]
fn descriptor_layout() {
    let expected = [
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
    assert_eq!(DESCRIPTOR_LEN, 19);
    assert_eq!(DESCRIPTOR_NAMES, expected);
}

#[test]
fn sine_and_noise_are_told_apart() {
    for seed in 21..29 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let units = [
            describe(&sine(&mut rng, 440.0), "sine"),
            describe(&noise(&mut rng), "noise"),
        ];
        let corpus = Corpus::from_units(units.to_vec()).unwrap();
        let spread = corpus.normalization().std;
        // descriptor queries: each dimension moved by up to a fifth of the
        // gap between the two units
        for q in 0..50 {
            let mut d = units[q % 2].descriptor;
            for (k, v) in d.iter_mut().enumerate() {
                *v += rng.random_range(-0.2..0.2) * 2.0 * spread[k];
            }
            assert_eq!(
                retrieve_knn(&corpus, &d, 1, None).unwrap()[0].index,
                q % 2,
                "seed {seed} query {q}"
            );
        }
        // audio queries: the tone at another phase, or another noise draw
        for q in 0..10 {
            let b = if q % 2 == 0 {
                sine(&mut rng, 440.0)
            } else {
                noise(&mut rng)
            };
            let d = describe(&b, "q").descriptor;
            assert_eq!(
                retrieve_knn(&corpus, &d, 1, None).unwrap()[0].index,
                q % 2,
                "seed {seed} audio query {q}"
            );
        }
    }
}

#[test]
fn nudged_sine_descriptor_stays_with_the_sine() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let sine = describe(&sine(&mut rng, 440.0), "sine");
    let corpus =
        Corpus::from_units(vec![sine.clone(), describe(&noise(&mut rng), "noise")]).unwrap();
    let mut target = sine.descriptor;
    target[5] += 0.01;
    assert_eq!(DESCRIPTOR_NAMES[5], "periodicity_mean");
    assert_eq!(retrieve_knn(&corpus, &target, 1, None).unwrap()[0].index, 0);
}

fn random_unit(rng: &mut ChaCha8Rng) -> AudioUnit {
    let mut descriptor = [0.0; DESCRIPTOR_LEN];
    for (k, v) in descriptor.iter_mut().enumerate() {
        *v = rng.random_range(-1.0..1.0) * (k + 1) as f64;
    }
    AudioUnit {
        source_id: "r".into(),
        span: Span { start: 0, len: 1 },
        descriptor,
    }
}

#[test]
fn retrieval_equals_exhaustive_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in [1, 2, 10, 100, 1000] {
        let corpus = Corpus::from_units((0..n).map(|_| random_unit(&mut rng)).collect()).unwrap();
        // the z-score statistics are the population mean and deviation
        let norm = corpus.normalization();
        for k in 0..DESCRIPTOR_LEN {
            let col: Vec<f64> = corpus.units().iter().map(|u| u.descriptor[k]).collect();
            let m = col.iter().sum::<f64>() / n as f64;
            let sd = (col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64).sqrt();
            assert!((norm.mean[k] - m).abs() <= 1e-12 * m.abs().max(1.0));
            if n > 1 {
                assert!((norm.std[k] - sd).abs() <= 1e-12 * sd);
            }
        }
        for _ in 0..20 {
            let q = random_unit(&mut rng).descriptor;
            let zq = norm.apply(&q);
            let mut scan: Vec<(f64, usize)> = corpus
                .units()
                .iter()
                .enumerate()
                .map(|(i, u)| {
                    let zu = norm.apply(&u.descriptor);
                    (
                        (0..DESCRIPTOR_LEN)
                            .map(|k| (zu[k] - zq[k]) * (zu[k] - zq[k]))
                            .sum::<f64>()
                            .sqrt(),
                        i,
                    )
                })
                .collect();
            scan.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for k in [1, 5, n] {
                let hits = retrieve_knn(&corpus, &q, k, None).unwrap();
                let want: Vec<(f64, usize)> = scan.iter().take(k).copied().collect();
                let got: Vec<(f64, usize)> = hits.iter().map(|h| (h.distance, h.index)).collect();
                assert_eq!(got, want, "n {n} k {k}");
            }
        }
    }
}

#[test]
fn query_equal_to_a_unit_is_at_distance_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let corpus = Corpus::from_units((0..50).map(|_| random_unit(&mut rng)).collect()).unwrap();
    let hit = retrieve_knn(&corpus, &corpus.units()[17].descriptor, 1, None).unwrap()[0];
    assert_eq!((hit.index, hit.distance), (17, 0.0));
}

#[test]
fn two_bursts_segment_into_two_units() {
    let sr = 16000usize;
    let mut s = vec![0.0f32; sr * 2];
    for (start, f) in [(sr / 5, 300.0), (sr + sr / 10, 900.0)] {
        for i in 0..sr / 4 {
            let t = i as f64 / sr as f64;
            s[start + i] = (0.5 * (std::f64::consts::TAU * f * t).sin() * (-6.0 * t).exp()) as f32;
        }
    }
    let c = build_corpus(
        vec![SourceAudio::in_memory(
            "bursts",
            AudioBuffer::mono(sr as u32, s),
        )],
        SegmentParams::default(),
        AnalysisParams::default(),
    )
    .unwrap();
    assert_eq!(c.stats().units, 2);
    // each unit starts near its burst onset
    let starts: Vec<usize> = c.units().iter().map(|u| u.span.start).collect();
    assert!(starts[0].abs_diff(sr / 5) < sr / 50, "{starts:?}");
    assert!(starts[1].abs_diff(sr + sr / 10) < sr / 50, "{starts:?}");
}
