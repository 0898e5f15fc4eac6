//! Seeded inputs shared by the benchmarks.

use gesmap_core::corpus::{AudioUnit, Corpus, Span, DESCRIPTOR_LEN};
use gesmap_core::ingest::AudioBuffer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// `len` frames of `dim`-dimensional random walk.
pub fn series(rng: &mut ChaCha8Rng, len: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut x = vec![0.0; dim];
    (0..len)
        .map(|_| {
            for v in &mut x {
                *v += rng.random_range(-0.1..0.1);
            }
            x.clone()
        })
        .collect()
}

/// A corpus of `n` units with random descriptors.
pub fn corpus(rng: &mut ChaCha8Rng, n: usize) -> Corpus {
    let units = (0..n)
        .map(|i| {
            let mut descriptor = [0.0; DESCRIPTOR_LEN];
            for v in &mut descriptor {
                *v = rng.random_range(-1.0..1.0);
            }
            AudioUnit {
                source_id: format!("u{}", i % 7),
                span: Span { start: 0, len: 1 },
                descriptor,
            }
        })
        .collect();
    Corpus::from_units(units).expect("random units form a corpus")
}

/// Half a second of a decaying tone over noise.
pub fn tone(rng: &mut ChaCha8Rng, sample_rate: u32) -> AudioBuffer {
    let n = sample_rate as usize / 2;
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / sample_rate as f64;
            (0.5 * (std::f64::consts::TAU * 330.0 * t).sin() * (-3.0 * t).exp()
                + 0.05 * rng.random_range(-1.0..1.0)) as f32
        })
        .collect();
    AudioBuffer::mono(sample_rate, samples)
}
