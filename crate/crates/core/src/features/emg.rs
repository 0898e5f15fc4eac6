//! EMG window statistics and the recursive Bayesian amplitude estimator.
//!
//! The statistics operate on one channel's samples; use [`channel_samples`]
//! to pull a channel out of a frame sequence.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::EmgFrame;

pub fn channel_samples(frames: &[EmgFrame], channel: usize) -> Result<Vec<f64>> {
    frames
        .iter()
        .enumerate()
        .map(|(i, f)| {
            f.channels
                .get(channel)
                .copied()
                .ok_or_else(|| Error::param(format!("frame {i} has no EMG channel {channel}")))
        })
        .collect()
}

/// Mean absolute value.
pub fn mav(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::insufficient("MAV of an empty window"));
    }
    Ok(x.iter().map(|v| v.abs()).sum::<f64>() / x.len() as f64)
}

/// Root mean square, normalized by window length.
pub fn rms(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::insufficient("RMS of an empty window"));
    }
    Ok((x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt())
}

/// Teager-Kaiser energy `x[n]² − x[n−1]·x[n+1]`; the two edge samples repeat
/// their interior neighbours.
pub fn tkeo(x: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    if n < 3 {
        return Err(Error::insufficient("TKEO needs at least 3 samples"));
    }
    let mut psi = vec![0.0; n];
    for i in 1..n - 1 {
        psi[i] = x[i] * x[i] - x[i - 1] * x[i + 1];
    }
    psi[0] = psi[1];
    psi[n - 1] = psi[n - 2];
    Ok(psi)
}

/// Number of adjacent pairs with a strict sign change; zero counts as positive.
pub fn zcr(x: &[f64]) -> Result<usize> {
    if x.len() < 2 {
        return Err(Error::insufficient(
            "zero-crossing count needs at least 2 samples",
        ));
    }
    Ok(x.windows(2)
        .filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0))
        .count())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BayesParams {
    /// Number of amplitude candidates, spread over (0, 1].
    pub grid_size: usize,
    /// Probability mass moved to each neighbouring grid cell per sample.
    pub diffusion: f64,
    /// Probability of an arbitrary jump to any amplitude per sample.
    pub jump_prob: f64,
}

impl Default for BayesParams {
    fn default() -> Self {
        BayesParams {
            grid_size: 100,
            diffusion: 0.05,
            jump_prob: 1e-3,
        }
    }
}

/// Discretized posterior over the latent EMG amplitude.
///
/// Each [`step`](BayesFilter::step) diffuses the posterior to neighbouring
/// amplitudes, mixes in a uniform jump component, weights by the likelihood of
/// the rectified sample under a zero-mean Gaussian with σ = candidate
/// amplitude, and renormalizes. The estimate is the posterior mode.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesFilter {
    params: BayesParams,
    grid: Vec<f64>,
    posterior: Vec<f64>,
    scratch: Vec<f64>,
}

impl BayesFilter {
    pub fn new(params: BayesParams) -> Result<Self> {
        if params.grid_size < 16 {
            return Err(Error::param("Bayes filter grid needs at least 16 cells"));
        }
        if !(0.0..1.0).contains(&params.jump_prob) {
            return Err(Error::param("jump probability must be in [0, 1)"));
        }
        if !(0.0..=0.5).contains(&params.diffusion) {
            return Err(Error::param("diffusion must be in [0, 0.5]"));
        }
        let g = params.grid_size;
        Ok(BayesFilter {
            params,
            grid: (1..=g).map(|j| j as f64 / g as f64).collect(),
            posterior: vec![1.0 / g as f64; g],
            scratch: vec![0.0; g],
        })
    }

    pub fn posterior(&self) -> &[f64] {
        &self.posterior
    }

    /// Largest representable amplitude.
    pub fn max_amplitude(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }

    pub fn estimate(&self) -> f64 {
        let (best, _) =
            self.posterior
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, p)| {
                    if *p > acc.1 {
                        (i, *p)
                    } else {
                        acc
                    }
                });
        self.grid[best]
    }

    /// Advances the posterior by one sample and returns the new estimate.
    pub fn step(&mut self, sample: f64) -> Result<f64> {
        if !sample.is_finite() {
            return Err(Error::Data(format!("non-finite EMG sample {sample}")));
        }
        let g = self.grid.len();
        let d = self.params.diffusion;
        let p = &self.posterior;
        let q = &mut self.scratch;
        // reflecting boundaries keep the mass on the grid
        for j in 0..g {
            let left = if j == 0 { p[0] } else { p[j - 1] };
            let right = if j == g - 1 { p[g - 1] } else { p[j + 1] };
            q[j] = (1.0 - 2.0 * d) * p[j] + d * (left + right);
        }
        let jump = self.params.jump_prob / g as f64;
        let x2 = sample * sample;
        let mut max_log = f64::NEG_INFINITY;
        for (j, s) in self.grid.iter().enumerate() {
            q[j] = (1.0 - self.params.jump_prob) * q[j] + jump;
            let log_l = -x2 / (2.0 * s * s) - s.ln();
            self.posterior[j] = log_l;
            max_log = max_log.max(log_l);
        }
        let mut total = 0.0;
        for j in 0..g {
            let w = q[j] * (self.posterior[j] - max_log).exp();
            self.posterior[j] = w;
            total += w;
        }
        for v in &mut self.posterior {
            *v /= total;
        }
        Ok(self.estimate())
    }
}

/// Runs a fresh [`BayesFilter`] over `samples`, one estimate per sample.
pub fn bayes_amplitude(samples: &[f64], params: BayesParams) -> Result<Vec<f64>> {
    let mut filter = BayesFilter::new(params)?;
    samples.iter().map(|x| filter.step(*x)).collect()
}
