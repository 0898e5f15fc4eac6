use super::Window;
use crate::error::{Error, Result};
use crate::ingest::{norm, MarkerFrame, Vec3};

/// Regularizer keeping the fluidity index finite for jerk-free motion.
pub const DEFAULT_FI_EPSILON: f64 = 1e-6;

/// Numerical time derivative: central differences inside, second-order
/// one-sided differences at the two edges (exact for quadratics). Two-sample
/// input falls back to a plain difference.
pub(super) fn gradient(xs: &[Vec3], h: f64) -> Vec<Vec3> {
    let n = xs.len();
    let mut out = vec![[0.0; 3]; n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        let d = std::array::from_fn(|k| (xs[1][k] - xs[0][k]) / h);
        return vec![d, d];
    }
    for k in 0..3 {
        out[0][k] = (-3.0 * xs[0][k] + 4.0 * xs[1][k] - xs[2][k]) / (2.0 * h);
        for i in 1..n - 1 {
            out[i][k] = (xs[i + 1][k] - xs[i - 1][k]) / (2.0 * h);
        }
        out[n - 1][k] = (3.0 * xs[n - 1][k] - 4.0 * xs[n - 2][k] + xs[n - 3][k]) / (2.0 * h);
    }
    out
}

pub(super) fn marker_track(
    window: &Window<'_, MarkerFrame>,
    marker_index: usize,
) -> Result<Vec<Vec3>> {
    window
        .frames
        .iter()
        .enumerate()
        .map(|(i, f)| {
            f.markers
                .get(marker_index)
                .map(|m| m.position)
                .ok_or_else(|| Error::param(format!("frame {i} has no marker {marker_index}")))
        })
        .collect()
}

/// `order`-th time derivative of one marker's trajectory, one 3-vector per
/// sample. The difference operator is applied `order` times, so samples within
/// `order` of either edge carry edge-stencil error.
pub fn derivative(
    window: &Window<'_, MarkerFrame>,
    order: usize,
    marker_index: usize,
) -> Result<Vec<Vec3>> {
    if !(1..=3).contains(&order) {
        return Err(Error::param(format!(
            "derivative order {order} not in 1..=3"
        )));
    }
    window.require(order + 2, "derivative")?;
    let h = 1.0 / window.rate;
    let mut xs = marker_track(window, marker_index)?;
    for _ in 0..order {
        xs = gradient(&xs, h);
    }
    Ok(xs)
}

/// Inverse of the integrated jerk magnitude, `1 / (ε + ∫‖jerk‖ dt)`,
/// integrated with the trapezoidal rule.
pub fn fluidity_index(
    window: &Window<'_, MarkerFrame>,
    marker_index: usize,
    epsilon: f64,
) -> Result<f64> {
    if !(epsilon >= 0.0) {
        return Err(Error::param("epsilon must be non-negative"));
    }
    window.require(5, "fluidity index")?;
    let jerk = derivative(window, 3, marker_index)?;
    let h = 1.0 / window.rate;
    let mags: Vec<f64> = jerk.into_iter().map(norm).collect();
    let integral = mags
        .windows(2)
        .map(|w| 0.5 * (w[0] + w[1]) * h)
        .sum::<f64>();
    Ok(1.0 / (epsilon + integral))
}

/// Mass-weighted sum over markers of the mean speed across the window.
pub fn quantity_of_motion(window: &Window<'_, MarkerFrame>) -> Result<f64> {
    window.require(2, "quantity of motion")?;
    let h = 1.0 / window.rate;
    let n_markers = window.frames[0].markers.len();
    let mut qom = 0.0;
    for m in 0..n_markers {
        let track = marker_track(window, m)?;
        let v = gradient(&track, h);
        let mean_speed = v.iter().map(|d| norm(*d)).sum::<f64>() / v.len() as f64;
        qom += window.frames[0].markers[m].mass * mean_speed;
    }
    Ok(qom)
}
