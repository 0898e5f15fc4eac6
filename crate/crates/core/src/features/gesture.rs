use super::FeatureVector;
use crate::error::{Error, Result};
use crate::ingest::ImuFrame;

pub const GESTURE_VECTOR_LEN: usize = 19;

const EMG_CHANNELS: usize = 8;

/// Forearm gesture vector from one IMU and an 8-electrode EMG armband:
///
/// | index | content |
/// |---|---|
/// | 0–3 | orientation quaternion `w, x, y, z` |
/// | 4–7 | quaternion rate `(q[n] − q[n−1]) · rate` (zeros without a previous frame) |
/// | 8–15 | filtered EMG amplitude per electrode |
/// | 16 | summed EMG amplitude |
/// | 17 | horizontal tension `Σ aᵢ cos θᵢ` |
/// | 18 | vertical tension `Σ aᵢ sin θᵢ` |
///
/// `electrode_angles` are the electrode positions around the forearm perimeter in radians.
pub fn assemble_gesture_vector(
    imu: &ImuFrame,
    previous: Option<&ImuFrame>,
    emg_amplitudes: &[f64],
    electrode_angles: &[f64],
) -> Result<FeatureVector> {
    if emg_amplitudes.len() != EMG_CHANNELS || electrode_angles.len() != EMG_CHANNELS {
        return Err(Error::Schema(format!(
            "gesture vector needs {EMG_CHANNELS} EMG amplitudes and angles, got {} and {}",
            emg_amplitudes.len(),
            electrode_angles.len()
        )));
    }
    let q = imu.quat.to_array();
    let dq = match previous {
        Some(prev) if imu.t > prev.t => {
            let p = prev.quat.to_array();
            let rate = 1.0 / (imu.t - prev.t);
            std::array::from_fn(|k| (q[k] - p[k]) * rate)
        }
        Some(prev) => {
            return Err(Error::Data(format!(
                "previous IMU frame at t={} is not before t={}",
                prev.t, imu.t
            )))
        }
        None => [0.0; 4],
    };

    let mut names: Vec<String> = ["q_w", "q_x", "q_y", "q_z", "dq_w", "dq_x", "dq_y", "dq_z"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    names.extend((0..EMG_CHANNELS).map(|i| format!("emg_{i}")));
    names.extend(["emg_sum", "tension_h", "tension_v"].map(String::from));

    let mut values = Vec::with_capacity(GESTURE_VECTOR_LEN);
    values.extend_from_slice(&q);
    values.extend_from_slice(&dq);
    values.extend_from_slice(emg_amplitudes);
    values.push(emg_amplitudes.iter().sum());
    values.push(
        emg_amplitudes
            .iter()
            .zip(electrode_angles)
            .map(|(a, th)| a * th.cos())
            .sum(),
    );
    values.push(
        emg_amplitudes
            .iter()
            .zip(electrode_angles)
            .map(|(a, th)| a * th.sin())
            .sum(),
    );
    FeatureVector::new(names, values)
}
