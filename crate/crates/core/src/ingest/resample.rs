use super::{lerp, lerp3, EmgFrame, FrameStream, Frames, ImuFrame, Marker, MarkerFrame, Quat};
use crate::error::{Error, Result};

trait Interpolate: Sized + Clone {
    fn t(&self) -> f64;
    fn interpolate(a: &Self, b: &Self, alpha: f64, t: f64) -> Self;
}

impl Interpolate for MarkerFrame {
    fn t(&self) -> f64 {
        self.t
    }

    fn interpolate(a: &Self, b: &Self, alpha: f64, t: f64) -> Self {
        MarkerFrame {
            t,
            markers: a
                .markers
                .iter()
                .zip(&b.markers)
                .map(|(ma, mb)| Marker {
                    label: ma.label.clone(),
                    position: lerp3(ma.position, mb.position, alpha),
                    mass: ma.mass,
                })
                .collect(),
        }
    }
}

impl Interpolate for ImuFrame {
    fn t(&self) -> f64 {
        self.t
    }

    fn interpolate(a: &Self, b: &Self, alpha: f64, t: f64) -> Self {
        // nlerp along the short arc
        let sign = if a.quat.dot(&b.quat) < 0.0 { -1.0 } else { 1.0 };
        let q = Quat {
            w: lerp(a.quat.w, sign * b.quat.w, alpha),
            x: lerp(a.quat.x, sign * b.quat.x, alpha),
            y: lerp(a.quat.y, sign * b.quat.y, alpha),
            z: lerp(a.quat.z, sign * b.quat.z, alpha),
        };
        ImuFrame {
            t,
            accel: lerp3(a.accel, b.accel, alpha),
            gyro: lerp3(a.gyro, b.gyro, alpha),
            mag: lerp3(a.mag, b.mag, alpha),
            quat: q.normalized(),
        }
    }
}

impl Interpolate for EmgFrame {
    fn t(&self) -> f64 {
        self.t
    }

    fn interpolate(a: &Self, b: &Self, alpha: f64, t: f64) -> Self {
        EmgFrame {
            t,
            channels: a
                .channels
                .iter()
                .zip(&b.channels)
                .map(|(x, y)| lerp(*x, *y, alpha))
                .collect(),
        }
    }
}

/// Resamples onto a uniform grid by per-channel linear interpolation
/// (quaternions by normalized lerp).
///
/// The grid spans exactly the first to the last input timestamp with
/// `round(span·target_rate) + 1` points, so both endpoints are preserved and
/// the effective rate is the target rate snapped to fit the span.
pub fn resample_stream(stream: &FrameStream, target_rate_hz: f64) -> Result<FrameStream> {
    if !(target_rate_hz > 0.0 && target_rate_hz.is_finite()) {
        return Err(Error::param(format!(
            "target rate {target_rate_hz} must be positive"
        )));
    }
    if stream.is_empty() {
        return Err(Error::EmptyInput("cannot resample an empty stream".into()));
    }
    let (frames, rate) = match &stream.frames {
        Frames::Marker(f) => {
            let (f, r) = resample(f, target_rate_hz);
            (Frames::Marker(f), r)
        }
        Frames::Imu(f) => {
            let (f, r) = resample(f, target_rate_hz);
            (Frames::Imu(f), r)
        }
        Frames::Emg(f) => {
            let (f, r) = resample(f, target_rate_hz);
            (Frames::Emg(f), r)
        }
    };
    Ok(FrameStream { rate, frames })
}

fn resample<F: Interpolate>(frames: &[F], target_rate: f64) -> (Vec<F>, f64) {
    let t0 = frames[0].t();
    let t1 = frames[frames.len() - 1].t();
    let span = t1 - t0;
    if frames.len() == 1 || span <= 0.0 {
        return (frames.to_vec(), target_rate);
    }
    let n = ((span * target_rate).round() as usize).max(1) + 1;
    let step = span / (n - 1) as f64;
    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    for i in 0..n {
        let t = if i == n - 1 { t1 } else { t0 + i as f64 * step };
        while j + 2 < frames.len() && frames[j + 1].t() <= t {
            j += 1;
        }
        let (a, b) = (&frames[j], &frames[j + 1]);
        let alpha = ((t - a.t()) / (b.t() - a.t())).clamp(0.0, 1.0);
        out.push(F::interpolate(a, b, alpha, t));
    }
    (out, (n - 1) as f64 / span)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emg(values: &[(f64, f64)]) -> FrameStream {
        FrameStream::new(Frames::Emg(
            values
                .iter()
                .map(|(t, v)| EmgFrame {
                    t: *t,
                    channels: vec![*v],
                })
                .collect(),
        ))
        .unwrap()
    }

    #[test]
    fn linear_midpoint() {
        let out = resample_stream(&emg(&[(0.0, 0.0), (1.0, 1.0)]), 2.0).unwrap();
        let f = out.as_emg().unwrap();
        assert_eq!(f.len(), 3);
        assert!((f[1].channels[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn own_rate_is_identity() {
        let s = emg(&(0..50)
            .map(|i| (i as f64 * 0.01, (i as f64).sin()))
            .collect::<Vec<_>>());
        let out = resample_stream(&s, s.rate).unwrap();
        let (a, b) = (s.as_emg().unwrap(), out.as_emg().unwrap());
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x.t - y.t).abs() < 1e-9);
            assert!((x.channels[0] - y.channels[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn quaternions_stay_unit() {
        let q0 = Quat::IDENTITY;
        let q1 = Quat::from_axis_angle([1.0, 1.0, 0.0], 2.5);
        let frame = |t, quat| ImuFrame {
            t,
            accel: [0.0; 3],
            gyro: [0.0; 3],
            mag: [1.0, 0.0, 0.0],
            quat,
        };
        let s = FrameStream::new(Frames::Imu(vec![frame(0.0, q0), frame(1.0, q1)])).unwrap();
        let out = resample_stream(&s, 7.0).unwrap();
        for f in out.as_imu().unwrap() {
            assert!((f.quat.norm() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn empty_stream_rejected() {
        let s = FrameStream {
            rate: 0.0,
            frames: Frames::Emg(vec![]),
        };
        assert!(matches!(
            resample_stream(&s, 10.0),
            Err(Error::EmptyInput(_))
        ));
    }
}
