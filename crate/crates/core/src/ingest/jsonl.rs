//! Line-delimited JSON frames, one object per line:
//!
//! ```text
//! {"t":0.0,"kind":"imu","accel":[..3],"gyro":[..3],"mag":[..3],"quat":[w,x,y,z]}
//! {"t":0.0,"kind":"emg","channels":[..N]}
//! {"t":0.0,"kind":"marker","markers":[{"label":"hand","p":[x,y,z],"mass":1.0}]}
//! ```

use serde::{Deserialize, Serialize};

use super::{
    EmgFrame, FrameStream, Frames, ImuFrame, Marker, MarkerFrame, Quat, StreamKind, Vec3,
    DEFAULT_MARKER_MASS,
};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum Line {
    Imu {
        t: f64,
        accel: Vec3,
        gyro: Vec3,
        mag: Vec3,
        quat: [f64; 4],
    },
    Emg {
        t: f64,
        channels: Vec<f64>,
    },
    Marker {
        t: f64,
        markers: Vec<MarkerJson>,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MarkerJson {
    label: String,
    p: Vec3,
    #[serde(default = "default_mass")]
    mass: f64,
}

fn default_mass() -> f64 {
    DEFAULT_MARKER_MASS
}

impl Line {
    fn kind(&self) -> StreamKind {
        match self {
            Line::Imu { .. } => StreamKind::Imu,
            Line::Emg { .. } => StreamKind::Emg,
            Line::Marker { .. } => StreamKind::Marker,
        }
    }
}

/// Parses one JSON frame (a single line of the JSONL format).
pub(crate) fn parse_frame_line(line: &str) -> Result<Frames> {
    let parsed: Line = serde_json::from_str(line).map_err(|e| Error::Parse {
        row: 1,
        column: Some(e.column()),
        message: e.to_string(),
    })?;
    let mut frames = empty_frames(parsed.kind());
    push(&mut frames, parsed);
    Ok(frames)
}

/// Parses a JSONL frame stream. The stream kind is taken from the first
/// line; any later line of a different kind is a schema error.
pub fn parse_frames_jsonl(text: &str) -> Result<FrameStream> {
    let mut frames: Option<Frames> = None;
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Line = serde_json::from_str(line).map_err(|e| Error::Parse {
            row,
            column: Some(e.column()),
            message: e.to_string(),
        })?;
        let frames = frames.get_or_insert_with(|| empty_frames(parsed.kind()));
        let kind = kind_of(frames);
        if parsed.kind() != kind {
            return Err(Error::Schema(format!(
                "line {row}: mixed kinds, `{}` frame in a `{kind}` stream",
                parsed.kind()
            )));
        }
        push(frames, parsed);
    }
    let frames = frames.ok_or_else(|| Error::EmptyInput("no frames in JSONL input".into()))?;
    FrameStream::new(frames)
}

fn empty_frames(kind: StreamKind) -> Frames {
    match kind {
        StreamKind::Imu => Frames::Imu(Vec::new()),
        StreamKind::Emg => Frames::Emg(Vec::new()),
        StreamKind::Marker => Frames::Marker(Vec::new()),
    }
}

fn kind_of(frames: &Frames) -> StreamKind {
    match frames {
        Frames::Imu(_) => StreamKind::Imu,
        Frames::Emg(_) => StreamKind::Emg,
        Frames::Marker(_) => StreamKind::Marker,
    }
}

fn push(frames: &mut Frames, line: Line) {
    match (frames, line) {
        (
            Frames::Imu(v),
            Line::Imu {
                t,
                accel,
                gyro,
                mag,
                quat,
            },
        ) => v.push(ImuFrame {
            t,
            accel,
            gyro,
            mag,
            quat: Quat::from(quat),
        }),
        (Frames::Emg(v), Line::Emg { t, channels }) => v.push(EmgFrame { t, channels }),
        (Frames::Marker(v), Line::Marker { t, markers }) => v.push(MarkerFrame {
            t,
            markers: markers
                .into_iter()
                .map(|m| Marker {
                    label: m.label,
                    position: m.p,
                    mass: m.mass,
                })
                .collect(),
        }),
        _ => unreachable!("kind checked by caller"),
    }
}

/// Serializes a stream as JSONL, one frame per line.
pub fn write_frames_jsonl(stream: &FrameStream) -> String {
    let lines: Vec<Line> = match &stream.frames {
        Frames::Imu(v) => v
            .iter()
            .map(|f| Line::Imu {
                t: f.t,
                accel: f.accel,
                gyro: f.gyro,
                mag: f.mag,
                quat: f.quat.to_array(),
            })
            .collect(),
        Frames::Emg(v) => v
            .iter()
            .map(|f| Line::Emg {
                t: f.t,
                channels: f.channels.clone(),
            })
            .collect(),
        Frames::Marker(v) => v
            .iter()
            .map(|f| Line::Marker {
                t: f.t,
                markers: f
                    .markers
                    .iter()
                    .map(|m| MarkerJson {
                        label: m.label.clone(),
                        p: m.position,
                        mass: m.mass,
                    })
                    .collect(),
            })
            .collect(),
    };
    let mut out = String::new();
    for line in lines {
        out.push_str(&serde_json::to_string(&line).expect("frame serialization is infallible"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const IMU: &str =
        r#"{"t":0.0,"kind":"imu","accel":[0,0,9.8],"gyro":[0,0,0],"mag":[1,0,0],"quat":[1,0,0,0]}"#;

    #[test]
    fn three_imu_lines() {
        let text = [0.0, 0.01, 0.02]
            .iter()
            .map(|t| IMU.replace("\"t\":0.0", &format!("\"t\":{t}")))
            .collect::<Vec<_>>()
            .join("\n");
        let s = parse_frames_jsonl(&text).unwrap();
        assert_eq!(s.kind(), StreamKind::Imu);
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn mixed_kinds_rejected() {
        let text = format!(
            "{}\n{}",
            r#"{"t":0.0,"kind":"emg","channels":[0.1]}"#,
            IMU.replace("0.0", "0.1")
        );
        assert!(matches!(parse_frames_jsonl(&text), Err(Error::Schema(_))));
    }

    #[test]
    fn half_quaternion_accepted() {
        let line = IMU.replace("[1,0,0,0]", "[0.5,0.5,0.5,0.5]");
        let s = parse_frames_jsonl(&line).unwrap();
        assert_eq!(s.as_imu().unwrap()[0].quat.to_array(), [0.5; 4]);
    }

    #[test]
    fn non_unit_quaternion_rejected() {
        let line = IMU.replace("[1,0,0,0]", "[1,1,0,0]");
        assert!(matches!(parse_frames_jsonl(&line), Err(Error::Data(_))));
    }

    #[test]
    fn malformed_line_has_line_number() {
        let text = format!("{IMU}\n{{\"t\":");
        match parse_frames_jsonl(&text) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn marker_mass_defaults() {
        let s =
            parse_frames_jsonl(r#"{"t":0,"kind":"marker","markers":[{"label":"a","p":[1,2,3]}]}"#)
                .unwrap();
        assert_eq!(s.as_markers().unwrap()[0].markers[0].mass, 1.0);
    }
}
