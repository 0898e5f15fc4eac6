//! Motion-capture CSV: `t,<label>_x,<label>_y,<label>_z,...`, one row per frame.

use std::collections::HashMap;

use super::{FrameStream, Frames, Marker, MarkerFrame, DEFAULT_MARKER_MASS};
use crate::error::{Error, Result};

/// Parses marker CSV text. Rows are reported 1-based, counting the header as
/// row 1. `masses` maps marker labels to kg; missing labels get
/// [`DEFAULT_MARKER_MASS`].
pub fn parse_mocap_csv(text: &str, masses: Option<&HashMap<String, f64>>) -> Result<FrameStream> {
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(::csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());

    let header = reader.headers().map_err(csv_err)?.clone();
    let labels = parse_header(&header)?;
    let mass_of = |label: &str| {
        masses
            .and_then(|m| m.get(label).copied())
            .unwrap_or(DEFAULT_MARKER_MASS)
    };

    let mut frames = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != header.len() {
            return Err(Error::Parse {
                row,
                column: None,
                message: format!("expected {} columns, found {}", header.len(), record.len()),
            });
        }
        let mut values = Vec::with_capacity(record.len());
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: Some(col + 1),
                message: format!("non-numeric cell {cell:?}"),
            })?;
            values.push(v);
        }
        let markers = labels
            .iter()
            .enumerate()
            .map(|(i, label)| Marker {
                label: label.clone(),
                position: [values[1 + 3 * i], values[2 + 3 * i], values[3 + 3 * i]],
                mass: mass_of(label),
            })
            .collect();
        frames.push(MarkerFrame {
            t: values[0],
            markers,
        });
    }
    if frames.is_empty() {
        return Err(Error::EmptyInput("CSV has no data rows".into()));
    }
    FrameStream::new(Frames::Marker(frames))
}

fn parse_header(header: &::csv::StringRecord) -> Result<Vec<String>> {
    let cols: Vec<&str> = header.iter().collect();
    if cols.is_empty() || cols[0] != "t" {
        return Err(Error::Schema("first CSV column must be `t`".into()));
    }
    if !(cols.len() - 1).is_multiple_of(3) {
        return Err(Error::Schema(format!(
            "{} columns: expected `t` followed by x/y/z triplets per marker",
            cols.len()
        )));
    }
    let mut labels = Vec::new();
    for triplet in cols[1..].chunks(3) {
        let label = triplet[0]
            .strip_suffix("_x")
            .ok_or_else(|| Error::Schema(format!("column {:?} should end in _x", triplet[0])))?;
        for (col, axis) in triplet[1..].iter().zip(["_y", "_z"]) {
            if col.strip_suffix(axis) != Some(label) {
                return Err(Error::Schema(format!(
                    "column {col:?} should be {label}{axis}"
                )));
            }
        }
        labels.push(label.to_string());
    }
    Ok(labels)
}

fn csv_err(e: ::csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        row,
        column: None,
        message: e.to_string(),
    }
}

/// Regression examples from CSV: columns named `in_*` are inputs, `out_*`
/// targets, in header order. Other columns are ignored. A file without
/// `out_*` columns yields empty targets (prediction input).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub input_names: Vec<String>,
    pub output_names: Vec<String>,
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

pub fn parse_dataset_csv(text: &str) -> Result<Dataset> {
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(::csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(csv_err)?.clone();
    let pick = |prefix: &str| -> Vec<(usize, String)> {
        header
            .iter()
            .enumerate()
            .filter(|(_, h)| h.starts_with(prefix))
            .map(|(i, h)| (i, h.to_string()))
            .collect()
    };
    let ins = pick("in_");
    let outs = pick("out_");
    if ins.is_empty() {
        return Err(Error::Schema(
            "dataset needs at least one `in_*` column".into(),
        ));
    }
    let mut data = Dataset {
        input_names: ins.iter().map(|(_, n)| n.clone()).collect(),
        output_names: outs.iter().map(|(_, n)| n.clone()).collect(),
        inputs: Vec::new(),
        targets: Vec::new(),
    };
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != header.len() {
            return Err(Error::Parse {
                row,
                column: None,
                message: format!("expected {} columns, found {}", header.len(), record.len()),
            });
        }
        let cell = |col: usize| -> Result<f64> {
            let c = &record[col];
            c.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    row,
                    column: Some(col + 1),
                    message: format!("non-numeric cell {c:?}"),
                })
        };
        data.inputs
            .push(ins.iter().map(|(i, _)| cell(*i)).collect::<Result<_>>()?);
        data.targets
            .push(outs.iter().map(|(i, _)| cell(*i)).collect::<Result<_>>()?);
    }
    if data.inputs.is_empty() {
        return Err(Error::EmptyInput("dataset has no rows".into()));
    }
    Ok(data)
}

/// Writes marker frames in the CSV layout accepted by [`parse_mocap_csv`].
/// Masses are not part of the format.
pub fn write_mocap_csv(frames: &[MarkerFrame]) -> String {
    let mut out = String::from("t");
    if let Some(first) = frames.first() {
        for m in &first.markers {
            out.push_str(&format!(",{0}_x,{0}_y,{0}_z", m.label));
        }
    }
    out.push('\n');
    for f in frames {
        out.push_str(&f.t.to_string());
        for m in &f.markers {
            for v in m.position {
                out.push(',');
                out.push_str(&v.to_string());
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_rows_two_markers() {
        let text = "t,a_x,a_y,a_z,b_x,b_y,b_z\n0,0,0,0,1,1,1\n0.01,0,0,0,1,1,1\n";
        let s = parse_mocap_csv(text, None).unwrap();
        let frames = s.as_markers().unwrap();
        assert_eq!(frames.len(), 2);
        assert!(frames.iter().all(|f| f.markers.len() == 2));
    }

    #[test]
    fn single_marker_direct_read() {
        let s = parse_mocap_csv("t,m_x,m_y,m_z\n0.0,1.0,2.0,3.0\n", None).unwrap();
        let f = &s.as_markers().unwrap()[0];
        assert_eq!(f.t, 0.0);
        assert_eq!(f.markers[0].position, [1.0, 2.0, 3.0]);
        assert_eq!(f.markers[0].mass, DEFAULT_MARKER_MASS);
    }

    #[test]
    fn text_cell_names_row() {
        let text = "t,m_x,m_y,m_z\n0,1,2,3\n0.1,1,oops,3\n";
        match parse_mocap_csv(text, None) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(column, Some(3));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn bad_column_count_is_schema_error() {
        let text = "t,m_x,m_y\n0,1,2\n";
        assert!(matches!(parse_mocap_csv(text, None), Err(Error::Schema(_))));
    }

    #[test]
    fn sidecar_masses() {
        let masses = HashMap::from([("hand".to_string(), 0.4)]);
        let s = parse_mocap_csv(
            "t,hand_x,hand_y,hand_z,head_x,head_y,head_z\n0,0,0,0,0,0,1\n",
            Some(&masses),
        )
        .unwrap();
        let f = &s.as_markers().unwrap()[0];
        assert_eq!(f.markers[0].mass, 0.4);
        assert_eq!(f.markers[1].mass, 1.0);
    }

    #[test]
    fn rejects_non_monotone_rows() {
        let text = "t,m_x,m_y,m_z\n0.1,1,2,3\n0.0,1,2,3\n";
        assert!(matches!(parse_mocap_csv(text, None), Err(Error::Data(_))));
    }
}
