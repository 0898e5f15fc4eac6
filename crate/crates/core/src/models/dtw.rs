use serde::{Deserialize, Serialize};

use super::euclidean;
use crate::error::{Error, Result};

/// A labeled, pre-recorded example gesture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GestureTemplate {
    pub label: String,
    pub series: Vec<Vec<f64>>,
}

fn check_series(name: &str, s: &[Vec<f64>]) -> Result<usize> {
    let Some(first) = s.first() else {
        return Err(Error::EmptyInput(format!("{name} series is empty")));
    };
    let d = first.len();
    if s.iter().any(|v| v.len() != d) {
        return Err(Error::Schema(format!("{name} series has mixed dimensions")));
    }
    Ok(d)
}

/// Dynamic time warping with Euclidean local cost and the symmetric
/// three-move step pattern; the total cost is not length-normalized.
///
/// The path runs from `(0, 0)` to `(a.len()-1, b.len()-1)`. Where several
/// predecessors tie, the diagonal wins, then the step that advances `a`.
pub fn dtw_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<(f64, Vec<(usize, usize)>)> {
    let da = check_series("first", a)?;
    let db = check_series("second", b)?;
    if da != db {
        return Err(Error::Schema(format!(
            "series dimensions differ: {da} vs {db}"
        )));
    }
    let (n, m) = (a.len(), b.len());
    let mut acc = vec![f64::INFINITY; n * m];
    for i in 0..n {
        for j in 0..m {
            let c = euclidean(&a[i], &b[j]);
            let prev = if i == 0 && j == 0 {
                0.0
            } else {
                let diag = if i > 0 && j > 0 {
                    acc[(i - 1) * m + j - 1]
                } else {
                    f64::INFINITY
                };
                let up = if i > 0 {
                    acc[(i - 1) * m + j]
                } else {
                    f64::INFINITY
                };
                let left = if j > 0 {
                    acc[i * m + j - 1]
                } else {
                    f64::INFINITY
                };
                diag.min(up).min(left)
            };
            acc[i * m + j] = c + prev;
        }
    }
    let mut path = vec![(n - 1, m - 1)];
    let (mut i, mut j) = (n - 1, m - 1);
    while i > 0 || j > 0 {
        (i, j) = if i == 0 {
            (0, j - 1)
        } else if j == 0 {
            (i - 1, 0)
        } else {
            let diag = acc[(i - 1) * m + j - 1];
            let up = acc[(i - 1) * m + j];
            let left = acc[i * m + j - 1];
            if diag <= up && diag <= left {
                (i - 1, j - 1)
            } else if up <= left {
                (i - 1, j)
            } else {
                (i, j - 1)
            }
        };
        path.push((i, j));
    }
    path.reverse();
    Ok((acc[n * m - 1], path))
}

/// Label of the template with the lowest DTW cost against `query`, with one
/// cost per template in input order. Equal costs go to the smaller label.
pub fn dtw_classify(
    templates: &[GestureTemplate],
    query: &[Vec<f64>],
) -> Result<(String, Vec<f64>)> {
    if templates.is_empty() {
        return Err(Error::insufficient("DTW vocabulary is empty"));
    }
    let costs = templates
        .iter()
        .map(|t| dtw_distance(&t.series, query).map(|(c, _)| c))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for i in 1..templates.len() {
        if costs[i] < costs[best]
            || (costs[i] == costs[best] && templates[i].label < templates[best].label)
        {
            best = i;
        }
    }
    Ok((templates[best].label.clone(), costs))
}
