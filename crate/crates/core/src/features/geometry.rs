use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::ingest::{cross, dot, norm, sub, ImuFrame, MarkerFrame, Vec3};

/// Sum of marker distances from their (unweighted) centroid.
pub fn contraction_index(frame: &MarkerFrame) -> Result<f64> {
    if frame.markers.len() < 2 {
        return Err(Error::insufficient(
            "contraction index needs at least 2 markers",
        ));
    }
    let c = centroid(frame.positions());
    Ok(frame.positions().map(|p| norm(sub(p, c))).sum())
}

/// Axis-aligned extents `(width, height, depth)` of the marker set.
pub fn bounding_box(frame: &MarkerFrame) -> Result<Vec3> {
    if frame.markers.is_empty() {
        return Err(Error::insufficient("bounding box of an empty frame"));
    }
    let (lo, hi) = extents(frame.positions());
    Ok(sub(hi, lo))
}

/// Volume of the 3D convex hull of the markers; 0 for coplanar or collinear sets.
///
/// Hull faces are found by enumerating supporting planes through marker
/// triples, which is O(n⁴) and meant for body-marker counts (tens to a few
/// hundred points).
pub fn convex_hull_volume(frame: &MarkerFrame) -> Result<f64> {
    if frame.markers.len() < 4 {
        return Err(Error::insufficient(
            "convex hull volume needs at least 4 markers",
        ));
    }
    let pts: Vec<Vec3> = frame.positions().collect();
    Ok(hull_volume(&pts))
}

/// Rotates `reference` by each IMU orientation, drops the vertical component
/// and sums pairwise horizontal distances: 0 when all limbs point the same
/// way, large when they point apart.
pub fn imu_contraction_estimate(frames: &[ImuFrame], reference: Vec3) -> Result<f64> {
    if frames.len() < 2 {
        return Err(Error::insufficient("IMU contraction needs at least 2 IMUs"));
    }
    let r = norm(reference);
    if !(r > 0.0) {
        return Err(Error::param("reference vector must be non-zero"));
    }
    let reference = [reference[0] / r, reference[1] / r, reference[2] / r];
    let projected: Vec<[f64; 2]> = frames
        .iter()
        .map(|f| {
            let v = f.quat.rotate(reference);
            [v[0], v[1]]
        })
        .collect();
    let mut total = 0.0;
    for (i, a) in projected.iter().enumerate() {
        for b in &projected[i + 1..] {
            total += ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        }
    }
    Ok(total)
}

fn centroid(points: impl Iterator<Item = Vec3>) -> Vec3 {
    let mut sum = [0.0; 3];
    let mut n = 0usize;
    for p in points {
        for k in 0..3 {
            sum[k] += p[k];
        }
        n += 1;
    }
    sum.map(|s| s / n as f64)
}

fn extents(points: impl Iterator<Item = Vec3>) -> (Vec3, Vec3) {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in points {
        for k in 0..3 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}

fn hull_volume(pts: &[Vec3]) -> f64 {
    let (lo, hi) = extents(pts.iter().copied());
    let scale = norm(sub(hi, lo));
    if scale == 0.0 {
        return 0.0;
    }
    let tol = 1e-9 * scale;
    let c = centroid(pts.iter().copied());
    let mut faces: HashSet<Vec<usize>> = HashSet::new();
    let mut volume = 0.0;
    let n = pts.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let normal = cross(sub(pts[j], pts[i]), sub(pts[k], pts[i]));
                let len = norm(normal);
                if len <= tol * scale {
                    continue;
                }
                let unit = normal.map(|v| v / len);
                let offset = dot(unit, pts[i]);
                let (mut above, mut below) = (false, false);
                let mut on_plane = Vec::new();
                for (idx, p) in pts.iter().enumerate() {
                    let s = dot(unit, *p) - offset;
                    if s > tol {
                        above = true;
                    } else if s < -tol {
                        below = true;
                    } else {
                        on_plane.push(idx);
                    }
                    if above && below {
                        break;
                    }
                }
                if above && below {
                    continue;
                }
                if !faces.insert(on_plane.clone()) {
                    continue;
                }
                let face: Vec<Vec3> = on_plane.iter().map(|&idx| pts[idx]).collect();
                let height = (dot(unit, c) - offset).abs();
                volume += planar_hull_area(&face, unit) * height / 3.0;
            }
        }
    }
    volume
}

/// Area of the 2D convex hull of coplanar points with plane normal `unit`.
fn planar_hull_area(points: &[Vec3], unit: Vec3) -> f64 {
    let helper = if unit[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let u = cross(unit, helper);
    let u = u.map(|v| v / norm(u));
    let v = cross(unit, u);
    let mut pts: Vec<[f64; 2]> = points.iter().map(|p| [dot(*p, u), dot(*p, v)]).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    pts.dedup();
    if pts.len() < 3 {
        return 0.0;
    }
    let turn = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for p in iter {
            while hull.len() >= start + 2
                && turn(hull[hull.len() - 2], hull[hull.len() - 1], *p) <= 0.0
            {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    let area2: f64 = (0..hull.len())
        .map(|i| {
            let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum();
    area2.abs() / 2.0
}
