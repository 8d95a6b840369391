//! Height-map functionals for the obstacle terms.
//!
//! Patches are indexed `(i, j)` with `i` over forward rows (far to near) and
//! `j` over lateral columns. Both functionals are unsigned; the task weight
//! carries the sign.

use crate::heightmap::HeightPatch;

/// Ramp from 1 at the far row to 2 at the nearest row.
pub fn ramp_weight(i: usize, m: usize) -> f64 {
    if m <= 1 {
        1.0
    } else {
        1.0 + i as f64 / (m - 1) as f64
    }
}

/// Triangle with value 1 at both edges and 2 in the centre.
pub fn triangle_weight(j: usize, n: usize) -> f64 {
    if n <= 1 {
        1.0
    } else {
        let span = (n - 1) as f64;
        1.0 + (1.0 - (2.0 * j as f64 - span).abs() / span)
    }
}

/// Weighted count of cells above the local ground.
pub fn avoidance_functional(patch: &HeightPatch) -> f64 {
    let (m, n) = (patch.rows(), patch.cols());
    let values = patch.values();
    let mut total = 0.0;
    for i in 0..m {
        let w2 = ramp_weight(i, m);
        let row = &values[i * n..(i + 1) * n];
        for (j, &h) in row.iter().enumerate() {
            if h > 0.0 {
                total += triangle_weight(j, n) * w2;
            }
        }
    }
    total
}

/// Piecewise overhead score for base height `b`: `+1` per cell whose height
/// exceeds `b`, `-2 |h - b|` otherwise, ramp-weighted toward the robot.
pub fn squeeze_functional(patch: &HeightPatch, b: f64) -> f64 {
    let (m, n) = (patch.rows(), patch.cols());
    let values = patch.values();
    let mut total = 0.0;
    for i in 0..m {
        let w4 = ramp_weight(i, m);
        for &h in &values[i * n..(i + 1) * n] {
            let d = h - b;
            let h2 = if d > 0.0 { 1.0 } else { -2.0 * d.abs() };
            total += h2 * w4;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heightmap::PatchLayer;

    fn patch(m: usize, n: usize, v: Vec<f64>) -> HeightPatch {
        HeightPatch::from_values(m, n, v, PatchLayer::FloorOnly).unwrap()
    }

    #[test]
    fn weight_endpoints() {
        assert_eq!(triangle_weight(0, 5), 1.0);
        assert_eq!(triangle_weight(2, 5), 2.0);
        assert_eq!(triangle_weight(4, 5), 1.0);
        assert_eq!(ramp_weight(0, 7), 1.0);
        assert_eq!(ramp_weight(6, 7), 2.0);
        assert_eq!(ramp_weight(0, 1), 1.0);
        assert_eq!(triangle_weight(0, 1), 1.0);
    }

    #[test]
    fn small_avoidance_cases() {
        assert_eq!(avoidance_functional(&patch(2, 3, vec![0.0; 6])), 0.0);
        assert_eq!(avoidance_functional(&patch(2, 3, vec![0.1; 6])), 12.0);
        assert_eq!(avoidance_functional(&patch(2, 3, vec![0.0, 0.0, 0.0, 0.0, 0.2, 0.0])), 4.0);
    }

    #[test]
    fn squeeze_branches() {
        assert!((squeeze_functional(&patch(1, 1, vec![0.0]), 0.3) + 0.6).abs() < 1e-15);
        assert_eq!(squeeze_functional(&patch(1, 1, vec![0.31]), 0.30), 1.0);
        assert!((squeeze_functional(&patch(1, 1, vec![0.31]), 0.35) + 0.08).abs() < 1e-15);
    }
}
