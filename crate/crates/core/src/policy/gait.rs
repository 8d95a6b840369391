//! Parametric tripod gait.
//!
//! Legs LF, RM, LR form tripod A and RF, LM, RR tripod B, half a cycle apart.
//! Each leg follows a sinusoidal coxa sweep `u = A sin(phase)`; the foot is
//! lifted while `cos(phase) > 0`, which is exactly the half-cycle in which it
//! swings forward. Crouching raises both femur and knee by the same angle so
//! the tibia keeps its absolute orientation.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::robot::{feet_body, RobotGeometry, NUM_JOINTS, NUM_LEGS};
use crate::{Error, Result};

/// Phase offset per leg (LF, LM, LR, RF, RM, RR).
pub const TRIPOD_PHASE: [f64; NUM_LEGS] = [0.0, PI, 0.0, PI, 0.0, PI];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaitParams {
    /// Cycles per second.
    pub frequency: f64,
    /// Coxa sweep amplitude (rad).
    pub coxa_amplitude: f64,
    /// Femur raise at the top of the swing (rad).
    pub femur_lift: f64,
    /// Tibia tuck at the top of the swing (rad).
    pub tibia_amplitude: f64,
    /// Body-lowering offset applied to femur (+) and tibia (-) (rad).
    pub crouch: f64,
    /// Added to the right-side sweep and removed from the left (rad).
    pub turn_bias: f64,
}

impl Default for GaitParams {
    fn default() -> Self {
        Self { frequency: 1.0, coxa_amplitude: 0.25, femur_lift: 0.35, tibia_amplitude: 0.0, crouch: 0.0, turn_bias: 0.0 }
    }
}

impl GaitParams {
    /// Checks that every target the gait can emit stays inside the joint range.
    pub fn validate(&self, geom: &RobotGeometry) -> Result<()> {
        if !(self.frequency > 0.0 && self.frequency.is_finite()) {
            return Err(Error::params("gait frequency must be positive"));
        }
        let (lo, hi) = self.extremes(geom);
        for j in 0..NUM_JOINTS {
            if lo[j] < geom.joint_min[j] - 1e-12 || hi[j] > geom.joint_max[j] + 1e-12 {
                return Err(Error::params(format!(
                    "gait drives joint {j} to [{:.3}, {:.3}] rad, outside its range",
                    lo[j], hi[j]
                )));
            }
        }
        Ok(())
    }

    fn extremes(&self, geom: &RobotGeometry) -> ([f64; NUM_JOINTS], [f64; NUM_JOINTS]) {
        let mut lo = [f64::INFINITY; NUM_JOINTS];
        let mut hi = [f64::NEG_INFINITY; NUM_JOINTS];
        for leg in 0..NUM_LEGS {
            let amp = self.side_amplitude(leg).abs();
            let r = &geom.reset_angles[leg * 3..leg * 3 + 3];
            let ranges = [
                (r[0] - amp, r[0] + amp),
                (r[1] + self.crouch + self.femur_lift.min(0.0), r[1] + self.crouch + self.femur_lift.max(0.0)),
                (
                    r[2] - self.crouch + self.tibia_amplitude.min(0.0),
                    r[2] - self.crouch + self.tibia_amplitude.max(0.0),
                ),
            ];
            for (k, (a, b)) in ranges.into_iter().enumerate() {
                lo[leg * 3 + k] = a;
                hi[leg * 3 + k] = b;
            }
        }
        (lo, hi)
    }

    fn side_amplitude(&self, leg: usize) -> f64 {
        if is_left(leg) {
            self.coxa_amplitude - self.turn_bias
        } else {
            self.coxa_amplitude + self.turn_bias
        }
    }
}

pub fn is_left(leg: usize) -> bool {
    leg < 3
}

/// Joint targets at time `t` (s).
pub fn tripod_gait(params: &GaitParams, geom: &RobotGeometry, t: f64) -> [f64; NUM_JOINTS] {
    let cycle = (params.frequency * t).fract();
    let mut out = geom.reset_angles;
    for leg in 0..NUM_LEGS {
        let phase = TAU * cycle + TRIPOD_PHASE[leg];
        let (s, c) = phase.sin_cos();
        let u = params.side_amplitude(leg) * s;
        let lift = c.max(0.0);
        out[leg * 3] += if is_left(leg) { -u } else { u };
        out[leg * 3 + 1] += params.crouch + params.femur_lift * lift;
        out[leg * 3 + 2] += -params.crouch + params.tibia_amplitude * lift;
    }
    out
}

/// Stance-pose joint targets for a crouch offset, with the legs held still.
pub fn crouched_stance(geom: &RobotGeometry, crouch: f64) -> [f64; NUM_JOINTS] {
    let mut out = geom.reset_angles;
    for leg in 0..NUM_LEGS {
        out[leg * 3 + 1] += crouch;
        out[leg * 3 + 2] -= crouch;
    }
    out
}

/// Overall robot height on flat ground for a crouch offset.
pub fn standing_height_for_crouch(geom: &RobotGeometry, crouch: f64) -> f64 {
    let feet = feet_body(geom, &crouched_stance(geom, crouch));
    -feet.iter().map(|f| f.z).fold(f64::INFINITY, f64::min)
}

/// Crouch offset that brings the robot height to `height` on flat ground,
/// found by bisection. Errors if the height is out of reach.
pub fn crouch_offset_for_height(geom: &RobotGeometry, height: f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0, geom.joint_max[1] - geom.reset_angles[1]);
    let (h_lo, h_hi) = (standing_height_for_crouch(geom, lo), standing_height_for_crouch(geom, hi));
    if !(height <= h_lo && height >= h_hi.min(h_lo)) {
        return Err(Error::params(format!("height {height} outside reachable [{h_hi:.4}, {h_lo:.4}]")));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if standing_height_for_crouch(geom, mid) > height {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gait_is_periodic() {
        let g = RobotGeometry::default();
        let p = GaitParams { frequency: 1.25, ..Default::default() };
        for k in 0..20 {
            let t = 0.037 * k as f64;
            let a = tripod_gait(&p, &g, t);
            let b = tripod_gait(&p, &g, t + 1.0 / p.frequency);
            for j in 0..NUM_JOINTS {
                assert!((a[j] - b[j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_turn_bias_is_mirror_symmetric() {
        let g = RobotGeometry::default();
        let p = GaitParams::default();
        for k in 0..10 {
            let t = 0.1 * k as f64;
            let a = tripod_gait(&p, &g, t);
            // RF mirrors LF half a cycle later, since they sit in opposite tripods
            let b = tripod_gait(&p, &g, t + 0.5 / p.frequency);
            for leg in 0..3 {
                let (l, r) = (leg, leg + 3);
                assert!((a[l * 3] - g.reset_angles[l * 3] + (b[r * 3] - g.reset_angles[r * 3])).abs() < 1e-9);
                assert!((a[l * 3 + 1] - b[r * 3 + 1]).abs() < 1e-9);
                assert!((a[l * 3 + 2] - b[r * 3 + 2]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn crouch_lowers_height() {
        let g = RobotGeometry::default();
        assert!((standing_height_for_crouch(&g, 0.0) - 0.37).abs() < 1e-12);
        let d = crouch_offset_for_height(&g, 0.32).unwrap();
        assert!(d > 0.0);
        assert!((standing_height_for_crouch(&g, d) - 0.32).abs() < 1e-9);
        assert!(crouch_offset_for_height(&g, 0.1).is_err());
    }

    #[test]
    fn validation_rejects_out_of_range_sweeps() {
        let g = RobotGeometry::default();
        assert!(GaitParams::default().validate(&g).is_ok());
        assert!(GaitParams { coxa_amplitude: 2.5, ..Default::default() }.validate(&g).is_err());
    }
}
