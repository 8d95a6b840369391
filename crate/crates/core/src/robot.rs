//! The 18-joint hexapod model with its forward kinematics and rate-limited
//! servos.
//!
//! Body frame: origin at the centre of the top face of the body collision
//! box, `x` forward, `y` left, `z` up. The base height `b` is therefore the
//! overall robot height above the floor. Legs are ordered
//! LF, LM, LR, RF, RM, RR and joint `leg * 3 + {0, 1, 2}` is the
//! coxa (yaw), femur (pitch, positive raises the knee) and tibia (pitch).

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const NUM_LEGS: usize = 6;
pub const NUM_JOINTS: usize = 18;
pub const GRAVITY: f64 = 9.81;

/// Hard joint range, ±120 degrees.
pub const JOINT_LIMIT: f64 = 2.0 * std::f64::consts::FRAC_PI_3;

pub const LEG_NAMES: [&str; NUM_LEGS] = ["LF", "LM", "LR", "RF", "RM", "RR"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegMount {
    /// Coxa axis position in the body frame (m).
    pub position: [f64; 3],
    /// Direction the leg points at zero coxa angle (rad, CCW from +x).
    pub yaw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServoParams {
    /// Maximum joint speed (rad/s).
    pub max_speed: f64,
    /// Proportional gain of the torque proxy.
    pub kp: f64,
    pub tau_max: f64,
}

impl Default for ServoParams {
    fn default() -> Self {
        Self { max_speed: 4.0, kp: 10.0, tau_max: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobotGeometry {
    pub body_half_length: f64,
    pub body_half_width: f64,
    pub mounts: [LegMount; NUM_LEGS],
    pub coxa: f64,
    pub femur: f64,
    pub tibia: f64,
    /// Overall height when standing in the reset pose (m).
    pub standing_height: f64,
    /// Overall height when lying on the belly; also the collision box depth (m).
    pub flat_height: f64,
    pub mass: f64,
    /// Centre of mass in the body frame (m).
    pub com: [f64; 3],
    pub reset_angles: [f64; NUM_JOINTS],
    pub joint_min: [f64; NUM_JOINTS],
    pub joint_max: [f64; NUM_JOINTS],
    pub servo: ServoParams,
}

impl Default for RobotGeometry {
    fn default() -> Self {
        let mount_z = -0.2625;
        let mounts = [
            LegMount { position: [0.12, 0.08, mount_z], yaw: FRAC_PI_4 },
            LegMount { position: [0.0, 0.10, mount_z], yaw: FRAC_PI_2 },
            LegMount { position: [-0.12, 0.08, mount_z], yaw: 3.0 * FRAC_PI_4 },
            LegMount { position: [0.12, -0.08, mount_z], yaw: -FRAC_PI_4 },
            LegMount { position: [0.0, -0.10, mount_z], yaw: -FRAC_PI_2 },
            LegMount { position: [-0.12, -0.08, mount_z], yaw: -3.0 * FRAC_PI_4 },
        ];
        let mut g = Self {
            body_half_length: 0.15,
            body_half_width: 0.09,
            mounts,
            coxa: 0.045,
            femur: 0.09,
            tibia: 0.13,
            standing_height: 0.37,
            flat_height: 0.2875,
            mass: 2.0,
            com: [0.0, 0.0, -0.14375],
            reset_angles: [0.0; NUM_JOINTS],
            joint_min: [-JOINT_LIMIT; NUM_JOINTS],
            joint_max: [JOINT_LIMIT; NUM_JOINTS],
            servo: ServoParams::default(),
        };
        let femur = 0.2;
        let tibia = g.tibia_for_foot_depth(femur, -g.standing_height - mount_z).unwrap_or(-1.5);
        for leg in 0..NUM_LEGS {
            g.reset_angles[leg * 3 + 1] = femur;
            g.reset_angles[leg * 3 + 2] = tibia;
        }
        g
    }
}

impl RobotGeometry {
    pub fn validate(&self) -> Result<()> {
        let lengths = [
            self.body_half_length,
            self.body_half_width,
            self.coxa,
            self.femur,
            self.tibia,
            self.standing_height,
            self.flat_height,
            self.mass,
        ];
        if lengths.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::params("robot lengths and mass must be positive"));
        }
        for j in 0..NUM_JOINTS {
            if !(self.joint_min[j] < self.joint_max[j]) {
                return Err(Error::params(format!("joint {j} has an empty range")));
            }
            if !(self.joint_min[j]..=self.joint_max[j]).contains(&self.reset_angles[j]) {
                return Err(Error::params(format!("reset angle of joint {j} outside its range")));
            }
        }
        Ok(())
    }

    pub fn weight(&self) -> f64 {
        self.mass * GRAVITY
    }

    /// Tibia angle that puts the foot `depth` metres above the coxa axis
    /// (negative = below) for the given femur angle.
    pub fn tibia_for_foot_depth(&self, femur: f64, depth: f64) -> Option<f64> {
        let s = (depth - self.femur * femur.sin()) / self.tibia;
        (s.abs() <= 1.0).then(|| s.asin() - femur)
    }

    /// Body-frame corners of the collision box bottom face.
    pub fn belly_corners(&self) -> [Vector3<f64>; 4] {
        let (l, w, z) = (self.body_half_length, self.body_half_width, -self.flat_height);
        [
            Vector3::new(l, w, z),
            Vector3::new(l, -w, z),
            Vector3::new(-l, -w, z),
            Vector3::new(-l, w, z),
        ]
    }

    /// Body-frame sample points on the collision box top face: corners,
    /// edge midpoints and centre.
    pub fn top_points(&self) -> [Vector3<f64>; 9] {
        let (l, w) = (self.body_half_length, self.body_half_width);
        let mut out = [Vector3::zeros(); 9];
        let mut k = 0;
        for sx in [-1.0, 0.0, 1.0] {
            for sy in [-1.0, 0.0, 1.0] {
                out[k] = Vector3::new(sx * l, sy * w, 0.0);
                k += 1;
            }
        }
        out
    }

    /// Forward tip of the body at mid-width, in the body frame.
    pub fn front_offset(&self) -> f64 {
        self.body_half_length
    }
}

/// Body-frame points along one leg.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegPoints {
    pub mount: Vector3<f64>,
    pub femur_joint: Vector3<f64>,
    pub knee: Vector3<f64>,
    pub foot: Vector3<f64>,
}

/// Serial-chain kinematics of one leg in the body frame.
pub fn leg_points(geom: &RobotGeometry, angles: &[f64; NUM_JOINTS], leg: usize) -> LegPoints {
    let m = &geom.mounts[leg];
    let (coxa, femur, tibia) = (angles[leg * 3], angles[leg * 3 + 1], angles[leg * 3 + 2]);
    let (sy, cy) = (m.yaw + coxa).sin_cos();
    let (sf, cf) = femur.sin_cos();
    let (st, ct) = (femur + tibia).sin_cos();
    let mount = Vector3::from(m.position);
    let femur_joint = mount + Vector3::new(cy, sy, 0.0) * geom.coxa;
    let knee = femur_joint + Vector3::new(cf * cy, cf * sy, sf) * geom.femur;
    let foot = knee + Vector3::new(ct * cy, ct * sy, st) * geom.tibia;
    LegPoints { mount, femur_joint, knee, foot }
}

/// Body-frame foot positions of all six legs.
pub fn feet_body(geom: &RobotGeometry, angles: &[f64; NUM_JOINTS]) -> [Vector3<f64>; NUM_LEGS] {
    std::array::from_fn(|leg| leg_points(geom, angles, leg).foot)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointState {
    pub angles: [f64; NUM_JOINTS],
    pub velocities: [f64; NUM_JOINTS],
    pub targets: [f64; NUM_JOINTS],
    pub prev_velocities: [f64; NUM_JOINTS],
}

impl JointState {
    pub fn at_rest(angles: [f64; NUM_JOINTS]) -> Self {
        Self { angles, velocities: [0.0; NUM_JOINTS], targets: angles, prev_velocities: [0.0; NUM_JOINTS] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseState {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
    /// World-frame linear velocity (m/s).
    pub linear_velocity: Vector3<f64>,
    /// World-frame angular velocity (rad/s); `z` is the yaw rate.
    pub angular_velocity: Vector3<f64>,
    /// Heading (rad). Kept alongside the quaternion so that repeated pose
    /// rebuilds never drift.
    pub heading: f64,
    /// Set once the centre of mass has left the support polygon.
    pub tip: Option<Tip>,
}

/// An irreversible fall about a support edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tip {
    /// Horizontal unit vector the body falls toward.
    pub direction: [f64; 2],
    /// Extra rotation applied on top of the resting orientation (rad).
    pub angle: f64,
    pub rate: f64,
    /// Height of the centre of mass above the pivot edge (m).
    pub lever: f64,
    /// Angle between the vertical and the pivot-to-CoM line at onset (rad).
    pub onset: f64,
}

impl BaseState {
    pub fn at(position: Vector3<f64>, yaw: f64) -> Self {
        Self {
            position,
            orientation: UnitQuaternion::from_euler_angles(0.0, 0.0, yaw),
            linear_velocity: Vector3::zeros(),
            angular_velocity: Vector3::zeros(),
            heading: yaw,
            tip: None,
        }
    }

    /// `(roll, pitch, yaw)`.
    pub fn euler(&self) -> (f64, f64, f64) {
        self.orientation.euler_angles()
    }

    /// Roll and pitch, the absolute tilt of the body from level.
    pub fn tilt(&self) -> f64 {
        let up = self.orientation * Vector3::z();
        up.z.clamp(-1.0, 1.0).acos()
    }

    /// Linear velocity in the heading frame: `(forward, left, up)`.
    pub fn heading_velocity(&self) -> Vector3<f64> {
        let (s, c) = self.heading.sin_cos();
        let v = &self.linear_velocity;
        Vector3::new(c * v.x + s * v.y, -s * v.x + c * v.y, v.z)
    }

    pub fn to_world(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.position + self.orientation * p
    }
}

/// Joint angles and base pose at reset, base `standing_height` above `floor`.
pub fn reset_pose(geom: &RobotGeometry, x: f64, y: f64, yaw: f64, floor: f64) -> (JointState, BaseState) {
    (
        JointState::at_rest(geom.reset_angles),
        BaseState::at(Vector3::new(x, y, floor + geom.standing_height), yaw),
    )
}

/// World-frame foot positions and per-leg link points.
#[derive(Debug, Clone, PartialEq)]
pub struct Kinematics {
    pub feet: [Vector3<f64>; NUM_LEGS],
    pub legs: [LegPoints; NUM_LEGS],
}

pub fn forward_kinematics(geom: &RobotGeometry, joints: &JointState, base: &BaseState) -> Kinematics {
    let legs = std::array::from_fn(|leg| {
        let p = leg_points(geom, &joints.angles, leg);
        LegPoints {
            mount: base.to_world(&p.mount),
            femur_joint: base.to_world(&p.femur_joint),
            knee: base.to_world(&p.knee),
            foot: base.to_world(&p.foot),
        }
    });
    let feet = std::array::from_fn(|leg: usize| legs[leg].foot);
    Kinematics { feet, legs }
}

/// Rate-limited first-order tracking of commanded angles. Non-finite
/// commands hold the current angle.
pub fn servo_step(geom: &RobotGeometry, joints: &JointState, commanded: &[f64; NUM_JOINTS], dt: f64) -> JointState {
    let max_step = geom.servo.max_speed * dt;
    let mut next = *joints;
    next.prev_velocities = joints.velocities;
    for j in 0..NUM_JOINTS {
        let cmd = if commanded[j].is_finite() { commanded[j] } else { joints.angles[j] };
        let target = cmd.clamp(geom.joint_min[j], geom.joint_max[j]);
        let delta = (target - joints.angles[j]).clamp(-max_step, max_step);
        next.targets[j] = target;
        next.angles[j] = (joints.angles[j] + delta).clamp(geom.joint_min[j], geom.joint_max[j]);
        next.velocities[j] = (next.angles[j] - joints.angles[j]) / dt;
    }
    next
}

/// Proportional torque estimate `kp * (target - angle)`, saturated.
pub fn torque_proxy(geom: &RobotGeometry, joints: &JointState) -> [f64; NUM_JOINTS] {
    let ServoParams { kp, tau_max, .. } = geom.servo;
    std::array::from_fn(|j| (kp * (joints.targets[j] - joints.angles[j])).clamp(-tau_max, tau_max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reset_feet_touch_the_floor() {
        let g = RobotGeometry::default();
        g.validate().unwrap();
        let (j, b) = reset_pose(&g, 0.0, 0.0, 0.0, 0.0);
        assert_eq!(b.position.z, 0.37);
        let k = forward_kinematics(&g, &j, &b);
        for f in k.feet {
            assert!(f.z.abs() < 1e-12, "foot z {}", f.z);
        }
    }

    #[test]
    fn zero_pose_matches_hand_layout() {
        // All joints zero: each leg is a straight horizontal line of length
        // coxa + femur + tibia = 0.265 from its mount, at the mount height.
        let g = RobotGeometry::default();
        let j = JointState::at_rest([0.0; NUM_JOINTS]);
        let b = BaseState::at(Vector3::zeros(), 0.0);
        let k = forward_kinematics(&g, &j, &b);
        let r = 0.265 * std::f64::consts::FRAC_1_SQRT_2;
        let expect = [
            [0.12 + r, 0.08 + r],
            [0.0, 0.10 + 0.265],
            [-0.12 - r, 0.08 + r],
            [0.12 + r, -0.08 - r],
            [0.0, -0.10 - 0.265],
            [-0.12 - r, -0.08 - r],
        ];
        for (f, e) in k.feet.iter().zip(expect) {
            assert!((f.x - e[0]).abs() < 1e-12 && (f.y - e[1]).abs() < 1e-12);
            assert!((f.z + 0.2625).abs() < 1e-12);
        }
    }

    #[test]
    fn servo_rate_limit() {
        let g = RobotGeometry::default();
        let j = JointState::at_rest([0.0; NUM_JOINTS]);
        let mut cmd = [0.0; NUM_JOINTS];
        cmd[0] = 1.0;
        cmd[1] = 130f64.to_radians();
        let n = servo_step(&g, &j, &cmd, 0.05);
        assert!((n.angles[0] - 0.2).abs() < 1e-12);
        assert!((n.velocities[0] - 4.0).abs() < 1e-12);
        assert_eq!(n.targets[1], JOINT_LIMIT);
        let still = servo_step(&g, &j, &j.angles, 0.05);
        assert_eq!(still.angles, j.angles);
        assert!(still.velocities.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn torque_proxy_law() {
        let g = RobotGeometry::default();
        let mut j = JointState::at_rest([0.0; NUM_JOINTS]);
        assert!(torque_proxy(&g, &j).iter().all(|&t| t == 0.0));
        j.targets[0] = 0.1;
        j.targets[1] = 3.0;
        let t = torque_proxy(&g, &j);
        assert!((t[0] - 1.0).abs() < 1e-12);
        assert_eq!(t[1], 5.0);
    }
}
