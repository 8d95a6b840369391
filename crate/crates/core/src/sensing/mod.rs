//! Observation synthesis: the depth camera and pose sensor the student sees,
//! and the privileged height patch plus joint feedback the teacher sees.

mod depth;
mod pose;

pub use depth::{camera_pose, render_depth, render_depth_into, DepthAccel, DepthImage};
pub use pose::{sense_pose, PoseEstimate, PoseNoise};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::heightmap::{extract_patch, HeightPatch, LayeredHeightField, PatchLayer, PatchSpec, PlanarPose, DEFAULT_PATCH_CELL};
use crate::robot::{BaseState, JointState, RobotGeometry, NUM_JOINTS};
use crate::{Error, Result, Task};

pub const DEPTH_WIDTH: usize = 320;
pub const DEPTH_HEIGHT: usize = 240;

/// Length of the teacher's proprioceptive vector: joint angles (18), joint
/// velocities (18), base position (3), orientation quaternion `xyzw` (4),
/// linear velocity (3), angular velocity (3), last action (18).
pub const PROPRIO_LEN: usize = 67;

/// Length of the student's non-image vector: position (3), quaternion (4),
/// last action (18).
pub const STUDENT_VEC_LEN: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraModel {
    pub width: usize,
    pub height: usize,
    /// Horizontal field of view (rad).
    pub hfov: f64,
    /// Downward inclination of the optical axis (rad).
    pub tilt: f64,
    /// Optical centre in the body frame (m).
    pub mount: [f64; 3],
    pub near: f64,
    pub far: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            width: DEPTH_WIDTH,
            height: DEPTH_HEIGHT,
            hfov: 70f64.to_radians(),
            tilt: 0.0,
            mount: [0.13, 0.0, -0.02],
            near: 0.1,
            far: 4.0,
        }
    }
}

impl CameraModel {
    pub fn validate(&self) -> Result<()> {
        if self.width != DEPTH_WIDTH || self.height != DEPTH_HEIGHT {
            return Err(Error::params(format!(
                "depth images are {DEPTH_WIDTH}x{DEPTH_HEIGHT}, got {}x{}",
                self.width, self.height
            )));
        }
        if !(self.hfov > 0.0 && self.hfov < std::f64::consts::PI) {
            return Err(Error::params("hfov must lie in (0, pi)"));
        }
        if !(self.near > 0.0 && self.far > self.near) {
            return Err(Error::params("depth range must satisfy 0 < near < far"));
        }
        Ok(())
    }

    /// Focal length in pixels.
    pub fn focal_px(&self) -> f64 {
        0.5 * self.width as f64 / (0.5 * self.hfov).tan()
    }
}

/// Camera angle and privileged patch geometry for one task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorProfile {
    pub camera: CameraModel,
    pub patch: PatchSpec,
    pub layer: PatchLayer,
}

impl SensorProfile {
    pub fn for_task(task: Task) -> Self {
        Self::with_cell(task, DEFAULT_PATCH_CELL)
    }

    pub fn with_cell(task: Task, cell_size: f64) -> Self {
        let (tilt_deg, width, length, standoff) = match task {
            Task::Joist | Task::Stairs => (30.0, 0.6, 0.8, 0.3),
            Task::Avoidance => (30.0, 0.6, 1.0, 0.6),
            Task::Squeeze => (0.0, 0.6, 0.8, 0.0),
        };
        let layer = if task == Task::Squeeze { PatchLayer::SqueezeComposite } else { PatchLayer::FloorOnly };
        Self {
            camera: CameraModel { tilt: f64::to_radians(tilt_deg), ..CameraModel::default() },
            patch: PatchSpec { width, length, standoff, cell_size },
            layer,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseSummary {
    pub position: [f64; 3],
    /// `xyzw`.
    pub orientation: [f64; 4],
    pub linear_velocity: [f64; 3],
    pub angular_velocity: [f64; 3],
}

impl From<&BaseState> for BaseSummary {
    fn from(b: &BaseState) -> Self {
        let q = b.orientation.as_ref();
        Self {
            position: b.position.into(),
            orientation: [q.i, q.j, q.k, q.w],
            linear_velocity: b.linear_velocity.into(),
            angular_velocity: b.angular_velocity.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeacherObservation {
    /// Heights relative to the floor under the base.
    pub patch: HeightPatch,
    pub joint_angles: [f64; NUM_JOINTS],
    pub joint_velocities: [f64; NUM_JOINTS],
    pub base: BaseSummary,
    pub last_action: [f64; NUM_JOINTS],
}

impl TeacherObservation {
    pub fn proprio(&self) -> [f64; PROPRIO_LEN] {
        let mut out = [0.0; PROPRIO_LEN];
        let parts: [&[f64]; 7] = [
            &self.joint_angles,
            &self.joint_velocities,
            &self.base.position,
            &self.base.orientation,
            &self.base.linear_velocity,
            &self.base.angular_velocity,
            &self.last_action,
        ];
        let mut k = 0;
        for p in parts {
            out[k..k + p.len()].copy_from_slice(p);
            k += p.len();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudentObservation {
    pub depth: DepthImage,
    pub pose: PoseEstimate,
    pub last_action: [f64; NUM_JOINTS],
}

impl StudentObservation {
    pub fn vector(&self) -> [f64; STUDENT_VEC_LEN] {
        let mut out = [0.0; STUDENT_VEC_LEN];
        out[..7].copy_from_slice(&self.pose.to_array());
        out[7..].copy_from_slice(&self.last_action);
        out
    }
}

/// Front-centre point of the body, where patches are anchored.
pub fn front_pose(geom: &RobotGeometry, base: &BaseState) -> PlanarPose {
    let (s, c) = base.heading.sin_cos();
    let f = geom.front_offset();
    PlanarPose { x: base.position.x + c * f, y: base.position.y + s * f, yaw: base.heading }
}

pub fn assemble_teacher(
    profile: &SensorProfile,
    geom: &RobotGeometry,
    joints: &JointState,
    base: &BaseState,
    last_action: &[f64; NUM_JOINTS],
    field: &LayeredHeightField,
) -> TeacherObservation {
    let ground = field.sample_floor(base.position.x, base.position.y);
    let patch = extract_patch(field, front_pose(geom, base), &profile.patch, profile.layer).relative_to(ground);
    TeacherObservation {
        patch,
        joint_angles: joints.angles,
        joint_velocities: joints.velocities,
        base: BaseSummary::from(base),
        last_action: *last_action,
    }
}

/// Builds the student observation, rendering into `depth` to reuse its buffer.
#[allow(clippy::too_many_arguments)]
pub fn assemble_student(
    profile: &SensorProfile,
    base: &BaseState,
    last_action: &[f64; NUM_JOINTS],
    field: &LayeredHeightField,
    accel: &DepthAccel,
    noise: &PoseNoise,
    rng: &mut impl Rng,
    mut depth: DepthImage,
) -> StudentObservation {
    render_depth_into(&profile.camera, base, field, accel, &mut depth);
    StudentObservation { depth, pose: sense_pose(base, noise, rng), last_action: *last_action }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    #[test]
    fn table_profiles() {
        let sq = SensorProfile::for_task(Task::Squeeze);
        assert_eq!((sq.patch.width, sq.patch.length, sq.patch.standoff), (0.6, 0.8, 0.0));
        assert_eq!(sq.camera.tilt, 0.0);
        assert_eq!(sq.layer, PatchLayer::SqueezeComposite);
        let av = SensorProfile::for_task(Task::Avoidance);
        assert_eq!((av.patch.width, av.patch.length, av.patch.standoff), (0.6, 1.0, 0.6));
        assert_eq!((av.patch.rows(), av.patch.cols()), (20, 12));
        let st = SensorProfile::for_task(Task::Stairs);
        assert_eq!(st.camera.tilt, 30f64.to_radians());
        assert_eq!((st.patch.rows(), st.patch.cols()), (16, 12));
    }

    #[test]
    fn proprio_layout() {
        let g = RobotGeometry::default();
        let j = JointState::at_rest(g.reset_angles);
        let b = BaseState::at(Vector3::new(1.0, 2.0, 0.37), 0.0);
        let field = LayeredHeightField::flat(10, 10, 0.1, [0.0, 0.0], 0.0).unwrap();
        let obs = assemble_teacher(&SensorProfile::for_task(Task::Stairs), &g, &j, &b, &[0.5; 18], &field);
        let v = obs.proprio();
        assert_eq!(&v[..18], &g.reset_angles);
        assert_eq!(&v[36..39], &[1.0, 2.0, 0.37]);
        assert_eq!(v[42], 1.0); // qw of the identity
        assert_eq!(&v[49..], &[0.5; 18]);
    }
}
