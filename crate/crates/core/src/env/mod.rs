//! Episodes: reset, step, termination and the data a step returns.
//!
//! A step runs the servos, lays the body onto the terrain, moves it, senses
//! and scores, in that order. Everything is a function of the config, its
//! seed and the action sequence.

mod batch;
mod curriculum;
mod trace;

pub use batch::{splitmix64, VecEnv};
pub use curriculum::{curriculum_advance, Curriculum, PROMOTION_THRESHOLD, PROMOTION_WINDOW};
pub use trace::{TraceRecorder, TraceRow};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::physics::{advance, resolve_contacts, ContactParams, ContactReport};
use crate::reward::{compose, RewardBreakdown, RewardConfig, RewardInputs, Term};
use crate::robot::{reset_pose, servo_step, torque_proxy, BaseState, JointState, RobotGeometry, NUM_JOINTS, NUM_LEGS};
use crate::sensing::{
    assemble_student, assemble_teacher, DepthAccel, DepthImage, PoseNoise, SensorProfile, StudentObservation,
    TeacherObservation,
};
use crate::terrain::{build_terrain, CurriculumLevel, CurriculumSettings, Terrain, TerrainFeatures, TerrainSpec, DEFAULT_TOTAL_LEVELS};
use crate::{Error, Result, Task};

/// Fraction of the hard joint range the joint-limit term starts penalising at.
pub const SOFT_LIMIT_FRACTION: f64 = 0.9;

/// Which observation sets a step assembles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObservationSet {
    /// Privileged patch plus joint feedback; no rendering.
    #[default]
    Teacher,
    /// Depth image plus pose.
    Student,
    Both,
}

impl ObservationSet {
    pub fn teacher(self) -> bool {
        matches!(self, ObservationSet::Teacher | ObservationSet::Both)
    }

    pub fn student(self) -> bool {
        matches!(self, ObservationSet::Student | ObservationSet::Both)
    }

    pub fn code(self) -> u8 {
        match self {
            ObservationSet::Teacher => 0,
            ObservationSet::Student => 1,
            ObservationSet::Both => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        [ObservationSet::Teacher, ObservationSet::Student, ObservationSet::Both].into_iter().find(|o| o.code() == code)
    }
}

impl std::str::FromStr for ObservationSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "teacher" => Ok(ObservationSet::Teacher),
            "student" => Ok(ObservationSet::Student),
            "both" => Ok(ObservationSet::Both),
            other => Err(Error::config(format!("unknown observation set '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeConfig {
    pub task: Task,
    pub level: u32,
    pub total_levels: u32,
    pub seed: u64,
    pub max_steps: usize,
    /// Roll/pitch magnitude beyond which the robot has fallen over (rad).
    pub tilt_limit: f64,
    /// How far past the corridor edge (or behind the start) the base may go (m).
    pub out_of_bounds_margin: f64,
    pub dt: f64,
    pub observations: ObservationSet,
    pub terrain: TerrainSpec,
    pub curriculum: CurriculumSettings,
    /// Reward table; the task's shipped table when absent.
    pub reward: Option<RewardConfig>,
    pub contact: ContactParams,
    pub pose_noise: PoseNoise,
    pub geometry: RobotGeometry,
    /// Cell size of the privileged patch (m).
    pub patch_cell: f64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            task: Task::Stairs,
            level: 0,
            total_levels: DEFAULT_TOTAL_LEVELS,
            seed: 0,
            max_steps: 1000,
            tilt_limit: 60f64.to_radians(),
            out_of_bounds_margin: 0.0,
            dt: 0.05,
            observations: ObservationSet::Teacher,
            terrain: TerrainSpec::Curriculum,
            curriculum: CurriculumSettings::default(),
            reward: None,
            contact: ContactParams::default(),
            pose_noise: PoseNoise::default(),
            geometry: RobotGeometry::default(),
            patch_cell: crate::heightmap::DEFAULT_PATCH_CELL,
        }
    }
}

impl EpisodeConfig {
    pub fn for_task(task: Task) -> Self {
        Self { task, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_steps == 0 {
            return Err(Error::config("max_steps must be at least 1"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("dt must be positive"));
        }
        if !(self.tilt_limit > 0.0 && self.tilt_limit <= std::f64::consts::PI) {
            return Err(Error::config("tilt_limit must lie in (0, pi]"));
        }
        if !(self.out_of_bounds_margin >= 0.0) {
            return Err(Error::config("out_of_bounds_margin must be non-negative"));
        }
        if !(self.patch_cell > 0.0) {
            return Err(Error::config("patch_cell must be positive"));
        }
        self.curriculum_level()?;
        self.geometry.validate()
    }

    pub fn curriculum_level(&self) -> Result<CurriculumLevel> {
        CurriculumLevel::new(self.level, self.total_levels).map_err(|e| Error::config(e.to_string()))
    }

    pub fn reward_config(&self) -> RewardConfig {
        self.reward.clone().unwrap_or_else(|| RewardConfig::for_task(self.task))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoneReason {
    Timeout,
    FellOver,
    OutOfBounds,
    TaskComplete,
}

impl DoneReason {
    pub fn name(self) -> &'static str {
        match self {
            DoneReason::Timeout => "timeout",
            DoneReason::FellOver => "fell_over",
            DoneReason::OutOfBounds => "out_of_bounds",
            DoneReason::TaskComplete => "task_complete",
        }
    }

    /// Wire code; 0 is reserved for "not done".
    pub fn code(self) -> u8 {
        match self {
            DoneReason::Timeout => 1,
            DoneReason::FellOver => 2,
            DoneReason::OutOfBounds => 3,
            DoneReason::TaskComplete => 4,
        }
    }
}

impl std::fmt::Display for DoneReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepInfo {
    pub step: usize,
    /// Forward progress since reset (m).
    pub distance: f64,
    /// Base height above the floor beneath it (m).
    pub base_height: f64,
    pub stairs_completed: usize,
    pub ceiling_collision: bool,
    pub illegal_contact: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub teacher: Option<TeacherObservation>,
    pub student: Option<StudentObservation>,
    pub reward: RewardBreakdown,
    pub done: bool,
    pub reason: Option<DoneReason>,
    pub info: StepInfo,
}

/// One simulated robot on one terrain.
#[derive(Debug, Clone)]
pub struct HexapodEnv {
    config: EpisodeConfig,
    reward: RewardConfig,
    profile: SensorProfile,
    terrain: Terrain,
    accel: Option<DepthAccel>,
    joints: JointState,
    base: BaseState,
    contacts: ContactReport,
    joint_min: [f64; NUM_JOINTS],
    joint_max: [f64; NUM_JOINTS],
    last_action: [f64; NUM_JOINTS],
    prev_foot_force: [f64; NUM_LEGS],
    start: [f64; 2],
    steps: usize,
    done: Option<DoneReason>,
    rng: ChaCha8Rng,
    depth_buf: Option<DepthImage>,
}

impl HexapodEnv {
    /// Builds the terrain and spawns the robot on it.
    pub fn reset(config: EpisodeConfig) -> Result<(Self, StepResult)> {
        config.validate()?;
        let level = config.curriculum_level()?;
        let terrain = build_terrain(config.task, &config.terrain, level, &config.curriculum, config.seed)?;
        Self::with_terrain(config, terrain)
    }

    /// Like [`HexapodEnv::reset`] on an already generated terrain.
    pub fn with_terrain(config: EpisodeConfig, terrain: Terrain) -> Result<(Self, StepResult)> {
        config.validate()?;
        let geom = &config.geometry;
        let x = terrain.spawn_front_x - geom.front_offset();
        let floor = terrain.field.sample_floor(x, 0.0);
        let (joints, base) = reset_pose(geom, x, 0.0, 0.0, floor);
        let (base, contacts) = resolve_contacts(geom, &joints, &base, &terrain.field, &config.contact);
        let accel = config.observations.student().then(|| DepthAccel::new(&terrain.field));
        let mut env = Self {
            reward: config.reward_config(),
            profile: SensorProfile::with_cell(config.task, config.patch_cell),
            accel,
            joint_min: geom.joint_min.map(|v| v * SOFT_LIMIT_FRACTION),
            joint_max: geom.joint_max.map(|v| v * SOFT_LIMIT_FRACTION),
            last_action: joints.angles,
            prev_foot_force: contacts.foot_force,
            start: [base.position.x, base.position.y],
            steps: 0,
            done: None,
            rng: ChaCha8Rng::seed_from_u64(splitmix64(config.seed ^ 0x5EED_0F_F0E5)),
            depth_buf: None,
            terrain,
            joints,
            base,
            contacts,
            config,
        };
        let (teacher, student) = env.sense();
        let info = env.info();
        let result = StepResult { teacher, student, reward: RewardBreakdown::default(), done: false, reason: None, info };
        Ok((env, result))
    }

    /// Advances one control period with joint-angle targets `action` (rad).
    pub fn step(&mut self, action: &[f64; NUM_JOINTS]) -> Result<StepResult> {
        if let Some(reason) = self.done {
            return Err(Error::Usage(format!("episode already finished ({reason}); reset first")));
        }
        let geom = &self.config.geometry;
        let dt = self.config.dt;
        let action: [f64; NUM_JOINTS] = std::array::from_fn(|j| {
            let a = if action[j].is_finite() { action[j] } else { self.joints.angles[j] };
            a.clamp(geom.joint_min[j], geom.joint_max[j])
        });
        let prev_action = self.last_action;
        let joints = servo_step(geom, &self.joints, &action, dt);
        let (base, contacts) = resolve_contacts(geom, &joints, &self.base, &self.terrain.field, &self.config.contact);
        let base = advance(geom, &base, &joints, &contacts, dt);
        self.joints = joints;
        self.base = base;
        self.last_action = action;
        self.steps += 1;

        let (teacher, student) = self.sense();
        let needs_patch = self.reward.weight(Term::ObstacleFront) != 0.0 || self.reward.weight(Term::ObstacleAbove) != 0.0;
        let private;
        let patch = match (&teacher, needs_patch) {
            (Some(t), _) => Some(&t.patch),
            (None, true) => {
                private = self.teacher_observation();
                Some(&private.patch)
            }
            (None, false) => None,
        };
        let torques = torque_proxy(&self.config.geometry, &self.joints);
        let base_height = self.base_height();
        let inputs = RewardInputs {
            forward_velocity: self.base.linear_velocity.x,
            lateral_velocity: self.base.heading_velocity().y,
            heading: self.base.heading,
            yaw_rate: self.base.angular_velocity.z,
            foot_force: &contacts.foot_force,
            prev_foot_force: &self.prev_foot_force,
            contacts: &contacts,
            action: &action,
            prev_action: &prev_action,
            torques: &torques,
            joint_angles: &self.joints.angles,
            joint_velocities: &self.joints.velocities,
            prev_joint_velocities: &self.joints.prev_velocities,
            joint_min: &self.joint_min,
            joint_max: &self.joint_max,
            dt,
            foot_heights: &contacts.foot_clearance,
            y: self.base.position.y,
            y_start: self.start[1],
            patch,
            base_height,
        };
        let reward = compose(&self.reward, &inputs);
        self.prev_foot_force = contacts.foot_force;
        self.contacts = contacts;
        self.done = self.termination();
        Ok(StepResult { teacher, student, reward, done: self.done.is_some(), reason: self.done, info: self.info() })
    }

    fn termination(&self) -> Option<DoneReason> {
        let p = &self.base.position;
        let margin = self.config.out_of_bounds_margin;
        if self.base.tilt() > self.config.tilt_limit || !p.iter().all(|v| v.is_finite()) {
            Some(DoneReason::FellOver)
        } else if p.y.abs() > self.terrain.corridor_halfwidth + margin || p.x < -margin {
            Some(DoneReason::OutOfBounds)
        } else if self.terrain.completion_x.is_some_and(|cx| p.x > cx) {
            Some(DoneReason::TaskComplete)
        } else if self.steps >= self.config.max_steps {
            Some(DoneReason::Timeout)
        } else {
            None
        }
    }

    fn sense(&mut self) -> (Option<TeacherObservation>, Option<StudentObservation>) {
        let set = self.config.observations;
        let teacher = set.teacher().then(|| self.teacher_observation());
        let student = if set.student() {
            let accel = self.accel.get_or_insert_with(|| DepthAccel::new(&self.terrain.field));
            let buf = self.depth_buf.take().unwrap_or_else(|| DepthImage::new(0, 0, 0.0));
            Some(assemble_student(
                &self.profile,
                &self.base,
                &self.last_action,
                &self.terrain.field,
                accel,
                &self.config.pose_noise,
                &mut self.rng,
                buf,
            ))
        } else {
            None
        };
        (teacher, student)
    }

    /// Privileged observation of the current state.
    pub fn teacher_observation(&self) -> TeacherObservation {
        assemble_teacher(&self.profile, &self.config.geometry, &self.joints, &self.base, &self.last_action, &self.terrain.field)
    }

    /// Hands a spent depth image back so the next render reuses its buffer.
    pub fn recycle_depth(&mut self, image: DepthImage) {
        self.depth_buf = Some(image);
    }

    fn info(&self) -> StepInfo {
        let stairs_completed = match &self.terrain.features {
            TerrainFeatures::Stairs(layout) => layout.risers_passed(self.base.position.x),
            _ => 0,
        };
        StepInfo {
            step: self.steps,
            distance: self.base.position.x - self.start[0],
            base_height: self.base_height(),
            stairs_completed,
            ceiling_collision: self.contacts.ceiling.any(),
            illegal_contact: self.contacts.illegal(),
        }
    }

    /// Base height above the floor directly beneath it.
    pub fn base_height(&self) -> f64 {
        self.base.position.z - self.terrain.field.sample_floor(self.base.position.x, self.base.position.y)
    }

    pub fn config(&self) -> &EpisodeConfig {
        &self.config
    }

    pub fn reward_config(&self) -> &RewardConfig {
        &self.reward
    }

    pub fn profile(&self) -> &SensorProfile {
        &self.profile
    }

    pub fn terrain(&self) -> &Terrain {
        &self.terrain
    }

    pub fn geometry(&self) -> &RobotGeometry {
        &self.config.geometry
    }

    pub fn joints(&self) -> &JointState {
        &self.joints
    }

    pub fn base(&self) -> &BaseState {
        &self.base
    }

    pub fn contacts(&self) -> &ContactReport {
        &self.contacts
    }

    pub fn last_action(&self) -> &[f64; NUM_JOINTS] {
        &self.last_action
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Simulated time since reset (s).
    pub fn time(&self) -> f64 {
        self.steps as f64 * self.config.dt
    }

    pub fn done(&self) -> Option<DoneReason> {
        self.done
    }
}
