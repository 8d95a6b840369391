//! Scripted policies and the gait optimizer.
//!
//! Policies read the environment directly, so a scripted controller may use
//! privileged terrain knowledge that a learned student never sees.

mod es;
mod gait;

pub use es::{optimize, write_history_csv, Objective, OptimizeResult, HistoryRow, PARAM_BOUNDS};
pub use gait::{crouch_offset_for_height, crouched_stance, is_left, standing_height_for_crouch, tripod_gait, GaitParams, TRIPOD_PHASE};

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::{EpisodeConfig, HexapodEnv, StepResult, TraceRecorder};
use crate::robot::NUM_JOINTS;
use crate::{Error, Result};

pub trait Policy {
    /// Joint-angle targets for the env's current state.
    fn act(&mut self, env: &HexapodEnv) -> [f64; NUM_JOINTS];
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn act(&mut self, env: &HexapodEnv) -> [f64; NUM_JOINTS] {
        (**self).act(env)
    }
}

/// Open-loop tripod gait clocked by episode time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TripodPolicy {
    pub params: GaitParams,
}

impl TripodPolicy {
    pub fn new(params: GaitParams) -> Self {
        Self { params }
    }
}

impl Policy for TripodPolicy {
    fn act(&mut self, env: &HexapodEnv) -> [f64; NUM_JOINTS] {
        tripod_gait(&self.params, env.geometry(), env.time())
    }
}

/// Tripod gait that lowers the body under any ceiling found along its path.
///
/// It scans the strip from the rear of the body to `lookahead` beyond its
/// front and crouches until the body sits `margin` below the lowest clearance
/// it finds there, rising again once the strip is clear.
#[derive(Debug, Clone, PartialEq)]
pub struct CrouchTripodPolicy {
    pub gait: GaitParams,
    pub lookahead: f64,
    pub margin: f64,
    /// Sampling step along the strip (m).
    pub resolution: f64,
}

impl Default for CrouchTripodPolicy {
    fn default() -> Self {
        Self { gait: GaitParams::default(), lookahead: 0.3, margin: 0.02, resolution: 0.02 }
    }
}

impl CrouchTripodPolicy {
    /// Smallest ceiling-to-floor gap along the strip ahead, if any ceiling.
    pub fn clearance_ahead(&self, env: &HexapodEnv) -> Option<f64> {
        let geom = env.geometry();
        let base = env.base();
        let field = &env.terrain().field;
        let (s, c) = base.heading.sin_cos();
        let half = geom.front_offset();
        let n = ((2.0 * half + self.lookahead) / self.resolution).ceil() as usize;
        let mut best: Option<f64> = None;
        for k in 0..=n {
            let along = -half + k as f64 * self.resolution;
            for lateral in [-geom.body_half_width, 0.0, geom.body_half_width] {
                let x = base.position.x + c * along - s * lateral;
                let y = base.position.y + s * along + c * lateral;
                if let Some(ceiling) = field.sample_ceiling(x, y) {
                    let gap = ceiling - field.sample_floor(x, y);
                    best = Some(best.map_or(gap, |b: f64| b.min(gap)));
                }
            }
        }
        best
    }

    /// Crouch offset to use in the current state.
    pub fn crouch_for(&self, env: &HexapodEnv) -> f64 {
        let geom = env.geometry();
        match self.clearance_ahead(env) {
            Some(gap) if gap - self.margin < geom.standing_height => {
                let target = (gap - self.margin).max(geom.flat_height + 0.01);
                crouch_offset_for_height(geom, target).unwrap_or(0.0).max(self.gait.crouch)
            }
            _ => self.gait.crouch,
        }
    }
}

impl Policy for CrouchTripodPolicy {
    fn act(&mut self, env: &HexapodEnv) -> [f64; NUM_JOINTS] {
        let params = GaitParams { crouch: self.crouch_for(env), ..self.gait };
        tripod_gait(&params, env.geometry(), env.time())
    }
}

/// Independent uniform targets over each joint's full range.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Policy for RandomPolicy {
    fn act(&mut self, env: &HexapodEnv) -> [f64; NUM_JOINTS] {
        let g = env.geometry();
        std::array::from_fn(|j| self.rng.random_range(g.joint_min[j]..=g.joint_max[j]))
    }
}

/// Policy names accepted on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicyKind {
    Tripod,
    CrouchTripod,
    Random,
    ParamsFile(PathBuf),
}

impl PolicyKind {
    /// Parses `tripod`, `crouch-tripod`, `random` or `params-file`; the
    /// last needs `params` to name the gait file.
    pub fn parse(name: &str, params: Option<&Path>) -> Result<Self> {
        match name {
            "tripod" => Ok(PolicyKind::Tripod),
            "crouch-tripod" => Ok(PolicyKind::CrouchTripod),
            "random" => Ok(PolicyKind::Random),
            "params-file" => params
                .map(|p| PolicyKind::ParamsFile(p.to_path_buf()))
                .ok_or_else(|| Error::Usage("policy params-file needs --params <file>".into())),
            other => Err(Error::Usage(format!("unknown policy '{other}'"))),
        }
    }

    pub fn build(&self, seed: u64) -> Result<Box<dyn Policy + Send>> {
        Ok(match self {
            PolicyKind::Tripod => Box::new(TripodPolicy::default()),
            PolicyKind::CrouchTripod => Box::new(CrouchTripodPolicy::default()),
            PolicyKind::Random => Box::new(RandomPolicy::new(seed)),
            PolicyKind::ParamsFile(path) => Box::new(TripodPolicy::new(load_params(path)?)),
        })
    }
}

/// A finished episode.
#[derive(Debug, Clone)]
pub struct Episode {
    /// One row for the reset state, then one per step.
    pub trace: TraceRecorder,
    pub last: StepResult,
    pub total_return: f64,
    pub ceiling_collisions: usize,
    /// Distance walked when the first ceiling collision happened.
    pub first_collision_at: Option<f64>,
}

/// Runs `policy` from reset until the episode ends.
pub fn run_episode(config: EpisodeConfig, policy: &mut dyn Policy) -> Result<Episode> {
    let (mut env, first) = HexapodEnv::reset(config)?;
    let mut trace = TraceRecorder::new();
    trace.record(&env, &first);
    let (mut total_return, mut ceiling_collisions, mut first_collision_at) = (0.0, 0, None);
    loop {
        let action = policy.act(&env);
        let r = env.step(&action)?;
        trace.record(&env, &r);
        total_return += r.reward.total;
        if r.info.ceiling_collision {
            ceiling_collisions += 1;
            first_collision_at.get_or_insert(r.info.distance);
        }
        if r.done {
            return Ok(Episode { trace, last: r, total_return, ceiling_collisions, first_collision_at });
        }
    }
}

pub fn save_params(params: &GaitParams, path: impl AsRef<Path>) -> Result<()> {
    let text = toml::to_string(params).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_params(path: impl AsRef<Path>) -> Result<GaitParams> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::config(format!("gait params: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EpisodeConfig;
    use crate::terrain::TerrainSpec;
    use crate::Task;

    #[test]
    fn policy_names() {
        assert_eq!(PolicyKind::parse("crouch-tripod", None).unwrap(), PolicyKind::CrouchTripod);
        assert!(PolicyKind::parse("params-file", None).is_err());
        assert!(PolicyKind::parse("ppo", None).is_err());
    }

    #[test]
    fn params_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gait.toml");
        let p = GaitParams { frequency: 1.3, crouch: 0.2, ..GaitParams::default() };
        save_params(&p, &path).unwrap();
        assert_eq!(load_params(&path).unwrap(), p);
    }

    #[test]
    fn crouch_policy_sees_the_slab_only_when_near() {
        let (env, _) = HexapodEnv::reset(EpisodeConfig::for_task(Task::Squeeze)).unwrap();
        let near = CrouchTripodPolicy { lookahead: 0.35, ..CrouchTripodPolicy::default() };
        assert!((near.clearance_ahead(&env).unwrap() - 0.37).abs() < 1e-9);
        let short = CrouchTripodPolicy { lookahead: 0.1, ..near };
        assert_eq!(short.clearance_ahead(&env), None);
        let flat = EpisodeConfig { terrain: TerrainSpec::Flat { length: 5.0, halfwidth: 1.0 }, ..EpisodeConfig::default() };
        let (env, _) = HexapodEnv::reset(flat).unwrap();
        assert_eq!(CrouchTripodPolicy::default().crouch_for(&env), 0.0);
    }

    #[test]
    fn random_actions_stay_in_range() {
        let (env, _) = HexapodEnv::reset(EpisodeConfig::default()).unwrap();
        let mut p = RandomPolicy::new(3);
        for _ in 0..50 {
            let a = p.act(&env);
            for (j, v) in a.iter().enumerate() {
                assert!(*v >= env.geometry().joint_min[j] && *v <= env.geometry().joint_max[j]);
            }
        }
    }
}
