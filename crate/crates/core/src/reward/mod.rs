//! Reward terms and their per-task composition.
//!
//! Each term is a pure function returning an unsigned raw value; a
//! [`RewardConfig`] supplies signed weights and [`compose`] sums the weighted
//! terms in a fixed order so totals are bit-reproducible.

mod functional;
mod table;

pub use functional::{avoidance_functional, ramp_weight, squeeze_functional, triangle_weight};
pub use table::{parse_weight, RewardConfig};

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::heightmap::HeightPatch;
use crate::physics::ContactReport;
use crate::robot::{NUM_JOINTS, NUM_LEGS};
use crate::{Error, Result};

pub const NUM_TERMS: usize = 15;

/// Reward term identifiers, in accumulation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    ForwardVelocity,
    LateralVelocity,
    Heading,
    YawRate,
    GroundImpact,
    Collision,
    ActionRate,
    ActionMagnitude,
    Torques,
    JointAcceleration,
    JointLimit,
    EndEffectorHeight,
    GlobalYDeviation,
    ObstacleFront,
    ObstacleAbove,
}

impl Term {
    pub const ALL: [Term; NUM_TERMS] = [
        Term::ForwardVelocity,
        Term::LateralVelocity,
        Term::Heading,
        Term::YawRate,
        Term::GroundImpact,
        Term::Collision,
        Term::ActionRate,
        Term::ActionMagnitude,
        Term::Torques,
        Term::JointAcceleration,
        Term::JointLimit,
        Term::EndEffectorHeight,
        Term::GlobalYDeviation,
        Term::ObstacleFront,
        Term::ObstacleAbove,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Term::ForwardVelocity => "forward_velocity",
            Term::LateralVelocity => "lateral_velocity",
            Term::Heading => "heading",
            Term::YawRate => "yaw_rate",
            Term::GroundImpact => "ground_impact",
            Term::Collision => "collision",
            Term::ActionRate => "action_rate",
            Term::ActionMagnitude => "action_magnitude",
            Term::Torques => "torques",
            Term::JointAcceleration => "joint_acceleration",
            Term::JointLimit => "joint_limit",
            Term::EndEffectorHeight => "end_effector_height",
            Term::GlobalYDeviation => "global_y_deviation",
            Term::ObstacleFront => "obstacle_front",
            Term::ObstacleAbove => "obstacle_above",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl std::str::FromStr for Term {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Term::ALL
            .into_iter()
            .find(|t| t.id() == s)
            .ok_or_else(|| Error::config(format!("unknown reward term '{s}'")))
    }
}

impl std::fmt::Display for Term {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

pub fn term_forward_velocity(vx: f64) -> f64 {
    vx.clamp(-0.4, 0.4)
}

pub fn term_lateral_velocity(vy: f64) -> f64 {
    vy * vy
}

pub fn term_heading(theta: f64) -> f64 {
    theta * theta
}

pub fn term_yaw_rate(omega: f64) -> f64 {
    omega * omega
}

fn sq_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn sq_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

pub fn term_ground_impact(force: &[f64; NUM_LEGS], prev_force: &[f64; NUM_LEGS]) -> f64 {
    sq_diff(force, prev_force)
}

pub fn term_action_rate(action: &[f64; NUM_JOINTS], prev_action: &[f64; NUM_JOINTS]) -> f64 {
    sq_diff(action, prev_action)
}

pub fn term_action_magnitude(action: &[f64; NUM_JOINTS]) -> f64 {
    sq_norm(action)
}

pub fn term_torques(tau: &[f64; NUM_JOINTS]) -> f64 {
    sq_norm(tau)
}

pub fn term_joint_accel(qd: &[f64; NUM_JOINTS], prev_qd: &[f64; NUM_JOINTS], dt: f64) -> f64 {
    qd.iter().zip(prev_qd).map(|(a, b)| ((a - b) / dt).powi(2)).sum()
}

/// Sum of the two printed clips: negative below `q_min`, positive above `q_max`.
pub fn term_joint_limit(q: &[f64; NUM_JOINTS], q_min: &[f64; NUM_JOINTS], q_max: &[f64; NUM_JOINTS]) -> f64 {
    let mut total = 0.0;
    for k in 0..NUM_JOINTS {
        total += (q[k] - q_min[k]).min(0.0) + (q[k] - q_max[k]).max(0.0);
    }
    total
}

/// Per-foot magnitudes, summed.
pub fn term_end_effector_height(z: &[f64; NUM_LEGS]) -> f64 {
    z.iter().map(|v| v.abs()).sum()
}

pub fn term_global_y_deviation(y: f64, y_start: f64) -> f64 {
    (y - y_start) * (y - y_start)
}

pub fn term_collision(contacts: &ContactReport) -> f64 {
    if contacts.illegal() {
        1.0
    } else {
        0.0
    }
}

/// Everything the terms read for one step.
#[derive(Debug, Clone, Copy)]
pub struct RewardInputs<'a> {
    /// Base velocity along world `x`.
    pub forward_velocity: f64,
    /// Base velocity along the body's lateral axis.
    pub lateral_velocity: f64,
    pub heading: f64,
    pub yaw_rate: f64,
    pub foot_force: &'a [f64; NUM_LEGS],
    pub prev_foot_force: &'a [f64; NUM_LEGS],
    pub contacts: &'a ContactReport,
    pub action: &'a [f64; NUM_JOINTS],
    pub prev_action: &'a [f64; NUM_JOINTS],
    pub torques: &'a [f64; NUM_JOINTS],
    pub joint_angles: &'a [f64; NUM_JOINTS],
    pub joint_velocities: &'a [f64; NUM_JOINTS],
    pub prev_joint_velocities: &'a [f64; NUM_JOINTS],
    pub joint_min: &'a [f64; NUM_JOINTS],
    pub joint_max: &'a [f64; NUM_JOINTS],
    pub dt: f64,
    /// Foot heights above the floor beneath each foot.
    pub foot_heights: &'a [f64; NUM_LEGS],
    pub y: f64,
    pub y_start: f64,
    /// Privileged patch relative to the ground under the base.
    pub patch: Option<&'a HeightPatch>,
    /// Base height above the floor beneath it.
    pub base_height: f64,
}

pub fn raw_term(term: Term, s: &RewardInputs) -> f64 {
    match term {
        Term::ForwardVelocity => term_forward_velocity(s.forward_velocity),
        Term::LateralVelocity => term_lateral_velocity(s.lateral_velocity),
        Term::Heading => term_heading(s.heading),
        Term::YawRate => term_yaw_rate(s.yaw_rate),
        Term::GroundImpact => term_ground_impact(s.foot_force, s.prev_foot_force),
        Term::Collision => term_collision(s.contacts),
        Term::ActionRate => term_action_rate(s.action, s.prev_action),
        Term::ActionMagnitude => term_action_magnitude(s.action),
        Term::Torques => term_torques(s.torques),
        Term::JointAcceleration => term_joint_accel(s.joint_velocities, s.prev_joint_velocities, s.dt),
        Term::JointLimit => term_joint_limit(s.joint_angles, s.joint_min, s.joint_max),
        Term::EndEffectorHeight => term_end_effector_height(s.foot_heights),
        Term::GlobalYDeviation => term_global_y_deviation(s.y, s.y_start),
        Term::ObstacleFront => s.patch.map_or(0.0, avoidance_functional),
        Term::ObstacleAbove => s.patch.map_or(0.0, |p| squeeze_functional(p, s.base_height)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RewardBreakdown {
    /// Unweighted term values; zero for inactive terms.
    pub raw: [f64; NUM_TERMS],
    pub weighted: [f64; NUM_TERMS],
    pub total: f64,
}

impl RewardBreakdown {
    pub fn weighted(&self, term: Term) -> f64 {
        self.weighted[term.index()]
    }

    pub fn raw(&self, term: Term) -> f64 {
        self.raw[term.index()]
    }
}

/// Weighted sum of the active terms, accumulated in term order.
pub fn compose(config: &RewardConfig, inputs: &RewardInputs) -> RewardBreakdown {
    let mut out = RewardBreakdown::default();
    for term in Term::ALL {
        let w = config.weight(term);
        if w == 0.0 {
            continue;
        }
        let raw = raw_term(term, inputs);
        let k = term.index();
        out.raw[k] = raw;
        out.weighted[k] = w * raw;
        out.total += w * raw;
    }
    out
}

/// Writes `step, <term ids...>, total` rows of weighted values.
pub fn write_breakdown_csv<'a>(out: impl Write, rows: impl IntoIterator<Item = (usize, &'a RewardBreakdown)>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["step"];
    header.extend(Term::ALL.iter().map(|t| t.id()));
    header.push("total");
    w.write_record(&header).map_err(csv_err)?;
    for (step, b) in rows {
        let mut rec = vec![step.to_string()];
        rec.extend(b.weighted.iter().map(|v| v.to_string()));
        rec.push(b.total.to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Format(format!("{other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printed_examples() {
        assert_eq!(term_forward_velocity(0.2), 0.2);
        assert_eq!(term_forward_velocity(1.0), 0.4);
        assert_eq!(term_forward_velocity(-0.7), -0.4);
        let a = [0.3; NUM_JOINTS];
        assert_eq!(term_action_rate(&a, &a), 0.0);
        let mut qd = [0.0; NUM_JOINTS];
        qd[0] = 0.1;
        assert!((term_joint_accel(&qd, &[0.0; NUM_JOINTS], 0.05) - 4.0).abs() < 1e-12);
        assert!((term_global_y_deviation(0.3, 0.1) - 0.04).abs() < 1e-15);
    }

    #[test]
    fn joint_limit_clips() {
        let (lo, hi) = ([-1.0; NUM_JOINTS], [1.0; NUM_JOINTS]);
        assert_eq!(term_joint_limit(&[0.0; NUM_JOINTS], &lo, &hi), 0.0);
        let mut q = [0.0; NUM_JOINTS];
        q[3] = 1.1;
        assert!((term_joint_limit(&q, &lo, &hi) - 0.1).abs() < 1e-12);
        q[3] = -1.05;
        assert!((term_joint_limit(&q, &lo, &hi) + 0.05).abs() < 1e-12);
    }

    #[test]
    fn term_ids_round_trip() {
        for t in Term::ALL {
            assert_eq!(t.id().parse::<Term>().unwrap(), t);
            assert_eq!(Term::ALL[t.index()], t);
        }
        assert!("speed".parse::<Term>().is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let b = RewardBreakdown { total: 1.5, ..Default::default() };
        let mut buf = Vec::new();
        write_breakdown_csv(&mut buf, [(0, &b), (1, &b)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("step,forward_velocity,"));
        assert!(lines[0].ends_with(",total"));
        assert!(lines[2].starts_with("1,") && lines[2].ends_with(",1.5"));
    }
}
