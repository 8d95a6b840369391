//! Per-task weight tables and their text format.
//!
//! Weights in the published table are typeset as `m^e`, meaning `m * 10^e`
//! (`-5^{-1}` is `-0.5`). Config files accept that notation as a string or a
//! plain number:
//!
//! ```toml
//! task = "stairs"          # optional: start from a shipped table
//! [weights]
//! heading = "-3^1"
//! collision = -2.0
//! ```

use serde::{Deserialize, Serialize};

use super::{Term, NUM_TERMS};
use crate::{Error, Result, Task};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    /// Shipped table this config started from, if any.
    pub task: Option<Task>,
    weights: [f64; NUM_TERMS],
}

impl RewardConfig {
    /// All weights zero.
    pub fn empty() -> Self {
        Self { task: None, weights: [0.0; NUM_TERMS] }
    }

    pub fn for_task(task: Task) -> Self {
        use Term::*;
        let entries: &[(Term, f64)] = match task {
            Task::Joist => &[
                (ForwardVelocity, 100.0),
                (LateralVelocity, -10.0),
                (Heading, -30.0),
                (YawRate, -1.0),
                (GroundImpact, -0.1),
                (Collision, -1.0),
                (ActionRate, -0.5),
                (ActionMagnitude, -0.01),
                (Torques, -0.001),
                (JointAcceleration, -1e-5),
                (JointLimit, -1.0),
                (EndEffectorHeight, -0.1),
            ],
            Task::Stairs => &[
                (ForwardVelocity, 100.0),
                (LateralVelocity, -10.0),
                (ActionRate, -0.5),
                (JointAcceleration, -1e-5),
                (JointLimit, -1.0),
                (GlobalYDeviation, -100.0),
            ],
            Task::Avoidance => &[
                (ForwardVelocity, 100.0),
                (LateralVelocity, -10.0),
                (YawRate, -1.0),
                (Collision, -3.0),
                (ActionRate, -0.5),
                (ActionMagnitude, -0.01),
                (Torques, -0.001),
                (JointAcceleration, -1e-5),
                (JointLimit, -1.0),
                (GlobalYDeviation, -1.0),
                (ObstacleFront, -0.1),
            ],
            Task::Squeeze => &[
                (ForwardVelocity, 100.0),
                (LateralVelocity, -10.0),
                (YawRate, -1.0),
                (Collision, -1.0),
                (ActionRate, -0.5),
                (ActionMagnitude, -0.01),
                (Torques, -0.01),
                (JointAcceleration, -1e-5),
                (JointLimit, -1.0),
                (GlobalYDeviation, -1.0),
                (ObstacleAbove, -0.1),
            ],
        };
        let mut cfg = Self::empty();
        cfg.task = Some(task);
        for &(t, w) in entries {
            cfg.weights[t.index()] = w;
        }
        cfg
    }

    pub fn weight(&self, term: Term) -> f64 {
        self.weights[term.index()]
    }

    pub fn set_weight(&mut self, term: Term, weight: f64) -> Result<()> {
        if !weight.is_finite() {
            return Err(Error::config(format!("weight for {term} must be finite")));
        }
        self.weights[term.index()] = weight;
        Ok(())
    }

    /// Terms with nonzero weight, in accumulation order.
    pub fn active(&self) -> impl Iterator<Item = (Term, f64)> + '_ {
        Term::ALL.into_iter().map(|t| (t, self.weight(t))).filter(|&(_, w)| w != 0.0)
    }

    /// Every weight multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        let mut out = self.clone();
        for w in &mut out.weights {
            *w *= k;
        }
        out
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e| Error::config(format!("reward table: {e}")))?;
        Self::from_table(&table)
    }

    /// Reads `task` and `[weights]` from an already parsed table.
    pub fn from_table(table: &toml::Table) -> Result<Self> {
        let mut cfg = Self::empty();
        for (key, value) in table {
            match key.as_str() {
                "task" => {
                    let name = value.as_str().ok_or_else(|| Error::config("reward 'task' must be a string"))?;
                    cfg = Self::for_task(name.parse()?);
                }
                "weights" => {}
                other => return Err(Error::config(format!("unknown reward key '{other}'"))),
            }
        }
        if let Some(weights) = table.get("weights") {
            let weights = weights.as_table().ok_or_else(|| Error::config("'weights' must be a table"))?;
            for (id, value) in weights {
                let term: Term = id.parse()?;
                let w = match value {
                    toml::Value::Float(f) => *f,
                    toml::Value::Integer(i) => *i as f64,
                    toml::Value::String(s) => parse_weight(s)?,
                    _ => return Err(Error::config(format!("weight for {id} must be a number or 'm^e' string"))),
                };
                cfg.set_weight(term, w)?;
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        let mut out = String::new();
        if let Some(task) = self.task {
            out.push_str(&format!("task = \"{task}\"\n"));
        }
        out.push_str("[weights]\n");
        for t in Term::ALL {
            out.push_str(&format!("{} = {:?}\n", t.id(), self.weight(t)));
        }
        out
    }
}

/// Parses `m^e` (also `m^{e}`) as `m * 10^e`, or a plain decimal number.
pub fn parse_weight(text: &str) -> Result<f64> {
    let cleaned: String = text.trim().replace('\u{2212}', "-").chars().filter(|c| !matches!(c, '{' | '}' | ' ')).collect();
    let bad = || Error::config(format!("cannot read weight '{text}'"));
    let value = match cleaned.split_once('^') {
        Some((m, e)) => {
            let m: f64 = m.parse().map_err(|_| bad())?;
            let e: i32 = e.parse().map_err(|_| bad())?;
            // go through the decimal literal so e.g. 1^-5 is exactly 1e-5
            format!("{m}e{e}").parse::<f64>().map_err(|_| bad())?
        }
        None => cleaned.parse().map_err(|_| bad())?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(bad())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn caret_notation() {
        assert_eq!(parse_weight("-5^{-1}").unwrap(), -0.5);
        assert_eq!(parse_weight("1^2").unwrap(), 100.0);
        assert_eq!(parse_weight("-1^{-5}").unwrap(), -1e-5);
        assert_eq!(parse_weight("\u{2212}3^0").unwrap(), -3.0);
        assert_eq!(parse_weight("0").unwrap(), 0.0);
        assert_eq!(parse_weight("0.25").unwrap(), 0.25);
        assert!(parse_weight("x^2").is_err());
        assert!(parse_weight("1^400").is_err());
    }

    #[test]
    fn stairs_active_set() {
        let ids: Vec<_> = RewardConfig::for_task(Task::Stairs).active().map(|(t, _)| t.id()).collect();
        assert_eq!(
            ids,
            ["forward_velocity", "lateral_velocity", "action_rate", "joint_acceleration", "joint_limit", "global_y_deviation"]
        );
    }

    #[test]
    fn toml_round_trip_and_overrides() {
        for task in Task::ALL {
            let cfg = RewardConfig::for_task(task);
            assert_eq!(RewardConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);
        }
        let cfg = RewardConfig::from_toml_str("task = \"squeeze\"\n[weights]\nheading = \"-3^1\"\n").unwrap();
        assert_eq!(cfg.weight(Term::Heading), -30.0);
        assert_eq!(cfg.weight(Term::ObstacleAbove), -0.1);
    }

    #[test]
    fn unknown_ids_rejected() {
        assert!(RewardConfig::from_toml_str("[weights]\nspeed = 1.0\n").is_err());
        assert!(RewardConfig::from_toml_str("colour = 1\n").is_err());
        assert!(RewardConfig::from_toml_str("task = \"dance\"\n").is_err());
    }
}
