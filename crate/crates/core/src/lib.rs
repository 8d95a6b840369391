//! Deterministic, vectorized hexapod locomotion environments.
//!
//! The crate is organised bottom-up:
//!
//! - [`heightmap`]: layered (floor + optional ceiling) height fields, sampling,
//!   robot-relative patches and the `.hxm` binary format.
//! - [`terrain`]: seeded generators for staircases, obstacle fields, overhead
//!   tunnels and joists, plus the curriculum schedules that parameterise them.
//! - [`robot`]: the 18-joint hexapod model (geometry, kinematics, servos).
//! - [`physics`]: a quasi-static contact backend that rests the body on its feet.
//! - [`sensing`]: depth rendering and observation assembly.
//! - [`reward`]: reward terms and per-task weight tables, including the two
//!   height-map functionals.
//! - [`env`]: episodes and curricula, stepped singly or in vectorized batches.
//! - [`policy`]: scripted gaits and an evolution-strategy gait optimizer.
//! - [`server`]: a framed binary protocol for remote trainers.
//! - [`cli`]: the `hexloco` command-line tool.
//!
//! World frame: `x` forward along the course, `y` to the left, `z` up.

pub mod cli;
pub mod env;
pub mod error;
pub mod heightmap;
pub mod physics;
pub mod policy;
pub mod reward;
pub mod robot;
pub mod sensing;
pub mod server;
pub mod terrain;

pub use error::{Error, Result};

/// The four locomotion skills the engine ships reward tables and terrains for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Joist,
    Stairs,
    Avoidance,
    Squeeze,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::Joist, Task::Stairs, Task::Avoidance, Task::Squeeze];

    pub fn name(self) -> &'static str {
        match self {
            Task::Joist => "joist",
            Task::Stairs => "stairs",
            Task::Avoidance => "avoidance",
            Task::Squeeze => "squeeze",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Task::Joist => 0,
            Task::Stairs => 1,
            Task::Avoidance => 2,
            Task::Squeeze => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Task> {
        Task::ALL.into_iter().find(|t| t.code() == code)
    }
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "joist" | "joists" => Ok(Task::Joist),
            "stairs" | "stair" => Ok(Task::Stairs),
            "avoidance" | "avoid" => Ok(Task::Avoidance),
            "squeeze" => Ok(Task::Squeeze),
            other => Err(Error::config(format!("unknown task '{other}'"))),
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
