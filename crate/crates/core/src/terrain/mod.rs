//! Procedural terrains and curriculum schedules.
//!
//! Every generator is a pure function of its parameters and a seed. Courses
//! run along `+x`, centred on `y = 0`, starting at `x = 0`.

mod joists;
mod obstacles;
mod stairs;
mod tunnel;

pub use joists::{generate_joists, JoistParams};
pub use obstacles::{
    capped_obstacle_density, generate_obstacle_field, obstacle_density_for_level, Footprint, Obstacle,
    ObstacleFieldParams, ShapeKind, ShapeSpec,
};
pub use stairs::{generate_stairs, stair_params_for_level, StairDirection, StairLayout, StairParams};
pub use tunnel::{generate_tunnel, tunnel_clearance_for_level, Slab, TunnelParams, TUNNEL_CLEARANCES};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::heightmap::LayeredHeightField;
use crate::{Error, Result, Task};

/// Raster resolution of generated terrains (m).
pub const TERRAIN_CELL: f64 = 0.02;

/// Default number of curriculum levels per task.
pub const DEFAULT_TOTAL_LEVELS: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurriculumLevel {
    level: u32,
    total_levels: u32,
}

impl CurriculumLevel {
    pub fn new(level: u32, total_levels: u32) -> Result<Self> {
        if total_levels == 0 {
            return Err(Error::params("total_levels must be at least 1"));
        }
        if level > total_levels {
            return Err(Error::params(format!("level {level} exceeds total_levels {total_levels}")));
        }
        Ok(Self { level, total_levels })
    }

    pub fn level(self) -> u32 {
        self.level
    }

    pub fn total_levels(self) -> u32 {
        self.total_levels
    }

    pub fn is_max(self) -> bool {
        self.level == self.total_levels
    }

    /// `level / total_levels` in `[0, 1]`.
    pub fn fraction(self) -> f64 {
        self.level as f64 / self.total_levels as f64
    }

    /// Next level, saturating at the top.
    pub fn promoted(self) -> Self {
        Self { level: (self.level + 1).min(self.total_levels), ..self }
    }
}

/// Linear interpolation that returns both endpoints exactly.
pub(crate) fn lerp(a: f64, b: f64, t: f64) -> f64 {
    (1.0 - t) * a + t * b
}

pub(crate) fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A generated course: the height field plus the layout facts episodes need.
#[derive(Debug, Clone)]
pub struct Terrain {
    pub field: LayeredHeightField,
    /// Where the robot's front should be placed at reset.
    pub spawn_front_x: f64,
    pub corridor_halfwidth: f64,
    /// Base `x` beyond which the course counts as completed.
    pub completion_x: Option<f64>,
    pub features: TerrainFeatures,
}

#[derive(Debug, Clone)]
pub enum TerrainFeatures {
    Flat,
    Stairs(StairLayout),
    Obstacles(Vec<Obstacle>),
    Tunnel(Vec<Slab>),
    Joists { start: f64, end: f64, spacing: f64 },
}

/// What to build for an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TerrainSpec {
    /// The task's curriculum terrain at the episode's level.
    Curriculum,
    Flat { length: f64, halfwidth: f64 },
    Stairs(StairParams),
    Obstacles { params: ObstacleFieldParams, density: f64 },
    Tunnel(TunnelParams),
    Joists(JoistParams),
}

impl Default for TerrainSpec {
    fn default() -> Self {
        TerrainSpec::Curriculum
    }
}

/// Task-specific curriculum knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurriculumSettings {
    /// Obstacle density at the final level (obstacles / m^2).
    pub density_final: f64,
    /// Cap the printed density schedule at `density_final`.
    pub cap_density: bool,
    /// Draw tunnel approach, length, width and thickness from the seed.
    pub randomize_tunnel: bool,
    pub stair_direction: StairDirection,
}

impl Default for CurriculumSettings {
    fn default() -> Self {
        Self {
            density_final: 0.25,
            cap_density: false,
            randomize_tunnel: false,
            stair_direction: StairDirection::Up,
        }
    }
}

/// Resolves a terrain spec for a task at a level.
pub fn build_terrain(
    task: Task,
    spec: &TerrainSpec,
    level: CurriculumLevel,
    settings: &CurriculumSettings,
    seed: u64,
) -> Result<Terrain> {
    match spec {
        TerrainSpec::Curriculum => match task {
            Task::Stairs => {
                let mut p = stair_params_for_level(level);
                p.direction = settings.stair_direction;
                generate_stairs(&p, seed)
            }
            Task::Avoidance => {
                let density = if settings.cap_density {
                    capped_obstacle_density(level, settings.density_final)
                } else {
                    obstacle_density_for_level(level, settings.density_final)
                };
                generate_obstacle_field(&ObstacleFieldParams::default(), density, seed)
            }
            Task::Squeeze => {
                let p = TunnelParams {
                    clearance: tunnel_clearance_for_level(level),
                    randomize: settings.randomize_tunnel,
                    ..TunnelParams::default()
                };
                generate_tunnel(&p, seed)
            }
            Task::Joist => generate_joists(&JoistParams::default(), seed),
        },
        TerrainSpec::Flat { length, halfwidth } => flat_course(*length, *halfwidth),
        TerrainSpec::Stairs(p) => generate_stairs(p, seed),
        TerrainSpec::Obstacles { params, density } => generate_obstacle_field(params, *density, seed),
        TerrainSpec::Tunnel(p) => generate_tunnel(p, seed),
        TerrainSpec::Joists(p) => generate_joists(p, seed),
    }
}

/// An obstacle-free corridor with no completion line.
pub fn flat_course(length: f64, halfwidth: f64) -> Result<Terrain> {
    if !(length > 2.0 && halfwidth > 0.0) {
        return Err(Error::params("flat course needs length > 2 m and positive halfwidth"));
    }
    let grid = CourseGrid::new(length, halfwidth, TERRAIN_CELL);
    Ok(Terrain {
        field: grid.build(|_, _| 0.0, None::<fn(f64, f64) -> Option<f64>>)?,
        spawn_front_x: 1.0,
        corridor_halfwidth: halfwidth,
        completion_x: None,
        features: TerrainFeatures::Flat,
    })
}

/// Raster layout shared by the course generators.
pub(crate) struct CourseGrid {
    rows: usize,
    cols: usize,
    cell: f64,
    origin: [f64; 2],
}

impl CourseGrid {
    /// Covers `x in [0, length]`, `y in [-halfwidth, halfwidth]`.
    pub(crate) fn new(length: f64, halfwidth: f64, cell: f64) -> Self {
        let cols = (length / cell).ceil() as usize + 1;
        let rows = (2.0 * halfwidth / cell).ceil() as usize + 1;
        let origin = [0.5 * cell, -0.5 * (rows - 1) as f64 * cell];
        Self { rows, cols, cell, origin }
    }

    pub(crate) fn rows(&self) -> usize {
        self.rows
    }

    pub(crate) fn cols(&self) -> usize {
        self.cols
    }

    pub(crate) fn x_of(&self, col: usize) -> f64 {
        self.origin[0] + col as f64 * self.cell
    }

    pub(crate) fn y_of(&self, row: usize) -> f64 {
        self.origin[1] + row as f64 * self.cell
    }

    /// Inclusive cell index range covering `[lo, hi]` along x.
    pub(crate) fn col_range(&self, lo: f64, hi: f64) -> (usize, usize) {
        span(lo, hi, self.origin[0], self.cell, self.cols)
    }

    pub(crate) fn row_range(&self, lo: f64, hi: f64) -> (usize, usize) {
        span(lo, hi, self.origin[1], self.cell, self.rows)
    }

    pub(crate) fn finish(&self, floor: Vec<f64>, ceiling: Option<Vec<f64>>) -> Result<LayeredHeightField> {
        LayeredHeightField::with_ceiling(self.rows, self.cols, self.cell, self.origin, floor, ceiling)
    }

    pub(crate) fn build<F, C>(&self, floor: F, ceiling: Option<C>) -> Result<LayeredHeightField>
    where
        F: Fn(f64, f64) -> f64,
        C: Fn(f64, f64) -> Option<f64>,
    {
        let n = self.rows * self.cols;
        let mut fl = Vec::with_capacity(n);
        let mut ce = ceiling.as_ref().map(|_| Vec::with_capacity(n));
        for r in 0..self.rows {
            let y = self.origin[1] + r as f64 * self.cell;
            for c in 0..self.cols {
                let x = self.origin[0] + c as f64 * self.cell;
                let f = floor(x, y);
                fl.push(f);
                if let (Some(out), Some(g)) = (ce.as_mut(), ceiling.as_ref()) {
                    out.push(g(x, y).map_or(f64::NAN, |h| h + f));
                }
            }
        }
        LayeredHeightField::with_ceiling(self.rows, self.cols, self.cell, self.origin, fl, ce)
    }
}

fn span(lo: f64, hi: f64, origin: f64, cell: f64, n: usize) -> (usize, usize) {
    let a = ((lo - origin) / cell).floor().max(0.0) as usize;
    let b = ((hi - origin) / cell).ceil().max(0.0) as usize;
    (a.min(n - 1), b.min(n - 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curriculum_level_bounds() {
        assert!(CurriculumLevel::new(0, 0).is_err());
        assert!(CurriculumLevel::new(11, 10).is_err());
        let top = CurriculumLevel::new(10, 10).unwrap();
        assert!(top.is_max());
        assert_eq!(top.promoted(), top);
        assert_eq!(CurriculumLevel::new(3, 10).unwrap().promoted().level(), 4);
    }

    #[test]
    fn lerp_hits_endpoints_exactly() {
        assert_eq!(lerp(0.045, 0.18, 0.0), 0.045);
        assert_eq!(lerp(0.045, 0.18, 1.0), 0.18);
        assert_eq!(lerp(0.30, 0.18, 1.0), 0.18);
    }

    #[test]
    fn curriculum_terrain_for_every_task() {
        let lvl = CurriculumLevel::new(5, 10).unwrap();
        for task in Task::ALL {
            let t = build_terrain(task, &TerrainSpec::Curriculum, lvl, &CurriculumSettings::default(), 3).unwrap();
            assert!(t.field.rows() > 1 && t.field.cols() > 1);
            let (x0, x1, _, _) = t.field.bounds();
            assert!(t.spawn_front_x > x0 && t.spawn_front_x < x1);
        }
    }

    #[test]
    fn flat_course_is_flat() {
        let t = flat_course(6.0, 1.0).unwrap();
        assert!(t.field.floor_values().iter().all(|&h| h == 0.0));
        assert!(t.completion_x.is_none());
        assert!(!t.field.has_ceiling());
    }
}
