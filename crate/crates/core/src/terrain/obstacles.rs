//! Obstacle fields for the avoidance task.
//!
//! Obstacle centres are drawn by dart throwing with a hard minimum spacing
//! (a Poisson-disk process), so a walkable gap always exists between
//! neighbours. The number of obstacles is Poisson distributed with mean
//! `density * placement area`.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::{rng_for, CourseGrid, CurriculumLevel, Terrain, TerrainFeatures, TERRAIN_CELL};
use crate::{Error, Result};

/// Robot front at reset.
const SPAWN_FRONT_X: f64 = 0.8;
/// Obstacle-free run after the last obstacle before the course ends.
const EXIT_RUN: f64 = 1.5;
const MAX_ATTEMPTS_PER_OBSTACLE: usize = 5000;
/// Fraction of hexagonal close packing a random hard-core process can reach.
const PACKING_LIMIT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Box,
    Cylinder,
    Polygon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    pub kind: ShapeKind,
    /// Size range (m); its meaning depends on `kind`.
    pub size: [f64; 2],
    pub height: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObstacleFieldParams {
    pub shape_set: Vec<ShapeSpec>,
    pub corridor_halfwidth: f64,
    pub corridor_length: f64,
    /// Obstacle-free run ahead of the robot at reset (m, at least 1).
    pub spawn_clear: f64,
    /// Minimum distance between obstacle centres (m).
    pub min_spacing: f64,
}

impl Default for ObstacleFieldParams {
    fn default() -> Self {
        Self {
            shape_set: vec![
                ShapeSpec { kind: ShapeKind::Box, size: [0.15, 0.35], height: [0.2, 0.5] },
                ShapeSpec { kind: ShapeKind::Cylinder, size: [0.08, 0.18], height: [0.2, 0.5] },
                ShapeSpec { kind: ShapeKind::Polygon, size: [0.12, 0.22], height: [0.2, 0.5] },
            ],
            corridor_halfwidth: 2.0,
            corridor_length: 12.0,
            spawn_clear: 1.0,
            min_spacing: 1.0,
        }
    }
}

impl ObstacleFieldParams {
    pub fn validate(&self) -> Result<()> {
        if self.shape_set.is_empty() {
            return Err(Error::params("shape_set must not be empty"));
        }
        for s in &self.shape_set {
            let ok = s.size[0] > 0.0 && s.size[1] >= s.size[0] && s.height[0] > 0.0 && s.height[1] >= s.height[0];
            if !ok {
                return Err(Error::params(format!("invalid shape ranges {s:?}")));
            }
        }
        if !(self.corridor_halfwidth > 0.0 && self.min_spacing > 0.0 && self.spawn_clear >= 1.0) {
            return Err(Error::params("corridor halfwidth and spacing must be positive, spawn_clear >= 1 m"));
        }
        let (x0, x1, y0, y1) = self.placement_region();
        if !(x1 > x0 && y1 > y0) {
            return Err(Error::params("corridor too small for any obstacle placement"));
        }
        Ok(())
    }

    fn max_radius(&self) -> f64 {
        self.shape_set
            .iter()
            .map(|s| match s.kind {
                ShapeKind::Box => s.size[1] * std::f64::consts::FRAC_1_SQRT_2,
                ShapeKind::Cylinder | ShapeKind::Polygon => s.size[1],
            })
            .fold(0.0, f64::max)
    }

    /// Rectangle that obstacle centres are drawn from.
    pub fn placement_region(&self) -> (f64, f64, f64, f64) {
        let r = self.max_radius();
        (
            SPAWN_FRONT_X + self.spawn_clear + r,
            self.corridor_length - EXIT_RUN,
            -self.corridor_halfwidth + r,
            self.corridor_halfwidth - r,
        )
    }

    pub fn placement_area(&self) -> f64 {
        let (x0, x1, y0, y1) = self.placement_region();
        (x1 - x0).max(0.0) * (y1 - y0).max(0.0)
    }
}

/// Density schedule exactly as published: `(2 * level / total) * density_final`.
/// Note that this reaches twice `density_final` at the top level.
pub fn obstacle_density_for_level(lvl: CurriculumLevel, density_final: f64) -> f64 {
    (2.0 * lvl.level() as f64 / lvl.total_levels() as f64) * density_final
}

/// The published schedule capped at `density_final`.
pub fn capped_obstacle_density(lvl: CurriculumLevel, density_final: f64) -> f64 {
    obstacle_density_for_level(lvl, density_final).min(density_final)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Footprint {
    Box { half_x: f64, half_y: f64, yaw: f64 },
    Cylinder { radius: f64 },
    /// Vertices relative to the centre, counter-clockwise.
    Polygon { vertices: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Obstacle {
    pub center: [f64; 2],
    pub height: f64,
    pub footprint: Footprint,
}

impl Obstacle {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let dx = x - self.center[0];
        let dy = y - self.center[1];
        match &self.footprint {
            Footprint::Box { half_x, half_y, yaw } => {
                let (s, c) = yaw.sin_cos();
                let lx = c * dx + s * dy;
                let ly = -s * dx + c * dy;
                lx.abs() <= *half_x && ly.abs() <= *half_y
            }
            Footprint::Cylinder { radius } => dx * dx + dy * dy <= radius * radius,
            Footprint::Polygon { vertices } => point_in_polygon(vertices, dx, dy),
        }
    }

    pub fn bounding_radius(&self) -> f64 {
        match &self.footprint {
            Footprint::Box { half_x, half_y, .. } => half_x.hypot(*half_y),
            Footprint::Cylinder { radius } => *radius,
            Footprint::Polygon { vertices } => vertices.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max),
        }
    }
}

fn point_in_polygon(vertices: &[[f64; 2]], x: f64, y: f64) -> bool {
    let mut inside = false;
    let n = vertices.len();
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = (vertices[i][0], vertices[i][1]);
        let (xj, yj) = (vertices[j][0], vertices[j][1]);
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

fn sample_obstacle<R: Rng>(rng: &mut R, shape: &ShapeSpec, center: [f64; 2]) -> Obstacle {
    let size = rng.random_range(shape.size[0]..=shape.size[1]);
    let height = rng.random_range(shape.height[0]..=shape.height[1]);
    let footprint = match shape.kind {
        ShapeKind::Box => {
            let other = rng.random_range(shape.size[0]..=shape.size[1]);
            Footprint::Box { half_x: 0.5 * size, half_y: 0.5 * other, yaw: rng.random_range(0.0..std::f64::consts::PI) }
        }
        ShapeKind::Cylinder => Footprint::Cylinder { radius: size },
        ShapeKind::Polygon => {
            let k = rng.random_range(5..=7);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            let vertices = (0..k)
                .map(|i| {
                    let a = phase + std::f64::consts::TAU * i as f64 / k as f64;
                    let r = size * rng.random_range(0.7..=1.0);
                    [r * a.cos(), r * a.sin()]
                })
                .collect();
            Footprint::Polygon { vertices }
        }
    };
    Obstacle { center, height, footprint }
}

pub fn generate_obstacle_field(params: &ObstacleFieldParams, density: f64, seed: u64) -> Result<Terrain> {
    params.validate()?;
    if !(density >= 0.0 && density.is_finite()) {
        return Err(Error::params(format!("density must be non-negative, got {density}")));
    }
    let s = params.min_spacing;
    let packing = 2.0 / (3f64.sqrt() * s * s);
    if density > PACKING_LIMIT * packing {
        return Err(Error::Infeasible(format!(
            "density {density:.3}/m^2 exceeds what spacing {s} m allows ({:.3}/m^2)",
            PACKING_LIMIT * packing
        )));
    }

    let mut rng = rng_for(seed);
    let area = params.placement_area();
    let mean = density * area;
    let count = if mean > 0.0 {
        Poisson::new(mean).map_err(|e| Error::params(e.to_string()))?.sample(&mut rng) as usize
    } else {
        0
    };

    let (x0, x1, y0, y1) = params.placement_region();
    let mut obstacles: Vec<Obstacle> = Vec::with_capacity(count);
    for placed in 0..count {
        let mut attempts = 0;
        let center = loop {
            if attempts == MAX_ATTEMPTS_PER_OBSTACLE {
                return Err(Error::Infeasible(format!(
                    "could only place {placed} of {count} obstacles at spacing {s} m"
                )));
            }
            attempts += 1;
            let c = [rng.random_range(x0..=x1), rng.random_range(y0..=y1)];
            let clear = obstacles
                .iter()
                .all(|o| (o.center[0] - c[0]).hypot(o.center[1] - c[1]) >= s);
            if clear {
                break c;
            }
        };
        let shape = &params.shape_set[rng.random_range(0..params.shape_set.len())];
        obstacles.push(sample_obstacle(&mut rng, shape, center));
    }

    let grid = CourseGrid::new(params.corridor_length, params.corridor_halfwidth, TERRAIN_CELL);
    let cols = grid.cols();
    let mut floor = vec![0.0; grid.rows() * cols];
    for o in &obstacles {
        let r = o.bounding_radius();
        let (c0, c1) = grid.col_range(o.center[0] - r, o.center[0] + r);
        let (r0, r1) = grid.row_range(o.center[1] - r, o.center[1] + r);
        for row in r0..=r1 {
            let y = grid.y_of(row);
            for col in c0..=c1 {
                if o.contains(grid.x_of(col), y) {
                    let cell = &mut floor[row * cols + col];
                    *cell = f64::max(*cell, o.height);
                }
            }
        }
    }
    let last = obstacles.iter().map(|o| o.center[0]).fold(f64::NEG_INFINITY, f64::max);
    let completion = if obstacles.is_empty() { x0 + 1.0 } else { last + 1.0 };
    Ok(Terrain {
        field: grid.finish(floor, None)?,
        spawn_front_x: SPAWN_FRONT_X,
        corridor_halfwidth: params.corridor_halfwidth,
        completion_x: Some(completion),
        features: TerrainFeatures::Obstacles(obstacles),
    })
}
