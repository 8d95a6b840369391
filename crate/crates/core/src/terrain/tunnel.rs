//! Overhead obstacles ("tunnels") for the squeeze task.
//!
//! The floor is flat; each slab is a band of ceiling cells at a fixed
//! clearance above the floor, spanning the corridor centre laterally.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{rng_for, CourseGrid, CurriculumLevel, Terrain, TerrainFeatures, TERRAIN_CELL};
use crate::{Error, Result};

/// Clearance schedule from easiest to hardest (m).
pub const TUNNEL_CLEARANCES: [f64; 4] = [0.37, 0.35, 0.33, 0.31];

/// Robot front at reset.
const SPAWN_FRONT_X: f64 = 1.0;
/// Run past the completion line before the course ends (m).
const EXIT_RUN: f64 = 2.0;
/// Distance past the last slab at which the course is completed (m).
const COMPLETION_MARGIN: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TunnelParams {
    /// Ceiling underside above the floor (m).
    pub clearance: f64,
    /// Forward extent of each slab (m).
    pub tunnel_length: f64,
    /// Minimum forward extent of a slab, e.g. a rod's depth (m).
    pub obstacle_thickness: f64,
    /// Lateral extent of each slab (m).
    pub obstacle_width: f64,
    /// Distance the robot walks from reset before reaching the first slab (m).
    pub approach_distance: f64,
    pub slab_count: u32,
    /// Open gap between consecutive slabs (m).
    pub slab_gap: f64,
    /// Redraw approach, length, width and thickness from the seed.
    pub randomize: bool,
    pub corridor_halfwidth: f64,
}

impl Default for TunnelParams {
    fn default() -> Self {
        Self {
            clearance: TUNNEL_CLEARANCES[0],
            tunnel_length: 1.0,
            obstacle_thickness: 0.05,
            obstacle_width: 1.2,
            approach_distance: 0.30,
            slab_count: 1,
            slab_gap: 1.0,
            randomize: false,
            corridor_halfwidth: 1.0,
        }
    }
}

impl TunnelParams {
    pub fn validate(&self) -> Result<()> {
        let lo = TUNNEL_CLEARANCES[3];
        let hi = TUNNEL_CLEARANCES[0];
        if !(lo..=hi).contains(&self.clearance) {
            return Err(Error::params(format!("clearance {} outside [{lo}, {hi}]", self.clearance)));
        }
        let positive = [self.tunnel_length, self.obstacle_thickness, self.obstacle_width, self.corridor_halfwidth];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::params("tunnel dimensions must be positive"));
        }
        if !(self.approach_distance >= 0.0) || !(self.slab_gap >= 0.0) || self.slab_count == 0 {
            return Err(Error::params("approach and gap must be non-negative, slab_count >= 1"));
        }
        Ok(())
    }

    /// Forward extent of one slab.
    pub fn band_length(&self) -> f64 {
        self.tunnel_length.max(self.obstacle_thickness)
    }
}

/// Maps a curriculum level onto the four published clearances.
pub fn tunnel_clearance_for_level(lvl: CurriculumLevel) -> f64 {
    let steps = (TUNNEL_CLEARANCES.len() - 1) as u32;
    let t = lvl.total_levels();
    let idx = (lvl.level() * steps + t / 2) / t;
    TUNNEL_CLEARANCES[idx as usize]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slab {
    pub start_x: f64,
    pub end_x: f64,
    pub half_width: f64,
    pub clearance: f64,
}

impl Slab {
    pub fn covers(&self, x: f64, y: f64) -> bool {
        x >= self.start_x && x < self.end_x && y.abs() <= self.half_width
    }
}

pub fn generate_tunnel(params: &TunnelParams, seed: u64) -> Result<Terrain> {
    params.validate()?;
    let mut p = params.clone();
    if p.randomize {
        let mut rng = rng_for(seed);
        p.approach_distance = rng.random_range(0.3..=1.5);
        p.tunnel_length = rng.random_range(0.1..=1.5);
        p.obstacle_width = rng.random_range(0.8..=1.6f64).min(2.0 * p.corridor_halfwidth);
        p.obstacle_thickness = rng.random_range(0.02..=0.2);
    }
    let band = p.band_length();
    let first = SPAWN_FRONT_X + p.approach_distance;
    let slabs: Vec<Slab> = (0..p.slab_count)
        .map(|k| {
            let start_x = first + k as f64 * (band + p.slab_gap);
            Slab { start_x, end_x: start_x + band, half_width: 0.5 * p.obstacle_width, clearance: p.clearance }
        })
        .collect();
    let last_end = slabs.last().map_or(first, |s| s.end_x);
    let grid = CourseGrid::new(last_end + COMPLETION_MARGIN + EXIT_RUN, p.corridor_halfwidth, TERRAIN_CELL);
    let field = grid.build(
        |_, _| 0.0,
        Some(|x: f64, y: f64| slabs.iter().find(|s| s.covers(x, y)).map(|s| s.clearance)),
    )?;
    Ok(Terrain {
        field,
        spawn_front_x: SPAWN_FRONT_X,
        corridor_halfwidth: p.corridor_halfwidth,
        completion_x: Some(last_end + COMPLETION_MARGIN),
        features: TerrainFeatures::Tunnel(slabs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clearance_schedule_covers_published_values() {
        let seen: Vec<f64> = (0..=10)
            .map(|l| tunnel_clearance_for_level(CurriculumLevel::new(l, 10).unwrap()))
            .collect();
        assert_eq!(seen[0], 0.37);
        assert_eq!(seen[10], 0.31);
        for c in TUNNEL_CLEARANCES {
            assert!(seen.contains(&c));
        }
        assert!(seen.windows(2).all(|w| w[1] <= w[0]));
        let three: Vec<f64> = (0..=3)
            .map(|l| tunnel_clearance_for_level(CurriculumLevel::new(l, 3).unwrap()))
            .collect();
        assert_eq!(three, TUNNEL_CLEARANCES.to_vec());
    }

    #[test]
    fn slab_has_requested_clearance() {
        let p = TunnelParams { clearance: 0.31, ..Default::default() };
        let t = generate_tunnel(&p, 0).unwrap();
        let x = SPAWN_FRONT_X + p.approach_distance + 0.5;
        assert_eq!(t.field.sample_ceiling(x, 0.0), Some(0.31));
        assert_eq!(t.field.sample_floor(x, 0.0), 0.0);
        assert_eq!(t.field.sample_ceiling(SPAWN_FRONT_X, 0.0), None);
    }

    #[test]
    fn band_length_matches_tunnel_length() {
        let p = TunnelParams { tunnel_length: 1.291, ..Default::default() };
        let t = generate_tunnel(&p, 0).unwrap();
        let TerrainFeatures::Tunnel(slabs) = &t.features else { panic!() };
        assert!((slabs[0].end_x - slabs[0].start_x - 1.291).abs() < 1e-12);
        // rasterized band: count covered cells along the centre line
        let f = &t.field;
        let (row, _) = f.nearest_cell(0.0, 0.0);
        let covered = (0..f.cols()).filter(|&c| f.ceiling_at(row, c).is_some()).count();
        let measured = covered as f64 * f.cell_size();
        assert!((measured - 1.291).abs() <= f.cell_size(), "measured {measured}");
    }

    #[test]
    fn consecutive_slabs_leave_a_gap() {
        let p = TunnelParams { slab_count: 2, tunnel_length: 0.3, slab_gap: 1.0, ..Default::default() };
        let t = generate_tunnel(&p, 0).unwrap();
        let TerrainFeatures::Tunnel(slabs) = &t.features else { panic!() };
        assert_eq!(slabs.len(), 2);
        let mid = 0.5 * (slabs[0].end_x + slabs[1].start_x);
        assert_eq!(t.field.sample_ceiling(mid, 0.0), None);
        assert!(t.field.sample_ceiling(slabs[1].start_x + 0.15, 0.0).is_some());
    }

    #[test]
    fn every_curriculum_clearance_is_a_valid_field() {
        for c in TUNNEL_CLEARANCES {
            let p = TunnelParams { clearance: c, ..Default::default() };
            assert!(generate_tunnel(&p, 1).is_ok());
        }
    }

    #[test]
    fn randomization_is_seeded() {
        let p = TunnelParams { randomize: true, ..Default::default() };
        let a = generate_tunnel(&p, 4).unwrap();
        let b = generate_tunnel(&p, 4).unwrap();
        assert_eq!(a.field, b.field);
        let starts: Vec<f64> = (0..10)
            .map(|s| match generate_tunnel(&p, s).unwrap().features {
                TerrainFeatures::Tunnel(v) => v[0].start_x,
                _ => unreachable!(),
            })
            .collect();
        assert!(starts.iter().any(|&s| (s - starts[0]).abs() > 1e-6));
    }

    #[test]
    fn rejects_clearance_outside_schedule() {
        assert!(generate_tunnel(&TunnelParams { clearance: 0.2, ..Default::default() }, 0).is_err());
    }
}
