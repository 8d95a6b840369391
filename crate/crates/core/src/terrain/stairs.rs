//! Staircases with a riser/tread curriculum and per-step tread jitter.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{lerp, rng_for, CourseGrid, CurriculumLevel, Terrain, TerrainFeatures, TERRAIN_CELL};
use crate::{Error, Result};

pub const RISER_EASIEST: f64 = 0.045;
pub const RISER_HARDEST: f64 = 0.18;
pub const TREAD_EASIEST: f64 = 0.30;
pub const TREAD_HARDEST: f64 = 0.18;

/// Flat run before the first riser (m).
const APPROACH: f64 = 1.2;
/// Spawn gap between the robot's front and the first riser (m).
const SPAWN_GAP: f64 = 0.20;
/// Flat run after the last step (m).
const TOP_RUN: f64 = 1.5;
const LANDING_DEPTH: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StairDirection {
    #[default]
    Up,
    Down,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StairParams {
    pub riser: f64,
    /// Nominal tread depth before jitter.
    pub tread: f64,
    pub step_count: u32,
    /// Each tread is scaled by `1 + u`, `u ~ U(-j, j)`.
    pub tread_jitter_fraction: f64,
    /// Insert a landing after every this many steps.
    pub landing_interval: Option<u32>,
    pub direction: StairDirection,
    pub halfwidth: f64,
}

impl Default for StairParams {
    fn default() -> Self {
        Self {
            riser: RISER_EASIEST,
            tread: TREAD_EASIEST,
            step_count: 10,
            tread_jitter_fraction: 0.2,
            landing_interval: None,
            direction: StairDirection::Up,
            halfwidth: 1.0,
        }
    }
}

impl StairParams {
    pub fn validate(&self) -> Result<()> {
        if !(RISER_EASIEST..=RISER_HARDEST).contains(&self.riser) {
            return Err(Error::params(format!("riser {} outside [0.045, 0.18]", self.riser)));
        }
        if !(TREAD_HARDEST..=TREAD_EASIEST).contains(&self.tread) {
            return Err(Error::params(format!("tread {} outside [0.18, 0.30]", self.tread)));
        }
        if self.step_count == 0 {
            return Err(Error::params("step_count must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.tread_jitter_fraction) {
            return Err(Error::params("tread jitter fraction must be in [0, 1)"));
        }
        if self.landing_interval == Some(0) {
            return Err(Error::params("landing interval must be positive"));
        }
        if !(self.halfwidth > 0.0) {
            return Err(Error::params("halfwidth must be positive"));
        }
        Ok(())
    }
}

/// Riser grows and tread shrinks linearly with the curriculum level.
pub fn stair_params_for_level(lvl: CurriculumLevel) -> StairParams {
    let t = lvl.fraction();
    StairParams {
        riser: lerp(RISER_EASIEST, RISER_HARDEST, t),
        tread: lerp(TREAD_EASIEST, TREAD_HARDEST, t),
        ..StairParams::default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StairLayout {
    /// `x` of each riser, in travel order.
    pub riser_x: Vec<f64>,
    /// Realized depth of each step (landings excluded).
    pub treads: Vec<f64>,
    pub riser: f64,
    pub direction: StairDirection,
    /// Far edge of the last step.
    pub far_edge_x: f64,
}

impl StairLayout {
    /// Floor height of the flat region reached after crossing `k` risers.
    pub fn height_after(&self, k: usize) -> f64 {
        let n = self.riser_x.len();
        match self.direction {
            StairDirection::Up => k as f64 * self.riser,
            StairDirection::Down => (n - k) as f64 * self.riser,
        }
    }

    /// Number of risers strictly behind `x`.
    pub fn risers_passed(&self, x: f64) -> usize {
        self.riser_x.partition_point(|&r| r < x)
    }
}

pub fn generate_stairs(params: &StairParams, seed: u64) -> Result<Terrain> {
    params.validate()?;
    let mut rng = rng_for(seed);
    let n = params.step_count as usize;
    let j = params.tread_jitter_fraction;
    let mut riser_x = Vec::with_capacity(n);
    let mut treads = Vec::with_capacity(n);
    let mut x = APPROACH;
    for k in 1..=n {
        let u = if j > 0.0 { rng.random_range(-j..=j) } else { 0.0 };
        let tread = params.tread * (1.0 + u);
        riser_x.push(x);
        treads.push(tread);
        x += tread;
        if let Some(every) = params.landing_interval {
            if k % every as usize == 0 && k < n {
                x += LANDING_DEPTH;
            }
        }
    }
    let layout = StairLayout {
        riser_x,
        treads,
        riser: params.riser,
        direction: params.direction,
        far_edge_x: x,
    };
    let grid = CourseGrid::new(x + TOP_RUN, params.halfwidth, TERRAIN_CELL);
    let field = grid.build(
        |x, _| layout.height_after(layout.risers_passed(x + 1e-12)),
        None::<fn(f64, f64) -> Option<f64>>,
    )?;
    Ok(Terrain {
        field,
        spawn_front_x: APPROACH - SPAWN_GAP,
        corridor_halfwidth: params.halfwidth,
        completion_x: Some(layout.far_edge_x),
        features: TerrainFeatures::Stairs(layout),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn level(l: u32, t: u32) -> CurriculumLevel {
        CurriculumLevel::new(l, t).unwrap()
    }

    #[test]
    fn schedule_endpoints_and_midpoint() {
        let p0 = stair_params_for_level(level(0, 10));
        assert_eq!((p0.riser, p0.tread), (0.045, 0.30));
        let p1 = stair_params_for_level(level(10, 10));
        assert_eq!((p1.riser, p1.tread), (0.18, 0.18));
        let mid = stair_params_for_level(level(5, 10));
        assert!((mid.riser - 0.1125).abs() < 1e-12);
        assert!((mid.tread - 0.24).abs() < 1e-12);
    }

    #[test]
    fn unjittered_stairs_have_plateaus() {
        let p = StairParams { riser: 0.1, tread: 0.25, step_count: 3, tread_jitter_fraction: 0.0, ..Default::default() };
        let t = generate_stairs(&p, 1).unwrap();
        let f = &t.field;
        let samples = [APPROACH - 0.5, APPROACH + 0.125, APPROACH + 0.375, APPROACH + 0.625, APPROACH + 1.2];
        let heights: Vec<f64> = samples.iter().map(|&x| f.sample_floor(x, 0.0)).collect();
        for (h, want) in heights.iter().zip([0.0, 0.1, 0.2, 0.3, 0.3]) {
            assert!((h - want).abs() < 1e-12, "{heights:?}");
        }
        if let TerrainFeatures::Stairs(l) = &t.features {
            assert_eq!(l.treads, vec![0.25; 3]);
            assert!((l.far_edge_x - (APPROACH + 0.75)).abs() < 1e-12);
        } else {
            panic!("expected stairs layout");
        }
    }

    #[test]
    fn downward_stairs_descend() {
        let p = StairParams { riser: 0.1, step_count: 3, tread_jitter_fraction: 0.0, direction: StairDirection::Down, ..Default::default() };
        let t = generate_stairs(&p, 0).unwrap();
        assert_eq!(t.field.sample_floor(0.5, 0.0), 3.0 * 0.1);
        assert_eq!(t.field.sample_floor(t.completion_x.unwrap() + 0.5, 0.0), 0.0);
    }

    #[test]
    fn cumulative_height_is_exact_multiple_of_riser() {
        let p = StairParams { riser: 0.13, step_count: 7, ..Default::default() };
        let t = generate_stairs(&p, 99).unwrap();
        let TerrainFeatures::Stairs(l) = &t.features else { panic!() };
        for k in 0..=7usize {
            let x = if k == 0 { 0.5 } else if k < 7 { l.riser_x[k - 1] + 0.5 * l.treads[k - 1] } else { l.far_edge_x + 0.5 };
            let (r, c) = t.field.nearest_cell(x, 0.0);
            assert_eq!(t.field.floor_at(r, c), k as f64 * 0.13);
        }
    }

    #[test]
    fn landings_extend_flat_runs() {
        let p = StairParams { step_count: 4, landing_interval: Some(2), tread_jitter_fraction: 0.0, ..Default::default() };
        let t = generate_stairs(&p, 0).unwrap();
        let TerrainFeatures::Stairs(l) = &t.features else { panic!() };
        let gap = l.riser_x[2] - l.riser_x[1];
        assert!((gap - (0.30 + LANDING_DEPTH)).abs() < 1e-12);
    }

    #[test]
    fn deterministic_per_seed() {
        let p = StairParams::default();
        let a = generate_stairs(&p, 42).unwrap();
        let b = generate_stairs(&p, 42).unwrap();
        assert_eq!(a.field, b.field);
        let c = generate_stairs(&p, 43).unwrap();
        assert_ne!(a.field, c.field);
    }

    #[test]
    fn jittered_treads_stay_in_band() {
        let p = StairParams { tread: 0.25, tread_jitter_fraction: 0.2, step_count: 12, ..Default::default() };
        for seed in 0..1000 {
            let t = generate_stairs(&p, seed).unwrap();
            let TerrainFeatures::Stairs(l) = &t.features else { panic!() };
            assert!(l.treads.iter().all(|&d| (0.20 - 1e-12..=0.30 + 1e-12).contains(&d)), "seed {seed}");
        }
    }

    #[test]
    fn rejects_out_of_range_params() {
        assert!(generate_stairs(&StairParams { riser: 0.2, ..Default::default() }, 0).is_err());
        assert!(generate_stairs(&StairParams { tread: 0.1, ..Default::default() }, 0).is_err());
        assert!(generate_stairs(&StairParams { step_count: 0, ..Default::default() }, 0).is_err());
    }
}
