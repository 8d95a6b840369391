//! Attic-style joists: periodic ridges across the direction of travel.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{rng_for, CourseGrid, Terrain, TerrainFeatures, TERRAIN_CELL};
use crate::{Error, Result};

const SPAWN_FRONT_X: f64 = 0.8;
const JOIST_START: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JoistParams {
    pub spacing: f64,
    pub height: f64,
    pub width: f64,
    /// Length of the joisted region (m).
    pub run: f64,
    pub halfwidth: f64,
}

impl Default for JoistParams {
    fn default() -> Self {
        // 2x6 joists on 16" centres
        Self { spacing: 0.406, height: 0.06, width: 0.038, run: 4.0, halfwidth: 1.0 }
    }
}

/// Ridges of `height` and `width` every `spacing` metres. The seed shifts the
/// first ridge by a whole number of raster cells.
pub fn generate_joists(params: &JoistParams, seed: u64) -> Result<Terrain> {
    let JoistParams { spacing, height, width, run, halfwidth } = *params;
    if !(spacing > 0.0 && width > 0.0 && width < spacing && height >= 0.0 && run > 0.0 && halfwidth > 0.0) {
        return Err(Error::params(format!("invalid joist parameters {params:?}")));
    }
    let mut rng = rng_for(seed);
    let shift_cells = rng.random_range(0..((spacing / TERRAIN_CELL) as u64).max(1));
    let start = JOIST_START + shift_cells as f64 * TERRAIN_CELL;
    let end = start + run;
    let grid = CourseGrid::new(end + 1.5, halfwidth, TERRAIN_CELL);
    let field = grid.build(
        |x, _| {
            if x < start || x >= end {
                return 0.0;
            }
            let phase = (x - start).rem_euclid(spacing);
            if phase < width {
                height
            } else {
                0.0
            }
        },
        None::<fn(f64, f64) -> Option<f64>>,
    )?;
    Ok(Terrain {
        field,
        spawn_front_x: SPAWN_FRONT_X,
        corridor_halfwidth: halfwidth,
        completion_x: Some(end),
        features: TerrainFeatures::Joists { start, end, spacing },
    })
}
