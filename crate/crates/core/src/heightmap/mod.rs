//! Layered height fields.
//!
//! A [`LayeredHeightField`] stores a floor height per grid cell and, optionally,
//! the underside height of an overhead obstacle per cell. Contacts, sensors
//! and collision checks all read from it.
//!
//! Cell `(row, col)` is centred at `origin + (col * cell_size, row * cell_size)`:
//! columns run along world `x`, rows along world `y`. Storage is row-major.

mod format;

pub use format::{read_hxm, write_hxm, HXM_MAGIC, HXM_VERSION};

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct LayeredHeightField {
    rows: usize,
    cols: usize,
    cell_size: f64,
    origin: [f64; 2],
    floor: Vec<f64>,
    /// `NaN` marks cells with nothing overhead.
    ceiling: Option<Vec<f64>>,
}

impl LayeredHeightField {
    pub fn new(
        rows: usize,
        cols: usize,
        cell_size: f64,
        origin: [f64; 2],
        floor: Vec<f64>,
    ) -> Result<Self> {
        Self::with_ceiling(rows, cols, cell_size, origin, floor, None)
    }

    /// Builds a field with an optional ceiling layer (`NaN` = absent).
    pub fn with_ceiling(
        rows: usize,
        cols: usize,
        cell_size: f64,
        origin: [f64; 2],
        floor: Vec<f64>,
        ceiling: Option<Vec<f64>>,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidField(format!("grid must be non-empty, got {rows}x{cols}")));
        }
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::InvalidField(format!("cell size must be positive, got {cell_size}")));
        }
        if !origin.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidField("origin must be finite".into()));
        }
        let n = rows * cols;
        if floor.len() != n {
            return Err(Error::InvalidField(format!(
                "floor has {} values, expected {n}",
                floor.len()
            )));
        }
        if let Some(i) = floor.iter().position(|h| !h.is_finite()) {
            return Err(Error::InvalidField(format!("non-finite floor value at index {i}")));
        }
        if let Some(ceil) = &ceiling {
            if ceil.len() != n {
                return Err(Error::InvalidField(format!(
                    "ceiling has {} values, expected {n}",
                    ceil.len()
                )));
            }
            for (i, (&c, &f)) in ceil.iter().zip(&floor).enumerate() {
                if c.is_nan() {
                    continue;
                }
                if !c.is_finite() || c <= f {
                    return Err(Error::InvalidField(format!(
                        "ceiling {c} not above floor {f} at index {i}"
                    )));
                }
            }
        }
        Ok(Self { rows, cols, cell_size, origin, floor, ceiling })
    }

    pub fn flat(rows: usize, cols: usize, cell_size: f64, origin: [f64; 2], height: f64) -> Result<Self> {
        Self::new(rows, cols, cell_size, origin, vec![height; rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn floor_values(&self) -> &[f64] {
        &self.floor
    }

    pub fn ceiling_values(&self) -> Option<&[f64]> {
        self.ceiling.as_deref()
    }

    pub fn has_ceiling(&self) -> bool {
        self.ceiling.is_some()
    }

    pub fn floor_at(&self, row: usize, col: usize) -> f64 {
        self.floor[row * self.cols + col]
    }

    pub fn ceiling_at(&self, row: usize, col: usize) -> Option<f64> {
        let c = self.ceiling.as_ref()?[row * self.cols + col];
        (!c.is_nan()).then_some(c)
    }

    /// World-space centre of a cell.
    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        (
            self.origin[0] + col as f64 * self.cell_size,
            self.origin[1] + row as f64 * self.cell_size,
        )
    }

    /// Axis-aligned world extent covered by cells: `(x_min, x_max, y_min, y_max)`.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        let h = 0.5 * self.cell_size;
        (
            self.origin[0] - h,
            self.origin[0] + (self.cols as f64 - 0.5) * self.cell_size,
            self.origin[1] - h,
            self.origin[1] + (self.rows as f64 - 0.5) * self.cell_size,
        )
    }

    /// Index of the cell containing `(x, y)`, clamped to the grid.
    pub fn nearest_cell(&self, x: f64, y: f64) -> (usize, usize) {
        let c = ((x - self.origin[0]) / self.cell_size).round();
        let r = ((y - self.origin[1]) / self.cell_size).round();
        (clamp_index(r, self.rows), clamp_index(c, self.cols))
    }

    /// Bilinear floor height; outside the grid the edge values extend outward.
    pub fn sample_floor(&self, x: f64, y: f64) -> f64 {
        let fx = ((x - self.origin[0]) / self.cell_size).clamp(0.0, (self.cols - 1) as f64);
        let fy = ((y - self.origin[1]) / self.cell_size).clamp(0.0, (self.rows - 1) as f64);
        let c0 = (fx.floor() as usize).min(self.cols.saturating_sub(2));
        let r0 = (fy.floor() as usize).min(self.rows.saturating_sub(2));
        let c1 = (c0 + 1).min(self.cols - 1);
        let r1 = (r0 + 1).min(self.rows - 1);
        let tx = fx - c0 as f64;
        let ty = fy - r0 as f64;
        let f = &self.floor;
        let w = self.cols;
        let h00 = f[r0 * w + c0];
        let h01 = f[r0 * w + c1];
        let h10 = f[r1 * w + c0];
        let h11 = f[r1 * w + c1];
        let top = h00 + (h01 - h00) * tx;
        let bottom = h10 + (h11 - h10) * tx;
        top + (bottom - top) * ty
    }

    /// Ceiling underside of the nearest cell, if that cell has one.
    pub fn sample_ceiling(&self, x: f64, y: f64) -> Option<f64> {
        let ceil = self.ceiling.as_ref()?;
        let (r, c) = self.nearest_cell(x, y);
        let v = ceil[r * self.cols + c];
        (!v.is_nan()).then_some(v)
    }
}

/// Bitwise equality, so two fields with the same absent-ceiling markers compare equal.
impl PartialEq for LayeredHeightField {
    fn eq(&self, other: &Self) -> bool {
        fn bits(v: &[f64]) -> impl Iterator<Item = u64> + '_ {
            v.iter().map(|x| x.to_bits())
        }
        self.rows == other.rows
            && self.cols == other.cols
            && self.cell_size.to_bits() == other.cell_size.to_bits()
            && self.origin.map(f64::to_bits) == other.origin.map(f64::to_bits)
            && bits(&self.floor).eq(bits(&other.floor))
            && match (&self.ceiling, &other.ceiling) {
                (None, None) => true,
                (Some(a), Some(b)) => bits(a).eq(bits(b)),
                _ => false,
            }
    }
}

fn clamp_index(v: f64, n: usize) -> usize {
    if v <= 0.0 || v.is_nan() {
        0
    } else {
        (v as usize).min(n - 1)
    }
}

/// Geometry of a privileged height-map patch relative to the robot.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PatchSpec {
    /// Lateral extent (m).
    pub width: f64,
    /// Forward extent (m).
    pub length: f64,
    /// Gap between the robot's front and the patch's near edge (m).
    pub standoff: f64,
    pub cell_size: f64,
}

/// Default patch grid resolution (m).
pub const DEFAULT_PATCH_CELL: f64 = 0.05;

impl PatchSpec {
    pub fn new(width: f64, length: f64, standoff: f64, cell_size: f64) -> Result<Self> {
        let spec = Self { width, length, standoff, cell_size };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.width > 0.0
            && self.length > 0.0
            && self.standoff >= 0.0
            && self.cell_size > 0.0
            && [self.width, self.length, self.standoff, self.cell_size].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::params(format!("invalid patch spec {self:?}")))
        }
    }

    /// Forward (far-to-near) row count.
    pub fn rows(&self) -> usize {
        ((self.length / self.cell_size).round() as usize).max(1)
    }

    /// Lateral column count.
    pub fn cols(&self) -> usize {
        ((self.width / self.cell_size).round() as usize).max(1)
    }
}

/// Which layer(s) a patch is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PatchLayer {
    FloorOnly,
    /// Ceiling underside where something is overhead, floor elsewhere.
    SqueezeComposite,
}

/// A robot-relative height grid. Row 0 is the far edge, the last row is the
/// one nearest the robot; column 0 is on the robot's left.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightPatch {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    layer: PatchLayer,
}

impl HeightPatch {
    pub fn from_values(rows: usize, cols: usize, values: Vec<f64>, layer: PatchLayer) -> Result<Self> {
        if rows == 0 || cols == 0 || values.len() != rows * cols {
            return Err(Error::Shape { expected: rows * cols, got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::params("patch values must be finite"));
        }
        Ok(Self { rows, cols, values, layer })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn layer(&self) -> PatchLayer {
        self.layer
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    /// Heights re-expressed relative to `ground`.
    pub fn relative_to(&self, ground: f64) -> HeightPatch {
        HeightPatch {
            values: self.values.iter().map(|v| v - ground).collect(),
            ..self.clone()
        }
    }

    /// Left/right mirror image.
    pub fn mirrored(&self) -> HeightPatch {
        let mut values = Vec::with_capacity(self.values.len());
        for r in 0..self.rows {
            for c in (0..self.cols).rev() {
                values.push(self.get(r, c));
            }
        }
        HeightPatch { values, ..self.clone() }
    }
}

/// Planar pose of the robot's front-centre point, used to anchor patches.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlanarPose {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

/// Samples a patch ahead of `front`, aligned with its yaw.
pub fn extract_patch(
    field: &LayeredHeightField,
    front: PlanarPose,
    spec: &PatchSpec,
    layer: PatchLayer,
) -> HeightPatch {
    let rows = spec.rows();
    let cols = spec.cols();
    let (s, c) = front.yaw.sin_cos();
    let mut values = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        let forward = spec.standoff + spec.length - (i as f64 + 0.5) * spec.cell_size;
        for j in 0..cols {
            let lateral = 0.5 * spec.width - (j as f64 + 0.5) * spec.cell_size;
            let x = front.x + c * forward - s * lateral;
            let y = front.y + s * forward + c * lateral;
            let h = match layer {
                PatchLayer::FloorOnly => field.sample_floor(x, y),
                PatchLayer::SqueezeComposite => field
                    .sample_ceiling(x, y)
                    .unwrap_or_else(|| field.sample_floor(x, y)),
            };
            values.push(h);
        }
    }
    HeightPatch { rows, cols, values, layer }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_field() -> LayeredHeightField {
        // 3 rows x 4 cols, value = col + 10 * row
        let floor = (0..3).flat_map(|r| (0..4).map(move |c| c as f64 + 10.0 * r as f64)).collect();
        LayeredHeightField::new(3, 4, 0.5, [1.0, -1.0], floor).unwrap()
    }

    #[test]
    fn flat_field_samples_constant() {
        let f = LayeredHeightField::flat(4, 4, 0.1, [0.0, 0.0], 0.0).unwrap();
        for &(x, y) in &[(0.0, 0.0), (0.13, 0.27), (-5.0, 9.0), (100.0, -3.0)] {
            assert_eq!(f.sample_floor(x, y), 0.0);
        }
    }

    #[test]
    fn cell_centres_return_stored_values() {
        let f = ramp_field();
        for r in 0..3 {
            for c in 0..4 {
                let (x, y) = f.cell_center(r, c);
                assert_eq!(f.sample_floor(x, y), f.floor_at(r, c));
            }
        }
    }

    #[test]
    fn two_cell_midpoint_interpolates() {
        let f = LayeredHeightField::new(1, 2, 1.0, [0.0, 0.0], vec![0.0, 1.0]).unwrap();
        assert_eq!(f.sample_floor(0.5, 0.0), 0.5);
    }

    #[test]
    fn out_of_bounds_clamps_to_edge() {
        let f = ramp_field();
        assert_eq!(f.sample_floor(-10.0, -10.0), f.floor_at(0, 0));
        assert_eq!(f.sample_floor(50.0, 50.0), f.floor_at(2, 3));
        let (x, _) = f.cell_center(0, 2);
        assert_eq!(f.sample_floor(x, -50.0), f.floor_at(0, 2));
    }

    #[test]
    fn ceiling_lookup_is_nearest_cell() {
        let nan = f64::NAN;
        let f = LayeredHeightField::with_ceiling(
            1,
            3,
            0.1,
            [0.0, 0.0],
            vec![0.0; 3],
            Some(vec![0.31, nan, 0.31]),
        )
        .unwrap();
        assert_eq!(f.sample_ceiling(0.02, 0.01), Some(0.31));
        assert_eq!(f.sample_ceiling(0.1, 0.0), None);
        assert_eq!(f.sample_ceiling(0.19, 0.0), Some(0.31));
        let plain = LayeredHeightField::flat(2, 2, 0.1, [0.0, 0.0], 0.0).unwrap();
        assert_eq!(plain.sample_ceiling(0.05, 0.05), None);
    }

    #[test]
    fn rejects_invalid_fields() {
        assert!(LayeredHeightField::flat(0, 3, 0.1, [0.0, 0.0], 0.0).is_err());
        assert!(LayeredHeightField::flat(3, 3, 0.0, [0.0, 0.0], 0.0).is_err());
        assert!(LayeredHeightField::new(1, 2, 0.1, [0.0, 0.0], vec![0.0, f64::INFINITY]).is_err());
        let below = LayeredHeightField::with_ceiling(1, 1, 0.1, [0.0, 0.0], vec![0.5], Some(vec![0.4]));
        assert!(below.is_err());
        let equal = LayeredHeightField::with_ceiling(1, 1, 0.1, [0.0, 0.0], vec![0.5], Some(vec![0.5]));
        assert!(equal.is_err());
    }

    #[test]
    fn patch_dimensions_follow_spec() {
        let s = PatchSpec::new(0.6, 0.8, 0.3, 0.05).unwrap();
        assert_eq!((s.rows(), s.cols()), (16, 12));
        let s = PatchSpec::new(0.6, 1.0, 0.6, 0.05).unwrap();
        assert_eq!((s.rows(), s.cols()), (20, 12));
        assert!(PatchSpec::new(0.6, 0.8, -0.1, 0.05).is_err());
        assert!(PatchSpec::new(0.0, 0.8, 0.0, 0.05).is_err());
    }

    #[test]
    fn composite_patch_reads_ceiling_where_present() {
        let n = 40 * 40;
        let f = LayeredHeightField::with_ceiling(
            40,
            40,
            0.05,
            [-1.0, -1.0],
            vec![0.0; n],
            Some(vec![0.31; n]),
        )
        .unwrap();
        let spec = PatchSpec::new(0.6, 0.8, 0.0, 0.05).unwrap();
        let front = PlanarPose { x: -0.4, y: 0.0, yaw: 0.0 };
        let comp = extract_patch(&f, front, &spec, PatchLayer::SqueezeComposite);
        assert!(comp.values().iter().all(|&v| v == 0.31));
        let floor = extract_patch(&f, front, &spec, PatchLayer::FloorOnly);
        assert!(floor.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn patch_rows_run_far_to_near() {
        // floor rises with x: the far row (row 0) must be the highest
        let floor = (0..20).flat_map(|_| (0..60).map(|c| c as f64 * 0.01)).collect();
        let f = LayeredHeightField::new(20, 60, 0.05, [0.0, -0.5], floor).unwrap();
        let spec = PatchSpec::new(0.3, 0.8, 0.2, 0.05).unwrap();
        let p = extract_patch(&f, PlanarPose { x: 0.5, y: 0.0, yaw: 0.0 }, &spec, PatchLayer::FloorOnly);
        assert!(p.get(0, 0) > p.get(p.rows() - 1, 0));
        // far row centre sits at standoff + length - cell/2 = 0.975 m ahead
        let expected = f.sample_floor(0.5 + 0.975, 0.0);
        assert!((p.get(0, 3) - expected).abs() < 1e-12);
    }

    #[test]
    fn mirrored_patch_reverses_columns() {
        let p = HeightPatch::from_values(1, 3, vec![1.0, 2.0, 3.0], PatchLayer::FloorOnly).unwrap();
        assert_eq!(p.mirrored().values(), &[3.0, 2.0, 1.0]);
    }
}
