//! Depth rendering of the layered height field.
//!
//! Cells are flat-topped columns, so a height change between neighbours is a
//! vertical wall and a ceiling cell is a slab that is solid from its
//! underside upward. Outside the grid each edge cell extends outward, the same
//! nearest-cell rule the field uses for lookups.
//!
//! The field is meshed once into axis-aligned quads (equal-height runs are
//! merged), and each frame rasterizes those quads into a depth buffer. Depth
//! at a pixel is computed from the quad's plane along that pixel's own ray, so
//! values are exact and only silhouette coverage depends on rasterization.

use std::io::Write;
use std::path::Path;

use nalgebra::{Matrix3, UnitQuaternion, Vector3};

use super::CameraModel;
use crate::heightmap::LayeredHeightField;
use crate::robot::BaseState;
use crate::Result;


#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    /// Row-major depths along the optical axis (m), top row first.
    pub data: Vec<f32>,
}

impl DepthImage {
    pub fn new(width: usize, height: usize, fill: f32) -> Self {
        Self { width, height, data: vec![fill; width * height] }
    }

    pub fn get(&self, u: usize, v: usize) -> f32 {
        self.data[v * self.width + u]
    }

    /// Binary PGM with 16-bit depths in millimetres.
    pub fn write_pgm(&self, mut out: impl Write) -> Result<()> {
        write!(out, "P5\n{} {}\n65535\n", self.width, self.height)?;
        let mut buf = Vec::with_capacity(self.data.len() * 2);
        for &d in &self.data {
            let mm = (d as f64 * 1000.0).round().clamp(0.0, 65535.0) as u16;
            buf.extend_from_slice(&mm.to_be_bytes());
        }
        out.write_all(&buf)?;
        Ok(())
    }

    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_pgm(std::io::BufWriter::new(file))
    }
}

/// Outward stretch of the grid edge cells (m).
const EDGE_EXTENT: f64 = 1000.0;
/// Polygons are clipped this far in front of the camera.
const NEAR_CLIP: f64 = 1e-4;

/// Quad mesh of a height field, built once per field.
#[derive(Debug, Clone)]
pub struct DepthAccel {
    quads: Vec<Quad>,
}

#[derive(Debug, Clone)]
struct Quad {
    corners: [Vector3<f64>; 4],
    /// Points out of the solid into free space.
    normal: Vector3<f64>,
}

impl DepthAccel {
    pub fn new(field: &LayeredHeightField) -> Self {
        Mesher::new(field).build()
    }

    /// Number of quads in the mesh.
    pub fn len(&self) -> usize {
        self.quads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quads.is_empty()
    }
}

struct Mesher<'a> {
    field: &'a LayeredHeightField,
    xb: Vec<f64>,
    yb: Vec<f64>,
    top: f64,
    quads: Vec<Quad>,
}

impl<'a> Mesher<'a> {
    fn new(field: &'a LayeredHeightField) -> Self {
        let (rows, cols, cell) = (field.rows(), field.cols(), field.cell_size());
        let [ox, oy] = field.origin();
        let bounds = |n: usize, start: f64| {
            let mut b: Vec<f64> = (0..=n).map(|i| start + i as f64 * cell).collect();
            b[0] -= EDGE_EXTENT;
            b[n] += EDGE_EXTENT;
            b
        };
        let mut top = field.floor_values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if let Some(c) = field.ceiling_values() {
            top = c.iter().copied().filter(|v| !v.is_nan()).fold(top, f64::max);
        }
        Self {
            field,
            xb: bounds(cols, ox - 0.5 * cell),
            yb: bounds(rows, oy - 0.5 * cell),
            top: top + 10.0,
            quads: Vec::new(),
        }
    }

    fn ceiling(&self, r: usize, c: usize) -> f64 {
        self.field.ceiling_at(r, c).unwrap_or(f64::INFINITY)
    }

    fn build(mut self) -> DepthAccel {
        let field = self.field;
        let floors: Vec<f64> = field.floor_values().to_vec();
        self.horizontal(&floors, Vector3::z());
        if let Some(c) = field.ceiling_values() {
            let ceilings = c.to_vec();
            self.horizontal(&ceilings, -Vector3::z());
        }
        self.walls();
        DepthAccel { quads: self.quads }
    }

    /// Greedy rectangles of bitwise-equal height; NaN cells are skipped.
    fn horizontal(&mut self, heights: &[f64], normal: Vector3<f64>) {
        let (rows, cols) = (self.field.rows(), self.field.cols());
        let mut done = vec![false; rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                let h = heights[r * cols + c];
                if done[r * cols + c] || h.is_nan() {
                    continue;
                }
                let same = |k: usize, done: &[bool]| !done[k] && heights[k].to_bits() == h.to_bits();
                let mut c1 = c + 1;
                while c1 < cols && same(r * cols + c1, &done) {
                    c1 += 1;
                }
                let mut r1 = r + 1;
                while r1 < rows && (c..c1).all(|cc| same(r1 * cols + cc, &done)) {
                    r1 += 1;
                }
                for rr in r..r1 {
                    done[rr * cols + c..rr * cols + c1].fill(true);
                }
                let (x0, x1, y0, y1) = (self.xb[c], self.xb[c1], self.yb[r], self.yb[r1]);
                self.quads.push(Quad {
                    corners: [
                        Vector3::new(x0, y0, h),
                        Vector3::new(x1, y0, h),
                        Vector3::new(x1, y1, h),
                        Vector3::new(x0, y1, h),
                    ],
                    normal,
                });
            }
        }
    }

    /// Vertical faces on every interior cell boundary, merged along the boundary.
    fn walls(&mut self) {
        let (rows, cols) = (self.field.rows(), self.field.cols());
        // boundaries between columns: faces normal to x, runs along rows
        for j in 1..cols {
            let segs: Vec<_> = (0..rows).map(|r| self.boundary_faces((r, j - 1), (r, j))).collect();
            let x = self.xb[j];
            let along = self.yb.clone();
            self.emit_runs(&segs, |lo, hi, a, b| {
                [Vector3::new(x, a, lo), Vector3::new(x, b, lo), Vector3::new(x, b, hi), Vector3::new(x, a, hi)]
            }, Vector3::x(), &along);
        }
        for i in 1..rows {
            let segs: Vec<_> = (0..cols).map(|c| self.boundary_faces((i - 1, c), (i, c))).collect();
            let y = self.yb[i];
            let along = self.xb.clone();
            self.emit_runs(&segs, |lo, hi, a, b| {
                [Vector3::new(a, y, lo), Vector3::new(b, y, lo), Vector3::new(b, y, hi), Vector3::new(a, y, hi)]
            }, Vector3::y(), &along);
        }
    }

    /// Faces between cell `a` (lower coordinate) and `b`, as
    /// `(lo, hi, faces toward b)` for the floor step and the ceiling step.
    fn boundary_faces(&self, a: (usize, usize), b: (usize, usize)) -> [Option<(f64, f64, bool)>; 2] {
        let (fa, fb) = (self.field.floor_at(a.0, a.1), self.field.floor_at(b.0, b.1));
        let floor = if fa < fb {
            Some((fa, fb, false))
        } else if fa > fb {
            Some((fb, fa, true))
        } else {
            None
        };
        let (ca, cb) = (self.ceiling(a.0, a.1), self.ceiling(b.0, b.1));
        let ceiling = if ca < cb {
            Some((ca, cb.min(self.top), true))
        } else if ca > cb {
            Some((cb, ca.min(self.top), false))
        } else {
            None
        };
        [floor, ceiling]
    }

    fn emit_runs(
        &mut self,
        segs: &[[Option<(f64, f64, bool)>; 2]],
        corners: impl Fn(f64, f64, f64, f64) -> [Vector3<f64>; 4],
        axis: Vector3<f64>,
        along: &[f64],
    ) {
        for layer in 0..2 {
            let key = |k: usize| segs[k][layer].map(|(lo, hi, pos)| (lo.to_bits(), hi.to_bits(), pos));
            let mut k = 0;
            while k < segs.len() {
                let Some((lo, hi, toward_b)) = segs[k][layer] else {
                    k += 1;
                    continue;
                };
                let start = k;
                while k < segs.len() && key(k) == key(start) {
                    k += 1;
                }
                let normal = if toward_b { axis } else { -axis };
                self.quads.push(Quad { corners: corners(lo, hi, along[start], along[k]), normal });
            }
        }
    }
}

/// World pose of the camera: position and rotation (columns = optical axis,
/// image-left, image-up).
pub fn camera_pose(camera: &CameraModel, base: &BaseState) -> (Vector3<f64>, Matrix3<f64>) {
    let pos = base.to_world(&Vector3::from(camera.mount));
    let tilt = UnitQuaternion::from_euler_angles(0.0, camera.tilt, 0.0);
    let rot = (base.orientation * tilt).to_rotation_matrix().into_inner();
    (pos, rot)
}

/// Renders into `out`, reusing its allocation.
pub fn render_depth_into(
    camera: &CameraModel,
    base: &BaseState,
    field: &LayeredHeightField,
    accel: &DepthAccel,
    out: &mut DepthImage,
) {
    let (w, h) = (camera.width, camera.height);
    if out.width != w || out.height != h || out.data.len() != w * h {
        *out = DepthImage::new(w, h, camera.far as f32);
    }
    let (near, far) = (camera.near, camera.far);
    let (o, rot) = camera_pose(camera, base);
    let (r, c) = field.nearest_cell(o.x, o.y);
    if o.z <= field.floor_at(r, c) || field.ceiling_at(r, c).is_some_and(|cz| o.z >= cz) {
        out.data.fill(near as f32);
        return;
    }
    out.data.fill(f32::INFINITY);
    let frame = Frame {
        o,
        fwd: rot.column(0).into_owned(),
        left: rot.column(1).into_owned(),
        up: rot.column(2).into_owned(),
        f: camera.focal_px(),
        w,
        h,
        far,
    };
    for quad in &accel.quads {
        frame.draw(quad, &mut out.data);
    }
    for d in &mut out.data {
        *d = (*d as f64).clamp(near, far) as f32;
    }
}

struct Frame {
    o: Vector3<f64>,
    fwd: Vector3<f64>,
    left: Vector3<f64>,
    up: Vector3<f64>,
    f: f64,
    w: usize,
    h: usize,
    far: f64,
}

impl Frame {
    /// Image-plane coordinates of pixel column `u` / row `v` (unit focal length).
    fn a(&self, u: usize) -> f64 {
        -((u as f64 + 0.5) - 0.5 * self.w as f64) / self.f
    }

    fn b(&self, v: usize) -> f64 {
        -((v as f64 + 0.5) - 0.5 * self.h as f64) / self.f
    }

    fn draw(&self, quad: &Quad, zbuf: &mut [f32]) {
        let n = quad.normal;
        // plane offset along the normal; negative when the camera sees the free side
        let k = n.dot(&(quad.corners[0] - self.o));
        if k >= 0.0 {
            return;
        }
        // camera coordinates (depth, left, up), clipped to the near plane
        let mut cam = [[0.0; 3]; 4];
        for (dst, p) in cam.iter_mut().zip(&quad.corners) {
            let q = p - self.o;
            *dst = [q.dot(&self.fwd), q.dot(&self.left), q.dot(&self.up)];
        }
        let mut poly = [[0.0; 3]; 8];
        let mut m = 0;
        for i in 0..4 {
            let (p, q) = (cam[i], cam[(i + 1) % 4]);
            if p[0] >= NEAR_CLIP {
                poly[m] = p;
                m += 1;
            }
            if (p[0] >= NEAR_CLIP) != (q[0] >= NEAR_CLIP) {
                let s = (NEAR_CLIP - p[0]) / (q[0] - p[0]);
                poly[m] = [NEAR_CLIP, p[1] + s * (q[1] - p[1]), p[2] + s * (q[2] - p[2])];
                m += 1;
            }
        }
        if m < 3 || poly[..m].iter().all(|p| p[0] > self.far) {
            return;
        }
        let (wf, hf) = (self.w as f64, self.h as f64);
        let mut scr = [[0.0; 2]; 8];
        for (s, p) in scr.iter_mut().zip(&poly[..m]) {
            *s = [0.5 * wf - self.f * p[1] / p[0], 0.5 * hf - self.f * p[2] / p[0]];
        }
        let scr = &scr[..m];
        let area: f64 = (0..m).map(|i| {
            let (p, q) = (scr[i], scr[(i + 1) % m]);
            p[0] * q[1] - q[0] * p[1]
        }).sum();
        if area.abs() < 1e-12 {
            return;
        }
        let sign = area.signum();
        // edge functions e(x, y) = ex * x + ey * y + e0 >= 0 inside
        let mut edges = [[0.0; 3]; 8];
        for i in 0..m {
            let (p, q) = (scr[i], scr[(i + 1) % m]);
            let ex = -sign * (q[1] - p[1]);
            let ey = sign * (q[0] - p[0]);
            edges[i] = [ex, ey, -ex * p[0] - ey * p[1]];
        }
        let (ymin, ymax) = scr.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[1]), hi.max(p[1])));
        let v0 = (ymin - 0.5).ceil().max(0.0);
        let v1 = (ymax - 0.5).floor().min(hf - 1.0);
        if v0 > v1 {
            return;
        }
        let (nf, nl, nu) = (n.dot(&self.fwd), n.dot(&self.left), n.dot(&self.up));
        for v in v0 as usize..=v1 as usize {
            let y = v as f64 + 0.5;
            let (mut xl, mut xr) = (f64::NEG_INFINITY, f64::INFINITY);
            for e in &edges[..m] {
                let r = e[1] * y + e[2];
                if e[0] > 0.0 {
                    xl = xl.max(-r / e[0]);
                } else if e[0] < 0.0 {
                    xr = xr.min(-r / e[0]);
                } else if r < 0.0 {
                    xr = f64::NEG_INFINITY;
                }
            }
            let u0 = (xl - 0.5).ceil().max(0.0);
            let u1 = (xr - 0.5).floor().min(wf - 1.0);
            if u0 > u1 {
                continue;
            }
            let row_den = nf + nu * self.b(v);
            let row = &mut zbuf[v * self.w..(v + 1) * self.w];
            for u in u0 as usize..=u1 as usize {
                let den = row_den + nl * self.a(u);
                if den < 0.0 {
                    let t = (k / den) as f32;
                    if t < row[u] {
                        row[u] = t;
                    }
                }
            }
        }
    }
}

/// Renders a depth image; meshes the field on the fly.
pub fn render_depth(camera: &CameraModel, base: &BaseState, field: &LayeredHeightField) -> DepthImage {
    let accel = DepthAccel::new(field);
    let mut img = DepthImage::new(camera.width, camera.height, camera.far as f32);
    render_depth_into(camera, base, field, &accel, &mut img);
    img
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot::BaseState;

    /// Single-ray reference: march in tiny steps and report the first point
    /// inside solid, refined by bisection.
    fn brute_force(field: &LayeredHeightField, o: Vector3<f64>, d: Vector3<f64>, far: f64) -> f64 {
        let solid = |t: f64| {
            let p = o + d * t;
            let (r, c) = field.nearest_cell(p.x, p.y);
            p.z <= field.floor_at(r, c) || field.ceiling_at(r, c).is_some_and(|cz| p.z >= cz)
        };
        let step = 1e-4;
        let mut t = 0.0;
        while t < far {
            if solid(t + step) {
                let (mut lo, mut hi) = (t, t + step);
                for _ in 0..40 {
                    let m = 0.5 * (lo + hi);
                    if solid(m) {
                        hi = m
                    } else {
                        lo = m
                    }
                }
                return hi;
            }
            t += step;
        }
        far
    }

    fn bumpy() -> LayeredHeightField {
        let (rows, cols) = (40, 60);
        let mut floor = vec![0.0; rows * cols];
        let mut ceil = vec![f64::NAN; rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                let k = r * cols + c;
                floor[k] = 0.05 * (((r * 7 + c * 13) % 5) as f64);
                if (30..40).contains(&c) && (10..30).contains(&r) {
                    ceil[k] = 0.45;
                }
            }
        }
        LayeredHeightField::with_ceiling(rows, cols, 0.05, [0.0, -1.0], floor, Some(ceil)).unwrap()
    }

    #[test]
    fn pixels_match_fine_marching() {
        let field = bumpy();
        let accel = DepthAccel::new(&field);
        let cam = CameraModel { width: 64, height: 48, ..CameraModel::default() };
        let mut s = 12345u64;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        let (mut checked, mut bad) = (0, 0);
        for _ in 0..6 {
            let pos = Vector3::new(0.2 + next() * 1.5, -0.5 + next(), 0.45 + next() * 0.1);
            let mut base = BaseState::at(pos, (next() - 0.5) * 2.0);
            base.orientation = base.orientation * UnitQuaternion::from_euler_angles(0.2 * (next() - 0.5), 0.3 * next(), 0.0);
            let cam = CameraModel { tilt: 0.5 * next(), ..cam.clone() };
            let mut img = DepthImage::new(1, 1, 0.0);
            render_depth_into(&cam, &base, &field, &accel, &mut img);
            let (o, rot) = camera_pose(&cam, &base);
            let f = cam.focal_px();
            for _ in 0..60 {
                let (u, v) = ((next() * 64.0) as usize, (next() * 48.0) as usize);
                let a = -((u as f64 + 0.5) - 32.0) / f;
                let b = -((v as f64 + 0.5) - 24.0) / f;
                let d = rot.column(0) + rot.column(1) * a + rot.column(2) * b;
                let want = brute_force(&field, o, d, cam.far).clamp(cam.near, cam.far);
                checked += 1;
                if (img.get(u, v) as f64 - want).abs() > 1e-3 {
                    bad += 1;
                }
            }
        }
        // the reference march can step over a ray grazing a cell corner
        assert!(bad * 100 <= checked, "{bad} of {checked} pixels differ");
    }

    #[test]
    fn flat_floor_pixel_depths_grow_toward_horizon() {
        let field = LayeredHeightField::flat(100, 400, 0.02, [0.0, -1.0], 0.0).unwrap();
        let cam = CameraModel { tilt: 30f64.to_radians(), ..CameraModel::default() };
        let base = BaseState::at(Vector3::new(0.5, 0.0, 0.37), 0.0);
        let img = render_depth(&cam, &base, &field);
        let col = cam.width / 2;
        for v in 1..cam.height {
            assert!(img.get(col, v) <= img.get(col, v - 1));
        }
        assert!(img.get(col, cam.height - 1) < 1.0);
    }

    #[test]
    fn flat_field_meshes_to_one_quad() {
        let field = LayeredHeightField::flat(50, 80, 0.02, [0.0, 0.0], 0.1).unwrap();
        assert_eq!(DepthAccel::new(&field).len(), 1);
    }

    #[test]
    fn camera_below_floor_sees_near() {
        let field = LayeredHeightField::flat(50, 80, 0.02, [0.0, -0.5], 1.0).unwrap();
        let cam = CameraModel::default();
        let img = render_depth(&cam, &BaseState::at(Vector3::new(0.5, 0.0, 0.3), 0.0), &field);
        assert!(img.data.iter().all(|&d| d == cam.near as f32));
    }

    #[test]
    fn pgm_header_and_size() {
        let img = DepthImage::new(3, 2, 1.234);
        let mut buf = Vec::new();
        img.write_pgm(&mut buf).unwrap();
        let header = b"P5\n3 2\n65535\n";
        assert_eq!(&buf[..header.len()], header);
        assert_eq!(buf.len(), header.len() + 12);
        assert_eq!(u16::from_be_bytes([buf[header.len()], buf[header.len() + 1]]), 1234);
    }
}
