//! Quasi-static contact backend.
//!
//! Each step the body is laid onto its support: the six feet and the four
//! bottom corners of the collision box are candidate support points, and the
//! body settles at the lowest pose in which none of them is below the floor.
//! In the small-angle approximation a support point at body-frame `(px, py, pz)`
//! sits at world height `z + roll * py - pitch * px + pz`, so the resting
//! `(z, roll, pitch)` is the upper convex hull of the points
//! `(px, py, floor - pz)` evaluated under the body origin. The three points of
//! that facet are then solved exactly with a few Newton iterations.
//!
//! Planar motion comes from the stance feet: the body moves so that feet on
//! the ground stay where they are, in the least-squares sense.

use nalgebra::{Matrix3, UnitQuaternion, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::heightmap::LayeredHeightField;
use crate::robot::{
    feet_body, leg_points, BaseState, JointState, LegPoints, RobotGeometry, Tip, GRAVITY, NUM_JOINTS, NUM_LEGS,
};

const NUM_SUPPORT: usize = NUM_LEGS + 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContactParams {
    /// Feet within this distance of the floor are in contact (m).
    pub contact_tolerance: f64,
    /// Non-foot volumes deeper than this into terrain are illegal contacts (m).
    pub penetration_threshold: f64,
    /// A drop of the resting height larger than this is a free fall (m).
    pub fall_threshold: f64,
}

impl Default for ContactParams {
    fn default() -> Self {
        Self { contact_tolerance: 0.005, penetration_threshold: 0.002, fall_threshold: 0.03 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    /// Resting on feet only.
    Feet,
    /// At least one belly corner carries load.
    Belly,
    /// Above the resting height; falling.
    Airborne,
    /// Centre of mass outside the support polygon; falling over.
    Tipping,
}

/// Illegal contact per link class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LinkContacts {
    pub coxa: bool,
    pub femur: bool,
    pub base: bool,
}

impl LinkContacts {
    pub fn any(&self) -> bool {
        self.coxa || self.femur || self.base
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactReport {
    pub foot_contact: [bool; NUM_LEGS],
    /// Normal force proxies (N).
    pub foot_force: [f64; NUM_LEGS],
    /// World foot positions, contacting feet clamped onto the floor.
    pub feet: [Vector3<f64>; NUM_LEGS],
    /// Foot height above the floor directly beneath it (m).
    pub foot_clearance: [f64; NUM_LEGS],
    pub floor: LinkContacts,
    pub ceiling: LinkContacts,
    /// Deepest non-foot penetration into the floor (m, 0 if none).
    pub floor_penetration: f64,
    /// Deepest penetration of the collision box into a ceiling (m, 0 if none).
    pub ceiling_penetration: f64,
    pub support: Support,
    /// Resting base height for the current joint angles.
    pub rest_z: f64,
}

impl ContactReport {
    pub fn contact_count(&self) -> usize {
        self.foot_contact.iter().filter(|&&c| c).count()
    }

    /// Fewer than three feet on the ground.
    pub fn unsupported(&self) -> bool {
        self.contact_count() < 3
    }

    pub fn illegal(&self) -> bool {
        self.floor.any() || self.ceiling.any()
    }
}

struct SupportPoint {
    body: Vector3<f64>,
    floor: f64,
}

fn support_points(geom: &RobotGeometry, angles: &[f64; NUM_JOINTS], base: &BaseState, field: &LayeredHeightField) -> [SupportPoint; NUM_SUPPORT] {
    let feet = feet_body(geom, angles);
    let belly = geom.belly_corners();
    let (s, c) = base.heading.sin_cos();
    std::array::from_fn(|k| {
        let body = if k < NUM_LEGS { feet[k] } else { belly[k - NUM_LEGS] };
        let x = base.position.x + c * body.x - s * body.y;
        let y = base.position.y + s * body.x + c * body.y;
        SupportPoint { body, floor: field.sample_floor(x, y) }
    })
}

/// Facet of the upper hull above the body-frame point `q`:
/// `(triple, z, roll, pitch)` with `z` the facet plane's height at the origin.
///
/// The hull height at `q` is the largest interpolated height over all
/// triangles that contain `q`. When `q` sits on a hull edge several
/// triangles reach that height; the one whose plane leaves every other point
/// below it is the facet.
fn rest_facet(points: &[SupportPoint; NUM_SUPPORT], q: Vector2<f64>) -> Option<([usize; 3], f64, f64, f64)> {
    const TIE: f64 = 1e-9;
    let c: [f64; NUM_SUPPORT] = std::array::from_fn(|k| points[k].floor - points[k].body.z);
    let mut candidates: Vec<([usize; 3], f64, f64, f64)> = Vec::new();
    let mut top = f64::NEG_INFINITY;
    for i in 0..NUM_SUPPORT {
        for j in i + 1..NUM_SUPPORT {
            for k in j + 1..NUM_SUPPORT {
                let (a, b, cc) = (&points[i].body, &points[j].body, &points[k].body);
                let det = (b.x - a.x) * (cc.y - a.y) - (cc.x - a.x) * (b.y - a.y);
                if det.abs() < 1e-9 {
                    continue;
                }
                // barycentric coordinates of q
                let l1 = ((b.x - q.x) * (cc.y - q.y) - (cc.x - q.x) * (b.y - q.y)) / det;
                let l2 = ((cc.x - q.x) * (a.y - q.y) - (a.x - q.x) * (cc.y - q.y)) / det;
                let l3 = 1.0 - l1 - l2;
                if l1 < -1e-12 || l2 < -1e-12 || l3 < -1e-12 {
                    continue;
                }
                let z = l1 * c[i] + l2 * c[j] + l3 * c[k];
                if z < top - TIE {
                    continue;
                }
                top = top.max(z);
                // plane h = z + gx * x + gy * y through the three points
                let (ha, hb, hc) = (c[i], c[j], c[k]);
                let gx = ((hb - ha) * (cc.y - a.y) - (hc - ha) * (b.y - a.y)) / det;
                let gy = ((hc - ha) * (b.x - a.x) - (hb - ha) * (cc.x - a.x)) / det;
                candidates.push(([i, j, k], ha - gx * a.x - gy * a.y, gx, gy));
            }
        }
    }
    candidates.retain(|cand| cand.1 + cand.2 * q.x + cand.3 * q.y >= top - TIE);
    let violation = |&(_, z, gx, gy): &([usize; 3], f64, f64, f64)| {
        (0..NUM_SUPPORT)
            .map(|m| c[m] - (z + gx * points[m].body.x + gy * points[m].body.y))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut best: Option<(([usize; 3], f64, f64, f64), f64)> = None;
    for cand in candidates {
        let v = violation(&cand);
        if best.as_ref().is_none_or(|(_, bv)| v < *bv - 1e-15) {
            best = Some((cand, v));
        }
    }
    best.map(|((t, z, gx, gy), _)| (t, z, gy, -gx))
}

/// Body-frame `xy` where the world vertical through `com` meets the plane
/// of the facet `triple`.
fn plumb_point(points: &[SupportPoint; NUM_SUPPORT], triple: [usize; 3], com: &Vector3<f64>, roll: f64, pitch: f64) -> Option<Vector2<f64>> {
    let [a, b, c] = triple.map(|k| points[k].body);
    let n = (b - a).cross(&(c - a));
    let down = UnitQuaternion::from_euler_angles(roll, pitch, 0.0).inverse() * Vector3::z();
    let denom = n.dot(&down);
    if denom.abs() < 1e-12 {
        return None;
    }
    let t = n.dot(&(a - com)) / denom;
    Some((com + down * t).xy())
}

/// Height of body point `p` above the base for a roll/pitch pair.
fn tilted_z(p: &Vector3<f64>, roll: f64, pitch: f64) -> f64 {
    let (sr, cr) = roll.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    -sp * p.x + cp * (sr * p.y + cr * p.z)
}

/// Exact `(z, roll, pitch)` putting the three support points on their floors.
fn refine(points: [&SupportPoint; 3], mut x: Vector3<f64>) -> Vector3<f64> {
    for _ in 0..4 {
        let (z, roll, pitch) = (x[0], x[1], x[2]);
        let (sr, cr) = roll.sin_cos();
        let (sp, cp) = pitch.sin_cos();
        let mut jac = Matrix3::zeros();
        let mut res = Vector3::zeros();
        for (r, pt) in points.iter().enumerate() {
            let p = &pt.body;
            res[r] = z + tilted_z(p, roll, pitch) - pt.floor;
            jac[(r, 0)] = 1.0;
            jac[(r, 1)] = cp * (cr * p.y - sr * p.z);
            jac[(r, 2)] = -cp * p.x - sp * (sr * p.y + cr * p.z);
        }
        let Some(inv) = jac.try_inverse() else { break };
        let step = inv * res;
        x -= step;
        if step.amax() < 1e-12 {
            break;
        }
    }
    x
}

fn inside_triangle(p: Vector2<f64>, a: Vector2<f64>, b: Vector2<f64>, c: Vector2<f64>) -> bool {
    let cross = |o: Vector2<f64>, u: Vector2<f64>, v: Vector2<f64>| (u.x - o.x) * (v.y - o.y) - (u.y - o.y) * (v.x - o.x);
    let d1 = cross(a, b, p);
    let d2 = cross(b, c, p);
    let d3 = cross(c, a, p);
    let neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
    let pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
    !(neg && pos)
}

/// Closest point to `p` on segment `ab`.
fn closest_on_segment(p: Vector2<f64>, a: Vector2<f64>, b: Vector2<f64>) -> Vector2<f64> {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared().max(1e-18)).clamp(0.0, 1.0);
    a + ab * t
}

/// Starts a fall if the centre of mass is outside the support polygon.
fn detect_tip(com: &Vector3<f64>, support: &[Vector3<f64>]) -> Option<Tip> {
    let p = com.xy();
    let n = support.len();
    if n >= 3 {
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    if inside_triangle(p, support[i].xy(), support[j].xy(), support[k].xy()) {
                        return None;
                    }
                }
            }
        }
    }
    // pivot: nearest point of the support set's boundary
    let mut pivot = support.first().map_or(p, |s| s.xy());
    let mut pivot_z = support.first().map_or(com.z, |s| s.z);
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in i..n {
            let q = if i == j { support[i].xy() } else { closest_on_segment(p, support[i].xy(), support[j].xy()) };
            let d = (p - q).norm();
            if d < best {
                best = d;
                pivot = q;
                pivot_z = 0.5 * (support[i].z + support[j].z);
            }
        }
    }
    let offset = p - pivot;
    let d = offset.norm();
    let direction = if d > 1e-12 { offset / d } else { Vector2::new(1.0, 0.0) };
    let lever = (com.z - pivot_z).max(1e-3);
    Some(Tip { direction: [direction.x, direction.y], angle: 0.0, rate: 0.0, lever, onset: d.atan2(lever) })
}

fn orientation(roll: f64, pitch: f64, heading: f64, tip: Option<&Tip>) -> UnitQuaternion<f64> {
    let rest = UnitQuaternion::from_euler_angles(roll, pitch, heading);
    match tip {
        Some(t) => {
            // rotate +z toward the fall direction
            let axis = Vector3::new(-t.direction[1], t.direction[0], 0.0);
            let extra = UnitQuaternion::from_scaled_axis(axis * t.angle);
            extra * rest
        }
        None => rest,
    }
}

fn penetration(field: &LayeredHeightField, p: &Vector3<f64>) -> f64 {
    field.sample_floor(p.x, p.y) - p.z
}

fn ceiling_penetration(field: &LayeredHeightField, p: &Vector3<f64>) -> f64 {
    field.sample_ceiling(p.x, p.y).map_or(f64::NEG_INFINITY, |c| p.z - c)
}

/// Lays the body onto its support and reports every contact.
pub fn resolve_contacts(
    geom: &RobotGeometry,
    joints: &JointState,
    base: &BaseState,
    field: &LayeredHeightField,
    params: &ContactParams,
) -> (BaseState, ContactReport) {
    let points = support_points(geom, &joints.angles, base, field);
    // The body settles on the facet under its centre of mass: where the
    // vertical through the CoM meets the facet plane, which moves with the
    // tilt that facet produces.
    let com_body = Vector3::from(geom.com);
    let mut q = com_body.xy();
    let mut rest: Option<([usize; 3], (f64, f64, f64))> = None;
    let mut outside_hull = false;
    for _ in 0..4 {
        let Some((triple, z_lin, roll_lin, pitch_lin)) = rest_facet(&points, q) else {
            outside_hull = true;
            break;
        };
        let exact = refine(
            [&points[triple[0]], &points[triple[1]], &points[triple[2]]],
            Vector3::new(z_lin, roll_lin, pitch_lin),
        );
        let pose = if exact.iter().all(|v| v.is_finite()) && exact[1].abs() < 1.5 && exact[2].abs() < 1.5 {
            (exact[0], exact[1], exact[2])
        } else {
            (z_lin, roll_lin, pitch_lin)
        };
        let settled = rest.is_some_and(|(t, _)| t == triple);
        rest = Some((triple, pose));
        let next = plumb_point(&points, triple, &com_body, pose.1, pose.2).unwrap_or(q);
        if settled || (next - q).norm() < 1e-9 {
            break;
        }
        q = next;
    }
    let (triple, (rest_z, roll, pitch)) =
        rest.expect("belly corners always enclose the centre of mass of an upright body");
    let mut out = *base;
    let belly_loaded = triple.iter().any(|&k| k >= NUM_LEGS);
    let mut support = if belly_loaded { Support::Belly } else { Support::Feet };
    if base.tip.is_none() && base.position.z - rest_z > params.fall_threshold {
        support = Support::Airborne;
    } else {
        out.position.z = rest_z;
        if base.tip.is_none() {
            out.linear_velocity.z = 0.0;
        }
    }

    if outside_hull && out.tip.is_none() && support != Support::Airborne {
        let q = orientation(roll, pitch, base.heading, None);
        let com = out.position + q * Vector3::from(geom.com);
        let loaded: Vec<Vector3<f64>> = points
            .iter()
            .map(|sp| out.position + q * sp.body)
            .filter(|w| w.z - field.sample_floor(w.x, w.y) <= params.contact_tolerance)
            .collect();
        out.tip = detect_tip(&com, &loaded);
    }
    if out.tip.is_some() {
        support = Support::Tipping;
    }
    out.orientation = orientation(roll, pitch, base.heading, out.tip.as_ref());

    let report = contact_report(geom, joints, &out, field, params, support, rest_z, belly_loaded);
    (out, report)
}

#[allow(clippy::too_many_arguments)]
fn contact_report(
    geom: &RobotGeometry,
    joints: &JointState,
    base: &BaseState,
    field: &LayeredHeightField,
    params: &ContactParams,
    support: Support,
    rest_z: f64,
    belly_loaded: bool,
) -> ContactReport {
    let mut foot_contact = [false; NUM_LEGS];
    let mut feet = [Vector3::zeros(); NUM_LEGS];
    let mut foot_clearance = [0.0; NUM_LEGS];
    let mut floor = LinkContacts::default();
    let mut ceiling = LinkContacts::default();
    let mut floor_pen: f64 = 0.0;
    let mut ceil_pen: f64 = 0.0;
    let thr = params.penetration_threshold;

    for leg in 0..NUM_LEGS {
        let lp: LegPoints = leg_points(geom, &joints.angles, leg);
        let foot = base.to_world(&lp.foot);
        let h = field.sample_floor(foot.x, foot.y);
        foot_clearance[leg] = foot.z - h;
        foot_contact[leg] = foot.z - h <= params.contact_tolerance;
        feet[leg] = if foot_contact[leg] { Vector3::new(foot.x, foot.y, h) } else { foot };

        let fj = base.to_world(&lp.femur_joint);
        let coxa_mid = base.to_world(&(0.5 * (lp.mount + lp.femur_joint)));
        let knee = base.to_world(&lp.knee);
        let femur_mid = base.to_world(&(0.5 * (lp.femur_joint + lp.knee)));
        for (p, is_coxa) in [(fj, true), (coxa_mid, true), (knee, false), (femur_mid, false)] {
            let d = penetration(field, &p);
            let dc = ceiling_penetration(field, &p);
            if d > thr {
                floor_pen = floor_pen.max(d);
                if is_coxa { floor.coxa = true } else { floor.femur = true }
            }
            if dc > thr {
                ceil_pen = ceil_pen.max(dc);
                if is_coxa { ceiling.coxa = true } else { ceiling.femur = true }
            }
        }
    }

    for p in geom.top_points() {
        let mut bottom = p;
        bottom.z = -geom.flat_height;
        let top = base.to_world(&p);
        let bot = base.to_world(&bottom);
        let dc = ceiling_penetration(field, &top);
        if dc > thr {
            ceiling.base = true;
            ceil_pen = ceil_pen.max(dc);
        }
        let d = penetration(field, &bot);
        if d > thr {
            floor.base = true;
            floor_pen = floor_pen.max(d);
        }
    }
    if belly_loaded && support != Support::Airborne {
        floor.base = true;
    }

    let n = foot_contact.iter().filter(|&&c| c).count();
    let share = if n > 0 { geom.weight() / n as f64 } else { 0.0 };
    let foot_force = std::array::from_fn(|k| if foot_contact[k] { share } else { 0.0 });

    ContactReport {
        foot_contact,
        foot_force,
        feet,
        foot_clearance,
        floor,
        ceiling,
        floor_penetration: floor_pen,
        ceiling_penetration: ceil_pen,
        support,
        rest_z,
    }
}

/// Moves the base for one control period.
///
/// Stance feet are held fixed in the world: the body translation `v` and yaw
/// rate `w` minimise `sum |v + w x p_k + d_k|^2` over stance feet, where `d_k`
/// is the foot's velocity relative to the body caused by the joints.
pub fn advance(
    geom: &RobotGeometry,
    base: &BaseState,
    joints: &JointState,
    contacts: &ContactReport,
    dt: f64,
) -> BaseState {
    let mut out = *base;
    if let Some(mut tip) = base.tip {
        tip.rate += GRAVITY / tip.lever * (tip.onset + tip.angle).sin() * dt;
        tip.angle += tip.rate * dt;
        out.tip = Some(tip);
        let (roll, pitch, _) = rest_euler(base, &tip);
        out.orientation = orientation(roll, pitch, base.heading, Some(&tip));
        out.linear_velocity = Vector3::zeros();
        out.angular_velocity = Vector3::zeros();
        return out;
    }
    if contacts.support == Support::Airborne {
        out.linear_velocity = Vector3::new(0.0, 0.0, base.linear_velocity.z - GRAVITY * dt);
        out.position.z += out.linear_velocity.z * dt;
        if out.position.z <= contacts.rest_z {
            out.position.z = contacts.rest_z;
            out.linear_velocity.z = 0.0;
        }
        out.angular_velocity = Vector3::zeros();
        return out;
    }

    let mut prev = joints.angles;
    for j in 0..NUM_JOINTS {
        prev[j] -= joints.velocities[j] * dt;
    }
    let now = feet_body(geom, &joints.angles);
    let before = feet_body(geom, &prev);
    let stance: Vec<usize> = (0..NUM_LEGS).filter(|&k| contacts.foot_contact[k]).collect();
    let p: Vec<Vector2<f64>> = stance.iter().map(|&k| now[k].xy()).collect();
    let d: Vec<Vector2<f64>> = stance.iter().map(|&k| (now[k] - before[k]).xy() / dt).collect();
    let (v, w) = rigid_fit(&p, &d);

    let heading = base.heading + w * dt;
    let (s, c) = heading.sin_cos();
    let vw = Vector2::new(c * v.x - s * v.y, s * v.x + c * v.y);
    out.position.x += vw.x * dt;
    out.position.y += vw.y * dt;
    out.heading = heading;
    let (roll, pitch, _) = base.euler();
    out.orientation = UnitQuaternion::from_euler_angles(roll, pitch, heading);
    out.linear_velocity = Vector3::new(vw.x, vw.y, 0.0);
    out.angular_velocity = Vector3::new(0.0, 0.0, w);
    out
}

/// Least-squares planar body motion `(v, w)` that cancels the foot
/// velocities `d` at body positions `p`.
fn rigid_fit(p: &[Vector2<f64>], d: &[Vector2<f64>]) -> (Vector2<f64>, f64) {
    if p.is_empty() {
        return (Vector2::zeros(), 0.0);
    }
    let n = p.len() as f64;
    let pm = p.iter().sum::<Vector2<f64>>() / n;
    let dm = d.iter().sum::<Vector2<f64>>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (pk, dk) in p.iter().zip(d) {
        let (a, b) = (pk - pm, dk - dm);
        num += a.x * b.y - a.y * b.x;
        den += a.norm_squared();
    }
    let w = if p.len() >= 2 && den > 1e-12 { -num / den } else { 0.0 };
    // v = -dm - w z x pm
    (-dm - Vector2::new(-w * pm.y, w * pm.x), w)
}

/// Resting roll and pitch underneath the tip rotation stored in `base`.
fn rest_euler(base: &BaseState, tip: &Tip) -> (f64, f64, f64) {
    let axis = Vector3::new(-tip.direction[1], tip.direction[0], 0.0);
    let applied = UnitQuaternion::from_scaled_axis(axis * base.tip.map_or(0.0, |t| t.angle));
    (applied.inverse() * base.orientation).euler_angles()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot::reset_pose;

    fn flat() -> LayeredHeightField {
        LayeredHeightField::flat(101, 201, 0.02, [-2.0, -1.0], 0.0).unwrap()
    }

    #[test]
    fn reset_stance_is_symmetric() {
        let g = RobotGeometry::default();
        let (j, b) = reset_pose(&g, 0.0, 0.0, 0.0, 0.0);
        let (nb, rep) = resolve_contacts(&g, &j, &b, &flat(), &ContactParams::default());
        assert!((nb.position.z - 0.37).abs() < 1e-9);
        assert_eq!(rep.contact_count(), 6);
        for f in rep.foot_force {
            assert!((f - g.weight() / 6.0).abs() < 1e-12);
        }
        assert!(!rep.illegal());
        assert_eq!(rep.support, Support::Feet);
    }

    #[test]
    fn lifted_foot_shares_weight_among_five() {
        let g = RobotGeometry::default();
        let (mut j, b) = reset_pose(&g, 0.0, 0.0, 0.0, 0.0);
        j.angles[1 * 3 + 1] += 0.3;
        let (_, rep) = resolve_contacts(&g, &j, &b, &flat(), &ContactParams::default());
        assert_eq!(rep.contact_count(), 5);
        let total: f64 = rep.foot_force.iter().sum();
        assert!((total - g.weight()).abs() < 1e-9);
        assert!(rep.foot_force.iter().filter(|&&f| f > 0.0).all(|&f| (f - g.weight() / 5.0).abs() < 1e-12));
    }

    #[test]
    fn standing_under_low_ceiling_flags_collision() {
        let g = RobotGeometry::default();
        let n = 101 * 201;
        let field =
            LayeredHeightField::with_ceiling(101, 201, 0.02, [-2.0, -1.0], vec![0.0; n], Some(vec![0.31; n])).unwrap();
        let (j, b) = reset_pose(&g, 0.0, 0.0, 0.0, 0.0);
        let (_, rep) = resolve_contacts(&g, &j, &b, &field, &ContactParams::default());
        assert!(rep.ceiling.base);
        assert!((rep.ceiling_penetration - 0.06).abs() < 1e-9);
    }

    #[test]
    fn static_pose_is_a_fixed_point() {
        let g = RobotGeometry::default();
        let p = ContactParams::default();
        let (j, b) = reset_pose(&g, 0.3, -0.1, 0.4, 0.0);
        let (b1, r1) = resolve_contacts(&g, &j, &b, &flat(), &p);
        let a1 = advance(&g, &b1, &j, &r1, 0.05);
        let (b2, r2) = resolve_contacts(&g, &j, &a1, &flat(), &p);
        let a2 = advance(&g, &b2, &j, &r2, 0.05);
        assert_eq!(a1, a2);
    }

    #[test]
    fn stance_sweep_pushes_body_forward() {
        let g = RobotGeometry::default();
        let feet = feet_body(&g, &g.reset_angles);
        let p: Vec<Vector2<f64>> = feet.iter().map(|f| f.xy()).collect();
        let d = vec![Vector2::new(-0.1, 0.0); 6];
        let (v, w) = rigid_fit(&p, &d);
        assert!((v.x - 0.1).abs() < 1e-12 && v.y.abs() < 1e-12 && w.abs() < 1e-12);
    }

    #[test]
    fn pure_rotation_is_recovered() {
        let p = vec![Vector2::new(0.2, 0.1), Vector2::new(-0.1, 0.25), Vector2::new(0.0, -0.3)];
        // feet rotating at +0.5 rad/s about the origin relative to the body
        let d: Vec<_> = p.iter().map(|q| Vector2::new(-0.5 * q.y, 0.5 * q.x)).collect();
        let (v, w) = rigid_fit(&p, &d);
        assert!((w + 0.5).abs() < 1e-12 && v.norm() < 1e-12);
    }

    #[test]
    fn no_joint_motion_keeps_base_still() {
        let g = RobotGeometry::default();
        let (j, b) = reset_pose(&g, 0.0, 0.0, 0.0, 0.0);
        let (b1, rep) = resolve_contacts(&g, &j, &b, &flat(), &ContactParams::default());
        let a = advance(&g, &b1, &j, &rep, 0.05);
        assert_eq!(a.position, b1.position);
        assert_eq!(a.heading, b1.heading);
    }

    #[test]
    fn free_fall_integrates_gravity() {
        let g = RobotGeometry::default();
        let (j, mut b) = reset_pose(&g, 0.0, 0.0, 0.0, 0.0);
        b.position.z = 2.0;
        let (b1, rep) = resolve_contacts(&g, &j, &b, &flat(), &ContactParams::default());
        assert_eq!(rep.support, Support::Airborne);
        assert_eq!(rep.contact_count(), 0);
        let dt = 0.05;
        let mut cur = b1;
        for _ in 0..3 {
            cur = advance(&g, &cur, &j, &rep, dt);
        }
        // semi-implicit Euler: drop = g dt^2 (1 + 2 + 3)
        let expect = 2.0 - GRAVITY * dt * dt * 6.0;
        assert!((cur.position.z - expect).abs() < 1e-12);
    }
}
