//! Planar and spatial primitives: poses, signed angles, convex hulls and
//! minimum-area bounding rectangles. Lengths are millimetres, angles radians.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{Rotation3, Unit, Vector2, Vector3};

use crate::error::{Error, Result};

pub type Point2 = nalgebra::Point2<f64>;
pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;

/// Wraps an angle into (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Angle from `reference` to `target`, as atan2(cross, dot) in (−π, π].
pub fn signed_angle(reference: Vec2, target: Vec2) -> Result<f64> {
    if reference.norm_squared() == 0.0 || target.norm_squared() == 0.0 {
        return Err(Error::DegenerateInput("zero vector"));
    }
    let cross = reference.perp(&target);
    let dot = reference.dot(&target);
    let a = cross.atan2(dot);
    Ok(if a == -PI { PI } else { a })
}

/// Counter-clockwise quarter turn.
pub fn rot90(v: Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}

pub fn heading(yaw: f64) -> Vec2 {
    Vec2::new(yaw.cos(), yaw.sin())
}

/// Rigid pose. Orientation is R = Rz(yaw)·Ry(pitch)·Rx(roll).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl Pose {
    pub fn new(position: Vec3, roll: f64, pitch: f64, yaw: f64) -> Self {
        Self {
            position,
            roll: wrap_angle(roll),
            pitch: wrap_angle(pitch),
            yaw: wrap_angle(yaw),
        }
    }

    pub fn planar(x: f64, y: f64, yaw: f64) -> Self {
        Self::new(Vec3::new(x, y, 0.0), 0.0, 0.0, yaw)
    }

    pub fn from_rotation(position: Vec3, rotation: &Rotation3<f64>) -> Self {
        let (roll, pitch, yaw) = rotation.euler_angles();
        Self::new(position, roll, pitch, yaw)
    }

    pub fn rotation(&self) -> Rotation3<f64> {
        Rotation3::from_euler_angles(self.roll, self.pitch, self.yaw)
    }

    pub fn x_axis(&self) -> Vec3 {
        self.rotation() * Vec3::x()
    }

    pub fn y_axis(&self) -> Vec3 {
        self.rotation() * Vec3::y()
    }

    pub fn z_axis(&self) -> Vec3 {
        self.rotation() * Vec3::z()
    }

    pub fn xy(&self) -> Point2 {
        Point2::new(self.position.x, self.position.y)
    }
}

/// Rotation by `angle` about a horizontal axis perpendicular to `travel`,
/// oriented so positive angles tip things toward `travel`.
pub fn tip_rotation(travel: Vec2, angle: f64) -> Rotation3<f64> {
    let axis = Vec3::z().cross(&Vec3::new(travel.x, travel.y, 0.0));
    Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub vertices: Vec<Point2>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::DegenerateInput("polygon needs at least 3 vertices"));
        }
        Ok(Self { vertices })
    }

    /// Signed area, positive for counter-clockwise order.
    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                a.x * b.y - b.x * a.y
            })
            .sum::<f64>()
            / 2.0
    }

    /// Inside-or-on test for a counter-clockwise convex polygon.
    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let e = b - a;
            e.perp(&(p - a)) / e.norm() >= -tol
        })
    }
}

fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a - o).perp(&(b - o))
}

/// Convex hull by monotone chain. Output is strictly convex and
/// counter-clockwise, starting at the lowest-x (then lowest-y) point.
pub fn convex_hull(points: &[Point2]) -> Result<Polygon> {
    if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(Error::DegenerateInput("non-finite point"));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return Err(Error::DegenerateInput("fewer than 3 distinct points"));
    }
    let mut hull: Vec<Point2> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    if hull.len() < 3 {
        return Err(Error::DegenerateInput("collinear points"));
    }
    Ok(Polygon { vertices: hull })
}

/// Oriented rectangle. `angle` is the direction of the first extent axis,
/// normalised to [0, π/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedRect {
    pub center: Point2,
    pub half_extents: Vec2,
    pub angle: f64,
}

impl OrientedRect {
    pub fn area(&self) -> f64 {
        4.0 * self.half_extents.x * self.half_extents.y
    }

    /// Corners in counter-clockwise order.
    pub fn corners(&self) -> [Point2; 4] {
        let u = heading(self.angle) * self.half_extents.x;
        let v = rot90(heading(self.angle)) * self.half_extents.y;
        let c = self.center;
        [c - u - v, c + u - v, c + u + v, c - u + v]
    }
}

/// Minimum-area enclosing rectangle of a convex polygon (rotating calipers:
/// one side is flush with a hull edge).
pub fn min_area_rect(poly: &Polygon) -> Result<OrientedRect> {
    if poly.area().abs() <= 1e-12 {
        return Err(Error::DegenerateInput("zero-area polygon"));
    }
    let vs = &poly.vertices;
    let n = vs.len();
    let mut best: Option<(f64, OrientedRect)> = None;
    for i in 0..n {
        let e = vs[(i + 1) % n] - vs[i];
        if e.norm_squared() == 0.0 {
            continue;
        }
        let u = e.normalize();
        let v = rot90(u);
        let (mut umin, mut umax, mut vmin, mut vmax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in vs {
            let a = p.coords.dot(&u);
            let b = p.coords.dot(&v);
            umin = umin.min(a);
            umax = umax.max(a);
            vmin = vmin.min(b);
            vmax = vmax.max(b);
        }
        let area = (umax - umin) * (vmax - vmin);
        if best.as_ref().is_none_or(|(a, _)| area < *a) {
            let center = u * (umin + umax) / 2.0 + v * (vmin + vmax) / 2.0;
            let rect = OrientedRect {
                center: Point2::from(center),
                half_extents: Vec2::new((umax - umin) / 2.0, (vmax - vmin) / 2.0),
                angle: u.y.atan2(u.x),
            };
            best = Some((area, rect));
        }
    }
    let (_, rect) = best.ok_or(Error::DegenerateInput("no usable edge"))?;
    Ok(normalize_rect(rect))
}

fn normalize_rect(mut r: OrientedRect) -> OrientedRect {
    let k = (r.angle / FRAC_PI_2).floor();
    let mut a = r.angle - k * FRAC_PI_2;
    let mut quarter = k as i64;
    if a >= FRAC_PI_2 - 1e-15 {
        a = 0.0;
        quarter += 1;
    }
    if quarter.rem_euclid(2) == 1 {
        r.half_extents = Vec2::new(r.half_extents.y, r.half_extents.x);
    }
    r.angle = a.max(0.0);
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    /// O(n³) oracle: an ordered pair (a, b) is a hull edge when every other
    /// point lies strictly left of a→b or on the closed segment.
    fn brute_hull_edges(pts: &[Point2]) -> Vec<(Point2, Point2)> {
        let mut edges = Vec::new();
        for &a in pts {
            for &b in pts {
                if a == b {
                    continue;
                }
                let ok = pts.iter().all(|&c| {
                    let cr = cross(a, b, c);
                    if cr > 1e-12 {
                        return true;
                    }
                    if cr < -1e-12 {
                        return false;
                    }
                    let t = (c - a).dot(&(b - a)) / (b - a).norm_squared();
                    (-1e-12..=1.0 + 1e-12).contains(&t)
                });
                if ok {
                    edges.push((a, b));
                }
            }
        }
        edges
    }

    #[test]
    fn square_with_interior_point() {
        let h = convex_hull(&[p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.), p(0.5, 0.5)]).unwrap();
        assert_eq!(h.vertices, vec![p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)]);
    }

    #[test]
    fn triangle_is_its_own_hull() {
        let h = convex_hull(&[p(0., 0.), p(2., 0.), p(1., 1.)]).unwrap();
        assert_eq!(h.vertices.len(), 3);
        assert!(h.area() > 0.0);
    }

    #[test]
    fn degenerate_hulls() {
        assert!(convex_hull(&[p(0., 0.), p(1., 1.), p(2., 2.), p(3., 3.)]).is_err());
        assert!(convex_hull(&[p(0., 0.), p(0., 0.), p(1., 1.)]).is_err());
        assert!(convex_hull(&[]).is_err());
    }

    fn brute_hull_vertices(pts: &[Point2]) -> Vec<Point2> {
        let edges = brute_hull_edges(pts);
        let mut out = Vec::new();
        for &(x, a) in &edges {
            for &(a2, y) in &edges {
                if a2 == a && cross(x, a, y) > 1e-12 && !out.contains(&a) {
                    out.push(a);
                }
            }
        }
        out
    }

    #[test]
    fn hull_of_sampled_rotated_rectangle_matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        // 3-4-5 rotation on a grid of multiples of 5 keeps every coordinate exact
        let (c, s) = (0.8, 0.6);
        let (a, b) = (30i32, 22i32);
        let mut pts = Vec::new();
        for i in 0..1000 {
            let (x, y) = if i % 4 == 0 {
                let t = rng.random_range(-a..=a);
                let u = rng.random_range(-b..=b);
                match (i / 4) % 4 {
                    0 => (t, -b),
                    1 => (a, u),
                    2 => (t, b),
                    _ => (-a, u),
                }
            } else {
                (rng.random_range(-a..=a), rng.random_range(-b..=b))
            };
            let (x, y) = (5.0 * x as f64, 5.0 * y as f64);
            pts.push(p(c * x - s * y, s * x + c * y));
        }
        let hull = convex_hull(&pts).unwrap();
        let mut oracle = brute_hull_vertices(&pts);
        let mut got = hull.vertices.clone();
        let key = |q: &Point2, r: &Point2| q.x.total_cmp(&r.x).then(q.y.total_cmp(&r.y));
        oracle.sort_by(key);
        got.sort_by(key);
        assert_eq!(got, oracle);
        let (ha, hb) = (5.0 * a as f64, 5.0 * b as f64);
        for v in &hull.vertices {
            let local = (c * v.x + s * v.y, -s * v.x + c * v.y);
            let on_x = close(local.0.abs(), ha, 1e-9) && local.1.abs() <= hb + 1e-9;
            let on_y = close(local.1.abs(), hb, 1e-9) && local.0.abs() <= ha + 1e-9;
            assert!(on_x || on_y);
        }
    }

    #[test]
    fn min_rect_unit_square() {
        let h = convex_hull(&[p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)]).unwrap();
        let r = min_area_rect(&h).unwrap();
        assert!(close(r.center.x, 0.5, 1e-12) && close(r.center.y, 0.5, 1e-12));
        assert!(close(r.half_extents.x, 0.5, 1e-12) && close(r.half_extents.y, 0.5, 1e-12));
        assert!(close(r.angle, 0.0, 1e-12));
    }

    #[test]
    fn min_rect_rotated_square() {
        let t = 30f64.to_radians();
        let pts: Vec<Point2> = [(0., 0.), (1., 0.), (1., 1.), (0., 1.)]
            .iter()
            .map(|&(x, y)| p(t.cos() * x - t.sin() * y, t.sin() * x + t.cos() * y))
            .collect();
        let r = min_area_rect(&convex_hull(&pts).unwrap()).unwrap();
        assert!(close(r.half_extents.x, 0.5, 1e-12) && close(r.half_extents.y, 0.5, 1e-12));
        assert!(close(r.angle, t, 1e-12));
    }

    #[test]
    fn min_rect_long_side_orientation_is_reported() {
        let t = 100f64.to_radians();
        let pts: Vec<Point2> = [(0., 0.), (4., 0.), (4., 1.), (0., 1.)]
            .iter()
            .map(|&(x, y)| p(t.cos() * x - t.sin() * y, t.sin() * x + t.cos() * y))
            .collect();
        let r = min_area_rect(&convex_hull(&pts).unwrap()).unwrap();
        assert!(close(r.angle, 10f64.to_radians(), 1e-12));
        assert!(close(r.half_extents.x, 0.5, 1e-12) && close(r.half_extents.y, 2.0, 1e-12));
    }

    /// Dense sweep oracle at 0.01° resolution.
    fn sweep_area(vs: &[Point2]) -> f64 {
        let mut best = f64::MAX;
        for i in 0..9000 {
            let a = (i as f64 * 0.01).to_radians();
            let u = heading(a);
            let v = rot90(u);
            let (mut umin, mut umax, mut vmin, mut vmax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
            for q in vs {
                umin = umin.min(q.coords.dot(&u));
                umax = umax.max(q.coords.dot(&u));
                vmin = vmin.min(q.coords.dot(&v));
                vmax = vmax.max(q.coords.dot(&v));
            }
            best = best.min((umax - umin) * (vmax - vmin));
        }
        best
    }

    #[test]
    fn min_rect_matches_sweep_on_random_octagons() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let mut angles: Vec<f64> = (0..8).map(|_| rng.random_range(0.0..TAU)).collect();
            angles.sort_by(f64::total_cmp);
            let pts: Vec<Point2> = angles
                .iter()
                .map(|&a| {
                    let r = rng.random_range(50.0..100.0);
                    p(r * a.cos(), r * a.sin() * 0.6)
                })
                .collect();
            let hull = convex_hull(&pts).unwrap();
            let r = min_area_rect(&hull).unwrap();
            let oracle = sweep_area(&hull.vertices);
            assert!(r.area() <= oracle * (1.0 + 1e-12));
            assert!((r.area() - oracle).abs() / oracle < 1e-3);
            for v in &hull.vertices {
                let local = v - r.center;
                let u = heading(r.angle);
                assert!(local.dot(&u).abs() <= r.half_extents.x + 1e-9);
                assert!(local.dot(&rot90(u)).abs() <= r.half_extents.y + 1e-9);
            }
        }
    }

    #[test]
    fn min_rect_rejects_flat_polygon() {
        let poly = Polygon { vertices: vec![p(0., 0.), p(1., 0.), p(2., 0.)] };
        assert!(min_area_rect(&poly).is_err());
    }

    #[test]
    fn signed_angle_examples() {
        let x = Vec2::new(1., 0.);
        assert_eq!(signed_angle(x, x).unwrap(), 0.0);
        assert!(close(signed_angle(x, Vec2::new(0., 1.)).unwrap(), FRAC_PI_2, 1e-15));
        assert_eq!(signed_angle(x, Vec2::new(-1., 0.)).unwrap(), PI);
        assert_eq!(signed_angle(x, Vec2::new(-1., -0.0)).unwrap(), PI);
        assert!(signed_angle(Vec2::zeros(), x).is_err());
    }

    #[test]
    fn wrap_angle_branch() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!(close(wrap_angle(3.0 * PI / 2.0), -FRAC_PI_2, 1e-15));
    }

    #[test]
    fn pose_axes_follow_euler_convention() {
        let pose = Pose::new(Vec3::zeros(), -FRAC_PI_2, 0.0, FRAC_PI_2);
        assert!((pose.x_axis() - Vec3::y()).norm() < 1e-12);
        assert!((pose.y_axis() + Vec3::z()).norm() < 1e-12);
        assert!((pose.z_axis() + Vec3::x()).norm() < 1e-12);
        let back = Pose::from_rotation(Vec3::zeros(), &pose.rotation());
        assert!((back.rotation().matrix() - pose.rotation().matrix()).norm() < 1e-12);
    }

    fn point_cloud() -> impl Strategy<Value = Vec<Point2>> {
        prop::collection::vec((-1e3..1e3f64, -1e3..1e3f64), 3..60)
            .prop_map(|v| v.into_iter().map(|(x, y)| p(x, y)).collect())
    }

    proptest! {
        #[test]
        fn hull_is_idempotent_and_contains_inputs(pts in point_cloud()) {
            if let Ok(h) = convex_hull(&pts) {
                prop_assert!(h.area() > 0.0);
                let again = convex_hull(&h.vertices).unwrap();
                prop_assert_eq!(&again, &h);
                for q in &pts {
                    prop_assert!(h.contains(*q, 1e-9));
                }
                let n = h.vertices.len();
                for i in 0..n {
                    let c = cross(h.vertices[i], h.vertices[(i + 1) % n], h.vertices[(i + 2) % n]);
                    prop_assert!(c > 0.0);
                }
            }
        }

        #[test]
        fn min_rect_not_larger_than_aabb(pts in point_cloud()) {
            if let Ok(h) = convex_hull(&pts) {
                if let Ok(r) = min_area_rect(&h) {
                    let xs = h.vertices.iter().map(|v| v.x);
                    let ys = h.vertices.iter().map(|v| v.y);
                    let w = xs.clone().fold(f64::MIN, f64::max) - xs.fold(f64::MAX, f64::min);
                    let hgt = ys.clone().fold(f64::MIN, f64::max) - ys.fold(f64::MAX, f64::min);
                    prop_assert!(r.area() <= w * hgt * (1.0 + 1e-9));
                    prop_assert!((0.0..FRAC_PI_2).contains(&r.angle));
                }
            }
        }

        #[test]
        fn signed_angle_antisymmetric(ax in -10.0..10.0f64, ay in -10.0..10.0f64,
                                      bx in -10.0..10.0f64, by in -10.0..10.0f64) {
            let (a, b) = (Vec2::new(ax, ay), Vec2::new(bx, by));
            if let (Ok(ab), Ok(ba)) = (signed_angle(a, b), signed_angle(b, a)) {
                prop_assert!(ab > -PI && ab <= PI);
                if ab != PI && ba != PI {
                    prop_assert_eq!(ab, -ba);
                }
            }
        }
    }
}
