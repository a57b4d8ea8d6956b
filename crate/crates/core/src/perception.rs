//! Keypoint post-processing: state classification, shoe and grasp poses,
//! box pose from contour points, and a synthetic keypoint generator.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use nalgebra::Rotation3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::{
    convex_hull, heading, min_area_rect, rot90, signed_angle, wrap_angle, Point2, Pose, Vec2, Vec3,
};
use crate::model::{BoxModel, ShoeModel};

/// Keypoint channels in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KeypointName {
    Toe,
    Heel,
    Topline,
    Outside,
    Inside,
}

impl KeypointName {
    pub const ALL: [KeypointName; 5] = [
        KeypointName::Toe,
        KeypointName::Heel,
        KeypointName::Topline,
        KeypointName::Outside,
        KeypointName::Inside,
    ];
}

/// World-frame keypoints; `None` means not visible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeypointSet {
    pub toe: Vec3,
    pub heel: Vec3,
    pub topline: Option<Vec3>,
    pub outside: Option<Vec3>,
    pub inside: Option<Vec3>,
}

impl KeypointSet {
    pub fn get(&self, name: KeypointName) -> Option<Vec3> {
        match name {
            KeypointName::Toe => Some(self.toe),
            KeypointName::Heel => Some(self.heel),
            KeypointName::Topline => self.topline,
            KeypointName::Outside => self.outside,
            KeypointName::Inside => self.inside,
        }
    }

    pub fn as_array(&self) -> [Option<Vec3>; 5] {
        KeypointName::ALL.map(|n| self.get(n))
    }

    pub fn visible(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.as_array().into_iter().flatten()
    }

    /// Applies `f` to every visible keypoint.
    pub fn map(&self, mut f: impl FnMut(Vec3) -> Vec3) -> Self {
        Self {
            toe: f(self.toe),
            heel: f(self.heel),
            topline: self.topline.map(&mut f),
            outside: self.outside.map(&mut f),
            inside: self.inside.map(&mut f),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let hidden = [self.topline, self.outside, self.inside].iter().filter(|k| k.is_none()).count();
        if hidden > 1 {
            return Err(Error::InconsistentKeypoints("more than one keypoint hidden"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShoeState {
    Top,
    Bottom,
    SideInsideUp,
    SideOutsideUp,
}

impl ShoeState {
    pub const ALL: [ShoeState; 4] =
        [ShoeState::Top, ShoeState::Bottom, ShoeState::SideInsideUp, ShoeState::SideOutsideUp];

    pub fn is_side(self) -> bool {
        matches!(self, ShoeState::SideInsideUp | ShoeState::SideOutsideUp)
    }

    /// Roll about the shoe X axis for this resting state.
    pub fn roll(self) -> f64 {
        match self {
            ShoeState::Top => 0.0,
            ShoeState::Bottom => PI,
            ShoeState::SideInsideUp => -FRAC_PI_2,
            ShoeState::SideOutsideUp => FRAC_PI_2,
        }
    }

    /// The other side variant; `None` for non-side states.
    pub fn complement(self) -> Option<ShoeState> {
        match self {
            ShoeState::SideInsideUp => Some(ShoeState::SideOutsideUp),
            ShoeState::SideOutsideUp => Some(ShoeState::SideInsideUp),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ShoeState::Top => "top",
            ShoeState::Bottom => "bottom",
            ShoeState::SideInsideUp => "side-inside-up",
            ShoeState::SideOutsideUp => "side-outside-up",
        }
    }

    pub fn from_label(s: &str) -> Option<ShoeState> {
        ShoeState::ALL.into_iter().find(|st| st.label() == s)
    }

    /// Resting state whose body frame matches `r`, judged by which body
    /// axis points up.
    pub fn from_rotation(r: &Rotation3<f64>) -> Option<ShoeState> {
        let z = r * Vec3::z();
        let y = r * Vec3::y();
        if z.z > 0.99 {
            Some(ShoeState::Top)
        } else if z.z < -0.99 {
            Some(ShoeState::Bottom)
        } else if y.z < -0.99 {
            Some(ShoeState::SideInsideUp)
        } else if y.z > 0.99 {
            Some(ShoeState::SideOutsideUp)
        } else {
            None
        }
    }
}

impl fmt::Display for ShoeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Shoe pose: `position` is the toe/heel midpoint on the sole line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShoePose {
    pub position: Vec3,
    pub yaw: f64,
    pub roll: f64,
}

impl ShoePose {
    pub fn new(position: Vec3, yaw: f64, state: ShoeState) -> Self {
        Self { position, yaw: wrap_angle(yaw), roll: wrap_angle(state.roll()) }
    }

    /// Pose of a shoe lying at rest on a table in the given state.
    pub fn resting(model: &ShoeModel, xy: Point2, yaw: f64, state: ShoeState, table_height: f64) -> Self {
        let z = match state {
            ShoeState::Top => table_height,
            ShoeState::Bottom => table_height + model.height,
            _ => table_height + model.width / 2.0,
        };
        Self::new(Vec3::new(xy.x, xy.y, z), yaw, state)
    }

    pub fn rotation(&self) -> Rotation3<f64> {
        Rotation3::from_euler_angles(self.roll, 0.0, self.yaw)
    }

    pub fn x_axis(&self) -> Vec2 {
        heading(self.yaw)
    }

    pub fn to_pose(&self) -> Pose {
        Pose::new(self.position, self.roll, 0.0, self.yaw)
    }

    pub fn xy(&self) -> Point2 {
        Point2::new(self.position.x, self.position.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraspPose {
    pub position: Vec3,
    pub yaw: f64,
}

/// Box pose from the four corners (counter-clockwise, starting at the pA
/// side) and the side poses. Side poses have X along the side in
/// counter-clockwise order and Y pointing into the box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxPose {
    pub corners: [Point2; 4],
    pub pa: Pose,
    pub pb: Pose,
    pub pc: Pose,
}

impl BoxPose {
    /// Sides: 0 → pA (long), 1 → pB (short), 3 → pC (short).
    pub fn from_corners(corners: [Point2; 4]) -> Self {
        let side = |i: usize| {
            let a = corners[i];
            let b = corners[(i + 1) % 4];
            let mid = nalgebra::center(&a, &b);
            let d = b - a;
            Pose::planar(mid.x, mid.y, d.y.atan2(d.x))
        };
        Self { corners, pa: side(0), pb: side(1), pc: side(3) }
    }

    /// Box centred at `center` with its long axis along `yaw`; pA lies on
    /// the +Y long side of the box frame.
    pub fn from_center(center: Point2, yaw: f64, length: f64, width: f64) -> Self {
        let u = heading(yaw);
        let v = rot90(u);
        let (hl, hw) = (length / 2.0, width / 2.0);
        let at = |a: f64, b: f64| center + u * a + v * b;
        Self::from_corners([at(hl, hw), at(-hl, hw), at(-hl, -hw), at(hl, -hw)])
    }

    pub fn center(&self) -> Point2 {
        let s = self.corners.iter().fold(Vec2::zeros(), |acc, c| acc + c.coords);
        Point2::from(s / 4.0)
    }

    /// Unit vector from pB toward pC.
    pub fn long_axis(&self) -> Vec2 {
        (self.pc.xy() - self.pb.xy()).normalize()
    }

    /// Unit vector from the box centre toward the pA side, exactly
    /// perpendicular to `long_axis`.
    pub fn toward_a(&self) -> Vec2 {
        let n = rot90(self.long_axis());
        if n.dot(&(self.pa.xy() - self.center())) < 0.0 {
            -n
        } else {
            n
        }
    }

    pub fn length(&self) -> f64 {
        (self.pc.xy() - self.pb.xy()).norm()
    }

    pub fn width(&self) -> f64 {
        2.0 * (self.pa.xy() - self.center()).norm()
    }

    /// Strict interior test in the table plane.
    pub fn contains(&self, p: Point2) -> bool {
        (0..4).all(|i| {
            let a = self.corners[i];
            let b = self.corners[(i + 1) % 4];
            (b - a).perp(&(p - a)) > 0.0
        })
    }

    /// Applies a planar rigid motion: rotation by `angle` about the origin,
    /// then translation by `t`.
    pub fn transformed(&self, angle: f64, t: Vec2) -> Self {
        let r = nalgebra::Rotation2::new(angle);
        Self::from_corners(self.corners.map(|c| r * c + t))
    }
}

/// State from keypoint visibility.
pub fn classify_state(k: &KeypointSet) -> Result<ShoeState> {
    k.validate()?;
    Ok(match (k.topline.is_some(), k.inside.is_some(), k.outside.is_some()) {
        (true, true, true) => ShoeState::Top,
        (false, true, true) => ShoeState::Bottom,
        (true, false, true) => ShoeState::SideOutsideUp,
        (true, true, false) => ShoeState::SideInsideUp,
        _ => return Err(Error::InconsistentKeypoints("visibility matches no state")),
    })
}

pub fn estimate_shoe_pose(k: &KeypointSet, s: ShoeState, reference_axis: Vec2) -> Result<ShoePose> {
    let axis = k.toe - k.heel;
    let planar = Vec2::new(axis.x, axis.y);
    if planar.norm_squared() == 0.0 {
        return Err(Error::DegenerateInput("toe and heel coincide in the table plane"));
    }
    let yaw = signed_angle(reference_axis, planar)?;
    Ok(ShoePose::new((k.toe + k.heel) / 2.0, yaw, s))
}

pub fn grasp_pose(p: &ShoePose) -> GraspPose {
    GraspPose { position: p.position, yaw: p.yaw }
}

/// Keypoints of `model` in its body frame (X heel→toe, Z sole→opening,
/// inside face on −Y).
pub fn body_keypoints(model: &ShoeModel) -> [Vec3; 5] {
    let (l, w, h) = (model.length, model.width, model.height);
    [
        Vec3::new(l / 2.0, 0.0, 0.0),
        Vec3::new(-l / 2.0, 0.0, 0.0),
        Vec3::new(-0.2 * l, 0.0, h),
        Vec3::new(0.0, w / 2.0, h / 2.0),
        Vec3::new(0.0, -w / 2.0, h / 2.0),
    ]
}

/// Places the model keypoints under `pose` with the roll of `state`, hides
/// the occluded one and adds Gaussian noise of `noise_sigma` per coordinate.
pub fn synthesize_keypoints(
    model: &ShoeModel,
    pose: &ShoePose,
    state: ShoeState,
    noise_sigma: f64,
    seed: u64,
) -> KeypointSet {
    let r = Rotation3::from_euler_angles(state.roll(), 0.0, pose.yaw);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise_sigma.max(0.0)).unwrap_or(Normal::new(0.0, 0.0).unwrap());
    let mut place = |b: Vec3| {
        let w = pose.position + r * b;
        if noise_sigma > 0.0 {
            w + Vec3::new(normal.sample(&mut rng), normal.sample(&mut rng), normal.sample(&mut rng))
        } else {
            w
        }
    };
    let [toe, heel, topline, outside, inside] = body_keypoints(model);
    KeypointSet {
        toe: place(toe),
        heel: place(heel),
        topline: (state != ShoeState::Bottom).then(|| place(topline)),
        outside: (state != ShoeState::SideInsideUp).then(|| place(outside)),
        inside: (state != ShoeState::SideOutsideUp).then(|| place(inside)),
    }
}

const LID_TOLERANCE: f64 = 0.5;

/// Box pose from contour points: hull, minimum-area rectangle, one hull
/// point per rectangle corner, then the hinge side from lid points.
pub fn estimate_box_pose(contour: &[Point2], dims: &BoxModel) -> Result<BoxPose> {
    if contour.len() < 4 {
        return Err(Error::DegenerateInput("contour needs at least 4 points"));
    }
    let hull = convex_hull(contour)?;
    let rect = min_area_rect(&hull)?;
    let (a, b) = (rect.half_extents.x, rect.half_extents.y);
    let (long, short) = if a >= b { (a, b) } else { (b, a) };
    if short <= 1e-9 {
        return Err(Error::DegenerateInput("hull too small"));
    }
    let aspect = (long / short) / (dims.length / dims.width);
    if !(0.75..=1.25).contains(&aspect) {
        return Err(Error::DegenerateInput("contour aspect does not match box"));
    }

    let rc = rect.corners();
    let corners = match_corners(&rc, &hull.vertices)?;
    if corners.iter().zip(rc.iter()).any(|(c, r)| (c - r).norm() > 0.5 * short) {
        return Err(Error::AmbiguousCorners);
    }

    let len = |i: usize| (corners[(i + 1) % 4] - corners[i]).norm();
    let long_sides = if len(0) + len(2) >= len(1) + len(3) { [0, 2] } else { [1, 3] };

    let mut lid = [0usize; 4];
    let mut lid_depth = [0.0f64; 4];
    for p in contour {
        let mut best = (0usize, f64::MIN);
        for i in 0..4 {
            let e = corners[(i + 1) % 4] - corners[i];
            let out = -e.perp(&(p - corners[i])) / e.norm();
            if out > best.1 {
                best = (i, out);
            }
        }
        if best.1 > LID_TOLERANCE {
            lid[best.0] += 1;
            lid_depth[best.0] += best.1;
        }
    }
    let [s0, s1] = long_sides;
    let hinge = match (lid[s0].cmp(&lid[s1]), lid_depth[s0].total_cmp(&lid_depth[s1])) {
        (std::cmp::Ordering::Greater, _) => s0,
        (std::cmp::Ordering::Less, _) => s1,
        (_, std::cmp::Ordering::Greater) if lid[s0] > 0 => s0,
        (_, std::cmp::Ordering::Less) if lid[s0] > 0 => s1,
        _ => {
            let mid = |i: usize| nalgebra::center(&corners[i], &corners[(i + 1) % 4]).coords.norm();
            if mid(s1) < mid(s0) {
                s1
            } else {
                s0
            }
        }
    };
    let ordered = [0, 1, 2, 3].map(|k| corners[(hinge + k) % 4]);
    Ok(BoxPose::from_corners(ordered))
}

/// Minimum-total-distance assignment of distinct hull points to the
/// rectangle corners, searching each corner's four nearest candidates.
fn match_corners(rect: &[Point2; 4], hull: &[Point2]) -> Result<[Point2; 4]> {
    let candidates: Vec<Vec<(usize, f64)>> = rect
        .iter()
        .map(|r| {
            let mut c: Vec<(usize, f64)> = hull.iter().enumerate().map(|(i, h)| (i, (h - r).norm())).collect();
            c.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
            c.truncate(4);
            c
        })
        .collect();
    let mut best: Option<(f64, [usize; 4])> = None;
    for &(i0, d0) in &candidates[0] {
        for &(i1, d1) in &candidates[1] {
            for &(i2, d2) in &candidates[2] {
                for &(i3, d3) in &candidates[3] {
                    let ids = [i0, i1, i2, i3];
                    let distinct = (0..4).all(|a| (a + 1..4).all(|b| ids[a] != ids[b]));
                    let total = d0 + d1 + d2 + d3;
                    if distinct && best.is_none_or(|(t, _)| total < t) {
                        best = Some((total, ids));
                    }
                }
            }
        }
    }
    let (_, ids) = best.ok_or(Error::AmbiguousCorners)?;
    Ok(ids.map(|i| hull[i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::catalog;
    use proptest::prelude::*;
    use rand::Rng;

    fn sports() -> ShoeModel {
        catalog()[0].shoe.clone()
    }

    fn all_visible() -> KeypointSet {
        KeypointSet {
            toe: Vec3::new(100., 0., 0.),
            heel: Vec3::new(-100., 0., 0.),
            topline: Some(Vec3::new(-40., 0., 100.)),
            outside: Some(Vec3::new(0., 50., 50.)),
            inside: Some(Vec3::new(0., -50., 50.)),
        }
    }

    #[test]
    fn classify_examples() {
        let k = all_visible();
        assert_eq!(classify_state(&k).unwrap(), ShoeState::Top);
        assert_eq!(classify_state(&KeypointSet { topline: None, ..k }).unwrap(), ShoeState::Bottom);
        assert_eq!(classify_state(&KeypointSet { inside: None, ..k }).unwrap(), ShoeState::SideOutsideUp);
        assert_eq!(classify_state(&KeypointSet { outside: None, ..k }).unwrap(), ShoeState::SideInsideUp);
        let bad = KeypointSet { topline: None, inside: None, ..k };
        assert!(matches!(classify_state(&bad), Err(Error::InconsistentKeypoints(_))));
    }

    #[test]
    fn shoe_pose_examples() {
        let k = KeypointSet {
            toe: Vec3::new(100., 0., 30.),
            heel: Vec3::new(-100., 0., 30.),
            ..all_visible()
        };
        let p = estimate_shoe_pose(&k, ShoeState::Top, Vec2::x()).unwrap();
        assert_eq!(p.position, Vec3::new(0., 0., 30.));
        assert_eq!(p.yaw, 0.0);
        let k2 = KeypointSet { toe: Vec3::new(0., 100., 30.), heel: Vec3::new(0., -100., 30.), ..k };
        let p2 = estimate_shoe_pose(&k2, ShoeState::Top, Vec2::x()).unwrap();
        assert!((p2.yaw - FRAC_PI_2).abs() < 1e-15);
        let k3 = KeypointSet { toe: k.heel, ..k };
        assert!(estimate_shoe_pose(&k3, ShoeState::Top, Vec2::x()).is_err());
    }

    #[test]
    fn grasp_copies_pose() {
        let p = ShoePose::new(Vec3::new(5., 7., 30.), 1.0, ShoeState::Top);
        let g = grasp_pose(&p);
        assert_eq!(g.position, p.position);
        assert_eq!(g.yaw, 1.0);
    }

    #[test]
    fn synthetic_yaw_round_trip() {
        let m = sports();
        for state in ShoeState::ALL {
            let pose = ShoePose::resting(&m, Point2::new(12.0, -40.0), 2.1, state, 0.0);
            let k = synthesize_keypoints(&m, &pose, state, 0.0, 3);
            assert_eq!(classify_state(&k).unwrap(), state);
            let est = estimate_shoe_pose(&k, state, Vec2::x()).unwrap();
            assert!((est.yaw - 2.1).abs() < 1e-9);
            assert!((est.position - pose.position).norm() < 1e-9);
        }
    }

    #[test]
    fn side_inside_up_topline_points_along_plus_y() {
        let m = sports();
        let pose = ShoePose::resting(&m, Point2::origin(), 0.0, ShoeState::SideInsideUp, 0.0);
        let k = synthesize_keypoints(&m, &pose, ShoeState::SideInsideUp, 0.0, 0);
        assert!(k.topline.unwrap().y > 100.0);
        assert!(k.inside.unwrap().z > k.toe.z);
        assert!(k.visible().all(|p| p.z >= -1e-9));
    }

    #[test]
    fn noise_is_seeded() {
        let m = sports();
        let pose = ShoePose::resting(&m, Point2::origin(), 0.3, ShoeState::Top, 0.0);
        let a = synthesize_keypoints(&m, &pose, ShoeState::Top, 2.0, 9);
        let b = synthesize_keypoints(&m, &pose, ShoeState::Top, 2.0, 9);
        let c = synthesize_keypoints(&m, &pose, ShoeState::Top, 2.0, 10);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    /// Yaw error is about |perpendicular noise difference| / L, a half-normal
    /// variable with mean σ√2·√(2/π)/L.
    #[test]
    fn noisy_yaw_error_within_analytic_bound() {
        let m = sports();
        let sigma = 2.0;
        let n = 2000;
        let mut total = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for seed in 0..n {
            let yaw = rng.random_range(-PI..PI);
            let pose = ShoePose::resting(&m, Point2::origin(), yaw, ShoeState::Top, 0.0);
            let k = synthesize_keypoints(&m, &pose, ShoeState::Top, sigma, seed);
            let est = estimate_shoe_pose(&k, ShoeState::Top, Vec2::x()).unwrap();
            total += wrap_angle(est.yaw - yaw).abs();
        }
        let mean = total / n as f64;
        let bound = sigma * 2f64.sqrt() * (2.0 / PI).sqrt() / m.length;
        assert!((mean / bound - 1.0).abs() < 0.08, "mean {mean} bound {bound}");
    }

    fn rectangle_contour(l: f64, w: f64, step: f64) -> Vec<Point2> {
        let mut pts = Vec::new();
        let nx = (l / step) as usize;
        let ny = (w / step) as usize;
        for i in 0..nx {
            let t = i as f64 * l / nx as f64;
            pts.push(Point2::new(t, 0.0));
            pts.push(Point2::new(l - t, w));
        }
        for j in 0..ny {
            let t = j as f64 * w / ny as f64;
            pts.push(Point2::new(l, t));
            pts.push(Point2::new(0.0, w - t));
        }
        pts
    }

    fn dims() -> BoxModel {
        BoxModel { length: 300.0, width: 220.0, wall_height: 110.0 }
    }

    #[test]
    fn exact_rectangle_box_pose() {
        let b = estimate_box_pose(&rectangle_contour(300.0, 220.0, 5.0), &dims()).unwrap();
        let mut cs: Vec<(f64, f64)> = b.corners.iter().map(|c| (c.x, c.y)).collect();
        cs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(cs, vec![(0.0, 0.0), (0.0, 220.0), (300.0, 0.0), (300.0, 220.0)]);
        // no lid: hinge is the long side nearest the origin
        assert!((b.pa.position - Vec3::new(150.0, 0.0, 0.0)).norm() < 1e-9);
        let short: Vec<f64> = [b.pb, b.pc].iter().map(|p| p.position.x).collect();
        assert!(short.contains(&300.0) && short.contains(&0.0));
        assert!((b.length() - 300.0).abs() < 0.5);
        assert!((b.width() - 220.0).abs() < 1e-9);
        assert!((b.toward_a() - Vec2::new(0.0, -1.0)).norm() < 1e-12);
    }

    fn lid_contour(rng: &mut ChaCha8Rng, n_lid: usize) -> Vec<Point2> {
        let mut pts = rectangle_contour(300.0, 220.0, 4.0);
        for _ in 0..n_lid {
            let t = rng.random_range(30.0..270.0);
            let h = rng.random_range(1.0..8.0);
            pts.push(Point2::new(t, 220.0 + h));
        }
        pts
    }

    fn rotate(pts: &[Point2], angle: f64, t: Vec2) -> Vec<Point2> {
        let r = nalgebra::Rotation2::new(angle);
        pts.iter().map(|p| r * p + t).collect()
    }

    #[test]
    fn lid_side_becomes_pa() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts = rotate(&lid_contour(&mut rng, 20), 40f64.to_radians(), Vec2::zeros());
        let b = estimate_box_pose(&pts, &dims()).unwrap();
        let truth = rotate(&[Point2::new(300., 220.), Point2::new(0., 220.), Point2::new(0., 0.), Point2::new(300., 0.)], 40f64.to_radians(), Vec2::zeros());
        let diag = (300f64.powi(2) + 220f64.powi(2)).sqrt();
        for (c, t) in b.corners.iter().zip(&truth) {
            assert!((c - t).norm() < 0.02 * diag);
        }
        let angle_err = wrap_angle(b.pa.yaw - (PI + 40f64.to_radians())).abs();
        assert!(angle_err < 1f64.to_radians());
    }

    #[test]
    fn triangle_contour_is_rejected() {
        let pts = [Point2::new(0., 0.), Point2::new(300., 0.), Point2::new(150., 200.), Point2::new(150., 1.)];
        let dims = BoxModel { length: 300.0, width: 200.0, wall_height: 100.0 };
        assert!(estimate_box_pose(&pts, &dims).is_err());
    }

    #[test]
    fn aspect_mismatch_is_rejected() {
        let pts = rectangle_contour(300.0, 100.0, 5.0);
        assert!(matches!(estimate_box_pose(&pts, &dims()), Err(Error::DegenerateInput(_))));
    }

    proptest! {
        #[test]
        fn classify_inverts_synthesis(x in -500.0..500.0f64, y in -500.0..500.0f64,
                                      yaw in -PI..PI, idx in 0usize..4, s in 0usize..4) {
            let m = catalog()[idx].shoe.clone();
            let state = ShoeState::ALL[s];
            let pose = ShoePose::resting(&m, Point2::new(x, y), yaw, state, 20.0);
            let k = synthesize_keypoints(&m, &pose, state, 0.0, 0);
            prop_assert_eq!(classify_state(&k).unwrap(), state);
        }

        #[test]
        fn yaw_is_rotation_equivariant(yaw in -PI..PI, turn in -PI..PI, tx in -300.0..300.0f64) {
            let m = sports();
            let pose = ShoePose::resting(&m, Point2::new(10.0, 20.0), yaw, ShoeState::Top, 0.0);
            let k = synthesize_keypoints(&m, &pose, ShoeState::Top, 0.0, 0);
            let r = Rotation3::from_euler_angles(0.0, 0.0, turn);
            let moved = k.map(|p| r * p + Vec3::new(tx, -tx, 0.0));
            let a = estimate_shoe_pose(&k, ShoeState::Top, Vec2::x()).unwrap();
            let b = estimate_shoe_pose(&moved, ShoeState::Top, Vec2::x()).unwrap();
            prop_assert!(wrap_angle(b.yaw - a.yaw - turn).abs() < 1e-9);
        }

        #[test]
        fn box_pose_is_equivariant(seed in 0u64..1000, angle in -PI..PI,
                                   tx in -500.0..500.0f64, ty in -500.0..500.0f64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let base = lid_contour(&mut rng, 25);
            let a = estimate_box_pose(&base, &dims()).unwrap();
            let moved = rotate(&base, angle, Vec2::new(tx, ty));
            let b = estimate_box_pose(&moved, &dims()).unwrap();
            let expect = a.transformed(angle, Vec2::new(tx, ty));
            for (p, q) in b.corners.iter().zip(&expect.corners) {
                prop_assert!((p - q).norm() < 1e-6);
            }
            for (p, q) in [(b.pa, expect.pa), (b.pb, expect.pb), (b.pc, expect.pc)] {
                prop_assert!((p.position - q.position).norm() < 1e-6);
                prop_assert!(wrap_angle(p.yaw - q.yaw).abs() < 1e-6);
            }
        }
    }
}
