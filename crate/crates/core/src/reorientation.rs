//! Toppling planner: push plans for sole-up shoes and gripper rotation
//! plans (start/end tool poses with solved angles) for side and top shoes.

use nalgebra::Rotation3;

use crate::error::{Error, Result};
use crate::geometry::{heading, rot90, tip_rotation, Pose, Vec2, Vec3};
use crate::perception::{classify_state, KeypointSet, ShoePose, ShoeState};

/// Push travel as a multiple of the shoe width.
pub const PUSH_OVERTRAVEL: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GripperModel {
    pub length: f64,
}

impl GripperModel {
    pub fn new(length: f64) -> Result<Self> {
        if length.is_finite() && length > 0.0 {
            Ok(Self { length })
        } else {
            Err(Error::DegenerateInput("gripper length must be positive"))
        }
    }
}

impl Default for GripperModel {
    fn default() -> Self {
        Self { length: 200.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShoeExtent {
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopplingSolution {
    pub theta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub beta_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TopplingKind {
    Push,
    RotateSide,
    RotateTop,
}

impl TopplingKind {
    pub fn label(self) -> &'static str {
        match self {
            TopplingKind::Push => "push",
            TopplingKind::RotateSide => "rotate-side",
            TopplingKind::RotateTop => "rotate-top",
        }
    }
}

/// Tool-tip start/end poses. `direction` is the push direction, the
/// topple direction for side shoes, or the roll direction for top shoes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopplingPlan {
    pub kind: TopplingKind,
    pub start: Pose,
    pub end: Pose,
    pub solution: Option<TopplingSolution>,
    pub direction: Vec2,
}

impl TopplingPlan {
    /// Horizontal direction the shoe rolls toward.
    pub fn travel(&self) -> Vec2 {
        match self.kind {
            TopplingKind::RotateSide => -self.direction,
            _ => self.direction,
        }
    }
}

fn lateral_axis(pose: &ShoePose) -> Vec2 {
    rot90(heading(pose.yaw))
}

fn planar(v: Vec3) -> Vec2 {
    Vec2::new(v.x, v.y)
}

/// Width across the X axis and height of the topmost keypoint.
pub fn shoe_extent(k: &KeypointSet, pose: &ShoePose, state: ShoeState, table_height: f64) -> Result<ShoeExtent> {
    let n = lateral_axis(pose);
    let width = if state.is_side() {
        let top = k.topline.ok_or(Error::InconsistentKeypoints("side state without topline"))?;
        planar(top - k.heel).dot(&n).abs()
    } else {
        match (k.inside, k.outside) {
            (Some(i), Some(o)) => planar(o - i).dot(&n).abs(),
            _ => return Err(Error::InconsistentKeypoints("lateral keypoint missing")),
        }
    };
    let height = k.visible().map(|p| p.z).fold(f64::MIN, f64::max) - table_height;
    if width <= 0.0 || height <= 0.0 || !width.is_finite() || !height.is_finite() {
        return Err(Error::InconsistentKeypoints("non-positive extent"));
    }
    Ok(ShoeExtent { width, height })
}

fn check_inputs(ext: &ShoeExtent, g: &GripperModel) -> Result<()> {
    let ok = [ext.width, ext.height, g.length].iter().all(|v| v.is_finite() && *v > 0.0);
    if ok {
        Ok(())
    } else {
        Err(Error::DegenerateInput("extent and gripper length must be positive"))
    }
}

/// Side→top toppling: θ = atan(H/W), W·sin(θ/2) = L·sin(α/2),
/// β = α/2 + θ/2, β_max = acos(1 − W/L).
pub fn solve_side_toppling(ext: &ShoeExtent, g: &GripperModel) -> Result<TopplingSolution> {
    check_inputs(ext, g)?;
    let (w, h, l) = (ext.width, ext.height, g.length);
    let theta = (h / w).atan();
    let s = w / l * (theta / 2.0).sin();
    if s > 1.0 {
        return Err(Error::NoSolution(s));
    }
    let alpha = 2.0 * s.asin();
    let beta = alpha / 2.0 + theta / 2.0;
    let beta_max = (1.0 - w / l).max(-1.0).acos();
    let sol = TopplingSolution { theta, alpha, beta, beta_max };
    if w >= l {
        return Err(Error::Infeasible { reason: "shoe width reaches gripper length", solution: Some(sol) });
    }
    if beta > beta_max {
        return Err(Error::Infeasible { reason: "initial angle exceeds its maximum", solution: Some(sol) });
    }
    Ok(sol)
}

/// Top→side toppling: θ = atan(W/H), √((W/2)² + H²)·sin(θ/2) = L·sin(α/2),
/// β = α/2 + θ/2 − atan((W/2)/H), β_max = acos(1 − H/L).
pub fn solve_top_toppling(ext: &ShoeExtent, g: &GripperModel) -> Result<TopplingSolution> {
    check_inputs(ext, g)?;
    let (w, h, l) = (ext.width, ext.height, g.length);
    let theta = (w / h).atan();
    let r = (w / 2.0).hypot(h);
    let s = r * (theta / 2.0).sin() / l;
    if s > 1.0 {
        return Err(Error::NoSolution(s));
    }
    let alpha = 2.0 * s.asin();
    let beta = alpha / 2.0 + theta / 2.0 - (w / 2.0 / h).atan();
    let beta_max = (1.0 - h / l).max(-1.0).acos();
    let sol = TopplingSolution { theta, alpha, beta, beta_max };
    if h >= l {
        return Err(Error::Infeasible { reason: "shoe height reaches gripper length", solution: Some(sol) });
    }
    if beta < 0.0 {
        return Err(Error::Infeasible { reason: "negative initial angle", solution: Some(sol) });
    }
    if beta > beta_max {
        return Err(Error::Infeasible { reason: "initial angle exceeds its maximum", solution: Some(sol) });
    }
    Ok(sol)
}

/// Horizontal unit vector across the shoe pointing from the sole line
/// toward the topline.
pub fn topple_direction(k: &KeypointSet, pose: &ShoePose) -> Result<Vec2> {
    let top = k.topline.ok_or(Error::InconsistentKeypoints("topline not visible"))?;
    let n = lateral_axis(pose);
    let d = planar(top - k.heel).dot(&n);
    if d.abs() < 1e-9 {
        return Err(Error::InconsistentKeypoints("topline on the sole line"));
    }
    Ok(n * d.signum())
}

fn tool_pose(position: Vec3, tilt: Rotation3<f64>, yaw: f64) -> Pose {
    Pose::from_rotation(position, &(tilt * Rotation3::from_euler_angles(0.0, 0.0, yaw)))
}

/// Straight push across a sole-up shoe. The face pushed from ends facing
/// up, so the push starts at the keypoint named by `target_side`.
pub fn push_plan(k: &KeypointSet, pose: &ShoePose, target_side: ShoeState) -> Result<TopplingPlan> {
    if classify_state(k)? != ShoeState::Bottom {
        return Err(Error::WrongState("push requires a sole-up shoe"));
    }
    let (inside, outside) = (k.inside.unwrap(), k.outside.unwrap());
    let (from, to) = match target_side {
        ShoeState::SideInsideUp => (inside, outside),
        ShoeState::SideOutsideUp => (outside, inside),
        _ => return Err(Error::WrongState("push target must be a side variant")),
    };
    let n = lateral_axis(pose);
    let across = planar(to - from).dot(&n);
    if across.abs() < 1e-9 {
        return Err(Error::InconsistentKeypoints("lateral keypoints coincide"));
    }
    let direction = n * across.signum();
    let w = across.abs();
    let d3 = Vec3::new(direction.x, direction.y, 0.0);
    let start = from - d3 * w;
    let end = start + d3 * (w * PUSH_OVERTRAVEL);
    Ok(TopplingPlan {
        kind: TopplingKind::Push,
        start: Pose::new(start, 0.0, 0.0, pose.yaw),
        end: Pose::new(end, 0.0, 0.0, pose.yaw),
        solution: None,
        direction,
    })
}

fn rotation_plan(
    kind: TopplingKind,
    contact: Vec3,
    pivot: Vec3,
    direction: Vec2,
    travel: Vec2,
    yaw: f64,
    sol: TopplingSolution,
) -> TopplingPlan {
    let end = pivot + tip_rotation(travel, sol.theta) * (contact - pivot);
    TopplingPlan {
        kind,
        start: tool_pose(contact, tip_rotation(travel, sol.beta), yaw),
        end: tool_pose(end, tip_rotation(travel, sol.beta + sol.alpha), yaw),
        solution: Some(sol),
        direction,
    }
}

/// Dispatches on the shoe state. `target` picks the side variant for push
/// and top rolls (default inside-up); it must be `None` or `Top` for side
/// shoes.
pub fn plan_toppling(
    k: &KeypointSet,
    pose: &ShoePose,
    state: ShoeState,
    table_height: f64,
    g: &GripperModel,
    target: Option<ShoeState>,
) -> Result<TopplingPlan> {
    match state {
        ShoeState::Bottom => push_plan(k, pose, target.unwrap_or(ShoeState::SideInsideUp)),
        ShoeState::SideInsideUp | ShoeState::SideOutsideUp => {
            if !matches!(target, None | Some(ShoeState::Top)) {
                return Err(Error::WrongState("side shoes topple to top"));
            }
            let ext = shoe_extent(k, pose, state, table_height)?;
            let sol = solve_side_toppling(&ext, g)?;
            let dir = topple_direction(k, pose)?;
            let contact = k.topline.unwrap();
            let sole = Vec3::new(contact.x - dir.x * ext.width, contact.y - dir.y * ext.width, table_height);
            Ok(rotation_plan(TopplingKind::RotateSide, contact, sole, dir, -dir, pose.yaw, sol))
        }
        ShoeState::Top => {
            let target = target.unwrap_or(ShoeState::SideInsideUp);
            let (inside, outside) = match (k.inside, k.outside) {
                (Some(i), Some(o)) => (i, o),
                _ => return Err(Error::InconsistentKeypoints("lateral keypoint missing")),
            };
            let toward = match target {
                ShoeState::SideInsideUp => outside - inside,
                ShoeState::SideOutsideUp => inside - outside,
                _ => return Err(Error::WrongState("top shoes roll to a side variant")),
            };
            let n = lateral_axis(pose);
            let dir = n * planar(toward).dot(&n).signum();
            let ext = shoe_extent(k, pose, state, table_height)?;
            let sol = solve_top_toppling(&ext, g)?;
            let p = pose.position;
            let contact = Vec3::new(p.x, p.y, table_height + ext.height);
            let edge = Vec3::new(p.x + dir.x * ext.width / 2.0, p.y + dir.y * ext.width / 2.0, table_height);
            Ok(rotation_plan(TopplingKind::RotateTop, contact, edge, dir, dir, pose.yaw, sol))
        }
    }
}
