//! Quarter-turn rolls of a box-shaped shoe over its leading bottom edge.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::geometry::{tip_rotation, Vec2, Vec3};
use crate::model::ShoeModel;
use crate::perception::{ShoePose, ShoeState};

/// Corners of the shoe's bounding box in its body frame.
pub fn body_corners(model: &ShoeModel) -> [Vec3; 8] {
    let (hl, hw, h) = (model.length / 2.0, model.width / 2.0, model.height);
    let mut out = [Vec3::zeros(); 8];
    for (i, c) in out.iter_mut().enumerate() {
        let x = if i & 1 == 0 { -hl } else { hl };
        let y = if i & 2 == 0 { -hw } else { hw };
        let z = if i & 4 == 0 { 0.0 } else { h };
        *c = Vec3::new(x, y, z);
    }
    out
}

pub fn world_corners(model: &ShoeModel, pose: &ShoePose) -> [Vec3; 8] {
    let r = pose.rotation();
    body_corners(model).map(|c| pose.position + r * c)
}

/// Rolls the shoe `quarter_turns` times toward `travel` (horizontal, across
/// the shoe X axis), each turn about the bottom edge leading in `travel`.
/// The result is snapped to the nearest resting pose on the table.
pub fn roll_over(
    model: &ShoeModel,
    pose: &ShoePose,
    travel: Vec2,
    quarter_turns: u32,
    table_height: f64,
) -> Result<(ShoeState, ShoePose)> {
    if travel.norm_squared() == 0.0 {
        return Err(Error::DegenerateInput("zero roll direction"));
    }
    let travel = travel.normalize();
    let mut r = pose.rotation();
    let mut p = pose.position;
    for _ in 0..quarter_turns {
        let corners = body_corners(model).map(|c| p + r * c);
        let low = corners.iter().map(|c| c.z).fold(f64::MAX, f64::min);
        let pivot = corners
            .iter()
            .filter(|c| c.z < low + 1e-6)
            .max_by(|a, b| {
                let da = a.x * travel.x + a.y * travel.y;
                let db = b.x * travel.x + b.y * travel.y;
                da.total_cmp(&db)
            })
            .copied()
            .unwrap();
        let q = tip_rotation(travel, FRAC_PI_2);
        r = q * r;
        p = pivot + q * (p - pivot);
    }
    let state = ShoeState::from_rotation(&r).ok_or(Error::DegenerateInput("roll axis not along the shoe"))?;
    let x = r * Vec3::x();
    let mut out = ShoePose::new(p, x.y.atan2(x.x), state);
    let low = world_corners(model, &out).iter().map(|c| c.z).fold(f64::MAX, f64::min);
    out.position.z += table_height - low;
    Ok((state, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{heading, rot90, Point2};
    use crate::model::catalog;
    use crate::perception::synthesize_keypoints;
    use crate::reorientation::{plan_toppling, GripperModel};

    fn sports() -> ShoeModel {
        catalog()[0].shoe.clone()
    }

    #[test]
    fn rolling_toward_a_face_puts_it_down() {
        let m = sports();
        let pose = ShoePose::resting(&m, Point2::origin(), 0.3, ShoeState::Top, 5.0);
        let outward = rot90(heading(0.3));
        let (s, p) = roll_over(&m, &pose, outward, 1, 5.0).unwrap();
        assert_eq!(s, ShoeState::SideInsideUp);
        assert!((p.position.z - (5.0 + m.width / 2.0)).abs() < 1e-9);
        assert!((p.yaw - 0.3).abs() < 1e-12);
        let (s, _) = roll_over(&m, &pose, -outward, 1, 5.0).unwrap();
        assert_eq!(s, ShoeState::SideOutsideUp);
        let (s, p2) = roll_over(&m, &pose, outward, 2, 5.0).unwrap();
        assert_eq!(s, ShoeState::Bottom);
        assert!((p2.position.z - (5.0 + m.height)).abs() < 1e-9);
        let (s, _) = roll_over(&m, &pose, outward, 4, 5.0).unwrap();
        assert_eq!(s, ShoeState::Top);
        assert!(roll_over(&m, &pose, heading(0.3), 1, 5.0).is_err());
    }

    #[test]
    fn planned_topples_reach_the_intended_states() {
        let m = sports();
        let g = GripperModel::default();
        for (state, target, expect) in [
            (ShoeState::Bottom, Some(ShoeState::SideInsideUp), ShoeState::SideInsideUp),
            (ShoeState::Bottom, Some(ShoeState::SideOutsideUp), ShoeState::SideOutsideUp),
            (ShoeState::Top, Some(ShoeState::SideInsideUp), ShoeState::SideInsideUp),
            (ShoeState::Top, Some(ShoeState::SideOutsideUp), ShoeState::SideOutsideUp),
            (ShoeState::SideInsideUp, None, ShoeState::Top),
            (ShoeState::SideOutsideUp, None, ShoeState::Top),
        ] {
            let pose = ShoePose::resting(&m, Point2::new(40.0, 10.0), -1.1, state, 0.0);
            let k = synthesize_keypoints(&m, &pose, state, 0.0, 0);
            let plan = plan_toppling(&k, &pose, state, 0.0, &g, target).unwrap();
            let (s, after) = roll_over(&m, &pose, plan.travel(), 1, 0.0).unwrap();
            assert_eq!(s, expect, "{state} -> {target:?}");
            if state.is_side() {
                let before = k.topline.unwrap();
                let k2 = synthesize_keypoints(&m, &after, s, 0.0, 0);
                let moved = k2.topline.unwrap();
                assert!(moved.z > before.z);
            }
        }
    }
}
