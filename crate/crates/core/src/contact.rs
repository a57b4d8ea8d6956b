//! Quasi-static edge-contact reorientation.
//!
//! A top-state shoe is released with its sole resting on the top edge of a
//! box wall, its midline offset by `d` toward the box interior. Gravity rolls
//! it about the edge; once the leading corner reaches the box floor the pivot
//! moves there and the shoe either completes the roll onto its side or falls
//! back. A shoe that cannot reach the floor before its centre of mass hangs
//! below the edge slides off onto the face it rolled toward.
//!
//! Cross-section coordinates: `s` is the lateral axis (body +Y, the outside
//! face), `z` is height above the sole. The edge sits at `s = −d`.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::geometry::{heading, rot90, Point2, Pose, Vec3};
use crate::model::{BoxModel, ShoeModel};
use crate::perception::{BoxPose, ShoeState};

/// Offset tried first, then the scan range, in mm.
pub const DEFAULT_OFFSET: f64 = 10.0;
pub const OFFSET_RANGE: (f64, f64) = (5.0, 25.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossSection {
    pub width: f64,
    pub height: f64,
    pub com_height: f64,
    pub com_lateral: f64,
}

impl CrossSection {
    /// Uniform rectangle: centre of mass at half height on the midline.
    pub fn uniform(width: f64, height: f64) -> Self {
        Self { width, height, com_height: height / 2.0, com_lateral: 0.0 }
    }

    pub fn of_shoe(model: &ShoeModel) -> Self {
        Self::uniform(model.width, model.height)
    }

    fn validate(&self) -> Result<()> {
        let ok = self.width > 0.0
            && self.height > 0.0
            && self.com_height > 0.0
            && self.com_height < self.height
            && self.com_lateral.abs() < self.width / 2.0;
        if ok {
            Ok(())
        } else {
            Err(Error::DegenerateInput("invalid cross-section"))
        }
    }
}

/// `offset` is signed along the shoe body +Y axis; `contact_point` is the
/// edge point under the shoe midline, with the yaw the shoe is released at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgePlacement {
    pub offset: f64,
    pub contact_point: Pose,
    pub drop_height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactOutcome {
    pub final_state: ShoeState,
    pub rotation_at_floor: f64,
    pub settled: bool,
    /// Centre-of-mass height at rest relative to the edge top.
    pub com_height_at_rest: f64,
    /// Side variant in the sense of rotation.
    pub rolled_toward: ShoeState,
}

impl ContactOutcome {
    /// Final state when a shoe already in the box stops any roll past the
    /// side pose.
    pub fn arrested(&self) -> ShoeState {
        if self.settled && self.final_state == ShoeState::Bottom && self.rotation_at_floor > FRAC_PI_2 {
            self.rolled_toward
        } else {
            self.final_state
        }
    }
}

/// Two-phase rolling model; see the module docs.
pub fn predict_contact_outcome(cs: &CrossSection, placement: &EdgePlacement) -> Result<ContactOutcome> {
    cs.validate()?;
    let d = placement.offset;
    let depth = placement.drop_height;
    let inside = d.abs() < cs.width / 2.0 && depth >= 0.0;
    if !inside {
        return Err(Error::DegenerateInput("offset must lie within the half width, drop height ≥ 0"));
    }
    let arm = d + cs.com_lateral;
    if arm.abs() <= 1e-12 {
        return Err(Error::NoRotation);
    }
    // Mirror so the shoe always rolls toward +s.
    let sign = arm.signum();
    let a = arm.abs();
    let lead = sign * d + cs.width / 2.0;
    let (h, top) = (cs.com_height, cs.height);
    let rolled = if sign > 0.0 { ShoeState::SideInsideUp } else { ShoeState::SideOutsideUp };

    // Angle at which gravity torque about the edge vanishes.
    let hang = std::f64::consts::PI - a.atan2(h);
    let floor = if depth <= lead {
        Some((depth / lead).asin())
    } else {
        let r = lead.hypot(top);
        (depth <= r).then(|| top.atan2(lead) + (depth / r).asin())
    };

    let side_rest = -depth + cs.width / 2.0 - sign * cs.com_lateral;
    let outcome = match floor {
        Some(phi) if phi < hang => {
            let (c, s) = (phi.cos(), phi.sin());
            let com = a * c + h * s;
            let sole_corner = phi <= FRAC_PI_2;
            let pivot = if sole_corner { lead * c } else { lead * c + top * s };
            let beyond = com > pivot;
            match (sole_corner, beyond) {
                (true, true) | (false, false) => ContactOutcome {
                    final_state: rolled,
                    rotation_at_floor: phi,
                    settled: true,
                    com_height_at_rest: side_rest,
                    rolled_toward: rolled,
                },
                (true, false) => ContactOutcome {
                    final_state: ShoeState::Bottom,
                    rotation_at_floor: phi,
                    settled: true,
                    com_height_at_rest: -a * s + h * c,
                    rolled_toward: rolled,
                },
                (false, true) => ContactOutcome {
                    final_state: ShoeState::Bottom,
                    rotation_at_floor: phi,
                    settled: true,
                    com_height_at_rest: -depth + top - h,
                    rolled_toward: rolled,
                },
            }
        }
        _ => ContactOutcome {
            final_state: rolled,
            rotation_at_floor: hang,
            settled: false,
            com_height_at_rest: side_rest,
            rolled_toward: rolled,
        },
    };
    Ok(outcome)
}

/// Release pose over the long wall opposite pA, at the point two thirds of
/// the way from pB toward pC. The yaw makes the rolled variant `desired`.
pub fn plan_edge_placement(
    bx: &BoxPose,
    box_model: &BoxModel,
    model: &ShoeModel,
    desired_final: ShoeState,
    second_shoe: bool,
) -> Result<EdgePlacement> {
    let sign = match desired_final {
        ShoeState::SideInsideUp => 1.0,
        ShoeState::SideOutsideUp => -1.0,
        _ => return Err(Error::WrongState("edge placement targets a side variant")),
    };
    let u = bx.long_axis();
    let n = bx.toward_a();
    // Body +Y points into the box for inside-up, out of it for outside-up.
    let y_axis = n * sign;
    let x_axis = -rot90(y_axis);
    let edge: Point2 = bx.center() + u * (bx.length() / 6.0) - n * (bx.width() / 2.0);
    let yaw = x_axis.y.atan2(x_axis.x);
    debug_assert!((heading(yaw) - x_axis).norm() < 1e-9);
    let cs = CrossSection::of_shoe(model);
    let contact_point = Pose::new(Vec3::new(edge.x, edge.y, box_model.wall_height), 0.0, 0.0, yaw);

    let mut candidates = vec![DEFAULT_OFFSET];
    let steps = ((OFFSET_RANGE.1 - OFFSET_RANGE.0) / 0.5).round() as usize;
    let mut scan: Vec<f64> = (0..=steps).map(|i| OFFSET_RANGE.0 + 0.5 * i as f64).collect();
    scan.sort_by(|a, b| (a - DEFAULT_OFFSET).abs().total_cmp(&(b - DEFAULT_OFFSET).abs()).then(a.total_cmp(b)));
    candidates.extend(scan);
    for mag in candidates {
        if mag >= cs.width / 2.0 {
            continue;
        }
        let placement = EdgePlacement { offset: sign * mag, contact_point, drop_height: box_model.wall_height };
        if let Ok(o) = predict_contact_outcome(&cs, &placement) {
            let state = if second_shoe { o.arrested() } else { o.final_state };
            if state == desired_final {
                return Ok(placement);
            }
        }
    }
    Err(Error::Infeasible { reason: "no offset in range reaches the side state", solution: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::catalog;
    use proptest::prelude::*;

    fn at(offset: f64, drop: f64) -> EdgePlacement {
        EdgePlacement { offset, contact_point: Pose::planar(0.0, 0.0, 0.0), drop_height: drop }
    }

    #[test]
    fn deep_box_max_offset_rolls_to_side() {
        let cs = CrossSection::uniform(100.0, 110.0);
        let o = predict_contact_outcome(&cs, &at(49.9, 200.0)).unwrap();
        assert_eq!(o.final_state, ShoeState::SideInsideUp);
        let m = predict_contact_outcome(&cs, &at(-49.9, 200.0)).unwrap();
        assert_eq!(m.final_state, ShoeState::SideOutsideUp);
        assert_eq!(m.rotation_at_floor, o.rotation_at_floor);
    }

    #[test]
    fn vanishing_offset() {
        let cs = CrossSection::uniform(100.0, 110.0);
        assert_eq!(predict_contact_outcome(&cs, &at(0.0, 110.0)), Err(Error::NoRotation));
        let o = predict_contact_outcome(&cs, &at(1e-9, 110.0)).unwrap();
        assert!(matches!(o.final_state, ShoeState::Bottom) || o.final_state.is_side());
    }

    #[test]
    fn shallow_drop_settles_bottom() {
        let cs = CrossSection::uniform(100.0, 110.0);
        for d in [1.0, 10.0, 25.0, 49.0] {
            let o = predict_contact_outcome(&cs, &at(d, 1e-6)).unwrap();
            assert_eq!(o.final_state, ShoeState::Bottom);
        }
    }

    #[test]
    fn catalog_shoes_land_on_side_at_ten_mm() {
        for e in catalog() {
            let cs = CrossSection::of_shoe(&e.shoe);
            let o = predict_contact_outcome(&cs, &at(10.0, e.box_model.wall_height)).unwrap();
            assert_eq!(o.final_state, ShoeState::SideInsideUp, "{}", e.shoe.name);
        }
    }

    #[test]
    fn edge_placement_examples() {
        let e = &catalog()[0];
        let bx = BoxPose::from_center(Point2::new(0.0, 400.0), 0.4, 300.0, 220.0);
        let a = plan_edge_placement(&bx, &e.box_model, &e.shoe, ShoeState::SideInsideUp, true).unwrap();
        assert_eq!(a.offset, 10.0);
        let b = plan_edge_placement(&bx, &e.box_model, &e.shoe, ShoeState::SideOutsideUp, true).unwrap();
        assert_eq!(b.offset, -10.0);
        assert_eq!(a.drop_height, 110.0);
        // inside-up: body +Y faces the interior
        let y = rot90(heading(a.contact_point.yaw));
        assert!((y - bx.toward_a()).norm() < 1e-12);
        let along = (a.contact_point.xy() - bx.pb.xy()).dot(&bx.long_axis());
        assert!((along - 200.0).abs() < 1e-9);
        assert!(plan_edge_placement(&bx, &e.box_model, &e.shoe, ShoeState::Top, true).is_err());
    }

    #[test]
    fn edge_placement_infeasible_for_shallow_box() {
        let shoe = ShoeModel::new("flat", 200.0, 100.0, 10.0, 100.0, crate::model::Softness::Soft);
        let bm = BoxModel { length: 300.0, width: 200.0, wall_height: 1.0 };
        let bx = BoxPose::from_center(Point2::origin(), 0.0, 300.0, 200.0);
        assert!(matches!(
            plan_edge_placement(&bx, &bm, &shoe, ShoeState::SideInsideUp, false),
            Err(Error::Infeasible { .. })
        ));
    }

    fn section() -> impl Strategy<Value = CrossSection> {
        (20.0..200.0f64, 20.0..200.0f64, 0.2..0.8f64, -0.3..0.3f64).prop_map(|(w, h, fh, fl)| CrossSection {
            width: w,
            height: h,
            com_height: h * fh,
            com_lateral: w * fl,
        })
    }

    proptest! {
        #[test]
        fn mirror_symmetry(cs in section(), t in -0.99..0.99f64, drop in 0.0..300.0f64) {
            let d = t * cs.width / 2.0;
            let a = predict_contact_outcome(&cs, &at(d, drop));
            let mirrored = CrossSection { com_lateral: -cs.com_lateral, ..cs };
            let b = predict_contact_outcome(&mirrored, &at(-d, drop));
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    prop_assert_eq!(a.rotation_at_floor, b.rotation_at_floor);
                    prop_assert_eq!(a.settled, b.settled);
                    prop_assert_eq!(a.com_height_at_rest, b.com_height_at_rest);
                    let flip = |s: ShoeState| s.complement().unwrap_or(s);
                    prop_assert_eq!(flip(a.final_state), b.final_state);
                }
                (a, b) => prop_assert_eq!(a, b),
            }
        }

        #[test]
        fn rotation_at_floor_non_increasing_in_offset(w in 20.0..200.0f64, h in 20.0..200.0f64,
                                                      fh in 0.2..0.8f64, drop in 0.0..300.0f64,
                                                      t1 in 0.001..0.999f64, t2 in 0.001..0.999f64) {
            let cs = CrossSection { width: w, height: h, com_height: h * fh, com_lateral: 0.0 };
            let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            let a = predict_contact_outcome(&cs, &at(lo * w / 2.0, drop)).unwrap();
            let b = predict_contact_outcome(&cs, &at(hi * w / 2.0, drop)).unwrap();
            prop_assert!(b.rotation_at_floor <= a.rotation_at_floor + 1e-12);
        }

        #[test]
        fn com_never_rises(cs in section(), t in -0.99..0.99f64, drop in 0.0..300.0f64) {
            if let Ok(o) = predict_contact_outcome(&cs, &at(t * cs.width / 2.0, drop)) {
                prop_assert!(o.com_height_at_rest <= cs.com_height + 1e-9);
            }
        }
    }
}
