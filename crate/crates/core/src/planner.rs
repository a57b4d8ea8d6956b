//! Pair packing planner: reorients the pair into a placeable combination,
//! then places the side-state shoe first and the other one next to it.

use std::f64::consts::PI;
use std::fmt;

use crate::contact::{plan_edge_placement, EdgePlacement};
use crate::error::{Error, Result};
use crate::geometry::{heading, Point2, Pose, Vec2, Vec3};
use crate::model::{BoxModel, ShoeModel};
use crate::motion::roll_over;
use crate::perception::{
    classify_state, estimate_shoe_pose, grasp_pose, synthesize_keypoints, BoxPose, GraspPose, ShoePose, ShoeState,
};
use crate::reorientation::{plan_toppling, TopplingKind, TopplingPlan};
use crate::scene::{SceneState, ShoeId};

/// Angular tolerance of the target-configuration checks.
pub const VERIFY_TOLERANCE: f64 = 5.0 * PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PairCombination {
    TopTop,
    TopSide,
    TopBottom,
    SideSideMatched,
    SideSideMismatched,
    SideBottom,
    BottomBottom,
}

impl PairCombination {
    pub const ALL: [PairCombination; 7] = [
        PairCombination::TopTop,
        PairCombination::TopSide,
        PairCombination::TopBottom,
        PairCombination::SideSideMatched,
        PairCombination::SideSideMismatched,
        PairCombination::SideBottom,
        PairCombination::BottomBottom,
    ];

    pub fn label(self) -> &'static str {
        match self {
            PairCombination::TopTop => "top-top",
            PairCombination::TopSide => "top-side",
            PairCombination::TopBottom => "top-bottom",
            PairCombination::SideSideMatched => "side-side-matched",
            PairCombination::SideSideMismatched => "side-side-mismatched",
            PairCombination::SideBottom => "side-bottom",
            PairCombination::BottomBottom => "bottom-bottom",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.label() == s)
    }

    pub fn has_bottom(self) -> bool {
        matches!(self, PairCombination::TopBottom | PairCombination::SideBottom | PairCombination::BottomBottom)
    }
}

impl fmt::Display for PairCombination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    WithContactMethod,
    WithoutContactMethod,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::WithContactMethod => "with",
            Mode::WithoutContactMethod => "without",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "with" => Some(Mode::WithContactMethod),
            "without" => Some(Mode::WithoutContactMethod),
            _ => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// `expect` is the state the shoe should reach.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    DetectScene,
    Push { shoe: ShoeId, plan: TopplingPlan, expect: ShoeState },
    Topple { shoe: ShoeId, plan: TopplingPlan, expect: ShoeState },
    Grasp { shoe: ShoeId, grasp: GraspPose },
    PlaceDirect { shoe: ShoeId, target: Pose },
    PlaceOnEdge { shoe: ShoeId, placement: EdgePlacement },
}

impl Action {
    pub fn kind(&self) -> &'static str {
        match self {
            Action::DetectScene => "detect-scene",
            Action::Push { .. } => "push",
            Action::Topple { .. } => "topple",
            Action::Grasp { .. } => "grasp",
            Action::PlaceDirect { .. } => "place-direct",
            Action::PlaceOnEdge { .. } => "place-on-edge",
        }
    }

    pub fn shoe(&self) -> Option<ShoeId> {
        match self {
            Action::DetectScene => None,
            Action::Push { shoe, .. }
            | Action::Topple { shoe, .. }
            | Action::Grasp { shoe, .. }
            | Action::PlaceDirect { shoe, .. }
            | Action::PlaceOnEdge { shoe, .. } => Some(*shoe),
        }
    }

    pub fn is_reorientation(&self) -> bool {
        matches!(self, Action::Push { .. } | Action::Topple { .. })
    }

    pub fn is_place(&self) -> bool {
        matches!(self, Action::PlaceDirect { .. } | Action::PlaceOnEdge { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PackingPlan {
    pub actions: Vec<Action>,
    pub mode: Mode,
    pub predicted_topple_count: u32,
    pub combination: PairCombination,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TargetConfigReport {
    pub states_ok: bool,
    pub pairing_ok: bool,
    pub box_alignment_ok: bool,
    pub mutual_opposition_ok: bool,
    pub overall: bool,
}

impl TargetConfigReport {
    pub fn new(states_ok: bool, pairing_ok: bool, box_alignment_ok: bool, mutual_opposition_ok: bool) -> Self {
        Self {
            states_ok,
            pairing_ok,
            box_alignment_ok,
            mutual_opposition_ok,
            overall: states_ok && pairing_ok && box_alignment_ok && mutual_opposition_ok,
        }
    }

    pub fn failed() -> Self {
        Self::new(false, false, false, false)
    }
}

pub fn classify_pair(s1: ShoeState, s2: ShoeState) -> PairCombination {
    use ShoeState::*;
    match (s1, s2) {
        (Top, Top) => PairCombination::TopTop,
        (Bottom, Bottom) => PairCombination::BottomBottom,
        (Top, Bottom) | (Bottom, Top) => PairCombination::TopBottom,
        (Top, _) | (_, Top) => PairCombination::TopSide,
        (Bottom, _) | (_, Bottom) => PairCombination::SideBottom,
        (a, b) if a == b => PairCombination::SideSideMismatched,
        _ => PairCombination::SideSideMatched,
    }
}

pub fn required_topples(c: PairCombination, mode: Mode) -> u32 {
    use PairCombination::*;
    match (mode, c) {
        (_, SideSideMatched) => 0,
        (_, SideBottom) => 1,
        (_, BottomBottom) => 2,
        (Mode::WithContactMethod, TopTop | TopBottom | SideSideMismatched) => 1,
        (Mode::WithContactMethod, TopSide) => 0,
        (Mode::WithoutContactMethod, TopTop | TopBottom | SideSideMismatched) => 2,
        (Mode::WithoutContactMethod, TopSide) => 1,
    }
}

/// First shoe: side state at the point one third of the way from pB toward
/// pC on the long midline, sole normal toward the pA side.
pub fn placement_pose_first(bx: &BoxPose, shoe: &ShoeModel, state: ShoeState, table_height: f64) -> Result<Pose> {
    if shoe.length > bx.length() {
        return Err(Error::ShoeBoxMismatch { shoe: shoe.length, box_len: bx.length() });
    }
    let u = bx.long_axis();
    let x = match state {
        ShoeState::SideInsideUp => u,
        ShoeState::SideOutsideUp => -u,
        _ => return Err(Error::WrongState("the first shoe is placed in a side state")),
    };
    let p = bx.pb.xy() + u * (bx.length() / 3.0);
    Ok(Pose::new(Vec3::new(p.x, p.y, table_height + shoe.width / 2.0), state.roll(), 0.0, x.y.atan2(x.x)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SecondPlacement {
    Direct(Pose),
    OnEdge(EdgePlacement),
}

/// Second shoe, X axis opposed to the first: side shoes go straight to the
/// two-thirds point, top shoes are released over the edge.
pub fn placement_pose_second(
    bx: &BoxPose,
    box_model: &BoxModel,
    shoe: &ShoeModel,
    first: &Pose,
    second_state: ShoeState,
    table_height: f64,
) -> Result<SecondPlacement> {
    if shoe.length > bx.length() {
        return Err(Error::ShoeBoxMismatch { shoe: shoe.length, box_len: bx.length() });
    }
    let yaw = first.yaw + PI;
    let u = bx.long_axis();
    match second_state {
        s if s.is_side() => {
            let p = bx.pb.xy() + u * (2.0 * bx.length() / 3.0);
            Ok(SecondPlacement::Direct(Pose::new(
                Vec3::new(p.x, p.y, table_height + shoe.width / 2.0),
                s.roll(),
                0.0,
                yaw,
            )))
        }
        ShoeState::Top => {
            let desired = if heading(yaw).dot(&u) > 0.0 { ShoeState::SideInsideUp } else { ShoeState::SideOutsideUp };
            plan_edge_placement(bx, box_model, shoe, desired, true).map(SecondPlacement::OnEdge)
        }
        _ => Err(Error::WrongState("a bottom-state shoe cannot be placed")),
    }
}

/// Checks the packed pair against the target configuration.
pub fn verify_target_config(scene: &SceneState) -> Result<TargetConfigReport> {
    for id in ShoeId::BOTH {
        let s = scene.shoe(id);
        if !s.in_box || !scene.bx.pose.contains(s.pose.xy()) {
            return Err(Error::NotPlaced(id.get()));
        }
    }
    let (a, b) = (&scene.shoes[0], &scene.shoes[1]);
    let states_ok = a.state.is_side() && b.state.is_side();
    let pairing_ok = states_ok && a.state.complement() == Some(b.state);
    let first = scene.shoe(scene.placed_first.unwrap_or(ShoeId::ONE));
    let z = first.pose.rotation() * Vec3::z();
    let toward = scene.bx.pose.toward_a();
    let horizontal = Vec2::new(z.x, z.y);
    let box_alignment_ok = z.z.abs() <= VERIFY_TOLERANCE.sin()
        && horizontal.norm() > 0.0
        && horizontal.normalize().dot(&toward) >= VERIFY_TOLERANCE.cos();
    let xa = a.pose.rotation() * Vec3::x();
    let xb = b.pose.rotation() * Vec3::x();
    let mutual_opposition_ok = xa.angle(&xb) >= PI - VERIFY_TOLERANCE;
    Ok(TargetConfigReport::new(states_ok, pairing_ok, box_alignment_ok, mutual_opposition_ok))
}

/// What the planner believes about one shoe, refreshed after each
/// predicted transition.
#[derive(Debug, Clone, Copy)]
struct Belief {
    state: ShoeState,
    pose: ShoePose,
}

struct Builder<'a> {
    scene: &'a SceneState,
    beliefs: [Belief; 2],
    actions: Vec<Action>,
    topples: u32,
}

impl<'a> Builder<'a> {
    fn perceive(scene: &SceneState, id: ShoeId, pose: &ShoePose, state: ShoeState) -> Result<Belief> {
        let model = &scene.shoe(id).model;
        let k = synthesize_keypoints(model, pose, state, 0.0, 0);
        let s = classify_state(&k)?;
        let mut p = estimate_shoe_pose(&k, s, Vec2::x())?;
        p.position = pose.position;
        Ok(Belief { state: s, pose: p })
    }

    fn belief(&self, id: ShoeId) -> Belief {
        self.beliefs[id.index()]
    }

    fn plan_reorientation(&self, id: ShoeId, target: Option<ShoeState>) -> Result<(TopplingPlan, ShoeState, ShoePose)> {
        let b = self.belief(id);
        let model = &self.scene.shoe(id).model;
        let k = synthesize_keypoints(model, &b.pose, b.state, 0.0, 0);
        let plan = plan_toppling(&k, &b.pose, b.state, self.scene.table_height, &self.scene.gripper, target)?;
        let (s, p) = roll_over(model, &b.pose, plan.travel(), 1, self.scene.table_height)?;
        if let Some(t) = target {
            if s != t {
                return Err(Error::Unplannable(format!("shoe {id} would reach {s} instead of {t}")));
            }
        }
        Ok((plan, s, p))
    }

    /// Reorients the first candidate that admits a feasible plan.
    fn reorient(&mut self, candidates: &[ShoeId], target: impl Fn(&Self, ShoeId) -> Option<ShoeState>) -> Result<ShoeId> {
        let mut last = None;
        for &id in candidates {
            match self.plan_reorientation(id, target(self, id)) {
                Ok((plan, s, p)) => {
                    let action = if plan.kind == TopplingKind::Push {
                        Action::Push { shoe: id, plan, expect: s }
                    } else {
                        Action::Topple { shoe: id, plan, expect: s }
                    };
                    self.actions.push(action);
                    self.topples += 1;
                    self.beliefs[id.index()] = Self::perceive(self.scene, id, &p, s)?;
                    return Ok(id);
                }
                Err(e) => last = Some(e),
            }
        }
        Err(match last {
            Some(Error::Unplannable(m)) => Error::Unplannable(m),
            Some(e) => Error::Unplannable(format!("no feasible reorientation: {e}")),
            None => Error::Unplannable("no shoe to reorient".into()),
        })
    }

    /// Shoes ordered by distance from the box centre, farthest first.
    fn by_distance(&self, ids: &[ShoeId]) -> Vec<ShoeId> {
        let c: Point2 = self.scene.bx.pose.center();
        let mut v = ids.to_vec();
        v.sort_by(|a, b| {
            let da = (self.belief(*a).pose.xy() - c).norm();
            let db = (self.belief(*b).pose.xy() - c).norm();
            db.total_cmp(&da).then(a.cmp(b))
        });
        v
    }

    fn states(&self) -> (ShoeState, ShoeState) {
        (self.beliefs[0].state, self.beliefs[1].state)
    }
}

fn side_complement(s: ShoeState) -> Option<ShoeState> {
    if s.is_side() {
        s.complement()
    } else {
        None
    }
}

/// Builds the pre-placement and placement stages for a scene with both
/// shoes on the table.
pub fn plan_packing(scene: &SceneState, mode: Mode) -> Result<PackingPlan> {
    if scene.shoes.iter().any(|s| s.in_box) || scene.held.is_some() {
        return Err(Error::Unplannable("a shoe is already in the box or in the gripper".into()));
    }
    scene.validate().map_err(|e| Error::Unplannable(e.to_string()))?;
    for s in &scene.shoes {
        if s.model.length > scene.bx.pose.length() {
            return Err(Error::ShoeBoxMismatch { shoe: s.model.length, box_len: scene.bx.pose.length() });
        }
    }
    let beliefs = [
        Builder::perceive(scene, ShoeId::ONE, &scene.shoes[0].pose, scene.shoes[0].state)?,
        Builder::perceive(scene, ShoeId::TWO, &scene.shoes[1].pose, scene.shoes[1].state)?,
    ];
    let mut b = Builder { scene, beliefs, actions: vec![Action::DetectScene], topples: 0 };
    let combination = classify_pair(beliefs[0].state, beliefs[1].state);

    // Sole-up shoes are pushed onto the side that pairs with the other shoe.
    let bottoms: Vec<ShoeId> = ShoeId::BOTH.into_iter().filter(|id| b.belief(*id).state == ShoeState::Bottom).collect();
    if bottoms.len() == 2 {
        b.reorient(&[ShoeId::ONE], |_, _| Some(ShoeState::SideInsideUp))?;
        b.reorient(&[ShoeId::TWO], |_, _| Some(ShoeState::SideOutsideUp))?;
    } else if let Some(&id) = bottoms.first() {
        b.reorient(&[id], |b, id| {
            Some(side_complement(b.belief(id.other()).state).unwrap_or(ShoeState::SideInsideUp))
        })?;
    }

    use ShoeState::*;
    match (mode, b.states()) {
        (_, (s1, s2)) if s1.is_side() && s2.is_side() && s1 != s2 => {}
        (Mode::WithContactMethod, (Top, Top)) => {
            let order = b.by_distance(&ShoeId::BOTH);
            b.reorient(&order, |_, _| Some(SideInsideUp))?;
        }
        (Mode::WithContactMethod, (Top, _) | (_, Top)) => {}
        (Mode::WithContactMethod, _) => {
            let order = b.by_distance(&ShoeId::BOTH);
            b.reorient(&order, |_, _| None)?;
        }
        (Mode::WithoutContactMethod, (Top, Top)) => {
            b.reorient(&[ShoeId::ONE], |_, _| Some(SideInsideUp))?;
            b.reorient(&[ShoeId::TWO], |_, _| Some(SideOutsideUp))?;
        }
        (Mode::WithoutContactMethod, (Top, _) | (_, Top)) => {
            let id = if b.beliefs[0].state == Top { ShoeId::ONE } else { ShoeId::TWO };
            b.reorient(&[id], |b, id| side_complement(b.belief(id.other()).state))?;
        }
        (Mode::WithoutContactMethod, _) => {
            let order = b.by_distance(&ShoeId::BOTH);
            let mut last = None;
            for id in order {
                let mark = (b.actions.len(), b.topples, b.beliefs);
                let attempt = b
                    .reorient(&[id], |_, _| None)
                    .and_then(|id| b.reorient(&[id], |b, id| side_complement(b.belief(id.other()).state)));
                match attempt {
                    Ok(_) => {
                        last = None;
                        break;
                    }
                    Err(e) => {
                        b.actions.truncate(mark.0);
                        b.topples = mark.1;
                        b.beliefs = mark.2;
                        last = Some(e);
                    }
                }
            }
            if let Some(e) = last {
                return Err(e);
            }
        }
    }

    let (s1, s2) = b.states();
    let first = match (s1.is_side(), s2.is_side()) {
        (true, _) => ShoeId::ONE,
        (false, true) => ShoeId::TWO,
        _ => return Err(Error::Unplannable(format!("no placeable combination reached ({s1}, {s2})"))),
    };
    let second = first.other();
    let fb = b.belief(first);
    let target1 = placement_pose_first(&scene.bx.pose, &scene.shoe(first).model, fb.state, scene.table_height)?;
    b.actions.push(Action::Grasp { shoe: first, grasp: grasp_pose(&fb.pose) });
    b.actions.push(Action::PlaceDirect { shoe: first, target: target1 });
    let sb = b.belief(second);
    let place2 = placement_pose_second(
        &scene.bx.pose,
        &scene.bx.model,
        &scene.shoe(second).model,
        &target1,
        sb.state,
        scene.table_height,
    )
    .map_err(|e| match e {
        Error::Infeasible { .. } => Error::Unplannable(format!("edge placement of shoe {second}: {e}")),
        e => e,
    })?;
    b.actions.push(Action::Grasp { shoe: second, grasp: grasp_pose(&sb.pose) });
    b.actions.push(match place2 {
        SecondPlacement::Direct(target) => Action::PlaceDirect { shoe: second, target },
        SecondPlacement::OnEdge(placement) => Action::PlaceOnEdge { shoe: second, placement },
    });
    Ok(PackingPlan { actions: b.actions, mode, predicted_topple_count: b.topples, combination })
}
