//! Quasi-static world model: executes plans action by action as discrete
//! state and pose transitions, with seeded failure injection and replanning.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::contact::{predict_contact_outcome, CrossSection};
use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Point2, Vec2};
use crate::model::catalog_entry;
use crate::motion::roll_over;
use crate::perception::{
    classify_state, estimate_shoe_pose, synthesize_keypoints, BoxPose, ShoePose, ShoeState,
};
use crate::planner::{
    plan_packing, verify_target_config, Action, PackingPlan, PairCombination, TargetConfigReport,
};
use crate::reorientation::{GripperModel, TopplingKind};
use crate::scene::{separation, BoxRecord, SceneState, ShoeId, ShoeRecord, StateSummary};

pub use crate::model::{BoxModel, ShoeModel, Softness};

pub const MAX_REPLANS: u32 = 5;

/// Largest yaw error the detection step tolerates before it reports a
/// perception failure.
pub const PERCEPTION_YAW_LIMIT: f64 = 5.0 * PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FailureModel {
    pub keypoint_noise_sigma: f64,
    pub side_swap_probability: f64,
    pub over_rotation_probability: f64,
    /// Over-rotation probability for side-to-top rolls of shoes flagged as
    /// structurally hard to stand up.
    pub structural_over_rotation_probability: f64,
    pub max_injected_failures: Option<u32>,
    pub seed: u64,
}

impl Default for FailureModel {
    fn default() -> Self {
        Self {
            keypoint_noise_sigma: 0.0,
            side_swap_probability: 0.0,
            over_rotation_probability: 0.0,
            structural_over_rotation_probability: 0.0,
            max_injected_failures: None,
            seed: 0,
        }
    }
}

impl FailureModel {
    pub fn validate(&self) -> Result<()> {
        let p = [
            self.side_swap_probability,
            self.over_rotation_probability,
            self.structural_over_rotation_probability,
        ];
        if p.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::DegenerateInput("probabilities must lie in [0, 1]"));
        }
        if !(self.keypoint_noise_sigma >= 0.0 && self.keypoint_noise_sigma.is_finite()) {
            return Err(Error::DegenerateInput("noise sigma must be finite and ≥ 0"));
        }
        Ok(())
    }
}

/// Seeded source of injected failures. Every decision consumes exactly one
/// draw, so the stream does not depend on which failures fire.
#[derive(Debug, Clone)]
pub struct FailureInjector {
    rng: ChaCha8Rng,
    injected: u32,
    limit: Option<u32>,
}

impl FailureInjector {
    pub fn new(f: &FailureModel) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(f.seed), injected: 0, limit: f.max_injected_failures }
    }

    pub fn injected(&self) -> u32 {
        self.injected
    }

    fn fire(&mut self, p: f64) -> bool {
        let x: f64 = self.rng.random();
        if x < p && self.limit.is_none_or(|l| self.injected < l) {
            self.injected += 1;
            true
        } else {
            false
        }
    }

    fn seed(&mut self) -> u64 {
        self.rng.random()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FailureKind {
    OverRotation,
    SideSwap,
    PerceptionError,
    WrongFinalState,
    Inapplicable(String),
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailureKind::OverRotation => f.write_str("over-rotation"),
            FailureKind::SideSwap => f.write_str("side-swap"),
            FailureKind::PerceptionError => f.write_str("perception-error"),
            FailureKind::WrongFinalState => f.write_str("wrong-final-state"),
            FailureKind::Inapplicable(_) => f.write_str("inapplicable"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Failure(FailureKind),
}

impl Outcome {
    pub fn is_success(&self) -> bool {
        matches!(self, Outcome::Success)
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Success => f.write_str("success"),
            Outcome::Failure(k) => write!(f, "failure:{k}"),
        }
    }
}

fn inapplicable(msg: impl Into<String>) -> Error {
    Error::InapplicableAction(msg.into())
}

fn on_table(scene: &SceneState, id: ShoeId) -> Result<&ShoeRecord> {
    let s = scene.shoe(id);
    if s.in_box || scene.held == Some(id) {
        return Err(inapplicable(format!("shoe {id} is not on the table")));
    }
    Ok(s)
}

fn landing_pose(model: &ShoeModel, xy: Point2, yaw: f64, state: ShoeState, table_height: f64) -> ShoePose {
    ShoePose::resting(model, xy, yaw, state, table_height)
}

/// Applies one action. Errors mean the action does not apply to the scene;
/// failures injected by `f` are reported in the outcome.
pub fn execute_action(
    scene: &SceneState,
    a: &Action,
    f: &FailureModel,
    inj: &mut FailureInjector,
) -> Result<(SceneState, Outcome)> {
    let mut next = scene.clone();
    let table = scene.table_height;
    let outcome = match a {
        Action::DetectScene => {
            let mut ok = true;
            for id in ShoeId::BOTH {
                let s = scene.shoe(id);
                if s.in_box || f.keypoint_noise_sigma <= 0.0 {
                    continue;
                }
                let k = synthesize_keypoints(&s.model, &s.pose, s.state, f.keypoint_noise_sigma, inj.seed());
                let seen = classify_state(&k)
                    .and_then(|st| Ok((st, estimate_shoe_pose(&k, st, Vec2::x())?)))
                    .ok();
                ok &= match seen {
                    Some((st, p)) => st == s.state && wrap_angle(p.yaw - s.pose.yaw).abs() <= PERCEPTION_YAW_LIMIT,
                    None => false,
                };
            }
            if ok {
                Outcome::Success
            } else {
                Outcome::Failure(FailureKind::PerceptionError)
            }
        }
        Action::Push { shoe, plan, expect } | Action::Topple { shoe, plan, expect } => {
            let s = on_table(scene, *shoe)?;
            let is_push = matches!(a, Action::Push { .. });
            let needed = match plan.kind {
                TopplingKind::Push => s.state == ShoeState::Bottom,
                TopplingKind::RotateSide => s.state.is_side(),
                TopplingKind::RotateTop => s.state == ShoeState::Top,
            };
            if is_push != (plan.kind == TopplingKind::Push) || !needed {
                return Err(inapplicable(format!("{} on a {} shoe", plan.kind.label(), s.state)));
            }
            let p_over = if plan.kind == TopplingKind::RotateSide && s.model.hard_side_to_top {
                f.over_rotation_probability.max(f.structural_over_rotation_probability)
            } else {
                f.over_rotation_probability
            };
            let over = inj.fire(p_over);
            let swap_p = if plan.kind == TopplingKind::RotateSide { 0.0 } else { f.side_swap_probability };
            let swap = inj.fire(swap_p) && !over;
            let travel = if swap { -plan.travel() } else { plan.travel() };
            let (state, pose) = roll_over(&s.model, &s.pose, travel, if over { 2 } else { 1 }, table)?;
            let rec = next.shoe_mut(*shoe);
            rec.state = state;
            rec.pose = pose;
            if state == *expect {
                Outcome::Success
            } else if over {
                Outcome::Failure(FailureKind::OverRotation)
            } else if swap {
                Outcome::Failure(FailureKind::SideSwap)
            } else {
                Outcome::Failure(FailureKind::WrongFinalState)
            }
        }
        Action::Grasp { shoe, grasp } => {
            let s = on_table(scene, *shoe)?;
            if scene.held.is_some() {
                return Err(inapplicable("gripper already holds a shoe"));
            }
            if (grasp.position - s.pose.position).norm() > 5.0 {
                return Err(inapplicable(format!("grasp misses shoe {shoe}")));
            }
            next.held = Some(*shoe);
            Outcome::Success
        }
        Action::PlaceDirect { shoe, target } => {
            if scene.held != Some(*shoe) {
                return Err(inapplicable(format!("shoe {shoe} is not held")));
            }
            let s = scene.shoe(*shoe);
            if ShoeState::from_rotation(&target.rotation()) != Some(s.state) {
                return Err(inapplicable(format!("target orientation does not match the {} state", s.state)));
            }
            let rec = next.shoe_mut(*shoe);
            rec.pose = ShoePose::new(target.position, target.yaw, s.state);
            rec.in_box = true;
            next.held = None;
            next.placed_first.get_or_insert(*shoe);
            Outcome::Success
        }
        Action::PlaceOnEdge { shoe, placement } => {
            if scene.held != Some(*shoe) {
                return Err(inapplicable(format!("shoe {shoe} is not held")));
            }
            let s = scene.shoe(*shoe);
            if s.state != ShoeState::Top {
                return Err(inapplicable(format!("edge placement of a {} shoe", s.state)));
            }
            let o = predict_contact_outcome(&CrossSection::of_shoe(&s.model), placement)?;
            let second = scene.placed_first.is_some();
            let nominal = if second { o.arrested() } else { o.final_state };
            let over = inj.fire(f.over_rotation_probability);
            let state = if over && !second && nominal.is_side() { ShoeState::Bottom } else { nominal };
            let bx = &scene.bx.pose;
            let c = bx.center();
            let u = bx.long_axis();
            let e = placement.contact_point.xy() - c;
            let xy = c + u * e.dot(&u);
            let rec = next.shoe_mut(*shoe);
            rec.state = state;
            rec.pose = landing_pose(&s.model, xy, placement.contact_point.yaw, state, table);
            rec.in_box = true;
            next.held = None;
            next.placed_first.get_or_insert(*shoe);
            if state == o.rolled_toward {
                Outcome::Success
            } else if over && state != nominal {
                Outcome::Failure(FailureKind::OverRotation)
            } else {
                Outcome::Failure(FailureKind::WrongFinalState)
            }
        }
    };
    Ok((next, outcome))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub index: usize,
    pub action: Action,
    pub pre: StateSummary,
    pub post: StateSummary,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplanEvent {
    /// Index of the failed step that triggered the replan.
    pub after_step: usize,
    pub combination: PairCombination,
    pub predicted_topple_count: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionTrace {
    pub steps: Vec<TraceStep>,
    pub replans: Vec<ReplanEvent>,
    /// Why execution stopped early, if it did.
    pub halted: Option<String>,
    pub final_report: TargetConfigReport,
    pub final_scene: SceneState,
}

impl ExecutionTrace {
    pub fn succeeded(&self) -> bool {
        self.final_report.overall
    }

    pub fn executed_topples(&self) -> usize {
        self.steps.iter().filter(|s| s.action.is_reorientation()).count()
    }

    pub fn first_failure(&self) -> Option<&TraceStep> {
        self.steps.iter().find(|s| !s.outcome.is_success())
    }
}

impl fmt::Display for ExecutionTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut replans = self.replans.iter().peekable();
        for s in &self.steps {
            let shoe = s.action.shoe().map_or("-".to_string(), |id| id.to_string());
            writeln!(f, "step={} action={} shoe={} outcome={}", s.index, s.action.kind(), shoe, s.outcome)?;
            while let Some(r) = replans.next_if(|r| r.after_step == s.index) {
                writeln!(
                    f,
                    "replan after_step={} combination={} predicted_topples={}",
                    r.after_step, r.combination, r.predicted_topple_count
                )?;
            }
        }
        if let Some(h) = &self.halted {
            writeln!(f, "halted: {h}")?;
        }
        Ok(())
    }
}

/// Executes `plan` from `scene`. With `replan` set, a failed step triggers
/// a fresh plan from the resulting scene, at most `MAX_REPLANS` times.
pub fn run_plan(scene: &SceneState, plan: &PackingPlan, f: &FailureModel, replan: bool) -> ExecutionTrace {
    let mut inj = FailureInjector::new(f);
    let mut current = scene.clone();
    let mut steps = Vec::new();
    let mut replans = Vec::new();
    let mut halted = None;
    let mut actions = plan.actions.clone();
    let mut i = 0;
    while i < actions.len() {
        let a = actions[i].clone();
        i += 1;
        let pre = current.summary();
        let index = steps.len() + 1;
        match execute_action(&current, &a, f, &mut inj) {
            Ok((next, outcome)) => {
                current = next;
                let failed = !outcome.is_success();
                steps.push(TraceStep { index, action: a, pre, post: current.summary(), outcome });
                if !failed {
                    continue;
                }
                if !replan || replans.len() as u32 >= MAX_REPLANS {
                    halted = Some(format!("step {index} failed"));
                    break;
                }
                match plan_packing(&current, plan.mode) {
                    Ok(p) => {
                        replans.push(ReplanEvent {
                            after_step: index,
                            combination: p.combination,
                            predicted_topple_count: p.predicted_topple_count,
                        });
                        actions = p.actions;
                        i = 0;
                    }
                    Err(e) => {
                        halted = Some(format!("replanning after step {index} failed: {e}"));
                        break;
                    }
                }
            }
            Err(e) => {
                let outcome = Outcome::Failure(FailureKind::Inapplicable(e.to_string()));
                steps.push(TraceStep { index, action: a, pre, post: pre, outcome });
                halted = Some(format!("step {index}: {e}"));
                break;
            }
        }
    }
    let final_report = verify_target_config(&current).unwrap_or_else(|_| TargetConfigReport::failed());
    ExecutionTrace { steps, replans, halted, final_report, final_scene: current }
}

fn states_for(c: PairCombination, rng: &mut ChaCha8Rng) -> [ShoeState; 2] {
    use ShoeState::*;
    let side = |rng: &mut ChaCha8Rng| if rng.random::<bool>() { SideInsideUp } else { SideOutsideUp };
    let pair = match c {
        PairCombination::TopTop => [Top, Top],
        PairCombination::TopSide => [Top, side(rng)],
        PairCombination::TopBottom => [Top, Bottom],
        PairCombination::SideSideMatched => {
            let s = side(rng);
            [s, s.complement().unwrap()]
        }
        PairCombination::SideSideMismatched => {
            let s = side(rng);
            [s, s]
        }
        PairCombination::SideBottom => [side(rng), Bottom],
        PairCombination::BottomBottom => [Bottom, Bottom],
    };
    if rng.random::<bool>() {
        [pair[1], pair[0]]
    } else {
        pair
    }
}

/// Yaw on a 0.001° grid so that scenario files written in degrees with
/// three decimals read back to the same value.
fn grid_yaw(rng: &mut ChaCha8Rng) -> f64 {
    let k: i32 = rng.random_range(-179_999..=180_000);
    (k as f64 / 1000.0).to_radians()
}

fn grid_mm(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let k: i64 = rng.random_range((lo * 10.0) as i64..=(hi * 10.0) as i64);
    k as f64 / 10.0
}

/// Table clearance kept between generated shoes and the box.
const CLEARANCE: f64 = 10.0;

/// Random scene for a catalog shoe: the box in front of the robot, two
/// non-overlapping shoes in the requested combination on the table.
pub fn random_scene(catalog_index: usize, combination: PairCombination, seed: u64) -> Result<SceneState> {
    let entry = catalog_entry(catalog_index)?;
    if combination.has_bottom() && !entry.shoe.has_bottom_state {
        return Err(Error::NoBottomState(entry.shoe.name.clone()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = states_for(combination, &mut rng);
    let box_yaw = grid_yaw(&mut rng);
    let bx = BoxPose::from_center(Point2::new(0.0, 400.0), box_yaw, entry.box_model.length, entry.box_model.width);
    let box_poly = crate::geometry::Polygon::new(bx.corners.to_vec())?;
    for _ in 0..10_000 {
        let shoes = [0, 1].map(|i| {
            let xy = Point2::new(grid_mm(&mut rng, -350.0, 350.0), grid_mm(&mut rng, -250.0, 150.0));
            let yaw = grid_yaw(&mut rng);
            ShoeRecord {
                model: entry.shoe.clone(),
                state: states[i],
                pose: ShoePose::resting(&entry.shoe, xy, yaw, states[i], 0.0),
                in_box: false,
            }
        });
        let (a, b) = (shoes[0].footprint(), shoes[1].footprint());
        if separation(&a, &b) < CLEARANCE || separation(&a, &box_poly) < CLEARANCE || separation(&b, &box_poly) < CLEARANCE {
            continue;
        }
        let scene = SceneState {
            shoes,
            bx: BoxRecord { model: entry.box_model, pose: bx },
            table_height: 0.0,
            gripper: GripperModel::default(),
            held: None,
            placed_first: None,
        };
        scene.validate()?;
        return Ok(scene);
    }
    Err(Error::DegenerateInput("could not place two shoes without overlap"))
}
