//! World state shared by the planner and the simulator.

use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::{convex_hull, rot90, Point2, Polygon, Vec2};
use crate::model::{BoxModel, ShoeModel};
use crate::motion::world_corners;
use crate::perception::{BoxPose, ShoePose, ShoeState};
use crate::reorientation::GripperModel;

/// Shoe identifier, 1 or 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ShoeId(u8);

impl ShoeId {
    pub const ONE: ShoeId = ShoeId(1);
    pub const TWO: ShoeId = ShoeId(2);
    pub const BOTH: [ShoeId; 2] = [ShoeId::ONE, ShoeId::TWO];

    pub fn new(id: u8) -> Result<Self> {
        match id {
            1 | 2 => Ok(ShoeId(id)),
            _ => Err(Error::DegenerateInput("shoe id must be 1 or 2")),
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn other(self) -> ShoeId {
        ShoeId(3 - self.0)
    }
}

impl fmt::Display for ShoeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShoeRecord {
    pub model: ShoeModel,
    pub state: ShoeState,
    pub pose: ShoePose,
    pub in_box: bool,
}

impl ShoeRecord {
    /// Table-plane footprint of the shoe's bounding box.
    pub fn footprint(&self) -> Polygon {
        let pts: Vec<Point2> = world_corners(&self.model, &self.pose).iter().map(|c| Point2::new(c.x, c.y)).collect();
        convex_hull(&pts).expect("a shoe footprint has positive area")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxRecord {
    pub model: BoxModel,
    pub pose: BoxPose,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneState {
    pub shoes: [ShoeRecord; 2],
    pub bx: BoxRecord,
    pub table_height: f64,
    pub gripper: GripperModel,
    /// Shoe currently in the gripper.
    pub held: Option<ShoeId>,
    /// First shoe that went into the box.
    pub placed_first: Option<ShoeId>,
}

impl SceneState {
    pub fn shoe(&self, id: ShoeId) -> &ShoeRecord {
        &self.shoes[id.index()]
    }

    pub fn shoe_mut(&mut self, id: ShoeId) -> &mut ShoeRecord {
        &mut self.shoes[id.index()]
    }

    /// Checks models, and that shoes still on the table do not overlap.
    pub fn validate(&self) -> Result<()> {
        self.bx.model.validate()?;
        for s in &self.shoes {
            s.model.validate()?;
            if !s.pose.position.iter().all(|v| v.is_finite()) || !s.pose.yaw.is_finite() {
                return Err(Error::DegenerateInput("shoe pose must be finite"));
            }
        }
        if !self.table_height.is_finite() {
            return Err(Error::DegenerateInput("table height must be finite"));
        }
        if self.shoes.iter().all(|s| !s.in_box) && separation(&self.shoes[0].footprint(), &self.shoes[1].footprint()) < 0.0 {
            return Err(Error::DegenerateInput("shoes overlap"));
        }
        Ok(())
    }

    pub fn summary(&self) -> StateSummary {
        StateSummary {
            shoes: [0, 1].map(|i| {
                let s = &self.shoes[i];
                ShoeSummary { state: s.state, xy: s.pose.xy(), yaw: s.pose.yaw, in_box: s.in_box }
            }),
            held: self.held,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShoeSummary {
    pub state: ShoeState,
    pub xy: Point2,
    pub yaw: f64,
    pub in_box: bool,
}

/// Compact per-step snapshot for traces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateSummary {
    pub shoes: [ShoeSummary; 2],
    pub held: Option<ShoeId>,
}

impl fmt::Display for StateSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.shoes.iter().enumerate() {
            write!(
                f,
                "{}:{}@({:.2},{:.2},{:.2}){} ",
                i + 1,
                s.state,
                s.xy.x,
                s.xy.y,
                s.yaw.to_degrees(),
                if s.in_box { "[box]" } else { "" }
            )?;
        }
        match self.held {
            Some(id) => write!(f, "held:{id}"),
            None => write!(f, "held:-"),
        }
    }
}

/// Signed separation of two convex polygons along the best separating axis;
/// negative means they overlap.
pub fn separation(a: &Polygon, b: &Polygon) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for poly in [a, b] {
        let n = poly.vertices.len();
        for i in 0..n {
            let e = poly.vertices[(i + 1) % n] - poly.vertices[i];
            let axis: Vec2 = rot90(e).normalize();
            let proj = |p: &Polygon| {
                p.vertices.iter().map(|v| v.coords.dot(&axis)).fold((f64::MAX, f64::MIN), |(lo, hi), x| (lo.min(x), hi.max(x)))
            };
            let (alo, ahi) = proj(a);
            let (blo, bhi) = proj(b);
            best = best.max((blo - ahi).max(alo - bhi));
        }
    }
    best
}
