//! Planning core for packing a pair of shoes into a box: keypoint
//! post-processing, toppling and edge-contact reorientation, the pair
//! packing planner, and a quasi-static simulator that executes plans.

pub mod contact;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod model;
pub mod motion;
pub mod perception;
pub mod planner;
pub mod reorientation;
pub mod scene;
pub mod simulator;

pub use error::{Error, Result};
pub use geometry::{Point2, Pose, Vec2, Vec3};
pub use model::{catalog, catalog_entry, BoxModel, CatalogEntry, ShoeModel, Softness};
pub use perception::{BoxPose, KeypointSet, ShoePose, ShoeState};
pub use planner::{Action, Mode, PackingPlan, PairCombination, TargetConfigReport};
pub use reorientation::{GripperModel, TopplingKind, TopplingPlan};
pub use scene::{BoxRecord, SceneState, ShoeId, ShoeRecord};
pub use simulator::{ExecutionTrace, FailureModel, Outcome};
