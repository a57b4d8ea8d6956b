use thiserror::Error;

use crate::reorientation::TopplingSolution;

/// Errors raised by the planning and perception layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("inconsistent keypoints: {0}")]
    InconsistentKeypoints(&'static str),
    #[error("ambiguous box corners")]
    AmbiguousCorners,
    #[error("heatmap shape mismatch")]
    ShapeMismatch,
    #[error("bad heatmap data: {0}")]
    BadHeatmap(String),
    #[error("no visible keypoints in ground truth")]
    NoVisibleKeypoints,
    #[error("toppling constraint has no solution (required sine {0:.6})")]
    NoSolution(f64),
    #[error("toppling infeasible: {reason}")]
    Infeasible {
        reason: &'static str,
        solution: Option<TopplingSolution>,
    },
    #[error("action not valid in state {0}")]
    WrongState(&'static str),
    #[error("no gravity torque about the edge")]
    NoRotation,
    #[error("shoe of length {shoe:.1} mm does not fit box of length {box_len:.1} mm")]
    ShoeBoxMismatch { shoe: f64, box_len: f64 },
    #[error("unplannable scene: {0}")]
    Unplannable(String),
    #[error("shoe {0} is not placed in the box")]
    NotPlaced(u8),
    #[error("inapplicable action: {0}")]
    InapplicableAction(String),
    #[error("catalog shoe '{0}' has no bottom state")]
    NoBottomState(String),
    #[error("catalog index {0} out of range")]
    UnknownCatalogEntry(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
