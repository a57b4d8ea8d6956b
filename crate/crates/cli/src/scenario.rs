//! Scenario files: a mandatory `packpair-scenario v1` header line followed by
//! a TOML body.
//!
//! ```text
//! packpair-scenario v1
//! mode = "with"
//! table_height = 0.0
//! gripper_length = 200.0
//! seed = 7
//!
//! [box]
//! catalog = "sports"
//! center = [0.0, 400.0]
//! yaw_deg = 15.0
//!
//! [[shoes]]
//! catalog = "sports"
//! state = "top"
//! position = [-150.0, -40.0]
//! yaw_deg = 30.0
//!
//! [[shoes]]
//! name = "custom"
//! length = 270.0
//! width = 95.0
//! height = 105.0
//! mass = 250.0
//! softness = "soft"
//! state = "side-inside-up"
//! position = [180.0, -60.0]
//! yaw_deg = -75.5
//!
//! [failure]
//! over_rotation_probability = 0.1
//! ```

use std::fmt;
use std::ops::Range;
use std::path::Path;

use serde::Deserialize;
use toml::Spanned;

use packpair_core::model::{catalog, catalog_index};
use packpair_core::*;
use std::result::Result;

pub const HEADER: &str = "packpair-scenario v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub scene: SceneState,
    pub mode: Mode,
    pub failure: FailureModel,
}

/// Input error with a 1-based position in the scenario file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for InputError {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    mode: Option<Spanned<String>>,
    table_height: Option<f64>,
    gripper_length: Option<Spanned<f64>>,
    seed: Option<u64>,
    #[serde(rename = "box")]
    bx: Spanned<RawBox>,
    shoes: Spanned<Vec<Spanned<RawShoe>>>,
    failure: Option<Spanned<RawFailure>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBox {
    catalog: Option<Spanned<String>>,
    length: Option<f64>,
    width: Option<f64>,
    wall_height: Option<f64>,
    center: Option<[f64; 2]>,
    yaw_deg: Option<f64>,
    /// Corners counter-clockwise, starting with the two on the hinge side.
    corners: Option<[[f64; 2]; 4]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawShoe {
    catalog: Option<Spanned<String>>,
    name: Option<String>,
    length: Option<f64>,
    width: Option<f64>,
    height: Option<f64>,
    mass: Option<f64>,
    softness: Option<Spanned<String>>,
    has_bottom_state: Option<bool>,
    hard_side_to_top: Option<bool>,
    state: Spanned<String>,
    position: [f64; 2],
    yaw_deg: f64,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawFailure {
    keypoint_noise_sigma: Option<f64>,
    side_swap_probability: Option<f64>,
    over_rotation_probability: Option<f64>,
    structural_over_rotation_probability: Option<f64>,
    max_injected_failures: Option<u32>,
}

struct Locator<'a> {
    body: &'a str,
}

impl Locator<'_> {
    /// Position of a body byte offset, counting the header line.
    fn at(&self, offset: usize, message: impl Into<String>) -> InputError {
        let before = &self.body[..offset.min(self.body.len())];
        let line = before.matches('\n').count() + 2;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        InputError { line, column, message: message.into() }
    }

    fn span(&self, span: Range<usize>, message: impl Into<String>) -> InputError {
        self.at(span.start, message)
    }
}

/// Parses a scenario document.
pub fn parse(text: &str) -> Result<Scenario, InputError> {
    let (first, body) = match text.find('\n') {
        Some(i) => (&text[..i], &text[i + 1..]),
        None => (text, ""),
    };
    if first.trim_end() != HEADER {
        return Err(InputError { line: 1, column: 1, message: format!("expected header line '{HEADER}'") });
    }
    let loc = Locator { body };
    let raw: RawScenario = toml::from_str(body).map_err(|e| {
        let msg = e.message().trim().to_string();
        match e.span() {
            Some(s) => loc.span(s, msg),
            None => InputError { line: 2, column: 1, message: msg },
        }
    })?;

    let mode = match &raw.mode {
        None => Mode::WithContactMethod,
        Some(m) => Mode::from_label(m.get_ref())
            .ok_or_else(|| loc.span(m.span(), format!("mode must be 'with' or 'without', got '{}'", m.get_ref())))?,
    };
    let table_height = raw.table_height.unwrap_or(0.0);
    if !table_height.is_finite() {
        return Err(InputError { line: 2, column: 1, message: "table_height must be finite".into() });
    }
    let gripper = match &raw.gripper_length {
        None => GripperModel::default(),
        Some(g) => GripperModel::new(*g.get_ref()).map_err(|e| loc.span(g.span(), e.to_string()))?,
    };

    let bx_span = raw.bx.span();
    let rb = raw.bx.into_inner();
    let box_model = match &rb.catalog {
        Some(name) => {
            if rb.length.is_some() || rb.width.is_some() || rb.wall_height.is_some() {
                return Err(loc.span(name.span(), "give either a catalog box or explicit dimensions"));
            }
            let i = catalog_index(name.get_ref())
                .ok_or_else(|| loc.span(name.span(), format!("unknown catalog entry '{}'", name.get_ref())))?;
            catalog()[i].box_model
        }
        None => match (rb.length, rb.width, rb.wall_height) {
            (Some(length), Some(width), Some(wall_height)) => BoxModel { length, width, wall_height },
            _ => return Err(loc.span(bx_span, "box needs catalog or length, width and wall_height")),
        },
    };
    box_model.validate().map_err(|e| loc.span(bx_span.clone(), e.to_string()))?;
    let box_pose = match (rb.center, rb.yaw_deg, rb.corners) {
        (Some(c), Some(yaw), None) => {
            BoxPose::from_center(Point2::new(c[0], c[1]), yaw.to_radians(), box_model.length, box_model.width)
        }
        (None, None, Some(cs)) => BoxPose::from_corners(cs.map(|c| Point2::new(c[0], c[1]))),
        _ => return Err(loc.span(bx_span, "box pose needs either center and yaw_deg, or corners")),
    };
    if box_pose.corners.iter().any(|c| !c.x.is_finite() || !c.y.is_finite()) {
        return Err(loc.span(bx_span, "box pose must be finite"));
    }

    let shoes_span = raw.shoes.span();
    let raw_shoes = raw.shoes.into_inner();
    if raw_shoes.len() != 2 {
        return Err(loc.span(shoes_span, format!("expected exactly 2 shoes, found {}", raw_shoes.len())));
    }
    let mut shoes = Vec::with_capacity(2);
    for s in raw_shoes {
        shoes.push(shoe_record(&loc, s, table_height)?);
    }
    let shoes: [ShoeRecord; 2] = shoes.try_into().expect("two shoes");

    let failure = match raw.failure {
        None => FailureModel { seed: raw.seed.unwrap_or(0), ..Default::default() },
        Some(f) => {
            let span = f.span();
            let f = f.into_inner();
            let fm = FailureModel {
                keypoint_noise_sigma: f.keypoint_noise_sigma.unwrap_or(0.0),
                side_swap_probability: f.side_swap_probability.unwrap_or(0.0),
                over_rotation_probability: f.over_rotation_probability.unwrap_or(0.0),
                structural_over_rotation_probability: f.structural_over_rotation_probability.unwrap_or(0.0),
                max_injected_failures: f.max_injected_failures,
                seed: raw.seed.unwrap_or(0),
            };
            fm.validate().map_err(|e| loc.span(span, e.to_string()))?;
            fm
        }
    };

    let scene = SceneState {
        shoes,
        bx: BoxRecord { model: box_model, pose: box_pose },
        table_height,
        gripper,
        held: None,
        placed_first: None,
    };
    scene.validate().map_err(|e| loc.span(shoes_span, e.to_string()))?;
    Ok(Scenario { scene, mode, failure })
}

fn shoe_record(loc: &Locator<'_>, s: Spanned<RawShoe>, table_height: f64) -> Result<ShoeRecord, InputError> {
    let span = s.span();
    let s = s.into_inner();
    let explicit = s.name.is_some()
        || s.length.is_some()
        || s.width.is_some()
        || s.height.is_some()
        || s.mass.is_some()
        || s.softness.is_some();
    let model = match &s.catalog {
        Some(name) => {
            if explicit || s.has_bottom_state.is_some() || s.hard_side_to_top.is_some() {
                return Err(loc.span(name.span(), "give either a catalog shoe or explicit dimensions"));
            }
            let i = catalog_index(name.get_ref())
                .ok_or_else(|| loc.span(name.span(), format!("unknown catalog entry '{}'", name.get_ref())))?;
            catalog()[i].shoe.clone()
        }
        None => {
            let (Some(length), Some(width), Some(height), Some(mass)) = (s.length, s.width, s.height, s.mass) else {
                return Err(loc.span(span, "shoe needs catalog or length, width, height and mass"));
            };
            let softness = match &s.softness {
                None => Softness::Rigid,
                Some(v) => v
                    .get_ref()
                    .parse::<Softness>()
                    .map_err(|_| loc.span(v.span(), format!("unknown softness '{}'", v.get_ref())))?,
            };
            let mut m = ShoeModel::new(s.name.as_deref().unwrap_or("custom"), length, width, height, mass, softness);
            if let Some(b) = s.has_bottom_state {
                m.has_bottom_state = b;
            }
            if let Some(h) = s.hard_side_to_top {
                m.hard_side_to_top = h;
            }
            m.validate().map_err(|e| loc.span(span.clone(), e.to_string()))?;
            m
        }
    };
    let state = ShoeState::from_label(s.state.get_ref())
        .ok_or_else(|| loc.span(s.state.span(), format!("unknown state '{}'", s.state.get_ref())))?;
    if state == ShoeState::Bottom && !model.has_bottom_state {
        return Err(loc.span(s.state.span(), format!("shoe '{}' has no bottom state", model.name)));
    }
    if !(s.position.iter().all(|v| v.is_finite()) && s.yaw_deg.is_finite()) {
        return Err(loc.span(span, "shoe pose must be finite"));
    }
    let pose = ShoePose::resting(
        &model,
        Point2::new(s.position[0], s.position[1]),
        s.yaw_deg.to_radians(),
        state,
        table_height,
    );
    Ok(ShoeRecord { model, state, pose, in_box: false })
}

pub fn load(path: &Path) -> Result<Scenario, InputError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| InputError { line: 0, column: 0, message: format!("{}: {e}", path.display()) })?;
    parse(&text)
}

/// Degrees that read back to exactly `rad`, preferring three decimals.
fn degrees(rad: f64) -> String {
    let deg = rad.to_degrees();
    let short = format!("{deg:.3}");
    if short.parse::<f64>().map(f64::to_radians) == Ok(rad) {
        return short;
    }
    format!("{deg:?}")
}

fn pair(p: Point2) -> String {
    format!("[{:?}, {:?}]", p.x, p.y)
}

/// Serializes a scenario. Catalog shoes and boxes are written by name.
pub fn write(s: &Scenario) -> String {
    let scene = &s.scene;
    let mut out = String::new();
    let mut line = |l: String| {
        out.push_str(&l);
        out.push('\n');
    };
    line(HEADER.to_string());
    line(format!("mode = \"{}\"", s.mode.label()));
    line(format!("table_height = {:?}", scene.table_height));
    line(format!("gripper_length = {:?}", scene.gripper.length));
    line(format!("seed = {}", s.failure.seed));
    line(String::new());
    line("[box]".into());
    let cat = catalog();
    match cat.iter().find(|e| e.box_model == scene.bx.model) {
        Some(e) => line(format!("catalog = \"{}\"", e.shoe.name)),
        None => {
            line(format!("length = {:?}", scene.bx.model.length));
            line(format!("width = {:?}", scene.bx.model.width));
            line(format!("wall_height = {:?}", scene.bx.model.wall_height));
        }
    }
    let c = scene.bx.pose.corners;
    line(format!("corners = [{}, {}, {}, {}]", pair(c[0]), pair(c[1]), pair(c[2]), pair(c[3])));
    for shoe in &scene.shoes {
        line(String::new());
        line("[[shoes]]".into());
        let m = &shoe.model;
        match cat.iter().find(|e| &e.shoe == m) {
            Some(e) => line(format!("catalog = \"{}\"", e.shoe.name)),
            None => {
                line(format!("name = \"{}\"", m.name.escape_default()));
                line(format!("length = {:?}", m.length));
                line(format!("width = {:?}", m.width));
                line(format!("height = {:?}", m.height));
                line(format!("mass = {:?}", m.mass));
                line(format!("softness = \"{}\"", m.softness));
                line(format!("has_bottom_state = {}", m.has_bottom_state));
                line(format!("hard_side_to_top = {}", m.hard_side_to_top));
            }
        }
        line(format!("state = \"{}\"", shoe.state.label()));
        line(format!("position = {}", pair(shoe.pose.xy())));
        line(format!("yaw_deg = {}", degrees(shoe.pose.yaw)));
    }
    let f = &s.failure;
    line(String::new());
    line("[failure]".into());
    line(format!("keypoint_noise_sigma = {:?}", f.keypoint_noise_sigma));
    line(format!("side_swap_probability = {:?}", f.side_swap_probability));
    line(format!("over_rotation_probability = {:?}", f.over_rotation_probability));
    line(format!("structural_over_rotation_probability = {:?}", f.structural_over_rotation_probability));
    if let Some(n) = f.max_injected_failures {
        line(format!("max_injected_failures = {n}"));
    }
    out
}
