//! Heatmap losses and keypoint error metrics.
//!
//! Binary heatmap format: little-endian `u32` channels, height, width,
//! followed by `channels × height × width` little-endian `f32` scores,
//! row-major per channel.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::perception::KeypointSet;

pub const DEFAULT_ALPHA: f64 = 0.618;

#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    height: usize,
    width: usize,
    scores: Vec<f32>,
}

impl Heatmap {
    pub fn new(height: usize, width: usize, scores: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 || scores.len() != height * width {
            return Err(Error::ShapeMismatch);
        }
        if let Some(bad) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::BadHeatmap(format!("score {bad} outside [0, 1]")));
        }
        Ok(Self { height, width, scores })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self { height, width, scores: vec![0.0; height * width] }
    }

    pub fn from_rows(rows: &[&[f32]]) -> Result<Self> {
        let width = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::ShapeMismatch);
        }
        Self::new(rows.len(), width, rows.concat())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn scores(&self) -> &[f32] {
        &self.scores
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.scores[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f32) {
        assert!((0.0..=1.0).contains(&v), "score outside [0, 1]");
        self.scores[row * self.width + col] = v;
    }

    pub fn max(&self) -> f32 {
        self.scores.iter().copied().fold(0.0, f32::max)
    }

    /// (row, col) of the maximum; ties go to the smallest row-major index.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, &s) in self.scores.iter().enumerate() {
            if s > self.scores[best] {
                best = i;
            }
        }
        (best / self.width, best % self.width)
    }

    /// Argmax as (col / width, row / height).
    pub fn normalized_argmax(&self) -> (f64, f64) {
        let (r, c) = self.argmax();
        (c as f64 / self.width as f64, r as f64 / self.height as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapStack {
    maps: Vec<Heatmap>,
}

impl HeatmapStack {
    pub fn new(maps: Vec<Heatmap>) -> Result<Self> {
        let first = maps.first().ok_or(Error::ShapeMismatch)?;
        if maps.iter().any(|m| m.height != first.height || m.width != first.width) {
            return Err(Error::ShapeMismatch);
        }
        Ok(Self { maps })
    }

    pub fn maps(&self) -> &[Heatmap] {
        &self.maps
    }

    pub fn channels(&self) -> usize {
        self.maps.len()
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.maps.len(), self.maps[0].height, self.maps[0].width)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 {
            return Err(Error::BadHeatmap("truncated header".into()));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap()) as usize;
        let (c, h, w) = (word(0), word(1), word(2));
        if c == 0 || h == 0 || w == 0 {
            return Err(Error::BadHeatmap(format!("bad header {c}x{h}x{w}")));
        }
        let n = c
            .checked_mul(h)
            .and_then(|v| v.checked_mul(w))
            .ok_or_else(|| Error::BadHeatmap("header overflow".into()))?;
        let body = &bytes[12..];
        if n.checked_mul(4) != Some(body.len()) {
            return Err(Error::BadHeatmap(format!(
                "header declares {c}x{h}x{w} values, body holds {} bytes",
                body.len()
            )));
        }
        let values: Vec<f32> =
            body.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect();
        let maps = values
            .chunks_exact(h * w)
            .map(|v| Heatmap::new(h, w, v.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(maps)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let (c, h, w) = self.shape();
        let mut out = Vec::with_capacity(12 + 4 * c * h * w);
        for v in [c, h, w] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        for m in &self.maps {
            for s in &m.scores {
                out.extend_from_slice(&s.to_le_bytes());
            }
        }
        out
    }

    pub fn read(path: &Path) -> std::io::Result<Result<Self>> {
        Ok(Self::from_bytes(&std::fs::read(path)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    alpha: f64,
}

impl LossWeights {
    pub fn new(alpha: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&alpha) {
            Ok(Self { alpha })
        } else {
            Err(Error::DegenerateInput("alpha outside [0, 1]"))
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { alpha: DEFAULT_ALPHA }
    }
}

fn check_shapes(a: &HeatmapStack, b: &HeatmapStack) -> Result<()> {
    if a.shape() == b.shape() {
        Ok(())
    } else {
        Err(Error::ShapeMismatch)
    }
}

pub fn mse_loss(truth: &HeatmapStack, pred: &HeatmapStack) -> Result<f64> {
    check_shapes(truth, pred)?;
    let (c, h, w) = truth.shape();
    let sum: f64 = truth
        .maps
        .iter()
        .zip(&pred.maps)
        .flat_map(|(t, p)| t.scores.iter().zip(&p.scores))
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            d * d
        })
        .sum();
    Ok(sum / (c * h * w) as f64)
}

/// Mean normalized argmax distance over channels whose truth peaks at 1.
pub fn ned_loss(truth: &HeatmapStack, pred: &HeatmapStack) -> Result<f64> {
    check_shapes(truth, pred)?;
    let mut total = 0.0;
    let mut count = 0usize;
    for (t, p) in truth.maps.iter().zip(&pred.maps) {
        if t.max() != 1.0 {
            continue;
        }
        let (tx, ty) = t.normalized_argmax();
        let (px, py) = p.normalized_argmax();
        total += (tx - px).hypot(ty - py);
        count += 1;
    }
    if count == 0 {
        return Err(Error::NoVisibleKeypoints);
    }
    Ok(total / count as f64)
}

pub fn overall_loss(truth: &HeatmapStack, pred: &HeatmapStack, w: LossWeights) -> Result<f64> {
    let mse = mse_loss(truth, pred)?;
    let ned = ned_loss(truth, pred)?;
    Ok(combine(mse, ned, w))
}

pub fn combine(mse: f64, ned: f64, w: LossWeights) -> f64 {
    w.alpha * mse + (1.0 - w.alpha) * ned
}

/// Mean distance over mutually visible keypoints divided by the truth
/// toe-heel distance.
pub fn dimensionless_keypoint_error(pred: &KeypointSet, truth: &KeypointSet) -> Result<f64> {
    dimensionless_error(&pred.as_array(), &truth.as_array())
}

/// As [`dimensionless_keypoint_error`] over channel arrays in canonical
/// order; channels 0 and 1 (toe, heel) must be visible in `truth`.
pub fn dimensionless_error(pred: &[Option<Vec3>; 5], truth: &[Option<Vec3>; 5]) -> Result<f64> {
    let (toe, heel) = match (truth[0], truth[1]) {
        (Some(t), Some(h)) => (t, h),
        _ => return Err(Error::DegenerateInput("truth toe and heel must be visible")),
    };
    let scale = (toe - heel).norm();
    if scale == 0.0 {
        return Err(Error::DegenerateInput("truth toe and heel coincide"));
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for (p, t) in pred.iter().zip(truth) {
        if let (Some(p), Some(t)) = (p, t) {
            sum += (p - t).norm();
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::NoVisibleKeypoints);
    }
    Ok(sum / n as f64 / scale)
}

/// Keypoint error read off heatmap peaks in pixel units; channels whose
/// truth max is below 1 are treated as invisible.
pub fn heatmap_keypoint_error(truth: &HeatmapStack, pred: &HeatmapStack) -> Result<f64> {
    check_shapes(truth, pred)?;
    if truth.channels() != 5 {
        return Err(Error::ShapeMismatch);
    }
    let peaks = |s: &HeatmapStack, gate: &HeatmapStack| -> [Option<Vec3>; 5] {
        std::array::from_fn(|k| {
            (gate.maps[k].max() == 1.0).then(|| {
                let (r, c) = s.maps[k].argmax();
                Vec3::new(c as f64, r as f64, 0.0)
            })
        })
    };
    dimensionless_error(&peaks(pred, truth), &peaks(truth, truth))
}
