//! Shoe and box models plus the four-pair catalog.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Softness {
    Rigid,
    Soft,
    Elastic,
}

impl Softness {
    pub fn as_str(self) -> &'static str {
        match self {
            Softness::Rigid => "rigid",
            Softness::Soft => "soft",
            Softness::Elastic => "elastic",
        }
    }
}

impl std::str::FromStr for Softness {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "rigid" => Ok(Softness::Rigid),
            "soft" => Ok(Softness::Soft),
            "elastic" => Ok(Softness::Elastic),
            other => Err(format!("unknown softness '{other}'")),
        }
    }
}

impl fmt::Display for Softness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A shoe approximated by its bounding box: `length` along heel→toe,
/// `width` across the inside/outside faces, `height` from sole to opening.
#[derive(Debug, Clone, PartialEq)]
pub struct ShoeModel {
    pub name: String,
    pub length: f64,
    pub width: f64,
    pub height: f64,
    pub mass: f64,
    pub softness: Softness,
    /// False for shoes that cannot rest sole-up.
    pub has_bottom_state: bool,
    /// Side→top toppling is structurally hard (high heels).
    pub hard_side_to_top: bool,
}

impl ShoeModel {
    pub fn new(name: &str, length: f64, width: f64, height: f64, mass: f64, softness: Softness) -> Self {
        Self {
            name: name.to_string(),
            length,
            width,
            height,
            mass,
            softness,
            has_bottom_state: true,
            hard_side_to_top: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [self.length, self.width, self.height, self.mass];
        if dims.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(Error::DegenerateInput("shoe dimensions and mass must be positive"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxModel {
    pub length: f64,
    pub width: f64,
    pub wall_height: f64,
}

impl BoxModel {
    pub fn validate(&self) -> Result<()> {
        let dims = [self.length, self.width, self.wall_height];
        if dims.iter().all(|v| v.is_finite() && *v > 0.0) && self.length >= self.width {
            Ok(())
        } else {
            Err(Error::DegenerateInput("box dimensions must be positive, length ≥ width"))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub shoe: ShoeModel,
    pub box_model: BoxModel,
}

pub const CATALOG_LEN: usize = 4;

/// Four shoe/box pairs. Lengths, masses and box sizes follow the
/// experimental set; widths and heights are nominal.
pub fn catalog() -> Vec<CatalogEntry> {
    let mut high_heel = ShoeModel::new("high-heeled", 255.0, 80.0, 100.0, 255.0, Softness::Rigid);
    high_heel.has_bottom_state = false;
    high_heel.hard_side_to_top = true;
    let mut leather = ShoeModel::new("leather", 290.0, 105.0, 110.0, 398.0, Softness::Rigid);
    leather.has_bottom_state = false;
    vec![
        CatalogEntry {
            shoe: ShoeModel::new("sports", 281.0, 100.0, 110.0, 245.0, Softness::Soft),
            box_model: BoxModel { length: 300.0, width: 220.0, wall_height: 110.0 },
        },
        CatalogEntry {
            shoe: high_heel,
            box_model: BoxModel { length: 300.0, width: 180.0, wall_height: 90.0 },
        },
        CatalogEntry {
            shoe: leather,
            box_model: BoxModel { length: 330.0, width: 205.0, wall_height: 115.0 },
        },
        CatalogEntry {
            shoe: ShoeModel::new("sandal", 266.5, 100.0, 100.0, 235.0, Softness::Elastic),
            box_model: BoxModel { length: 315.0, width: 190.0, wall_height: 110.0 },
        },
    ]
}

pub fn catalog_entry(index: usize) -> Result<CatalogEntry> {
    catalog().into_iter().nth(index).ok_or(Error::UnknownCatalogEntry(index))
}

pub fn catalog_index(name: &str) -> Option<usize> {
    catalog().iter().position(|e| e.shoe.name == name)
}
