//! Die floorplans: named rectangular blocks tiling a die outline.
//!
//! Three ways to obtain one: a regular template ([`generate_template`]), a
//! slicing packer driven by per-unit areas ([`generate_from_areas`]), or a
//! hand-written file ([`parse_floorplan`]).

mod format;
mod generate;
mod raster;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ParseError;
use crate::stack::DieOutline;

pub use format::{emit_floorplan, parse_floorplan, parse_floorplan_in};
pub use generate::{fill_gaps, generate_from_areas, generate_template, generate_template_from, AreaBudget, AreaEntry, Template};
pub use raster::{rasterize, Rasterization};

/// Pairwise overlap tolerance, m².
pub const OVERLAP_TOL: f64 = 1e-15;
/// Relative tolerance on total block area against the outline area.
pub const COVERAGE_TOL: f64 = 1e-9;
/// Absolute tolerance for block edges against the outline, m.
pub const EDGE_TOL: f64 = 1e-12;
/// Prefix reserved for zero-power whitespace blocks.
pub const FILLER_PREFIX: &str = "_fill_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub name: String,
    pub width: f64,
    pub height: f64,
    pub left_x: f64,
    pub bottom_y: f64,
}

impl Block {
    pub fn new(name: impl Into<String>, width: f64, height: f64, left_x: f64, bottom_y: f64) -> Self {
        Block { name: name.into(), width, height, left_x, bottom_y }
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn right(&self) -> f64 {
        self.left_x + self.width
    }

    pub fn top(&self) -> f64 {
        self.bottom_y + self.height
    }

    pub fn overlap_area(&self, other: &Block) -> f64 {
        let w = self.right().min(other.right()) - self.left_x.max(other.left_x);
        let h = self.top().min(other.top()) - self.bottom_y.max(other.bottom_y);
        if w > 0.0 && h > 0.0 {
            w * h
        } else {
            0.0
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.left_x && x < self.right() && y >= self.bottom_y && y < self.top()
    }

    pub fn is_filler(&self) -> bool {
        self.name.starts_with(FILLER_PREFIX)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Floorplan {
    pub outline: DieOutline,
    pub blocks: Vec<Block>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FloorplanError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{}duplicate block name '{name}'", at(*line))]
    DuplicateName { name: String, line: Option<usize> },
    #[error("{}block '{name}' has non-positive or non-finite dimensions", at(*line))]
    InvalidBlock { name: String, line: Option<usize> },
    #[error("{}blocks '{first}' and '{second}' overlap by {area:e} m2", at(*line))]
    Overlap { first: String, second: String, area: f64, line: Option<usize> },
    #[error("{}block '{name}' lies outside the die outline", at(*line))]
    OutOfOutline { name: String, line: Option<usize> },
    #[error("blocks leave {missing_area:e} m2 of the {outline_area:e} m2 die uncovered")]
    CoverageGap { missing_area: f64, outline_area: f64 },
    #[error("floorplan has no blocks")]
    Empty,
    #[error("area budget: {0}")]
    Budget(String),
}

fn at(line: Option<usize>) -> String {
    line.map(|l| format!("line {l}: ")).unwrap_or_default()
}

impl Floorplan {
    /// Builds a floorplan and checks every invariant.
    pub fn new(outline: DieOutline, blocks: Vec<Block>) -> Result<Floorplan, FloorplanError> {
        let fp = Floorplan { outline, blocks };
        fp.check_with_lines(None)?;
        Ok(fp)
    }

    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn block_names(&self) -> impl Iterator<Item = &str> {
        self.blocks.iter().map(|b| b.name.as_str())
    }

    pub fn total_area(&self) -> f64 {
        self.blocks.iter().map(Block::area).sum()
    }

    pub fn check(&self) -> Result<(), FloorplanError> {
        self.check_with_lines(None)
    }

    /// `lines[i]` is the source line of block `i`, when known.
    pub(crate) fn check_with_lines(&self, lines: Option<&[usize]>) -> Result<(), FloorplanError> {
        let line = |i: usize| lines.map(|l| l[i]);
        if self.blocks.is_empty() {
            return Err(FloorplanError::Empty);
        }
        let o = &self.outline;
        for (i, b) in self.blocks.iter().enumerate() {
            let finite = [b.width, b.height, b.left_x, b.bottom_y].iter().all(|v| v.is_finite());
            if !finite || b.width <= 0.0 || b.height <= 0.0 {
                return Err(FloorplanError::InvalidBlock { name: b.name.clone(), line: line(i) });
            }
            if self.blocks[..i].iter().any(|p| p.name == b.name) {
                return Err(FloorplanError::DuplicateName { name: b.name.clone(), line: line(i) });
            }
            if b.left_x < -EDGE_TOL
                || b.bottom_y < -EDGE_TOL
                || b.right() > o.width + EDGE_TOL
                || b.top() > o.height + EDGE_TOL
            {
                return Err(FloorplanError::OutOfOutline { name: b.name.clone(), line: line(i) });
            }
        }
        for (i, a) in self.blocks.iter().enumerate() {
            for b in &self.blocks[i + 1..] {
                let area = a.overlap_area(b);
                if area > OVERLAP_TOL {
                    let j = self.blocks.iter().position(|x| std::ptr::eq(x, b)).unwrap();
                    return Err(FloorplanError::Overlap {
                        first: a.name.clone(),
                        second: b.name.clone(),
                        area,
                        line: line(j),
                    });
                }
            }
        }
        let total = self.total_area();
        let outline_area = o.area();
        if (total - outline_area).abs() > COVERAGE_TOL * outline_area {
            return Err(FloorplanError::CoverageGap { missing_area: outline_area - total, outline_area });
        }
        Ok(())
    }
}

impl fmt::Display for Floorplan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&emit_floorplan(self))
    }
}
