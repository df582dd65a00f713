//! Microchannel cooling layers: coolant properties, cell-quantized channel
//! geometry, and flow routing from inlets to outlets.
//!
//! A pattern marks every grid cell of a microchannel layer as wall or fluid;
//! each fluid cell carries one flow direction. A lane is the chain of fluid
//! cells followed from an inlet cell to an outlet cell; channels wider than
//! one cell consist of several parallel lanes.

mod format;
mod generate;
mod validate;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ParseError;

pub use format::{emit_pattern, parse_pattern};
pub use generate::{generate_pattern, PatternStyle};
pub use validate::{channel_paths, validate_pattern, PatternViolation};

/// Nusselt number for laminar, fully developed flow (constant heat flux).
pub const LAMINAR_NUSSELT: f64 = 4.36;
/// W/(m·K)
pub const WATER_CONDUCTIVITY: f64 = 0.6;
/// J/(m³·K)
pub const WATER_HEAT_CAPACITY: f64 = 4.18e6;
pub const DEFAULT_INLET_K: f64 = 300.0;
/// m³/s per lane.
pub const DEFAULT_FLOW_PER_CHANNEL: f64 = 1.0e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coolant {
    pub name: String,
    /// J/(m³·K)
    pub volumetric_heat_capacity: f64,
    /// K
    pub inlet_temperature: f64,
    /// m³/s
    pub volumetric_flow_rate_per_channel: f64,
    /// W/(m²·K)
    pub convection_coefficient: f64,
}

impl Coolant {
    /// Water with the laminar convection coefficient of a rectangular
    /// channel `channel_width × layer_thickness`.
    pub fn water(channel_width: f64, layer_thickness: f64) -> Coolant {
        Coolant {
            name: "water".into(),
            volumetric_heat_capacity: WATER_HEAT_CAPACITY,
            inlet_temperature: DEFAULT_INLET_K,
            volumetric_flow_rate_per_channel: DEFAULT_FLOW_PER_CHANNEL,
            convection_coefficient: laminar_htc(channel_width, layer_thickness, WATER_CONDUCTIVITY),
        }
    }

    /// Heat-capacity rate of one lane, W/K.
    pub fn capacity_rate(&self) -> f64 {
        self.volumetric_heat_capacity * self.volumetric_flow_rate_per_channel
    }

    pub fn is_valid(&self) -> bool {
        [
            self.volumetric_heat_capacity,
            self.inlet_temperature,
            self.volumetric_flow_rate_per_channel,
            self.convection_coefficient,
        ]
        .iter()
        .all(|v| *v > 0.0 && v.is_finite())
    }
}

/// `h = Nu · k / D_h` with `D_h = 2·w·t / (w + t)`.
pub fn laminar_htc(width: f64, height: f64, fluid_conductivity: f64) -> f64 {
    let dh = 2.0 * width * height / (width + height);
    LAMINAR_NUSSELT * fluid_conductivity / dh
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FlowDir {
    PosX,
    NegX,
    PosY,
    NegY,
}

impl FlowDir {
    pub fn delta(self) -> (isize, isize) {
        match self {
            FlowDir::PosX => (0, 1),
            FlowDir::NegX => (0, -1),
            FlowDir::PosY => (1, 0),
            FlowDir::NegY => (-1, 0),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            FlowDir::PosX => '>',
            FlowDir::NegX => '<',
            FlowDir::PosY => '^',
            FlowDir::NegY => 'v',
        }
    }

    pub fn from_symbol(c: char) -> Option<FlowDir> {
        Some(match c {
            '>' => FlowDir::PosX,
            '<' => FlowDir::NegX,
            '^' => FlowDir::PosY,
            'v' => FlowDir::NegY,
            _ => return None,
        })
    }

    pub fn reversed(self) -> FlowDir {
        match self {
            FlowDir::PosX => FlowDir::NegX,
            FlowDir::NegX => FlowDir::PosX,
            FlowDir::PosY => FlowDir::NegY,
            FlowDir::NegY => FlowDir::PosY,
        }
    }
}

/// `(row, col)` on the pattern grid.
pub type CellPos = (usize, usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoolingPattern {
    pub rows: usize,
    pub cols: usize,
    /// Row-major; `None` is wall, `Some(dir)` is fluid flowing along `dir`.
    pub cells: Vec<Option<FlowDir>>,
    pub inlets: Vec<CellPos>,
    pub outlets: Vec<CellPos>,
    /// m
    pub channel_width: f64,
    /// m
    pub channel_pitch: f64,
    pub coolant: Coolant,
}

impl CoolingPattern {
    pub fn flow(&self, row: usize, col: usize) -> Option<FlowDir> {
        self.cells[row * self.cols + col]
    }

    pub fn is_fluid(&self, row: usize, col: usize) -> bool {
        self.flow(row, col).is_some()
    }

    pub fn fluid_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    /// Downstream neighbor inside the grid, or `None` when flow leaves it.
    pub fn next(&self, (row, col): CellPos) -> Option<CellPos> {
        let (dr, dc) = self.flow(row, col)?.delta();
        let r = row as isize + dr;
        let c = col as isize + dc;
        (r >= 0 && c >= 0 && (r as usize) < self.rows && (c as usize) < self.cols).then(|| (r as usize, c as usize))
    }

    pub fn on_boundary(&self, (row, col): CellPos) -> bool {
        row == 0 || col == 0 || row + 1 == self.rows || col + 1 == self.cols
    }

    /// Inlets grouped by the grid edge they sit on (south, north, west, east).
    pub fn inlet_groups(&self) -> [Vec<CellPos>; 4] {
        group_by_edge(&self.inlets, self.rows, self.cols, |p| self.flow(p.0, p.1).map(FlowDir::reversed))
    }

    /// Outlets grouped by the grid edge they discharge through (south, north, west, east).
    pub fn outlet_groups(&self) -> [Vec<CellPos>; 4] {
        group_by_edge(&self.outlets, self.rows, self.cols, |p| self.flow(p.0, p.1))
    }

    /// The pattern rotated by 180° about the grid center.
    pub fn rotated_180(&self) -> CoolingPattern {
        let (rows, cols) = (self.rows, self.cols);
        let rot = |(r, c): CellPos| (rows - 1 - r, cols - 1 - c);
        let mut cells = vec![None; rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                let (rr, cc) = rot((r, c));
                cells[rr * cols + cc] = self.flow(r, c).map(FlowDir::reversed);
            }
        }
        let mut inlets: Vec<CellPos> = self.inlets.iter().copied().map(rot).collect();
        let mut outlets: Vec<CellPos> = self.outlets.iter().copied().map(rot).collect();
        inlets.sort_unstable();
        outlets.sort_unstable();
        CoolingPattern { cells, inlets, outlets, ..self.clone() }
    }
}

fn group_by_edge(
    cells: &[CellPos],
    rows: usize,
    cols: usize,
    facing: impl Fn(CellPos) -> Option<FlowDir>,
) -> [Vec<CellPos>; 4] {
    let mut out: [Vec<CellPos>; 4] = Default::default();
    for &p in cells {
        // Side through which the coolant crosses the boundary; corner cells
        // use their flow direction to disambiguate.
        let side = match facing(p) {
            Some(FlowDir::NegY) if p.0 == 0 => 0,
            Some(FlowDir::PosY) if p.0 + 1 == rows => 1,
            Some(FlowDir::NegX) if p.1 == 0 => 2,
            Some(FlowDir::PosX) if p.1 + 1 == cols => 3,
            _ if p.0 == 0 => 0,
            _ if p.0 + 1 == rows => 1,
            _ if p.1 == 0 => 2,
            _ => 3,
        };
        out[side].push(p);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoolingError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("invalid coolant: all properties must be positive")]
    Coolant,
    #[error("invalid pattern: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<PatternViolation>),
}

impl fmt::Display for PatternStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
