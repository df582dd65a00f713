//! Finite-volume thermal model of a layer stack.
//!
//! Every grid cell of every layer is one node. Solid nodes conduct to their
//! six face neighbors; fluid nodes in microchannel layers exchange heat with
//! adjacent solid nodes by convection and carry enthalpy downstream by
//! first-order upwind advection. The outermost layer convects to ambient,
//! every other outer face is adiabatic.

mod analysis;
mod format;
pub mod linsolve;
mod network;
mod solve;
pub mod sparse;

use thiserror::Error;

use crate::stack::{Grid, StackViolation};

pub use analysis::{
    coolant_outlet_temperatures, energy_balance, pearson, summarize, BlockStat, ChannelOutlet, EnergyBalance,
    LayerStat, Summary,
};
pub use format::{emit_heatmap, emit_summary, format_sig, parse_heatmap, Heatmap};
pub use linsolve::{Preconditioner, SolveStats, SolverConfig};
pub use network::{assemble, rasterize_stack, ChannelLayer, DiePower, NetworkCounts, ThermalNetwork};
pub use solve::{solve_steady, solve_transient, TransientConfig, DEFAULT_TIME_STEP};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThermalError {
    #[error("invalid stack: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidStack(Vec<StackViolation>),
    #[error("layer {layer}: no rasterized floorplan on the simulation grid")]
    MissingRasterization { layer: usize },
    #[error("layer {layer}: microchannel layer without cooling pattern")]
    MissingPattern { layer: usize },
    #[error("layer {layer}: cooling pattern does not fit the network: {detail}")]
    PatternMismatch { layer: usize, detail: String },
    #[error("floating network: node {node} has no conduction path to ambient or coolant")]
    FloatingNetwork { node: usize },
    #[error("invalid power input: {0}")]
    InvalidPower(String),
    #[error("invalid time stepping: {0}")]
    InvalidTimeStep(String),
    #[error("solver: {0}")]
    Solver(#[from] linsolve::LinearError),
}

/// Temperatures of every node of a network, K.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalField {
    pub grid: Grid,
    pub layers: usize,
    /// Indexed like the network nodes: `(row·cols + col)·layers + layer`.
    pub nodes: Vec<f64>,
    /// Simulated time, `None` for a steady-state field.
    pub time: Option<f64>,
}

impl ThermalField {
    pub fn at(&self, layer: usize, row: usize, col: usize) -> f64 {
        self.nodes[(row * self.grid.cols + col) * self.layers + layer]
    }

    /// Row-major temperatures of one layer, row 0 first.
    pub fn layer(&self, layer: usize) -> Vec<f64> {
        self.nodes.iter().skip(layer).step_by(self.layers).copied().collect()
    }

    pub fn max(&self) -> f64 {
        self.nodes.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.nodes.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn layer_max(&self, layer: usize) -> f64 {
        self.nodes.iter().skip(layer).step_by(self.layers).copied().fold(f64::NEG_INFINITY, f64::max)
    }
}
