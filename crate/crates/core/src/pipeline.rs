//! End-to-end steady simulation: activity → block power → network → field.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::power::{trace_power, ActivityTrace, PowerError, PowerModelSet, TraceTable};
use crate::stack::{Grid, LayerKind, Stack};
use crate::thermal::{
    assemble, coolant_outlet_temperatures, emit_heatmap, emit_summary, energy_balance, rasterize_stack, solve_steady,
    summarize, ChannelOutlet, EnergyBalance, NetworkCounts, SolveStats, SolverConfig, Summary, ThermalError,
    ThermalField,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Power(#[from] PowerError),
    #[error(transparent)]
    Thermal(#[from] ThermalError),
}

#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub field: ThermalField,
    pub summary: Summary,
    pub energy: EnergyBalance,
    /// Time-averaged power per block, W, in floorplan order.
    pub block_power: Vec<(String, f64)>,
    pub outlets: Vec<ChannelOutlet>,
    pub layer_kinds: Vec<LayerKind>,
    pub counts: NetworkCounts,
    pub stats: SolveStats,
    /// s
    pub runtime: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub file_name: String,
    pub contents: String,
}

impl SimulationResult {
    pub fn die_layers(&self) -> Vec<usize> {
        (0..self.layer_kinds.len()).filter(|&l| self.layer_kinds[l] == LayerKind::Die).collect()
    }

    pub fn heatmap_file_name(layer: usize) -> String {
        format!("heatmap_layer{layer}.grid")
    }

    /// One heatmap per die layer plus the summary table.
    pub fn artifacts(&self) -> Vec<Artifact> {
        let mut out: Vec<Artifact> = self
            .die_layers()
            .into_iter()
            .map(|l| Artifact { file_name: Self::heatmap_file_name(l), contents: emit_heatmap(&self.field, l) })
            .collect();
        out.push(Artifact { file_name: "summary.tsv".into(), contents: emit_summary(&self.summary) });
        out
    }
}

/// Block names of every die floorplan, bottom-up, first occurrence kept.
pub fn stack_blocks(stack: &Stack) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for fp in stack.layers.iter().filter_map(|l| l.floorplan.as_ref()) {
        for name in fp.value.block_names() {
            if !names.iter().any(|n| n == name) {
                names.push(name.to_string());
            }
        }
    }
    names
}

/// An activity trace with no samples: every modeled block runs at its
/// default activity.
pub fn default_activity() -> ActivityTrace {
    ActivityTrace(TraceTable::new(1.0, Vec::new(), Vec::new()))
}

/// Time-averaged power per block of `stack` under `activity`.
pub fn average_block_power(
    stack: &Stack,
    models: &PowerModelSet,
    activity: &ActivityTrace,
) -> Result<Vec<(String, f64)>, PowerError> {
    Ok(trace_power(models, activity, &stack_blocks(stack))?.average())
}

pub fn simulate(
    stack: &Stack,
    models: &PowerModelSet,
    activity: &ActivityTrace,
    grid: &Grid,
    solver: &SolverConfig,
) -> Result<SimulationResult, PipelineError> {
    let start = Instant::now();
    let block_power = average_block_power(stack, models, activity)?;
    let net = assemble(stack, grid, &rasterize_stack(stack, grid))?;
    let sources = net.cell_sources(block_power.iter().map(|(n, p)| (n.as_str(), *p)))?;
    let (field, stats) = solve_steady(&net, &sources, solver)?;
    let summary = summarize(&net, &field);
    let energy = energy_balance(&net, &field, &sources);
    let mut outlets = Vec::new();
    for ch in &net.channels {
        outlets.extend(coolant_outlet_temperatures(&net, &field, &ch.pattern)?);
    }
    Ok(SimulationResult {
        field,
        summary,
        energy,
        block_power,
        outlets,
        layer_kinds: net.layer_kinds.clone(),
        counts: net.counts,
        stats,
        runtime: start.elapsed().as_secs_f64(),
    })
}
