//! Design-space exploration: stacking orders, cooling insertion and power
//! knobs, evaluated per workload and ranked by maximum stack temperature.

mod enumerate;
mod report;
mod run;
mod sweep_file;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cooling::{CoolingError, PatternStyle};
use crate::error::ParseError;
use crate::power::CapacityScaling;

pub use enumerate::{
    apply_cooling, apply_knobs, enumerate_cooling, enumerate_stackings, hottest_die, permute_dies, ChannelSpec,
    StackVariant, StackingPolicy,
};
pub use report::{compare_report, ComparisonReport, ComparisonRow};
pub use run::{
    rank, run_sweep, run_sweep_with_progress, PointResult, RankEntry, SweepConfig, SweepContext, SweepResult,
    WorkloadResult,
};
pub use sweep_file::{
    ChannelDecl, CoolingDecl, PointDecl, StackingDecl, SweepDefinition, WorkloadDecl, BASE_STACKING,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DseError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("no design points to evaluate")]
    EmptyPoints,
    #[error("no workloads to evaluate")]
    EmptyWorkloads,
    #[error("unknown stacking '{0}'")]
    UnknownStacking(String),
    #[error("invalid stacking '{name}': {detail}")]
    InvalidStacking { name: String, detail: String },
    #[error("cooling position {index} is beyond the {layers}-layer stack")]
    InvalidPosition { index: usize, layers: usize },
    #[error("unknown knob '{0}'")]
    UnknownKnob(String),
    #[error("knob '{knob}': value {value} is not among the declared values")]
    KnobValue { knob: String, value: f64 },
    #[error("knob '{knob}': target block '{target}' has no power model")]
    KnobTarget { knob: String, target: String },
    #[error("unknown workload '{0}'")]
    UnknownWorkload(String),
    #[error("baseline point '{0}' not found")]
    UnknownBaseline(String),
    #[error("duplicate point name '{0}'")]
    DuplicatePoint(String),
    #[error("cooling layer: {0}")]
    Cooling(#[from] CoolingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "index")]
pub enum CoolingPosition {
    /// Directly below the die with the highest modeled power.
    BelowHottestDie,
    /// Inserted so that the channel layer gets this layer index.
    Index(usize),
}

impl fmt::Display for CoolingPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoolingPosition::BelowHottestDie => f.write_str("below_hottest_die"),
            CoolingPosition::Index(i) => write!(f, "{i}"),
        }
    }
}

impl CoolingPosition {
    pub fn parse(s: &str) -> Option<CoolingPosition> {
        if s == "below_hottest_die" {
            Some(CoolingPosition::BelowHottestDie)
        } else {
            s.parse().ok().map(CoolingPosition::Index)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoolingVariant {
    None,
    Channels { style: PatternStyle, position: CoolingPosition },
}

impl fmt::Display for CoolingVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoolingVariant::None => f.write_str("none"),
            CoolingVariant::Channels { style, position } => write!(f, "{style}@{position}"),
        }
    }
}

impl CoolingVariant {
    /// `none` or `<style>@<position>`.
    pub fn parse(s: &str) -> Option<CoolingVariant> {
        if s == "none" {
            return Some(CoolingVariant::None);
        }
        let (style, position) = s.split_once('@')?;
        Some(CoolingVariant::Channels { style: PatternStyle::parse(style)?, position: CoolingPosition::parse(position)? })
    }
}

/// A power-model knob acting through the capacity-scaling hook: a setting
/// `v` scales every target block by the ratio `v / base`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knob {
    pub name: String,
    pub base: f64,
    pub values: Vec<f64>,
    pub targets: Vec<String>,
    pub scaling: CapacityScaling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    pub name: String,
    /// Stacking variant name; `base` is the stack as declared.
    pub stacking: String,
    pub cooling: CoolingVariant,
    pub knobs: Vec<(String, f64)>,
}

impl DesignPoint {
    pub fn new(name: impl Into<String>, stacking: impl Into<String>, cooling: CoolingVariant) -> Self {
        DesignPoint { name: name.into(), stacking: stacking.into(), cooling, knobs: Vec::new() }
    }
}
