//! Block-level power model and the activity → power trace pipeline.
//!
//! Each block dissipates `static + activity · switching_energy · frequency`.
//! Activity comes either directly from an activity trace or from raw
//! statistics passed through user-defined mapping rules.

mod mapping;
mod synthetic;
mod table;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{content_lines, fields, parse_f64, ParseError};

pub use mapping::{apply_mapping, MappingRule, MappingRules};
pub use synthetic::{synthetic_activity, SyntheticProfile};
pub use table::TraceTable;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PowerError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Domain(String),
    #[error("rule {rule} ({source_stat} -> {target}): source statistic not found")]
    MissingSource { rule: usize, source_stat: String, target: String },
    #[error("rule {rule}: target block '{target}' has no power model")]
    UnknownTarget { rule: usize, target: String },
    #[error("block '{0}' has activity but no power model")]
    Uncovered(String),
    #[error("block '{0}' is not part of any floorplan")]
    UnknownBlock(String),
    #[error("series '{name}' has {got} samples, expected {expected}")]
    LengthMismatch { name: String, expected: usize, got: usize },
    #[error("duplicate power model for block '{0}'")]
    DuplicateModel(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockPowerModel {
    pub block: String,
    /// W
    pub static_power: f64,
    /// J per access/toggle
    pub switching_energy: f64,
    /// Hz
    pub clock_frequency: f64,
    pub activity_factor_default: f64,
}

impl BlockPowerModel {
    pub fn validate(&self) -> Result<(), PowerError> {
        let ok = self.static_power >= 0.0
            && self.switching_energy >= 0.0
            && self.clock_frequency > 0.0
            && (0.0..=1.0).contains(&self.activity_factor_default)
            && self.static_power.is_finite()
            && self.switching_energy.is_finite()
            && self.clock_frequency.is_finite();
        if ok {
            Ok(())
        } else {
            Err(PowerError::Domain(format!("power model for '{}' violates its invariants", self.block)))
        }
    }

    /// Dynamic power at activity 1.
    pub fn peak_dynamic(&self) -> f64 {
        self.switching_energy * self.clock_frequency
    }
}

pub fn block_power(model: &BlockPowerModel, activity: f64) -> Result<f64, PowerError> {
    if !(0.0..=1.0).contains(&activity) {
        return Err(PowerError::Domain(format!(
            "activity {activity} for block '{}' outside [0, 1]",
            model.block
        )));
    }
    Ok(model.static_power + activity * model.switching_energy * model.clock_frequency)
}

/// Per-bank power: `static + access_rate · energy_per_access`.
pub fn memory_bank_power(
    bank_count: usize,
    per_bank_static: f64,
    per_access_energy: f64,
    access_rates: &[f64],
) -> Result<Vec<f64>, PowerError> {
    if access_rates.len() != bank_count {
        return Err(PowerError::LengthMismatch {
            name: "access_rates".into(),
            expected: bank_count,
            got: access_rates.len(),
        });
    }
    if per_bank_static < 0.0 || per_access_energy < 0.0 || access_rates.iter().any(|r| !(*r >= 0.0)) {
        return Err(PowerError::Domain("memory power inputs must be non-negative".into()));
    }
    Ok(access_rates.iter().map(|rate| per_bank_static + rate * per_access_energy).collect())
}

/// Exponents of the capacity-scaling hook: a capacity ratio `r` multiplies
/// static power by `r^static_exponent` and switching energy by
/// `r^energy_exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityScaling {
    pub static_exponent: f64,
    pub energy_exponent: f64,
}

impl Default for CapacityScaling {
    fn default() -> Self {
        CapacityScaling { static_exponent: 1.0, energy_exponent: 0.5 }
    }
}

impl CapacityScaling {
    pub fn apply(&self, model: &BlockPowerModel, ratio: f64) -> BlockPowerModel {
        BlockPowerModel {
            static_power: model.static_power * ratio.powf(self.static_exponent),
            switching_energy: model.switching_energy * ratio.powf(self.energy_exponent),
            ..model.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PowerModelSet {
    pub models: Vec<BlockPowerModel>,
}

impl PowerModelSet {
    pub fn new(models: Vec<BlockPowerModel>) -> Result<Self, PowerError> {
        for (i, m) in models.iter().enumerate() {
            m.validate()?;
            if models[..i].iter().any(|p| p.block == m.block) {
                return Err(PowerError::DuplicateModel(m.block.clone()));
            }
        }
        Ok(PowerModelSet { models })
    }

    pub fn get(&self, block: &str) -> Option<&BlockPowerModel> {
        self.models.iter().find(|m| m.block == block)
    }

    pub fn get_mut(&mut self, block: &str) -> Option<&mut BlockPowerModel> {
        self.models.iter_mut().find(|m| m.block == block)
    }

    /// Parses `block static_W switching_energy_J clock_Hz activity_default`.
    pub fn parse(text: &str) -> Result<Self, PowerError> {
        let mut models = Vec::new();
        for (line, content) in content_lines(text) {
            let f = fields(content);
            if f.len() != 5 {
                return Err(ParseError::new(
                    line,
                    "expected '<block> <static_W> <switching_energy_J> <clock_Hz> <activity_default>'",
                )
                .into());
            }
            let m = BlockPowerModel {
                block: f[0].to_string(),
                static_power: parse_f64(line, f[1], "static power")?,
                switching_energy: parse_f64(line, f[2], "switching energy")?,
                clock_frequency: parse_f64(line, f[3], "clock frequency")?,
                activity_factor_default: parse_f64(line, f[4], "default activity")?,
            };
            m.validate().map_err(|e| ParseError::new(line, e.to_string()))?;
            if models.iter().any(|p: &BlockPowerModel| p.block == m.block) {
                return Err(ParseError::new(line, format!("duplicate power model for '{}'", m.block)).into());
            }
            models.push(m);
        }
        Ok(PowerModelSet { models })
    }

    pub fn emit(&self) -> String {
        let mut s = String::from("# block\tstatic_W\tswitching_energy_J\tclock_Hz\tactivity_default\n");
        for m in &self.models {
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                m.block, m.static_power, m.switching_energy, m.clock_frequency, m.activity_factor_default
            ));
        }
        s
    }
}

/// Per-block activity factors in [0, 1] per sampling interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityTrace(pub TraceTable);

impl ActivityTrace {
    pub fn new(table: TraceTable) -> Result<Self, PowerError> {
        check_table(&table)?;
        for (name, col) in table.names.iter().zip(&table.columns) {
            if let Some(v) = col.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(PowerError::Domain(format!("activity {v} of '{name}' outside [0, 1]")));
            }
        }
        Ok(ActivityTrace(table))
    }

    pub fn parse(text: &str) -> Result<Self, PowerError> {
        ActivityTrace::new(TraceTable::parse(text)?)
    }
}

/// Per-block power in watts per sampling interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerTrace(pub TraceTable);

impl PowerTrace {
    pub fn new(table: TraceTable) -> Result<Self, PowerError> {
        check_table(&table)?;
        for (name, col) in table.names.iter().zip(&table.columns) {
            if let Some(v) = col.iter().find(|v| !(**v >= 0.0)) {
                return Err(PowerError::Domain(format!("power {v} W of '{name}' is negative")));
            }
        }
        Ok(PowerTrace(table))
    }

    pub fn parse(text: &str) -> Result<Self, PowerError> {
        PowerTrace::new(TraceTable::parse(text)?)
    }

    /// Σ_blocks Σ_intervals P·Δt, J.
    pub fn total_energy(&self) -> f64 {
        self.0.columns.iter().map(|c| c.iter().sum::<f64>()).sum::<f64>() * self.0.interval
    }

    /// Time-averaged power per block, in header order.
    pub fn average(&self) -> Vec<(String, f64)> {
        self.0
            .names
            .iter()
            .map(|n| (n.clone(), self.0.mean(n).unwrap_or(0.0)))
            .collect()
    }

    /// Power of every block during the interval containing `t` (last sample
    /// held past the end).
    pub fn at_time(&self, t: f64) -> Vec<(String, f64)> {
        let n = self.0.len();
        let k = if n == 0 { 0 } else { ((t / self.0.interval).floor().max(0.0) as usize).min(n - 1) };
        self.0
            .names
            .iter()
            .zip(&self.0.columns)
            .map(|(name, col)| (name.clone(), col.get(k).copied().unwrap_or(0.0)))
            .collect()
    }
}

fn check_table(t: &TraceTable) -> Result<(), PowerError> {
    if !(t.interval > 0.0 && t.interval.is_finite()) {
        return Err(PowerError::Domain("sampling interval must be positive".into()));
    }
    if t.names.len() != t.columns.len() {
        return Err(PowerError::Domain("column count differs from header".into()));
    }
    let expected = t.len();
    for (name, col) in t.names.iter().zip(&t.columns) {
        if col.len() != expected {
            return Err(PowerError::LengthMismatch { name: name.clone(), expected, got: col.len() });
        }
    }
    Ok(())
}

/// Converts an activity trace into a power trace over `blocks` (the union of
/// floorplan block names). Blocks without a model (fillers included) draw
/// 0 W; modeled blocks absent from the trace run at their default activity.
pub fn trace_power(models: &PowerModelSet, activity: &ActivityTrace, blocks: &[String]) -> Result<PowerTrace, PowerError> {
    let table = &activity.0;
    check_table(table)?;
    for name in &table.names {
        if models.get(name).is_none() {
            return Err(PowerError::Uncovered(name.clone()));
        }
        if !blocks.contains(name) {
            return Err(PowerError::UnknownBlock(name.clone()));
        }
    }
    let n = table.len().max(1);
    let mut columns = Vec::with_capacity(blocks.len());
    for block in blocks {
        let col = match (models.get(block), table.column(block)) {
            (Some(m), Some(series)) => series.iter().map(|&a| block_power(m, a)).collect::<Result<Vec<_>, _>>()?,
            (Some(m), None) => vec![block_power(m, m.activity_factor_default)?; n],
            (None, _) => vec![0.0; n],
        };
        columns.push(col);
    }
    PowerTrace::new(TraceTable::new(table.interval, blocks.to_vec(), columns))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn model(static_power: f64, e: f64, f: f64) -> BlockPowerModel {
        BlockPowerModel {
            block: "X".into(),
            static_power,
            switching_energy: e,
            clock_frequency: f,
            activity_factor_default: 0.0,
        }
    }

    #[test]
    fn zero_activity_is_static() {
        assert_eq!(block_power(&model(0.7, 1e-9, 2e9), 0.0).unwrap(), 0.7);
    }

    #[test]
    fn hand_computed_power() {
        let p = block_power(&model(0.5, 0.1e-9, 2e9), 0.25).unwrap();
        assert!((p - 0.55).abs() < 1e-15, "{p}");
    }

    #[test]
    fn full_activity_no_static() {
        let m = model(0.0, 3e-10, 1.5e9);
        assert_eq!(block_power(&m, 1.0).unwrap(), 3e-10 * 1.5e9);
    }

    #[test]
    fn activity_out_of_range_is_domain_error() {
        assert!(matches!(block_power(&model(0.0, 1.0, 1.0), 1.5), Err(PowerError::Domain(_))));
        assert!(block_power(&model(0.0, 1.0, 1.0), -0.1).is_err());
        assert!(block_power(&model(0.0, 1.0, 1.0), f64::NAN).is_err());
    }

    #[test]
    fn memory_banks() {
        assert_eq!(memory_bank_power(3, 0.01, 1e-12, &[0.0; 3]).unwrap(), vec![0.01; 3]);
        let uniform = memory_bank_power(32, 0.02, 5e-12, &[1e8; 32]).unwrap();
        assert_eq!(uniform.len(), 32);
        assert!(uniform.iter().all(|&p| p == uniform[0]));
        let mut rates = vec![0.0; 4];
        rates[2] = 1e9;
        let p = memory_bank_power(4, 0.01, 1e-12, &rates).unwrap();
        assert!((p[2] - p[0] - 1e-3).abs() < 1e-15);
        assert!(memory_bank_power(2, -1.0, 0.0, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn scaling_hook_defaults() {
        let m = model(1.0, 4e-9, 1e9);
        let s = CapacityScaling::default().apply(&m, 4.0);
        assert_eq!(s.static_power, 4.0);
        assert!((s.switching_energy - 8e-9).abs() < 1e-24);
    }

    fn set() -> PowerModelSet {
        PowerModelSet::new(vec![
            BlockPowerModel { block: "C_0".into(), static_power: 1.0, switching_energy: 1e-9, clock_frequency: 2e9, activity_factor_default: 0.1 },
            BlockPowerModel { block: "C_1".into(), static_power: 1.0, switching_energy: 1e-9, clock_frequency: 2e9, activity_factor_default: 0.1 },
        ])
        .unwrap()
    }

    #[test]
    fn zero_activity_trace_is_static_and_constant() {
        let act = ActivityTrace::new(TraceTable::new(1e-3, vec!["C_0".into(), "C_1".into()], vec![vec![0.0; 5]; 2])).unwrap();
        let blocks = vec!["C_0".to_string(), "C_1".to_string(), "_fill_0".to_string()];
        let p = trace_power(&set(), &act, &blocks).unwrap();
        assert_eq!(p.0.column("C_0").unwrap(), &[1.0; 5]);
        assert_eq!(p.0.column("_fill_0").unwrap(), &[0.0; 5]);
    }

    #[test]
    fn singleton_trace_matches_block_power() {
        let act = ActivityTrace::new(TraceTable::new(1.0, vec!["C_0".into()], vec![vec![0.3]])).unwrap();
        let blocks = vec!["C_0".to_string()];
        let p = trace_power(&set(), &act, &blocks).unwrap();
        assert_eq!(p.0.column("C_0").unwrap(), &[block_power(set().get("C_0").unwrap(), 0.3).unwrap()]);
    }

    #[test]
    fn unmodeled_activity_is_rejected() {
        let act = ActivityTrace::new(TraceTable::new(1.0, vec!["L2".into()], vec![vec![0.3]])).unwrap();
        assert_eq!(trace_power(&set(), &act, &["L2".to_string()]).unwrap_err(), PowerError::Uncovered("L2".into()));
    }

    #[test]
    fn ragged_activity_is_rejected() {
        let table = TraceTable::new(1.0, vec!["C_0".into(), "C_1".into()], vec![vec![0.1, 0.2], vec![0.1]]);
        assert!(matches!(ActivityTrace::new(table), Err(PowerError::LengthMismatch { .. })));
    }

    #[test]
    fn model_file_round_trip() {
        let s = set();
        assert_eq!(PowerModelSet::parse(&s.emit()).unwrap(), s);
        let err = PowerModelSet::parse("A 1 1 1 0.5\nB 1 1 0 0.5\n").unwrap_err();
        assert!(err.to_string().starts_with("line 2"), "{err}");
    }

    proptest! {
        #[test]
        fn power_is_monotone_in_activity(
            s in 0.0f64..10.0, e in 0.0f64..1e-8, f in 1e6f64..5e9, a in 0.0f64..=1.0, b in 0.0f64..=1.0
        ) {
            let m = model(s, e, f);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(block_power(&m, lo).unwrap() <= block_power(&m, hi).unwrap());
        }

        #[test]
        fn doubling_interval_doubles_energy(
            vals in proptest::collection::vec(0.0f64..5.0, 1..20), dt in 1e-6f64..1.0
        ) {
            let a = PowerTrace::new(TraceTable::new(dt, vec!["A".into()], vec![vals.clone()])).unwrap();
            let b = PowerTrace::new(TraceTable::new(2.0 * dt, vec!["A".into()], vec![vals])).unwrap();
            prop_assert_eq!(b.total_energy(), 2.0 * a.total_energy());
        }
    }
}
