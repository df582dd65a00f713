use serde::{Deserialize, Serialize};

use super::{ActivityTrace, PowerError, TraceTable};

/// Synthetic workload shapes used in place of a performance simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum SyntheticProfile {
    /// Every block at the same activity.
    Uniform { activity: f64 },
    /// `hot` runs `skew` times the activity of every other block (clamped to 1).
    OneHot { hot: String, base: f64, skew: f64 },
    /// Linear ramp from `from` to `to` across the intervals.
    Ramp { from: f64, to: f64 },
}

pub fn synthetic_activity(
    blocks: &[String],
    profile: &SyntheticProfile,
    intervals: usize,
    interval_s: f64,
) -> Result<ActivityTrace, PowerError> {
    let intervals = intervals.max(1);
    let columns = blocks
        .iter()
        .map(|b| match profile {
            SyntheticProfile::Uniform { activity } => vec![*activity; intervals],
            SyntheticProfile::OneHot { hot, base, skew } => {
                let a = if b == hot { (base * skew).min(1.0) } else { *base };
                vec![a; intervals]
            }
            SyntheticProfile::Ramp { from, to } => (0..intervals)
                .map(|k| {
                    let t = if intervals == 1 { 0.0 } else { k as f64 / (intervals - 1) as f64 };
                    from + (to - from) * t
                })
                .collect(),
        })
        .collect();
    ActivityTrace::new(TraceTable::new(interval_s, blocks.to_vec(), columns))
}
