use serde::{Deserialize, Serialize};

use super::{CoolingPosition, CoolingVariant, DseError, Knob};
use crate::cooling::{generate_pattern, Coolant, PatternStyle};
use crate::power::{block_power, PowerModelSet};
use crate::stack::{Attached, Grid, Layer, Material, Stack};

#[derive(Debug, Clone, PartialEq)]
pub enum StackingPolicy {
    AllDiePermutations,
    /// Named orders; each lists the base stack's die layer indices bottom-up.
    Named(Vec<(String, Vec<usize>)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackVariant {
    pub name: String,
    /// Base-stack layer index of the die placed in each die slot, bottom-up.
    pub die_order: Vec<usize>,
    pub stack: Stack,
}

/// Places the base stack's dies into its die slots in `order`; every other
/// layer keeps its position.
pub fn permute_dies(stack: &Stack, order: &[usize], name: &str) -> Result<Stack, DseError> {
    let slots = stack.die_indices();
    let invalid = |detail: String| DseError::InvalidStacking { name: name.to_string(), detail };
    if order.len() != slots.len() {
        return Err(invalid(format!("lists {} dies, the stack has {}", order.len(), slots.len())));
    }
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != slots {
        return Err(invalid(format!("{order:?} is not a permutation of die layers {slots:?}")));
    }
    let mut out = stack.clone();
    for (slot, &src) in slots.iter().zip(order) {
        out.layers[*slot] = stack.layers[src].clone();
    }
    Ok(out)
}

fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else { return false };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).expect("successor exists");
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Stack variants under `policy`. Full permutation enumeration runs in
/// lexicographic order of the die indices and drops orders whose layers
/// are content-identical to an earlier one.
pub fn enumerate_stackings(stack: &Stack, policy: &StackingPolicy) -> Result<Vec<StackVariant>, DseError> {
    match policy {
        StackingPolicy::Named(list) => list
            .iter()
            .map(|(name, order)| {
                Ok(StackVariant { name: name.clone(), die_order: order.clone(), stack: permute_dies(stack, order, name)? })
            })
            .collect(),
        StackingPolicy::AllDiePermutations => {
            let mut order = stack.die_indices();
            let mut out: Vec<StackVariant> = Vec::new();
            loop {
                let name = format!("p{}", order.iter().map(usize::to_string).collect::<Vec<_>>().join("-"));
                let s = permute_dies(stack, &order, &name)?;
                let duplicate = out.iter().any(|v| {
                    v.stack.layers.len() == s.layers.len()
                        && v.stack.layers.iter().zip(&s.layers).all(|(a, b)| a.same_content(b))
                });
                if !duplicate {
                    out.push(StackVariant { name, die_order: order.clone(), stack: s });
                }
                if !next_permutation(&mut order) {
                    break;
                }
            }
            Ok(out)
        }
    }
}

/// The no-cooling variant (when requested or when no style is given) followed
/// by one variant per style × position.
pub fn enumerate_cooling(
    stack: &Stack,
    styles: &[PatternStyle],
    positions: &[CoolingPosition],
    include_none: bool,
) -> Result<Vec<CoolingVariant>, DseError> {
    for p in positions {
        if let CoolingPosition::Index(i) = *p {
            if i > stack.layers.len() {
                return Err(DseError::InvalidPosition { index: i, layers: stack.layers.len() });
            }
        }
    }
    let mut out = Vec::new();
    if include_none || styles.is_empty() {
        out.push(CoolingVariant::None);
    }
    for &style in styles {
        for &position in positions {
            out.push(CoolingVariant::Channels { style, position });
        }
    }
    Ok(out)
}

/// Geometry and fluid of inserted channel layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    /// m
    pub width: f64,
    /// m
    pub pitch: f64,
    /// m
    pub thickness: f64,
    pub material: Material,
    /// Defaults to laminar water for this channel cross-section.
    pub coolant: Option<Coolant>,
}

impl ChannelSpec {
    /// One-cell channels at a two-cell pitch in a 100 µm silicon layer.
    pub fn default_for(grid: &Grid) -> ChannelSpec {
        ChannelSpec {
            width: grid.cell_width,
            pitch: 2.0 * grid.cell_width,
            thickness: 1e-4,
            material: Material::silicon(),
            coolant: None,
        }
    }

    pub fn coolant(&self) -> Coolant {
        self.coolant.clone().unwrap_or_else(|| Coolant::water(self.width, self.thickness))
    }
}

/// Layer index of the die dissipating the most power at default activity;
/// the lowest index wins ties.
pub fn hottest_die(stack: &Stack, models: &PowerModelSet) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, layer) in stack.layers.iter().enumerate() {
        let Some(fp) = &layer.floorplan else { continue };
        let total: f64 = fp
            .value
            .block_names()
            .filter_map(|b| models.get(b))
            .map(|m| block_power(m, m.activity_factor_default).unwrap_or(0.0))
            .sum();
        if best.is_none_or(|(_, p)| total > p) {
            best = Some((i, total));
        }
    }
    best.map(|(i, _)| i)
}

pub fn apply_cooling(
    stack: &Stack,
    variant: &CoolingVariant,
    spec: &ChannelSpec,
    grid: &Grid,
    models: &PowerModelSet,
) -> Result<Stack, DseError> {
    let CoolingVariant::Channels { style, position } = *variant else { return Ok(stack.clone()) };
    let index = match position {
        CoolingPosition::BelowHottestDie => hottest_die(stack, models).ok_or(DseError::InvalidPosition {
            index: 0,
            layers: stack.layers.len(),
        })?,
        CoolingPosition::Index(i) if i > stack.layers.len() => {
            return Err(DseError::InvalidPosition { index: i, layers: stack.layers.len() })
        }
        CoolingPosition::Index(i) => i,
    };
    let pattern = generate_pattern(grid, style, spec.width, spec.pitch, spec.coolant())?;
    let mut out = stack.clone();
    let layer = Layer::microchannel(spec.thickness, spec.material.clone(), Attached::new(format!("{style}.pattern"), pattern));
    out.layers.insert(index, layer);
    Ok(out)
}

pub fn apply_knobs(models: &PowerModelSet, knobs: &[Knob], settings: &[(String, f64)]) -> Result<PowerModelSet, DseError> {
    let mut out = models.clone();
    for (name, value) in settings {
        let knob = knobs.iter().find(|k| k.name == *name).ok_or_else(|| DseError::UnknownKnob(name.clone()))?;
        if !knob.values.iter().any(|v| (v - value).abs() <= 1e-12 * v.abs().max(value.abs())) {
            return Err(DseError::KnobValue { knob: name.clone(), value: *value });
        }
        let ratio = value / knob.base;
        for target in &knob.targets {
            let m = out
                .get_mut(target)
                .ok_or_else(|| DseError::KnobTarget { knob: name.clone(), target: target.clone() })?;
            *m = knob.scaling.apply(m, ratio);
        }
    }
    Ok(out)
}
