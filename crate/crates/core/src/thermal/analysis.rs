use serde::{Deserialize, Serialize};

use super::{ThermalError, ThermalField, ThermalNetwork};
use crate::cooling::{CellPos, CoolingPattern};
use crate::stack::LayerKind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBalance {
    /// W
    pub input: f64,
    /// Heat leaving through the sink to ambient, W.
    pub sink: f64,
    /// Enthalpy carried out by the coolant, W.
    pub coolant: f64,
}

impl EnergyBalance {
    /// `|in − out| / in`, or the absolute imbalance when no power is injected.
    pub fn relative_error(&self) -> f64 {
        let diff = (self.input - self.sink - self.coolant).abs();
        if self.input > 0.0 {
            diff / self.input
        } else {
            diff
        }
    }
}

pub fn energy_balance(net: &ThermalNetwork, field: &ThermalField, sources: &[f64]) -> EnergyBalance {
    let input = sources.iter().sum();
    let sink = net
        .ambient_conductance
        .iter()
        .zip(&field.nodes)
        .map(|(g, t)| g * (t - net.ambient_temperature))
        .sum();
    let coolant = net
        .channels
        .iter()
        .flat_map(|ch| ch.lanes.iter().map(move |lane| ch.capacity_rate * (field.nodes[*lane.last().unwrap()] - ch.inlet_temperature)))
        .sum();
    EnergyBalance { input, sink, coolant }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelOutlet {
    pub layer: usize,
    pub inlet: CellPos,
    pub outlet: CellPos,
    /// K
    pub inlet_temperature: f64,
    /// K
    pub outlet_temperature: f64,
    /// Heat convected into the lane from the surrounding solid, W.
    pub absorbed: f64,
    /// W/K
    pub capacity_rate: f64,
}

impl ChannelOutlet {
    /// Enthalpy gain of the coolant, W.
    pub fn enthalpy_rise(&self) -> f64 {
        self.capacity_rate * (self.outlet_temperature - self.inlet_temperature)
    }
}

/// Outlet temperature and absorbed heat of every lane of the microchannel
/// layer that carries `pattern`.
pub fn coolant_outlet_temperatures(
    net: &ThermalNetwork,
    field: &ThermalField,
    pattern: &CoolingPattern,
) -> Result<Vec<ChannelOutlet>, ThermalError> {
    let ch = net.channels.iter().find(|c| *c.pattern == *pattern).ok_or_else(|| ThermalError::PatternMismatch {
        layer: usize::MAX,
        detail: "pattern is not part of this network".into(),
    })?;
    if field.nodes.len() != net.node_count() {
        return Err(ThermalError::PatternMismatch { layer: ch.layer, detail: "field does not belong to this network".into() });
    }
    let t = &field.nodes;
    Ok(ch
        .lanes
        .iter()
        .zip(pattern.inlets.iter())
        .map(|(lane, &inlet)| {
            let mut absorbed = 0.0;
            for &i in lane {
                let (cols, vals) = net.matrix.row(i);
                for (&j, &a) in cols.iter().zip(vals) {
                    if j != i && !net.fluid[j] {
                        absorbed += -a * (t[j] - t[i]);
                    }
                }
            }
            let last = *lane.last().unwrap();
            let cell = last / net.layer_count();
            ChannelOutlet {
                layer: ch.layer,
                inlet,
                outlet: (cell / net.grid.cols, cell % net.grid.cols),
                inlet_temperature: ch.inlet_temperature,
                outlet_temperature: t[last],
                absorbed,
                capacity_rate: ch.capacity_rate,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockStat {
    pub layer: usize,
    pub name: String,
    pub mean: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerStat {
    pub layer: usize,
    pub kind: LayerKind,
    pub mean: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Die layers bottom-up, blocks in floorplan order.
    pub blocks: Vec<BlockStat>,
    pub layers: Vec<LayerStat>,
    pub stack_max: f64,
}

impl Summary {
    pub fn hottest_block(&self) -> Option<&BlockStat> {
        self.blocks.iter().fold(None, |best: Option<&BlockStat>, b| match best {
            Some(x) if x.max >= b.max => Some(x),
            _ => Some(b),
        })
    }

    pub fn layer_max(&self) -> Vec<f64> {
        self.layers.iter().map(|l| l.max).collect()
    }
}

pub fn summarize(net: &ThermalNetwork, field: &ThermalField) -> Summary {
    let nl = net.layer_count();
    let mut blocks = Vec::new();
    for die in &net.dies {
        let nb = die.raster.block_names.len();
        let mut sum = vec![0.0; nb];
        let mut max = vec![f64::NEG_INFINITY; nb];
        for (cell, &owner) in die.raster.owner.iter().enumerate() {
            let t = field.nodes[cell * nl + die.layer];
            sum[owner] += t;
            max[owner] = max[owner].max(t);
        }
        for (b, name) in die.raster.block_names.iter().enumerate() {
            // Blocks too small to own a cell are reported as NaN.
            let count = die.cell_counts[b];
            let (mean, mx) = if count == 0 { (f64::NAN, f64::NAN) } else { (sum[b] / count as f64, max[b]) };
            blocks.push(BlockStat { layer: die.layer, name: name.clone(), mean, max: mx });
        }
    }
    let cells = net.grid.cells() as f64;
    let layers = (0..nl)
        .map(|l| {
            let values = field.nodes.iter().skip(l).step_by(nl);
            LayerStat {
                layer: l,
                kind: net.layer_kinds[l],
                mean: values.clone().sum::<f64>() / cells,
                max: values.copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect();
    Summary { blocks, layers, stack_max: field.max() }
}

/// Pearson correlation coefficient; `NaN` when either input is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "correlated series must have equal length");
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    sab / (saa * sbb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_of_linear_series() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [2.0, 4.0, 6.0, 8.0];
        assert!((pearson(&a, &b) - 1.0).abs() < 1e-15);
        let c = [8.0, 6.0, 4.0, 2.0];
        assert!((pearson(&a, &c) + 1.0).abs() < 1e-15);
        assert!(pearson(&a, &[1.0; 4]).is_nan());
    }
}
