use std::collections::VecDeque;
use std::sync::Arc;

use super::sparse::CsrMatrix;
use super::ThermalError;
use crate::cooling::{channel_paths, CoolingPattern};
use crate::floorplan::{rasterize, Rasterization};
use crate::stack::{validate_stack, Grid, LayerKind, Stack};

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelLayer {
    pub layer: usize,
    pub pattern: Arc<CoolingPattern>,
    /// Node indices per lane, inlet first, in the pattern's inlet order.
    pub lanes: Vec<Vec<usize>>,
    /// Heat-capacity rate of one lane, W/K.
    pub capacity_rate: f64,
    pub inlet_temperature: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiePower {
    pub layer: usize,
    pub raster: Rasterization,
    pub cell_counts: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NetworkCounts {
    pub nodes: usize,
    pub fluid_nodes: usize,
    /// Solid–solid couplings inside a layer.
    pub lateral: usize,
    /// Solid–solid couplings between adjacent layers.
    pub vertical: usize,
    /// Fluid–solid convective couplings.
    pub convective: usize,
    /// Upstream links between fluid nodes.
    pub advective: usize,
    pub ambient: usize,
}

/// Finite-volume RC network of a stack. Node `(layer, row, col)` has index
/// `(row·cols + col)·layers + layer`, which keeps the matrix bandwidth at
/// `cols·layers`.
#[derive(Debug, Clone)]
pub struct ThermalNetwork {
    pub grid: Grid,
    pub layer_kinds: Vec<LayerKind>,
    /// System matrix `A` of the steady balance `A·T = b + P`: conduction,
    /// convection to coolant and ambient, and upwind advection.
    pub matrix: CsrMatrix,
    /// J/K per node.
    pub capacitance: Vec<f64>,
    /// Boundary injections: ambient and coolant-inlet terms, W.
    pub boundary_rhs: Vec<f64>,
    /// W/K per node to ambient.
    pub ambient_conductance: Vec<f64>,
    pub ambient_temperature: f64,
    pub fluid: Vec<bool>,
    pub channels: Vec<ChannelLayer>,
    pub dies: Vec<DiePower>,
    pub counts: NetworkCounts,
}

impl ThermalNetwork {
    pub fn layer_count(&self) -> usize {
        self.layer_kinds.len()
    }

    pub fn node_count(&self) -> usize {
        self.capacitance.len()
    }

    pub fn node(&self, layer: usize, row: usize, col: usize) -> usize {
        (row * self.grid.cols + col) * self.layer_count() + layer
    }

    /// Lowest temperature any boundary can impose.
    pub fn min_boundary_temperature(&self) -> f64 {
        self.channels.iter().map(|c| c.inlet_temperature).fold(self.ambient_temperature, f64::min)
    }

    /// Maps per-block power onto node sources. A block name applies to every
    /// die layer whose floorplan contains it; power is spread evenly over the
    /// cells the block owns.
    pub fn cell_sources<'a, I>(&self, block_power: I) -> Result<Vec<f64>, ThermalError>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        let mut q = vec![0.0; self.node_count()];
        for (name, power) in block_power {
            if !(power >= 0.0 && power.is_finite()) {
                return Err(ThermalError::InvalidPower(format!("block '{name}' power {power} W")));
            }
            let mut found = false;
            for die in &self.dies {
                let Some(b) = die.raster.block_index(name) else { continue };
                found = true;
                let count = die.cell_counts[b];
                if count == 0 {
                    if power > 0.0 {
                        return Err(ThermalError::InvalidPower(format!(
                            "block '{name}' on layer {} owns no grid cell; refine the grid",
                            die.layer
                        )));
                    }
                    continue;
                }
                let per_cell = power / count as f64;
                for (cell, &owner) in die.raster.owner.iter().enumerate() {
                    if owner == b {
                        q[cell * self.layer_count() + die.layer] += per_cell;
                    }
                }
            }
            if !found && power > 0.0 {
                return Err(ThermalError::InvalidPower(format!("block '{name}' is not on any die")));
            }
        }
        Ok(q)
    }
}

/// Rasterizes every die floorplan of `stack` on `grid`.
pub fn rasterize_stack(stack: &Stack, grid: &Grid) -> Vec<Option<Rasterization>> {
    stack.layers.iter().map(|l| l.floorplan.as_ref().map(|f| rasterize(&f.value, grid))).collect()
}

/// Resistance between a node center and one of its faces.
#[derive(Clone, Copy)]
enum Half {
    Solid(f64),
    Fluid(f64),
}

pub fn assemble(stack: &Stack, grid: &Grid, rasters: &[Option<Rasterization>]) -> Result<ThermalNetwork, ThermalError> {
    let violations = validate_stack(stack);
    if !violations.is_empty() {
        return Err(ThermalError::InvalidStack(violations));
    }
    let nl = stack.layers.len();
    let (rows, cols) = (grid.rows, grid.cols);
    let n = rows * cols * nl;
    let node = |l: usize, r: usize, c: usize| (r * cols + c) * nl + l;
    let (cw, ch, area) = (grid.cell_width, grid.cell_height, grid.cell_area());

    let mut dies = Vec::new();
    let mut channels = Vec::new();
    let mut fluid = vec![false; n];
    for (li, layer) in stack.layers.iter().enumerate() {
        match layer.kind {
            LayerKind::Die => {
                let raster = rasters
                    .get(li)
                    .and_then(Option::as_ref)
                    .ok_or(ThermalError::MissingRasterization { layer: li })?;
                if raster.grid.rows != rows || raster.grid.cols != cols {
                    return Err(ThermalError::MissingRasterization { layer: li });
                }
                let cell_counts = raster.cell_counts();
                dies.push(DiePower { layer: li, raster: raster.clone(), cell_counts });
            }
            LayerKind::Microchannel => {
                let pattern = layer.pattern.as_ref().ok_or(ThermalError::MissingPattern { layer: li })?;
                let p = &pattern.value;
                if p.rows != rows || p.cols != cols {
                    return Err(ThermalError::PatternMismatch {
                        layer: li,
                        detail: format!("pattern is {}x{}, grid is {rows}x{cols}", p.rows, p.cols),
                    });
                }
                let paths = channel_paths(p).map_err(|e| ThermalError::PatternMismatch { layer: li, detail: e.to_string() })?;
                let lanes: Vec<Vec<usize>> =
                    paths.iter().map(|path| path.iter().map(|&(r, c)| node(li, r, c)).collect()).collect();
                for lane in &lanes {
                    for &i in lane {
                        fluid[i] = true;
                    }
                }
                channels.push(ChannelLayer {
                    layer: li,
                    pattern: Arc::clone(&pattern.value),
                    lanes,
                    capacity_rate: p.coolant.capacity_rate(),
                    inlet_temperature: p.coolant.inlet_temperature,
                });
            }
            _ => {}
        }
    }

    let htc_of = |l: usize| stack.layers[l].pattern.as_ref().map_or(0.0, |p| p.value.coolant.convection_coefficient);
    let cv_of = |l: usize| stack.layers[l].pattern.as_ref().map_or(0.0, |p| p.value.coolant.volumetric_heat_capacity);
    let half = |i: usize, l: usize, half_len: f64, face: f64| {
        if fluid[i] {
            Half::Fluid(1.0 / (htc_of(l) * face))
        } else {
            Half::Solid(half_len / (stack.layers[l].material.thermal_conductivity * face))
        }
    };

    let mut counts = NetworkCounts { nodes: n, fluid_nodes: fluid.iter().filter(|f| **f).count(), ..Default::default() };
    let mut t: Vec<(usize, usize, f64)> = Vec::with_capacity(n * 7);
    let couple = |t: &mut Vec<(usize, usize, f64)>, counts: &mut NetworkCounts, i: usize, j: usize, a: Half, b: Half, vertical: bool| {
        let g = match (a, b) {
            (Half::Fluid(_), Half::Fluid(_)) => return,
            (Half::Solid(x), Half::Solid(y)) => {
                if vertical {
                    counts.vertical += 1;
                } else {
                    counts.lateral += 1;
                }
                1.0 / (x + y)
            }
            (Half::Solid(x), Half::Fluid(y)) | (Half::Fluid(y), Half::Solid(x)) => {
                counts.convective += 1;
                1.0 / (x + y)
            }
        };
        t.push((i, i, g));
        t.push((j, j, g));
        t.push((i, j, -g));
        t.push((j, i, -g));
    };

    let mut capacitance = vec![0.0; n];
    for r in 0..rows {
        for c in 0..cols {
            for (l, layer) in stack.layers.iter().enumerate() {
                let i = node(l, r, c);
                let th = layer.thickness;
                capacitance[i] =
                    if fluid[i] { cv_of(l) } else { layer.material.volumetric_heat_capacity } * area * th;
                // Every node carries a diagonal entry, even if isolated.
                t.push((i, i, 0.0));
                if c + 1 < cols {
                    let j = node(l, r, c + 1);
                    let face = th * ch;
                    couple(&mut t, &mut counts, i, j, half(i, l, cw / 2.0, face), half(j, l, cw / 2.0, face), false);
                }
                if r + 1 < rows {
                    let j = node(l, r + 1, c);
                    let face = th * cw;
                    couple(&mut t, &mut counts, i, j, half(i, l, ch / 2.0, face), half(j, l, ch / 2.0, face), false);
                }
                if l + 1 < nl {
                    let j = node(l + 1, r, c);
                    let up = stack.layers[l + 1].thickness;
                    couple(&mut t, &mut counts, i, j, half(i, l, th / 2.0, area), half(j, l + 1, up / 2.0, area), true);
                }
            }
        }
    }

    let mut boundary_rhs = vec![0.0; n];
    let mut ambient_conductance = vec![0.0; n];
    let top = nl - 1;
    let g_amb = stack.heatsink_htc * area;
    for r in 0..rows {
        for c in 0..cols {
            let i = node(top, r, c);
            if fluid[i] {
                continue;
            }
            ambient_conductance[i] = g_amb;
            boundary_rhs[i] += g_amb * stack.ambient_temperature;
            t.push((i, i, g_amb));
            counts.ambient += 1;
        }
    }
    for ch in &channels {
        let mc = ch.capacity_rate;
        for lane in &ch.lanes {
            boundary_rhs[lane[0]] += mc * ch.inlet_temperature;
            for (k, &i) in lane.iter().enumerate() {
                t.push((i, i, mc));
                if k > 0 {
                    t.push((i, lane[k - 1], -mc));
                    counts.advective += 1;
                }
            }
        }
    }

    let matrix = CsrMatrix::from_triplets(n, &t);
    let anchored: Vec<bool> = (0..n).map(|i| ambient_conductance[i] > 0.0 || boundary_rhs[i] > 0.0).collect();
    check_anchored(&matrix, &anchored)?;
    Ok(ThermalNetwork {
        grid: *grid,
        layer_kinds: stack.layers.iter().map(|l| l.kind).collect(),
        matrix,
        capacitance,
        boundary_rhs,
        ambient_conductance,
        ambient_temperature: stack.ambient_temperature,
        fluid,
        channels,
        dies,
        counts,
    })
}

/// Every node must reach an ambient or inlet boundary through nonzero
/// couplings; otherwise the steady system is singular.
pub(crate) fn check_anchored(matrix: &CsrMatrix, anchored: &[bool]) -> Result<(), ThermalError> {
    let n = matrix.n;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let (cols, vals) = matrix.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if j != i && v != 0.0 {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    let mut seen = anchored.to_vec();
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| anchored[i]).collect();
    while let Some(i) = queue.pop_front() {
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    match seen.iter().position(|s| !s) {
        Some(node) => Err(ThermalError::FloatingNetwork { node }),
        None => Ok(()),
    }
}
