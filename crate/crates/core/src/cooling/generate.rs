use serde::{Deserialize, Serialize};

use super::{Coolant, CoolingError, CoolingPattern, FlowDir};
use crate::stack::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternStyle {
    /// Straight channels along y, inlets on the south edge.
    Vertical,
    /// Straight channels along x, inlets on the west edge.
    Horizontal,
    /// Inlets on the north and south edges, outlets on the west and east
    /// edges; every lane bends 90° once.
    Bent90,
}

impl PatternStyle {
    pub fn as_str(self) -> &'static str {
        match self {
            PatternStyle::Vertical => "vertical",
            PatternStyle::Horizontal => "horizontal",
            PatternStyle::Bent90 => "bent90",
        }
    }

    pub fn parse(s: &str) -> Option<PatternStyle> {
        match s {
            "vertical" => Some(PatternStyle::Vertical),
            "horizontal" => Some(PatternStyle::Horizontal),
            "bent90" => Some(PatternStyle::Bent90),
            _ => None,
        }
    }
}

fn quantize(length: f64, cell: f64, what: &str) -> Result<usize, CoolingError> {
    let n = length / cell;
    let rounded = n.round();
    if !(length > 0.0) || rounded < 1.0 || (n - rounded).abs() > 1e-6 * rounded {
        return Err(CoolingError::Geometry(format!(
            "{what} {length} m must be a whole multiple (>= 1) of the {cell} m cell size"
        )));
    }
    Ok(rounded as usize)
}

/// Generates a cell-quantized pattern on `grid`.
///
/// Straight styles place one lane per fluid column (row) with the fluid
/// cells centred in each pitch. The bent style splits the die into four
/// quadrants of nested L-shaped lanes: a lane enters from the north or south
/// edge, runs inward to the quadrant diagonal, then turns toward the nearer
/// lateral edge. The result is mirror-symmetric about both mid-axes.
pub fn generate_pattern(
    grid: &Grid,
    style: PatternStyle,
    channel_width: f64,
    channel_pitch: f64,
    coolant: Coolant,
) -> Result<CoolingPattern, CoolingError> {
    if !coolant.is_valid() {
        return Err(CoolingError::Coolant);
    }
    let transverse = match style {
        PatternStyle::Vertical => grid.cell_width,
        PatternStyle::Horizontal => grid.cell_height,
        PatternStyle::Bent90 => grid.cell_width,
    };
    let w = quantize(channel_width, transverse, "channel width")?;
    let p = quantize(channel_pitch, transverse, "channel pitch")?;
    if style == PatternStyle::Bent90 {
        let wh = quantize(channel_width, grid.cell_height, "channel width")?;
        let ph = quantize(channel_pitch, grid.cell_height, "channel pitch")?;
        if (wh, ph) != (w, p) {
            return Err(CoolingError::Geometry(
                "bent channels need the same cell count for width and pitch along x and y".into(),
            ));
        }
    }
    if p < 2 {
        return Err(CoolingError::Geometry(format!("channel pitch must span at least 2 cells, got {p}")));
    }
    if w > p {
        return Err(CoolingError::Geometry(format!(
            "channel width ({w} cells) must not exceed channel pitch ({p} cells)"
        )));
    }
    let (rows, cols) = (grid.rows, grid.cols);
    let mut cells = vec![None; rows * cols];
    let mut inlets = Vec::new();
    let mut outlets = Vec::new();
    let offset = (p - w) / 2;
    let in_channel = |i: usize| {
        let k = i % p;
        k >= offset && k < offset + w
    };
    match style {
        PatternStyle::Vertical => {
            if cols % p != 0 {
                return Err(CoolingError::Geometry(format!(
                    "pitch of {p} cells must divide the {cols} grid columns"
                )));
            }
            for c in (0..cols).filter(|&c| in_channel(c)) {
                for r in 0..rows {
                    cells[r * cols + c] = Some(FlowDir::PosY);
                }
                inlets.push((0, c));
                outlets.push((rows - 1, c));
            }
        }
        PatternStyle::Horizontal => {
            if rows % p != 0 {
                return Err(CoolingError::Geometry(format!(
                    "pitch of {p} cells must divide the {rows} grid rows"
                )));
            }
            for r in (0..rows).filter(|&r| in_channel(r)) {
                for c in 0..cols {
                    cells[r * cols + c] = Some(FlowDir::PosX);
                }
                inlets.push((r, 0));
                outlets.push((r, cols - 1));
            }
        }
        PatternStyle::Bent90 => {
            if rows % 2 != 0 || cols % 2 != 0 {
                return Err(CoolingError::Geometry(format!(
                    "bent pattern needs an even grid, got {rows}x{cols}"
                )));
            }
            let (ha, hb) = (rows / 2, cols / 2);
            let m = ha.min(hb);
            let (ea, eb) = (ha - m, hb - m);
            // Quadrant transforms: local (a from the inlet edge, b from the
            // lateral edge) → grid cell, plus inward and lateral directions.
            let quadrants: [(bool, bool, FlowDir, FlowDir); 4] = [
                (true, false, FlowDir::NegY, FlowDir::NegX),  // north-west
                (true, true, FlowDir::NegY, FlowDir::PosX),   // north-east
                (false, false, FlowDir::PosY, FlowDir::NegX), // south-west
                (false, true, FlowDir::PosY, FlowDir::PosX),  // south-east
            ];
            for (north, east, inward, lateral) in quadrants {
                let to_grid = |a: usize, b: usize| {
                    let r = if north { rows - 1 - a } else { a };
                    let c = if east { cols - 1 - b } else { b };
                    (r, c)
                };
                for a in 0..ha {
                    for b in 0..hb {
                        let u = a as isize - ea as isize;
                        let v = b as isize - eb as isize;
                        let lane = u.max(v) as usize;
                        if lane % p >= w {
                            continue;
                        }
                        let (r, c) = to_grid(a, b);
                        cells[r * cols + c] = Some(if v > u { inward } else { lateral });
                    }
                }
                for lane in (0..m).filter(|d| d % p < w) {
                    inlets.push(to_grid(0, lane + eb));
                    outlets.push(to_grid(lane + ea, 0));
                }
            }
        }
    }
    inlets.sort_unstable();
    outlets.sort_unstable();
    Ok(CoolingPattern {
        rows,
        cols,
        cells,
        inlets,
        outlets,
        channel_width,
        channel_pitch,
        coolant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cooling::{channel_paths, validate_pattern};
    use crate::stack::{grid_for, DieOutline};

    fn grid(rows: usize, cols: usize) -> Grid {
        grid_for(DieOutline::new(cols as f64 * 1e-4, rows as f64 * 1e-4), rows, cols).unwrap()
    }

    fn water() -> Coolant {
        Coolant::water(1e-4, 1e-4)
    }

    #[test]
    fn vertical_64_has_32_channels_flowing_north() {
        let p = generate_pattern(&grid(64, 64), PatternStyle::Vertical, 1e-4, 2e-4, water()).unwrap();
        assert_eq!(p.inlets.len(), 32);
        assert_eq!(p.fluid_count(), 32 * 64);
        assert!(p.cells.iter().flatten().all(|d| *d == FlowDir::PosY));
        assert!(validate_pattern(&p).is_empty());
    }

    #[test]
    fn horizontal_flows_east() {
        let p = generate_pattern(&grid(8, 6), PatternStyle::Horizontal, 1e-4, 2e-4, water()).unwrap();
        assert_eq!(p.inlets, vec![(0, 0), (2, 0), (4, 0), (6, 0)]);
        assert!(p.outlets.iter().all(|o| o.1 == 5));
        assert!(validate_pattern(&p).is_empty());
    }

    #[test]
    fn bent90_is_balanced_and_valid() {
        for (r, c) in [(8, 8), (16, 16), (8, 12), (12, 8), (6, 6), (64, 64)] {
            let p = generate_pattern(&grid(r, c), PatternStyle::Bent90, 1e-4, 2e-4, water()).unwrap();
            assert!(validate_pattern(&p).is_empty(), "{r}x{c}: {:?}", validate_pattern(&p));
            let [south_in, north_in, west_in, east_in] = p.inlet_groups();
            assert_eq!(north_in.len(), south_in.len(), "{r}x{c}");
            assert!(west_in.is_empty() && east_in.is_empty());
            let [south_out, north_out, west_out, east_out] = p.outlet_groups();
            assert_eq!(east_out.len(), west_out.len(), "{r}x{c}");
            assert!(south_out.is_empty() && north_out.is_empty());
        }
    }

    #[test]
    fn bent90_is_invariant_under_half_turn() {
        let p = generate_pattern(&grid(16, 12), PatternStyle::Bent90, 1e-4, 3e-4, water()).unwrap();
        assert_eq!(p.rotated_180(), p);
    }

    #[test]
    fn bent90_lane_lengths_on_8x8() {
        // Quadrant 4×4, pitch 2, width 1: lanes d = 0 and 2 per quadrant. A lane
        // runs d+1 cells inward to its turning cell, then d cells to the edge.
        let p = generate_pattern(&grid(8, 8), PatternStyle::Bent90, 1e-4, 2e-4, water()).unwrap();
        let paths = channel_paths(&p).unwrap();
        let mut lengths: Vec<usize> = paths.iter().map(Vec::len).collect();
        lengths.sort_unstable();
        assert_eq!(lengths, vec![1, 1, 1, 1, 5, 5, 5, 5]);
        // Trace the north-west lane d = 2 by hand: enters (7,2), runs south to
        // (5,2), turns west through (5,1) and exits at (5,0).
        let nw = paths.iter().find(|path| path[0] == (7, 2)).unwrap();
        assert_eq!(nw, &vec![(7, 2), (6, 2), (5, 2), (5, 1), (5, 0)]);
    }

    #[test]
    fn width_above_pitch_is_geometry_error() {
        let err = generate_pattern(&grid(8, 8), PatternStyle::Vertical, 3e-4, 2e-4, water()).unwrap_err();
        assert!(matches!(err, CoolingError::Geometry(ref m) if m.contains("3 cells") && m.contains("2 cells")));
    }

    #[test]
    fn non_quantizable_width_is_geometry_error() {
        let err = generate_pattern(&grid(8, 8), PatternStyle::Vertical, 1.5e-4, 3e-4, water()).unwrap_err();
        assert!(matches!(err, CoolingError::Geometry(ref m) if m.contains("whole multiple")));
        let err = generate_pattern(&grid(8, 8), PatternStyle::Vertical, 1e-4, 3e-4, water()).unwrap_err();
        assert!(matches!(err, CoolingError::Geometry(ref m) if m.contains("divide")));
        let err = generate_pattern(&grid(6, 7), PatternStyle::Bent90, 1e-4, 2e-4, water()).unwrap_err();
        assert!(matches!(err, CoolingError::Geometry(_)));
    }
}
