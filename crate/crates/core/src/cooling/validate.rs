use std::fmt;

use super::{CellPos, CoolingError, CoolingPattern};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PatternViolation {
    ShapeMismatch { expected: usize, got: usize },
    Geometry(String),
    /// Flow runs into a wall, or leaves the grid through a cell not listed as outlet.
    DeadEnd(CellPos),
    /// A closed loop of fluid cells; the position is one member.
    Cycle(CellPos),
    /// Fluid cell not reachable from any inlet.
    Unreachable(CellPos),
    /// Two upstream cells feed the same cell.
    Merge(CellPos),
    InletNotOnBoundary(CellPos),
    InletNotFluid(CellPos),
    InletHasUpstream(CellPos),
    OutletNotOnBoundary(CellPos),
    OutletNotFluid(CellPos),
    OutletDoesNotExit(CellPos),
}

impl fmt::Display for PatternViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use PatternViolation::*;
        match self {
            ShapeMismatch { expected, got } => write!(f, "expected {expected} cells, got {got}"),
            Geometry(m) => write!(f, "{m}"),
            DeadEnd((r, c)) => write!(f, "dead end at ({r}, {c})"),
            Cycle((r, c)) => write!(f, "flow cycle through ({r}, {c})"),
            Unreachable((r, c)) => write!(f, "fluid cell ({r}, {c}) not reachable from any inlet"),
            Merge((r, c)) => write!(f, "lanes merge at ({r}, {c})"),
            InletNotOnBoundary((r, c)) => write!(f, "inlet ({r}, {c}) not on the grid boundary"),
            InletNotFluid((r, c)) => write!(f, "inlet ({r}, {c}) is a wall cell"),
            InletHasUpstream((r, c)) => write!(f, "inlet ({r}, {c}) is fed by another fluid cell"),
            OutletNotOnBoundary((r, c)) => write!(f, "outlet ({r}, {c}) not on the grid boundary"),
            OutletNotFluid((r, c)) => write!(f, "outlet ({r}, {c}) is a wall cell"),
            OutletDoesNotExit((r, c)) => write!(f, "outlet ({r}, {c}) does not discharge across the boundary"),
        }
    }
}

/// Reports every routing defect of a pattern; empty means valid.
pub fn validate_pattern(p: &CoolingPattern) -> Vec<PatternViolation> {
    use PatternViolation::*;
    let mut out = Vec::new();
    if p.cells.len() != p.rows * p.cols {
        out.push(ShapeMismatch { expected: p.rows * p.cols, got: p.cells.len() });
        return out;
    }
    if !(p.channel_width > 0.0 && p.channel_pitch > 0.0) || p.channel_width > p.channel_pitch {
        out.push(Geometry(format!(
            "channel width {} m must be positive and not exceed pitch {} m",
            p.channel_width, p.channel_pitch
        )));
    }
    let in_grid = |&(r, c): &CellPos| r < p.rows && c < p.cols;
    let idx = |(r, c): CellPos| r * p.cols + c;
    let mut is_inlet = vec![false; p.cells.len()];
    let mut is_outlet = vec![false; p.cells.len()];
    for &cell in &p.inlets {
        if !in_grid(&cell) {
            out.push(InletNotOnBoundary(cell));
            continue;
        }
        is_inlet[idx(cell)] = true;
        if !p.on_boundary(cell) {
            out.push(InletNotOnBoundary(cell));
        }
        if !p.is_fluid(cell.0, cell.1) {
            out.push(InletNotFluid(cell));
        }
    }
    for &cell in &p.outlets {
        if !in_grid(&cell) {
            out.push(OutletNotOnBoundary(cell));
            continue;
        }
        is_outlet[idx(cell)] = true;
        if !p.on_boundary(cell) {
            out.push(OutletNotOnBoundary(cell));
        } else if !p.is_fluid(cell.0, cell.1) {
            out.push(OutletNotFluid(cell));
        } else if p.next(cell).is_some() {
            out.push(OutletDoesNotExit(cell));
        }
    }

    let mut indegree = vec![0u32; p.cells.len()];
    for r in 0..p.rows {
        for c in 0..p.cols {
            if !p.is_fluid(r, c) {
                continue;
            }
            match p.next((r, c)) {
                Some(n) if p.is_fluid(n.0, n.1) => indegree[idx(n)] += 1,
                Some(_) => out.push(DeadEnd((r, c))),
                None if !is_outlet[idx((r, c))] => out.push(DeadEnd((r, c))),
                None => {}
            }
        }
    }
    for r in 0..p.rows {
        for c in 0..p.cols {
            let i = idx((r, c));
            if indegree[i] > 1 {
                out.push(Merge((r, c)));
            }
            if is_inlet[i] && indegree[i] > 0 {
                out.push(InletHasUpstream((r, c)));
            }
        }
    }

    // Cycle detection by walking downstream with three-state marking.
    let mut state = vec![0u8; p.cells.len()]; // 0 new, 1 on current walk, 2 done
    for start in 0..p.cells.len() {
        if p.cells[start].is_none() || state[start] != 0 {
            continue;
        }
        let mut walk = Vec::new();
        let mut cur = (start / p.cols, start % p.cols);
        loop {
            let i = idx(cur);
            if state[i] == 1 {
                out.push(Cycle(cur));
                break;
            }
            if state[i] == 2 {
                break;
            }
            state[i] = 1;
            walk.push(i);
            match p.next(cur) {
                Some(n) if p.is_fluid(n.0, n.1) => cur = n,
                _ => break,
            }
        }
        for i in walk {
            state[i] = 2;
        }
    }

    let mut reached = vec![false; p.cells.len()];
    for &inlet in p.inlets.iter().filter(|c| in_grid(c)) {
        let mut cur = inlet;
        while p.is_fluid(cur.0, cur.1) && !reached[idx(cur)] {
            reached[idx(cur)] = true;
            match p.next(cur) {
                Some(n) => cur = n,
                None => break,
            }
        }
    }
    for r in 0..p.rows {
        for c in 0..p.cols {
            if p.is_fluid(r, c) && !reached[idx((r, c))] {
                out.push(Unreachable((r, c)));
            }
        }
    }
    out
}

/// Ordered lanes, one per inlet, each running inlet → outlet.
pub fn channel_paths(p: &CoolingPattern) -> Result<Vec<Vec<CellPos>>, CoolingError> {
    let violations = validate_pattern(p);
    if !violations.is_empty() {
        return Err(CoolingError::Invalid(violations));
    }
    Ok(p.inlets
        .iter()
        .map(|&inlet| {
            let mut path = vec![inlet];
            let mut cur = inlet;
            while let Some(n) = p.next(cur) {
                path.push(n);
                cur = n;
            }
            path
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cooling::{generate_pattern, Coolant, FlowDir, PatternStyle};
    use crate::stack::{grid_for, DieOutline};
    use proptest::prelude::*;

    fn blank(rows: usize, cols: usize) -> CoolingPattern {
        CoolingPattern {
            rows,
            cols,
            cells: vec![None; rows * cols],
            inlets: vec![],
            outlets: vec![],
            channel_width: 1e-4,
            channel_pitch: 2e-4,
            coolant: Coolant::water(1e-4, 1e-4),
        }
    }

    #[test]
    fn flow_into_wall_is_dead_end() {
        let mut p = blank(3, 3);
        p.cells[0] = Some(FlowDir::PosX); // (0,0) → (0,1) which is wall
        p.inlets.push((0, 0));
        assert!(validate_pattern(&p).contains(&PatternViolation::DeadEnd((0, 0))));
    }

    #[test]
    fn facing_cells_form_a_cycle() {
        let mut p = blank(3, 3);
        p.cells[3 + 1] = Some(FlowDir::PosX); // (1,1) → (1,2)
        p.cells[3 + 2] = Some(FlowDir::NegX); // (1,2) → (1,1)
        let v = validate_pattern(&p);
        assert!(v.iter().any(|x| matches!(x, PatternViolation::Cycle(_))), "{v:?}");
        assert!(v.iter().any(|x| matches!(x, PatternViolation::Unreachable(_))));
    }

    #[test]
    fn interior_inlet_is_reported() {
        let mut p = blank(3, 3);
        p.cells[4] = Some(FlowDir::PosY);
        p.cells[7] = Some(FlowDir::PosY);
        p.inlets.push((1, 1));
        p.outlets.push((2, 1));
        assert_eq!(validate_pattern(&p), vec![PatternViolation::InletNotOnBoundary((1, 1))]);
    }

    #[test]
    fn single_cell_channel_has_unit_path() {
        let mut p = blank(2, 2);
        p.cells[0] = Some(FlowDir::NegX);
        p.inlets.push((0, 0));
        p.outlets.push((0, 0));
        assert_eq!(channel_paths(&p).unwrap(), vec![vec![(0, 0)]]);
    }

    #[test]
    fn vertical_paths_are_full_columns() {
        let g = grid_for(DieOutline::new(8e-4, 1.2e-3), 12, 8).unwrap();
        let p = generate_pattern(&g, PatternStyle::Vertical, 1e-4, 2e-4, Coolant::water(1e-4, 1e-4)).unwrap();
        let paths = channel_paths(&p).unwrap();
        assert_eq!(paths.len(), 4);
        for path in &paths {
            assert_eq!(path.len(), 12);
            assert!(path.windows(2).all(|w| w[1] == (w[0].0 + 1, w[0].1)));
        }
    }

    #[test]
    fn invalid_pattern_has_no_paths() {
        let mut p = blank(3, 3);
        p.cells[0] = Some(FlowDir::PosX);
        p.inlets.push((0, 0));
        assert!(matches!(channel_paths(&p), Err(CoolingError::Invalid(_))));
    }

    proptest! {
        #[test]
        fn generated_patterns_partition_fluid_cells(
            half_rows in 1usize..12, half_cols in 1usize..12, w in 1usize..3, extra in 0usize..3, style in 0usize..3
        ) {
            let p_cells = w + extra.max(1);
            let (rows, cols) = match style {
                0 => (2 * half_rows, p_cells * half_cols),
                1 => (p_cells * half_rows, 2 * half_cols),
                _ => (2 * half_rows, 2 * half_cols),
            };
            prop_assume!(rows >= 2 && cols >= 2);
            let cell = 1e-4;
            let g = grid_for(DieOutline::new(cols as f64 * cell, rows as f64 * cell), rows, cols).unwrap();
            let style = [PatternStyle::Vertical, PatternStyle::Horizontal, PatternStyle::Bent90][style];
            let p = generate_pattern(&g, style, w as f64 * cell, p_cells as f64 * cell, Coolant::water(cell, cell)).unwrap();
            prop_assert!(validate_pattern(&p).is_empty());
            let paths = channel_paths(&p).unwrap();
            let total: usize = paths.iter().map(Vec::len).sum();
            prop_assert_eq!(total, p.fluid_count());
            let mut seen = std::collections::HashSet::new();
            for path in &paths {
                prop_assert!(p.inlets.contains(&path[0]));
                prop_assert!(p.outlets.contains(path.last().unwrap()));
                for c in path {
                    prop_assert!(seen.insert(*c));
                }
            }
            if style == PatternStyle::Bent90 {
                prop_assert_eq!(p.rotated_180(), p.clone());
            }
        }
    }
}
