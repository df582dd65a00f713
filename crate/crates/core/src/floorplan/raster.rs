use super::Floorplan;
use crate::stack::Grid;

/// Tie-break offset for cell centers that fall on shared block edges.
const TIE_EPS: f64 = 1e-12;

/// Cell → block assignment of a floorplan on a simulation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Rasterization {
    pub grid: Grid,
    pub block_names: Vec<String>,
    /// Block index per cell, row-major.
    pub owner: Vec<usize>,
}

impl Rasterization {
    pub fn cell_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.block_names.len()];
        for &b in &self.owner {
            counts[b] += 1;
        }
        counts
    }

    pub fn block_of(&self, row: usize, col: usize) -> &str {
        &self.block_names[self.owner[self.grid.index(row, col)]]
    }

    pub fn block_index(&self, name: &str) -> Option<usize> {
        self.block_names.iter().position(|n| n == name)
    }
}

/// Assigns each cell to the block containing its center, shifted by
/// `(-ε, -ε)` so centers on shared edges go to the lower-left block.
pub fn rasterize(floorplan: &Floorplan, grid: &Grid) -> Rasterization {
    let mut owner = Vec::with_capacity(grid.cells());
    for r in 0..grid.rows {
        for c in 0..grid.cols {
            let (cx, cy) = grid.center(r, c);
            let (px, py) = (cx - TIE_EPS, cy - TIE_EPS);
            let found = floorplan.blocks.iter().position(|b| b.contains(px, py)).unwrap_or_else(|| {
                // Numerical sliver: fall back to the nearest block.
                floorplan
                    .blocks
                    .iter()
                    .enumerate()
                    .map(|(i, b)| {
                        let dx = (b.left_x - px).max(px - b.right()).max(0.0);
                        let dy = (b.bottom_y - py).max(py - b.top()).max(0.0);
                        (i, dx * dx + dy * dy)
                    })
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .map(|(i, _)| i)
                    .expect("floorplan has blocks")
            });
            owner.push(found);
        }
    }
    Rasterization {
        grid: *grid,
        block_names: floorplan.blocks.iter().map(|b| b.name.clone()).collect(),
        owner,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floorplan::{generate_template, Block, Template};
    use crate::stack::{grid_for, DieOutline};

    #[test]
    fn two_by_two_on_two_by_two() {
        let o = DieOutline::new(8e-3, 8e-3);
        let fp = generate_template(o, Template::CoreGrid, 4, "C");
        let r = rasterize(&fp, &grid_for(o, 2, 2).unwrap());
        assert_eq!(r.owner, vec![0, 1, 2, 3]);
        assert_eq!(r.block_of(1, 0), "C_2");
    }

    #[test]
    fn each_core_owns_a_quarter_of_64x64() {
        let o = DieOutline::new(8e-3, 8e-3);
        let fp = generate_template(o, Template::CoreGrid, 4, "C");
        let r = rasterize(&fp, &grid_for(o, 64, 64).unwrap());
        assert_eq!(r.cell_counts(), vec![1024; 4]);
    }

    #[test]
    fn single_block_owns_everything() {
        let o = DieOutline::new(3e-3, 5e-3);
        let fp = generate_template(o, Template::CoreGrid, 1, "X");
        let r = rasterize(&fp, &grid_for(o, 7, 11).unwrap());
        assert!(r.owner.iter().all(|&b| b == 0));
    }

    #[test]
    fn shared_edge_center_goes_lower_left() {
        // Block edge at x = 1.5 mm coincides with the center of column 1 on a 3-column grid.
        let o = DieOutline::new(3e-3, 2e-3);
        let fp = crate::floorplan::Floorplan::new(
            o,
            vec![Block::new("L", 1.5e-3, 2e-3, 0.0, 0.0), Block::new("R", 1.5e-3, 2e-3, 1.5e-3, 0.0)],
        )
        .unwrap();
        let r = rasterize(&fp, &grid_for(o, 2, 3).unwrap());
        assert_eq!(r.block_of(0, 1), "L");
        assert_eq!(r.cell_counts(), vec![4, 2]);
    }
}
