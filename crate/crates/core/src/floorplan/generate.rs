use serde::{Deserialize, Serialize};

use super::{Block, Floorplan, FloorplanError, FILLER_PREFIX};
use crate::stack::DieOutline;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Template {
    CoreGrid,
    BankGrid,
}

impl Template {
    pub fn parse(s: &str) -> Option<Template> {
        match s {
            "core_grid" => Some(Template::CoreGrid),
            "bank_grid" => Some(Template::BankGrid),
            _ => None,
        }
    }

    pub fn default_prefix(self) -> &'static str {
        match self {
            Template::CoreGrid => "C",
            Template::BankGrid => "B",
        }
    }
}

/// Most-square factorization `rows × cols = n`, with the larger factor along
/// the longer outline axis.
fn factorize(n: usize, outline: DieOutline) -> (usize, usize) {
    let mut small = (n as f64).sqrt() as usize;
    while small > 1 && n % small != 0 {
        small -= 1;
    }
    let small = small.max(1);
    let large = n / small;
    if outline.width >= outline.height {
        (small, large)
    } else {
        (large, small)
    }
}

/// `n` equal blocks named `prefix_0 … prefix_{n-1}` in row-major order,
/// row 0 at the bottom edge.
pub fn generate_template(outline: DieOutline, template: Template, count: usize, prefix: &str) -> Floorplan {
    generate_template_from(outline, template, count, prefix, 0)
}

/// Like [`generate_template`] but numbering starts at `first_index`, so two
/// dies can carry disjoint block names (e.g. banks 0-15 and 16-31).
pub fn generate_template_from(
    outline: DieOutline,
    _template: Template,
    count: usize,
    prefix: &str,
    first_index: usize,
) -> Floorplan {
    let count = count.max(1);
    let (rows, cols) = factorize(count, outline);
    let w = outline.width / cols as f64;
    let h = outline.height / rows as f64;
    let mut blocks = Vec::with_capacity(count);
    for r in 0..rows {
        for c in 0..cols {
            let k = first_index + r * cols + c;
            blocks.push(Block::new(format!("{prefix}_{k}"), w, h, c as f64 * w, r as f64 * h));
        }
    }
    Floorplan { outline, blocks }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaEntry {
    pub name: String,
    /// m²
    pub area: f64,
    /// Preferred width/height ratio.
    pub aspect_hint: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AreaBudget {
    pub entries: Vec<AreaEntry>,
}

impl AreaBudget {
    pub fn push(&mut self, name: impl Into<String>, area: f64, aspect_hint: Option<f64>) {
        self.entries.push(AreaEntry { name: name.into(), area, aspect_hint });
    }

    /// Parses `name area_m2 [aspect]` lines.
    pub fn parse(text: &str) -> Result<AreaBudget, crate::error::ParseError> {
        use crate::error::{content_lines, fields, parse_f64, ParseError};
        let mut budget = AreaBudget::default();
        for (line, content) in content_lines(text) {
            let f = fields(content);
            if f.len() < 2 || f.len() > 3 {
                return Err(ParseError::new(line, "expected '<name> <area_m2> [aspect]'"));
            }
            let aspect = f.get(2).map(|s| parse_f64(line, s, "aspect")).transpose()?;
            budget.push(f[0], parse_f64(line, f[1], "area")?, aspect);
        }
        Ok(budget)
    }
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

/// Deterministic slicing packer: entries sorted by area (descending, stable),
/// each cut as a full-span slab off the remaining rectangle along its longer
/// axis. The last entry takes the exact remainder so coverage is exact.
pub fn generate_from_areas(outline: DieOutline, budget: &AreaBudget) -> Result<Floorplan, FloorplanError> {
    if budget.entries.is_empty() {
        return Err(FloorplanError::Budget("empty area budget".into()));
    }
    for e in &budget.entries {
        if !(e.area > 0.0 && e.area.is_finite()) {
            return Err(FloorplanError::Budget(format!("entry '{}' needs a positive area", e.name)));
        }
        if let Some(a) = e.aspect_hint {
            if !(a > 0.0 && a.is_finite()) {
                return Err(FloorplanError::Budget(format!("entry '{}' has an invalid aspect hint", e.name)));
            }
        }
    }
    let total: f64 = budget.entries.iter().map(|e| e.area).sum();
    let scale = outline.area() / total;
    let mut order: Vec<usize> = (0..budget.entries.len()).collect();
    order.sort_by(|&a, &b| budget.entries[b].area.total_cmp(&budget.entries[a].area));

    let mut rem = Rect { x: 0.0, y: 0.0, w: outline.width, h: outline.height };
    let mut placed: Vec<(usize, Block)> = Vec::with_capacity(order.len());
    for (k, &i) in order.iter().enumerate() {
        let entry = &budget.entries[i];
        if k + 1 == order.len() {
            placed.push((i, Block::new(entry.name.clone(), rem.w, rem.h, rem.x, rem.y)));
            break;
        }
        let area = entry.area * scale;
        // Vertical slab spans the full remaining height; horizontal spans the width.
        let vertical_dims = ((area / rem.h).min(rem.w), rem.h);
        let horizontal_dims = (rem.w, (area / rem.w).min(rem.h));
        let vertical = match entry.aspect_hint {
            Some(hint) => {
                let miss = |(w, h): (f64, f64)| ((w / h) / hint).ln().abs();
                let (mv, mh) = (miss(vertical_dims), miss(horizontal_dims));
                if mv == mh {
                    rem.w >= rem.h
                } else {
                    mv < mh
                }
            }
            None => rem.w >= rem.h,
        };
        let block = if vertical {
            let (w, h) = vertical_dims;
            let b = Block::new(entry.name.clone(), w, h, rem.x, rem.y);
            rem = Rect { x: rem.x + w, y: rem.y, w: rem.w - w, h: rem.h };
            b
        } else {
            let (w, h) = horizontal_dims;
            let b = Block::new(entry.name.clone(), w, h, rem.x, rem.y);
            rem = Rect { x: rem.x, y: rem.y + h, w: rem.w, h: rem.h - h };
            b
        };
        placed.push((i, block));
    }
    placed.sort_by_key(|(i, _)| *i);
    Floorplan::new(outline, placed.into_iter().map(|(_, b)| b).collect())
}

/// Covers every uncovered region of `outline` with zero-power filler blocks
/// named `_fill_0`, `_fill_1`, … so the result tiles the die.
pub fn fill_gaps(outline: DieOutline, blocks: &[Block]) -> Vec<Block> {
    let mut xs: Vec<f64> = vec![0.0, outline.width];
    let mut ys: Vec<f64> = vec![0.0, outline.height];
    for b in blocks {
        xs.extend([b.left_x, b.right()]);
        ys.extend([b.bottom_y, b.top()]);
    }
    let clean = |v: &mut Vec<f64>, hi: f64| {
        v.retain(|x| (0.0..=hi).contains(x));
        v.sort_by(f64::total_cmp);
        v.dedup_by(|a, b| (*a - *b).abs() <= super::EDGE_TOL);
    };
    clean(&mut xs, outline.width);
    clean(&mut ys, outline.height);
    let mut out: Vec<Block> = blocks.to_vec();
    let mut k = 0;
    for j in 0..ys.len() - 1 {
        let (y0, y1) = (ys[j], ys[j + 1]);
        let cy = 0.5 * (y0 + y1);
        let mut run_start: Option<usize> = None;
        for i in 0..=xs.len() - 1 {
            let free = i + 1 < xs.len() && {
                let cx = 0.5 * (xs[i] + xs[i + 1]);
                !blocks.iter().any(|b| b.contains(cx, cy))
            };
            match (free, run_start) {
                (true, None) => run_start = Some(i),
                (false, Some(s)) => {
                    out.push(Block::new(format!("{FILLER_PREFIX}{k}"), xs[i] - xs[s], y1 - y0, xs[s], y0));
                    k += 1;
                    run_start = None;
                }
                _ => {}
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o() -> DieOutline {
        DieOutline::new(8e-3, 8e-3)
    }

    #[test]
    fn four_cores_form_two_by_two() {
        let fp = generate_template(o(), Template::CoreGrid, 4, "C");
        let names: Vec<_> = fp.block_names().collect();
        assert_eq!(names, ["C_0", "C_1", "C_2", "C_3"]);
        for b in &fp.blocks {
            assert_eq!((b.width, b.height), (4e-3, 4e-3));
        }
        assert_eq!((fp.blocks[1].left_x, fp.blocks[1].bottom_y), (4e-3, 0.0));
        assert_eq!((fp.blocks[2].left_x, fp.blocks[2].bottom_y), (0.0, 4e-3));
        fp.check().unwrap();
    }

    #[test]
    fn sixteen_banks_form_four_by_four() {
        let fp = generate_template_from(o(), Template::BankGrid, 16, "B", 16);
        assert_eq!(fp.blocks.len(), 16);
        assert_eq!(fp.blocks[0].name, "B_16");
        assert_eq!(fp.blocks[15].name, "B_31");
        assert!(fp.blocks.iter().all(|b| b.width == 2e-3 && b.height == 2e-3));
        fp.check().unwrap();
    }

    #[test]
    fn single_block_covers_die() {
        let fp = generate_template(o(), Template::CoreGrid, 1, "C");
        assert_eq!(fp.blocks, vec![Block::new("C_0", 8e-3, 8e-3, 0.0, 0.0)]);
    }

    #[test]
    fn prime_count_is_one_row() {
        let fp = generate_template(DieOutline::new(2e-3, 1e-3), Template::CoreGrid, 7, "C");
        assert!(fp.blocks.iter().all(|b| b.height == 1e-3));
        fp.check().unwrap();
    }

    #[test]
    fn equal_halves_split_longer_axis() {
        let mut budget = AreaBudget::default();
        budget.push("A", 1.0, None);
        budget.push("B", 1.0, None);
        let fp = generate_from_areas(DieOutline::new(8e-3, 4e-3), &budget).unwrap();
        assert_eq!(fp.blocks[0], Block::new("A", 4e-3, 4e-3, 0.0, 0.0));
        assert_eq!(fp.blocks[1].left_x, 4e-3);
        assert_eq!(fp.blocks[1].height, 4e-3);
    }

    #[test]
    fn quarter_quarter_half_budget() {
        let outline = o();
        let a = outline.area();
        let mut budget = AreaBudget::default();
        budget.push("A", 0.25 * a, None);
        budget.push("B", 0.25 * a, None);
        budget.push("C", 0.5 * a, None);
        let fp = generate_from_areas(outline, &budget).unwrap();
        let sum: f64 = fp.blocks.iter().map(Block::area).sum();
        assert!((sum - a).abs() <= 1e-9 * a);
        for (b, want) in fp.blocks.iter().zip([0.25, 0.25, 0.5]) {
            assert!((b.area() - want * a).abs() <= 1e-6 * want * a, "{}", b.name);
        }
    }

    #[test]
    fn single_entry_is_full_die() {
        let mut budget = AreaBudget::default();
        budget.push("X", 64e-6, None);
        let fp = generate_from_areas(o(), &budget).unwrap();
        assert_eq!(fp.blocks, vec![Block::new("X", 8e-3, 8e-3, 0.0, 0.0)]);
    }

    #[test]
    fn empty_budget_is_error() {
        assert!(generate_from_areas(o(), &AreaBudget::default()).is_err());
    }

    #[test]
    fn aspect_hint_picks_orientation() {
        let mut budget = AreaBudget::default();
        budget.push("wide", 0.5, Some(4.0));
        budget.push("rest", 0.5, None);
        let fp = generate_from_areas(o(), &budget).unwrap();
        let wide = fp.block("wide").unwrap();
        assert!(wide.width > wide.height);
    }

    #[test]
    fn fillers_cover_whitespace() {
        let blocks = vec![Block::new("A", 4e-3, 4e-3, 0.0, 0.0), Block::new("B", 2e-3, 8e-3, 6e-3, 0.0)];
        let filled = fill_gaps(o(), &blocks);
        let fp = Floorplan::new(o(), filled).unwrap();
        assert!(fp.blocks.iter().filter(|b| b.is_filler()).count() >= 2);
        assert_eq!(fp.block("_fill_0").map(|b| b.is_filler()), Some(true));
    }
}
