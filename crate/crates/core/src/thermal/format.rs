//! Heatmap grid and summary text files.
//!
//! ```text
//! # layer 0 rows 64 cols 64 cell_w_m 0.000125 cell_h_m 0.000125 unit K
//! 318.523<TAB>318.601<TAB>...      (one line per grid row, row 0 first)
//! ```

use serde::{Deserialize, Serialize};

use super::{Summary, ThermalField};
use crate::error::{parse_f64, parse_usize, ParseError};

/// Formats `v` with `digits` significant digits in positional notation.
pub fn format_sig(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let magnitude = v.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    let s = format!("{v:.decimals$}");
    // Rounding may carry into a new leading digit (e.g. 999.9996 → 1000.000).
    let carried = s.trim_start_matches('-').split('.').next().map_or(0, str::len) as i64 > magnitude.max(0) + 1;
    if carried && decimals > 0 {
        format!("{v:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub layer: usize,
    pub rows: usize,
    pub cols: usize,
    /// m
    pub cell_width: f64,
    /// m
    pub cell_height: f64,
    /// K, row-major with row 0 first.
    pub temperatures: Vec<f64>,
}

impl Heatmap {
    pub fn from_field(field: &ThermalField, layer: usize) -> Heatmap {
        Heatmap {
            layer,
            rows: field.grid.rows,
            cols: field.grid.cols,
            cell_width: field.grid.cell_width,
            cell_height: field.grid.cell_height,
            temperatures: field.layer(layer),
        }
    }

    /// Text grid: a header line, then one tab-separated row per grid row.
    pub fn emit(&self) -> String {
        let mut s = format!(
            "# layer {} rows {} cols {} cell_w_m {} cell_h_m {} unit K\n",
            self.layer, self.rows, self.cols, self.cell_width, self.cell_height
        );
        for row in self.temperatures.chunks(self.cols) {
            let line: Vec<String> = row.iter().map(|t| format_sig(*t, 6)).collect();
            s.push_str(&line.join("\t"));
            s.push('\n');
        }
        s
    }
}

pub fn emit_heatmap(field: &ThermalField, layer: usize) -> String {
    Heatmap::from_field(field, layer).emit()
}

pub fn parse_heatmap(text: &str) -> Result<Heatmap, ParseError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| ParseError::new(1, "empty heatmap"))?;
    let f: Vec<&str> = header.trim_start_matches('#').split_whitespace().collect();
    let keys = ["layer", "rows", "cols", "cell_w_m", "cell_h_m", "unit"];
    if f.len() != 12 || f.iter().step_by(2).zip(keys).any(|(a, b)| *a != b) {
        return Err(ParseError::new(
            1,
            "expected '# layer <i> rows <r> cols <c> cell_w_m <w> cell_h_m <h> unit K'",
        ));
    }
    let layer = parse_usize(1, f[1], "layer")?;
    let rows = parse_usize(1, f[3], "rows")?;
    let cols = parse_usize(1, f[5], "cols")?;
    let cell_width = parse_f64(1, f[7], "cell width")?;
    let cell_height = parse_f64(1, f[9], "cell height")?;
    let mut temperatures = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (i, line) in lines {
        let values: Vec<&str> = line.split('\t').collect();
        if values.len() != cols {
            return Err(ParseError::new(i + 1, format!("expected {cols} values, found {}", values.len())));
        }
        for v in values {
            temperatures.push(parse_f64(i + 1, v.trim(), "temperature")?);
        }
        seen += 1;
    }
    if seen != rows {
        return Err(ParseError::new(text.lines().count(), format!("expected {rows} rows, found {seen}")));
    }
    Ok(Heatmap { layer, rows, cols, cell_width, cell_height, temperatures })
}

/// Tab-separated `scope name mean_K max_K`: blocks, then layers, then the
/// stack maximum. Block names repeated across dies are qualified as
/// `name@layer`.
pub fn emit_summary(summary: &Summary) -> String {
    let mut s = String::from("# scope\tname\tmean_K\tmax_K\n");
    for b in &summary.blocks {
        let repeated = summary.blocks.iter().filter(|o| o.name == b.name).count() > 1;
        let name = if repeated { format!("{}@{}", b.name, b.layer) } else { b.name.clone() };
        s.push_str(&format!("block\t{name}\t{}\t{}\n", format_sig(b.mean, 6), format_sig(b.max, 6)));
    }
    for l in &summary.layers {
        s.push_str(&format!("layer\t{}:{}\t{}\t{}\n", l.layer, l.kind, format_sig(l.mean, 6), format_sig(l.max, 6)));
    }
    s.push_str(&format!("stack\t-\t-\t{}\n", format_sig(summary.stack_max, 6)));
    s
}
