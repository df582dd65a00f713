//! Pattern file:
//!
//! ```text
//! grid <rows> <cols>
//! coolant <name> <c_v> <T_in_K> <flow_m3s> <h>
//! channel <width_m> <pitch_m>
//! <one line per grid row, row 0 first: '#' wall, '^' 'v' '<' '>' fluid>
//! inlet <row> <col>
//! outlet <row> <col>
//! ```
//!
//! Cell rows are recognized by length and alphabet once the `grid` line is
//! known, so wall-only rows are not mistaken for comments. Comment lines
//! should carry a space after `#`.

use super::{Coolant, CoolingError, CoolingPattern, FlowDir};
use crate::error::{fields, parse_f64, parse_usize, ParseError};

fn is_cell_row(s: &str, cols: usize) -> bool {
    s.chars().count() == cols && s.chars().all(|c| c == '#' || FlowDir::from_symbol(c).is_some())
}

pub fn parse_pattern(text: &str) -> Result<CoolingPattern, CoolingError> {
    let mut shape: Option<(usize, usize)> = None;
    let mut coolant = None;
    let mut channel = None;
    let mut cells: Vec<Option<FlowDir>> = Vec::new();
    let mut rows_seen = 0;
    let mut inlets = Vec::new();
    let mut outlets = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some((rows, cols)) = shape {
            if rows_seen < rows && is_cell_row(trimmed, cols) {
                cells.extend(trimmed.chars().map(FlowDir::from_symbol));
                rows_seen += 1;
                continue;
            }
        }
        if trimmed.starts_with('#') {
            continue;
        }
        let content = trimmed.split('#').next().unwrap_or("").trim();
        let f = fields(content);
        match f[0] {
            "grid" => {
                if f.len() != 3 {
                    return Err(ParseError::new(line, "expected 'grid <rows> <cols>'").into());
                }
                let rows = parse_usize(line, f[1], "rows")?;
                let cols = parse_usize(line, f[2], "cols")?;
                if rows == 0 || cols == 0 {
                    return Err(ParseError::new(line, "grid dimensions must be positive").into());
                }
                shape = Some((rows, cols));
            }
            "coolant" => {
                if f.len() != 6 {
                    return Err(ParseError::new(line, "expected 'coolant <name> <c_v> <T_in_K> <flow_m3s> <h>'").into());
                }
                let c = Coolant {
                    name: f[1].to_string(),
                    volumetric_heat_capacity: parse_f64(line, f[2], "heat capacity")?,
                    inlet_temperature: parse_f64(line, f[3], "inlet temperature")?,
                    volumetric_flow_rate_per_channel: parse_f64(line, f[4], "flow rate")?,
                    convection_coefficient: parse_f64(line, f[5], "convection coefficient")?,
                };
                if !c.is_valid() {
                    return Err(ParseError::new(line, "coolant properties must be positive").into());
                }
                coolant = Some(c);
            }
            "channel" => {
                if f.len() != 3 {
                    return Err(ParseError::new(line, "expected 'channel <width_m> <pitch_m>'").into());
                }
                channel = Some((parse_f64(line, f[1], "channel width")?, parse_f64(line, f[2], "channel pitch")?));
            }
            kind @ ("inlet" | "outlet") => {
                if f.len() != 3 {
                    return Err(ParseError::new(line, format!("expected '{kind} <row> <col>'")).into());
                }
                let pos = (parse_usize(line, f[1], "row")?, parse_usize(line, f[2], "col")?);
                if kind == "inlet" {
                    inlets.push(pos);
                } else {
                    outlets.push(pos);
                }
            }
            _ => {
                let hint = match shape {
                    None => "unexpected line before 'grid' preamble".to_string(),
                    Some((_, cols)) => format!("unrecognized line (cell rows need exactly {cols} of '#^v<>')"),
                };
                return Err(ParseError::new(line, hint).into());
            }
        }
    }
    let (rows, cols) = shape.ok_or_else(|| ParseError::new(1, "missing 'grid' line"))?;
    if rows_seen != rows {
        return Err(ParseError::new(text.lines().count().max(1), format!("expected {rows} cell rows, found {rows_seen}")).into());
    }
    let coolant = coolant.ok_or_else(|| ParseError::new(1, "missing 'coolant' line"))?;
    let (channel_width, channel_pitch) = channel.ok_or_else(|| ParseError::new(1, "missing 'channel' line"))?;
    Ok(CoolingPattern { rows, cols, cells, inlets, outlets, channel_width, channel_pitch, coolant })
}

pub fn emit_pattern(p: &CoolingPattern) -> String {
    let c = &p.coolant;
    let mut s = format!("grid\t{}\t{}\n", p.rows, p.cols);
    s.push_str(&format!(
        "coolant\t{}\t{}\t{}\t{}\t{}\n",
        c.name, c.volumetric_heat_capacity, c.inlet_temperature, c.volumetric_flow_rate_per_channel, c.convection_coefficient
    ));
    s.push_str(&format!("channel\t{}\t{}\n", p.channel_width, p.channel_pitch));
    for r in 0..p.rows {
        let row: String = (0..p.cols).map(|col| p.flow(r, col).map_or('#', FlowDir::symbol)).collect();
        s.push_str(&row);
        s.push('\n');
    }
    for (r, col) in &p.inlets {
        s.push_str(&format!("inlet\t{r}\t{col}\n"));
    }
    for (r, col) in &p.outlets {
        s.push_str(&format!("outlet\t{r}\t{col}\n"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cooling::{generate_pattern, PatternStyle};
    use crate::stack::{grid_for, DieOutline};

    #[test]
    fn round_trip_bent() {
        let g = grid_for(DieOutline::new(8e-4, 8e-4), 8, 8).unwrap();
        let p = generate_pattern(&g, PatternStyle::Bent90, 1e-4, 2e-4, Coolant::water(1e-4, 1e-4)).unwrap();
        let text = emit_pattern(&p);
        let back = parse_pattern(&text).unwrap();
        assert_eq!(back, p);
        assert_eq!(emit_pattern(&back), text);
    }

    #[test]
    fn wall_rows_are_not_comments() {
        let text = "# a comment\ngrid 2 3\ncoolant w 4e6 300 1e-8 1e4\nchannel 1e-4 2e-4\n###\n>>>\ninlet 1 0\noutlet 1 2\n";
        let p = parse_pattern(text).unwrap();
        assert_eq!(p.fluid_count(), 3);
        assert!(!p.is_fluid(0, 1));
    }

    #[test]
    fn bad_row_width_is_located() {
        let text = "grid 2 3\ncoolant w 4e6 300 1e-8 1e4\nchannel 1e-4 2e-4\n###\n>>\n";
        match parse_pattern(text).unwrap_err() {
            CoolingError::Parse(e) => assert_eq!(e.line, 5),
            other => panic!("{other:?}"),
        }
    }
}
