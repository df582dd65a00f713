//! HotSpot-style floorplan text: one block per line,
//! `name<TAB>width_m<TAB>height_m<TAB>left_x_m<TAB>bottom_y_m`, `#` comments.
//!
//! The emitter writes the die outline as a `# outline <w> <h>` comment so the
//! file stays readable by tools that only know the block records.

use super::{Block, Floorplan, FloorplanError};
use crate::error::{fields, parse_f64, ParseError};
use crate::stack::DieOutline;

pub fn emit_floorplan(fp: &Floorplan) -> String {
    let mut s = String::new();
    s.push_str(&format!("# outline\t{}\t{}\n", fp.outline.width, fp.outline.height));
    s.push_str("# name\twidth_m\theight_m\tleft_x_m\tbottom_y_m\n");
    for b in &fp.blocks {
        s.push_str(&format!("{}\t{}\t{}\t{}\t{}\n", b.name, b.width, b.height, b.left_x, b.bottom_y));
    }
    s
}

/// Parses a floorplan. The outline comes from a `# outline` comment when
/// present, otherwise from the bounding box of the blocks anchored at the
/// origin.
pub fn parse_floorplan(text: &str) -> Result<Floorplan, FloorplanError> {
    parse_inner(text, None)
}

/// Parses a floorplan against a known die outline.
pub fn parse_floorplan_in(text: &str, outline: DieOutline) -> Result<Floorplan, FloorplanError> {
    parse_inner(text, Some(outline))
}

fn parse_inner(text: &str, forced: Option<DieOutline>) -> Result<Floorplan, FloorplanError> {
    let mut blocks = Vec::new();
    let mut lines = Vec::new();
    let mut declared = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if let Some(comment) = trimmed.strip_prefix('#') {
            let f = fields(comment.trim());
            if f.first() == Some(&"outline") {
                if f.len() != 3 {
                    return Err(ParseError::new(line, "expected '# outline <width_m> <height_m>'").into());
                }
                let o = DieOutline::new(parse_f64(line, f[1], "outline width")?, parse_f64(line, f[2], "outline height")?);
                if !o.is_valid() {
                    return Err(ParseError::new(line, "outline dimensions must be positive").into());
                }
                declared = Some(o);
            }
            continue;
        }
        let content = match trimmed.find('#') {
            Some(p) => trimmed[..p].trim(),
            None => trimmed,
        };
        if content.is_empty() {
            continue;
        }
        let f = fields(content);
        if f.len() != 5 {
            return Err(ParseError::new(
                line,
                format!("expected 5 fields 'name width height left_x bottom_y', found {}", f.len()),
            )
            .into());
        }
        blocks.push(Block::new(
            f[0],
            parse_f64(line, f[1], "width")?,
            parse_f64(line, f[2], "height")?,
            parse_f64(line, f[3], "left_x")?,
            parse_f64(line, f[4], "bottom_y")?,
        ));
        lines.push(line);
    }
    let outline = match (forced, declared) {
        (Some(o), _) | (None, Some(o)) => o,
        (None, None) => DieOutline::new(
            blocks.iter().map(Block::right).fold(0.0, f64::max),
            blocks.iter().map(Block::top).fold(0.0, f64::max),
        ),
    };
    let fp = Floorplan { outline, blocks };
    fp.check_with_lines(Some(&lines))?;
    Ok(fp)
}
