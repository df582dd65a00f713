//! HotSpot-style time-series tables: `# interval_s <value>` preamble, a
//! tab-separated header of block names, then one tab-separated row per
//! sampling interval.

use serde::{Deserialize, Serialize};

use crate::error::{fields, parse_f64, ParseError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceTable {
    /// s
    pub interval: f64,
    pub names: Vec<String>,
    /// One series per name, all the same length.
    pub columns: Vec<Vec<f64>>,
}

impl TraceTable {
    pub fn new(interval: f64, names: Vec<String>, columns: Vec<Vec<f64>>) -> Self {
        TraceTable { interval, names, columns }
    }

    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.columns[i].as_slice())
    }

    pub fn mean(&self, name: &str) -> Option<f64> {
        self.column(name).map(|c| if c.is_empty() { 0.0 } else { c.iter().sum::<f64>() / c.len() as f64 })
    }

    pub fn parse(text: &str) -> Result<TraceTable, ParseError> {
        let mut interval = None;
        let mut names: Option<Vec<String>> = None;
        let mut columns: Vec<Vec<f64>> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(comment) = trimmed.strip_prefix('#') {
                let f = fields(comment.trim());
                if f.first() == Some(&"interval_s") {
                    if f.len() != 2 {
                        return Err(ParseError::new(line, "expected '# interval_s <seconds>'"));
                    }
                    let v = parse_f64(line, f[1], "sampling interval")?;
                    if v <= 0.0 {
                        return Err(ParseError::new(line, "sampling interval must be positive"));
                    }
                    interval = Some(v);
                }
                continue;
            }
            let f = fields(trimmed);
            match &names {
                None => {
                    let header: Vec<String> = f.iter().map(|s| s.to_string()).collect();
                    for (k, n) in header.iter().enumerate() {
                        if header[..k].contains(n) {
                            return Err(ParseError::new(line, format!("duplicate column '{n}'")));
                        }
                    }
                    columns = vec![Vec::new(); header.len()];
                    names = Some(header);
                }
                Some(header) => {
                    if f.len() != header.len() {
                        return Err(ParseError::new(
                            line,
                            format!("expected {} values, found {}", header.len(), f.len()),
                        ));
                    }
                    for (col, field) in columns.iter_mut().zip(&f) {
                        col.push(parse_f64(line, field, "value")?);
                    }
                }
            }
        }
        let interval = interval.ok_or_else(|| ParseError::new(1, "missing '# interval_s <seconds>' preamble"))?;
        let names = names.ok_or_else(|| ParseError::new(1, "missing header line of block names"))?;
        Ok(TraceTable { interval, names, columns })
    }

    pub fn emit(&self) -> String {
        let mut s = format!("# interval_s {}\n", self.interval);
        s.push_str(&self.names.join("\t"));
        s.push('\n');
        for t in 0..self.len() {
            let row: Vec<String> = self.columns.iter().map(|c| c[t].to_string()).collect();
            s.push_str(&row.join("\t"));
            s.push('\n');
        }
        s
    }
}
