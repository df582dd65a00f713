use thiserror::Error;

/// Parse failure anchored to a 1-based line of the input text.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        ParseError { line, message: message.into() }
    }
}

pub(crate) fn parse_f64(line: usize, field: &str, what: &str) -> Result<f64, ParseError> {
    let value: f64 = field
        .parse()
        .map_err(|_| ParseError::new(line, format!("invalid {what} '{field}'")))?;
    if !value.is_finite() {
        return Err(ParseError::new(line, format!("{what} must be finite, got '{field}'")));
    }
    Ok(value)
}

pub(crate) fn parse_usize(line: usize, field: &str, what: &str) -> Result<usize, ParseError> {
    field
        .parse()
        .map_err(|_| ParseError::new(line, format!("invalid {what} '{field}'")))
}

/// Iterates over the meaningful lines of a line-oriented text format: strips
/// `#` comments and blank lines, yields `(line_number, trimmed_content)`.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let content = content.trim();
        (!content.is_empty()).then_some((i + 1, content))
    })
}

/// Splits a record on tabs, falling back to runs of whitespace when the line
/// carries no tab.
pub(crate) fn fields(content: &str) -> Vec<&str> {
    if content.contains('\t') {
        content.split('\t').map(str::trim).filter(|f| !f.is_empty()).collect()
    } else {
        content.split_whitespace().collect()
    }
}
