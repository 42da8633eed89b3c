use thiserror::Error;

use super::DecisionValue;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("decision file line {line}: {message}")]
pub struct DecisionParseError {
    pub line: usize,
    pub message: String,
}

/// Parses a `.dec` file: one `select <Name>` or `deselect <Name>` per line,
/// `#` starts a comment.
pub fn parse_decisions(text: &str) -> Result<Vec<(String, DecisionValue)>, DecisionParseError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| DecisionParseError {
            line: i + 1,
            message,
        };
        let mut words = line.split_whitespace();
        let value = match words.next() {
            Some("select") => DecisionValue::Selected,
            Some("deselect") => DecisionValue::Deselected,
            Some(other) => {
                return Err(err(format!(
                    "expected `select` or `deselect`, found `{other}`"
                )))
            }
            None => unreachable!("line is non-empty"),
        };
        let name = words
            .next()
            .ok_or_else(|| err("missing feature name".into()))?;
        if let Some(extra) = words.next() {
            return Err(err(format!("unexpected `{extra}` after feature name")));
        }
        out.push((name.to_string(), value));
    }
    Ok(out)
}
