//! Flat `key = value` text used by experiment configs and scenario sidecars.

use crate::error::{Error, Result};

/// One `key = value` line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// Parses `key = value` lines. `#` starts a comment, blank lines are skipped,
/// and a repeated key is an error. `origin` labels error messages.
pub fn parse(text: &str, origin: &str) -> Result<Vec<Entry>> {
    let mut out: Vec<Entry> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::Parse {
                path: origin.to_string(),
                line,
                reason: format!("expected `key = value`, found `{content}`"),
            });
        };
        let key = key.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(Error::Parse {
                path: origin.to_string(),
                line,
                reason: format!("invalid key `{key}`"),
            });
        }
        if let Some(prev) = out.iter().find(|e| e.key == key) {
            return Err(Error::Parse {
                path: origin.to_string(),
                line,
                reason: format!("duplicate key `{key}` (first set on line {})", prev.line),
            });
        }
        out.push(Entry {
            key: key.to_string(),
            value: value.trim().to_string(),
            line,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blank_lines() {
        let text = "# header\n\nseed = 7  # trailing\nlabel=high water\n";
        let entries = parse(text, "t.cfg").unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].key, "seed");
        assert_eq!(entries[0].value, "7");
        assert_eq!(entries[0].line, 3);
        assert_eq!(entries[1].value, "high water");
    }

    #[test]
    fn rejects_malformed_lines() {
        let err = parse("seed 7\n", "t.cfg").unwrap_err().to_string();
        assert!(err.contains("t.cfg:1"), "{err}");
        assert!(parse("a = 1\na = 2\n", "t.cfg").is_err());
        assert!(parse("bad key = 1\n", "t.cfg").is_err());
        assert!(parse(" = 1\n", "t.cfg").is_err());
    }
}
