//! Flat `key = value` text files with `#` comments.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Parses every non-blank, non-comment line into an [`Entry`], in file order.
pub fn parse(text: &str) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::config(
                format!("line {}", idx + 1),
                format!("expected `key = value`, got `{line}`"),
            )
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::config(format!("line {}", idx + 1), "empty key"));
        }
        out.push(Entry {
            line: idx + 1,
            key: key.to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(out)
}

pub fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| Error::config(key, format!("expected a number, got `{value}`")))
}

pub fn parse_u64(key: &str, value: &str) -> Result<u64> {
    value.parse::<u64>().map_err(|_| {
        Error::config(
            key,
            format!("expected a non-negative integer, got `{value}`"),
        )
    })
}

pub fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(Error::config(
            key,
            format!("expected a boolean, got `{value}`"),
        )),
    }
}

/// Comma-separated list of numbers.
pub fn parse_f64_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_f64(key, s))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blank_lines() {
        let e = parse("# header\n\nfoo = 1 # trailing\n  bar=two words \n").unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].key, "foo");
        assert_eq!(e[0].value, "1");
        assert_eq!(e[0].line, 3);
        assert_eq!(e[1].value, "two words");
    }

    #[test]
    fn missing_equals_is_an_error() {
        assert!(matches!(parse("foo\n"), Err(Error::Config { .. })));
    }

    #[test]
    fn scalar_parsers() {
        assert!(parse_bool("x", "TRUE").unwrap());
        assert!(parse_bool("x", "maybe").is_err());
        assert_eq!(
            parse_f64_list("x", "1, 2.5,3").unwrap(),
            vec![1.0, 2.5, 3.0]
        );
        assert!(parse_u64("x", "-1").is_err());
    }
}
