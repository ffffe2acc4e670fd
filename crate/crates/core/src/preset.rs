//! Parsing of `name(arg, arg, ...)` preset expressions used by the config
//! format for initial data, flux laws and sources.

use crate::error::{Error, Result};

/// Splits `name(a, b, c)` into the lowercase name and its numeric
/// arguments. A bare `name` yields no arguments.
pub(crate) fn parse_call(text: &str) -> Result<(String, Vec<f64>)> {
    let text = text.trim();
    let Some(open) = text.find('(') else {
        if text.is_empty() || !text.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(Error::Configuration(format!("malformed preset `{text}`")));
        }
        return Ok((text.to_ascii_lowercase(), Vec::new()));
    };
    if !text.ends_with(')') {
        return Err(Error::Configuration(format!("missing `)` in preset `{text}`")));
    }
    let name = text[..open].trim().to_ascii_lowercase();
    if name.is_empty() {
        return Err(Error::Configuration(format!("missing name in preset `{text}`")));
    }
    let inner = text[open + 1..text.len() - 1].trim();
    if inner.is_empty() {
        return Ok((name, Vec::new()));
    }
    let args = inner
        .split(',')
        .map(|a| {
            let a = a.trim();
            a.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Configuration(format!("bad argument `{a}` in preset `{text}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((name, args))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_calls() {
        assert_eq!(parse_call(" burgers(1, 2) ").unwrap(), ("burgers".into(), vec![1.0, 2.0]));
        assert_eq!(parse_call("none").unwrap(), ("none".into(), vec![]));
        assert_eq!(parse_call("f()").unwrap(), ("f".into(), vec![]));
        assert!(parse_call("f(1,").is_err());
        assert!(parse_call("(1)").is_err());
        assert!(parse_call("f(1, x)").is_err());
        assert!(parse_call("f(inf)").is_err());
    }
}
