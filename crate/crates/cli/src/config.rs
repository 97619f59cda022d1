//! Config-file handling, flag/file/default resolution, and functional specs.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use addfunc_core::funcspace::{builtin_functional, functional_from_expression};
use addfunc_core::MarginalFunctional;

/// Errors are split by exit code: violated preconditions (2) versus failures
/// inside a computation (1).
#[derive(Debug)]
pub enum CliError {
    Precondition(String),
    Numerical(String),
}

impl CliError {
    pub fn pre(msg: impl Into<String>) -> Self {
        CliError::Precondition(msg.into())
    }

    pub fn num(err: impl Display) -> Self {
        CliError::Numerical(err.to_string())
    }
}

/// `key = value` lines; `#` starts a comment. Keys are normalized to
/// lowercase with `-` mapped to `_`.
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::pre(format!("cannot read config {}: {e}", path.display()))
            })?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((key, value)) = line.split_once('=') else {
                    return Err(CliError::pre(format!(
                        "config line {} is not key=value: `{line}`",
                        lineno + 1
                    )));
                };
                values.insert(normalize_key(key), value.trim().to_string());
            }
        }
        Ok(Self { values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        match self.values.get(&normalize_key(key)) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|e| {
                CliError::pre(format!("config key `{key}` has invalid value `{raw}`: {e}"))
            }),
        }
    }

    pub fn get_string(&self, key: &str) -> Option<String> {
        self.values.get(&normalize_key(key)).cloned()
    }
}

fn normalize_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

/// Flag value, else config value, else default.
pub fn resolve<T: FromStr + Clone>(
    flag: Option<T>,
    file: &ConfigFile,
    key: &str,
    default: Option<T>,
) -> Result<T, CliError>
where
    T::Err: Display,
{
    if let Some(v) = flag {
        return Ok(v);
    }
    if let Some(v) = file.get::<T>(key)? {
        return Ok(v);
    }
    default.ok_or_else(|| CliError::pre(format!("missing required parameter `{key}`")))
}

pub fn resolve_string(
    flag: Option<String>,
    file: &ConfigFile,
    key: &str,
    default: Option<&str>,
) -> Result<String, CliError> {
    if let Some(v) = flag {
        return Ok(v);
    }
    if let Some(v) = file.get_string(key) {
        return Ok(v);
    }
    default
        .map(str::to_string)
        .ok_or_else(|| CliError::pre(format!("missing required parameter `{key}`")))
}

/// Parses a functional spec: `name`, `name:p1,p2`, or `expr:EXPR[@f0=V]`.
pub fn parse_functional(spec: &str) -> Result<MarginalFunctional, CliError> {
    if let Some(body) = spec.strip_prefix("expr:") {
        let (src, f0) = match body.rsplit_once("@f0=") {
            Some((src, raw)) => {
                let v: f64 = raw.parse().map_err(|_| {
                    CliError::pre(format!("invalid value_at_zero `{raw}` in `{spec}`"))
                })?;
                (src, Some(v))
            }
            None => (body, None),
        };
        return functional_from_expression(src, f0).map_err(CliError::num);
    }
    let (name, params) = match spec.split_once(':') {
        Some((name, raw)) => {
            let params: Result<Vec<f64>, _> =
                raw.split(',').map(|p| p.trim().parse::<f64>()).collect();
            let params = params.map_err(|_| {
                CliError::pre(format!("invalid parameters in functional spec `{spec}`"))
            })?;
            (name, params)
        }
        None => (spec, Vec::new()),
    };
    builtin_functional(name, &params).map_err(|e| CliError::pre(e.to_string()))
}

/// Parses `a,b` into an interval with `a < b`.
pub fn parse_interval(raw: &str) -> Result<(f64, f64), CliError> {
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::pre(format!("interval `{raw}` is not `a,b`")));
    }
    let a: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| CliError::pre(format!("invalid interval endpoint `{}`", parts[0])))?;
    let b: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| CliError::pre(format!("invalid interval endpoint `{}`", parts[1])))?;
    if !(a < b) {
        return Err(CliError::pre(format!(
            "interval requires a < b, got [{a}, {b}]"
        )));
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn functional_specs() {
        let f = parse_functional("abs_pow:1").unwrap();
        assert_eq!(f.eval(-2.0), 2.0);
        let g = parse_functional("square").unwrap();
        assert_eq!(g.eval(3.0), 9.0);
        let h = parse_functional("expr:t^2+1@f0=1").unwrap();
        assert_eq!(h.value_at_zero(), 1.0);
        assert!(parse_functional("abs_pow:frog").is_err());
        assert!(parse_functional("nope").is_err());
    }

    #[test]
    fn interval_parsing() {
        assert_eq!(parse_interval("-1,1").unwrap(), (-1.0, 1.0));
        assert!(parse_interval("1,-1").is_err());
        assert!(parse_interval("1").is_err());
    }
}
