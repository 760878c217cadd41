//! Parameter resolution: command-line flags override the `--config` file,
//! which overrides built-in defaults. Every resolved value is recorded so it
//! can be embedded in the artifacts.

use std::path::Path;

use conflab_core::report::json9;
use serde_json::{Map, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Default)]
pub struct Config(Map<String, Value>);

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        match serde_json::from_str(&text) {
            Ok(Value::Object(map)) => Ok(Self(map)),
            Ok(_) => Err(CliError::Usage("config file must hold a JSON object".into())),
            Err(e) => Err(CliError::Usage(format!("config {}: {e}", path.display()))),
        }
    }

    pub fn from_map(map: Map<String, Value>) -> Self {
        Self(map)
    }
}

fn value_f64(key: &str, v: &Value) -> Result<f64, CliError> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| CliError::Usage(format!("`{key}` is not a number"))),
        Value::String(s) => s.parse().map_err(|_| CliError::Usage(format!("`{key}`: cannot parse `{s}` as a number"))),
        _ => Err(CliError::Usage(format!("`{key}` must be a number"))),
    }
}

/// Parses `"1,2.5,-3"` into numbers.
pub fn parse_list(key: &str, text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|t| t.trim().parse().map_err(|_| CliError::Usage(format!("`{key}`: cannot parse `{t}` as a number"))))
        .collect()
}

/// Resolves parameters for one command and records the result.
pub struct Resolver<'a> {
    config: &'a Config,
    resolved: Map<String, Value>,
}

impl<'a> Resolver<'a> {
    pub fn new(config: &'a Config) -> Self {
        Self { config, resolved: Map::new() }
    }

    fn file_value(&self, key: &str) -> Option<&Value> {
        self.config.0.get(key).or_else(|| self.config.0.get(&key.replace('_', "-")))
    }

    pub fn f64(&mut self, key: &str, flag: Option<f64>, default: f64) -> Result<f64, CliError> {
        let v = match (flag, self.file_value(key)) {
            (Some(v), _) => v,
            (None, Some(v)) => value_f64(key, v)?,
            (None, None) => default,
        };
        self.resolved.insert(key.into(), json9(v));
        Ok(v)
    }

    pub fn usize(&mut self, key: &str, flag: Option<usize>, default: usize) -> Result<usize, CliError> {
        let v = match (flag, self.file_value(key)) {
            (Some(v), _) => v,
            (None, Some(v)) => v
                .as_u64()
                .map(|x| x as usize)
                .ok_or_else(|| CliError::Usage(format!("`{key}` must be a non-negative integer")))?,
            (None, None) => default,
        };
        self.resolved.insert(key.into(), v.into());
        Ok(v)
    }

    pub fn string(&mut self, key: &str, flag: Option<String>, default: &str) -> Result<String, CliError> {
        let v = match (flag, self.file_value(key)) {
            (Some(v), _) => v,
            (None, Some(Value::String(s))) => s.clone(),
            (None, Some(_)) => return Err(CliError::Usage(format!("`{key}` must be a string"))),
            (None, None) => default.to_string(),
        };
        self.resolved.insert(key.into(), v.clone().into());
        Ok(v)
    }

    pub fn list(&mut self, key: &str, flag: Option<&str>, default: &[f64]) -> Result<Vec<f64>, CliError> {
        let v = match (flag, self.file_value(key)) {
            (Some(text), _) => parse_list(key, text)?,
            (None, Some(Value::Array(items))) => items.iter().map(|x| value_f64(key, x)).collect::<Result<_, _>>()?,
            (None, Some(Value::String(text))) => parse_list(key, text)?,
            (None, Some(x)) => vec![value_f64(key, x)?],
            (None, None) => default.to_vec(),
        };
        if v.is_empty() {
            return Err(CliError::Usage(format!("`{key}` must not be empty")));
        }
        self.resolved.insert(key.into(), Value::Array(v.iter().map(|x| json9(*x)).collect()));
        Ok(v)
    }

    /// Points as `"x,y;x,y;..."` on the command line or `[[x, y], ...]` in the file.
    pub fn points(&mut self, key: &str, flag: Option<&str>) -> Result<Option<Vec<[f64; 2]>>, CliError> {
        let pairs: Vec<Vec<f64>> = match (flag, self.file_value(key)) {
            (Some(text), _) => text.split(';').map(|p| parse_list(key, p)).collect::<Result<_, _>>()?,
            (None, Some(Value::Array(items))) => items
                .iter()
                .map(|p| match p {
                    Value::Array(xy) => xy.iter().map(|x| value_f64(key, x)).collect(),
                    _ => Err(CliError::Usage(format!("`{key}` entries must be [x, y] pairs"))),
                })
                .collect::<Result<_, _>>()?,
            (None, Some(_)) => return Err(CliError::Usage(format!("`{key}` must be a list of [x, y] pairs"))),
            (None, None) => return Ok(None),
        };
        let pts = pairs
            .into_iter()
            .map(|p| match p.as_slice() {
                [x, y] => Ok([*x, *y]),
                _ => Err(CliError::Usage(format!("`{key}` entries need exactly two coordinates"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        self.resolved.insert(key.into(), serde_json::json!(pts.iter().map(|p| [json9(p[0]), json9(p[1])]).collect::<Vec<_>>()));
        Ok(Some(pts))
    }

    pub fn finish(self) -> Map<String, Value> {
        self.resolved
    }
}
