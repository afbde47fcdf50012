use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::error::{input_error, InputContext};

/// Values from a `--config` JSON object. Keys are long flag names; an
/// explicit flag always wins.
#[derive(Debug, Default)]
pub struct Config {
    values: Map<String, Value>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).input(format_args!("reading config {}", path.display()))?;
        match serde_json::from_str::<Value>(&text).input(format_args!("config {}", path.display()))? {
            Value::Object(values) => Ok(Self { values }),
            _ => Err(input_error(format!("config {}: top level must be a JSON object", path.display()))),
        }
    }

    pub fn pick<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> anyhow::Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => serde_json::from_value(v.clone()).map(Some).input(format_args!("config key {key:?}")),
        }
    }

    pub fn or<T: DeserializeOwned>(&self, flag: Option<T>, key: &str, default: T) -> anyhow::Result<T> {
        Ok(self.pick(flag, key)?.unwrap_or(default))
    }

    pub fn require<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> anyhow::Result<T> {
        self.pick(flag, key)?.ok_or_else(|| input_error(format!("missing required option --{key}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_config() {
        let c = Config { values: serde_json::from_str(r#"{"seed": 7, "budget": 500, "bad": "x"}"#).unwrap() };
        assert_eq!(c.or(Some(3u64), "seed", 0).unwrap(), 3);
        assert_eq!(c.or(None::<u64>, "seed", 0).unwrap(), 7);
        assert_eq!(c.or(None::<u64>, "runs", 11).unwrap(), 11);
        assert!(c.require(None::<u64>, "missing").is_err());
        assert!(c.pick(None::<u64>, "bad").is_err());
    }
}
