//! Flat TOML configuration merged with command-line flags.
//!
//! Every key is the long flag name (`N`, `alpha`, `cutoff`, ...). Flags win
//! over the file, the file wins over built-in defaults, and every resolved
//! value is echoed into the output.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliError;

pub struct Resolver {
    table: toml::Table,
    used: Vec<String>,
    echo: Map<String, Value>,
}

impl Resolver {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                let table: toml::Table = text.parse().map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                if let Some((key, _)) = table.iter().find(|(_, v)| v.is_table()) {
                    return Err(CliError::Config(format!("config must be flat; '{key}' is a table")));
                }
                table
            }
            None => toml::Table::new(),
        };
        Ok(Resolver { table, used: Vec::new(), echo: Map::new() })
    }

    fn from_file<T: DeserializeOwned>(&mut self, key: &str) -> Result<Option<T>, CliError> {
        self.used.push(key.to_string());
        match self.table.get(key) {
            Some(v) => v.clone().try_into().map(Some).map_err(|e| CliError::Config(format!("config key '{key}': {e}"))),
            None => Ok(None),
        }
    }

    fn resolved<T: Serialize>(&mut self, key: &str, value: T) -> T {
        self.used.push(key.to_string());
        self.echo.insert(key.to_string(), serde_json::to_value(&value).expect("config values serialize"));
        value
    }

    /// Flag, else config, else `default`.
    pub fn value<T: DeserializeOwned + Serialize>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError> {
        let v = match flag {
            Some(v) => v,
            None => self.from_file(key)?.unwrap_or(default),
        };
        Ok(self.resolved(key, v))
    }

    pub fn optional<T: DeserializeOwned + Serialize>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError> {
        let v = match flag {
            Some(v) => Some(v),
            None => self.from_file(key)?,
        };
        Ok(self.resolved(key, v))
    }

    pub fn required<T: DeserializeOwned + Serialize>(&mut self, key: &str, flag: Option<T>) -> Result<T, CliError> {
        let v = match flag {
            Some(v) => v,
            None => self.from_file(key)?.ok_or_else(|| CliError::Usage(format!("missing required parameter '{key}'")))?,
        };
        Ok(self.resolved(key, v))
    }

    /// A list that the config file may also give as a single scalar.
    pub fn list<T: DeserializeOwned + Serialize + Clone>(&mut self, key: &str, flag: Option<Vec<T>>, default: Vec<T>) -> Result<Vec<T>, CliError> {
        let v = match flag {
            Some(v) => v,
            None => match self.table.get(key).cloned() {
                Some(toml::Value::Array(_)) | None => self.from_file(key)?.unwrap_or(default),
                Some(_) => vec![self.from_file::<T>(key)?.expect("key present")],
            },
        };
        Ok(self.resolved(key, v))
    }

    /// Echoes a fixed constant that influenced the result.
    pub fn record<T: Serialize>(&mut self, key: &str, value: T) -> T {
        self.echo.insert(key.to_string(), serde_json::to_value(&value).expect("config values serialize"));
        value
    }

    /// Fails on config keys the command never asked for, then returns the
    /// echo.
    pub fn finish(self) -> Result<Map<String, Value>, CliError> {
        if let Some(key) = self.table.keys().find(|k| !self.used.contains(k)) {
            return Err(CliError::Config(format!("unknown config key '{key}' for this command")));
        }
        Ok(self.echo)
    }
}
