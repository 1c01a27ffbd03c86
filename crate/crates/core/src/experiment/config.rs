use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// Flat `key = value` configuration with dotted section prefixes
/// (`grid.points`, `stepper.dt`). Lines starting with `#` are comments.
/// Every key read is recorded with its resolved value.
#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
    resolved: RefCell<BTreeMap<String, String>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("config line {}: expected key = value", n + 1)))?;
            cfg.insert(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn insert(&mut self, key: &str, value: &str) -> Result<()> {
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(Error::Format(format!("invalid config key `{key}`")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("--set expects key=value, got `{assignment}`")))?;
        self.insert(k.trim(), v.trim())
    }

    /// Fills keys that are not present.
    pub fn with_defaults(mut self, defaults: &[(&str, &str)]) -> Self {
        for (k, v) in defaults {
            self.values.entry(k.to_string()).or_insert_with(|| v.to_string());
        }
        self
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T>
    where
        T::Err: Display,
    {
        raw.parse::<T>()
            .map_err(|e| invalid(key, format!("cannot parse `{raw}`: {e}")))
    }

    pub fn get<T: FromStr + Display>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: Display,
    {
        let v = match self.values.get(key) {
            Some(raw) => Self::parse_value(key, raw)?,
            None => default,
        };
        self.resolved.borrow_mut().insert(key.to_string(), v.to_string());
        Ok(v)
    }

    pub fn get_opt<T: FromStr + Display>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: Display,
    {
        match self.values.get(key) {
            Some(raw) => {
                let v: T = Self::parse_value(key, raw)?;
                self.resolved.borrow_mut().insert(key.to_string(), v.to_string());
                Ok(Some(v))
            }
            None => Ok(None),
        }
    }

    pub fn require<T: FromStr + Display>(&self, key: &str) -> Result<T>
    where
        T::Err: Display,
    {
        self.get_opt(key)?.ok_or_else(|| invalid(key, "required key is missing"))
    }

    /// Comma-separated list of numbers.
    pub fn list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        let v = match self.values.get(key) {
            Some(raw) => raw
                .split(',')
                .map(|x| Self::parse_value::<f64>(key, x.trim()))
                .collect::<Result<Vec<_>>>()?,
            None => default.to_vec(),
        };
        let text = v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        self.resolved.borrow_mut().insert(key.to_string(), text);
        Ok(v)
    }

    /// All keys read so far with their resolved values, sorted.
    pub fn resolved(&self) -> Vec<(String, String)> {
        self.resolved.borrow().iter().map(|(k, v)| (k.clone(), v.clone())).collect()
    }

    /// Keys present in the input that no scenario code has read.
    pub fn unused(&self) -> Vec<String> {
        let r = self.resolved.borrow();
        self.values.keys().filter(|k| !r.contains_key(*k)).cloned().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_records() {
        let mut c = Config::parse("# comment\ngrid.points = 512\n s=0.25 \n").unwrap();
        c.set("stepper.dt=1e-4").unwrap();
        assert_eq!(c.get("grid.points", 16usize).unwrap(), 512);
        assert_eq!(c.get("s", 0.5).unwrap(), 0.25);
        assert_eq!(c.get("stepper.dt", 1.0).unwrap(), 1e-4);
        assert_eq!(c.get("m", 2.0).unwrap(), 2.0);
        assert_eq!(c.list("levels", &[0.5]).unwrap(), vec![0.5]);
        let r = c.resolved();
        assert!(r.contains(&("m".into(), "2".into())));
        assert!(c.unused().is_empty());
    }

    #[test]
    fn bad_values_name_the_key() {
        let c = Config::parse("s = abc").unwrap();
        match c.get("s", 0.5) {
            Err(Error::InvalidParameter { key, .. }) => assert_eq!(key, "s"),
            other => panic!("{other:?}"),
        }
        assert!(Config::parse("no equals sign").is_err());
    }
}
