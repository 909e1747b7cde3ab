//! Flat `key = value` config files and flag > file > default resolution.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

#[derive(Clone, Debug, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('_', "-")
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Blank lines and lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", no + 1)))?;
            let key = normalize(key);
            if key.is_empty() {
                return Err(CliError::Usage(format!("config line {}: empty key", no + 1)));
            }
            if values.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(CliError::Usage(format!(
                    "config line {}: duplicate key `{key}`",
                    no + 1
                )));
            }
        }
        Ok(Self { values })
    }

    pub fn check_keys(&self, command: &str, allowed: &[&str]) -> Result<(), CliError> {
        match self.values.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(CliError::Usage(format!("config key `{k}` is not used by `{command}`"))),
            None => Ok(()),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Usage(format!("config key `{key}` = `{v}`: {e}")))
            })
            .transpose()
    }

    pub fn resolve<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.resolve_opt(flag, key)?.unwrap_or(default))
    }

    pub fn resolve_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }
}

/// Comma-separated list, surrounding whitespace ignored.
pub fn split_list(text: &str) -> Vec<String> {
    text.split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_file_beat_defaults() {
        let cfg = ConfigFile::parse("# comment\nm = 3\ntrials=50\n\nbox_lo = -2\n").unwrap();
        assert_eq!(cfg.resolve(Some(7usize), "m", 1).unwrap(), 7);
        assert_eq!(cfg.resolve(None::<usize>, "m", 1).unwrap(), 3);
        assert_eq!(cfg.resolve(None::<usize>, "seed", 9).unwrap(), 9);
        assert_eq!(cfg.get::<String>("box-lo").unwrap().as_deref(), Some("-2"));
    }

    #[test]
    fn malformed_files_are_usage_errors() {
        assert!(ConfigFile::parse("m 3").is_err());
        assert!(ConfigFile::parse("m = 1\nm = 2").is_err());
        let cfg = ConfigFile::parse("m = x").unwrap();
        assert!(cfg.get::<usize>("m").is_err());
        let cfg = ConfigFile::parse("colour = 1").unwrap();
        assert!(cfg.check_keys("recover", &["m"]).is_err());
    }

    #[test]
    fn lists_split_on_commas() {
        assert_eq!(split_list(" 1/3, -2 ,0.5,"), vec!["1/3", "-2", "0.5"]);
    }
}
