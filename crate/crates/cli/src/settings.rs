//! Flat key/value settings: config file first, command-line flags on top.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use fullmatch::io::{load_config, ColumnSpec};

use crate::Failure;

#[derive(Debug, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

/// `dose_col` and `dose-col` name the same key. Case is kept: `C` (dose
/// penalty) and `c` (simulated coupling) differ.
fn normalise(key: &str) -> String {
    key.trim().replace('_', "-")
}

impl Settings {
    pub fn from_config(path: Option<&PathBuf>) -> Result<Self, Failure> {
        let mut s = Settings::default();
        if let Some(p) = path {
            let map = load_config(p).map_err(|e| Failure::Usage(format!("config {}: {e}", p.display())))?;
            for (k, v) in map {
                s.values.insert(normalise(&k), v);
            }
        }
        Ok(s)
    }

    pub fn set(&mut self, key: &str, value: Option<impl ToString>) {
        if let Some(v) = value {
            self.values.insert(normalise(key), v.to_string());
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, Failure> {
        self.raw(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Failure::Usage(format!("invalid value {v:?} for {key}")))
            })
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, Failure> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require(&self, key: &str) -> Result<&str, Failure> {
        self.raw(key)
            .ok_or_else(|| Failure::Usage(format!("missing required setting --{key}")))
    }

    pub fn flag(&self, key: &str) -> Result<bool, Failure> {
        match self.raw(key) {
            None => Ok(false),
            Some("1" | "true" | "yes" | "on") => Ok(true),
            Some("0" | "false" | "no" | "off") => Ok(false),
            Some(v) => Err(Failure::Usage(format!("invalid value {v:?} for {key}"))),
        }
    }

    /// Comma-separated list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, Failure> {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse()
                            .map_err(|_| Failure::Usage(format!("invalid entry {s:?} in {key}")))
                    })
                    .collect()
            })
            .transpose()
    }

    pub fn out_dir(&self) -> Result<PathBuf, Failure> {
        let dir = PathBuf::from(self.raw("out").unwrap_or("."));
        std::fs::create_dir_all(&dir)
            .map_err(|e| Failure::Data(format!("cannot create {}: {e}", dir.display())))?;
        Ok(dir)
    }

    /// Column spec; `id_explicit` is false when the id column was defaulted.
    pub fn columns(&self) -> Result<(ColumnSpec, bool), Failure> {
        let id = self.raw("id-col");
        Ok((
            ColumnSpec {
                id: Some(id.unwrap_or("id").to_string()),
                dose: self.raw("dose-col").unwrap_or("dose").to_string(),
                covariates: self.list("covariates")?,
            },
            id.is_some(),
        ))
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.values
    }
}
