//! Flat `key = value` run files.
//!
//! One entry per line, `#` starts a comment, blank lines are ignored. Keys are
//! the long flag names of the subcommand (`lr`, `code-length`, ...); an
//! underscore is accepted in place of a hyphen.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigFile {
    entries: BTreeMap<String, (String, usize)>,
}

impl ConfigFile {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let Some((key, value)) = line.split_once('=') else {
                return Err(parse_err(format!("expected `key = value`, got {line:?}")));
            };
            let key = normalize_key(key.trim());
            if key.is_empty() {
                return Err(parse_err("empty key".into()));
            }
            let value = value.trim().to_string();
            if entries.insert(key.clone(), (value, i + 1)).is_some() {
                return Err(parse_err(format!("key `{key}` given twice")));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn line_of(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|&(_, line)| line)
    }
}

pub fn normalize_key(key: &str) -> String {
    key.trim_start_matches("--").replace('_', "-")
}
