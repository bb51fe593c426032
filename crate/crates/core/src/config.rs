//! Plain-text `key=value` documents with optional `[section]` headers.
//!
//! ```text
//! # comment
//! tool_version=0.1.0
//! [train]
//! learning_rate=0.0001
//! ```
//!
//! Keys before the first header belong to the unnamed section `""`.
//! Order is preserved on both read and write.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KvDocument {
    sections: Vec<(String, Vec<(String, String)>)>,
}

impl KvDocument {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets `key` in `section`, replacing an earlier value.
    pub fn set(&mut self, section: &str, key: &str, value: impl ToString) {
        let value = value.to_string();
        let entries = match self.sections.iter_mut().position(|(s, _)| s == section) {
            Some(i) => &mut self.sections[i].1,
            None => {
                self.sections.push((section.to_string(), Vec::new()));
                &mut self.sections.last_mut().expect("just pushed").1
            }
        };
        match entries.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.section(section)?.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Required value, parsed.
    pub fn parse<T: FromStr>(&self, section: &str, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        let raw = self
            .get(section, key)
            .ok_or_else(|| Error::format("key=value document", format!("missing {}", qualified(section, key))))?;
        raw.parse()
            .map_err(|e: T::Err| Error::format("key=value document", format!("{} = {raw:?}: {e}", qualified(section, key))))
    }

    /// Optional value, parsed, falling back to `default`.
    pub fn parse_or<T: FromStr>(&self, section: &str, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        match self.get(section, key) {
            Some(_) => self.parse(section, key),
            None => Ok(default),
        }
    }

    pub fn section(&self, name: &str) -> Option<&[(String, String)]> {
        self.sections.iter().find(|(s, _)| s == name).map(|(_, e)| e.as_slice())
    }

    pub fn sections(&self) -> impl Iterator<Item = (&str, &[(String, String)])> {
        self.sections.iter().map(|(s, e)| (s.as_str(), e.as_slice()))
    }
}

fn qualified(section: &str, key: &str) -> String {
    if section.is_empty() {
        key.to_string()
    } else {
        format!("[{section}] {key}")
    }
}

impl FromStr for KvDocument {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut doc = KvDocument::new();
        let mut section = String::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::format("key=value document", format!("line {}: unterminated section header", lineno + 1)))?;
                section = name.trim().to_string();
                if doc.section(&section).is_none() {
                    doc.sections.push((section.clone(), Vec::new()));
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::format("key=value document", format!("line {}: expected key=value, got {line:?}", lineno + 1)))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::format("key=value document", format!("line {}: empty key", lineno + 1)));
            }
            doc.set(&section, key, value.trim());
        }
        Ok(doc)
    }
}

impl fmt::Display for KvDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (name, entries) in &self.sections {
            if !name.is_empty() {
                if !first {
                    writeln!(f)?;
                }
                writeln!(f, "[{name}]")?;
            }
            for (k, v) in entries {
                writeln!(f, "{k}={v}")?;
            }
            first = false;
        }
        Ok(())
    }
}
