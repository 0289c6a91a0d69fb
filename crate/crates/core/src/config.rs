//! Line-oriented `key = value` files with `[section]` headers.
//!
//! `#` starts a comment. Inside a section a line without `=` is kept as a
//! bare entry, which manifests use for file lists.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KeyValueDoc {
    /// Entries before the first section header.
    pub global: Vec<Entry>,
    pub sections: Vec<Section>,
}

impl KeyValueDoc {
    pub fn parse(text: &str) -> Result<Self> {
        let mut doc = KeyValueDoc::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .map(str::trim)
                    .filter(|n| !n.is_empty())
                    .ok_or_else(|| Error::param(format!("line {line}: malformed section header '{content}'")))?;
                doc.sections.push(Section {
                    name: name.to_string(),
                    line,
                    entries: Vec::new(),
                });
                continue;
            }
            let entry = match content.split_once('=') {
                Some((k, v)) => {
                    let key = k.trim();
                    if key.is_empty() {
                        return Err(Error::param(format!("line {line}: missing key before '='")));
                    }
                    Entry {
                        line,
                        key: key.to_string(),
                        value: Some(v.trim().to_string()),
                    }
                }
                None => Entry {
                    line,
                    key: content.to_string(),
                    value: None,
                },
            };
            match doc.sections.last_mut() {
                Some(s) => s.entries.push(entry),
                None if entry.value.is_none() => {
                    return Err(Error::param(format!("line {line}: expected 'key = value', got '{content}'")))
                }
                None => doc.global.push(entry),
            }
        }
        Ok(doc)
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    /// Last value given for `key` in the named section (or the global block for `None`).
    pub fn get(&self, section: Option<&str>, key: &str) -> Option<&str> {
        let entries = match section {
            None => &self.global,
            Some(s) => &self.section(s)?.entries,
        };
        entries
            .iter()
            .rev()
            .find(|e| e.key == key)
            .and_then(|e| e.value.as_deref())
    }

    /// Appends `key = value`, so it overrides earlier values.
    pub fn set(&mut self, section: Option<&str>, key: &str, value: &str) {
        let entry = Entry {
            line: 0,
            key: key.to_string(),
            value: Some(value.to_string()),
        };
        match section {
            None => self.global.push(entry),
            Some(name) => match self.sections.iter_mut().find(|s| s.name == name) {
                Some(sec) => sec.entries.push(entry),
                None => self.sections.push(Section {
                    name: name.to_string(),
                    line: 0,
                    entries: vec![entry],
                }),
            },
        }
    }

    /// Parses a value with `FromStr`, naming the key on failure.
    pub fn parse_value<V: std::str::FromStr>(&self, section: Option<&str>, key: &str) -> Result<Option<V>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| {
                let place = section.map_or(String::new(), |s| format!("[{s}] "));
                Error::param(format!("{place}{key}: cannot parse '{v}'"))
            }),
        }
    }
}
