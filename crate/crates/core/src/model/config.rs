//! Loader for the flat YAML subset used by component, topic and fault files.
//!
//! Component files are single-level `key: value` maps. Topic and fault files
//! are sequences of such maps, written either in block form
//! (`- key: value` followed by indented `key: value` lines) or in flow form
//! (`- {key: value, key: value}`). Anything deeper is rejected.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::error::ConfigError;

/// One flat key-value map, remembering where each entry came from.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigMap {
    path: String,
    entries: BTreeMap<String, (String, usize)>,
}

impl ConfigMap {
    pub fn new(path: impl Into<String>) -> Self {
        ConfigMap {
            path: path.into(),
            entries: BTreeMap::new(),
        }
    }

    pub fn path(&self) -> &str {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, (v, _))| (k.as_str(), v.as_str()))
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map(|(_, l)| *l).unwrap_or(0)
    }

    fn insert(&mut self, key: &str, value: String, line: usize) -> Result<(), ConfigError> {
        if self.entries.contains_key(key) {
            return Err(ConfigError::Parse {
                path: self.path.clone(),
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
        self.entries.insert(key.to_string(), (value, line));
        Ok(())
    }

    /// Insert or replace a value; used to apply overrides.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), (value.into(), 0));
    }

    pub fn reject_unknown(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        match self.entries.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(self.error_at(
                k,
                format!("unknown key `{k}` (expected one of: {})", allowed.join(", ")),
            )),
            None => Ok(()),
        }
    }

    pub fn error_at(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Parse {
            path: self.path.clone(),
            line: self.line_of(key),
            message: message.into(),
        }
    }

    pub fn require(&self, key: &str) -> Result<&str, ConfigError> {
        self.get(key).ok_or_else(|| ConfigError::Parse {
            path: self.path.clone(),
            line: 0,
            message: format!("missing required key `{key}`"),
        })
    }

    /// Parse an optional value with `FromStr`.
    pub fn parse_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| self.error_at(key, format!("invalid value `{raw}` for `{key}`"))),
        }
    }

    pub fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        Ok(self.parse_opt(key)?.unwrap_or(default))
    }
}

/// Load a flat component configuration file.
pub fn load_component_config(path: &Path) -> Result<ConfigMap, ConfigError> {
    let text = read(path)?;
    parse_flat(&text, &path.display().to_string())
}

/// Load a sequence-of-rows file (topics, faults).
pub fn load_rows(path: &Path) -> Result<Vec<ConfigMap>, ConfigError> {
    let text = read(path)?;
    parse_rows(&text, &path.display().to_string())
}

fn read(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

struct Line<'a> {
    number: usize,
    indent: usize,
    body: &'a str,
}

fn significant_lines(text: &str) -> impl Iterator<Item = Line<'_>> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let body = strip_comment(raw).trim_end();
        let trimmed = body.trim_start();
        if trimmed.is_empty() || trimmed == "---" {
            return None;
        }
        Some(Line {
            number: i + 1,
            indent: body.len() - trimmed.len(),
            body: trimmed,
        })
    })
}

fn strip_comment(line: &str) -> &str {
    let mut quote: Option<char> = None;
    let mut prev_ws = true;
    for (i, c) in line.char_indices() {
        match quote {
            Some(q) if c == q => quote = None,
            Some(_) => {}
            None if c == '"' || c == '\'' => quote = Some(c),
            None if c == '#' && prev_ws => return &line[..i],
            None => {}
        }
        prev_ws = c.is_whitespace();
    }
    line
}

fn unsupported(path: &str, line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::UnsupportedStructure {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

fn parse_error(path: &str, line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

/// Split `key: value`, unquoting the value. Flow collections are refused.
fn split_entry<'a>(path: &str, line: usize, body: &'a str) -> Result<(&'a str, String), ConfigError> {
    let Some((key, value)) = body.split_once(':') else {
        return Err(parse_error(path, line, format!("expected `key: value`, found `{body}`")));
    };
    let key = key.trim();
    if key.is_empty() || key.contains(char::is_whitespace) {
        return Err(parse_error(path, line, format!("invalid key `{key}`")));
    }
    let value = value.trim();
    if value.starts_with('{') || value.starts_with('[') {
        return Err(unsupported(path, line, format!("nested value for `{key}`")));
    }
    if value.starts_with('|') || value.starts_with('>') || value.starts_with('&') || value.starts_with('*') {
        return Err(unsupported(path, line, format!("block scalar or anchor for `{key}`")));
    }
    Ok((key, unquote(path, line, value)?))
}

fn unquote(path: &str, line: usize, value: &str) -> Result<String, ConfigError> {
    for q in ['"', '\''] {
        if let Some(rest) = value.strip_prefix(q) {
            return match rest.strip_suffix(q) {
                Some(inner) => Ok(inner.to_string()),
                None => Err(parse_error(path, line, "unterminated quoted value")),
            };
        }
    }
    Ok(value.to_string())
}

pub fn parse_flat(text: &str, path: &str) -> Result<ConfigMap, ConfigError> {
    let mut map = ConfigMap::new(path);
    let lines: Vec<Line> = significant_lines(text).collect();
    for (idx, line) in lines.iter().enumerate() {
        if line.indent > 0 {
            return Err(unsupported(path, line.number, "indented (nested) entry"));
        }
        if line.body.starts_with("- ") || line.body == "-" {
            return Err(unsupported(path, line.number, "sequence where a flat map was expected"));
        }
        let (key, value) = split_entry(path, line.number, line.body)?;
        if value.is_empty() && lines.get(idx + 1).is_some_and(|n| n.indent > 0) {
            return Err(unsupported(path, line.number, format!("nested map under `{key}`")));
        }
        map.insert(key, value, line.number)?;
    }
    Ok(map)
}

pub fn parse_rows(text: &str, path: &str) -> Result<Vec<ConfigMap>, ConfigError> {
    let mut rows: Vec<ConfigMap> = Vec::new();
    let mut item_indent = 0usize;
    let mut open = false;
    for line in significant_lines(text) {
        if let Some(rest) = line.body.strip_prefix('-') {
            if !rest.is_empty() && !rest.starts_with(' ') {
                return Err(parse_error(path, line.number, "expected `- ` sequence item"));
            }
            if line.indent != 0 {
                return Err(unsupported(path, line.number, "nested sequence"));
            }
            let rest = rest.trim();
            let mut row = ConfigMap::new(path);
            open = false;
            if let Some(flow) = rest.strip_prefix('{') {
                let Some(inner) = flow.strip_suffix('}') else {
                    return Err(parse_error(path, line.number, "unterminated flow map"));
                };
                for part in inner.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                    let (k, v) = split_entry(path, line.number, part)?;
                    row.insert(k, v, line.number)?;
                }
            } else if !rest.is_empty() {
                let (k, v) = split_entry(path, line.number, rest)?;
                row.insert(k, v, line.number)?;
                item_indent = line.body.len() - rest.len();
                open = true;
            } else {
                item_indent = 2;
                open = true;
            }
            rows.push(row);
        } else if open && line.indent == item_indent {
            let (k, v) = split_entry(path, line.number, line.body)?;
            rows.last_mut().expect("open row").insert(k, v, line.number)?;
        } else if line.indent > 0 {
            return Err(unsupported(path, line.number, "nesting deeper than one level"));
        } else {
            return Err(parse_error(path, line.number, "expected a `- ` row"));
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn flat_map_from_two_lines() {
        let m = parse_flat("topic: raw-data\nrateKbps: 30", "p.yaml").unwrap();
        assert_eq!(m.get("topic"), Some("raw-data"));
        assert_eq!(m.get("rateKbps"), Some("30"));
        assert_eq!(m.len(), 2);
    }

    #[test]
    fn empty_file_is_empty_map() {
        assert!(parse_flat("", "e.yaml").unwrap().is_empty());
        assert!(parse_flat("# only a comment\n\n", "e.yaml").unwrap().is_empty());
    }

    #[test]
    fn duplicate_key_is_a_parse_error_naming_the_key() {
        let err = parse_flat("a: 1\nb: 2\na: 3\n", "d.yaml").unwrap_err();
        match err {
            ConfigError::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("`a`"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nesting_is_rejected() {
        assert!(matches!(
            parse_flat("outer:\n  inner: 1\n", "n.yaml"),
            Err(ConfigError::UnsupportedStructure { line: 1, .. })
        ));
        assert!(matches!(
            parse_flat("k: {a: 1}\n", "n.yaml"),
            Err(ConfigError::UnsupportedStructure { .. })
        ));
        assert!(matches!(
            parse_flat("- a: 1\n", "n.yaml"),
            Err(ConfigError::UnsupportedStructure { .. })
        ));
    }

    #[test]
    fn comments_and_quotes() {
        let m = parse_flat("path: \"data #1.txt\" # trailing\nx: 'y'\n", "q.yaml").unwrap();
        assert_eq!(m.get("path"), Some("data #1.txt"));
        assert_eq!(m.get("x"), Some("y"));
    }

    #[test]
    fn rows_in_block_and_flow_form() {
        let text = "\
- name: A
  preferredLeader: h02
  replicationFactor: 3
- {name: B, preferredLeader: h07, replicationFactor: 3, consistencyMode: raft}
";
        let rows = parse_rows(text, "t.yaml").unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].get("preferredLeader"), Some("h02"));
        assert_eq!(rows[1].get("consistencyMode"), Some("raft"));
    }

    #[test]
    fn rows_reject_deeper_nesting() {
        let text = "- name: A\n  extra:\n    deep: 1\n";
        assert!(matches!(
            parse_rows(text, "t.yaml"),
            Err(ConfigError::UnsupportedStructure { line: 3, .. })
        ));
    }

    #[test]
    fn unknown_keys_are_reported() {
        let m = parse_flat("a: 1\nzzz: 2\n", "u.yaml").unwrap();
        let err = m.reject_unknown(&["a"]).unwrap_err();
        assert!(err.to_string().contains("zzz"));
    }

    proptest! {
        #[test]
        fn flat_maps_round_trip(entries in proptest::collection::btree_map("[a-zA-Z][a-zA-Z0-9_]{0,8}", "[a-zA-Z0-9_.,/-]{0,12}", 0..12)) {
            let text: String = entries.iter().map(|(k, v)| format!("{k}: {v}\n")).collect();
            let parsed = parse_flat(&text, "p.yaml").unwrap();
            let back: BTreeMap<String, String> = parsed.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
            prop_assert_eq!(back, entries);
        }
    }
}
