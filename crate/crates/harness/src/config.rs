//! Flat `key = value` configuration files with `[section]` headers.
//!
//! ```text
//! # comment
//! [experiment]
//! kind = gridworld
//! seeds = 0,1,2
//!
//! [train]
//! lr = 0.05
//! ```
//!
//! Keys before the first header belong to the section named `""`. Values are
//! raw strings; list values are comma-separated. A key may appear once per
//! section. Section and key names use `[A-Za-z0-9_.-]`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use oee_core::Error;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

fn valid_name(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
}

fn perr(line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        line,
        reason: reason.into(),
    }
}

fn arg(reason: impl Into<String>) -> Error {
    Error::Argument(reason.into())
}

pub fn parse_config(text: &str) -> oee_core::Result<Config> {
    let mut cfg = Config::default();
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| perr(line_no, "unterminated section header"))?
                .trim();
            if !valid_name(name) {
                return Err(perr(line_no, format!("bad section name {name:?}")));
            }
            current = name.to_string();
            cfg.sections.entry(current.clone()).or_default();
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| perr(line_no, "expected `key = value`"))?;
        let (k, v) = (k.trim(), v.trim());
        if !valid_name(k) {
            return Err(perr(line_no, format!("bad key {k:?}")));
        }
        if v.is_empty() {
            return Err(perr(line_no, format!("key {k:?} has no value")));
        }
        let section = cfg.sections.entry(current.clone()).or_default();
        if section.insert(k.to_string(), v.to_string()).is_some() {
            return Err(perr(line_no, format!("duplicate key {k:?} in section [{current}]")));
        }
    }
    Ok(cfg)
}

impl FromStr for Config {
    type Err = Error;
    fn from_str(s: &str) -> oee_core::Result<Self> {
        parse_config(s)
    }
}

/// Canonical text: sections and keys sorted, one `key = value` per line.
impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, keys) in &self.sections {
            if !name.is_empty() {
                writeln!(f, "[{name}]")?;
            }
            for (k, v) in keys {
                writeln!(f, "{k} = {v}")?;
            }
        }
        Ok(())
    }
}

impl Config {
    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(String::as_str)
    }

    pub fn set(&mut self, section: &str, key: &str, value: impl Into<String>) {
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), value.into());
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    fn parsed<T: FromStr>(&self, section: &str, key: &str, what: &str) -> oee_core::Result<Option<T>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| arg(format!("[{section}] {key} = {v:?} is not {what}"))),
        }
    }

    pub fn f64_or(&self, section: &str, key: &str, default: f64) -> oee_core::Result<f64> {
        let v = self.parsed(section, key, "a number")?.unwrap_or(default);
        if !f64::is_finite(v) {
            return Err(arg(format!("[{section}] {key} must be finite")));
        }
        Ok(v)
    }

    pub fn usize_or(&self, section: &str, key: &str, default: usize) -> oee_core::Result<usize> {
        Ok(self.parsed(section, key, "a nonnegative integer")?.unwrap_or(default))
    }

    pub fn u64_or(&self, section: &str, key: &str, default: u64) -> oee_core::Result<u64> {
        Ok(self.parsed(section, key, "a nonnegative integer")?.unwrap_or(default))
    }

    pub fn bool_or(&self, section: &str, key: &str, default: bool) -> oee_core::Result<bool> {
        match self.get(section, key) {
            None => Ok(default),
            Some("true" | "1" | "yes") => Ok(true),
            Some("false" | "0" | "no") => Ok(false),
            Some(v) => Err(arg(format!("[{section}] {key} = {v:?} is not a boolean"))),
        }
    }

    pub fn str_or<'a>(&'a self, section: &str, key: &str, default: &'a str) -> &'a str {
        self.get(section, key).unwrap_or(default)
    }

    pub fn list_or<T: FromStr + Clone>(&self, section: &str, key: &str, default: &[T]) -> oee_core::Result<Vec<T>> {
        match self.get(section, key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|x| {
                    x.trim()
                        .parse()
                        .map_err(|_| arg(format!("[{section}] {key}: bad list element {:?}", x.trim())))
                })
                .collect(),
        }
    }

    /// Rejects sections and keys outside `allowed`, to catch typos.
    pub fn check_known(&self, allowed: &[(&str, &[&str])]) -> oee_core::Result<()> {
        for (name, keys) in &self.sections {
            let Some((_, known)) = allowed.iter().find(|(s, _)| s == name) else {
                return Err(arg(format!("unknown config section [{name}]")));
            };
            for k in keys.keys() {
                if !known.contains(&k.as_str()) {
                    return Err(arg(format!("unknown key {k:?} in section [{name}]")));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_lists() {
        let cfg = parse_config("top = 1\n# note\n[a]\nx = 0.5\nys = 1, 2,3\n\n[b]\nflag = yes\n").unwrap();
        assert_eq!(cfg.get("", "top"), Some("1"));
        assert_eq!(cfg.f64_or("a", "x", 0.0).unwrap(), 0.5);
        assert_eq!(cfg.list_or::<u64>("a", "ys", &[]).unwrap(), vec![1, 2, 3]);
        assert!(cfg.bool_or("b", "flag", false).unwrap());
        assert_eq!(cfg.usize_or("b", "missing", 7).unwrap(), 7);
    }

    #[test]
    fn rejects_malformed_lines() {
        for (text, line) in [
            ("[a\nx = 1", 1),
            ("[a]\nx = 1\nx = 2", 3),
            ("[a]\njust words", 2),
            ("[a]\nx =", 2),
            ("[bad name]", 1),
        ] {
            match parse_config(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn canonical_text_round_trips() {
        let cfg = parse_config("[z]\nb = 2\na = 1\n[a]\nk = v\n").unwrap();
        let again = parse_config(&cfg.to_string()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.to_string(), "[a]\nk = v\n[z]\na = 1\nb = 2\n");
    }

    #[test]
    fn typed_getters_report_bad_values() {
        let cfg = parse_config("[t]\nlr = fast\nn = -3\n").unwrap();
        assert!(cfg.f64_or("t", "lr", 0.1).is_err());
        assert!(cfg.usize_or("t", "n", 1).is_err());
        assert!(cfg.check_known(&[("t", &["lr"])]).is_err());
        assert!(cfg.check_known(&[("t", &["lr", "n"])]).is_ok());
    }
}
