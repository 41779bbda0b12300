//! Flat `key = value` configuration with `#` comments.
//!
//! Every subcommand declares its keys; a key may come from the config file
//! or from the matching `--flag`, the flag winning. Unknown keys are errors.

use std::collections::BTreeMap;
use std::str::FromStr;

use fblab::rational::{parse_rational, Rational};
use fblab::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct Key {
    pub name: &'static str,
    /// `None` means required (or optional, if the command says so).
    pub default: Option<&'static str>,
    pub help: &'static str,
}

pub const fn key(name: &'static str, default: Option<&'static str>, help: &'static str) -> Key {
    Key { name, default, help }
}

/// `drift.kind = hardy` on the command line is `--drift-kind hardy`.
pub fn flag_name(key: &str) -> String {
    key.replace(['.', '_'], "-")
}

/// Parses the file format. Blank lines and text after `#` are ignored;
/// repeated keys are rejected.
pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", no + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || k.contains(char::is_whitespace) {
            return Err(Error::Config(format!("line {}: bad key {k:?}", no + 1)));
        }
        if out.iter().any(|(seen, _)| seen == k) {
            return Err(Error::Config(format!("line {}: key {k} repeated", no + 1)));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

/// The merged configuration of one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Resolved {
    values: BTreeMap<String, String>,
}

impl Resolved {
    pub fn new(keys: &[Key], file: Vec<(String, String)>, flags: Vec<(String, String)>) -> Result<Self> {
        let mut values = BTreeMap::new();
        for k in keys {
            if let Some(d) = k.default {
                values.insert(k.name.to_string(), d.to_string());
            }
        }
        for (k, v) in file.into_iter().chain(flags) {
            if !keys.iter().any(|spec| spec.name == k) {
                return Err(Error::Config(format!("unknown key {k}")));
            }
            values.insert(k, v);
        }
        Ok(Resolved { values })
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Adds a value that did not come from a key (the seed, say) so that it
    /// is recorded with the artifacts.
    pub fn record(&mut self, key: &str, value: impl ToString) {
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn opt(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str).filter(|v| !v.is_empty())
    }

    pub fn str(&self, key: &str) -> Result<&str> {
        self.opt(key).ok_or_else(|| Error::Config(format!("missing key {key}")))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        let s = self.str(key)?;
        s.parse().map_err(|_| Error::Parse(format!("{key}: cannot parse {s:?}")))
    }

    pub fn get_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.opt(key).map(|_| self.get(key)).transpose()
    }

    pub fn rational(&self, key: &str) -> Result<Rational> {
        parse_rational(self.str(key)?)
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>> {
        let s = self.str(key)?;
        s.split(',')
            .map(|x| x.trim().parse().map_err(|_| Error::Parse(format!("{key}: cannot parse {x:?}"))))
            .collect()
    }

    pub fn rationals(&self, key: &str) -> Result<Vec<Rational>> {
        self.str(key)?.split(',').map(|x| parse_rational(x.trim())).collect()
    }

    /// `a:b` inclusive.
    pub fn range(&self, key: &str) -> Result<(usize, usize)> {
        let s = self.str(key)?;
        let (a, b) = s.split_once(':').ok_or_else(|| Error::Parse(format!("{key}: expected `a:b`, got {s:?}")))?;
        let p = |x: &str| x.trim().parse::<usize>().map_err(|_| Error::Parse(format!("{key}: bad bound {x:?}")));
        Ok((p(a)?, p(b)?))
    }

    /// Lookup closure for `FormBoundedDrift::from_config`.
    pub fn lookup(&self) -> impl Fn(&str) -> Option<String> + '_ {
        move |k| self.opt(k).map(str::to_string)
    }
}
