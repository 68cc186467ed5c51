//! Flat `key = value` configuration files and resolved run settings.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::CliError;

/// Entries of a configuration file, keyed by normalized name.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Keys are case-sensitive; `_` and `-` are interchangeable.
pub fn normalize_key(key: &str) -> String {
    key.trim().replace('_', "-")
}

fn valid_key(key: &str) -> bool {
    !key.is_empty() && key.chars().all(|c| c.is_ascii_alphanumeric() || c == '-')
}

/// Parses `key = value` lines. Blank lines and lines starting with `#` are
/// ignored; values are trimmed and may be empty.
pub fn parse_config(text: &str) -> Result<ConfigFile, CliError> {
    let mut entries = BTreeMap::new();
    for (index, raw) in text.lines().enumerate() {
        let line_no = index + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config { line: line_no, message: format!("expected `key = value`, found `{line}`") });
        };
        let key = normalize_key(key);
        if !valid_key(&key) {
            return Err(CliError::Config { line: line_no, message: format!("invalid key `{}`", key.trim()) });
        }
        if entries.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(CliError::Config { line: line_no, message: format!("duplicate key `{key}`") });
        }
    }
    Ok(ConfigFile { entries })
}

/// Where a resolved setting came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Default,
    Config,
    Flag,
    Derived,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Setting {
    pub value: String,
    pub source: Source,
}

/// Settings of one run after merging defaults, config file and flags.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Settings {
    values: BTreeMap<String, Setting>,
}

impl Settings {
    /// Flags override config entries, which override defaults. Keys outside
    /// `defaults` are rejected; `scenario` in a config file must name
    /// `scenario`.
    pub fn resolve(
        scenario: &str,
        defaults: &[(&str, &str)],
        config: Option<&ConfigFile>,
        flags: &[(&str, Option<String>)],
    ) -> Result<Self, CliError> {
        let mut values: BTreeMap<String, Setting> = defaults
            .iter()
            .map(|(k, v)| (k.to_string(), Setting { value: v.to_string(), source: Source::Default }))
            .collect();
        if let Some(config) = config {
            for (key, value) in config.iter() {
                if key == "scenario" {
                    if value != scenario {
                        return Err(CliError::InvalidValue {
                            key: key.into(),
                            value: value.into(),
                            expected: format!("`{scenario}` for this subcommand"),
                        });
                    }
                    continue;
                }
                let slot = values.get_mut(key).ok_or_else(|| CliError::UnknownKey(key.to_string()))?;
                *slot = Setting { value: value.to_string(), source: Source::Config };
            }
        }
        for (key, value) in flags {
            if let Some(value) = value {
                let slot = values.get_mut(*key).ok_or_else(|| CliError::UnknownKey(key.to_string()))?;
                *slot = Setting { value: value.clone(), source: Source::Flag };
            }
        }
        Ok(Self { values })
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(|s| s.value.as_str()).unwrap_or_else(|| panic!("setting `{key}` has no default"))
    }

    pub fn source(&self, key: &str) -> Option<Source> {
        self.values.get(key).map(|s| s.source)
    }

    pub fn set_derived(&mut self, key: &str, value: String) {
        self.values.insert(key.to_string(), Setting { value, source: Source::Derived });
    }

    pub fn parse<T: FromStr>(&self, key: &str, expected: &str) -> Result<T, CliError> {
        let raw = self.raw(key);
        raw.parse().map_err(|_| CliError::InvalidValue { key: key.into(), value: raw.into(), expected: expected.into() })
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        let v: f64 = self.parse(key, "a number")?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(CliError::InvalidValue { key: key.into(), value: self.raw(key).into(), expected: "a finite number".into() })
        }
    }

    pub fn positive(&self, key: &str) -> Result<f64, CliError> {
        let v = self.f64(key)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(CliError::InvalidValue { key: key.into(), value: self.raw(key).into(), expected: "a positive number".into() })
        }
    }

    pub fn count(&self, key: &str, min: usize) -> Result<usize, CliError> {
        let v: usize = self.parse(key, "a non-negative integer")?;
        if v >= min {
            Ok(v)
        } else {
            Err(CliError::InvalidValue { key: key.into(), value: self.raw(key).into(), expected: format!("an integer ≥ {min}") })
        }
    }

    pub fn is_empty_value(&self, key: &str) -> bool {
        self.raw(key).is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Setting)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v))
    }
}

impl fmt::Display for Settings {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (key, s) in &self.values {
            writeln!(f, "{key} = {}", s.value)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn entries_round_trip(entries in prop::collection::btree_map("[a-z][a-z0-9-]{0,12}", "[A-Za-z0-9.,/+-]{0,16}", 0..10)) {
            let text: String = entries.iter().map(|(k, v)| format!("# {k}\n  {k} = {v}\n\n")).collect();
            let c = parse_config(&text).unwrap();
            prop_assert_eq!(c.len(), entries.len());
            for (k, v) in &entries {
                prop_assert_eq!(c.get(k), Some(v.as_str()));
            }
        }

        #[test]
        fn parser_never_panics(text in "\\PC{0,200}") {
            let _ = parse_config(&text);
        }
    }

    #[test]
    fn parses_entries_and_comments() {
        let c = parse_config("# comment\n\nalpha = -10\nx0=1\n  T =  2  \nout =\n").unwrap();
        assert_eq!(c.get("alpha"), Some("-10"));
        assert_eq!(c.get("x0"), Some("1"));
        assert_eq!(c.get("T"), Some("2"));
        assert_eq!(c.get("out"), Some(""));
        assert_eq!(c.len(), 4);
    }

    #[test]
    fn underscores_normalize_to_dashes() {
        let c = parse_config("omega_start = 1").unwrap();
        assert_eq!(c.get("omega-start"), Some("1"));
    }

    #[test]
    fn rejects_malformed_lines() {
        let e = parse_config("a = 1\nno equals sign\n").unwrap_err();
        assert!(matches!(e, CliError::Config { line: 2, .. }), "{e}");
        assert!(matches!(parse_config("a = 1\na = 2").unwrap_err(), CliError::Config { line: 2, .. }));
        assert!(matches!(parse_config(" = 3").unwrap_err(), CliError::Config { line: 1, .. }));
        assert!(matches!(parse_config("a b = 3").unwrap_err(), CliError::Config { line: 1, .. }));
    }

    #[test]
    fn precedence_flags_over_config_over_defaults() {
        let config = parse_config("x0 = 2\nT = 3").unwrap();
        let s = Settings::resolve(
            "lz-inversion",
            &[("x0", "1"), ("T", "2"), ("alpha", "")],
            Some(&config),
            &[("T", Some("5".into())), ("alpha", None)],
        )
        .unwrap();
        assert_eq!(s.raw("x0"), "2");
        assert_eq!(s.source("x0"), Some(Source::Config));
        assert_eq!(s.raw("T"), "5");
        assert_eq!(s.source("T"), Some(Source::Flag));
        assert_eq!(s.source("alpha"), Some(Source::Default));
        assert!(s.is_empty_value("alpha"));
    }

    #[test]
    fn unknown_keys_and_bad_values_are_named() {
        let config = parse_config("bogus = 1").unwrap();
        let e = Settings::resolve("lz-inversion", &[("x0", "1")], Some(&config), &[]).unwrap_err();
        assert_eq!(e.to_string(), "unknown setting `bogus`");
        let config = parse_config("scenario = trap-expansion").unwrap();
        assert!(Settings::resolve("lz-inversion", &[], Some(&config), &[]).is_err());
        let s = Settings::resolve("x", &[("x0", "abc"), ("n", "-1")], None, &[]).unwrap();
        assert!(s.f64("x0").unwrap_err().to_string().contains("x0"));
        assert!(s.count("n", 1).is_err());
    }
}
