//! Scenario runners behind the `sta` command-line tool.

pub mod atom;
pub mod config;
pub mod lz;
pub mod plot;
pub mod table;
pub mod trap;
mod two_level;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

pub use config::{parse_config, ConfigFile, Settings, Source};
pub use table::{compare_columns, parse_table, Comparison, Table};
pub use two_level::{RunSummary, TwoLevelRun};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("unknown setting `{0}`")]
    UnknownKey(String),

    #[error("setting `{key}` = `{value}`: expected {expected}")]
    InvalidValue { key: String, value: String, expected: String },

    #[error("protocol `{protocol}` is not available in scenario {scenario}")]
    UnsupportedProtocol { protocol: String, scenario: &'static str },

    #[error("table line {line}: {message}")]
    Table { line: usize, message: String },

    #[error("column `{0}` not found")]
    ColumnMissing(String),

    #[error("time grids differ: {0}")]
    GridMismatch(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Core(#[from] sta_core::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Protocol names accepted on the command line. Aliases map onto the
/// canonical names printed in outputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Protocol {
    Bare,
    Cd0,
    Cd1,
    Cd01,
    Cd0Only,
    Zrot,
    ModifiedFrequency,
}

impl Protocol {
    pub const ALL: [Protocol; 7] =
        [Self::Bare, Self::Cd0, Self::Cd1, Self::Cd01, Self::Cd0Only, Self::Zrot, Self::ModifiedFrequency];

    pub fn name(self) -> &'static str {
        match self {
            Self::Bare => "bare",
            Self::Cd0 => "cd0",
            Self::Cd1 => "cd1",
            Self::Cd01 => "cd01",
            Self::Cd0Only => "cd0-only",
            Self::Zrot => "zrot",
            Self::ModifiedFrequency => "modified-frequency",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "bare" | "reference" => Self::Bare,
            "cd0" | "cd" => Self::Cd0,
            "cd1" => Self::Cd1,
            "cd01" => Self::Cd01,
            "cd0-only" | "k0-only" => Self::Cd0Only,
            "zrot" | "z-rotation" => Self::Zrot,
            "modified-frequency" | "modified" => Self::ModifiedFrequency,
            _ => {
                return Err(CliError::InvalidValue {
                    key: "protocols".into(),
                    value: s.into(),
                    expected: "one of bare, cd0, cd1, cd01, cd0-only, zrot, modified-frequency".into(),
                })
            }
        })
    }
}

/// Comma-separated protocol list; duplicates are dropped, order is kept.
pub fn parse_protocols(list: &str) -> Result<Vec<Protocol>> {
    let mut out = Vec::new();
    for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let p: Protocol = item.parse()?;
        if !out.contains(&p) {
            out.push(p);
        }
    }
    if out.is_empty() {
        return Err(CliError::InvalidValue { key: "protocols".into(), value: list.into(), expected: "at least one protocol".into() });
    }
    Ok(out)
}

pub(crate) fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("summaries serialize");
    text.push('\n');
    write_text(path, &text)
}
