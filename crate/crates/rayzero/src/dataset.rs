//! Plain-text level tables.
//!
//! ```text
//! # comment
//! species=Li energy_unit=cm-1 value=f
//! # n l 2j energy value rel_unc [gamma]
//! 2 1 1 14903.648 0.2490 0.001 1.96e-4
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayzero_core::atomic_data::{f_to_msq, msq_to_f, AtomicSystem, ExcitedLevel, LevelKey};
use thiserror::Error;

/// What the `value` column holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    /// Absorption oscillator strength.
    F,
    /// Squared radial matrix element, a₀².
    MSq,
}

impl FromStr for ValueKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "f" => Ok(ValueKind::F),
            "m_sq" => Ok(ValueKind::MSq),
            other => Err(format!("unknown value kind `{other}` (expected f or m_sq)")),
        }
    }
}

impl ValueKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ValueKind::F => "f",
            ValueKind::MSq => "m_sq",
        }
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset not found: {}", .0.display())]
    NotFound(PathBuf),
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Row {
        line: usize,
        source: rayzero_core::Error,
    },
    #[error(transparent)]
    System(#[from] rayzero_core::Error),
}

struct Header {
    species: String,
    kind: ValueKind,
}

fn parse_header(text: &str, line: usize) -> Result<Header, DatasetError> {
    let syntax = |message: String| DatasetError::Syntax { line, message };
    let mut species = None;
    let mut unit = None;
    let mut kind = None;
    for field in text.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| syntax(format!("header field `{field}` is not key=value")))?;
        match key {
            "species" => species = Some(value.to_string()),
            "energy_unit" => unit = Some(value.to_string()),
            "value" => kind = Some(value.parse::<ValueKind>().map_err(syntax)?),
            other => return Err(syntax(format!("unknown header key `{other}`"))),
        }
    }
    let species = species.ok_or_else(|| syntax("header lacks species=".into()))?;
    match unit.as_deref() {
        Some("cm-1") => {}
        Some(other) => return Err(syntax(format!("energy_unit must be cm-1, found `{other}`"))),
        None => return Err(syntax("header lacks energy_unit=".into())),
    }
    let kind = kind.ok_or_else(|| syntax("header lacks value=".into()))?;
    Ok(Header { species, kind })
}

fn number<T: FromStr>(token: &str, what: &str, line: usize) -> Result<T, DatasetError> {
    token.parse().map_err(|_| DatasetError::Syntax {
        line,
        message: format!("{what}: cannot parse `{token}`"),
    })
}

/// Parses a level table. `kind` overrides the header's value kind.
pub fn parse_dataset(text: &str, kind: Option<ValueKind>) -> Result<AtomicSystem, DatasetError> {
    let mut header = None;
    let mut levels: Vec<ExcitedLevel> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some(h) = &header else {
            header = Some(parse_header(content, line)?);
            continue;
        };
        let cols: Vec<&str> = content.split_whitespace().collect();
        if !(6..=7).contains(&cols.len()) {
            return Err(DatasetError::Syntax {
                line,
                message: format!("expected 6 or 7 columns, found {}", cols.len()),
            });
        }
        let n: u32 = number(cols[0], "n", line)?;
        let l: u32 = number(cols[1], "l", line)?;
        let twice_j: u32 = number(cols[2], "2j", line)?;
        let energy: f64 = number(cols[3], "energy", line)?;
        let value: f64 = number(cols[4], "value", line)?;
        let rel_unc: f64 = number(cols[5], "rel_unc", line)?;
        let gamma: Option<f64> = cols.get(6).map(|g| number(g, "gamma", line)).transpose()?;

        let row = |source| DatasetError::Row { line, source };
        let key = LevelKey::new(n, l, twice_j).map_err(row)?;
        if l != 1 {
            return Err(row(rayzero_core::Error::InvalidLevel {
                key,
                reason: "only p levels connect to the s ground level".into(),
            }));
        }
        if levels.iter().any(|lv| lv.key == key) {
            return Err(row(rayzero_core::Error::DuplicateLevel(key)));
        }
        let m_sq = match kind.unwrap_or(h.kind) {
            ValueKind::F => f_to_msq(value, energy, twice_j).map_err(row)?,
            ValueKind::MSq => value,
        };
        let mut level = ExcitedLevel::new(key, energy, m_sq, rel_unc).map_err(row)?;
        if let Some(g) = gamma {
            level = level.with_gamma(g).map_err(row)?;
        }
        levels.push(level);
    }
    let header = header.ok_or(DatasetError::Syntax {
        line: text.lines().count().max(1),
        message: "missing header line".into(),
    })?;
    Ok(AtomicSystem::new(&header.species, levels, None)?)
}

/// Reads and parses a level table from disk.
pub fn load_system(path: &Path, kind: Option<ValueKind>) -> Result<AtomicSystem, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            DatasetError::NotFound(path.to_path_buf())
        } else {
            DatasetError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })?;
    parse_dataset(&text, kind)
}

/// Writes `system` in the table format with values of the requested kind.
pub fn format_dataset(system: &AtomicSystem, kind: ValueKind) -> String {
    let mut out = format!(
        "species={} energy_unit=cm-1 value={}\n",
        system.species(),
        kind.as_str()
    );
    for level in system.levels() {
        let value = match kind {
            ValueKind::MSq => level.m_sq,
            ValueKind::F => msq_to_f(level.m_sq, level.omega, level.key.twice_j)
                .expect("stored levels are positive"),
        };
        let k = level.key;
        let _ = write!(
            out,
            "{} {} {} {:.16e} {:.16e} {:.16e}",
            k.n, k.l, k.twice_j, level.omega, value, level.m_sq_rel_unc
        );
        if let Some(g) = level.gamma {
            let _ = write!(out, " {g:.16e}");
        }
        out.push('\n');
    }
    out
}
