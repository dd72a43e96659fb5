//! Level tables compiled into the binary, addressed as `@li` and `@cs`.

use std::path::Path;

use rayzero_core::AtomicSystem;
use sha2::{Digest, Sha256};

use crate::dataset::{load_system, parse_dataset, DatasetError, ValueKind};

pub const LITHIUM: &str = include_str!("../data/li.dat");
pub const CESIUM: &str = include_str!("../data/cs.dat");

/// `(name, contents)` of every bundled table.
pub const BUNDLED: [(&str, &str); 2] = [("li", LITHIUM), ("cs", CESIUM)];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED
        .iter()
        .find(|(n, _)| n.eq_ignore_ascii_case(name))
        .map(|(_, text)| *text)
}

pub fn lithium() -> AtomicSystem {
    parse_dataset(LITHIUM, None).expect("bundled lithium table parses")
}

pub fn cesium() -> AtomicSystem {
    parse_dataset(CESIUM, None).expect("bundled cesium table parses")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// `name  sha256` lines for `--version`.
pub fn provenance() -> Vec<(String, String)> {
    BUNDLED
        .iter()
        .map(|(name, text)| (format!("@{name}"), sha256_hex(text.as_bytes())))
        .collect()
}

/// Loads `@name` from the bundle, or a path (relative paths against `base`).
pub fn open_dataset(
    spec: &str,
    base: Option<&Path>,
    kind: Option<ValueKind>,
) -> Result<AtomicSystem, DatasetError> {
    if let Some(name) = spec.strip_prefix('@') {
        let text = bundled(name).ok_or_else(|| DatasetError::NotFound(spec.into()))?;
        return parse_dataset(text, kind);
    }
    let path = Path::new(spec);
    match base {
        Some(dir) if path.is_relative() => load_system(&dir.join(path), kind),
        _ => load_system(path, kind),
    }
}
