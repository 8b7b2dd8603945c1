//! On-disk primitive libraries: a `manifest.json` naming one semantics file
//! and an optional descriptor file per primitive.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use techmap_core::library::LibraryError;
use techmap_core::Library;
use thiserror::Error;

use crate::json::{self, JsonError};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: JsonError },
    #[error("{}: {message}", path.display())]
    Manifest { path: PathBuf, message: String },
    #[error(transparent)]
    Library(#[from] LibraryError),
    #[error("primitives `{0}` and `{1}` map to the same file name")]
    FileNameCollision(String, String),
}

fn read(path: &Path) -> Result<String, StoreError> {
    fs::read_to_string(path).map_err(|source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), StoreError> {
    fs::write(path, text).map_err(|source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parsed<T>(path: &Path, f: impl FnOnce(&str) -> Result<T, JsonError>) -> Result<T, StoreError> {
    f(&read(path)?).map_err(|source| StoreError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads the library described by `dir/manifest.json`. File names in the
/// manifest are relative to `dir`.
pub fn load_library(dir: &Path) -> Result<Library, StoreError> {
    let manifest_path = dir.join(MANIFEST);
    let manifest = parsed(&manifest_path, json::parse)?;
    let bad = |message: &str| StoreError::Manifest {
        path: manifest_path.clone(),
        message: message.to_string(),
    };
    let entries = manifest
        .get("primitives")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("expected `{\"primitives\": [...]}`"))?;
    let mut lib = Library::new();
    for entry in entries {
        let sem = entry
            .get("semantics")
            .and_then(Value::as_str)
            .ok_or_else(|| bad("entry without a `semantics` file"))?;
        let prim = parsed(&dir.join(sem), json::primitive_from_json)?;
        let desc = match entry.get("descriptor") {
            None => None,
            Some(Value::String(d)) => Some(parsed(&dir.join(d), json::descriptor_from_json)?),
            Some(_) => return Err(bad("`descriptor` must be a file name")),
        };
        lib.insert(prim, desc)?;
    }
    Ok(lib)
}

fn stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect()
}

/// Writes `lib` into `dir`, creating it if needed. Output is canonical:
/// primitives in name order, one file each, so saving a loaded library
/// reproduces the original files byte for byte.
pub fn save_library(lib: &Library, dir: &Path) -> Result<(), StoreError> {
    fs::create_dir_all(dir).map_err(|source| StoreError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut owners: BTreeMap<String, &str> = BTreeMap::new();
    let mut entries = Vec::new();
    for prim in lib.primitives() {
        let s = stem(&prim.name);
        if let Some(first) = owners.insert(s.clone(), &prim.name) {
            return Err(StoreError::FileNameCollision(first.to_string(), prim.name.clone()));
        }
        let sem = format!("{s}.json");
        write(&dir.join(&sem), &json::primitive_to_json(prim))?;
        let mut entry = json!({"semantics": sem});
        if let Some(d) = lib.descriptor(&prim.name) {
            let file = format!("{s}.desc.json");
            write(&dir.join(&file), &json::descriptor_to_json(d))?;
            entry["descriptor"] = Value::String(file);
        }
        entries.push(entry);
    }
    write(&dir.join(MANIFEST), &json::to_text(&json!({"primitives": entries})))
}
