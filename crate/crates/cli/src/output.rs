//! Artifact writing. JSON artifacts embed the provenance directly; tabular
//! files (TSV, CSV, JSONL) and vocabularies get a `<file>.meta.json`
//! sidecar holding it.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use crate::config::Provenance;

pub fn ensure_parent(path: &Path) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

pub fn ensure_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    ensure_parent(path)?;
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

#[derive(Serialize)]
struct Sidecar<'a> {
    artifact: String,
    provenance: &'a Provenance,
}

pub fn write_sidecar(path: &Path, prov: &Provenance) -> anyhow::Result<()> {
    write_json(
        &sidecar_path(path),
        &Sidecar {
            artifact: path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            provenance: prov,
        },
    )
}

/// Writes CSV rows (header from the serialized field names) plus sidecar.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T], prov: &Provenance) -> anyhow::Result<()> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    write_sidecar(path, prov)
}

/// One compact JSON document per line, plus sidecar.
pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T], prov: &Provenance) -> anyhow::Result<()> {
    ensure_parent(path)?;
    let mut out = Vec::new();
    for row in rows {
        serde_json::to_writer(&mut out, row)?;
        out.push(b'\n');
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    write_sidecar(path, prov)
}

/// Prints JSON to stdout.
pub fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}
