//! Output-directory layout and the run manifest.
//!
//! Every subcommand writes into `<root>/<output_dir>/<subcommand>/`,
//! where `<root>` is the `ANELASTIC_OUTPUT_ROOT` environment variable
//! when set (so tests and batch jobs can redirect output without
//! touching configs). Each directory gets a `manifest.json` that embeds
//! the fully-resolved config and its hash, making any result folder
//! reproducible from the manifest alone.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

/// Resolve the directory for one subcommand's outputs and create it.
pub fn prepare_dir(config: &RunConfig, subcommand: &str) -> Result<PathBuf> {
    let mut dir = match std::env::var_os("ANELASTIC_OUTPUT_ROOT") {
        Some(root) => PathBuf::from(root),
        None => PathBuf::new(),
    };
    dir.push(&config.output_dir);
    dir.push(subcommand);
    fs::create_dir_all(&dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    Ok(dir)
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    tool: &'a str,
    version: &'a str,
    subcommand: &'a str,
    config_sha256: String,
    config_toml: &'a str,
}

/// Write `manifest.json` for a resolved config. Deliberately contains
/// no timestamps or host details: identical configs produce identical
/// manifests byte for byte.
pub fn write_manifest(dir: &Path, config: &RunConfig, subcommand: &str) -> Result<()> {
    let config_toml = config.canonical_toml();
    let mut hasher = Sha256::new();
    hasher.update(config_toml.as_bytes());
    let manifest = Manifest {
        schema_version: 1,
        tool: "anelastic",
        version: env!("CARGO_PKG_VERSION"),
        subcommand,
        config_sha256: format!("{:x}", hasher.finalize()),
        config_toml: &config_toml,
    };
    let path = dir.join("manifest.json");
    let body = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, body.as_bytes())
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Serialize a summary value as pretty JSON into `summary.json`.
pub fn write_summary<T: Serialize>(dir: &Path, summary: &T) -> Result<()> {
    let path = dir.join("summary.json");
    let body = serde_json::to_string_pretty(summary)?;
    fs::write(&path, body.as_bytes())
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
