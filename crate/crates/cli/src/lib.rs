//! Library surface of the command-line front end, exposed so integration
//! tests can drive full runs in-process.

pub mod commands;
pub mod config;
pub mod emit;

use commands::{run_command, write_manifest, CliError, CommandKind, RunContext, RunManifest};
use config::LabConfig;
use emit::OutputFormat;
use sha2::{Digest, Sha256};
use std::path::Path;

/// Hash of the raw config bytes; identifies the run in every artifact.
pub fn config_hash(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Parse, apply command-line overrides, run, and write the manifest.
pub fn execute(
    kind: CommandKind,
    config_text: &str,
    out_override: Option<&Path>,
    seed_override: Option<u64>,
    format: OutputFormat,
) -> Result<RunManifest, CliError> {
    let mut config: LabConfig =
        config::parse_config(config_text).map_err(CliError::Validation)?;
    if let Some(seed) = seed_override {
        config.seed = seed;
    }
    let out_dir = out_override
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| Path::new(&config.output).to_path_buf());
    let ctx = RunContext {
        config: &config,
        config_hash: config_hash(config_text.as_bytes()),
        out_dir: out_dir.clone(),
        format,
    };
    let result = run_command(kind, &ctx);
    match result {
        Ok(manifest) => {
            write_manifest(&out_dir, &manifest)?;
            Ok(manifest)
        }
        Err(e) => Err(e),
    }
}
