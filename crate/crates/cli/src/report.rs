//! Output, pass/fail checks and run manifests.

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use anyhow::Context;
use chrono::{SecondsFormat, Utc};
use prodyadic::measures::{WeightSpec, RNG_NAME};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::{Common, Format};

pub const SCHEMA_VERSION: u32 = 1;

static STARTED: OnceLock<String> = OnceLock::new();

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Record the start time and size the worker pool. Call before any work.
pub fn start(common: &Common) -> anyhow::Result<()> {
    STARTED.get_or_init(now);
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("thread pool already initialised")?;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

/// Finished result of one subcommand.
pub struct Report {
    pub subcommand: &'static str,
    pub params: Value,
    pub result: Value,
    pub csv: Option<String>,
    pub checks: Vec<Check>,
    pub inputs: Vec<PathBuf>,
}

pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn input_files(specs: &[WeightSpec]) -> Vec<PathBuf> {
    specs
        .iter()
        .filter_map(|s| match s {
            WeightSpec::File { path } => Some(PathBuf::from(path)),
            _ => None,
        })
        .collect()
}

impl Report {
    fn json_text(&self, seed: u64) -> anyhow::Result<String> {
        let v = json!({
            "schema": format!("prodyadic.{}/{SCHEMA_VERSION}", self.subcommand),
            "tool_version": env!("CARGO_PKG_VERSION"),
            "rng": RNG_NAME,
            "seed": seed,
            "params": self.params,
            "result": self.result,
            "checks": self.checks,
            "pass": self.checks.iter().all(|c| c.pass),
        });
        Ok(serde_json::to_string_pretty(&v)? + "\n")
    }

    /// Write the report and its manifest; `Ok(true)` iff every check passed.
    pub fn emit(self, common: &Common) -> anyhow::Result<bool> {
        let text = match (common.format, &self.csv) {
            (Format::Json, _) => self.json_text(common.seed)?,
            (Format::Csv, Some(csv)) => csv.clone(),
            (Format::Csv, None) => anyhow::bail!("{} has no CSV form", self.subcommand),
        };
        self.write(common, text.as_bytes())
    }

    /// Write `bytes` verbatim (used for weight files).
    pub fn write(self, common: &Common, bytes: &[u8]) -> anyhow::Result<bool> {
        for c in &self.checks {
            eprintln!(
                "[{}] {}: {}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            );
        }
        match &common.out {
            Some(path) => {
                std::fs::write(path, bytes)
                    .with_context(|| format!("writing {}", path.display()))?;
                self.write_manifest(common, path, bytes)?;
            }
            None => {
                use std::io::Write;
                std::io::stdout().write_all(bytes)?;
            }
        }
        Ok(self.checks.iter().all(|c| c.pass))
    }

    fn write_manifest(&self, common: &Common, out: &Path, bytes: &[u8]) -> anyhow::Result<()> {
        let inputs = self
            .inputs
            .iter()
            .map(|p| Ok(json!({ "path": p, "sha256": sha256_file(p)? })))
            .collect::<anyhow::Result<Vec<_>>>()?;
        let manifest = json!({
            "schema": format!("prodyadic.manifest/{SCHEMA_VERSION}"),
            "subcommand": self.subcommand,
            "params": self.params,
            "seed": common.seed,
            "rng": RNG_NAME,
            "tool_version": env!("CARGO_PKG_VERSION"),
            "format": match common.format { Format::Json => "json", Format::Csv => "csv" },
            "threads": common.threads,
            "inputs": inputs,
            "output": { "path": out, "sha256": hex::encode(Sha256::digest(bytes)) },
            "started": STARTED.get().cloned().unwrap_or_else(now),
            "finished": now(),
        });
        let mut path = out.as_os_str().to_owned();
        path.push(".manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(())
    }
}

/// CSV number: shortest round-trip form, `inf`/`nan` spelled out.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}
