//! Run manifests: config echo, PRNG identifier and SHA-256 of every input
//! and artifact, so a run can be replayed and checked byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use orbitmeter::markov::PRNG_ID;

use crate::commands::{self, CliError, Outcome};
use crate::{Command, Format};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub seed: u64,
    pub prng: String,
    pub emit: Vec<String>,
    pub config: Value,
    pub passed: bool,
    pub inputs: Vec<FileHash>,
    pub artifacts: Vec<FileHash>,
}

fn sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn hash_entry(path: String, bytes: &[u8]) -> FileHash {
    FileHash { path, sha256: sha256(bytes), bytes: bytes.len() as u64 }
}

fn format_name(f: Format) -> &'static str {
    match f {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

fn parse_format(s: &str) -> Result<Format, CliError> {
    match s {
        "csv" => Ok(Format::Csv),
        "json" => Ok(Format::Json),
        _ => Err(CliError::Usage(format!("manifest lists unknown format {s:?}"))),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn hash_inputs(inputs: &[PathBuf]) -> Result<Vec<FileHash>, CliError> {
    inputs.iter().map(|p| Ok(hash_entry(p.to_string_lossy().into_owned(), &read(p)?))).collect()
}

/// Writes the artifacts of a finished run and its manifest into `out`.
pub fn write_run(out: &Path, command: Command, seed: u64, emit: &[Format], outcome: &Outcome) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let mut artifacts = Vec::with_capacity(outcome.artifacts.len());
    for a in &outcome.artifacts {
        write(&out.join(&a.name), &a.bytes)?;
        artifacts.push(hash_entry(a.name.clone(), &a.bytes));
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: command.name().into(),
        seed,
        prng: PRNG_ID.into(),
        emit: emit.iter().map(|&f| format_name(f).into()).collect(),
        config: outcome.config.clone(),
        passed: outcome.passed,
        inputs: hash_inputs(&outcome.inputs)?,
        artifacts,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serialization");
    bytes.push(b'\n');
    write(&out.join(MANIFEST), &bytes)
}

/// Checks the files in `out` against its manifest, then replays the run
/// and compares the regenerated artifacts.
pub fn verify(out: &Path) -> Result<(), CliError> {
    let path = out.join(MANIFEST);
    let manifest: Manifest = serde_json::from_value(commands::read_json(&path)?)
        .map_err(|e| CliError::MalformedJson { path: path.clone(), msg: e.to_string() })?;
    let command = Command::from_name(&manifest.subcommand)
        .ok_or_else(|| CliError::Usage(format!("manifest names unknown subcommand {:?}", manifest.subcommand)))?;

    let mut problems = Vec::new();
    for a in &manifest.artifacts {
        let p = out.join(&a.path);
        match fs::read(&p) {
            Ok(bytes) if sha256(&bytes) == a.sha256 => {}
            Ok(_) => problems.push(format!("{} was modified", a.path)),
            Err(_) => problems.push(format!("{} is missing", a.path)),
        }
    }
    for i in &manifest.inputs {
        match fs::read(&i.path) {
            Ok(bytes) if sha256(&bytes) == i.sha256 => {}
            Ok(_) => problems.push(format!("input {} changed", i.path)),
            Err(_) => problems.push(format!("input {} is missing", i.path)),
        }
    }
    if !problems.is_empty() {
        return Err(CliError::Mismatch(problems.join("; ")));
    }

    let emit: Vec<Format> = manifest.emit.iter().map(|s| parse_format(s)).collect::<Result<_, _>>()?;
    let replay = commands::run(command, manifest.config.clone(), manifest.seed, &emit)?;
    let regenerated: Vec<FileHash> = replay.artifacts.iter().map(|a| hash_entry(a.name.clone(), &a.bytes)).collect();
    let expected: Vec<(&str, &str)> = manifest.artifacts.iter().map(|a| (a.path.as_str(), a.sha256.as_str())).collect();
    let actual: Vec<(&str, &str)> = regenerated.iter().map(|a| (a.path.as_str(), a.sha256.as_str())).collect();
    if expected != actual {
        let differing: Vec<&str> = expected
            .iter()
            .filter(|e| !actual.contains(e))
            .map(|e| e.0)
            .chain(actual.iter().filter(|a| !expected.contains(a)).map(|a| a.0))
            .collect();
        return Err(CliError::Mismatch(format!("replay differs in {}", differing.join(", "))));
    }
    if replay.passed != manifest.passed {
        return Err(CliError::Mismatch("replay verdict differs from the recorded one".into()));
    }
    println!("verified {} artifacts of `{}` in {}", manifest.artifacts.len(), manifest.subcommand, out.display());
    Ok(())
}
