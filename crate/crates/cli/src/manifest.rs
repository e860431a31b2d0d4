//! Provenance records: which command ran with which configuration, and the
//! SHA-256 of everything it wrote.

use crate::commands::{run_task, Task};
use crate::config::ExperimentConfig;
use crate::CliError;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Artifact {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub versions: BTreeMap<String, String>,
    /// `ok`, or the diagnostic that failed.
    pub status: String,
    pub artifacts: Vec<Artifact>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    sha256_hex(&serde_json::to_vec(cfg).expect("config serializes"))
}

pub fn versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("sqg-core".to_string(), sqg_core::VERSION.to_string()),
        ("sqg-cli".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("manifest".to_string(), "1".to_string()),
    ])
}

impl Manifest {
    pub fn build(task: Task, cfg: &ExperimentConfig, dir: &Path, files: &[String], status: String) -> Result<Self, CliError> {
        let artifacts = files
            .iter()
            .map(|f| {
                let bytes = std::fs::read(dir.join(f))?;
                Ok(Artifact {
                    path: f.clone(),
                    sha256: sha256_hex(&bytes),
                    bytes: bytes.len() as u64,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(Self {
            command: task.name().to_string(),
            seed: cfg.seed,
            config_hash: config_hash(cfg),
            config: cfg.clone(),
            versions: versions(),
            status,
            artifacts,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes") + "\n";
        std::fs::write(dir.join(MANIFEST), text)?;
        Ok(())
    }

    /// Accepts an output directory or the manifest file itself.
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let file = manifest_path(path);
        let text = std::fs::read_to_string(&file).map_err(|e| CliError::Io(format!("{}: {e}", file.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", file.display())))
    }
}

fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST)
    } else {
        path.to_path_buf()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ArtifactStatus {
    Ok,
    Missing,
    Corrupt,
}

/// Status of every recorded artifact, plus whether the stored config still
/// hashes to the recorded value.
pub fn verify(dir: &Path) -> Result<(Manifest, bool, Vec<(String, ArtifactStatus)>), CliError> {
    let m = Manifest::read(dir)?;
    let hash_ok = config_hash(&m.config) == m.config_hash;
    let rows = m
        .artifacts
        .iter()
        .map(|a| {
            let s = match std::fs::read(dir.join(&a.path)) {
                Err(_) => ArtifactStatus::Missing,
                Ok(b) if sha256_hex(&b) != a.sha256 => ArtifactStatus::Corrupt,
                Ok(_) => ArtifactStatus::Ok,
            };
            (a.path.clone(), s)
        })
        .collect();
    Ok((m, hash_ok, rows))
}

pub fn check(dir: &Path) -> Result<(), CliError> {
    let (m, hash_ok, rows) = verify(dir)?;
    println!("{}: {} (seed {})", dir.display(), m.command, m.seed);
    let mut bad = 0;
    if !hash_ok {
        println!("  CONFIG HASH MISMATCH");
        bad += 1;
    }
    for (p, s) in &rows {
        let tag = match s {
            ArtifactStatus::Ok => "ok",
            ArtifactStatus::Missing => "MISSING",
            ArtifactStatus::Corrupt => "CORRUPT",
        };
        println!("  {tag:8} {p}");
        if *s != ArtifactStatus::Ok {
            bad += 1;
        }
    }
    if bad > 0 {
        return Err(CliError::Diagnostic(format!("{bad} manifest entries failed verification")));
    }
    Ok(())
}

/// Artifacts whose checksums differ between two manifests, or that only one has.
pub fn artifact_differences(a: &Manifest, b: &Manifest) -> Vec<String> {
    let ma: BTreeMap<_, _> = a.artifacts.iter().map(|x| (&x.path, &x.sha256)).collect();
    let mb: BTreeMap<_, _> = b.artifacts.iter().map(|x| (&x.path, &x.sha256)).collect();
    let mut out = Vec::new();
    for (p, h) in &ma {
        match mb.get(p) {
            None => out.push(format!("{p}: only in first")),
            Some(g) if g != h => out.push(format!("{p}: checksum {} vs {}", &h[..12], &g[..12])),
            _ => {}
        }
    }
    for p in mb.keys().filter(|p| !ma.contains_key(*p)) {
        out.push(format!("{p}: only in second"));
    }
    out
}

pub fn replay(dir: &Path, out: &Path) -> Result<(), CliError> {
    let m = Manifest::read(dir)?;
    if out.canonicalize().ok().is_some_and(|o| dir.canonicalize().ok() == Some(o)) {
        return Err(CliError::Config("replay output must differ from the recorded directory".into()));
    }
    let task = Task::from_name(&m.command).ok_or_else(|| CliError::Config(format!("unknown command '{}'", m.command)))?;
    let status = match run_task(task, &m.config, out) {
        Ok(()) => "ok".to_string(),
        Err(CliError::Diagnostic(s)) => s,
        Err(e) => return Err(e),
    };
    let r = Manifest::read(out)?;
    let mut diffs = artifact_differences(&m, &r);
    if status != m.status {
        diffs.push(format!("status: '{}' vs '{}'", m.status, status));
    }
    for a in &r.artifacts {
        let same = m.artifacts.iter().any(|x| x.path == a.path && x.sha256 == a.sha256);
        println!("  {:9} {}", if same { "identical" } else { "DIFFERS" }, a.path);
    }
    if diffs.is_empty() {
        println!("replay reproduced {} artifacts bit for bit", r.artifacts.len());
        Ok(())
    } else {
        for d in &diffs {
            println!("  {d}");
        }
        Err(CliError::Diagnostic(format!("replay differs in {} places", diffs.len())))
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut BTreeMap<String, Value>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        _ => {
            out.insert(prefix.to_string(), v.clone());
        }
    }
}

/// Dotted config keys whose values differ, with both values.
pub fn config_differences(a: &ExperimentConfig, b: &ExperimentConfig) -> Vec<(String, Value, Value)> {
    let (mut fa, mut fb) = (BTreeMap::new(), BTreeMap::new());
    flatten("", &serde_json::to_value(a).unwrap(), &mut fa);
    flatten("", &serde_json::to_value(b).unwrap(), &mut fb);
    let keys: std::collections::BTreeSet<_> = fa.keys().chain(fb.keys()).cloned().collect();
    keys.into_iter()
        .filter_map(|k| {
            let x = fa.get(&k).cloned().unwrap_or(Value::Null);
            let y = fb.get(&k).cloned().unwrap_or(Value::Null);
            (x != y).then_some((k, x, y))
        })
        .collect()
}

pub fn diff(a: &Path, b: &Path) -> Result<(), CliError> {
    let (ma, mb) = (Manifest::read(a)?, Manifest::read(b)?);
    let mut n = 0;
    if ma.command != mb.command {
        println!("command: {} vs {}", ma.command, mb.command);
        n += 1;
    }
    if ma.seed != mb.seed {
        println!("seed: {} vs {}", ma.seed, mb.seed);
        n += 1;
    }
    for (k, x, y) in config_differences(&ma.config, &mb.config) {
        if k != "seed" {
            println!("config.{k}: {x} vs {y}");
            n += 1;
        }
    }
    if ma.versions != mb.versions {
        println!("versions: {:?} vs {:?}", ma.versions, mb.versions);
        n += 1;
    }
    for d in artifact_differences(&ma, &mb) {
        println!("artifact {d}");
        n += 1;
    }
    if n == 0 {
        println!("manifests match");
        Ok(())
    } else {
        Err(CliError::Diagnostic(format!("manifests differ in {n} entries")))
    }
}
