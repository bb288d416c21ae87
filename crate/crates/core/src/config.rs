//! Batch configuration and the runner behind the `qma` binary.
//!
//! A config is a JSON object:
//!
//! ```json
//! {
//!   "master_seed": 7,
//!   "output_dir": "out",
//!   "constants": { "hbar": 1.054571817e-34 },
//!   "jobs": 4,
//!   "experiments": [
//!     { "name": "run_polarization", "params": { "theta_deg": 60 }, "label": "pol60" }
//!   ]
//! }
//! ```
//!
//! Each experiment gets the seed `derive_seed(master_seed, index)` unless it
//! sets its own `seed`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::experiments::{self, Constants, ExperimentReport, ExperimentSpec};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiments: Vec<ExperimentSpec>,
    /// Output file stem per experiment.
    pub labels: Vec<String>,
    pub output_dir: PathBuf,
    pub master_seed: u64,
    pub constants: Constants,
    pub jobs: usize,
}

/// Command-line values; each one set here wins over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub master_seed: Option<u64>,
    pub jobs: Option<usize>,
    pub hbar: Option<f64>,
    /// Replaces the file's experiment list with this single experiment.
    pub experiment: Option<String>,
    pub params: Vec<(String, Value)>,
}

/// `k=v` with `v` read as JSON when it parses, else as a string.
pub fn parse_param(s: &str) -> Result<(String, Value)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::config("--param", format!("expected key=value, got '{s}'")))?;
    if k.is_empty() {
        return Err(Error::config("--param", format!("empty key in '{s}'")));
    }
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.to_string(), value))
}

fn expect_object<'a>(v: &'a Value, key: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| Error::config(key, "expected a JSON object"))
}

fn reject_unknown(obj: &Map<String, Value>, allowed: &[&str], prefix: &str) -> Result<()> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(Error::config(format!("{prefix}{k}"), "unknown key")),
        None => Ok(()),
    }
}

struct Entry {
    spec: ExperimentSpec,
    explicit_seed: bool,
    label: Option<String>,
}

fn parse_entry(v: &Value, i: usize) -> Result<Entry> {
    let at = format!("experiments[{i}]");
    let obj = expect_object(v, &at)?;
    reject_unknown(obj, &["name", "params", "n_runs", "seed", "label"], &format!("{at}."))?;
    let name = obj
        .get("name")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::config(format!("{at}.name"), "missing or not a string"))?;
    let params = match obj.get("params") {
        None => BTreeMap::new(),
        Some(p) => expect_object(p, &format!("{at}.params"))?.clone().into_iter().collect(),
    };
    let u64_field = |key: &str| -> Result<Option<u64>> {
        obj.get(key)
            .map(|x| x.as_u64().ok_or_else(|| Error::config(format!("{at}.{key}"), "expected a non-negative integer")))
            .transpose()
    };
    let seed = u64_field("seed")?;
    let n_runs = u64_field("n_runs")?;
    let label = obj
        .get("label")
        .map(|l| {
            l.as_str()
                .filter(|s| !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c)))
                .map(str::to_string)
                .ok_or_else(|| Error::config(format!("{at}.label"), "expected a file-name-safe string"))
        })
        .transpose()?;
    Ok(Entry {
        spec: ExperimentSpec { name: name.to_string(), params, n_runs, seed: seed.unwrap_or(0) },
        explicit_seed: seed.is_some(),
        label,
    })
}

/// Reads the optional config file, applies overrides and validates every
/// experiment. The output directory is created.
pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig> {
    let file = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::config("--config", format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| Error::config("--config", format!("invalid JSON: {e}")))?
        }
        None => Value::Object(Map::new()),
    };
    let obj = expect_object(&file, "config")?;
    reject_unknown(obj, &["experiments", "output_dir", "master_seed", "constants", "jobs"], "")?;

    let master_seed = match (overrides.master_seed, obj.get("master_seed")) {
        (Some(s), _) => s,
        (None, Some(v)) => v.as_u64().ok_or_else(|| Error::config("master_seed", "expected a 64-bit unsigned integer"))?,
        (None, None) => return Err(Error::config("master_seed", "required (set it in the config or with --seed)")),
    };
    let output_dir = match (&overrides.output_dir, obj.get("output_dir")) {
        (Some(d), _) => d.clone(),
        (None, Some(v)) => PathBuf::from(v.as_str().ok_or_else(|| Error::config("output_dir", "expected a path string"))?),
        (None, None) => PathBuf::from("qma-out"),
    };
    let jobs = match (overrides.jobs, obj.get("jobs")) {
        (Some(j), _) => j,
        (None, Some(v)) => v.as_u64().ok_or_else(|| Error::config("jobs", "expected a positive integer"))? as usize,
        (None, None) => 1,
    };
    if jobs == 0 {
        return Err(Error::config("jobs", "must be at least 1"));
    }
    let mut constants = Constants::default();
    if let Some(c) = obj.get("constants") {
        let c = expect_object(c, "constants")?;
        reject_unknown(c, &["hbar"], "constants.")?;
        if let Some(h) = c.get("hbar") {
            constants.hbar = h.as_f64().ok_or_else(|| Error::config("constants.hbar", "expected a number"))?;
        }
    }
    if let Some(h) = overrides.hbar {
        constants.hbar = h;
    }
    if !(constants.hbar.is_finite() && constants.hbar > 0.0) {
        return Err(Error::config("constants.hbar", "must be a positive number"));
    }

    let entries = if let Some(name) = &overrides.experiment {
        let mut spec = ExperimentSpec::new(name.clone(), 0);
        spec.params = overrides.params.iter().cloned().collect();
        vec![Entry { spec, explicit_seed: false, label: None }]
    } else {
        if !overrides.params.is_empty() {
            return Err(Error::config("--param", "only valid together with --experiment"));
        }
        let list = obj
            .get("experiments")
            .ok_or_else(|| Error::config("experiments", "required (or use --experiment)"))?
            .as_array()
            .ok_or_else(|| Error::config("experiments", "expected a list"))?;
        list.iter().enumerate().map(|(i, v)| parse_entry(v, i)).collect::<Result<Vec<_>>>()?
    };
    if entries.is_empty() {
        return Err(Error::config("experiments", "no experiments configured"));
    }

    let mut specs = Vec::with_capacity(entries.len());
    let mut labels: Vec<String> = Vec::with_capacity(entries.len());
    for (i, mut e) in entries.into_iter().enumerate() {
        let prefix = if overrides.experiment.is_some() { "--experiment".to_string() } else { format!("experiments[{i}]") };
        if let Err(Error::Config { key, message }) = experiments::validate(&e.spec) {
            let key = match (overrides.experiment.is_some(), key.as_str()) {
                (true, "name") => "--experiment".to_string(),
                (true, k) if k.starts_with("params.") => format!("--param {}", &k["params.".len()..]),
                _ => format!("{prefix}.{key}"),
            };
            return Err(Error::Config { key, message });
        }
        if !e.explicit_seed {
            e.spec.seed = rng::derive_seed(master_seed, i as u64);
        }
        let label = e.label.unwrap_or_else(|| e.spec.name.clone());
        if label == "summary" || labels.contains(&label) {
            return Err(Error::config(
                format!("{prefix}.label"),
                format!("output name '{label}' is already taken; set a distinct label"),
            ));
        }
        labels.push(label);
        specs.push(e.spec);
    }

    fs::create_dir_all(&output_dir)
        .map_err(|e| Error::config("output_dir", format!("{}: {e}", output_dir.display())))?;
    let probe = output_dir.join(".qma-write-test");
    fs::write(&probe, b"")
        .and_then(|_| fs::remove_file(&probe))
        .map_err(|e| Error::config("output_dir", format!("{} is not writable: {e}", output_dir.display())))?;

    Ok(RunConfig { experiments: specs, labels, output_dir, master_seed, constants, jobs })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryEntry {
    pub label: String,
    pub name: String,
    pub seed: u64,
    /// `pass`, `fail` or `error`.
    pub status: String,
    pub verdicts: BTreeMap<String, bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub master_seed: u64,
    pub all_pass: bool,
    pub verdict_count: usize,
    pub experiments: Vec<SummaryEntry>,
}

impl Summary {
    /// 0 when every verdict passes, 1 after a runtime error, 3 after a failed
    /// verdict.
    pub fn exit_code(&self) -> i32 {
        if self.experiments.iter().any(|e| e.status == "error") {
            1
        } else if self.all_pass {
            0
        } else {
            3
        }
    }
}

/// Runs every configured experiment (up to `jobs` at once) and writes
/// `<label>.json`, `<label>.csv` for patterns, and `summary.json`.
pub fn execute(cfg: &RunConfig) -> Result<Summary> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Integration(format!("thread pool: {e}")))?;
    let results: Vec<Result<ExperimentReport>> =
        pool.install(|| cfg.experiments.par_iter().map(|s| experiments::run(s, &cfg.constants)).collect());

    let io = |p: &Path, e: std::io::Error| Error::Integration(format!("writing {}: {e}", p.display()));
    let mut entries = Vec::with_capacity(results.len());
    for ((spec, label), result) in cfg.experiments.iter().zip(&cfg.labels).zip(results) {
        let entry = match result {
            Ok(report) => {
                let path = cfg.output_dir.join(format!("{label}.json"));
                fs::write(&path, report.to_json()).map_err(|e| io(&path, e))?;
                if let Some(pattern) = &report.pattern {
                    let path = cfg.output_dir.join(format!("{label}.csv"));
                    fs::write(&path, pattern.to_csv()).map_err(|e| io(&path, e))?;
                }
                SummaryEntry {
                    label: label.clone(),
                    name: spec.name.clone(),
                    seed: spec.seed,
                    status: if report.all_pass() { "pass" } else { "fail" }.to_string(),
                    verdicts: report.verdicts,
                    error: None,
                }
            }
            Err(e) => SummaryEntry {
                label: label.clone(),
                name: spec.name.clone(),
                seed: spec.seed,
                status: "error".to_string(),
                verdicts: BTreeMap::new(),
                error: Some(e.to_string()),
            },
        };
        entries.push(entry);
    }
    let summary = Summary {
        master_seed: cfg.master_seed,
        all_pass: entries.iter().all(|e| e.status == "pass"),
        verdict_count: entries.iter().map(|e| e.verdicts.len()).sum(),
        experiments: entries,
    };
    let path = cfg.output_dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    fs::write(&path, text).map_err(|e| io(&path, e))?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, v: Value) -> PathBuf {
        let p = dir.join("config.json");
        fs::write(&p, v.to_string()).unwrap();
        p
    }

    fn key_of(e: Error) -> String {
        match e {
            Error::Config { key, .. } => key,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn param_parsing() {
        assert_eq!(parse_param("n=5").unwrap(), ("n".into(), Value::from(5)));
        assert_eq!(parse_param("mode=sampled").unwrap(), ("mode".into(), Value::from("sampled")));
        assert_eq!(parse_param("a=[1,2]").unwrap().1, serde_json::json!([1, 2]));
        assert!(parse_param("novalue").is_err());
    }

    #[test]
    fn seed_is_mandatory() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), serde_json::json!({"experiments": [{"name": "run_mach_zehnder"}]}));
        assert_eq!(key_of(load(Some(&p), &Overrides::default()).unwrap_err()), "master_seed");
    }

    #[test]
    fn error_keys_point_into_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let cfg = |exps: Value| {
            serde_json::json!({"master_seed": 1, "output_dir": out.to_str().unwrap(), "experiments": exps})
        };
        let p = write(dir.path(), cfg(serde_json::json!([{"name": "run_mach_zehnder"}, {"name": "run_bogus"}])));
        assert_eq!(key_of(load(Some(&p), &Overrides::default()).unwrap_err()), "experiments[1].name");
        let p = write(dir.path(), cfg(serde_json::json!([{"name": "run_mach_zehnder", "params": {"phse": 1}}])));
        assert_eq!(key_of(load(Some(&p), &Overrides::default()).unwrap_err()), "experiments[0].params.phse");
        let p = write(dir.path(), cfg(serde_json::json!([{"name": "run_mach_zehnder"}, {"name": "run_mach_zehnder"}])));
        assert_eq!(key_of(load(Some(&p), &Overrides::default()).unwrap_err()), "experiments[1].label");
        let p = write(dir.path(), serde_json::json!({"master_seed": 1, "experimentz": []}));
        assert_eq!(key_of(load(Some(&p), &Overrides::default()).unwrap_err()), "experimentz");
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            serde_json::json!({"master_seed": 1, "output_dir": dir.path().join("a").to_str().unwrap(),
                               "experiments": [{"name": "run_polarization"}]}),
        );
        let o = Overrides {
            master_seed: Some(9),
            output_dir: Some(dir.path().join("b")),
            experiment: Some("run_mach_zehnder".into()),
            params: vec![("phase".into(), Value::from(0.5))],
            ..Overrides::default()
        };
        let cfg = load(Some(&p), &o).unwrap();
        assert_eq!(cfg.master_seed, 9);
        assert_eq!(cfg.output_dir, dir.path().join("b"));
        assert_eq!(cfg.experiments[0].name, "run_mach_zehnder");
        assert_eq!(cfg.experiments[0].seed, rng::derive_seed(9, 0));
        let bad = Overrides { params: vec![("phse".into(), Value::from(1))], ..o };
        assert_eq!(key_of(load(Some(&p), &bad).unwrap_err()), "--param phse");
    }

    #[test]
    fn execute_writes_reports() {
        let dir = tempfile::tempdir().unwrap();
        let o = Overrides {
            master_seed: Some(3),
            output_dir: Some(dir.path().to_path_buf()),
            experiment: Some("run_quantum_eraser".into()),
            params: vec![("variant".into(), Value::from(2))],
            ..Overrides::default()
        };
        let summary = execute(&load(None, &o).unwrap()).unwrap();
        assert_eq!(summary.exit_code(), 0);
        assert!(dir.path().join("run_quantum_eraser.json").exists());
        assert!(dir.path().join("run_quantum_eraser.csv").exists());
        assert!(dir.path().join("summary.json").exists());
    }
}
