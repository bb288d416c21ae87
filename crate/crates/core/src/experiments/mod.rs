//! Canned, parameterized experiments, each producing an [`ExperimentReport`].

mod discrete;
mod waves;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::gridwave::{ScreenPattern, HBAR_CODATA};

pub use discrete::{
    bell_local_bound, run_bell_chsh, Decision, run_mach_zehnder, run_many_minds, run_polarization, run_repeated_runs,
    run_schrodinger_cat, run_stern_gerlach, wigner_d,
};
pub use waves::{
    run_bohm_paths, run_double_slit, run_packet_spread, run_quantum_eraser, split_packets, Aperture, SlitGeometry,
};

/// Physical constants shared by a batch of runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    /// Reduced Planck constant, J·s.
    pub hbar: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants { hbar: HBAR_CODATA }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    /// Overrides the experiment's sample-count parameter when set.
    #[serde(default)]
    pub n_runs: Option<u64>,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn new(name: impl Into<String>, seed: u64) -> Self {
        ExperimentSpec { name: name.into(), params: BTreeMap::new(), n_runs: None, seed }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }
}

/// Result of one run. Only the named maps are serialized; the pattern is
/// exported separately as CSV and the event log is informational.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub params: BTreeMap<String, Value>,
    pub scalars: BTreeMap<String, f64>,
    pub arrays: BTreeMap<String, Vec<f64>>,
    pub verdicts: BTreeMap<String, bool>,
    #[serde(skip)]
    pub pattern: Option<ScreenPattern>,
    #[serde(skip)]
    pub events: Vec<String>,
}

impl ExperimentReport {
    pub(crate) fn new(name: &str, params: &Params) -> Self {
        ExperimentReport {
            name: name.to_string(),
            params: params.echo(),
            scalars: BTreeMap::new(),
            arrays: BTreeMap::new(),
            verdicts: BTreeMap::new(),
            pattern: None,
            events: Vec::new(),
        }
    }

    pub(crate) fn scalar(&mut self, key: &str, value: f64) {
        let old = self.scalars.insert(key.to_string(), value);
        debug_assert!(old.is_none(), "scalar {key} reported twice");
    }

    pub(crate) fn array(&mut self, key: &str, value: Vec<f64>) {
        let old = self.arrays.insert(key.to_string(), value);
        debug_assert!(old.is_none(), "array {key} reported twice");
    }

    pub(crate) fn verdict(&mut self, key: &str, pass: bool) {
        let old = self.verdicts.insert(key.to_string(), pass);
        debug_assert!(old.is_none(), "verdict {key} reported twice");
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.values().all(|&v| v)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Number,
    Integer,
    Bool,
    Choice(&'static [&'static str]),
    /// A list of numbers.
    Numbers,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub kind: ParamKind,
    /// Default as JSON text.
    pub default: &'static str,
    pub doc: &'static str,
    /// Left out of the report's parameter echo (ordering tags).
    pub echo: bool,
}

const fn param(name: &'static str, kind: ParamKind, default: &'static str, doc: &'static str) -> ParamSpec {
    ParamSpec { name, kind, default, doc, echo: true }
}

type Runner = fn(&Params, u64, &Constants) -> Result<ExperimentReport>;

/// One registered experiment.
#[derive(Clone, Copy)]
pub struct ExperimentInfo {
    pub name: &'static str,
    /// The claim or observation the run reproduces.
    pub anchor: &'static str,
    pub params: &'static [ParamSpec],
    /// Parameter that `ExperimentSpec::n_runs` overrides.
    pub count_param: Option<&'static str>,
    runner: Runner,
}

impl std::fmt::Debug for ExperimentInfo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExperimentInfo").field("name", &self.name).finish()
    }
}

use ParamKind::*;

static REGISTRY: &[ExperimentInfo] = &[
    ExperimentInfo {
        name: "run_polarization",
        anchor: "a polarizer at angle θ passes N cos²θ of N photons",
        params: &[
            param("theta_deg", Number, "60.0", "polarization angle relative to the polarizer axis"),
            param("n_photons", Integer, "100000", "photons sent through"),
        ],
        count_param: Some("n_photons"),
        runner: discrete::polarization,
    },
    ExperimentInfo {
        name: "run_stern_gerlach",
        anchor: "a spin-1 measurement leaves three separate versions of reality; repeating it gives the same result",
        params: &[
            param(
                "amplitudes",
                Numbers,
                "[0.5, 0.5, 0.7071067811865476]",
                "real spin amplitudes from m = +j down; 2 entries for spin ½, 3 for spin 1",
            ),
            param("chain_deg", Numbers, "[0.0, 0.0]", "measurement axis angles from z, one per magnet"),
            param("n_runs", Integer, "10000", "perceived records sampled"),
        ],
        count_param: Some("n_runs"),
        runner: discrete::stern_gerlach,
    },
    ExperimentInfo {
        name: "run_schrodinger_cat",
        anchor: "a memory device records a 1 for a decay; 6,500 ones and 3,500 zeros at |a(1)|² = .65",
        params: &[
            param("p_decay", Number, "0.65", "probability weight of the decayed branch"),
            param("n_runs", Integer, "10000", "repetitions"),
        ],
        count_param: Some("n_runs"),
        runner: discrete::schrodinger_cat,
    },
    ExperimentInfo {
        name: "run_repeated_runs",
        anchor: "ten runs give 1,024 outcome sequences, 252 of them with five outcome-2s",
        params: &[
            param("p_one", Number, "0.9999", "weight of outcome 1 in each run"),
            param("runs", Integer, "10", "runs per sequence"),
            param("trials", Integer, "1000000", "sampled sequences"),
        ],
        count_param: Some("trials"),
        runner: discrete::repeated_runs,
    },
    ExperimentInfo {
        name: "run_double_slit",
        anchor: "a spread-out wave exposes exactly one film grain; grains at the nodes stay dark",
        params: &[
            param("aperture", Choice(&["gaussian", "rect"]), "\"gaussian\"", "slit transmission profile"),
            param("grain_orders", Integer, "6", "fringe orders covered by grains on each side"),
            param("n_draws", Integer, "100000", "perceived grains sampled"),
        ],
        count_param: Some("n_draws"),
        runner: waves::double_slit,
    },
    ExperimentInfo {
        name: "run_bell_chsh",
        anchor: "singlet correlations exceed every local hidden variable model",
        params: &[
            param("angles_deg", Numbers, "[0.0, 45.0, 22.5, 67.5]", "analyzer angles a, a′, b, b′"),
            param("mode", Choice(&["analytic", "sampled"]), "\"sampled\"", "analytic only, or also Born-sampled"),
            param("n", Integer, "100000", "sampled pairs per setting"),
        ],
        count_param: Some("n"),
        runner: discrete::bell_chsh,
    },
    ExperimentInfo {
        name: "run_mach_zehnder",
        anchor: "delayed choice: the outcome involves no after-the-fact choice",
        params: &[
            param("phase", Number, "0.0", "phase in the second arm, radians"),
            param("second_bs", Bool, "true", "second beam splitter present"),
            ParamSpec {
                name: "decision",
                kind: Choice(&["before_first_bs", "after_first_bs"]),
                default: "\"before_first_bs\"",
                doc: "when the second splitter is chosen; orders the event log only",
                echo: false,
            },
        ],
        count_param: None,
        runner: discrete::mach_zehnder,
    },
    ExperimentInfo {
        name: "run_quantum_eraser",
        anchor: "which-path marking gives single-slit patterns; conditioned subsets show fringes that sum back to them",
        params: &[
            ParamSpec {
                name: "variant",
                kind: Choice(&["1", "2", "3", "4"]),
                default: "\"3\"",
                doc: "1 unmarked, 2 marked, 3 conditioned, 4 conditioned with delayed partner detection",
                echo: false,
            },
            param("cond_angle_deg", Number, "0.0", "partner polarizer angle for the conditioned variants"),
            param("screen_bins", Integer, "256", "screen bins in the exported pattern"),
            param("aperture", Choice(&["gaussian", "rect"]), "\"gaussian\"", "slit transmission profile"),
        ],
        count_param: None,
        runner: waves::quantum_eraser,
    },
    ExperimentInfo {
        name: "run_bohm_paths",
        anchor: "a particle on a guided trajectory follows path i a fraction |a(i)|² of the time",
        params: &[
            param("weights", Numbers, "[0.75, 0.25]", "packet weights |a(i)|², one packet each"),
            param("n_traj", Integer, "10000", "trajectories"),
            param("t_final", Number, "12.0", "flight time (ħ = m = 1 units)"),
            param("steps", Integer, "600", "recorded snapshots, 8 RK4 steps apart"),
        ],
        count_param: Some("n_traj"),
        runner: waves::bohm_paths,
    },
    ExperimentInfo {
        name: "run_packet_spread",
        anchor: "a calcium ion's packet spreads from 10 nm to about 500 nm in a tenth of a millisecond",
        params: &[
            param("x0_m", Number, "1e-8", "initial spread, m"),
            param("t_s", Number, "1e-4", "spreading time, s"),
            param("mass_kg", Number, "6.6e-26", "particle mass, kg"),
        ],
        count_param: None,
        runner: waves::packet_spread,
    },
    ExperimentInfo {
        name: "run_many_minds",
        anchor: "independent minds agree on state 1 only a fraction .04 (and on state 2 .64) of the time",
        params: &[
            param("p1", Number, "0.2", "weight of state 1"),
            param("mode", Choice(&["independent", "correlated"]), "\"independent\"", "selection per mind or shared"),
            param("n", Integer, "1000000", "samples"),
        ],
        count_param: Some("n"),
        runner: discrete::many_minds,
    },
];

pub fn registry() -> &'static [ExperimentInfo] {
    REGISTRY
}

pub fn lookup(name: &str) -> Option<&'static ExperimentInfo> {
    REGISTRY.iter().find(|e| e.name == name)
}

/// Validated parameters with defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    values: BTreeMap<String, Value>,
    hidden: Vec<&'static str>,
}

impl Params {
    fn echo(&self) -> BTreeMap<String, Value> {
        self.values
            .iter()
            .filter(|(k, _)| !self.hidden.contains(&k.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }

    fn get(&self, key: &str) -> &Value {
        self.values.get(key).unwrap_or_else(|| panic!("parameter {key} is not registered"))
    }

    pub(crate) fn f64(&self, key: &str) -> f64 {
        self.get(key).as_f64().expect("validated number")
    }

    pub(crate) fn u64(&self, key: &str) -> u64 {
        self.get(key).as_u64().expect("validated integer")
    }

    pub(crate) fn bool(&self, key: &str) -> bool {
        self.get(key).as_bool().expect("validated bool")
    }

    pub(crate) fn str(&self, key: &str) -> &str {
        self.get(key).as_str().expect("validated choice")
    }

    pub(crate) fn numbers(&self, key: &str) -> Vec<f64> {
        self.get(key)
            .as_array()
            .expect("validated list")
            .iter()
            .map(|v| v.as_f64().expect("validated number"))
            .collect()
    }
}

fn check_kind(kind: ParamKind, v: &Value) -> std::result::Result<Value, String> {
    match kind {
        Number => v
            .as_f64()
            .filter(|x| x.is_finite())
            .map(Value::from)
            .ok_or_else(|| format!("expected a number, got {v}")),
        Integer => v.as_u64().map(Value::from).ok_or_else(|| format!("expected a non-negative integer, got {v}")),
        Bool => v.as_bool().map(Value::from).ok_or_else(|| format!("expected true or false, got {v}")),
        Choice(options) => {
            // numbers are accepted for numeric choices, e.g. variant = 3
            let s = match v {
                Value::String(s) => s.clone(),
                Value::Number(n) => n.to_string(),
                _ => return Err(format!("expected one of {options:?}, got {v}")),
            };
            if options.contains(&s.as_str()) {
                Ok(Value::String(s))
            } else {
                Err(format!("expected one of {options:?}, got {v}"))
            }
        }
        Numbers => {
            let items = v.as_array().ok_or_else(|| format!("expected a list of numbers, got {v}"))?;
            items
                .iter()
                .map(|x| x.as_f64().filter(|f| f.is_finite()).map(Value::from))
                .collect::<Option<Vec<_>>>()
                .map(Value::Array)
                .ok_or_else(|| format!("expected a list of numbers, got {v}"))
        }
    }
}

/// Checks a spec against the registry. Error keys are relative to the spec
/// (`name`, `params.<key>`, `n_runs`).
pub fn validate(spec: &ExperimentSpec) -> Result<(&'static ExperimentInfo, Params)> {
    let info = lookup(&spec.name)
        .ok_or_else(|| Error::config("name", format!("unknown experiment '{}'", spec.name)))?;
    if let Some(k) = spec.params.keys().find(|k| !info.params.iter().any(|p| p.name == k.as_str())) {
        return Err(Error::config(format!("params.{k}"), format!("'{}' has no parameter '{k}'", info.name)));
    }
    let mut values = BTreeMap::new();
    for p in info.params {
        let v = match spec.params.get(p.name) {
            Some(v) => check_kind(p.kind, v).map_err(|m| Error::config(format!("params.{}", p.name), m))?,
            None => serde_json::from_str(p.default).expect("registry defaults parse"),
        };
        values.insert(p.name.to_string(), v);
    }
    if let Some(n) = spec.n_runs {
        let key = info
            .count_param
            .ok_or_else(|| Error::config("n_runs", format!("'{}' takes no run count", info.name)))?;
        if spec.params.contains_key(key) && spec.params[key].as_u64() != Some(n) {
            return Err(Error::config("n_runs", format!("conflicts with params.{key}")));
        }
        values.insert(key.to_string(), Value::from(n));
    }
    let hidden = info.params.iter().filter(|p| !p.echo).map(|p| p.name).collect();
    Ok((info, Params { values, hidden }))
}

/// Validates and runs one experiment.
pub fn run(spec: &ExperimentSpec, constants: &Constants) -> Result<ExperimentReport> {
    let (info, params) = validate(spec)?;
    if !(constants.hbar.is_finite() && constants.hbar > 0.0) {
        return Err(Error::config("constants.hbar", "must be a positive number"));
    }
    (info.runner)(&params, spec.seed, constants)
}

/// `|count − n·p| ≤ 3σ` for a binomial count; exact for `p ∈ {0, 1}`.
pub(crate) fn within_3_sigma(count: u64, n: u64, p: f64) -> bool {
    let n = n as f64;
    let sigma = (n * p * (1.0 - p)).max(0.0).sqrt();
    (count as f64 - n * p).abs() <= 3.0 * sigma + 1e-9
}

pub(crate) fn sums_to_one(p: &[f64]) -> bool {
    p.iter().all(|&x| x >= 0.0) && (p.iter().sum::<f64>() - 1.0).abs() <= 1e-9
}
