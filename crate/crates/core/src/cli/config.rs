use std::fmt;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::realization::Mode;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Subcommand {
    Kernels,
    Realize,
    Gle,
    KzCompare,
    Lindblad,
    Dilation,
    Qnoise,
    FockCheck,
}

impl Subcommand {
    pub const ALL: [Subcommand; 8] = [
        Subcommand::Kernels,
        Subcommand::Realize,
        Subcommand::Gle,
        Subcommand::KzCompare,
        Subcommand::Lindblad,
        Subcommand::Dilation,
        Subcommand::Qnoise,
        Subcommand::FockCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Kernels => "kernels",
            Subcommand::Realize => "realize",
            Subcommand::Gle => "gle",
            Subcommand::KzCompare => "kz-compare",
            Subcommand::Lindblad => "lindblad",
            Subcommand::Dilation => "dilation",
            Subcommand::Qnoise => "qnoise",
            Subcommand::FockCheck => "fock-check",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|s| s.name()).collect();
            Error::Config(format!("unknown subcommand `{name}`{}", suggestion(name, &names)))
        })
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelsParams {
    pub lambda: f64,
    pub temperature: f64,
    pub hbar: f64,
    pub k_b: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub n_t: usize,
    pub omega_max_factor: f64,
    pub n_points: usize,
    pub callen_welton_omegas: Vec<f64>,
}

impl Default for KernelsParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            temperature: 1.0,
            hbar: 1.0,
            k_b: 1.0,
            t_min: 0.1,
            t_max: 5.0,
            n_t: 50,
            omega_max_factor: 200.0,
            n_points: 4096,
            callen_welton_omegas: vec![0.5, 1.0, 2.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RealizeParams {
    pub modes: Vec<Mode>,
    pub dt: f64,
    pub steps: usize,
    pub n_traj: usize,
    pub max_lag: usize,
}

impl Default for RealizeParams {
    fn default() -> Self {
        Self {
            modes: vec![Mode::Exp { c: 1.0, gamma: 1.0 }],
            dt: 0.05,
            steps: 10_000,
            n_traj: 200,
            max_lag: 40,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GleParams {
    pub mass: f64,
    pub potential: Vec<f64>,
    pub coupling: Vec<f64>,
    pub temperature: f64,
    pub k_b: f64,
    pub modes: Vec<Mode>,
    pub x0: f64,
    pub p0: f64,
    pub dt: f64,
    pub steps: usize,
    pub record_every: usize,
    pub burn_in_fraction: f64,
}

impl Default for GleParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            potential: vec![0.0, 0.0, 0.5],
            coupling: vec![0.0, 1.0],
            temperature: 1.0,
            k_b: 1.0,
            modes: vec![Mode::Exp { c: 1.0, gamma: 1.0 }],
            x0: 0.0,
            p0: 0.0,
            dt: 0.01,
            steps: 100_000,
            record_every: 100,
            burn_in_fraction: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KzCompareParams {
    pub n_oscillators: usize,
    pub d_omega: f64,
    pub lambda: f64,
    pub temperature: f64,
    pub hbar: f64,
    pub k_b: f64,
    pub mass: f64,
    pub potential: Vec<f64>,
    pub coupling: Vec<f64>,
    pub x0: f64,
    pub p0: f64,
    pub dt: f64,
    pub t_final: f64,
    pub record_every: usize,
}

impl Default for KzCompareParams {
    fn default() -> Self {
        Self {
            n_oscillators: 32,
            d_omega: 0.25,
            lambda: 1.0,
            temperature: 1.0,
            hbar: 1.0,
            k_b: 1.0,
            mass: 1.0,
            potential: vec![0.0, 0.0, 0.5, 0.0, 0.1],
            coupling: vec![0.0, 1.0, 0.2],
            x0: 0.5,
            p0: 0.2,
            dt: 1e-3,
            t_final: 10.0,
            record_every: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LindbladKind {
    #[default]
    TwoLevel,
    DampedHo,
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LindbladParams {
    pub model: LindbladKind,
    pub omega: f64,
    pub gamma: f64,
    pub n_thermal: f64,
    pub hbar: f64,
    pub mass: f64,
    pub spring: f64,
    pub temperature: f64,
    pub k_b: f64,
    pub fock_cutoff: usize,
    /// Coherent amplitude [re, im] of the damped-oscillator initial state.
    pub alpha: [f64; 2],
    /// JSON file with `h`, `lindblad_ops` and optional `rho0` for the custom model.
    pub custom_file: String,
    pub dt: f64,
    pub t_final: f64,
    pub record_every: usize,
}

impl Default for LindbladParams {
    fn default() -> Self {
        Self {
            model: LindbladKind::TwoLevel,
            omega: 1.0,
            gamma: 1.0,
            n_thermal: 0.5,
            hbar: 1.0,
            mass: 1.0,
            spring: 1.0,
            temperature: 1.0,
            k_b: 1.0,
            fock_cutoff: 20,
            alpha: [1.0, 0.0],
            custom_file: String::new(),
            dt: 0.01,
            t_final: 10.0,
            record_every: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DilationParams {
    pub omega: f64,
    pub gamma: f64,
    pub n_thermal: f64,
    pub hbar: f64,
    pub t_final: f64,
    pub dt_list: Vec<f64>,
    pub bin_cutoff: usize,
}

impl Default for DilationParams {
    fn default() -> Self {
        Self {
            omega: 1.0,
            gamma: 1.0,
            n_thermal: 0.0,
            hbar: 1.0,
            t_final: 1.0,
            dt_list: vec![1e-2, 5e-3, 2.5e-3],
            bin_cutoff: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QnoiseParams {
    pub lambda: f64,
    pub temperature: f64,
    pub hbar: f64,
    pub k_b: f64,
    pub n_terms: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub n_t: usize,
    pub fock_cutoff: usize,
    pub generator_modes: Vec<usize>,
    pub sim_terms: usize,
    pub sim_dt: f64,
    pub sim_steps: usize,
    /// 0 skips the surrogate simulation.
    pub sim_traj: usize,
    pub sim_max_lag: usize,
}

impl Default for QnoiseParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            temperature: 1.0,
            hbar: 1.0,
            k_b: 1.0,
            n_terms: 200,
            t_min: 0.1,
            t_max: 2.0,
            n_t: 20,
            fock_cutoff: 40,
            generator_modes: vec![0, 1, 2],
            sim_terms: 8,
            sim_dt: 0.05,
            sim_steps: 20_000,
            sim_traj: 0,
            sim_max_lag: 60,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FockCheckParams {
    pub cutoffs: Vec<usize>,
    pub alpha: [f64; 2],
    pub u: [f64; 2],
    pub v: [f64; 2],
}

impl Default for FockCheckParams {
    fn default() -> Self {
        Self {
            cutoffs: vec![20, 40, 80],
            alpha: [1.5, 0.5],
            u: [0.8, 0.3],
            v: [-0.2, 0.9],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Params {
    Kernels(KernelsParams),
    Realize(RealizeParams),
    Gle(GleParams),
    KzCompare(KzCompareParams),
    Lindblad(LindbladParams),
    Dilation(DilationParams),
    Qnoise(QnoiseParams),
    FockCheck(FockCheckParams),
}

impl Params {
    pub fn defaults(sub: Subcommand) -> Self {
        match sub {
            Subcommand::Kernels => Params::Kernels(Default::default()),
            Subcommand::Realize => Params::Realize(Default::default()),
            Subcommand::Gle => Params::Gle(Default::default()),
            Subcommand::KzCompare => Params::KzCompare(Default::default()),
            Subcommand::Lindblad => Params::Lindblad(Default::default()),
            Subcommand::Dilation => Params::Dilation(Default::default()),
            Subcommand::Qnoise => Params::Qnoise(Default::default()),
            Subcommand::FockCheck => Params::FockCheck(Default::default()),
        }
    }

    pub fn subcommand(&self) -> Subcommand {
        match self {
            Params::Kernels(_) => Subcommand::Kernels,
            Params::Realize(_) => Subcommand::Realize,
            Params::Gle(_) => Subcommand::Gle,
            Params::KzCompare(_) => Subcommand::KzCompare,
            Params::Lindblad(_) => Subcommand::Lindblad,
            Params::Dilation(_) => Subcommand::Dilation,
            Params::Qnoise(_) => Subcommand::Qnoise,
            Params::FockCheck(_) => Subcommand::FockCheck,
        }
    }

    fn to_value(&self) -> Value {
        let v = match self {
            Params::Kernels(p) => serde_json::to_value(p),
            Params::Realize(p) => serde_json::to_value(p),
            Params::Gle(p) => serde_json::to_value(p),
            Params::KzCompare(p) => serde_json::to_value(p),
            Params::Lindblad(p) => serde_json::to_value(p),
            Params::Dilation(p) => serde_json::to_value(p),
            Params::Qnoise(p) => serde_json::to_value(p),
            Params::FockCheck(p) => serde_json::to_value(p),
        };
        v.expect("parameter blocks serialize to JSON")
    }

    /// Whether the run draws random numbers and therefore needs a seed.
    pub fn stochastic(&self) -> bool {
        match self {
            Params::Realize(_) | Params::Gle(_) | Params::KzCompare(_) => true,
            Params::Qnoise(p) => p.sim_traj > 0,
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub params: Params,
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn defaults(sub: Subcommand) -> Self {
        Self {
            params: Params::defaults(sub),
            seed: None,
        }
    }

    pub fn subcommand(&self) -> Subcommand {
        self.params.subcommand()
    }

    /// Canonical JSON with every default filled in.
    pub fn to_json(&self) -> String {
        let mut obj = match self.params.to_value() {
            Value::Object(m) => m,
            _ => unreachable!("parameter blocks are objects"),
        };
        obj.insert("seed".into(), self.seed.map_or(Value::Null, Value::from));
        serde_json::to_string(&Value::Object(obj)).expect("config serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        let v: Value = serde_json::from_str(&self.to_json()).expect("canonical json parses");
        serde_json::to_string_pretty(&v).expect("config serializes")
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| {
            Error::Config(format!(
                "`{}` is stochastic; pass --seed or set \"seed\" in the config",
                self.subcommand()
            ))
        })
    }
}

fn suggestion(word: &str, candidates: &[&str]) -> String {
    let best = candidates
        .iter()
        .map(|c| (strsim::jaro_winkler(word, c), *c))
        .max_by(|a, b| a.0.total_cmp(&b.0));
    match best {
        Some((score, c)) if score >= 0.8 => format!("; did you mean `{c}`?"),
        _ => String::new(),
    }
}

fn typed<P: DeserializeOwned + Default + Serialize>(sub: Subcommand, obj: &Map<String, Value>) -> Result<P> {
    let defaults = serde_json::to_value(P::default()).expect("parameter blocks serialize");
    let known: Vec<&str> = match &defaults {
        Value::Object(m) => m.keys().map(String::as_str).chain(["seed"]).collect(),
        _ => unreachable!("parameter blocks are objects"),
    };
    for key in obj.keys() {
        if !known.contains(&key.as_str()) {
            return Err(Error::Config(format!(
                "unknown key `{key}` in {sub} config{}",
                suggestion(key, &known)
            )));
        }
    }
    let mut fields = obj.clone();
    fields.remove("seed");
    for (key, value) in &fields {
        let mut single = Map::new();
        single.insert(key.clone(), value.clone());
        if let Err(e) = serde_json::from_value::<P>(Value::Object(single)) {
            return Err(Error::Config(format!("bad value for `{key}` in {sub} config: {e}")));
        }
    }
    serde_json::from_value(Value::Object(fields)).map_err(|e| Error::Config(format!("{sub} config: {e}")))
}

/// Parses a JSON parameter block for `sub`. Absent keys take their defaults.
pub fn parse_config(sub: Subcommand, text: &str) -> Result<ExperimentConfig> {
    let value: Value = serde_json::from_str(text).map_err(|e| {
        Error::Config(format!("syntax error at line {}, column {}: {e}", e.line(), e.column()))
    })?;
    let obj = match value {
        Value::Object(m) => m,
        other => return Err(Error::Config(format!("config must be a JSON object, got {other}"))),
    };
    let seed = match obj.get("seed") {
        None | Some(Value::Null) => None,
        Some(v) => Some(
            v.as_u64()
                .ok_or_else(|| Error::Config(format!("bad value for `seed`: expected unsigned 64-bit integer, got {v}")))?,
        ),
    };
    let params = match sub {
        Subcommand::Kernels => Params::Kernels(typed(sub, &obj)?),
        Subcommand::Realize => Params::Realize(typed(sub, &obj)?),
        Subcommand::Gle => Params::Gle(typed(sub, &obj)?),
        Subcommand::KzCompare => Params::KzCompare(typed(sub, &obj)?),
        Subcommand::Lindblad => Params::Lindblad(typed(sub, &obj)?),
        Subcommand::Dilation => Params::Dilation(typed(sub, &obj)?),
        Subcommand::Qnoise => Params::Qnoise(typed(sub, &obj)?),
        Subcommand::FockCheck => Params::FockCheck(typed(sub, &obj)?),
    };
    Ok(ExperimentConfig { params, seed })
}
