//! Run configuration: defaults, the flat key-value file format, flag
//! overrides and resolution of `auto`/`peak` settings.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spinchain_core::experiments::{auto_alpha, OctSettings};
use spinchain_core::propagate::{first_arrival_window, FreeTransfer};
use spinchain_core::{Actuators, ChainSpec, DisorderScope, InitialGuess};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    FreeEvolve,
    Optimize,
    TimeSweep,
    AlphaSweep,
    DisorderSweep,
    LengthScaling,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::FreeEvolve => "free-evolve",
            Experiment::Optimize => "optimize",
            Experiment::TimeSweep => "time-sweep",
            Experiment::AlphaSweep => "alpha-sweep",
            Experiment::DisorderSweep => "disorder-sweep",
            Experiment::LengthScaling => "length-scaling",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ActuatorChoice {
    Left,
    Both,
}

impl From<ActuatorChoice> for Actuators {
    fn from(a: ActuatorChoice) -> Self {
        match a {
            ActuatorChoice::Left => Actuators::LeftOnly,
            ActuatorChoice::Both => Actuators::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolChoice {
    Free,
    Left,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EvaluationChoice {
    Fixed,
    Peak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ScopeChoice {
    All,
    Bulk,
}

impl From<ScopeChoice> for DisorderScope {
    fn from(s: ScopeChoice) -> Self {
        match s {
            ScopeChoice::All => DisorderScope::AllCouplings,
            ScopeChoice::Bulk => DisorderScope::BulkOnly,
        }
    }
}

/// A number or a keyword such as `auto`, `peak` or `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Setting {
    Value(f64),
    Keyword(String),
}

impl FromStr for Setting {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().parse::<f64>() {
            Ok(v) => Setting::Value(v),
            Err(_) => Setting::Keyword(s.trim().to_ascii_lowercase()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Option<Experiment>,
    pub n: usize,
    /// Boundary coupling, or `auto` for the free-evolution optimum.
    pub alpha: Setting,
    /// Operation time, `peak` for the free peak time or `n` for T = N.
    pub t: Setting,
    pub actuators: ActuatorChoice,
    pub alpha_l: Option<f64>,
    pub alpha_r: Option<f64>,
    pub guess: Option<String>,
    pub mixing: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub stationarity_tol: f64,
    pub dt: Option<f64>,
    pub coarse_dt: f64,
    pub t_max: Option<f64>,
    pub amplitudes: Option<Vec<f64>>,
    pub realizations: usize,
    pub seed: u64,
    pub disorder_scope: ScopeChoice,
    pub evaluation: EvaluationChoice,
    pub protocol: Option<ProtocolChoice>,
    pub t_over_n: Vec<f64>,
    pub alphas: Vec<f64>,
    pub lengths: Vec<usize>,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            n: 10,
            alpha: Setting::Keyword("auto".into()),
            t: Setting::Keyword("peak".into()),
            actuators: ActuatorChoice::Left,
            alpha_l: None,
            alpha_r: None,
            guess: None,
            mixing: spinchain_core::oct::DEFAULT_MIXING,
            tol: spinchain_core::oct::DEFAULT_TOL,
            max_iters: spinchain_core::oct::DEFAULT_MAX_ITERS,
            stationarity_tol: spinchain_core::oct::DEFAULT_STATIONARITY_TOL,
            dt: None,
            coarse_dt: spinchain_core::propagate::DEFAULT_COARSE_DT,
            t_max: None,
            amplitudes: None,
            realizations: spinchain_core::experiments::DEFAULT_REALIZATIONS,
            seed: 1,
            disorder_scope: ScopeChoice::All,
            evaluation: EvaluationChoice::Fixed,
            protocol: None,
            t_over_n: vec![0.4, 0.65, 0.8, 1.0, 1.25, 1.5],
            alphas: (1..=10).map(|k| k as f64 / 10.0).collect(),
            lengths: vec![10, 15, 20, 25, 30, 35, 40],
            output: None,
        }
    }
}

fn invalid(field: &'static str, message: impl Into<String>) -> CliError {
    CliError::Config {
        field,
        message: message.into(),
    }
}

/// Reads a config file. JSON files may be full run manifests, in which case
/// their `config` entry is used; anything else is parsed as flat
/// `key = value` text.
pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid("config", format!("{}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| invalid("config", format!("{}: {e}", path.display())))?;
        let inner = value.get("config").cloned().unwrap_or(value);
        serde_json::from_value(inner).map_err(|e| invalid("config", e.to_string()))
    } else {
        toml::from_str(&text).map_err(|e| invalid("config", e.message().to_string()))
    }
}

/// Parses an initial-guess string: `zero`, `constant:C`, `random:SEED:AMP`,
/// `mono:AMP:OMEGA` or `two-harmonic:AMP:OMEGA1:OMEGA2`.
pub fn parse_guess(s: &str) -> Result<InitialGuess, CliError> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let num = |i: usize| -> Result<f64, CliError> {
        parts
            .get(i)
            .and_then(|p| p.parse::<f64>().ok())
            .filter(|v| v.is_finite())
            .ok_or_else(|| invalid("guess", format!("bad or missing number in `{s}`")))
    };
    let arity = |k: usize| {
        if parts.len() == k {
            Ok(())
        } else {
            Err(invalid("guess", format!("`{}` takes {} values", parts[0], k - 1)))
        }
    };
    match parts[0] {
        "zero" => arity(1).map(|_| InitialGuess::Zero),
        "constant" => {
            arity(2)?;
            Ok(InitialGuess::Constant(num(1)?))
        }
        "random" => {
            arity(3)?;
            let seed = parts[1]
                .parse::<u64>()
                .map_err(|_| invalid("guess", format!("bad seed in `{s}`")))?;
            Ok(InitialGuess::Random {
                seed,
                amplitude: num(2)?,
            })
        }
        "mono" => {
            arity(3)?;
            Ok(InitialGuess::Monochromatic {
                amplitude: num(1)?,
                omega: num(2)?,
            })
        }
        "two-harmonic" => {
            arity(4)?;
            Ok(InitialGuess::TwoHarmonic {
                amplitude: num(1)?,
                omega1: num(2)?,
                omega2: num(3)?,
            })
        }
        other => Err(invalid("guess", format!("unknown guess kind `{other}`"))),
    }
}

/// A config with every `auto`/`peak` setting replaced by numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub config: RunConfig,
    pub experiment: Experiment,
    pub spec: ChainSpec,
    pub alpha: f64,
    pub t: f64,
    pub window: f64,
}

impl Resolved {
    pub fn actuators(&self) -> Actuators {
        self.config.actuators.into()
    }

    pub fn protocol(&self) -> ProtocolChoice {
        self.config.protocol.expect("filled during resolution")
    }

    pub fn amplitudes(&self) -> &[f64] {
        self.config.amplitudes.as_deref().unwrap_or(&[])
    }

    pub fn settings(&self) -> Result<OctSettings, CliError> {
        settings_for(&self.config, self.actuators())
    }

    pub fn settings_for(&self, actuators: Actuators) -> Result<OctSettings, CliError> {
        settings_for(&self.config, actuators)
    }

    /// SHA-256 of the resolved config without its output directory.
    pub fn hash(&self) -> String {
        config_hash(&self.config)
    }
}

pub fn config_hash(config: &RunConfig) -> String {
    let mut c = config.clone();
    c.output = None;
    let json = serde_json::to_string(&c).expect("config serializes");
    format!("{:x}", Sha256::digest(json.as_bytes()))
}

fn settings_for(config: &RunConfig, actuators: Actuators) -> Result<OctSettings, CliError> {
    let mut s = OctSettings::for_actuators(actuators, config.n);
    if let Some(a) = config.alpha_l {
        s.alpha_l = a;
    }
    if let Some(a) = config.alpha_r {
        s.alpha_r = a;
    }
    s.mixing = config.mixing;
    s.tol = config.tol;
    s.max_iters = config.max_iters;
    s.stationarity_tol = config.stationarity_tol;
    s.max_dt = config.dt;
    if let Some(g) = &config.guess {
        s.guesses = vec![parse_guess(g)?];
    }
    Ok(s)
}

fn check_positive(field: &'static str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite and > 0, got {v}")))
    }
}

/// Validates `config` for `experiment` and fills every derived field.
pub fn resolve(mut config: RunConfig, experiment: Experiment) -> Result<Resolved, CliError> {
    if let Some(e) = config.experiment {
        if e != experiment {
            return Err(invalid(
                "experiment",
                format!("config is for `{}`, not `{}`", e.name(), experiment.name()),
            ));
        }
    }
    config.experiment = Some(experiment);
    if config.n < 2 {
        return Err(invalid("n", format!("must be >= 2, got {}", config.n)));
    }
    let n = config.n;
    if !(config.mixing > 0.0 && config.mixing <= 1.0) {
        return Err(invalid("mixing", format!("must be in (0, 1], got {}", config.mixing)));
    }
    if !(config.tol >= 0.0) {
        return Err(invalid("tol", format!("must be >= 0, got {}", config.tol)));
    }
    if config.max_iters == 0 {
        return Err(invalid("max_iters", "must be >= 1"));
    }
    check_positive("stationarity_tol", config.stationarity_tol)?;
    check_positive("coarse_dt", config.coarse_dt)?;
    if let Some(dt) = config.dt {
        check_positive("dt", dt)?;
    }
    if let Some(w) = config.t_max {
        check_positive("t_max", w)?;
    }
    if config.realizations == 0 {
        return Err(invalid("realizations", "must be >= 1"));
    }
    if let Some(g) = &config.guess {
        parse_guess(g)?;
    }

    let alpha = match &config.alpha {
        Setting::Value(a) if a.is_finite() && *a >= 0.0 => *a,
        Setting::Value(a) => return Err(invalid("alpha", format!("must be finite and >= 0, got {a}"))),
        Setting::Keyword(k) if k == "auto" => auto_alpha(n)?.0,
        Setting::Keyword(k) => return Err(invalid("alpha", format!("expected a number or `auto`, got `{k}`"))),
    };
    config.alpha = Setting::Value(alpha);
    let spec = ChainSpec::new(n, alpha)?;
    let window = config.t_max.unwrap_or_else(|| first_arrival_window(n));

    let t = match &config.t {
        Setting::Value(t) if t.is_finite() && *t > 0.0 => *t,
        Setting::Value(t) => return Err(invalid("t", format!("must be finite and > 0, got {t}"))),
        Setting::Keyword(k) if k == "peak" => FreeTransfer::new(&spec.hamiltonian()).peak(window, config.coarse_dt)?.t_peak,
        Setting::Keyword(k) if k == "n" => n as f64,
        Setting::Keyword(k) => {
            return Err(invalid("t", format!("expected a number, `peak` or `n`, got `{k}`")));
        }
    };
    config.t = Setting::Value(t);

    let actuators: Actuators = config.actuators.into();
    let preset = OctSettings::for_actuators(actuators, n);
    let alpha_l = config.alpha_l.unwrap_or(preset.alpha_l);
    let alpha_r = config.alpha_r.unwrap_or(preset.alpha_r);
    check_positive("alpha_l", alpha_l)?;
    check_positive("alpha_r", alpha_r)?;
    config.alpha_l = Some(alpha_l);
    config.alpha_r = Some(alpha_r);

    config.protocol = Some(config.protocol.unwrap_or(match experiment {
        Experiment::DisorderSweep => match config.actuators {
            ActuatorChoice::Left => ProtocolChoice::Left,
            ActuatorChoice::Both => ProtocolChoice::Both,
        },
        _ => ProtocolChoice::Free,
    }));
    let amplitudes = config.amplitudes.take().unwrap_or_else(|| match experiment {
        Experiment::DisorderSweep => vec![0.0, 0.05, 0.1, 0.2, 0.5, 1.0, 1.5],
        _ => vec![],
    });
    if let Some(a) = amplitudes.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
        return Err(invalid("amplitudes", format!("must be finite and >= 0, got {a}")));
    }
    if experiment == Experiment::AlphaSweep && amplitudes.len() > 1 {
        return Err(invalid("amplitudes", "alpha-sweep takes at most one amplitude"));
    }
    config.amplitudes = Some(amplitudes);

    match experiment {
        Experiment::TimeSweep => {
            if config.t_over_n.is_empty() {
                return Err(invalid("t_over_n", "must not be empty"));
            }
            for &f in &config.t_over_n {
                check_positive("t_over_n", f)?;
            }
        }
        Experiment::AlphaSweep => {
            if config.alphas.is_empty() {
                return Err(invalid("alphas", "must not be empty"));
            }
            if let Some(a) = config.alphas.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
                return Err(invalid("alphas", format!("must be finite and >= 0, got {a}")));
            }
        }
        Experiment::LengthScaling => {
            if config.lengths.is_empty() {
                return Err(invalid("lengths", "must not be empty"));
            }
            if let Some(l) = config.lengths.iter().find(|l| **l < 2) {
                return Err(invalid("lengths", format!("must be >= 2, got {l}")));
            }
        }
        _ => {}
    }
    Ok(Resolved {
        config,
        experiment,
        spec,
        alpha,
        t,
        window,
    })
}
