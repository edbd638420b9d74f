//! Flat `key = value` run configuration with flag overrides.
//!
//! Precedence: documented defaults < config file < `--set` flags. Unknown
//! keys are errors (listed all at once), physics values are in units of xi.

use std::fmt;
use std::path::PathBuf;

use gatom_core::experiments::{BlockKind, VaryCoupling};
use gatom_core::model::SystemParams;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Parse {
        line: usize,
        text: String,
    },
    UnknownKeys(Vec<String>),
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse { line, text } => {
                write!(
                    f,
                    "config line {line}: expected `key = value`, got `{text}`"
                )
            }
            ConfigError::UnknownKeys(keys) => write!(f, "unknown config keys: {}", keys.join(", ")),
            ConfigError::BadValue { key, value, reason } => {
                write!(f, "bad value `{value}` for `{key}`: {reason}")
            }
            ConfigError::Invalid(msg) => write!(f, "invalid configuration: {msg}"),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Wavepacket command options (distances in sites, times in 1/xi).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WavepacketOptions {
    /// Carrier detuning of the packet.
    pub delta: f64,
    pub chain_length: usize,
    pub sigma_x: f64,
    pub x0: i64,
    pub time_step: f64,
    pub max_time: f64,
    pub absorb_guard: usize,
    /// Write per-frame site probabilities to CSV.
    pub snapshot: bool,
    /// Steps between snapshot frames.
    pub snapshot_stride: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
}

/// Fully resolved configuration of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub params: SystemParams,
    pub block: BlockKind,
    pub delta_min: f64,
    pub delta_max: f64,
    pub n_points: usize,
    pub vary: VaryCoupling,
    pub vary_values: Vec<f64>,
    pub vary_fixed: f64,
    pub parity_n: Vec<usize>,
    pub wavepacket: WavepacketOptions,
    pub output_dir: PathBuf,
    pub formats: Formats,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: String::new(),
            params: SystemParams::default(),
            block: BlockKind::Exact,
            delta_min: -1.0,
            delta_max: 1.0,
            n_points: 2001,
            vary: VaryCoupling::Lambda,
            vary_values: vec![0.1, 0.2, 0.4],
            vary_fixed: 0.5,
            parity_n: vec![0, 1, 2, 3, 4, 6],
            wavepacket: WavepacketOptions {
                delta: 0.5,
                chain_length: 4000,
                sigma_x: 40.0,
                x0: -220,
                time_step: 0.05,
                max_time: 3000.0,
                absorb_guard: 50,
                snapshot: false,
                snapshot_stride: 200,
            },
            output_dir: PathBuf::from("."),
            formats: Formats {
                csv: true,
                json: true,
                svg: true,
            },
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e: T::Err| ConfigError::BadValue {
            key: key.into(),
            value: value.into(),
            reason: e.to_string(),
        })
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: fmt::Display,
{
    value.split(',').map(|item| parse_num(key, item)).collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(ConfigError::BadValue {
            key: key.into(),
            value: other.into(),
            reason: "expected true/false".into(),
        }),
    }
}

impl RunConfig {
    fn apply(&mut self, key: &str, value: &str) -> Result<bool, ConfigError> {
        match key {
            "omega_c" => self.params.omega_c = parse_num(key, value)?,
            "xi" => self.params.xi = parse_num(key, value)?,
            "omega_0" => self.params.omega_0 = parse_num(key, value)?,
            "omega_a" => self.params.omega_a = parse_num(key, value)?,
            "lambda" => self.params.lambda = parse_num(key, value)?,
            "g" => self.params.g = parse_num(key, value)?,
            "n" | "N" => self.params.n = parse_num(key, value)?,
            "block" => {
                self.block = match value.trim() {
                    "exact" => BlockKind::Exact,
                    "sw" => BlockKind::SchriefferWolff,
                    other => {
                        return Err(ConfigError::BadValue {
                            key: key.into(),
                            value: other.into(),
                            reason: "expected `exact` or `sw`".into(),
                        })
                    }
                }
            }
            "delta_min" => self.delta_min = parse_num(key, value)?,
            "delta_max" => self.delta_max = parse_num(key, value)?,
            "n_points" => self.n_points = parse_num(key, value)?,
            "vary" => {
                self.vary = match value.trim() {
                    "lambda" => VaryCoupling::Lambda,
                    "g" => VaryCoupling::G,
                    other => {
                        return Err(ConfigError::BadValue {
                            key: key.into(),
                            value: other.into(),
                            reason: "expected `lambda` or `g`".into(),
                        })
                    }
                }
            }
            "vary_values" => self.vary_values = parse_list(key, value)?,
            "vary_fixed" => self.vary_fixed = parse_num(key, value)?,
            "parity_n" => self.parity_n = parse_list(key, value)?,
            "wp_delta" => self.wavepacket.delta = parse_num(key, value)?,
            "wp_chain_length" => self.wavepacket.chain_length = parse_num(key, value)?,
            "wp_sigma_x" => self.wavepacket.sigma_x = parse_num(key, value)?,
            "wp_x0" => self.wavepacket.x0 = parse_num(key, value)?,
            "wp_time_step" => self.wavepacket.time_step = parse_num(key, value)?,
            "wp_max_time" => self.wavepacket.max_time = parse_num(key, value)?,
            "wp_absorb_guard" => self.wavepacket.absorb_guard = parse_num(key, value)?,
            "wp_snapshot" => self.wavepacket.snapshot = parse_bool(key, value)?,
            "wp_snapshot_stride" => self.wavepacket.snapshot_stride = parse_num(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        self.params
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.n_points < 2 {
            return Err(ConfigError::Invalid(format!(
                "n_points must be >= 2, got {}",
                self.n_points
            )));
        }
        if self.delta_min >= self.delta_max || self.delta_min.is_nan() || self.delta_max.is_nan() {
            return Err(ConfigError::Invalid(format!(
                "delta_min {} must be below delta_max {}",
                self.delta_min, self.delta_max
            )));
        }
        if self.vary_values.is_empty() {
            return Err(ConfigError::Invalid("vary_values must not be empty".into()));
        }
        if self.parity_n.is_empty() {
            return Err(ConfigError::Invalid("parity_n must not be empty".into()));
        }
        Ok(())
    }
}

/// Parse a config file body plus `key=value` flag overrides into a validated
/// [`RunConfig`]. `#` starts a comment; blank lines are ignored.
pub fn parse_config(
    file_text: &str,
    flag_overrides: &[(String, String)],
) -> Result<RunConfig, ConfigError> {
    parse_config_with_base(RunConfig::default(), file_text, flag_overrides)
}

/// Like [`parse_config`] but starting from a command-specific base instead of
/// the global defaults.
pub fn parse_config_with_base(
    base: RunConfig,
    file_text: &str,
    flag_overrides: &[(String, String)],
) -> Result<RunConfig, ConfigError> {
    let mut config = base;
    let mut unknown = Vec::new();
    for (index, raw) in file_text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Parse {
                line: index + 1,
                text: raw.trim().into(),
            });
        };
        let key = key.trim();
        if !config.apply(key, value)? {
            unknown.push(key.to_string());
        }
    }
    for (key, value) in flag_overrides {
        if !config.apply(key.trim(), value)? {
            unknown.push(key.trim().to_string());
        }
    }
    if !unknown.is_empty() {
        return Err(ConfigError::UnknownKeys(unknown));
    }
    config.validate()?;
    Ok(config)
}
