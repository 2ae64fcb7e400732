//! Run configuration: one flat JSON object with module-namespaced keys.
//!
//! Values are resolved as defaults, then the config file, then command-line
//! flags. Flags are converted to the same JSON values a file would hold, so
//! both paths share one parser. Unknown keys are rejected.

use serde_json::{Map, Value};

use crate::channel::FadingChannelSpec;
use crate::error::{Error, Result};
use crate::experiments::{EpsilonSource, REFERENCE_EPSILON_PEDESTRIAN, REFERENCE_EPSILON_VEHICULAR};
use crate::inner::{Crc16, InnerCodeSpec, InnerRate};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpsilonMode {
    Simulate,
    Reference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: u32,
    /// `None` means `round(N·(1 − ε))`.
    pub k: Option<usize>,
    pub epsilon: f64,
    pub n_list: Vec<u32>,
    pub epsilon_grid: Vec<f64>,
    pub exact: bool,

    pub trials: u64,
    pub blocks: u64,
    pub target_bler: f64,
    pub targets: Vec<f64>,
    /// `None` draws a seed from system entropy.
    pub seed: Option<u64>,
    /// 0 uses every available core.
    pub workers: usize,
    pub epsilon_mode: EpsilonMode,
    /// Overrides the reference values when `epsilon_mode` is reference.
    pub epsilons: Option<[f64; 3]>,

    pub inner: InnerCodeSpec,
    pub inner_rates: Vec<InnerRate>,

    pub channel: FadingChannelSpec,
    pub speeds_kmh: Vec<f64>,

    pub tradeoff_points: Vec<(f64, f64)>,

    pub output_path: String,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 4,
            k: None,
            epsilon: 0.054,
            n_list: vec![4, 8, 10, 12],
            epsilon_grid: vec![0.014, 0.035, 0.054, 0.063, 0.078, 0.093],
            exact: false,
            trials: 10_000,
            blocks: 20_000,
            target_bler: 0.1,
            targets: vec![0.1, 0.3, 0.5],
            seed: None,
            workers: 0,
            epsilon_mode: EpsilonMode::Simulate,
            epsilons: None,
            inner: InnerCodeSpec::default(),
            inner_rates: InnerRate::ALL.to_vec(),
            channel: FadingChannelSpec::default(),
            speeds_kmh: vec![5.0, 50.0],
            tradeoff_points: vec![(0.5, 0.84), (0.667, 0.76), (0.75, 0.72)],
            output_path: "-".into(),
            format: OutputFormat::Csv,
        }
    }
}

/// Type of a configuration value, used to parse command-line text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Int,
    Float,
    Bool,
    Text,
    IntList,
    FloatList,
    TextList,
    /// `inner:polar,inner:polar,...`
    PointList,
}

pub struct KeyInfo {
    pub key: &'static str,
    pub flag: &'static str,
    pub kind: Kind,
    pub help: &'static str,
}

pub const KEYS: &[KeyInfo] = &[
    KeyInfo { key: "polar.n", flag: "n", kind: Kind::Int, help: "Block length exponent, N = 2^n" },
    KeyInfo { key: "polar.k", flag: "k", kind: Kind::Int, help: "Number of information bits" },
    KeyInfo { key: "polar.epsilon", flag: "epsilon", kind: Kind::Float, help: "Erasure probability of the BEC" },
    KeyInfo { key: "polar.n_list", flag: "n-list", kind: Kind::IntList, help: "Comma-separated block length exponents" },
    KeyInfo { key: "polar.epsilon_grid", flag: "epsilon-grid", kind: Kind::FloatList, help: "Comma-separated erasure probabilities" },
    KeyInfo { key: "polar.exact", flag: "exact", kind: Kind::Bool, help: "Also enumerate the exact BLER (N <= 16)" },
    KeyInfo { key: "experiment.trials", flag: "trials", kind: Kind::Int, help: "Monte-Carlo trials per BLER estimate" },
    KeyInfo { key: "experiment.blocks", flag: "blocks", kind: Kind::Int, help: "Inner-chain blocks per erasure estimate" },
    KeyInfo { key: "experiment.target_bler", flag: "target-bler", kind: Kind::Float, help: "Target block error rate" },
    KeyInfo { key: "experiment.targets", flag: "targets", kind: Kind::FloatList, help: "Comma-separated target block error rates" },
    KeyInfo { key: "experiment.seed", flag: "seed", kind: Kind::Int, help: "Master random seed" },
    KeyInfo { key: "experiment.workers", flag: "workers", kind: Kind::Int, help: "Worker threads, 0 = all cores" },
    KeyInfo { key: "experiment.epsilon_source", flag: "epsilon-source", kind: Kind::Text, help: "Erasure probabilities: simulate or reference" },
    KeyInfo { key: "experiment.epsilons", flag: "epsilons", kind: Kind::FloatList, help: "Reference erasure probabilities for inner rates 1/2,2/3,3/4" },
    KeyInfo { key: "inner.rates", flag: "rates", kind: Kind::TextList, help: "Comma-separated inner code rates" },
    KeyInfo { key: "inner.constraint_length", flag: "constraint-length", kind: Kind::Int, help: "Convolutional code constraint length" },
    KeyInfo { key: "inner.polynomials", flag: "polynomials", kind: Kind::TextList, help: "Generator polynomials in octal" },
    KeyInfo { key: "inner.crc_polynomial", flag: "crc-polynomial", kind: Kind::Text, help: "CRC-16 generator in hex" },
    KeyInfo { key: "inner.crc_init", flag: "crc-init", kind: Kind::Text, help: "CRC-16 initial register in hex" },
    KeyInfo { key: "inner.interleaver_rows", flag: "interleaver-rows", kind: Kind::Int, help: "Block interleaver rows" },
    KeyInfo { key: "inner.interleaver_cols", flag: "interleaver-cols", kind: Kind::Int, help: "Block interleaver columns" },
    KeyInfo { key: "channel.speed_kmh", flag: "speed", kind: Kind::Float, help: "Mobile speed in km/h" },
    KeyInfo { key: "channel.speeds_kmh", flag: "speeds", kind: Kind::FloatList, help: "Comma-separated mobile speeds in km/h" },
    KeyInfo { key: "channel.carrier_hz", flag: "carrier-hz", kind: Kind::Float, help: "Carrier frequency in Hz" },
    KeyInfo { key: "channel.symbol_rate", flag: "symbol-rate", kind: Kind::Float, help: "Channel symbols per second" },
    KeyInfo { key: "channel.snr_db", flag: "snr-db", kind: Kind::Float, help: "Average Es/N0 in dB" },
    KeyInfo { key: "tradeoff.points", flag: "points", kind: Kind::PointList, help: "inner:polar rate pairs, comma-separated" },
    KeyInfo { key: "output.path", flag: "output", kind: Kind::Text, help: "Output file, - for stdout" },
    KeyInfo { key: "output.format", flag: "format", kind: Kind::Text, help: "Output format: csv or json" },
];

pub fn key_info(key: &str) -> Option<&'static KeyInfo> {
    KEYS.iter().find(|k| k.key == key)
}

fn config_err(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::InvalidParameter(format!("{key}: {msg}"))
}

fn as_u64(key: &str, v: &Value) -> Result<u64> {
    v.as_u64().ok_or_else(|| config_err(key, format!("expected a non-negative integer, got {v}")))
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    v.as_f64().ok_or_else(|| config_err(key, format!("expected a number, got {v}")))
}

fn as_str<'a>(key: &str, v: &'a Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| config_err(key, format!("expected a string, got {v}")))
}

fn as_array<'a>(key: &str, v: &'a Value) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| config_err(key, format!("expected an array, got {v}")))
}

fn parse_radix(key: &str, text: &str, radix: u32) -> Result<u32> {
    let digits = match radix {
        16 => text.trim_start_matches("0x").trim_start_matches("0X"),
        8 => text.trim_start_matches("0o"),
        _ => text,
    };
    u32::from_str_radix(digits, radix).map_err(|e| config_err(key, format!("{text:?}: {e}")))
}

fn narrow<T: TryFrom<u64>>(key: &str, v: u64) -> Result<T> {
    T::try_from(v).map_err(|_| config_err(key, format!("{v} out of range")))
}

impl RunConfig {
    /// Applies every key of a JSON object.
    pub fn apply_object(&mut self, object: &Map<String, Value>) -> Result<()> {
        for (key, value) in object {
            self.apply(key, value)?;
        }
        Ok(())
    }

    pub fn apply_json_text(&mut self, text: &str) -> Result<()> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| Error::InvalidParameter(format!("config file: {e}")))?;
        let object = value
            .as_object()
            .ok_or_else(|| Error::InvalidParameter("config file must hold a JSON object".into()))?;
        self.apply_object(object)
    }

    pub fn apply(&mut self, key: &str, v: &Value) -> Result<()> {
        match key {
            "polar.n" => self.n = narrow(key, as_u64(key, v)?)?,
            "polar.k" => self.k = Some(narrow(key, as_u64(key, v)?)?),
            "polar.epsilon" => self.epsilon = as_f64(key, v)?,
            "polar.n_list" => {
                self.n_list = as_array(key, v)?
                    .iter()
                    .map(|x| as_u64(key, x).and_then(|n| narrow(key, n)))
                    .collect::<Result<_>>()?
            }
            "polar.epsilon_grid" => {
                self.epsilon_grid = as_array(key, v)?.iter().map(|x| as_f64(key, x)).collect::<Result<_>>()?
            }
            "polar.exact" => {
                self.exact = v.as_bool().ok_or_else(|| config_err(key, "expected a boolean"))?
            }
            "experiment.trials" => self.trials = as_u64(key, v)?,
            "experiment.blocks" => self.blocks = as_u64(key, v)?,
            "experiment.target_bler" => self.target_bler = as_f64(key, v)?,
            "experiment.targets" => {
                self.targets = as_array(key, v)?.iter().map(|x| as_f64(key, x)).collect::<Result<_>>()?
            }
            "experiment.seed" => self.seed = Some(as_u64(key, v)?),
            "experiment.workers" => self.workers = narrow(key, as_u64(key, v)?)?,
            "experiment.epsilon_source" => {
                self.epsilon_mode = match as_str(key, v)? {
                    "simulate" => EpsilonMode::Simulate,
                    "reference" => EpsilonMode::Reference,
                    other => return Err(config_err(key, format!("{other:?} is not simulate or reference"))),
                }
            }
            "experiment.epsilons" => {
                let values: Vec<f64> = as_array(key, v)?.iter().map(|x| as_f64(key, x)).collect::<Result<_>>()?;
                let arr: [f64; 3] = values
                    .try_into()
                    .map_err(|_| config_err(key, "expected exactly three values"))?;
                self.epsilons = Some(arr);
            }
            "inner.rates" => {
                self.inner_rates = as_array(key, v)?
                    .iter()
                    .map(|x| match x {
                        Value::String(s) => s.parse(),
                        Value::Number(n) => n.to_string().parse(),
                        other => Err(config_err(key, format!("bad rate {other}"))),
                    })
                    .collect::<Result<_>>()?
            }
            "inner.constraint_length" => self.inner.constraint_length = narrow(key, as_u64(key, v)?)?,
            "inner.polynomials" => {
                let polys: Vec<u32> = as_array(key, v)?
                    .iter()
                    .map(|x| parse_radix(key, as_str(key, x)?, 8))
                    .collect::<Result<_>>()?;
                self.inner.polynomials = polys
                    .try_into()
                    .map_err(|_| config_err(key, "expected exactly two polynomials"))?;
            }
            "inner.crc_polynomial" => {
                self.inner.crc = Crc16 {
                    polynomial: narrow(key, u64::from(parse_radix(key, as_str(key, v)?, 16)?))?,
                    ..self.inner.crc
                }
            }
            "inner.crc_init" => {
                self.inner.crc = Crc16 {
                    init: narrow(key, u64::from(parse_radix(key, as_str(key, v)?, 16)?))?,
                    ..self.inner.crc
                }
            }
            "inner.interleaver_rows" => self.inner.interleaver_rows = narrow(key, as_u64(key, v)?)?,
            "inner.interleaver_cols" => self.inner.interleaver_cols = narrow(key, as_u64(key, v)?)?,
            "channel.speed_kmh" => self.channel.speed_kmh = as_f64(key, v)?,
            "channel.speeds_kmh" => {
                self.speeds_kmh = as_array(key, v)?.iter().map(|x| as_f64(key, x)).collect::<Result<_>>()?
            }
            "channel.carrier_hz" => self.channel.carrier_hz = as_f64(key, v)?,
            "channel.symbol_rate" => self.channel.symbol_rate = as_f64(key, v)?,
            "channel.snr_db" => self.channel.snr_db = as_f64(key, v)?,
            "tradeoff.points" => {
                self.tradeoff_points = as_array(key, v)?
                    .iter()
                    .map(|p| {
                        let pair = as_array(key, p)?;
                        match pair.as_slice() {
                            [a, b] => Ok((as_f64(key, a)?, as_f64(key, b)?)),
                            _ => Err(config_err(key, "each point is [inner_rate, polar_rate]")),
                        }
                    })
                    .collect::<Result<_>>()?
            }
            "output.path" => self.output_path = as_str(key, v)?.to_string(),
            "output.format" => {
                self.format = match as_str(key, v)? {
                    "csv" => OutputFormat::Csv,
                    "json" => OutputFormat::Json,
                    other => return Err(config_err(key, format!("{other:?} is not csv or json"))),
                }
            }
            _ => return Err(Error::InvalidParameter(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Dimension to use: the configured `K`, or `round(N·(1 − ε))` clamped
    /// to `1..=N`.
    pub fn resolved_k(&self) -> usize {
        let len = 1usize << self.n;
        self.k.unwrap_or_else(|| {
            ((len as f64 * (1.0 - self.epsilon)).round() as usize).clamp(1, len)
        })
    }

    pub fn epsilon_source(&self) -> Result<EpsilonSource> {
        match self.epsilon_mode {
            EpsilonMode::Simulate => Ok(EpsilonSource::Simulate),
            EpsilonMode::Reference => {
                if let Some(values) = self.epsilons {
                    return Ok(EpsilonSource::Fixed(values));
                }
                match self.channel.speed_kmh {
                    5.0 => Ok(EpsilonSource::Fixed(REFERENCE_EPSILON_PEDESTRIAN)),
                    50.0 => Ok(EpsilonSource::Fixed(REFERENCE_EPSILON_VEHICULAR)),
                    s => Err(Error::InvalidParameter(format!(
                        "no reference erasure probabilities for {s} km/h; set experiment.epsilons"
                    ))),
                }
            }
        }
    }

    /// Human-readable default of `key`, as shown in `--help`.
    pub fn display_default(key: &str) -> String {
        let d = RunConfig::default();
        let floats = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        match key {
            "polar.n" => d.n.to_string(),
            "polar.k" => "round(N*(1-epsilon))".into(),
            "polar.epsilon" => d.epsilon.to_string(),
            "polar.n_list" => d.n_list.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
            "polar.epsilon_grid" => floats(&d.epsilon_grid),
            "polar.exact" => d.exact.to_string(),
            "experiment.trials" => d.trials.to_string(),
            "experiment.blocks" => d.blocks.to_string(),
            "experiment.target_bler" => d.target_bler.to_string(),
            "experiment.targets" => floats(&d.targets),
            "experiment.seed" => "drawn from system entropy".into(),
            "experiment.workers" => d.workers.to_string(),
            "experiment.epsilon_source" => "simulate".into(),
            "experiment.epsilons" => "reference values for the configured speed".into(),
            "inner.rates" => d.inner_rates.iter().map(|r| r.label()).collect::<Vec<_>>().join(","),
            "inner.constraint_length" => d.inner.constraint_length.to_string(),
            "inner.polynomials" => d.inner.polynomials.iter().map(|p| format!("{p:o}")).collect::<Vec<_>>().join(","),
            "inner.crc_polynomial" => format!("0x{:04X}", d.inner.crc.polynomial),
            "inner.crc_init" => format!("0x{:04X}", d.inner.crc.init),
            "inner.interleaver_rows" => d.inner.interleaver_rows.to_string(),
            "inner.interleaver_cols" => d.inner.interleaver_cols.to_string(),
            "channel.speed_kmh" => d.channel.speed_kmh.to_string(),
            "channel.speeds_kmh" => floats(&d.speeds_kmh),
            "channel.carrier_hz" => d.channel.carrier_hz.to_string(),
            "channel.symbol_rate" => d.channel.symbol_rate.to_string(),
            "channel.snr_db" => d.channel.snr_db.to_string(),
            "tradeoff.points" => d
                .tradeoff_points
                .iter()
                .map(|(a, b)| format!("{a}:{b}"))
                .collect::<Vec<_>>()
                .join(","),
            "output.path" => d.output_path,
            "output.format" => "csv".into(),
            _ => String::new(),
        }
    }
}

/// Converts command-line text for `info` into the JSON value a config file
/// would carry.
pub fn flag_value(info: &KeyInfo, text: &str) -> Result<Value> {
    let key = info.key;
    let split = || text.split(',').map(str::trim).filter(|s| !s.is_empty());
    let int = |s: &str| {
        s.parse::<u64>()
            .map(Value::from)
            .map_err(|e| config_err(key, format!("{s:?}: {e}")))
    };
    let float = |s: &str| {
        s.parse::<f64>()
            .map(Value::from)
            .map_err(|e| config_err(key, format!("{s:?}: {e}")))
    };
    Ok(match info.kind {
        Kind::Int => int(text)?,
        Kind::Float => float(text)?,
        Kind::Bool => Value::Bool(
            text.parse::<bool>()
                .map_err(|e| config_err(key, format!("{text:?}: {e}")))?,
        ),
        Kind::Text => Value::from(text),
        Kind::IntList => Value::Array(split().map(int).collect::<Result<_>>()?),
        Kind::FloatList => Value::Array(split().map(float).collect::<Result<_>>()?),
        Kind::TextList => Value::Array(split().map(Value::from).collect()),
        Kind::PointList => Value::Array(
            split()
                .map(|pair| {
                    let (a, b) = pair
                        .split_once(':')
                        .ok_or_else(|| config_err(key, format!("{pair:?} is not inner:polar")))?;
                    Ok(Value::Array(vec![float(a)?, float(b)?]))
                })
                .collect::<Result<_>>()?,
        ),
    })
}
