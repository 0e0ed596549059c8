//! Scenario description and its `key = value` file format.
//!
//! One key per line, `#` starts a comment, blank lines are ignored. Keys are
//! the snake_case field names listed in [`KNOWN_KEYS`]; anything else is an
//! error. Only `protocol` is always required; `n_vehicles` is required for the
//! `batch` and `fixed` populations and `arrival_rate_per_s` for `flow`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::analytic::CaptureParam;
use crate::channel::{CaptureModel, PathLoss};
use crate::error::ConfigError;
use crate::protocol::{ProtocolRegistry, SlotMapPolicy, SlotTiming};

pub const KNOWN_KEYS: &[&str] = &[
    "protocol",
    "population",
    "n_vehicles",
    "arrival_rate_per_s",
    "speed_mps",
    "comm_range_m",
    "lateral_offset_m",
    "frame_length",
    "capture",
    "rho",
    "gamma_db",
    "sensitivity_dbm",
    "slot_map",
    "sync_duration_ms",
    "mini_slot_ms",
    "data_slot_ms",
    "probe_ms",
    "ack_ms",
    "iterations",
    "seed",
    "tx_power_dbm",
    "pathloss_exponent",
    "ref_loss_db",
    "shadow_sigma_db",
];

/// How vehicles enter the scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Population {
    /// `n` fresh vehicles in range at every iteration.
    Batch { n: u32 },
    /// `n` vehicles created once, then moving (or parked) until they leave.
    Fixed { n: u32 },
    /// Poisson arrivals at the upstream edge of the range.
    Flow { rate_per_s: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameLengthPolicy {
    Fixed(u16),
    /// `round(rho + (1 - rho) * E[N])`, at least 1.
    OptimalForExpectedN,
    /// `L = round(E[N])`, at least 1.
    EqualToN,
}

impl fmt::Display for FrameLengthPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrameLengthPolicy::Fixed(l) => write!(f, "fixed:{l}"),
            FrameLengthPolicy::OptimalForExpectedN => f.write_str("optimal"),
            FrameLengthPolicy::EqualToN => f.write_str("n"),
        }
    }
}

impl FromStr for FrameLengthPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "optimal" => Ok(FrameLengthPolicy::OptimalForExpectedN),
            "n" => Ok(FrameLengthPolicy::EqualToN),
            _ => {
                let num = s.strip_prefix("fixed:").unwrap_or(&s);
                match num.parse::<u16>() {
                    Ok(l) if l >= 1 => Ok(FrameLengthPolicy::Fixed(l)),
                    _ => Err("expected `optimal`, `n`, or `fixed:L` with 1 <= L <= 65535".into()),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaptureKind {
    Probabilistic,
    Sir,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub protocol: String,
    pub population: Population,
    pub speed_mps: (f64, f64),
    pub comm_range_m: f64,
    pub lateral_offset_m: f64,
    pub frame_length: FrameLengthPolicy,
    pub capture_kind: CaptureKind,
    pub rho: f64,
    pub gamma_db: f64,
    pub sensitivity_dbm: Option<f64>,
    pub slot_map: SlotMapPolicy,
    pub timing: SlotTiming,
    pub iterations: u64,
    pub seed: u64,
    pub tx_power_dbm: f64,
    pub pathloss: PathLoss,
    pub shadow_sigma_db: f64,
}

impl ScenarioConfig {
    /// Batch scenario with every other field at its default.
    pub fn batch(protocol: &str, n: u32) -> Self {
        ScenarioConfig {
            protocol: protocol.to_ascii_uppercase(),
            population: Population::Batch { n },
            speed_mps: (20.0, 20.0),
            comm_range_m: 100.0,
            lateral_offset_m: 5.0,
            frame_length: FrameLengthPolicy::OptimalForExpectedN,
            capture_kind: CaptureKind::Probabilistic,
            rho: 0.5,
            gamma_db: 3.0,
            sensitivity_dbm: None,
            slot_map: SlotMapPolicy::BusyDetect,
            timing: SlotTiming::default(),
            iterations: 5000,
            seed: 0,
            tx_power_dbm: 0.0,
            pathloss: PathLoss::default(),
            shadow_sigma_db: 4.0,
        }
    }

    pub fn capture(&self) -> Result<CaptureModel, ConfigError> {
        match self.capture_kind {
            CaptureKind::Probabilistic => CaptureParam::new(self.rho)
                .map(CaptureModel::Probabilistic)
                .map_err(|e| ConfigError::invalid("rho", &self.rho.to_string(), e.to_string())),
            CaptureKind::Sir => CaptureModel::sir(self.gamma_db, self.sensitivity_dbm)
                .map_err(|e| ConfigError::invalid("gamma_db", &self.gamma_db.to_string(), e.to_string())),
        }
    }

    /// Mean number of vehicles in range.
    pub fn expected_vehicles(&self) -> f64 {
        match self.population {
            Population::Batch { n } | Population::Fixed { n } => f64::from(n),
            Population::Flow { rate_per_s } => {
                let mean_speed = 0.5 * (self.speed_mps.0 + self.speed_mps.1);
                rate_per_s * 2.0 * self.comm_range_m / mean_speed
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, v: f64, why: &str| Err(ConfigError::invalid(key, &v.to_string(), why));
        if ProtocolRegistry::builtin().get(&self.protocol).is_err() {
            return Err(ConfigError::invalid(
                "protocol",
                &self.protocol,
                format!(
                    "known protocols: {}",
                    ProtocolRegistry::builtin().names().join(", ")
                ),
            ));
        }
        match self.population {
            Population::Batch { n } | Population::Fixed { n } if n == 0 => {
                return Err(ConfigError::invalid("n_vehicles", "0", "must be at least 1"));
            }
            Population::Flow { rate_per_s } if !(rate_per_s > 0.0 && rate_per_s.is_finite()) => {
                return bad("arrival_rate_per_s", rate_per_s, "must be positive");
            }
            Population::Flow { .. } if self.speed_mps.0 <= 0.0 => {
                return bad(
                    "speed_mps",
                    self.speed_mps.0,
                    "flow vehicles need a positive speed",
                );
            }
            _ => {}
        }
        let (lo, hi) = self.speed_mps;
        if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
            return Err(ConfigError::invalid(
                "speed_mps",
                &format!("{lo}..{hi}"),
                "need 0 <= min <= max",
            ));
        }
        if !(self.comm_range_m > 0.0 && self.comm_range_m.is_finite()) {
            return bad("comm_range_m", self.comm_range_m, "must be positive");
        }
        if !(self.lateral_offset_m > 0.0 && self.lateral_offset_m.is_finite()) {
            return bad("lateral_offset_m", self.lateral_offset_m, "must be positive");
        }
        self.capture()?;
        let t = &self.timing;
        for (key, v) in [
            ("sync_duration_ms", t.sync_ms),
            ("mini_slot_ms", t.mini_slot_ms),
            ("data_slot_ms", t.data_slot_ms),
            ("probe_ms", t.probe_ms),
            ("ack_ms", t.ack_ms),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(key, v, "durations must be positive");
            }
        }
        if t.mini_slot_ms >= t.data_slot_ms {
            return bad(
                "mini_slot_ms",
                t.mini_slot_ms,
                "must be shorter than data_slot_ms",
            );
        }
        if self.iterations == 0 {
            return Err(ConfigError::invalid("iterations", "0", "must be at least 1"));
        }
        if self.shadow_sigma_db.is_nan() || self.shadow_sigma_db < 0.0 {
            return bad("shadow_sigma_db", self.shadow_sigma_db, "must be non-negative");
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        Self::from_raw(&RawConfig::parse(text)?)
    }

    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let protocol = raw.get("protocol").ok_or(ConfigError::Missing("protocol"))?;
        let mut cfg = ScenarioConfig::batch(protocol, 1);
        let mut n_vehicles: Option<u32> = None;
        let mut rate: Option<f64> = None;
        let mut population = "batch".to_string();

        for (key, value) in raw.iter() {
            let v = value.as_str();
            match key.as_str() {
                "protocol" => cfg.protocol = v.to_ascii_uppercase(),
                "population" => population = v.to_ascii_lowercase(),
                "n_vehicles" => n_vehicles = Some(parse(key, v)?),
                "arrival_rate_per_s" => rate = Some(parse(key, v)?),
                "speed_mps" => cfg.speed_mps = parse_range(key, v)?,
                "comm_range_m" => cfg.comm_range_m = parse(key, v)?,
                "lateral_offset_m" => cfg.lateral_offset_m = parse(key, v)?,
                "frame_length" => {
                    cfg.frame_length = v.parse().map_err(|e: String| ConfigError::invalid(key, v, e))?
                }
                "capture" => {
                    cfg.capture_kind = match v.to_ascii_lowercase().as_str() {
                        "probabilistic" => CaptureKind::Probabilistic,
                        "sir" => CaptureKind::Sir,
                        _ => return Err(ConfigError::invalid(key, v, "expected `probabilistic` or `sir`")),
                    }
                }
                "rho" => cfg.rho = parse(key, v)?,
                "gamma_db" => cfg.gamma_db = parse(key, v)?,
                "sensitivity_dbm" => {
                    cfg.sensitivity_dbm = if v.eq_ignore_ascii_case("none") {
                        None
                    } else {
                        Some(parse(key, v)?)
                    }
                }
                "slot_map" => {
                    cfg.slot_map = v.parse().map_err(|e: String| ConfigError::invalid(key, v, e))?
                }
                "sync_duration_ms" => cfg.timing.sync_ms = parse(key, v)?,
                "mini_slot_ms" => cfg.timing.mini_slot_ms = parse(key, v)?,
                "data_slot_ms" => cfg.timing.data_slot_ms = parse(key, v)?,
                "probe_ms" => cfg.timing.probe_ms = parse(key, v)?,
                "ack_ms" => cfg.timing.ack_ms = parse(key, v)?,
                "iterations" => cfg.iterations = parse(key, v)?,
                "seed" => cfg.seed = parse(key, v)?,
                "tx_power_dbm" => cfg.tx_power_dbm = parse(key, v)?,
                "pathloss_exponent" => cfg.pathloss.exponent = parse(key, v)?,
                "ref_loss_db" => cfg.pathloss.ref_loss_db = parse(key, v)?,
                "shadow_sigma_db" => cfg.shadow_sigma_db = parse(key, v)?,
                other => return Err(ConfigError::UnknownKey(other.to_string())),
            }
        }

        cfg.population = match population.as_str() {
            "batch" => Population::Batch {
                n: n_vehicles.ok_or(ConfigError::Missing("n_vehicles"))?,
            },
            "fixed" => Population::Fixed {
                n: n_vehicles.ok_or(ConfigError::Missing("n_vehicles"))?,
            },
            "flow" => Population::Flow {
                rate_per_s: rate.ok_or(ConfigError::Missing("arrival_rate_per_s"))?,
            },
            _ => {
                return Err(ConfigError::invalid(
                    "population",
                    &population,
                    "expected `batch`, `fixed` or `flow`",
                ))
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e: T::Err| ConfigError::invalid(key, value, e.to_string()))
}

/// `v` or `lo..hi`.
fn parse_range(key: &str, value: &str) -> Result<(f64, f64), ConfigError> {
    match value.split_once("..") {
        Some((lo, hi)) => Ok((parse(key, lo)?, parse(key, hi)?)),
        None => {
            let v = parse(key, value)?;
            Ok((v, v))
        }
    }
}

/// Unvalidated key/value pairs, keyed by name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::default();
        for (idx, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: idx + 1,
                    text: line.to_string(),
                });
            };
            let key = key.trim();
            if key.is_empty() {
                return Err(ConfigError::Syntax {
                    line: idx + 1,
                    text: line.to_string(),
                });
            }
            if !KNOWN_KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey(key.to_string()));
            }
            if raw
                .entries
                .insert(key.to_string(), value.trim().to_string())
                .is_some()
            {
                return Err(ConfigError::Duplicate(key.to_string()));
            }
        }
        Ok(raw)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey(key.to_string()));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &String)> {
        self.entries.iter()
    }
}
