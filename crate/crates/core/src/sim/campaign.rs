//! Parameter sweeps over a base scenario.

use std::io::{self, Write};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use crate::error::{ConfigError, SimError};
use crate::metrics::{RunMetrics, METRICS_CSV_HEADER};

use super::config::{RawConfig, ScenarioConfig, KNOWN_KEYS};
use super::engine::run_scenario;

/// `key=v1,v2,...`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sweep {
    pub key: String,
    pub values: Vec<String>,
}

impl FromStr for Sweep {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (key, values) = s.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: 0,
            text: s.to_string(),
        })?;
        let key = key.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey(key));
        }
        let values: Vec<String> = values
            .split(',')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .map(String::from)
            .collect();
        if values.is_empty() {
            return Err(ConfigError::EmptySweep(key));
        }
        Ok(Sweep { key, values })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignPoint {
    pub index: usize,
    pub overrides: Vec<(String, String)>,
    pub config: ScenarioConfig,
}

/// Cartesian product of the sweeps, first sweep varying slowest. Point `i`
/// runs with seed `base_seed ^ i`.
#[derive(Debug, Clone)]
pub struct CampaignPlan {
    points: Vec<CampaignPoint>,
}

impl CampaignPlan {
    pub fn new(base: &RawConfig, sweeps: &[Sweep]) -> Result<Self, ConfigError> {
        if sweeps.is_empty() {
            return Err(ConfigError::EmptyGrid);
        }
        for (i, s) in sweeps.iter().enumerate() {
            if !KNOWN_KEYS.contains(&s.key.as_str()) {
                return Err(ConfigError::UnknownKey(s.key.clone()));
            }
            if s.values.is_empty() {
                return Err(ConfigError::EmptySweep(s.key.clone()));
            }
            if sweeps[..i].iter().any(|p| p.key == s.key) {
                return Err(ConfigError::Duplicate(s.key.clone()));
            }
        }
        let total: usize = sweeps.iter().map(|s| s.values.len()).product();
        let mut points = Vec::with_capacity(total);
        for index in 0..total {
            let mut rem = index;
            let mut overrides = vec![(String::new(), String::new()); sweeps.len()];
            for (k, s) in sweeps.iter().enumerate().rev() {
                let n = s.values.len();
                overrides[k] = (s.key.clone(), s.values[rem % n].clone());
                rem /= n;
            }
            let mut raw = base.clone();
            for (key, value) in &overrides {
                raw.set(key, value)?;
            }
            let mut config = ScenarioConfig::from_raw(&raw)?;
            config.seed ^= index as u64;
            points.push(CampaignPoint {
                index,
                overrides,
                config,
            });
        }
        Ok(CampaignPlan { points })
    }

    pub fn points(&self) -> &[CampaignPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn run_point(point: &CampaignPoint) -> Result<RunMetrics, SimError> {
    Ok(run_scenario(&point.config)?.metrics)
}

/// Runs every point on up to `jobs` threads. Rows come back in grid order
/// whatever the scheduling.
pub fn run_campaign(plan: &CampaignPlan, jobs: usize) -> Result<Vec<RunMetrics>, SimError> {
    let n = plan.len();
    let slots: Mutex<Vec<Option<Result<RunMetrics, SimError>>>> = Mutex::new((0..n).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = jobs.clamp(1, n.max(1));
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let result = run_point(&plan.points[i]);
                slots.lock().expect("no worker panics while holding the lock")[i] = Some(result);
            });
        }
    });
    slots
        .into_inner()
        .expect("workers joined")
        .into_iter()
        .map(|r| r.expect("every point ran"))
        .collect()
}

pub fn write_campaign_csv<W: Write>(rows: &[RunMetrics], mut out: W) -> io::Result<()> {
    writeln!(out, "{METRICS_CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}
