//! Accuracy, empirical throughput and confidence intervals over iteration logs.

use std::fmt::Write as _;

use crate::error::MetricsError;
use crate::sim::IterationLog;

/// In-range vehicles of one iteration and how many of them the recorder holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AccuracySample {
    pub in_range: usize,
    pub detected: usize,
}

impl AccuracySample {
    pub fn ratio(&self) -> Option<f64> {
        (self.in_range > 0).then(|| self.detected as f64 / self.in_range as f64)
    }
}

/// Per-iteration detection ratios; iterations without vehicles in range are
/// skipped.
pub fn iteration_ratios(samples: &[AccuracySample]) -> Vec<f64> {
    samples.iter().filter_map(AccuracySample::ratio).collect()
}

/// Mean per-iteration fraction of in-range vehicles the recorder identified.
pub fn accuracy(samples: &[AccuracySample]) -> Result<f64, MetricsError> {
    let ratios = iteration_ratios(samples);
    if ratios.is_empty() {
        return Err(MetricsError::NoData("no iteration had a vehicle in range"));
    }
    Ok(ratios.iter().sum::<f64>() / ratios.len() as f64)
}

/// Decoded data packets per charged slot. Each iteration is charged its data
/// slots plus its overhead slots (one probe slot for the reservation
/// protocols).
pub fn empirical_throughput(logs: &[IterationLog]) -> Result<f64, MetricsError> {
    let received: usize = logs.iter().map(|l| l.dps_received).sum();
    let charged: usize = logs.iter().map(IterationLog::charged_slots).sum();
    if charged == 0 {
        return Err(MetricsError::NoData("no slots charged"));
    }
    Ok(received as f64 / charged as f64)
}

/// Two-sided normal quantile for the supported confidence levels.
pub fn z_for_level(level: f64) -> Result<f64, MetricsError> {
    match (level * 1000.0).round() as u32 {
        900 => Ok(1.645),
        950 => Ok(1.96),
        990 => Ok(2.576),
        other => Err(MetricsError::UnsupportedLevel(other)),
    }
}

/// Normal-approximation half-width `z * s / sqrt(n)` with the `n - 1` sample
/// standard deviation.
pub fn confidence_interval(samples: &[f64], level: f64) -> Result<f64, MetricsError> {
    let z = z_for_level(level)?;
    if samples.len() < 2 {
        return Err(MetricsError::NoData("need at least two samples"));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(z * var.sqrt() / n.sqrt())
}

/// Aggregate of one scenario run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub protocol: String,
    /// Vehicles per iteration; `None` for Poisson flow.
    pub n_vehicles: Option<u32>,
    pub frame_length: u16,
    /// Capture probability the channel applied; `None` under the SIR model.
    pub rho: Option<f64>,
    pub accuracy: Option<f64>,
    pub accuracy_ci95: Option<f64>,
    pub empirical_throughput: Option<f64>,
    pub mean_iterations_to_record: Option<f64>,
    pub iterations_counted: usize,
}

pub const METRICS_CSV_HEADER: &str =
    "protocol,n,l,rho,accuracy,accuracy_ci95,throughput,mean_iters_to_record,iterations";

fn opt_f(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6}"))
}

impl RunMetrics {
    pub fn csv_row(&self) -> String {
        let mut s = String::new();
        write!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            self.protocol,
            self.n_vehicles
                .map_or_else(|| "NA".to_string(), |n| n.to_string()),
            self.frame_length,
            opt_f(self.rho),
            opt_f(self.accuracy),
            opt_f(self.accuracy_ci95),
            opt_f(self.empirical_throughput),
            opt_f(self.mean_iterations_to_record),
            self.iterations_counted
        )
        .unwrap();
        s
    }

    pub fn summary(&self) -> String {
        let pct = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{:.2}%", 100.0 * x));
        format!(
            "{} L={} rho={}: accuracy {} (+/- {}) over {} iterations, throughput {}, mean iterations to record {}",
            self.protocol,
            self.frame_length,
            self.rho.map_or_else(|| "sir".to_string(), |r| format!("{r}")),
            pct(self.accuracy),
            pct(self.accuracy_ci95),
            self.iterations_counted,
            self.empirical_throughput
                .map_or_else(|| "n/a".to_string(), |t| format!("{t:.4}")),
            self.mean_iterations_to_record
                .map_or_else(|| "n/a".to_string(), |m| format!("{m:.3}")),
        )
    }
}
