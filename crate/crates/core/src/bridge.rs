//! Monte Carlo check of the closed-form throughputs: static single-frame
//! trials pushed through the real protocol and channel code.

use std::collections::HashSet;
use std::fmt;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytic::{self, CaptureParam};
use crate::channel::{resolve_slot, CaptureModel, PacketKind, SlotOutcome, TxAttempt};
use crate::error::{AnalyticError, ProtocolError, SimError};
use crate::protocol::{
    Participant, Protocol, ProtocolRegistry, RoundSetup, SlotMapPolicy, VeState, VehicleIdentity, VrState,
};

pub const MIN_TRIALS: u64 = 10_000;
/// Two-sided 99% normal quantile.
pub const Z_99: f64 = 2.576;

/// Running sums for a ratio estimator `sum(x) / sum(y)` over i.i.d. pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RatioAccumulator {
    n: u64,
    sx: f64,
    sy: f64,
    sxx: f64,
    syy: f64,
    sxy: f64,
}

impl RatioAccumulator {
    pub fn push(&mut self, x: f64, y: f64) {
        self.n += 1;
        self.sx += x;
        self.sy += y;
        self.sxx += x * x;
        self.syy += y * y;
        self.sxy += x * y;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn ratio(&self) -> Option<f64> {
        (self.sy > 0.0).then(|| self.sx / self.sy)
    }

    /// Delta-method half-width: `z * sd(x - R y) / (sqrt(n) * mean(y))`.
    pub fn half_width(&self, z: f64) -> Option<f64> {
        let r = self.ratio()?;
        if self.n < 2 {
            return None;
        }
        let n = self.n as f64;
        let ss = (self.sxx - 2.0 * r * self.sxy + r * r * self.syy).max(0.0);
        let var = ss / (n - 1.0);
        let mean_y = self.sy / n;
        Some(z * var.sqrt() / (n.sqrt() * mean_y))
    }
}

/// Closed form for a built-in protocol; `None` for anything else.
pub fn analytic_throughput(
    protocol: &str,
    n: u32,
    l: u32,
    rho: CaptureParam,
) -> Option<Result<f64, AnalyticError>> {
    match protocol.to_ascii_uppercase().as_str() {
        "DFSA" => Some(analytic::throughput_dfsa(n, l)),
        "RTCI" => Some(analytic::throughput_rtci(n, l)),
        "VSYNC" => Some(analytic::throughput_vsync(n, l, rho)),
        _ => None,
    }
}

fn unique_identities(n: u32, rng: &mut dyn RngCore) -> Vec<VehicleIdentity> {
    let mut seen = HashSet::with_capacity(n as usize);
    let mut out = Vec::with_capacity(n as usize);
    while out.len() < n as usize {
        let id = VehicleIdentity::random(rng);
        if seen.insert(id.y()) {
            out.push(id);
        }
    }
    out
}

/// `trials` independent frames of `n` fresh vehicles, each pair
/// `(successes, charged slots)` fed into the estimator.
pub fn run_protocol_trials(
    protocol: &dyn Protocol,
    n: u32,
    l: u16,
    configured: &CaptureModel,
    trials: u64,
    rng: &mut dyn RngCore,
) -> Result<RatioAccumulator, ProtocolError> {
    let capture = protocol.capture(configured);
    let mut acc = RatioAccumulator::default();
    for trial in 0..trials {
        let mut states: Vec<VeState> = unique_identities(n, rng).into_iter().map(VeState::new).collect();
        let mut participants: Vec<Participant<'_>> = states
            .iter_mut()
            .enumerate()
            .map(|(i, state)| Participant {
                sender_id: i as u32,
                rx_power_dbm: -60.0,
                state,
            })
            .collect();
        let setup = RoundSetup {
            iteration: trial,
            frame_length: l,
            nonce: rng.random(),
            capture,
            slot_map_policy: SlotMapPolicy::BusyDetect,
        };
        let mut vr = VrState::new();
        let report = protocol.run_round(&mut vr, &mut participants, &setup, rng)?;
        acc.push(
            report.dps_received as f64,
            (report.data_slots + report.overhead_slots) as f64,
        );
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BridgeLine {
    pub protocol: String,
    pub analytic: f64,
    pub empirical: f64,
    pub half_width: f64,
    pub pass: bool,
}

impl BridgeLine {
    /// Passes iff the analytic value lies inside the empirical 99% interval.
    pub fn judge(protocol: &str, analytic: f64, acc: &RatioAccumulator) -> Self {
        let empirical = acc.ratio().unwrap_or(f64::NAN);
        let half_width = acc.half_width(Z_99).unwrap_or(f64::NAN);
        // exact agreement must pass even when the interval has zero width
        let pass = (empirical - analytic).abs() <= half_width + 1e-12;
        BridgeLine {
            protocol: protocol.to_string(),
            analytic,
            empirical,
            half_width,
            pass,
        }
    }
}

impl fmt::Display for BridgeLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<6} analytic={:.6} empirical={:.6} ci99=±{:.6} {}",
            self.protocol,
            self.analytic,
            self.empirical,
            self.half_width,
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BridgeReport {
    pub n: u32,
    pub l: u16,
    pub rho: f64,
    pub trials: u64,
    pub lines: Vec<BridgeLine>,
}

impl BridgeReport {
    pub fn pass(&self) -> bool {
        self.lines.iter().all(|l| l.pass)
    }
}

/// Every registered protocol that has a closed form, one private stream each
/// (seed xor position in the registry).
pub fn validate(n: u32, l: u16, rho: f64, trials: u64, seed: u64) -> Result<BridgeReport, SimError> {
    let rho = CaptureParam::new(rho)?;
    if trials < MIN_TRIALS {
        return Err(crate::error::ConfigError::invalid(
            "trials",
            &trials.to_string(),
            "must be at least 10000",
        )
        .into());
    }
    if n == 0 {
        return Err(AnalyticError::ZeroVehicles.into());
    }
    if l == 0 {
        return Err(AnalyticError::ZeroFrameLength.into());
    }
    let registry = ProtocolRegistry::builtin();
    let configured = CaptureModel::Probabilistic(rho);
    let mut lines = Vec::new();
    for (i, name) in registry.names().into_iter().enumerate() {
        let Some(expected) = analytic_throughput(name, n, u32::from(l), rho) else {
            continue;
        };
        let expected = expected?;
        let protocol = registry.get(name)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ i as u64);
        let acc = run_protocol_trials(protocol.as_ref(), n, l, &configured, trials, &mut rng)?;
        lines.push(BridgeLine::judge(name, expected, &acc));
    }
    Ok(BridgeReport {
        n,
        l,
        rho: rho.value(),
        trials,
        lines,
    })
}

/// One bare slotted frame: `n` senders pick uniform slots, each slot
/// resolved by `model`. Returns the number of decoded slots.
pub fn simulate_frame(n: u32, l: u32, model: &CaptureModel, rng: &mut dyn RngCore) -> usize {
    let mut slots: Vec<Vec<TxAttempt>> = vec![Vec::new(); l as usize];
    for id in 0..n {
        let s = rng.random_range(0..l) as usize;
        slots[s].push(TxAttempt {
            sender_id: id,
            rx_power_dbm: -60.0,
            payload: Vec::new(),
            kind: PacketKind::Data,
        });
    }
    slots
        .iter()
        .filter(|a| matches!(resolve_slot(a, model, rng), SlotOutcome::Received { .. }))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::Vsync;

    #[test]
    fn ratio_estimator_basics() {
        let mut acc = RatioAccumulator::default();
        assert_eq!(acc.ratio(), None);
        for _ in 0..10 {
            acc.push(1.0, 2.0);
        }
        assert_eq!(acc.ratio(), Some(0.5));
        assert_eq!(acc.half_width(Z_99), Some(0.0));
    }

    #[test]
    fn ratio_half_width_matches_hand_computation() {
        // pairs (0,1),(1,1),(2,2),(1,2): R = 4/6
        let mut acc = RatioAccumulator::default();
        for (x, y) in [(0.0, 1.0), (1.0, 1.0), (2.0, 2.0), (1.0, 2.0)] {
            acc.push(x, y);
        }
        let r = 4.0 / 6.0;
        let d: Vec<f64> = [(0.0, 1.0), (1.0, 1.0), (2.0, 2.0), (1.0, 2.0)]
            .iter()
            .map(|(x, y)| x - r * y)
            .collect();
        let var = d.iter().map(|v| v * v).sum::<f64>() / 3.0;
        let expected = 1.96 * var.sqrt() / (2.0 * 1.5);
        assert!((acc.half_width(1.96).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn single_vehicle_single_slot_is_exact() {
        for rho in [0.0, 0.3, 1.0] {
            let r = validate(1, 1, rho, MIN_TRIALS, 1).unwrap();
            for line in &r.lines {
                let expected = if line.protocol == "DFSA" { 1.0 } else { 0.5 };
                assert_eq!(line.empirical, expected, "{line}");
                assert!(line.pass);
            }
        }
    }

    #[test]
    fn too_few_trials_rejected() {
        assert!(validate(10, 10, 0.5, MIN_TRIALS - 1, 1).is_err());
        assert!(validate(10, 10, 1.5, MIN_TRIALS, 1).is_err());
    }

    #[test]
    fn mismatched_formula_fails() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let half = CaptureModel::Probabilistic(CaptureParam::new(0.5).unwrap());
        let acc = run_protocol_trials(&Vsync, 10, 10, &half, 50_000, &mut rng).unwrap();
        let wrong = analytic::throughput_vsync(10, 10, CaptureParam::new(0.8).unwrap()).unwrap();
        assert!(!BridgeLine::judge("VSYNC", wrong, &acc).pass);
        let right = analytic::throughput_vsync(10, 10, CaptureParam::new(0.5).unwrap()).unwrap();
        assert!(BridgeLine::judge("VSYNC", right, &acc).pass);
    }

    #[test]
    fn bare_frame_matches_slot_throughput() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rho = CaptureParam::new(0.5).unwrap();
        let model = CaptureModel::Probabilistic(rho);
        let frames = 40_000;
        let mut acc = RatioAccumulator::default();
        for _ in 0..frames {
            acc.push(simulate_frame(10, 10, &model, &mut rng) as f64, 10.0);
        }
        let expected = analytic::throughput_per_slot(10, 10, rho).unwrap();
        let got = acc.ratio().unwrap();
        assert!(
            (got - expected).abs() <= acc.half_width(Z_99).unwrap(),
            "{got} vs {expected}"
        );
    }
}
