//! What the recorder decodes from one slot.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal};

use crate::analytic::CaptureParam;
use crate::error::ChannelError;

/// Receiver sensitivity of a CC2420-class radio.
pub const DEFAULT_SENSITIVITY_DBM: f64 = -94.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PacketKind {
    Dummy,
    Data,
    Probe,
    Ack,
}

/// One node's transmission as seen at the receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct TxAttempt {
    pub sender_id: u32,
    pub rx_power_dbm: f64,
    pub payload: Vec<u8>,
    pub kind: PacketKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutcomeKind {
    Idle,
    Received,
    Garbled,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SlotOutcome {
    Idle,
    Received {
        sender_id: u32,
        payload: Vec<u8>,
        contenders: usize,
    },
    Garbled {
        contenders: usize,
    },
}

impl SlotOutcome {
    pub fn kind(&self) -> OutcomeKind {
        match self {
            SlotOutcome::Idle => OutcomeKind::Idle,
            SlotOutcome::Received { .. } => OutcomeKind::Received,
            SlotOutcome::Garbled { .. } => OutcomeKind::Garbled,
        }
    }

    pub fn contenders(&self) -> usize {
        match self {
            SlotOutcome::Idle => 0,
            SlotOutcome::Received { contenders, .. } | SlotOutcome::Garbled { contenders } => *contenders,
        }
    }

    pub fn is_busy(&self) -> bool {
        !matches!(self, SlotOutcome::Idle)
    }

    pub fn payload(&self) -> Option<&[u8]> {
        match self {
            SlotOutcome::Received { payload, .. } => Some(payload),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CaptureModel {
    /// A collided slot yields its strongest packet with probability `rho`,
    /// regardless of the actual power spread.
    Probabilistic(CaptureParam),
    /// The strongest packet is decoded iff its power is at least `gamma`
    /// times the summed power of everything else in the slot.
    SirThreshold {
        gamma_db: f64,
        sensitivity_dbm: Option<f64>,
    },
}

impl CaptureModel {
    pub const NO_CAPTURE: CaptureModel = CaptureModel::Probabilistic(CaptureParam::NONE);

    pub fn probabilistic(rho: f64) -> Result<Self, crate::error::AnalyticError> {
        Ok(CaptureModel::Probabilistic(CaptureParam::new(rho)?))
    }

    pub fn sir(gamma_db: f64, sensitivity_dbm: Option<f64>) -> Result<Self, ChannelError> {
        if !(gamma_db > 0.0 && gamma_db.is_finite()) {
            return Err(ChannelError::InvalidGamma(gamma_db));
        }
        Ok(CaptureModel::SirThreshold {
            gamma_db,
            sensitivity_dbm,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            CaptureModel::Probabilistic(_) => "probabilistic",
            CaptureModel::SirThreshold { .. } => "sir",
        }
    }

    /// `rho` when the model is probabilistic.
    pub fn rho(&self) -> Option<CaptureParam> {
        match self {
            CaptureModel::Probabilistic(rho) => Some(*rho),
            CaptureModel::SirThreshold { .. } => None,
        }
    }
}

fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Index of the strongest attempt; equal powers go to the lowest sender id.
fn strongest(attempts: &[TxAttempt]) -> usize {
    let mut best = 0;
    for (i, a) in attempts.iter().enumerate().skip(1) {
        let b = &attempts[best];
        if a.rx_power_dbm > b.rx_power_dbm || (a.rx_power_dbm == b.rx_power_dbm && a.sender_id < b.sender_id)
        {
            best = i;
        }
    }
    best
}

/// Resolve one slot. The probabilistic model draws exactly one uniform
/// variate per collision and nothing otherwise; the SIR model never touches
/// `rng`.
pub fn resolve_slot<R: RngCore + ?Sized>(
    attempts: &[TxAttempt],
    model: &CaptureModel,
    rng: &mut R,
) -> SlotOutcome {
    let contenders = attempts.len();
    if contenders == 0 {
        return SlotOutcome::Idle;
    }
    let winner = strongest(attempts);
    let decoded = match *model {
        CaptureModel::Probabilistic(rho) => contenders == 1 || rng.random::<f64>() < rho.value(),
        CaptureModel::SirThreshold {
            gamma_db,
            sensitivity_dbm,
        } => {
            let s = attempts[winner].rx_power_dbm;
            let audible = sensitivity_dbm.is_none_or(|floor| s >= floor);
            let interference: f64 = attempts
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != winner)
                .map(|(_, a)| dbm_to_mw(a.rx_power_dbm))
                .sum();
            audible && dbm_to_mw(s) >= dbm_to_mw(gamma_db) * interference
        }
    };
    if decoded {
        let a = &attempts[winner];
        SlotOutcome::Received {
            sender_id: a.sender_id,
            payload: a.payload.clone(),
            contenders,
        }
    } else {
        SlotOutcome::Garbled { contenders }
    }
}

/// Log-distance path loss referenced to 1 m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLoss {
    pub exponent: f64,
    pub ref_loss_db: f64,
}

impl Default for PathLoss {
    fn default() -> Self {
        PathLoss {
            exponent: 3.0,
            ref_loss_db: 40.0,
        }
    }
}

/// Received power in dBm with optional log-normal shadowing. No randomness is
/// consumed when `shadow_sigma_db` is zero.
pub fn rx_power<R: RngCore + ?Sized>(
    distance_m: f64,
    tx_power_dbm: f64,
    pathloss: PathLoss,
    shadow_sigma_db: f64,
    rng: &mut R,
) -> Result<f64, ChannelError> {
    if distance_m.is_nan() || distance_m <= 0.0 {
        return Err(ChannelError::NonPositiveDistance(distance_m));
    }
    if shadow_sigma_db.is_nan() || shadow_sigma_db < 0.0 {
        return Err(ChannelError::InvalidShadowing(shadow_sigma_db));
    }
    let mean = tx_power_dbm - pathloss.ref_loss_db - 10.0 * pathloss.exponent * distance_m.log10();
    if shadow_sigma_db == 0.0 {
        return Ok(mean);
    }
    let shadow =
        Normal::new(0.0, shadow_sigma_db).map_err(|_| ChannelError::InvalidShadowing(shadow_sigma_db))?;
    Ok(mean - shadow.sample(rng))
}
