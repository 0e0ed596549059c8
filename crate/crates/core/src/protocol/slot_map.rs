use std::str::FromStr;

use crate::channel::{OutcomeKind, SlotOutcome};
use crate::error::ProtocolError;

/// Mini-slots of one reservation round that will get a data slot, in
/// ascending order. The rank of a mini-slot in this list is its data slot.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SlotMap {
    frame_length: u16,
    used: Vec<u16>,
}

impl SlotMap {
    pub fn new(frame_length: u16, used: Vec<u16>) -> Result<Self, ProtocolError> {
        if let Some(&bad) = used.iter().find(|&&s| s >= frame_length) {
            return Err(ProtocolError::SlotOutOfRange {
                index: bad,
                frame_length,
            });
        }
        if used.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ProtocolError::NotIncreasing);
        }
        Ok(SlotMap { frame_length, used })
    }

    pub fn empty(frame_length: u16) -> Self {
        SlotMap {
            frame_length,
            used: Vec::new(),
        }
    }

    pub fn frame_length(&self) -> u16 {
        self.frame_length
    }

    pub fn used_slots(&self) -> &[u16] {
        &self.used
    }

    pub fn len(&self) -> usize {
        self.used.len()
    }

    pub fn is_empty(&self) -> bool {
        self.used.is_empty()
    }

    pub fn contains(&self, j: u16) -> bool {
        self.used.binary_search(&j).is_ok()
    }

    /// LSB-first bitmap of `frame_length` bits.
    pub fn to_bitmap(&self) -> Vec<u8> {
        let mut bits = vec![0u8; usize::from(self.frame_length).div_ceil(8)];
        for &s in &self.used {
            bits[usize::from(s) / 8] |= 1 << (s % 8);
        }
        bits
    }

    /// Inverse of [`SlotMap::to_bitmap`]. Returns the first set bit at or
    /// beyond `frame_length` as the error value.
    pub fn from_bitmap(frame_length: u16, bits: &[u8]) -> Result<Self, usize> {
        let mut used = Vec::new();
        for (byte_idx, &byte) in bits.iter().enumerate() {
            for bit in 0..8 {
                if byte & (1 << bit) != 0 {
                    let slot = byte_idx * 8 + bit;
                    if slot >= usize::from(frame_length) {
                        return Err(slot);
                    }
                    used.push(slot as u16);
                }
            }
        }
        Ok(SlotMap { frame_length, used })
    }
}

/// Data slot of mini-slot `j`: its 0-based rank in `m`, or `None` when `j`
/// did not make it into the map.
pub fn remap(j: u16, m: &SlotMap) -> Option<u16> {
    m.used.binary_search(&j).ok().map(|rank| rank as u16)
}

/// Which reservation-round outcomes earn a data slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SlotMapPolicy {
    /// Any non-idle mini-slot, decoded or not. This is what the reservation
    /// throughput model charges for.
    #[default]
    BusyDetect,
    /// Only mini-slots whose dummy packet was decoded with a valid CRC.
    CrcGate,
}

impl SlotMapPolicy {
    pub fn name(self) -> &'static str {
        match self {
            SlotMapPolicy::BusyDetect => "busy",
            SlotMapPolicy::CrcGate => "crc",
        }
    }

    fn admits(self, outcome: &SlotOutcome) -> bool {
        match self {
            SlotMapPolicy::BusyDetect => outcome.is_busy(),
            SlotMapPolicy::CrcGate => outcome.kind() == OutcomeKind::Received,
        }
    }
}

impl FromStr for SlotMapPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "busy" => Ok(SlotMapPolicy::BusyDetect),
            "crc" => Ok(SlotMapPolicy::CrcGate),
            other => Err(format!("expected `busy` or `crc`, got `{other}`")),
        }
    }
}

/// Slot map from one reservation round under `policy`.
pub fn build_slot_map(
    outcomes: &[SlotOutcome],
    frame_length: u16,
    policy: SlotMapPolicy,
) -> Result<SlotMap, ProtocolError> {
    if outcomes.len() != usize::from(frame_length) {
        return Err(ProtocolError::OutcomeCount {
            expected: usize::from(frame_length),
            got: outcomes.len(),
        });
    }
    let used = outcomes
        .iter()
        .enumerate()
        .filter(|(_, o)| policy.admits(o))
        .map(|(i, _)| i as u16)
        .collect();
    Ok(SlotMap { frame_length, used })
}

/// Slot map keeping only mini-slots with a valid reception.
pub fn vr_build_slot_map(outcomes: &[SlotOutcome], frame_length: u16) -> Result<SlotMap, ProtocolError> {
    build_slot_map(outcomes, frame_length, SlotMapPolicy::CrcGate)
}
