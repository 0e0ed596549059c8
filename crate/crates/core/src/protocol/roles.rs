//! Recorder and vehicle state machines.

use std::collections::HashSet;

use crate::channel::SlotOutcome;
use crate::error::ProtocolError;

use super::frame::Frame;
use super::hash::slot_of;
use super::identity::VehicleIdentity;
use super::slot_map::{build_slot_map, remap, SlotMap, SlotMapPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VrPhase {
    Sync,
    Mps,
    Dps,
    #[default]
    Idle,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DbEntry {
    pub vrn: String,
    pub y: u64,
    /// Iteration of the first detection.
    pub iteration: u64,
}

/// What a recorder did with one data slot.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DataStep {
    /// Registration number added to the database by this slot.
    pub newly_recorded: Option<String>,
    pub ack: Option<Frame>,
    /// A payload was received but did not decode as a data frame.
    pub malformed: bool,
}

#[derive(Debug, Clone, Default)]
pub struct VrState {
    phase: VrPhase,
    iteration: u64,
    nonce: u32,
    frame_length: u16,
    m: SlotMap,
    db: Vec<DbEntry>,
    seen: HashSet<String>,
}

impl VrState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn phase(&self) -> VrPhase {
        self.phase
    }

    pub fn slot_map(&self) -> &SlotMap {
        &self.m
    }

    pub fn db(&self) -> &[DbEntry] {
        &self.db
    }

    pub fn has_recorded(&self, vrn: &str) -> bool {
        self.seen.contains(vrn)
    }

    pub fn begin_sync(&mut self, iteration: u64) {
        self.iteration = iteration;
        self.phase = VrPhase::Sync;
    }

    /// Opens the reservation round and returns its probe.
    pub fn begin_mps(&mut self, nonce: u32, frame_length: u16) -> Frame {
        self.nonce = nonce;
        self.frame_length = frame_length;
        self.m = SlotMap::empty(frame_length);
        self.phase = VrPhase::Mps;
        Frame::ProbeMps { nonce, frame_length }
    }

    /// Closes the reservation round: builds `m` and returns the data-round
    /// probe that carries it.
    pub fn finish_mps(
        &mut self,
        outcomes: &[SlotOutcome],
        policy: SlotMapPolicy,
    ) -> Result<Frame, ProtocolError> {
        self.m = build_slot_map(outcomes, self.frame_length, policy)?;
        self.phase = VrPhase::Dps;
        Ok(Frame::ProbeDps {
            nonce: self.nonce,
            slot_map: self.m.clone(),
        })
    }

    /// Handles data slot `t` of the current data round.
    pub fn dps_step(&mut self, t: u16, outcome: &SlotOutcome) -> Result<DataStep, ProtocolError> {
        if usize::from(t) >= self.m.len() {
            return Err(ProtocolError::SlotOutOfRange {
                index: t,
                frame_length: self.m.len() as u16,
            });
        }
        Ok(self.accept_data(t, outcome))
    }

    /// Records a valid data frame and acknowledges it. Garbled or malformed
    /// slots change nothing.
    pub fn accept_data(&mut self, slot: u16, outcome: &SlotOutcome) -> DataStep {
        let Some(payload) = outcome.payload() else {
            return DataStep::default();
        };
        let Ok(Frame::Data { vrn, y }) = Frame::decode(payload) else {
            return DataStep {
                malformed: true,
                ..DataStep::default()
            };
        };
        let newly_recorded = if self.seen.insert(vrn.clone()) {
            self.db.push(DbEntry {
                vrn: vrn.clone(),
                y,
                iteration: self.iteration,
            });
            Some(vrn)
        } else {
            None
        };
        DataStep {
            newly_recorded,
            ack: Some(Frame::Ack { slot, y }),
            malformed: false,
        }
    }

    pub fn end_iteration(&mut self) {
        self.phase = VrPhase::Idle;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VePhase {
    #[default]
    Idle,
    Mps,
    Dps,
    /// Acknowledged; stays silent from now on.
    Done,
}

/// A frame to put on the air in a given slot of the current round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transmit {
    pub slot: u16,
    pub frame: Frame,
}

#[derive(Debug, Clone)]
pub struct VeState {
    identity: VehicleIdentity,
    phase: VePhase,
    nonce: Option<u32>,
    j: Option<u16>,
    t: Option<u16>,
    acked: bool,
    missed_probes: u32,
}

impl VeState {
    pub fn new(identity: VehicleIdentity) -> Self {
        VeState {
            identity,
            phase: VePhase::Idle,
            nonce: None,
            j: None,
            t: None,
            acked: false,
            missed_probes: 0,
        }
    }

    pub fn identity(&self) -> &VehicleIdentity {
        &self.identity
    }

    pub fn phase(&self) -> VePhase {
        self.phase
    }

    pub fn acked(&self) -> bool {
        self.acked
    }

    pub fn mps_slot(&self) -> Option<u16> {
        self.j
    }

    pub fn dps_slot(&self) -> Option<u16> {
        self.t
    }

    pub fn missed_probes(&self) -> u32 {
        self.missed_probes
    }

    /// Reservation round: a dummy at `slot_of(y, L, nonce)`.
    pub fn ve_mps_action(&mut self, probe: &Frame) -> Option<Transmit> {
        if self.acked {
            return None;
        }
        let Frame::ProbeMps { nonce, frame_length } = *probe else {
            self.missed_probes += 1;
            return None;
        };
        let j = slot_of(self.identity.y(), frame_length, nonce);
        self.nonce = Some(nonce);
        self.j = Some(j);
        self.t = None;
        self.phase = VePhase::Mps;
        Some(Transmit {
            slot: j,
            frame: Frame::dummy_for(&self.identity),
        })
    }

    /// Data round: the registration number at the rank of `j` in `m`, or
    /// silence when `j` did not make it into the map.
    pub fn ve_dps_action(&mut self, probe: &Frame) -> Option<Transmit> {
        if self.acked {
            return None;
        }
        let Frame::ProbeDps { nonce, slot_map } = probe else {
            self.missed_probes += 1;
            return None;
        };
        let (Some(own_nonce), Some(j)) = (self.nonce, self.j) else {
            self.missed_probes += 1;
            return None;
        };
        if own_nonce != *nonce {
            self.missed_probes += 1;
            return None;
        }
        self.phase = VePhase::Dps;
        self.t = remap(j, slot_map);
        self.t.map(|t| Transmit {
            slot: t,
            frame: Frame::data_for(&self.identity),
        })
    }

    /// Single-round frame slotted ALOHA: data straight at the hashed slot.
    pub fn aloha_action(&mut self, probe: &Frame) -> Option<Transmit> {
        if self.acked {
            return None;
        }
        let Frame::ProbeMps { nonce, frame_length } = *probe else {
            self.missed_probes += 1;
            return None;
        };
        let slot = slot_of(self.identity.y(), frame_length, nonce);
        self.nonce = Some(nonce);
        self.j = Some(slot);
        self.t = Some(slot);
        self.phase = VePhase::Dps;
        Some(Transmit {
            slot,
            frame: Frame::data_for(&self.identity),
        })
    }

    /// Accepts an acknowledgement addressed to this vehicle's data slot and
    /// identity. Returns whether it applied.
    pub fn on_ack(&mut self, ack: &Frame) -> bool {
        let Frame::Ack { slot, y } = *ack else {
            return false;
        };
        if self.acked || self.t != Some(slot) || y != self.identity.y() {
            return false;
        }
        self.acked = true;
        self.phase = VePhase::Done;
        true
    }

    pub fn end_iteration(&mut self) {
        if !self.acked {
            self.phase = VePhase::Idle;
        }
    }
}
