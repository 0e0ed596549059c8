//! Interchangeable identification protocols, looked up by name.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::RngCore;

use crate::channel::{resolve_slot, CaptureModel, OutcomeKind, PacketKind, SlotOutcome, TxAttempt};
use crate::error::ProtocolError;

use super::frame::Frame;
use super::roles::{DataStep, Transmit, VeState, VrState};
use super::slot_map::SlotMapPolicy;

/// Durations of the pieces of one iteration, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotTiming {
    pub sync_ms: f64,
    pub probe_ms: f64,
    pub mini_slot_ms: f64,
    pub data_slot_ms: f64,
    pub ack_ms: f64,
}

impl Default for SlotTiming {
    /// 250 kb/s radio arithmetic: dummies are a quarter of a data slot.
    fn default() -> Self {
        SlotTiming {
            sync_ms: 15.0,
            probe_ms: 4.0,
            mini_slot_ms: 1.0,
            data_slot_ms: 4.0,
            ack_ms: 1.0,
        }
    }
}

/// A vehicle taking part in the current iteration.
#[derive(Debug)]
pub struct Participant<'a> {
    pub sender_id: u32,
    pub rx_power_dbm: f64,
    pub state: &'a mut VeState,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundSetup {
    pub iteration: u64,
    pub frame_length: u16,
    pub nonce: u32,
    /// Capture model of the scenario; protocols may override it.
    pub capture: CaptureModel,
    pub slot_map_policy: SlotMapPolicy,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RoundReport {
    pub frame_length: u16,
    pub m_size: usize,
    pub mps_collisions: usize,
    /// Busy mini-slots that the slot map policy left out of `m`.
    pub mps_excluded: usize,
    pub dps_received: usize,
    pub dps_garbled: usize,
    pub dps_idle: usize,
    /// Data slots played in this iteration.
    pub data_slots: usize,
    /// Extra slots charged against throughput (the reservation probe).
    pub overhead_slots: usize,
    pub newly_recorded: Vec<String>,
    /// Sender ids acknowledged in this iteration.
    pub acked: Vec<u32>,
    pub malformed: usize,
}

pub trait Protocol: Send + Sync + fmt::Debug {
    /// Registry key, upper case.
    fn name(&self) -> &'static str;

    /// Capture model the channel applies for this protocol.
    fn capture(&self, configured: &CaptureModel) -> CaptureModel;

    fn run_round(
        &self,
        vr: &mut VrState,
        participants: &mut [Participant<'_>],
        setup: &RoundSetup,
        rng: &mut dyn RngCore,
    ) -> Result<RoundReport, ProtocolError>;

    fn elapsed_ms(&self, report: &RoundReport, timing: &SlotTiming) -> f64;
}

fn to_attempt(p: &Participant<'_>, tx: &Transmit, kind: PacketKind) -> Result<TxAttempt, ProtocolError> {
    Ok(TxAttempt {
        sender_id: p.sender_id,
        rx_power_dbm: p.rx_power_dbm,
        payload: tx
            .frame
            .encode()
            .expect("frames built from valid identities always encode"),
        kind,
    })
}

/// Every vehicle hears the VR's broadcast as bytes and decodes it itself.
fn broadcast(frame: &Frame) -> Frame {
    let bytes = frame.encode().expect("recorder frames always encode");
    Frame::decode(&bytes).expect("recorder frames always decode")
}

fn deliver_ack(ack: &Frame, participants: &mut [Participant<'_>], report: &mut RoundReport) {
    let ack = broadcast(ack);
    for p in participants.iter_mut() {
        if p.state.on_ack(&ack) {
            report.acked.push(p.sender_id);
        }
    }
}

fn tally_data(outcome: &SlotOutcome, step: DataStep, report: &mut RoundReport) {
    match outcome.kind() {
        OutcomeKind::Idle => report.dps_idle += 1,
        OutcomeKind::Received if !step.malformed => report.dps_received += 1,
        _ => report.dps_garbled += 1,
    }
    if step.malformed {
        report.malformed += 1;
    }
    if let Some(vrn) = step.newly_recorded {
        report.newly_recorded.push(vrn);
    }
}

/// Reservation round of dummies, then a compacted data round over the
/// mini-slots kept in `m`.
fn reservation_round(
    vr: &mut VrState,
    participants: &mut [Participant<'_>],
    setup: &RoundSetup,
    capture: &CaptureModel,
    rng: &mut dyn RngCore,
) -> Result<RoundReport, ProtocolError> {
    let l = setup.frame_length;
    let mut report = RoundReport {
        frame_length: l,
        overhead_slots: 1,
        ..RoundReport::default()
    };
    vr.begin_sync(setup.iteration);
    let probe = broadcast(&vr.begin_mps(setup.nonce, l));

    let mut mini: Vec<Vec<TxAttempt>> = vec![Vec::new(); usize::from(l)];
    for p in participants.iter_mut() {
        if let Some(tx) = p.state.ve_mps_action(&probe) {
            mini[usize::from(tx.slot)].push(to_attempt(p, &tx, PacketKind::Dummy)?);
        }
    }
    let outcomes: Vec<SlotOutcome> = mini.iter().map(|a| resolve_slot(a, capture, rng)).collect();
    report.mps_collisions = outcomes.iter().filter(|o| o.contenders() >= 2).count();
    let busy = outcomes.iter().filter(|o| o.is_busy()).count();

    let dps_probe = broadcast(&vr.finish_mps(&outcomes, setup.slot_map_policy)?);
    let m_size = vr.slot_map().len();
    report.m_size = m_size;
    report.data_slots = m_size;
    report.mps_excluded = busy - m_size;

    let mut data: Vec<Vec<TxAttempt>> = vec![Vec::new(); m_size];
    for p in participants.iter_mut() {
        if let Some(tx) = p.state.ve_dps_action(&dps_probe) {
            data[usize::from(tx.slot)].push(to_attempt(p, &tx, PacketKind::Data)?);
        }
    }
    for (t, attempts) in data.iter().enumerate() {
        let outcome = resolve_slot(attempts, capture, rng);
        let mut step = vr.dps_step(t as u16, &outcome)?;
        if let Some(ack) = step.ack.take() {
            deliver_ack(&ack, participants, &mut report);
        }
        tally_data(&outcome, step, &mut report);
    }
    vr.end_iteration();
    for p in participants.iter_mut() {
        p.state.end_iteration();
    }
    Ok(report)
}

fn reservation_elapsed(report: &RoundReport, timing: &SlotTiming) -> f64 {
    timing.sync_ms
        + timing.probe_ms
        + f64::from(report.frame_length) * timing.mini_slot_ms
        + timing.probe_ms
        + report.m_size as f64 * (timing.data_slot_ms + timing.ack_ms)
}

/// Synchronous-transmission reservation with capture in both rounds.
#[derive(Debug, Default, Clone, Copy)]
pub struct Vsync;

impl Protocol for Vsync {
    fn name(&self) -> &'static str {
        "VSYNC"
    }

    fn capture(&self, configured: &CaptureModel) -> CaptureModel {
        *configured
    }

    fn run_round(
        &self,
        vr: &mut VrState,
        participants: &mut [Participant<'_>],
        setup: &RoundSetup,
        rng: &mut dyn RngCore,
    ) -> Result<RoundReport, ProtocolError> {
        let capture = self.capture(&setup.capture);
        reservation_round(vr, participants, setup, &capture, rng)
    }

    fn elapsed_ms(&self, report: &RoundReport, timing: &SlotTiming) -> f64 {
        reservation_elapsed(report, timing)
    }
}

/// Same two rounds as [`Vsync`] over a contention channel: every collision
/// garbles.
#[derive(Debug, Default, Clone, Copy)]
pub struct Rtci;

impl Protocol for Rtci {
    fn name(&self) -> &'static str {
        "RTCI"
    }

    fn capture(&self, _configured: &CaptureModel) -> CaptureModel {
        CaptureModel::NO_CAPTURE
    }

    fn run_round(
        &self,
        vr: &mut VrState,
        participants: &mut [Participant<'_>],
        setup: &RoundSetup,
        rng: &mut dyn RngCore,
    ) -> Result<RoundReport, ProtocolError> {
        let capture = self.capture(&setup.capture);
        reservation_round(vr, participants, setup, &capture, rng)
    }

    fn elapsed_ms(&self, report: &RoundReport, timing: &SlotTiming) -> f64 {
        reservation_elapsed(report, timing)
    }
}

/// Dynamic frame slotted ALOHA: one probe, data straight into hashed slots,
/// no capture.
#[derive(Debug, Default, Clone, Copy)]
pub struct Dfsa;

impl Protocol for Dfsa {
    fn name(&self) -> &'static str {
        "DFSA"
    }

    fn capture(&self, _configured: &CaptureModel) -> CaptureModel {
        CaptureModel::NO_CAPTURE
    }

    fn run_round(
        &self,
        vr: &mut VrState,
        participants: &mut [Participant<'_>],
        setup: &RoundSetup,
        rng: &mut dyn RngCore,
    ) -> Result<RoundReport, ProtocolError> {
        let capture = self.capture(&setup.capture);
        let l = setup.frame_length;
        let mut report = RoundReport {
            frame_length: l,
            data_slots: usize::from(l),
            ..RoundReport::default()
        };
        vr.begin_sync(setup.iteration);
        let probe = broadcast(&vr.begin_mps(setup.nonce, l));
        let mut slots: Vec<Vec<TxAttempt>> = vec![Vec::new(); usize::from(l)];
        for p in participants.iter_mut() {
            if let Some(tx) = p.state.aloha_action(&probe) {
                slots[usize::from(tx.slot)].push(to_attempt(p, &tx, PacketKind::Data)?);
            }
        }
        for (s, attempts) in slots.iter().enumerate() {
            let outcome = resolve_slot(attempts, &capture, rng);
            let mut step = vr.accept_data(s as u16, &outcome);
            if let Some(ack) = step.ack.take() {
                deliver_ack(&ack, participants, &mut report);
            }
            tally_data(&outcome, step, &mut report);
        }
        vr.end_iteration();
        for p in participants.iter_mut() {
            p.state.end_iteration();
        }
        Ok(report)
    }

    fn elapsed_ms(&self, report: &RoundReport, timing: &SlotTiming) -> f64 {
        timing.sync_ms
            + timing.probe_ms
            + f64::from(report.frame_length) * (timing.data_slot_ms + timing.ack_ms)
    }
}

/// Protocols by upper-case name.
#[derive(Clone, Default)]
pub struct ProtocolRegistry {
    entries: BTreeMap<String, Arc<dyn Protocol>>,
}

impl fmt::Debug for ProtocolRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.entries.keys()).finish()
    }
}

impl ProtocolRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(Vsync));
        r.register(Arc::new(Rtci));
        r.register(Arc::new(Dfsa));
        r
    }

    /// Adds or replaces the protocol registered under its name.
    pub fn register(&mut self, protocol: Arc<dyn Protocol>) {
        self.entries
            .insert(protocol.name().to_ascii_uppercase(), protocol);
    }

    /// Case-insensitive lookup.
    pub fn get(&self, name: &str) -> Result<Arc<dyn Protocol>, ProtocolError> {
        self.entries
            .get(&name.to_ascii_uppercase())
            .cloned()
            .ok_or_else(|| ProtocolError::Unknown(name.to_string(), self.names().join(", ")))
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }
}
