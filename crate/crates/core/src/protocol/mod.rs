//! Recorder / vehicle roles, wire frames and the protocol registry.

pub mod frame;
pub mod hash;
pub mod identity;
pub mod roles;
pub mod slot_map;
pub mod strategy;

pub use frame::Frame;
pub use hash::{mix64, slot_of};
pub use identity::{vrn_to_integer, VehicleIdentity, MAX_VRN_LEN};
pub use roles::{DataStep, DbEntry, Transmit, VePhase, VeState, VrPhase, VrState};
pub use slot_map::{build_slot_map, remap, vr_build_slot_map, SlotMap, SlotMapPolicy};
pub use strategy::{
    Dfsa, Participant, Protocol, ProtocolRegistry, RoundReport, RoundSetup, Rtci, SlotTiming, Vsync,
};
