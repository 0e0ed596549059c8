//! Slot-level simulation and closed-form throughput models for
//! capture-assisted TDMA vehicle identification.

pub mod analytic;
pub mod bridge;
pub mod channel;
pub mod cli;
pub mod error;
pub mod metrics;
pub mod protocol;
pub mod sim;
