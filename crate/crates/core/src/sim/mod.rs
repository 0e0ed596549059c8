//! Discrete-event scenario runner: sync, reservation and data rounds per
//! iteration, vehicles moving past a single recorder.

pub mod campaign;
pub mod config;
pub mod engine;
pub mod log;
pub mod world;

pub use campaign::{run_campaign, run_point, write_campaign_csv, CampaignPlan, CampaignPoint, Sweep};
pub use config::{CaptureKind, FrameLengthPolicy, Population, RawConfig, ScenarioConfig, KNOWN_KEYS};
pub use engine::{resolve_frame_length, run_scenario, ScenarioOutput, Simulation};
pub use log::{write_iteration_csv, IterationLog, ITERATION_CSV_HEADER};
pub use world::{MobilityUpdate, Vehicle, World};
