use std::collections::HashSet;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::analytic::CaptureParam;
use crate::channel::{rx_power, CaptureModel};
use crate::error::SimError;
use crate::metrics::{self, AccuracySample, RunMetrics};
use crate::protocol::{Participant, Protocol, ProtocolRegistry, RoundSetup, VehicleIdentity, VrState};

use super::config::{FrameLengthPolicy, Population, ScenarioConfig};
use super::log::IterationLog;
use super::world::World;

/// Frame length a scenario runs with, given the capture the protocol applies.
pub fn resolve_frame_length(config: &ScenarioConfig, capture: &CaptureModel) -> u16 {
    let expected_n = config.expected_vehicles();
    let real = match config.frame_length {
        FrameLengthPolicy::Fixed(l) => return l,
        FrameLengthPolicy::EqualToN => expected_n,
        FrameLengthPolicy::OptimalForExpectedN => {
            let rho = capture.rho().map_or(0.0, CaptureParam::value);
            rho + (1.0 - rho) * expected_n
        }
    };
    real.round().clamp(1.0, f64::from(u16::MAX)) as u16
}

#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub logs: Vec<IterationLog>,
    pub samples: Vec<AccuracySample>,
    pub metrics: RunMetrics,
}

/// A single deterministic run: one recorder, one private random stream.
#[derive(Debug)]
pub struct Simulation {
    config: ScenarioConfig,
    protocol: Arc<dyn Protocol>,
    capture: CaptureModel,
    frame_length: u16,
    world: World,
    vr: VrState,
    rng: ChaCha8Rng,
    iteration: u64,
    used_ids: HashSet<u64>,
    logs: Vec<IterationLog>,
    samples: Vec<AccuracySample>,
    iterations_to_record: Vec<u32>,
    last_in_range: Vec<String>,
}

impl Simulation {
    pub fn new(config: ScenarioConfig) -> Result<Self, SimError> {
        Self::with_registry(config, &ProtocolRegistry::builtin())
    }

    pub fn with_registry(config: ScenarioConfig, registry: &ProtocolRegistry) -> Result<Self, SimError> {
        config.validate()?;
        let protocol = registry.get(&config.protocol)?;
        let capture = protocol.capture(&config.capture()?);
        let frame_length = resolve_frame_length(&config, &capture);
        let mut sim = Simulation {
            world: World::new(config.comm_range_m, config.lateral_offset_m),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            protocol,
            capture,
            frame_length,
            vr: VrState::new(),
            iteration: 0,
            used_ids: HashSet::new(),
            logs: Vec::new(),
            samples: Vec::new(),
            iterations_to_record: Vec::new(),
            last_in_range: Vec::new(),
        };
        sim.populate_initial()?;
        Ok(sim)
    }

    pub fn frame_length(&self) -> u16 {
        self.frame_length
    }

    pub fn capture(&self) -> &CaptureModel {
        &self.capture
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    /// Direct access for hand-built scenarios.
    pub fn world_mut(&mut self) -> &mut World {
        &mut self.world
    }

    pub fn recorder(&self) -> &VrState {
        &self.vr
    }

    pub fn logs(&self) -> &[IterationLog] {
        &self.logs
    }

    /// Registration numbers in range during the last iteration.
    pub fn last_in_range(&self) -> &[String] {
        &self.last_in_range
    }

    fn fresh_identity(&mut self) -> VehicleIdentity {
        loop {
            let id = VehicleIdentity::random(&mut self.rng);
            if self.used_ids.insert(id.y()) {
                return id;
            }
        }
    }

    fn random_speed(&mut self) -> f64 {
        let (lo, hi) = self.config.speed_mps;
        if hi > lo {
            self.rng.random_range(lo..=hi)
        } else {
            lo
        }
    }

    fn random_position(&mut self) -> f64 {
        let r = self.config.comm_range_m;
        self.world.vr_position_m + self.rng.random_range(-r..=r)
    }

    fn populate_initial(&mut self) -> Result<(), SimError> {
        let count = match self.config.population {
            Population::Batch { .. } => 0,
            Population::Fixed { n } => u64::from(n),
            Population::Flow { .. } => self.poisson(self.config.expected_vehicles()),
        };
        for _ in 0..count {
            let id = self.fresh_identity();
            let pos = self.random_position();
            let speed = self.random_speed();
            self.world.add_vehicle(id, pos, speed);
        }
        Ok(())
    }

    fn poisson(&mut self, mean: f64) -> u64 {
        if mean <= 0.0 {
            return 0;
        }
        let d = Poisson::new(mean).expect("positive finite mean");
        d.sample(&mut self.rng) as u64
    }

    /// Sync, reservation and data rounds for everyone in range, then the
    /// clock and the vehicles move on by the iteration's air time.
    pub fn run_iteration(&mut self) -> Result<IterationLog, SimError> {
        if let Population::Batch { n } = self.config.population {
            self.world.clear();
            for _ in 0..n {
                let id = self.fresh_identity();
                let pos = self.random_position();
                self.world.add_vehicle(id, pos, 0.0);
            }
        }

        let mask: Vec<bool> = self
            .world
            .vehicles()
            .iter()
            .map(|v| self.world.in_range(v))
            .collect();
        let mut powers = Vec::new();
        for (v, _) in self.world.vehicles().iter().zip(&mask).filter(|(_, &m)| m) {
            let d = self.world.distance_m(v);
            powers.push(rx_power(
                d,
                self.config.tx_power_dbm,
                self.config.pathloss,
                self.config.shadow_sigma_db,
                &mut self.rng,
            )?);
        }
        let setup = RoundSetup {
            iteration: self.iteration,
            frame_length: self.frame_length,
            nonce: self.rng.random(),
            capture: self.capture,
            slot_map_policy: self.config.slot_map,
        };

        let mut participants: Vec<Participant<'_>> = self
            .world
            .vehicles_mut()
            .iter_mut()
            .zip(&mask)
            .filter(|(_, &m)| m)
            .zip(powers)
            .map(|((v, _), p)| Participant {
                sender_id: v.id,
                rx_power_dbm: p,
                state: &mut v.state,
            })
            .collect();
        let report = self
            .protocol
            .run_round(&mut self.vr, &mut participants, &setup, &mut self.rng)?;
        drop(participants);

        self.last_in_range.clear();
        let mut detected = 0;
        for (v, _) in self
            .world
            .vehicles_mut()
            .iter_mut()
            .zip(&mask)
            .filter(|(_, &m)| m)
        {
            v.iterations_in_range += 1;
            let vrn = v.state.identity().vrn();
            if report.newly_recorded.iter().any(|r| r == vrn) {
                self.iterations_to_record.push(v.iterations_in_range);
            }
            if self.vr.has_recorded(vrn) {
                detected += 1;
            }
            self.last_in_range.push(vrn.to_string());
        }
        let n_in_range = self.last_in_range.len();
        self.samples.push(AccuracySample {
            in_range: n_in_range,
            detected,
        });

        let elapsed_ms = self.protocol.elapsed_ms(&report, &self.config.timing);
        let log = IterationLog {
            iter: self.iteration,
            n_in_range,
            m_size: report.m_size,
            mps_collisions: report.mps_collisions,
            dps_received: report.dps_received,
            dps_garbled: report.dps_garbled,
            dps_idle: report.dps_idle,
            new_records: report.newly_recorded.len(),
            elapsed_ms,
            data_slots: report.data_slots,
            overhead_slots: report.overhead_slots,
            mps_excluded: report.mps_excluded,
            newly_recorded: report.newly_recorded,
        };
        self.logs.push(log.clone());
        self.iteration += 1;
        self.world.clock_ms += elapsed_ms;
        self.advance(elapsed_ms / 1000.0);
        Ok(log)
    }

    fn advance(&mut self, dt_s: f64) {
        self.world.advance_mobility(dt_s);
        if let Population::Flow { rate_per_s } = self.config.population {
            let arrivals = self.poisson(rate_per_s * dt_s);
            let entry = self.world.vr_position_m - self.config.comm_range_m;
            for _ in 0..arrivals {
                let id = self.fresh_identity();
                let speed = self.random_speed();
                let since_arrival = self.rng.random_range(0.0..=dt_s);
                self.world.add_vehicle(id, entry + speed * since_arrival, speed);
            }
        }
    }

    pub fn metrics(&self) -> RunMetrics {
        let ratios = metrics::iteration_ratios(&self.samples);
        let mean_iters = (!self.iterations_to_record.is_empty()).then(|| {
            self.iterations_to_record
                .iter()
                .map(|&k| f64::from(k))
                .sum::<f64>()
                / self.iterations_to_record.len() as f64
        });
        RunMetrics {
            protocol: self.protocol.name().to_string(),
            n_vehicles: match self.config.population {
                Population::Batch { n } | Population::Fixed { n } => Some(n),
                Population::Flow { .. } => None,
            },
            frame_length: self.frame_length,
            rho: self.capture.rho().map(CaptureParam::value),
            accuracy: metrics::accuracy(&self.samples).ok(),
            accuracy_ci95: metrics::confidence_interval(&ratios, 0.95).ok(),
            empirical_throughput: metrics::empirical_throughput(&self.logs).ok(),
            mean_iterations_to_record: mean_iters,
            iterations_counted: ratios.len(),
        }
    }

    pub fn run(mut self) -> Result<ScenarioOutput, SimError> {
        while self.iteration < self.config.iterations {
            self.run_iteration()?;
        }
        let metrics = self.metrics();
        Ok(ScenarioOutput {
            logs: self.logs,
            samples: self.samples,
            metrics,
        })
    }
}

/// Runs `config.iterations` iterations with the built-in protocols.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioOutput, SimError> {
    Simulation::new(config.clone())?.run()
}
