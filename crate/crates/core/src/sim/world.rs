//! One-dimensional road past a single recorder.

use crate::protocol::{VeState, VehicleIdentity};

#[derive(Debug, Clone)]
pub struct Vehicle {
    pub id: u32,
    pub position_m: f64,
    pub speed_mps: f64,
    pub state: VeState,
    /// Iterations this vehicle has spent in range so far.
    pub iterations_in_range: u32,
}

impl Vehicle {
    pub fn vrn(&self) -> &str {
        self.state.identity().vrn()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MobilityUpdate {
    pub in_range: Vec<u32>,
    pub retired: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct World {
    pub vr_position_m: f64,
    pub comm_range_m: f64,
    pub lateral_offset_m: f64,
    pub clock_ms: f64,
    vehicles: Vec<Vehicle>,
    next_id: u32,
    passed: u64,
}

impl World {
    pub fn new(comm_range_m: f64, lateral_offset_m: f64) -> Self {
        World {
            vr_position_m: 0.0,
            comm_range_m,
            lateral_offset_m,
            clock_ms: 0.0,
            vehicles: Vec::new(),
            next_id: 0,
            passed: 0,
        }
    }

    pub fn add_vehicle(&mut self, identity: VehicleIdentity, position_m: f64, speed_mps: f64) -> u32 {
        let id = self.next_id;
        self.next_id += 1;
        self.vehicles.push(Vehicle {
            id,
            position_m,
            speed_mps,
            state: VeState::new(identity),
            iterations_in_range: 0,
        });
        id
    }

    pub fn vehicles(&self) -> &[Vehicle] {
        &self.vehicles
    }

    pub fn vehicles_mut(&mut self) -> &mut [Vehicle] {
        &mut self.vehicles
    }

    pub fn vehicle(&self, id: u32) -> Option<&Vehicle> {
        self.vehicles.iter().find(|v| v.id == id)
    }

    /// Drops every vehicle without counting it as passed.
    pub fn clear(&mut self) {
        self.vehicles.clear();
    }

    /// Vehicles that left the range downstream.
    pub fn passed(&self) -> u64 {
        self.passed
    }

    pub fn in_range(&self, v: &Vehicle) -> bool {
        (v.position_m - self.vr_position_m).abs() <= self.comm_range_m
    }

    /// Straight-line distance to the recorder, never below the lateral offset.
    pub fn distance_m(&self, v: &Vehicle) -> f64 {
        (v.position_m - self.vr_position_m).hypot(self.lateral_offset_m)
    }

    /// Moves every vehicle by `speed * dt_s`, retires the ones past the
    /// downstream edge of the range, and reports who is in range afterwards.
    pub fn advance_mobility(&mut self, dt_s: f64) -> MobilityUpdate {
        debug_assert!(dt_s >= 0.0);
        for v in &mut self.vehicles {
            v.position_m += v.speed_mps * dt_s;
        }
        let exit = self.vr_position_m + self.comm_range_m;
        let mut update = MobilityUpdate::default();
        self.vehicles.retain(|v| {
            let gone = v.position_m > exit;
            if gone {
                update.retired.push(v.id);
            }
            !gone
        });
        self.passed += update.retired.len() as u64;
        update.in_range = self
            .vehicles
            .iter()
            .filter(|v| self.in_range(v))
            .map(|v| v.id)
            .collect();
        update
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn world_with(pos: f64, speed: f64) -> (World, u32) {
        let mut w = World::new(100.0, 5.0);
        let id = w.add_vehicle(VehicleIdentity::new("KA01AB1234").unwrap(), pos, speed);
        (w, id)
    }

    #[test]
    fn zero_step_changes_nothing() {
        let (mut w, id) = world_with(-30.0, 20.0);
        let up = w.advance_mobility(0.0);
        assert_eq!(w.vehicle(id).unwrap().position_m, -30.0);
        assert_eq!(up.in_range, vec![id]);
        assert!(up.retired.is_empty());
    }

    #[test]
    fn dwell_is_two_range_over_speed() {
        let (mut w, id) = world_with(-100.0, 20.0);
        let dt = 0.05;
        let mut in_range_s = 0.0;
        let mut steps = 0;
        assert!(w.in_range(w.vehicle(id).unwrap()));
        while w.vehicle(id).is_some() {
            let up = w.advance_mobility(dt);
            steps += 1;
            if up.in_range.contains(&id) {
                in_range_s += dt;
            }
            assert!(steps < 1000);
        }
        // inclusive at both edges: the last in-range sample lands on x = +100
        assert!((in_range_s - 10.0).abs() <= dt + 1e-9, "{in_range_s}");
        assert_eq!(w.passed(), 1);
    }

    #[test]
    fn retired_vehicle_is_gone() {
        let (mut w, id) = world_with(99.0, 20.0);
        let up = w.advance_mobility(1.0);
        assert_eq!(up.retired, vec![id]);
        assert!(w.vehicle(id).is_none());
        assert!(w.vehicles().is_empty());
    }

    #[test]
    fn parked_vehicle_stays() {
        let (mut w, id) = world_with(10.0, 0.0);
        for _ in 0..100 {
            assert_eq!(w.advance_mobility(5.0).in_range, vec![id]);
        }
    }

    #[test]
    fn distance_includes_lateral_offset() {
        let (w, id) = world_with(0.0, 0.0);
        assert_eq!(w.distance_m(w.vehicle(id).unwrap()), 5.0);
    }
}
