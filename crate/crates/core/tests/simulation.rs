use std::collections::HashSet;

use proptest::prelude::*;

use vsync::analytic::{self, CaptureParam};
use vsync::bridge::{RatioAccumulator, Z_99};
use vsync::metrics;
use vsync::sim::{run_scenario, FrameLengthPolicy, Population, ScenarioConfig, Simulation};

fn batch(protocol: &str, n: u32, l: u16, iterations: u64, seed: u64) -> ScenarioConfig {
    let mut c = ScenarioConfig::batch(protocol, n);
    c.frame_length = FrameLengthPolicy::Fixed(l);
    c.iterations = iterations;
    c.seed = seed;
    c
}

/// Successes per charged slot over many independent batch iterations,
/// against the closed form.
fn throughput_matches(protocol: &str, rho: f64, expected: f64) {
    let mut c = batch(protocol, 10, 10, 100_000, 31);
    c.rho = rho;
    let out = run_scenario(&c).unwrap();
    let mut acc = RatioAccumulator::default();
    for l in &out.logs {
        acc.push(l.dps_received as f64, l.charged_slots() as f64);
    }
    let got = out.metrics.empirical_throughput.unwrap();
    assert_eq!(Some(got), acc.ratio());
    let hw = acc.half_width(Z_99).unwrap();
    assert!(
        (got - expected).abs() <= hw,
        "{protocol} rho={rho}: {got} vs {expected} ± {hw}"
    );
}

#[test]
fn batch_throughput_vsync_half_capture() {
    let expected = analytic::throughput_vsync(10, 10, CaptureParam::new(0.5).unwrap()).unwrap();
    throughput_matches("VSYNC", 0.5, expected);
}

#[test]
fn batch_throughput_rtci() {
    throughput_matches("RTCI", 0.8, analytic::throughput_rtci(10, 10).unwrap());
}

#[test]
fn batch_throughput_vsync_strong_capture() {
    let expected = analytic::throughput_vsync(10, 10, CaptureParam::new(0.8).unwrap()).unwrap();
    throughput_matches("VSYNC", 0.8, expected);
}

#[test]
fn batch_throughput_dfsa() {
    throughput_matches("DFSA", 0.5, analytic::throughput_dfsa(10, 10).unwrap());
}

#[test]
fn single_vehicle_batch_accuracy() {
    for p in ["VSYNC", "RTCI", "DFSA"] {
        let mut c = ScenarioConfig::batch(p, 1);
        c.seed = 4;
        let m = run_scenario(&c).unwrap().metrics;
        assert_eq!(m.accuracy, Some(1.0));
        assert_eq!(m.iterations_counted, 5000);
    }
}

#[test]
fn flow_run_records_only_real_vehicles() {
    let mut c = ScenarioConfig::batch("VSYNC", 1);
    c.population = Population::Flow { rate_per_s: 2.0 };
    c.speed_mps = (10.0, 30.0);
    c.iterations = 2000;
    c.seed = 8;
    let mut sim = Simulation::new(c).unwrap();
    let mut ever_in_range = HashSet::new();
    let mut recorded_so_far = 0;
    for _ in 0..2000 {
        let log = sim.run_iteration().unwrap();
        ever_in_range.extend(sim.last_in_range().iter().cloned());
        for vrn in &log.newly_recorded {
            assert!(sim.last_in_range().contains(vrn));
        }
        recorded_so_far += log.new_records;
        assert_eq!(sim.recorder().db().len(), recorded_so_far);
    }
    for e in sim.recorder().db() {
        assert!(ever_in_range.contains(&e.vrn));
    }
    let m = sim.metrics();
    assert!(m.accuracy.unwrap() > 0.5, "{m:?}");
    assert!(m.mean_iterations_to_record.unwrap() >= 1.0);
}

#[test]
fn acked_vehicles_fall_silent() {
    let mut c = ScenarioConfig::batch("VSYNC", 8);
    c.population = Population::Fixed { n: 8 };
    c.speed_mps = (0.0, 0.0);
    c.frame_length = FrameLengthPolicy::Fixed(8);
    c.seed = 2;
    let mut sim = Simulation::new(c).unwrap();
    let mut logs = Vec::new();
    for _ in 0..100 {
        logs.push(sim.run_iteration().unwrap());
    }
    assert_eq!(sim.recorder().db().len(), 8);
    let last = logs.last().unwrap();
    assert_eq!((last.m_size, last.dps_received), (0, 0));
    assert!(metrics::accuracy(&[]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn identical_configs_identical_runs(
        seed in any::<u64>(),
        n in 1u32..30,
        proto in prop::sample::select(vec!["VSYNC", "RTCI", "DFSA"]),
        rho in 0.0f64..=1.0,
    ) {
        let mut c = ScenarioConfig::batch(proto, n);
        c.iterations = 40;
        c.seed = seed;
        c.rho = rho;
        let a = run_scenario(&c).unwrap();
        let b = run_scenario(&c).unwrap();
        prop_assert_eq!(&a.logs, &b.logs);
        prop_assert_eq!(&a.metrics, &b.metrics);
        let acc = a.metrics.accuracy.unwrap();
        prop_assert!((0.0..=1.0).contains(&acc));
        prop_assert!(a.metrics.accuracy_ci95.unwrap() >= 0.0);
        prop_assert!(a.metrics.empirical_throughput.unwrap() <= 1.0);
        for l in &a.logs {
            prop_assert!(l.new_records <= l.dps_received);
            prop_assert!(l.dps_received <= l.n_in_range);
        }
    }

    #[test]
    fn accuracy_ignores_iteration_order(seed in any::<u64>(), n in 2u32..15) {
        let out = run_scenario(&batch("VSYNC", n, n as u16, 30, seed)).unwrap();
        let mut rev = out.samples.clone();
        rev.reverse();
        let a = metrics::accuracy(&out.samples).unwrap();
        let b = metrics::accuracy(&rev).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }
}
