//! Closed-form slot statistics and throughput models for hashed TDMA frames.
//!
//! `N` vehicles each pick one of `L` slots uniformly at random. The number of
//! vehicles landing in a given slot is Binomial(N, 1/L), which yields the idle,
//! single and collision probabilities everything else is built from. A
//! collision slot still delivers one packet with probability `rho` when the
//! receiver captures the strongest transmission.

use std::io::{self, Write};

use crate::error::AnalyticError;

/// Probability that a collided slot is still decoded thanks to capture.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct CaptureParam(f64);

impl CaptureParam {
    pub const NONE: CaptureParam = CaptureParam(0.0);

    pub fn new(rho: f64) -> Result<Self, AnalyticError> {
        if (0.0..=1.0).contains(&rho) {
            Ok(CaptureParam(rho))
        } else {
            Err(AnalyticError::InvalidRho(rho))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Idle / single / collision probabilities of one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotProbabilities {
    pub p_idle: f64,
    pub p_single: f64,
    pub p_collision: f64,
}

impl SlotProbabilities {
    pub fn total(&self) -> f64 {
        self.p_idle + self.p_single + self.p_collision
    }
}

fn check_domain(n: u32, l: u32) -> Result<(), AnalyticError> {
    if n == 0 {
        return Err(AnalyticError::ZeroVehicles);
    }
    if l == 0 {
        return Err(AnalyticError::ZeroFrameLength);
    }
    Ok(())
}

pub fn slot_probabilities(n: u32, l: u32) -> Result<SlotProbabilities, AnalyticError> {
    check_domain(n, l)?;
    let p = 1.0 / f64::from(l);
    let q = 1.0 - p;
    let p_single = f64::from(n) * p * q.powf(f64::from(n - 1));
    let p_idle = q.powf(f64::from(n));
    // 1 - a - b can dip a few ulps below zero when the slot is never shared.
    let p_collision = (1.0 - p_single - p_idle).max(0.0);
    Ok(SlotProbabilities {
        p_idle,
        p_single,
        p_collision,
    })
}

/// Expected decoded packets per slot of a single hashed frame with capture.
pub fn throughput_per_slot(n: u32, l: u32, rho: CaptureParam) -> Result<f64, AnalyticError> {
    let p = slot_probabilities(n, l)?;
    Ok(rho.value() * p.p_collision + p.p_single)
}

/// Real-valued stationary point of [`throughput_per_slot`] in `L`.
pub fn optimal_frame_length(n: u32, rho: CaptureParam) -> Result<f64, AnalyticError> {
    if n == 0 {
        return Err(AnalyticError::ZeroVehicles);
    }
    let rho = rho.value();
    Ok(rho + (1.0 - rho) * f64::from(n))
}

/// Integer frame length maximizing [`throughput_per_slot`], chosen between the
/// floor and ceiling of [`optimal_frame_length`]. Ties go to the shorter frame.
pub fn best_integer_frame_length(n: u32, rho: CaptureParam) -> Result<u32, AnalyticError> {
    let real = optimal_frame_length(n, rho)?;
    let lo = (real.floor() as u32).max(1);
    let hi = (real.ceil() as u32).max(1);
    if lo == hi {
        return Ok(lo);
    }
    let s_lo = throughput_per_slot(n, lo, rho)?;
    let s_hi = throughput_per_slot(n, hi, rho)?;
    Ok(if s_hi > s_lo { hi } else { lo })
}

/// Large-`N` throughput at the optimal frame length. `rho = 1` returns the
/// limit value 1.
pub fn throughput_optimal(rho: CaptureParam) -> f64 {
    let rho = rho.value();
    if rho >= 1.0 {
        return 1.0;
    }
    rho + (1.0 - rho) * (-1.0 / (1.0 - rho)).exp()
}

/// Dynamic frame slotted ALOHA: `(N/L)(1 - 1/L)^(N-1)`.
pub fn throughput_dfsa(n: u32, l: u32) -> Result<f64, AnalyticError> {
    Ok(slot_probabilities(n, l)?.p_single)
}

/// Reservation with idle-slot cancellation, no capture:
/// `N(1-p)^(N-1) / (1 + L(1 - (1-p)^N))` written as `L*P1 / (L*(1-P0) + 1)`.
pub fn throughput_rtci(n: u32, l: u32) -> Result<f64, AnalyticError> {
    let p = slot_probabilities(n, l)?;
    let l = f64::from(l);
    Ok(l * p.p_single / (l * (1.0 - p.p_idle) + 1.0))
}

/// Reservation with idle-slot cancellation and capture on collided slots:
/// `(rho + (1-rho)*N*p*(1-p)^(N-1) - rho*(1-p)^N) * L / (L*(1-(1-p)^N) + 1)`.
///
/// The numerator equals `L * (P1 + rho * Pcoll)`; at `rho = 0` the result is
/// bit-identical to [`throughput_rtci`].
pub fn throughput_vsync(n: u32, l: u32, rho: CaptureParam) -> Result<f64, AnalyticError> {
    let p = slot_probabilities(n, l)?;
    let rho = rho.value();
    let l = f64::from(l);
    let numerator = (rho + (1.0 - rho) * p.p_single - rho * p.p_idle) * l;
    Ok(numerator / (l * (1.0 - p.p_idle) + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryPoint {
    pub n_vehicles: u32,
    pub frame_length: u32,
    pub rho: CaptureParam,
    pub s_dfsa: f64,
    pub s_rtci: f64,
    pub s_vsync: f64,
    pub s_slot: f64,
}

impl TheoryPoint {
    pub fn evaluate(n: u32, l: u32, rho: CaptureParam) -> Result<Self, AnalyticError> {
        Ok(TheoryPoint {
            n_vehicles: n,
            frame_length: l,
            rho,
            s_dfsa: throughput_dfsa(n, l)?,
            s_rtci: throughput_rtci(n, l)?,
            s_vsync: throughput_vsync(n, l, rho)?,
            s_slot: throughput_per_slot(n, l, rho)?,
        })
    }
}

/// How the frame length of a theory point is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FramePolicy {
    Fixed(u32),
    /// `L = N`
    EqualToN,
    /// [`best_integer_frame_length`] for each `(N, rho)`.
    Optimal,
}

impl FramePolicy {
    pub fn frame_length(self, n: u32, rho: CaptureParam) -> Result<u32, AnalyticError> {
        match self {
            FramePolicy::Fixed(0) => Err(AnalyticError::ZeroFrameLength),
            FramePolicy::Fixed(l) => Ok(l),
            FramePolicy::EqualToN => Ok(n),
            FramePolicy::Optimal => best_integer_frame_length(n, rho),
        }
    }
}

/// One point per `(N, rho)` pair, `N` ascending in the outer loop and `rho`
/// in the given order in the inner loop.
pub fn theory_curves(
    n_min: u32,
    n_max: u32,
    rho_values: &[CaptureParam],
    policy: FramePolicy,
) -> Result<Vec<TheoryPoint>, AnalyticError> {
    if n_min == 0 {
        return Err(AnalyticError::ZeroVehicles);
    }
    if n_min > n_max || rho_values.is_empty() {
        return Err(AnalyticError::EmptyRange {
            min: n_min,
            max: n_max,
        });
    }
    let mut points = Vec::with_capacity((n_max - n_min + 1) as usize * rho_values.len());
    for n in n_min..=n_max {
        for &rho in rho_values {
            let l = policy.frame_length(n, rho)?;
            points.push(TheoryPoint::evaluate(n, l, rho)?);
        }
    }
    Ok(points)
}

pub const THEORY_CSV_HEADER: &str = "n,l,rho,s_dfsa,s_rtci,s_vsync,s_slot";

pub fn write_theory_csv<W: Write>(points: &[TheoryPoint], mut out: W) -> io::Result<()> {
    writeln!(out, "{THEORY_CSV_HEADER}")?;
    for p in points {
        writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            p.n_vehicles,
            p.frame_length,
            p.rho.value(),
            p.s_dfsa,
            p.s_rtci,
            p.s_vsync,
            p.s_slot
        )?;
    }
    Ok(())
}
