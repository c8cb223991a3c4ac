//! Flat-top error-function frequency trajectories for the tuned transmon and
//! the coupler:
//!
//! omega(t) = omega_off + (omega_on - omega_off)/2
//!            * [Erf((t - t_ramp/2) / (sqrt(2) sigma))
//!               - Erf((t - t_gate + t_ramp/2) / (sqrt(2) sigma))]
//!
//! with t_ramp = 4 sqrt(2) sigma.

use crate::{CzError, Result};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;
use std::collections::BTreeMap;

pub const RAMP_FACTOR: f64 = 4.0 * std::f64::consts::SQRT_2;

/// A single flat-top error-function frequency pulse. Frequencies in GHz,
/// times in ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlattopPulse {
    pub omega_off: f64,
    pub omega_on: f64,
    pub sigma: f64,
    pub t_gate: f64,
}

impl FlattopPulse {
    pub fn new(omega_off: f64, omega_on: f64, sigma: f64, t_gate: f64) -> Result<Self> {
        if sigma <= 0.0 || !sigma.is_finite() {
            return Err(CzError::InvalidPulse(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        if t_gate < RAMP_FACTOR * sigma {
            return Err(CzError::InvalidPulse(format!(
                "t_gate = {t_gate} ns is shorter than the ramp time {:.4} ns",
                RAMP_FACTOR * sigma
            )));
        }
        Ok(Self {
            omega_off,
            omega_on,
            sigma,
            t_gate,
        })
    }

    pub fn t_ramp(&self) -> f64 {
        RAMP_FACTOR * self.sigma
    }

    /// Pulse value at time t. Times outside [0, t_gate] are clamped to the
    /// endpoints; schedules never sample outside.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, self.t_gate);
        let s = std::f64::consts::SQRT_2 * self.sigma;
        let rise = erf((t - 0.5 * self.t_ramp()) / s);
        let fall = erf((t - self.t_gate + 0.5 * self.t_ramp()) / s);
        self.omega_off + 0.5 * (self.omega_on - self.omega_off) * (rise - fall)
    }

    /// Flat-top duration between ramp midpoints: t_hold = t_gate - 4 sqrt(2) sigma.
    pub fn hold_time(&self) -> Result<f64> {
        let h = self.t_gate - self.t_ramp();
        if h < 0.0 {
            return Err(CzError::InvalidPulse(format!(
                "negative hold time {h} ns"
            )));
        }
        Ok(h)
    }
}

/// Per-mode frequency trajectory: either a flat-top pulse or a constant park.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModeDrive {
    Flattop(FlattopPulse),
    Constant { omega: f64 },
}

impl ModeDrive {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            ModeDrive::Flattop(p) => p.eval(t),
            ModeDrive::Constant { omega } => *omega,
        }
    }
}

/// Per-mode frequency trajectories sharing one gate duration and sample step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub drives: BTreeMap<usize, ModeDrive>,
    pub t_gate: f64,
    pub dt: f64,
}

impl PulseSchedule {
    pub fn new(drives: BTreeMap<usize, ModeDrive>, t_gate: f64, dt: f64) -> Result<Self> {
        if t_gate <= 0.0 || dt <= 0.0 {
            return Err(CzError::InvalidPulse(format!(
                "t_gate = {t_gate} ns and dt = {dt} ns must be positive"
            )));
        }
        for (mode, drive) in &drives {
            if let ModeDrive::Flattop(p) = drive {
                if (p.t_gate - t_gate).abs() > 1e-12 {
                    return Err(CzError::InvalidPulse(format!(
                        "mode {mode} pulse t_gate = {} differs from schedule t_gate = {t_gate}",
                        p.t_gate
                    )));
                }
            }
        }
        Ok(Self { drives, t_gate, dt })
    }

    /// Frequency of a mode at time t; modes without a drive keep their static
    /// frequency and return None here.
    pub fn omega_at(&self, mode: usize, t: f64) -> Option<f64> {
        self.drives.get(&mode).map(|d| d.eval(t))
    }
}
