//! Gate scoring: computational-subspace matrix extraction, virtual-Z phase
//! correction, average gate fidelity, conditional phase, leakage/swap errors,
//! and the optimizer cost.

use crate::control::{FlattopPulse, ModeDrive, PulseSchedule, RAMP_FACTOR};
use crate::dynamics::{evolve_states, Evolution};
use crate::model::HamiltonianModel;
use crate::{CzError, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Ideal CZ gate diag(1, 1, 1, -1) in the (|00>, |01>, |10>, |11>) basis.
pub fn cz_ideal() -> DMatrix<Complex64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        Complex64::new(1.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(-1.0, 0.0),
    ]))
}

/// Wrap an angle to (-pi, pi].
pub fn wrap_angle(x: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut y = x % tau;
    if y <= -std::f64::consts::PI {
        y += tau;
    } else if y > std::f64::consts::PI {
        y -= tau;
    }
    y
}

/// Pulse parameter vector p = (t_hold, omega_c_on, omega_q_on).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseParams {
    pub t_hold: f64,
    pub omega_c_on: f64,
    pub omega_q_on: f64,
}

impl PulseParams {
    pub fn from_vec(p: &[f64]) -> Self {
        Self {
            t_hold: p[0],
            omega_c_on: p[1],
            omega_q_on: p[2],
        }
    }

    pub fn to_vec(self) -> Vec<f64> {
        vec![self.t_hold, self.omega_c_on, self.omega_q_on]
    }
}

/// Scored two-qubit gate. `u_comp` is the raw (pre-phase-correction)
/// computational-subspace matrix in the rotating-idle frame; `fidelity` is
/// computed after removing single-qubit Z phases.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateReport {
    /// Row-major 4x4 complex matrix as (re, im) pairs, basis (00, 01, 10, 11).
    pub u_comp: Vec<Vec<(f64, f64)>>,
    /// Conditional phase (radians), wrapped to (-pi, pi].
    pub theta: f64,
    pub fidelity: f64,
    pub eps_leak: f64,
    pub eps_swap: f64,
    pub cost: f64,
    /// Virtual-Z angles (theta_a on qubit 1, theta_b on qubit 2).
    pub phase_corrections: (f64, f64),
    pub t_hold: f64,
    pub t_gate: f64,
    pub dt: f64,
    pub unitarity_defect: f64,
}

fn to_serializable(m: &DMatrix<Complex64>) -> Vec<Vec<(f64, f64)>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| (m[(r, c)].re, m[(r, c)].im)).collect())
        .collect()
}

/// Project an evolution of the four computational inputs onto the four
/// computational dressed states: M[j][k] = <comp_j | U | comp_k> in the
/// rotating-idle frame. Columns follow the order of `comp_labels`
/// (00, 01, 10, 11); M is generally not unitary (leakage shows up as a
/// column-norm deficit).
pub fn extract_computational(
    evolution: &Evolution,
    comp_labels: &[Vec<u8>; 4],
) -> Result<DMatrix<Complex64>> {
    let mut m = DMatrix::<Complex64>::zeros(4, 4);
    for (k, input) in comp_labels.iter().enumerate() {
        for (j, out) in comp_labels.iter().enumerate() {
            m[(j, k)] = evolution.amplitude_of(input, out)?;
        }
    }
    Ok(m)
}

/// Remove single-qubit Z phases and the global phase:
/// theta_a = -arg<10|M|10>, theta_b = -arg<01|M|01>, global phase fixed by
/// arg<00|M|00> = 0. Returns the corrected matrix and (theta_a, theta_b).
pub fn remove_single_qubit_phases(
    m: &DMatrix<Complex64>,
) -> Result<(DMatrix<Complex64>, (f64, f64))> {
    for j in 0..3 {
        if m[(j, j)].norm() < 1e-6 {
            return Err(CzError::PhaseUndefined(format!(
                "diagonal element {j} has magnitude {:.2e}",
                m[(j, j)].norm()
            )));
        }
    }
    let global = -m[(0, 0)].arg();
    let theta_b = -(m[(1, 1)] * Complex64::from_polar(1.0, global)).arg();
    let theta_a = -(m[(2, 2)] * Complex64::from_polar(1.0, global)).arg();
    let row_phases = [0.0, theta_b, theta_a, theta_a + theta_b];
    let mut out = m.clone();
    for (r, ph) in row_phases.iter().enumerate() {
        let f = Complex64::from_polar(1.0, ph + global);
        for c in 0..4 {
            out[(r, c)] *= f;
        }
    }
    Ok((out, (theta_a, theta_b)))
}

/// Average gate fidelity F = (|Tr(U_id^dag U)|^2 + Tr(U^dag U)) / (d (d + 1))
/// with d = 4.
pub fn avg_gate_fidelity(u: &DMatrix<Complex64>, u_id: &DMatrix<Complex64>) -> f64 {
    let d = 4.0;
    let tr_overlap = (u_id.adjoint() * u).trace();
    let tr_norm = (u.adjoint() * u).trace();
    (tr_overlap.norm_sqr() + tr_norm.re) / (d * (d + 1.0))
}

/// Conditional phase from the four computational-input self-overlaps:
/// theta = arg<11> - arg<01> - arg<10> + arg<00>, wrapped to (-pi, pi].
/// `diag` is ordered (00, 01, 10, 11).
pub fn conditional_phase(diag: &[Complex64; 4]) -> Result<f64> {
    for (k, a) in diag.iter().enumerate() {
        if a.norm() < 1e-6 {
            return Err(CzError::PhaseUndefined(format!(
                "overlap {k} has magnitude {:.2e}",
                a.norm()
            )));
        }
    }
    Ok(wrap_angle(
        diag[3].arg() - diag[1].arg() - diag[2].arg() + diag[0].arg(),
    ))
}

/// Leakage and swap errors: eps_leak = 1 - P_11 for the |11> input and
/// eps_swap = 1 - P_01 for the |01> input, populations taken in the
/// idle-point dressed basis.
pub fn leakage_and_swap(evolution: &Evolution, comp_labels: &[Vec<u8>; 4]) -> Result<(f64, f64)> {
    let eps_leak = 1.0 - evolution.population_of(&comp_labels[3], &comp_labels[3])?;
    let eps_swap = 1.0 - evolution.population_of(&comp_labels[1], &comp_labels[1])?;
    Ok((eps_leak.max(0.0), eps_swap.max(0.0)))
}

/// Total cost C = C_phase + C_leak with C_phase = (|theta| - pi)^2 and
/// C_leak the out-of-subspace population averaged over the four
/// computational inputs.
pub fn cost_from(theta: f64, mean_leak: f64) -> f64 {
    let d = theta.abs() - std::f64::consts::PI;
    d * d + mean_leak
}

/// Everything needed to turn a parameter vector into a scored gate on a
/// fixed device model.
#[derive(Debug, Clone)]
pub struct GateContext<'a> {
    pub model: &'a HamiltonianModel,
    /// Index of the frequency-tuned transmon mode.
    pub qubit_mode: usize,
    /// Index of the tunable coupler mode.
    pub coupler_mode: usize,
    pub qubit_idle: f64,
    pub coupler_idle: f64,
    pub sigma: f64,
    pub dt: f64,
    /// Dressed computational labels at the idle point, ordered
    /// (00, 01, 10, 11) in the two gate qubits.
    pub comp_labels: [Vec<u8>; 4],
}

impl GateContext<'_> {
    /// The schedule implied by p: both flat-top pulses share sigma and
    /// t_gate = t_hold + 4 sqrt(2) sigma.
    pub fn schedule(&self, p: &PulseParams) -> Result<PulseSchedule> {
        let t_gate = p.t_hold + RAMP_FACTOR * self.sigma;
        let mut drives = BTreeMap::new();
        drives.insert(
            self.qubit_mode,
            ModeDrive::Flattop(FlattopPulse::new(
                self.qubit_idle,
                p.omega_q_on,
                self.sigma,
                t_gate,
            )?),
        );
        drives.insert(
            self.coupler_mode,
            ModeDrive::Flattop(FlattopPulse::new(
                self.coupler_idle,
                p.omega_c_on,
                self.sigma,
                t_gate,
            )?),
        );
        PulseSchedule::new(drives, t_gate, self.dt)
    }

    /// Evolve the four computational inputs under the schedule implied by p.
    pub fn evolve(&self, p: &PulseParams) -> Result<Evolution> {
        let schedule = self.schedule(p)?;
        evolve_states(self.model, &schedule, &self.comp_labels.to_vec())
    }

    fn theta_and_leak(&self, evolution: &Evolution) -> Result<(f64, f64)> {
        let m = extract_computational(evolution, &self.comp_labels)?;
        let diag = [m[(0, 0)], m[(1, 1)], m[(2, 2)], m[(3, 3)]];
        let theta = conditional_phase(&diag)?;
        let mean_leak = (0..4)
            .map(|k| {
                let in_subspace: f64 = (0..4).map(|j| m[(j, k)].norm_sqr()).sum();
                (1.0 - in_subspace).max(0.0)
            })
            .sum::<f64>()
            / 4.0;
        Ok((theta, mean_leak))
    }

    /// Cost of a parameter vector; propagation failures surface as an
    /// infinite-cost sentinel so the optimizer keeps moving.
    pub fn cost(&self, p: &PulseParams) -> f64 {
        match self.evolve(p).and_then(|ev| self.theta_and_leak(&ev)) {
            Ok((theta, mean_leak)) => cost_from(theta, mean_leak),
            Err(_) => f64::INFINITY,
        }
    }

    /// Full scored report at a parameter vector.
    pub fn report(&self, p: &PulseParams) -> Result<GateReport> {
        let schedule = self.schedule(p)?;
        let evolution = evolve_states(self.model, &schedule, &self.comp_labels.to_vec())?;
        let m = extract_computational(&evolution, &self.comp_labels)?;
        let diag = [m[(0, 0)], m[(1, 1)], m[(2, 2)], m[(3, 3)]];
        let theta = conditional_phase(&diag)?;
        let (corrected, phase_corrections) = remove_single_qubit_phases(&m)?;
        let fidelity = avg_gate_fidelity(&corrected, &cz_ideal());
        let (eps_leak, eps_swap) = leakage_and_swap(&evolution, &self.comp_labels)?;
        let (_, mean_leak) = self.theta_and_leak(&evolution)?;
        Ok(GateReport {
            u_comp: to_serializable(&m),
            theta,
            fidelity,
            eps_leak,
            eps_swap,
            cost: cost_from(theta, mean_leak),
            phase_corrections,
            t_hold: p.t_hold,
            t_gate: schedule.t_gate,
            dt: evolution.dt,
            unitarity_defect: evolution.defect,
        })
    }
}
