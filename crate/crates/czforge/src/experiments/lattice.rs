//! Eight-mode spectator lattice: the gate pair plus two spectator qubits on
//! a square, every edge bridged by a tunable coupler.
//!
//! Mode order matches the state notation |Q1 Q2 S1 S2 C1 C2 C3 C4>: C1 is
//! the gate coupler (Q1-Q2), C2 bridges Q1-S1, C3 bridges Q2-S2, C4 bridges
//! S1-S2. Qubit modes keep 3 levels and coupler modes 2; a global
//! total-excitation cutoff keeps the basis small enough to propagate.

use super::{perturbative_decoupling, Device, SpectatorSection};
use crate::model::{build_with_cutoff, Coupling, CouplingForm, HamiltonianModel, Mode};
use crate::Result;

pub const Q1: usize = 0;
pub const Q2: usize = 1;
pub const S1: usize = 2;
pub const S2: usize = 3;
pub const C1: usize = 4;
pub const C2: usize = 5;
pub const C3: usize = 6;
pub const C4: usize = 7;

/// Default global excitation cutoff of the lattice basis.
pub const LATTICE_CUTOFF: usize = 4;

/// One spectator configuration ready for gate evaluation.
pub struct LatticeCase {
    pub model: HamiltonianModel,
    /// Spectator occupations (s1, s2).
    pub spectator: (u8, u8),
    /// Q1-Q2 computational labels (00, 01, 10, 11) with the spectators
    /// frozen in their prepared state.
    pub comp_labels: [Vec<u8>; 4],
    /// Parked spectator-coupler frequencies (c2, c3, c4) in GHz.
    pub spectator_couplers: (f64, f64, f64),
    pub cutoff: usize,
}

fn occ(q1: u8, q2: u8, s1: u8, s2: u8) -> Vec<u8> {
    vec![q1, q2, s1, s2, 0, 0, 0, 0]
}

/// Park a spectator coupler: at the perturbative zero of the bridged pair's
/// effective coupling, or well above the pair when the lattice is decoupled
/// and there is no zero to find.
fn park_coupler(dev: &Device, scale: f64, omega_a: f64, omega_b: f64) -> Result<f64> {
    let m = &dev.modes;
    if scale > 0.0 {
        perturbative_decoupling(m.g_12 * scale, m.g_1c * scale, m.g_2c * scale, omega_a, omega_b)
    } else {
        Ok(omega_a.max(omega_b) + 1.5)
    }
}

/// Build the lattice Hamiltonian for one spectator configuration.
///
/// The gate triangle (Q1, Q2, C1) keeps the device couplings; every
/// spectator-facing edge reuses them scaled by `spec.coupling_scale`.
/// Spectator couplers are parked at their own decoupling points, with Q1
/// taken at the work frequency where it spends the hold time.
pub fn build_lattice(
    dev: &Device,
    spec: &SpectatorSection,
    spectator: (u8, u8),
    cutoff: usize,
) -> Result<LatticeCase> {
    let m = &dev.modes;
    let s = spec.coupling_scale;

    let c2 = park_coupler(dev, s, dev.omega_work, spec.s1_omega)?;
    let c3 = park_coupler(dev, s, m.omega_2, spec.s2_omega)?;
    let c4 = park_coupler(dev, s, spec.s1_omega, spec.s2_omega)?;

    let modes = [
        Mode { omega: dev.qubit_idle, alpha: m.alpha_1, levels: 3 },
        Mode { omega: m.omega_2, alpha: m.alpha_2, levels: 3 },
        Mode { omega: spec.s1_omega, alpha: spec.s1_alpha, levels: 3 },
        Mode { omega: spec.s2_omega, alpha: spec.s2_alpha, levels: 3 },
        Mode { omega: dev.coupler_idle, alpha: m.alpha_c, levels: 2 },
        Mode { omega: c2, alpha: m.alpha_c, levels: 2 },
        Mode { omega: c3, alpha: m.alpha_c, levels: 2 },
        Mode { omega: c4, alpha: m.alpha_c, levels: 2 },
    ];

    let mut couplings = vec![
        Coupling { a: Q1, b: Q2, g: m.g_12 },
        Coupling { a: Q1, b: C1, g: m.g_1c },
        Coupling { a: Q2, b: C1, g: m.g_2c },
    ];
    if s > 0.0 {
        couplings.extend([
            Coupling { a: Q1, b: S1, g: m.g_12 * s },
            Coupling { a: Q1, b: C2, g: m.g_1c * s },
            Coupling { a: S1, b: C2, g: m.g_2c * s },
            Coupling { a: Q2, b: S2, g: m.g_12 * s },
            Coupling { a: Q2, b: C3, g: m.g_1c * s },
            Coupling { a: S2, b: C3, g: m.g_2c * s },
            Coupling { a: S1, b: S2, g: m.g_12 * s },
            Coupling { a: S1, b: C4, g: m.g_1c * s },
            Coupling { a: S2, b: C4, g: m.g_2c * s },
        ]);
    }

    let model = build_with_cutoff(&modes, &couplings, CouplingForm::Full, Some(cutoff))?;
    let (s1, s2) = spectator;
    let comp_labels = [
        occ(0, 0, s1, s2),
        occ(0, 1, s1, s2),
        occ(1, 0, s1, s2),
        occ(1, 1, s1, s2),
    ];
    Ok(LatticeCase {
        model,
        spectator,
        comp_labels,
        spectator_couplers: (c2, c3, c4),
        cutoff,
    })
}
