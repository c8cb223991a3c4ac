//! Scenario runner: config ingestion, idle-point derivation, sweep
//! orchestration, and result persistence for the CLI.

mod lattice;
mod output;
mod scenarios;

pub use lattice::{build_lattice, LatticeCase};
pub use output::{config_hash, OutputWriter};
pub use scenarios::{run_scenario, RunOptions, ScenarioOutcome};

use crate::model::{build, Coupling, CouplingForm, HamiltonianModel, Mode};
use crate::quantize::{derive_mode_params, CircuitParams, ModeParams};
use crate::{CzError, Result, TWO_PI};
use serde::{Deserialize, Serialize};

/// Scenario selector; names match the CLI argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    CzDemo,
    SweepHold,
    SweepDelta,
    Spectator,
    Optimize,
    Spectrum,
}

impl Scenario {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "cz-demo" => Ok(Scenario::CzDemo),
            "sweep-hold" => Ok(Scenario::SweepHold),
            "sweep-delta" => Ok(Scenario::SweepDelta),
            "spectator" => Ok(Scenario::Spectator),
            "optimize" => Ok(Scenario::Optimize),
            "spectrum" => Ok(Scenario::Spectrum),
            other => Err(CzError::Config(format!(
                "unknown scenario {other:?}; expected one of cz-demo, sweep-hold, \
                 sweep-delta, spectator, optimize, spectrum"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::CzDemo => "cz-demo",
            Scenario::SweepHold => "sweep-hold",
            Scenario::SweepDelta => "sweep-delta",
            Scenario::Spectator => "spectator",
            Scenario::Optimize => "optimize",
            Scenario::Spectrum => "spectrum",
        }
    }
}

/// Top-level config document (a single JSON file).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub device: DeviceSection,
    #[serde(default)]
    pub pulse: PulseSection,
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub run: RunSection,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.device.resolve()?;
        Scenario::parse(&self.scenario.name)?;
        if self.pulse.sigma <= 0.0 {
            return Err(CzError::Config(format!(
                "pulse.sigma must be positive, got {}",
                self.pulse.sigma
            )));
        }
        if self.run.dt <= 0.0 {
            return Err(CzError::Config(format!(
                "run.dt must be positive, got {}",
                self.run.dt
            )));
        }
        if !(2..=6).contains(&self.run.levels) {
            return Err(CzError::Config(format!(
                "run.levels must be in [2, 6], got {}",
                self.run.levels
            )));
        }
        for (name, (lo, hi)) in [
            ("t_hold", self.pulse.bounds.t_hold),
            ("omega_c_on", self.pulse.bounds.omega_c_on),
            ("omega_q_on", self.pulse.bounds.omega_q_on),
        ] {
            if lo >= hi {
                return Err(CzError::Config(format!(
                    "pulse.bounds.{name} is empty: [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

/// Device definition: raw circuit energies or direct mode parameters,
/// exactly one of the two.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    #[serde(default)]
    pub circuit: Option<CircuitParams>,
    #[serde(default)]
    pub modes: Option<ModeParams>,
}

impl DeviceSection {
    pub fn resolve(&self) -> Result<ModeParams> {
        match (&self.circuit, &self.modes) {
            (Some(c), None) => derive_mode_params(c),
            (None, Some(m)) => {
                m.validate()?;
                Ok(m.clone())
            }
            (Some(_), Some(_)) => Err(CzError::Config(
                "device must contain exactly one of circuit / modes, found both".into(),
            )),
            (None, None) => Err(CzError::Config(
                "device must contain exactly one of circuit / modes, found neither".into(),
            )),
        }
    }
}

/// Pulse shape and optimizer box. Idle frequencies default to the derived
/// values (qubit 100 MHz above the work point, coupler at the computed
/// decoupling point).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseSection {
    pub sigma: f64,
    pub qubit_idle: Option<f64>,
    pub coupler_idle: Option<f64>,
    pub bounds: BoundsSection,
}

impl Default for PulseSection {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            qubit_idle: None,
            coupler_idle: None,
            bounds: BoundsSection::default(),
        }
    }
}

/// Inclusive optimizer bounds per pulse parameter (ns, GHz, GHz).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsSection {
    pub t_hold: (f64, f64),
    pub omega_c_on: (f64, f64),
    pub omega_q_on: (f64, f64),
}

impl Default for BoundsSection {
    fn default() -> Self {
        Self {
            t_hold: (8.0, 40.0),
            omega_c_on: (4.60, 5.30),
            omega_q_on: (4.40, 4.60),
        }
    }
}

/// Scenario name plus per-scenario knobs; unused knobs are ignored.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: String,
    /// Anharmonicity offsets delta/2pi in MHz (sweep-delta; first entry also
    /// applies to spectrum).
    #[serde(default)]
    pub delta_mhz: Option<Vec<f64>>,
    /// Hold-time window in ns (sweep-hold, and the cz-demo sweep).
    #[serde(default)]
    pub hold_range: Option<(f64, f64)>,
    #[serde(default)]
    pub hold_points: Option<usize>,
    /// Fixed pulse parameters; skips optimization where given.
    #[serde(default)]
    pub pulse_params: Option<crate::gateval::PulseParams>,
    #[serde(default)]
    pub spectator: SpectatorSection,
}

/// Spectator-lattice device defaults (repo defaults, not paper values).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectatorSection {
    pub s1_omega: f64,
    pub s1_alpha: f64,
    pub s2_omega: f64,
    pub s2_alpha: f64,
    /// Scales every spectator-facing coupling; 0 decouples the lattice.
    pub coupling_scale: f64,
    /// Spectator occupations (s1, s2) to run; defaults to all four.
    pub states: Option<Vec<(u8, u8)>>,
}

impl Default for SpectatorSection {
    fn default() -> Self {
        Self {
            s1_omega: 4.70,
            s1_alpha: -0.250,
            s2_omega: 4.05,
            s2_alpha: -0.250,
            coupling_scale: 1.0,
            states: None,
        }
    }
}

/// Numerical and output knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// Integration sampling step (ns).
    pub dt: f64,
    /// Levels per mode in the three-mode model.
    pub levels: usize,
    pub out_dir: String,
    /// Parallel width cap; the CZFORGE_THREADS env var caps it further.
    pub parallelism: Option<usize>,
    /// Dump per-step populations for single-gate scenarios.
    pub timeseries: bool,
    pub max_iters: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            dt: 0.01,
            levels: 4,
            out_dir: "out".into(),
            parallelism: None,
            timeseries: false,
            max_iters: 150,
        }
    }
}

/// Resolved device at its idle operating point.
#[derive(Debug, Clone)]
pub struct Device {
    pub modes: ModeParams,
    pub qubit_idle: f64,
    pub coupler_idle: f64,
    /// Work frequency of qubit 1 (the engineered E110 = E200 = E020 point).
    pub omega_work: f64,
}

/// The qubit-1 frequency satisfying both resonance conditions given the IST
/// parameters: omega_1 = omega_2 + alpha_2.
pub fn work_frequency(modes: &ModeParams) -> f64 {
    modes.omega_2 + modes.alpha_2
}

/// Three-mode model (q1, q2, coupler) with the given static frequencies.
pub fn three_mode_model(
    modes: &ModeParams,
    omega_1: f64,
    omega_c: f64,
    levels: usize,
    form: CouplingForm,
) -> Result<HamiltonianModel> {
    build(
        &[
            Mode { omega: omega_1, alpha: modes.alpha_1, levels },
            Mode { omega: modes.omega_2, alpha: modes.alpha_2, levels },
            Mode { omega: omega_c, alpha: modes.alpha_c, levels },
        ],
        &[
            Coupling { a: 0, b: 1, g: modes.g_12 },
            Coupling { a: 0, b: 2, g: modes.g_1c },
            Coupling { a: 1, b: 2, g: modes.g_2c },
        ],
        form,
    )
}

/// Spread (max - min, angular units) of the three dressed levels nearest the
/// bare E110 energy with the qubits at the work point and the coupler at
/// omega_c; proportional to the residual |110>-|B> coupling.
fn work_manifold_spread(
    modes: &ModeParams,
    omega_work: f64,
    omega_c: f64,
    levels: usize,
) -> Result<f64> {
    let model = three_mode_model(modes, omega_work, omega_c, levels, CouplingForm::Full)?;
    let dressed = model.dressed_spectrum();
    let bare = TWO_PI * (omega_work + modes.omega_2);
    let mut nearest: Vec<f64> = dressed.states.iter().map(|s| s.energy).collect();
    nearest.sort_by(|a, b| (a - bare).abs().total_cmp(&(b - bare).abs()));
    let trio = &nearest[..3];
    let hi = trio.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let lo = trio.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    Ok(hi - lo)
}

/// Coupler decoupling point: the frequency in [5, 7] GHz minimizing the
/// dressed splitting of the 110/200/020 manifold at the work point.
pub fn decoupling_point(modes: &ModeParams, levels: usize) -> Result<f64> {
    let omega_work = work_frequency(modes);
    let (mut lo, mut hi) = (5.0, 7.0);
    let mut best = lo;
    for stage in 0..3 {
        let n = if stage == 0 { 81 } else { 41 };
        let mut best_val = f64::INFINITY;
        for k in 0..n {
            let x = lo + (hi - lo) * k as f64 / (n - 1) as f64;
            let v = work_manifold_spread(modes, omega_work, x, levels)?;
            if v < best_val {
                best_val = v;
                best = x;
            }
        }
        let step = (hi - lo) / (n - 1) as f64;
        lo = (best - step).max(5.0);
        hi = (best + step).min(7.0);
    }
    Ok(best)
}

/// Root of the perturbative effective coupling
/// g_eff(x) = g_direct - (g_ac g_bc / 2) (1/(x - omega_a) + 1/(x - omega_b))
/// above both mode frequencies; used to park spectator couplers.
pub fn perturbative_decoupling(
    g_direct: f64,
    g_ac: f64,
    g_bc: f64,
    omega_a: f64,
    omega_b: f64,
) -> Result<f64> {
    if g_direct <= 0.0 || g_ac <= 0.0 || g_bc <= 0.0 {
        return Err(CzError::Config(
            "perturbative decoupling needs strictly positive couplings".into(),
        ));
    }
    let g_eff = |x: f64| {
        g_direct - 0.5 * g_ac * g_bc * (1.0 / (x - omega_a) + 1.0 / (x - omega_b))
    };
    let mut lo = omega_a.max(omega_b) + 1e-3;
    let mut hi = omega_a.max(omega_b) + 50.0;
    if g_eff(lo) >= 0.0 || g_eff(hi) <= 0.0 {
        return Err(CzError::Config(format!(
            "no decoupling point bracketed in [{lo:.3}, {hi:.3}] GHz"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g_eff(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Resolve the device section plus idle points.
pub fn resolve_device(cfg: &ExperimentConfig) -> Result<Device> {
    let modes = cfg.device.resolve()?;
    let omega_work = work_frequency(&modes);
    let qubit_idle = cfg.pulse.qubit_idle.unwrap_or(omega_work + 0.1);
    let coupler_idle = match cfg.pulse.coupler_idle {
        Some(x) => x,
        None => decoupling_point(&modes, cfg.run.levels)?,
    };
    Ok(Device {
        modes,
        qubit_idle,
        coupler_idle,
        omega_work,
    })
}
