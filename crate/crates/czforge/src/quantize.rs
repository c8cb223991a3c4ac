//! Circuit quantization: maps raw circuit energies and capacitances to
//! mode-level parameters (frequency, anharmonicity, coupling strengths).
//!
//! All energies are linear frequencies in GHz (h = 1), capacitances in fF,
//! flux biases in units of the flux quantum.

use crate::{CzError, Result};
use serde::{Deserialize, Serialize};

/// Elementary charge, C.
const E_CHARGE: f64 = 1.602_176_634e-19;
/// Planck constant, J s.
const PLANCK_H: f64 = 6.626_070_15e-34;

/// e^2 / (h * 1 fF), expressed in GHz.
fn e2_over_h_ff_ghz() -> f64 {
    E_CHARGE * E_CHARGE / (PLANCK_H * 1e-15) / 1e9
}

/// Raw circuit energies and capacitances per device element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    /// Charging energies (GHz).
    pub ec_1: f64,
    pub ec_2: f64,
    pub ec_c: f64,
    /// Total SQUID Josephson energies (GHz).
    pub ej_sum_1: f64,
    pub ej_sum_c: f64,
    /// Junction asymmetries, |d| <= 1.
    pub d_1: f64,
    pub d_c: f64,
    /// IST junction and inductive energies (GHz); single-well requires el_2 > ej_2.
    pub ej_2: f64,
    pub el_2: f64,
    /// External flux biases (units of the flux quantum).
    pub flux_1: f64,
    pub flux_2: f64,
    pub flux_c: f64,
    /// Capacitances (fF).
    pub c_1: f64,
    pub c_2: f64,
    pub c_c: f64,
    pub c_1c: f64,
    pub c_2c: f64,
    pub c_12: f64,
}

impl CircuitParams {
    pub fn validate(&self) -> Result<()> {
        let energies = [
            ("ec_1", self.ec_1),
            ("ec_2", self.ec_2),
            ("ec_c", self.ec_c),
            ("ej_sum_1", self.ej_sum_1),
            ("ej_sum_c", self.ej_sum_c),
            ("ej_2", self.ej_2),
            ("el_2", self.el_2),
        ];
        for (name, v) in energies {
            if v <= 0.0 || !v.is_finite() {
                return Err(CzError::ParameterDomain(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        for (name, d) in [("d_1", self.d_1), ("d_c", self.d_c)] {
            if !(d.abs() <= 1.0) {
                return Err(CzError::ParameterDomain(format!(
                    "|{name}| must be <= 1, got {d}"
                )));
            }
        }
        for (name, c) in [("c_1", self.c_1), ("c_2", self.c_2), ("c_c", self.c_c)] {
            if c <= 0.0 {
                return Err(CzError::ParameterDomain(format!(
                    "{name} must be strictly positive, got {c}"
                )));
            }
        }
        for (name, c) in [("c_1c", self.c_1c), ("c_2c", self.c_2c), ("c_12", self.c_12)] {
            if c < 0.0 {
                return Err(CzError::ParameterDomain(format!(
                    "{name} must be nonnegative, got {c}"
                )));
            }
        }
        if self.el_2 <= self.ej_2 {
            return Err(CzError::SingleWell {
                el: self.el_2,
                ej: self.ej_2,
            });
        }
        Ok(())
    }
}

/// Derived per-mode frequencies, anharmonicities, and coupling strengths.
///
/// Coupling strengths are stored as magnitudes; the closed forms yield a
/// common negative sign that is recorded in [`CouplingStrengths::SIGN`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeParams {
    pub omega_1: f64,
    pub omega_2: f64,
    pub omega_c: f64,
    pub alpha_1: f64,
    pub alpha_2: f64,
    pub alpha_c: f64,
    pub g_12: f64,
    pub g_1c: f64,
    pub g_2c: f64,
}

impl ModeParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega_1", self.omega_1),
            ("omega_2", self.omega_2),
            ("omega_c", self.omega_c),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(CzError::ParameterDomain(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        for (name, g) in [("g_12", self.g_12), ("g_1c", self.g_1c), ("g_2c", self.g_2c)] {
            if g < 0.0 || !g.is_finite() {
                return Err(CzError::ParameterDomain(format!(
                    "{name} must be a nonnegative magnitude, got {g}"
                )));
            }
        }
        Ok(())
    }
}

/// Signed coupling strengths as produced by the capacitive closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingStrengths {
    pub g_12: f64,
    pub g_1c: f64,
    pub g_2c: f64,
}

impl CouplingStrengths {
    /// The common sign carried by the capacitive coupling formulas.
    pub const SIGN: f64 = -1.0;

    pub fn magnitudes(&self) -> (f64, f64, f64) {
        (self.g_12.abs(), self.g_1c.abs(), self.g_2c.abs())
    }
}

/// Flux-tunable Josephson energy of an asymmetric SQUID:
/// E_J(phi) = E_Jsum * sqrt(cos^2(pi phi) + d^2 sin^2(pi phi)).
pub fn tunable_ej(ej_sum: f64, d: f64, flux: f64) -> Result<f64> {
    if ej_sum <= 0.0 || !ej_sum.is_finite() {
        return Err(CzError::ParameterDomain(format!(
            "ej_sum must be strictly positive, got {ej_sum}"
        )));
    }
    if !(d.abs() <= 1.0) {
        return Err(CzError::ParameterDomain(format!(
            "junction asymmetry |d| must be <= 1, got {d}"
        )));
    }
    let (s, c) = (std::f64::consts::PI * flux).sin_cos();
    Ok(ej_sum * (c * c + d * d * s * s).sqrt())
}

/// Transmon mode frequency and anharmonicity:
/// omega = sqrt(8 E_C E_J) - E_C, alpha = -E_C.
///
/// Below E_J/E_C ~ 20 the transmon approximation degrades; the regime flag in
/// the returned tuple's companion [`transmon_regime_ok`] can be checked by
/// callers that want to warn.
pub fn transmon_modes(ec: f64, ej: f64) -> Result<(f64, f64)> {
    if ec <= 0.0 || ej <= 0.0 {
        return Err(CzError::ParameterDomain(format!(
            "transmon energies must be positive, got ec = {ec}, ej = {ej}"
        )));
    }
    Ok(((8.0 * ec * ej).sqrt() - ec, -ec))
}

/// Whether (ec, ej) sits in the transmon regime E_J/E_C >~ 20.
pub fn transmon_regime_ok(ec: f64, ej: f64) -> bool {
    ej / ec >= 20.0
}

/// IST mode at half flux, weak inductive shunt (E_L > E_J):
/// omega = sqrt(8 E_C (E_L - E_J)) + E_C E_J / (E_L - E_J),
/// alpha = (E_C / 2) E_J / (E_L - E_J).
pub fn ist_modes(ec: f64, ej: f64, el: f64) -> Result<(f64, f64)> {
    if ec <= 0.0 || ej < 0.0 || el <= 0.0 {
        return Err(CzError::ParameterDomain(format!(
            "IST energies out of domain: ec = {ec}, ej = {ej}, el = {el}"
        )));
    }
    if el <= ej {
        return Err(CzError::SingleWell { el, ej });
    }
    let dl = el - ej;
    let omega = (8.0 * ec * dl).sqrt() + ec * ej / dl;
    let alpha = 0.5 * ec * ej / dl;
    Ok((omega, alpha))
}

/// Capacitive coupling strengths from the circuit closed forms.
///
/// g_12 carries both the direct C_12 term and the C_1c C_2c / C_c bridge;
/// every g includes the zero-point-fluctuation factor (8 E_C / E_J)^(-1/4)
/// of the two modes it couples. All three come out negative.
pub fn coupling_strengths(p: &CircuitParams) -> Result<CouplingStrengths> {
    p.validate()?;
    if p.c_c == 0.0 {
        return Err(CzError::ParameterDomain(
            "c_c must be nonzero for the bridge term".into(),
        ));
    }
    let ej_1 = tunable_ej(p.ej_sum_1, p.d_1, p.flux_1)?;
    let ej_c = tunable_ej(p.ej_sum_c, p.d_c, p.flux_c)?;
    let dl = p.el_2 - p.ej_2;

    // (8 E_C / E_J)^(-1/4) per mode; the IST uses E_L - E_J in place of E_J.
    let zeta_1 = (8.0 * p.ec_1 / ej_1).powf(-0.25);
    let zeta_2 = (8.0 * p.ec_2 / dl).powf(-0.25);
    let zeta_c = (8.0 * p.ec_c / ej_c).powf(-0.25);

    let k = 4.0 * e2_over_h_ff_ghz(); // (2e)^2 / (h * fF) in GHz

    let g_12 = -k * (p.c_12 + p.c_1c * p.c_2c / p.c_c) / (2.0 * p.c_1 * p.c_2) * zeta_1 * zeta_2;
    let g_1c = -k * p.c_1c / (2.0 * p.c_1 * p.c_c) * zeta_1 * zeta_c;
    let g_2c = -k * p.c_2c / (2.0 * p.c_2 * p.c_c) * zeta_2 * zeta_c;

    Ok(CouplingStrengths { g_12, g_1c, g_2c })
}

/// Full circuit-to-mode pathway: tunable E_J, transmon/IST closed forms, and
/// capacitive couplings, assembled into a [`ModeParams`].
pub fn derive_mode_params(p: &CircuitParams) -> Result<ModeParams> {
    p.validate()?;
    let ej_1 = tunable_ej(p.ej_sum_1, p.d_1, p.flux_1)?;
    let ej_c = tunable_ej(p.ej_sum_c, p.d_c, p.flux_c)?;
    let (omega_1, alpha_1) = transmon_modes(p.ec_1, ej_1)?;
    let (omega_c, alpha_c) = transmon_modes(p.ec_c, ej_c)?;
    let (omega_2, alpha_2) = ist_modes(p.ec_2, p.ej_2, p.el_2)?;
    let g = coupling_strengths(p)?;
    let (g_12, g_1c, g_2c) = g.magnitudes();
    Ok(ModeParams {
        omega_1,
        omega_2,
        omega_c,
        alpha_1,
        alpha_2,
        alpha_c,
        g_12,
        g_1c,
        g_2c,
    })
}

/// Solve the bridging capacitances so the derived coupling magnitudes hit the
/// given targets (GHz). Bisection on each capacitance; g_1c and g_2c are
/// monotone in c_1c and c_2c, and g_12 is monotone in c_12 once those two are
/// fixed.
pub fn fit_coupling_capacitances(
    template: &CircuitParams,
    g_12_target: f64,
    g_1c_target: f64,
    g_2c_target: f64,
) -> Result<CircuitParams> {
    let mut p = template.clone();

    let bisect = |f: &dyn Fn(f64) -> Result<f64>, target: f64| -> Result<f64> {
        let (mut lo, mut hi) = (0.0_f64, 200.0_f64);
        if f(hi)? < target {
            return Err(CzError::ParameterDomain(format!(
                "coupling target {target} GHz unreachable below 200 fF"
            )));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid)? < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    };

    {
        let tpl = p.clone();
        p.c_1c = bisect(
            &|c| {
                let mut q = tpl.clone();
                q.c_1c = c;
                Ok(coupling_strengths(&q)?.g_1c.abs())
            },
            g_1c_target,
        )?;
    }
    {
        let tpl = p.clone();
        p.c_2c = bisect(
            &|c| {
                let mut q = tpl.clone();
                q.c_2c = c;
                Ok(coupling_strengths(&q)?.g_2c.abs())
            },
            g_2c_target,
        )?;
    }
    {
        let tpl = p.clone();
        // The bridge term alone may already exceed the g_12 target; that is a
        // geometry problem the caller has to solve with larger self-capacitances.
        let base = {
            let mut q = tpl.clone();
            q.c_12 = 0.0;
            coupling_strengths(&q)?.g_12.abs()
        };
        if base > g_12_target {
            return Err(CzError::ParameterDomain(format!(
                "bridge term alone gives |g_12| = {base:.4} GHz above the {g_12_target} GHz target"
            )));
        }
        p.c_12 = bisect(
            &|c| {
                let mut q = tpl.clone();
                q.c_12 = c;
                Ok(coupling_strengths(&q)?.g_12.abs())
            },
            g_12_target,
        )?;
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn table_i_circuit() -> CircuitParams {
        CircuitParams {
            ec_1: 0.221,
            ec_2: 0.228,
            ec_c: 0.200,
            ej_sum_1: 14.0,
            ej_sum_c: 20.3,
            d_1: 0.0,
            d_c: 0.0,
            ej_2: 14.9,
            el_2: 24.5,
            flux_1: 0.0,
            flux_2: 0.5,
            flux_c: 0.0,
            c_1: 87.6,
            c_2: 84.9,
            c_c: 96.8,
            c_1c: 3.5,
            c_2c: 3.5,
            c_12: 0.25,
        }
    }

    #[test]
    fn tunable_ej_closed_form() {
        assert_relative_eq!(tunable_ej(14.0, 0.0, 0.0).unwrap(), 14.0);
        // symmetric junctions fully suppressed at half flux
        assert!(tunable_ej(14.0, 0.0, 0.5).unwrap().abs() < 1e-12);
        // frozen arbitrary-precision value of 14*sqrt(0.5 + 0.25*0.5)
        assert_relative_eq!(
            tunable_ej(14.0, 0.5, 0.25).unwrap(),
            11.067_971_810_589_328,
            max_relative = 1e-14
        );
    }

    #[test]
    fn tunable_ej_rejects_bad_inputs() {
        assert!(tunable_ej(-1.0, 0.0, 0.0).is_err());
        assert!(tunable_ej(14.0, 1.5, 0.0).is_err());
    }

    #[test]
    fn tunable_ej_range() {
        for flux in [0.0, 0.1, 0.33, 0.5, 0.77, 1.0] {
            let v = tunable_ej(14.0, 0.3, flux).unwrap();
            assert!(v <= 14.0 + 1e-12 && v >= 0.3 * 14.0 - 1e-12);
        }
    }

    #[test]
    fn transmon_closed_form() {
        let (w, a) = transmon_modes(0.221, 14.0).unwrap();
        // frozen arbitrary-precision value; note this does NOT reproduce the
        // 4.50 GHz quoted elsewhere for the same energies.
        assert_relative_eq!(w, 4.754_138_189_035_557, max_relative = 1e-14);
        assert_relative_eq!(a, -0.221);
        // backed-out work-point E_J reproducing 4.50 GHz
        let (w2, _) = transmon_modes(0.221, 12.606_244_909_502_262).unwrap();
        assert_relative_eq!(w2, 4.50, max_relative = 1e-12);
        assert!(transmon_modes(0.0, 14.0).is_err());
    }

    #[test]
    fn ist_closed_form() {
        let (w, a) = ist_modes(0.228, 14.9, 24.5).unwrap();
        // frozen arbitrary-precision values of the closed forms
        assert_relative_eq!(w, 4.538_417_985_799_047, max_relative = 1e-14);
        assert_relative_eq!(a, 0.176_937_5, max_relative = 1e-14);
        // pure harmonic oscillator when the junction vanishes
        let (w0, a0) = ist_modes(0.228, 0.0, 24.5).unwrap();
        assert_relative_eq!(w0, (8.0_f64 * 0.228 * 24.5).sqrt(), max_relative = 1e-14);
        assert_eq!(a0, 0.0);
        assert!(matches!(
            ist_modes(0.228, 25.0, 24.5),
            Err(CzError::SingleWell { .. })
        ));
    }

    #[test]
    fn ist_alpha_positive() {
        for ej in [0.1, 5.0, 14.9, 24.0] {
            let (_, a) = ist_modes(0.228, ej, 24.5).unwrap();
            assert!(a > 0.0);
        }
    }

    #[test]
    fn coupling_zero_paths() {
        let mut p = table_i_circuit();
        p.c_12 = 0.0;
        p.c_1c = 0.0;
        let g = coupling_strengths(&p).unwrap();
        assert_eq!(g.g_12, 0.0);
        assert_eq!(g.g_1c, 0.0);
    }

    #[test]
    fn coupling_symmetric_device() {
        let mut p = table_i_circuit();
        // make mode 2 an exact copy of mode 1 in its zpf factor and wiring
        p.ec_2 = p.ec_1;
        p.el_2 = p.ej_2 + tunable_ej(p.ej_sum_1, p.d_1, p.flux_1).unwrap();
        p.c_2 = p.c_1;
        p.c_2c = p.c_1c;
        let g = coupling_strengths(&p).unwrap();
        assert_relative_eq!(g.g_1c, g.g_2c, max_relative = 1e-12);
    }

    #[test]
    fn coupling_signs_negative() {
        let g = coupling_strengths(&table_i_circuit()).unwrap();
        assert!(g.g_12 < 0.0 && g.g_1c < 0.0 && g.g_2c < 0.0);
        assert_eq!(CouplingStrengths::SIGN, -1.0);
    }

    #[test]
    fn coupling_linear_in_bridging_capacitance() {
        let p = table_i_circuit();
        let g0 = coupling_strengths(&p).unwrap().g_1c;
        let mut p2 = p.clone();
        p2.c_1c *= 2.0;
        let g2 = coupling_strengths(&p2).unwrap().g_1c;
        assert_relative_eq!(g2, 2.0 * g0, max_relative = 1e-12);
    }

    #[test]
    fn fixture_hits_paper_coupling_targets() {
        let p = fit_coupling_capacitances(&table_i_circuit(), 0.010, 0.100, 0.100).unwrap();
        let g = coupling_strengths(&p).unwrap();
        let (g12, g1c, g2c) = g.magnitudes();
        assert_relative_eq!(g12, 0.010, max_relative = 1e-2);
        assert_relative_eq!(g1c, 0.100, max_relative = 1e-2);
        assert_relative_eq!(g2c, 0.100, max_relative = 1e-2);
    }

    #[test]
    fn tunable_ej_periodic_and_even() {
        for flux in [0.03, 0.21, 0.4, 0.49] {
            let a = tunable_ej(14.0, 0.3, flux).unwrap();
            assert_relative_eq!(a, tunable_ej(14.0, 0.3, flux + 1.0).unwrap(), max_relative = 1e-12);
            assert_relative_eq!(a, tunable_ej(14.0, 0.3, -flux).unwrap(), max_relative = 1e-12);
        }
    }

    #[test]
    fn mode_monotonicity() {
        let (w_lo, _) = transmon_modes(0.221, 12.0).unwrap();
        let (w_hi, _) = transmon_modes(0.221, 14.0).unwrap();
        assert!(w_hi > w_lo);
        let (_, a_lo) = ist_modes(0.228, 10.0, 24.5).unwrap();
        let (_, a_hi) = ist_modes(0.228, 14.9, 24.5).unwrap();
        assert!(a_hi > a_lo);
    }

    #[test]
    fn derive_mode_params_pathway() {
        let m = derive_mode_params(&table_i_circuit()).unwrap();
        m.validate().unwrap();
        assert!(m.alpha_1 < 0.0 && m.alpha_2 > 0.0 && m.alpha_c < 0.0);
        // documented discrepancy against the quoted 4.50 GHz
        assert_relative_eq!(m.omega_1, 4.754_138_189_035_557, max_relative = 1e-12);
    }
}
