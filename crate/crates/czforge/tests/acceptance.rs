//! Acceptance gate: one pass/fail line per criterion, executed sequentially
//! so the single-threaded runtime measurement of the first criterion is not
//! polluted by sibling tests.

use czforge::dynamics::{propagate, propagate_block_real};
use czforge::experiments::{
    run_scenario, DeviceSection, ExperimentConfig, PulseSection, RunOptions, RunSection,
    ScenarioSection, SpectatorSection,
};
use czforge::gateval::{avg_gate_fidelity, conditional_phase, cost_from, cz_ideal};
use czforge::model::{build, Coupling, CouplingForm, Mode};
use czforge::quantize::{ist_modes, transmon_modes, tunable_ej, ModeParams};
use czforge::TWO_PI;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn table_i_modes() -> ModeParams {
    ModeParams {
        omega_1: 4.50,
        omega_2: 4.25,
        omega_c: 5.50,
        alpha_1: -0.250,
        alpha_2: 0.250,
        alpha_c: -0.200,
        g_12: 0.010,
        g_1c: 0.100,
        g_2c: 0.100,
    }
}

fn base_config(scenario: &str, out_dir: &str) -> ExperimentConfig {
    ExperimentConfig {
        device: DeviceSection {
            circuit: None,
            modes: Some(table_i_modes()),
        },
        pulse: PulseSection {
            // sigma 1 ns leaves a ~1e-3 ramp-nonadiabaticity leakage floor;
            // 2 ns ramps put the optimum three orders below it
            sigma: 2.0,
            ..Default::default()
        },
        scenario: ScenarioSection {
            name: scenario.into(),
            delta_mhz: None,
            hold_range: None,
            hold_points: None,
            pulse_params: None,
            spectator: SpectatorSection::default(),
        },
        run: RunSection {
            out_dir: out_dir.into(),
            ..Default::default()
        },
    }
}

fn run(cfg: &ExperimentConfig) -> Result<(), String> {
    let raw = serde_json::to_vec(cfg).map_err(|e| e.to_string())?;
    let outcome =
        run_scenario(cfg, &raw, &RunOptions::default()).map_err(|e| e.to_string())?;
    if !outcome.converged {
        return Err("optimization did not converge".into());
    }
    Ok(())
}

fn read_json(path: &std::path::Path) -> Result<serde_json::Value, String> {
    let s = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&s).map_err(|e| e.to_string())
}

fn field(v: &serde_json::Value, path: &[&str]) -> Result<f64, String> {
    let mut cur = v;
    for p in path {
        cur = &cur[p];
    }
    cur.as_f64().ok_or_else(|| format!("missing field {path:?}"))
}

fn criterion_1() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = base_config("cz-demo", &dir.path().display().to_string());
    cfg.run.parallelism = Some(1);
    let t0 = Instant::now();
    run(&cfg)?;
    let elapsed = t0.elapsed().as_secs_f64();

    let report = read_json(&dir.path().join("cz-demo.report.json"))?;
    let fidelity = field(&report, &["report", "fidelity"])?;
    let eps_leak = field(&report, &["report", "eps_leak"])?;
    let eps_swap = field(&report, &["report", "eps_swap"])?;
    let t_hold = field(&report, &["pulse_params", "t_hold"])?;
    let dt = field(&report, &["report", "dt"])?;
    let defect = field(&report, &["report", "unitarity_defect"])?;
    let error = 1.0 - fidelity;

    if error >= 1e-4 {
        return Err(format!("gate error {error:.3e} >= 1e-4"));
    }
    if eps_leak >= 1e-4 || eps_swap >= 1e-4 {
        return Err(format!("eps_leak {eps_leak:.3e} / eps_swap {eps_swap:.3e} >= 1e-4"));
    }
    if !(12.0..=30.0).contains(&t_hold) {
        return Err(format!("hold time {t_hold:.2} ns outside [12, 30]"));
    }
    // the schedule rounds t_gate to a whole number of steps
    if (dt - 0.01).abs() > 1e-4 {
        return Err(format!("reported dt {dt} is not 0.01 ns"));
    }
    if defect >= 1e-9 {
        return Err(format!("unitarity defect {defect:.3e} >= 1e-9"));
    }
    if elapsed >= 600.0 {
        return Err(format!("single-threaded runtime {elapsed:.0} s >= 600 s"));
    }
    Ok(format!(
        "error {error:.2e}, leak {eps_leak:.2e}, swap {eps_swap:.2e}, hold {t_hold:.2} ns, {elapsed:.0} s"
    ))
}

/// Time of the first population minimum of the given bare state under the
/// constant built Hamiltonian, refined parabolically; the oscillation period
/// is twice that.
fn half_period(modes: &[Mode], g: f64, span: f64) -> Result<f64, String> {
    let model = build(modes, &[Coupling { a: 0, b: 1, g }], CouplingForm::Rwa)
        .map_err(|e| e.to_string())?;
    let idx = model.index_of(&[1, 1]).ok_or("no |11> basis state")?;
    let h = model.matrix();
    let dim = model.dim();
    let mut initial = DMatrix::<Complex64>::zeros(dim, 1);
    initial[(idx, 0)] = Complex64::new(1.0, 0.0);

    let dt = 0.02;
    let mut ps: Vec<f64> = vec![1.0];
    let mut observer = |_k: usize, _t: f64, b: &DMatrix<Complex64>| {
        ps.push(b[(idx, 0)].norm_sqr());
    };
    propagate_block_real(|_| h.clone(), span, dt, &initial, Some(&mut observer))
        .map_err(|e| e.to_string())?;

    for i in 1..ps.len() - 1 {
        if ps[i] <= ps[i - 1] && ps[i] <= ps[i + 1] && ps[i] < 0.2 {
            // parabola through the three samples around the minimum
            let (a, b, c) = (ps[i - 1], ps[i], ps[i + 1]);
            let denom = a - 2.0 * b + c;
            let shift = if denom.abs() > 1e-300 { 0.5 * (a - c) / denom } else { 0.0 };
            return Ok((i as f64 + shift) * dt);
        }
    }
    Err("no population minimum found in the sampled window".into())
}

fn criterion_2() -> Result<String, String> {
    // engineered resonance: opposite anharmonicities, E110 = E200 = E020
    let engineered = [
        Mode { omega: 4.50, alpha: -0.250, levels: 3 },
        Mode { omega: 4.25, alpha: 0.250, levels: 3 },
    ];
    // single path: |020> pushed away by a same-sign anharmonicity
    let single = [
        Mode { omega: 4.50, alpha: -0.250, levels: 3 },
        Mode { omega: 4.25, alpha: -0.250, levels: 3 },
    ];
    let g = 0.010;
    let t_eng = 2.0 * half_period(&engineered, g, 80.0)?;
    let t_single = 2.0 * half_period(&single, g, 110.0)?;
    let ratio = t_eng / t_single;
    let target = 0.5_f64.sqrt();
    if (ratio / target - 1.0).abs() >= 0.01 {
        return Err(format!(
            "period ratio {ratio:.5} deviates from 1/sqrt(2) = {target:.5} by >= 1%"
        ));
    }
    Ok(format!(
        "periods {t_eng:.2} / {t_single:.2} ns, ratio {ratio:.4} vs 0.7071"
    ))
}

fn criterion_3() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = base_config("sweep-delta", &dir.path().display().to_string());
    cfg.scenario.delta_mhz = Some(vec![0.0, 10.0, 20.0]);
    run(&cfg)?;

    let csv = std::fs::read_to_string(dir.path().join("sweep-delta.sweep.csv"))
        .map_err(|e| e.to_string())?;
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    for line in csv.lines().skip(2) {
        let f: Vec<&str> = line.split(',').collect();
        let delta: f64 = f[0].parse().map_err(|e| format!("{e}"))?;
        let t_gate: f64 = f[2].parse().map_err(|e| format!("{e}"))?;
        let fidelity: f64 = f[8].parse().map_err(|e| format!("{e}"))?;
        rows.push((delta, t_gate, 1.0 - fidelity));
    }
    if rows.len() != 3 {
        return Err(format!("expected 3 sweep rows, found {}", rows.len()));
    }
    for (delta, _, err) in &rows {
        if *err >= 1e-4 {
            return Err(format!("delta = {delta} MHz: error {err:.3e} >= 1e-4"));
        }
    }
    for w in rows.windows(2) {
        if w[1].1 <= w[0].1 {
            return Err(format!(
                "duration not increasing: t_gate({}) = {:.3} <= t_gate({}) = {:.3}",
                w[1].0, w[1].1, w[0].0, w[0].1
            ));
        }
    }
    Ok(format!(
        "errors {:.1e}/{:.1e}/{:.1e}, durations {:.2}/{:.2}/{:.2} ns",
        rows[0].2, rows[1].2, rows[2].2, rows[0].1, rows[1].1, rows[2].1
    ))
}

fn criterion_4() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = base_config("spectator", &dir.path().display().to_string());
    run(&cfg)?;

    let report = read_json(&dir.path().join("spectator.report.json"))?;
    let cases = report["cases"].as_array().ok_or("missing cases array")?;
    if cases.len() != 4 {
        return Err(format!("expected 4 spectator cases, found {}", cases.len()));
    }
    let mut worst = 0.0_f64;
    for case in cases {
        let err = case["error"].as_f64().ok_or("missing case error")?;
        if err >= 1e-3 {
            return Err(format!("spectator case {:?}: error {err:.3e} >= 1e-3", case["spectator"]));
        }
        worst = worst.max(err);
    }
    let ratio = field(&report, &["control_vs_isolated_ratio"])?;
    if !(0.5..=2.0).contains(&ratio) {
        return Err(format!("decoupled control / isolated error ratio {ratio:.3} outside [0.5, 2]"));
    }
    Ok(format!("worst case error {worst:.2e}, control ratio {ratio:.3}"))
}

fn criterion_5() -> Result<String, String> {
    let modes = [
        Mode { omega: 4.50, alpha: -0.250, levels: 4 },
        Mode { omega: 4.25, alpha: 0.250, levels: 4 },
        Mode { omega: 5.50, alpha: -0.200, levels: 4 },
    ];
    let couplings = [
        Coupling { a: 0, b: 1, g: 0.010 },
        Coupling { a: 0, b: 2, g: 0.100 },
        Coupling { a: 1, b: 2, g: 0.100 },
    ];
    let m = build(&modes, &couplings, CouplingForm::Rwa).map_err(|e| e.to_string())?;
    let states: Vec<Vec<u8>> = vec![
        vec![0, 0, 0],
        vec![0, 1, 0],
        vec![0, 2, 0],
        vec![1, 0, 0],
        vec![1, 1, 0],
        vec![2, 0, 0],
    ];
    let p = m.project(&states).map_err(|e| e.to_string())?;

    let w = |occ: &[u8]| -> f64 {
        occ.iter()
            .zip(&modes)
            .map(|(&n, md)| {
                let n = n as f64;
                TWO_PI * (md.omega * n + 0.5 * md.alpha * n * (n - 1.0))
            })
            .sum()
    };
    let g = TWO_PI * 0.010;
    let sqrt2_g = g * 2.0_f64.sqrt();
    let mut expected = DMatrix::zeros(6, 6);
    for (k, s) in states.iter().enumerate() {
        expected[(k, k)] = w(s);
    }
    for (i, j, v) in [(1, 3, g), (2, 4, sqrt2_g), (4, 5, sqrt2_g)] {
        expected[(i, j)] = v;
        expected[(j, i)] = v;
    }
    for i in 0..6 {
        for j in 0..6 {
            let (a, b) = (p[(i, j)], expected[(i, j)]);
            let tol = 1e-14 * (1.0 + b.abs());
            if (a - b).abs() > tol {
                return Err(format!("entry ({i}, {j}): {a} != {b}"));
            }
        }
    }
    Ok("6x6 two-excitation block matches entrywise".into())
}

/// Dense exp(A) by Higham scaling and squaring with the order-13 Pade
/// approximant; the reference for the propagator check, deliberately
/// independent of the integrator.
fn expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    let b: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let norm1 = (0..n)
        .map(|c| (0..n).map(|r| a[(r, c)].norm()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    let theta13 = 5.371920351148152;
    let s = if norm1 > theta13 {
        (norm1 / theta13).log2().ceil() as u32
    } else {
        0
    };
    let a = a / Complex64::from(2.0_f64.powi(s as i32));
    let id = DMatrix::<Complex64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let u = &a
        * (&a6
            * (&a6 * Complex64::from(b[13])
                + &a4 * Complex64::from(b[11])
                + &a2 * Complex64::from(b[9]))
            + &a6 * Complex64::from(b[7])
            + &a4 * Complex64::from(b[5])
            + &a2 * Complex64::from(b[3])
            + &id * Complex64::from(b[1]));
    let v = &a6
        * (&a6 * Complex64::from(b[12]) + &a4 * Complex64::from(b[10]) + &a2 * Complex64::from(b[8]))
        + &a6 * Complex64::from(b[6])
        + &a4 * Complex64::from(b[4])
        + &a2 * Complex64::from(b[2])
        + &id * Complex64::from(b[0]);
    let mut f = (&v - &u).lu().solve(&(&v + &u)).expect("pade solve");
    for _ in 0..s {
        f = &f * &f;
    }
    f
}

fn criterion_6() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6f72_6163_6c65);
    let mut worst = 0.0_f64;
    for trial in 0..20 {
        let dim = rng.gen_range(2..=64);
        let raw = DMatrix::<Complex64>::from_fn(dim, dim, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let h = (&raw + raw.adjoint()) * Complex64::from(0.5);

        let t_gate = 1.5;
        let prop = propagate(|_| h.clone(), t_gate, t_gate / 150.0).map_err(|e| e.to_string())?;
        if prop.unitarity_defect >= 1e-9 {
            return Err(format!(
                "trial {trial} (dim {dim}): unitarity defect {:.3e} >= 1e-9",
                prop.unitarity_defect
            ));
        }
        let reference = expm(&(&h * Complex64::new(0.0, -t_gate)));
        let diff = (&prop.matrix - &reference)
            .iter()
            .map(|z| z.norm())
            .fold(0.0_f64, f64::max);
        if diff >= 1e-10 {
            return Err(format!("trial {trial} (dim {dim}): max deviation {diff:.3e} >= 1e-10"));
        }
        worst = worst.max(diff);
    }
    Ok(format!("20 random Hermitian propagators, worst deviation {worst:.1e}"))
}

fn criterion_7() -> Result<String, String> {
    let cz = cz_ideal();
    let id = DMatrix::<Complex64>::identity(4, 4);
    let one = Complex64::new(1.0, 0.0);
    let checks = [
        ("F(CZ, CZ) = 1", avg_gate_fidelity(&cz, &cz) - 1.0),
        ("F(I, CZ) = 0.4", avg_gate_fidelity(&id, &cz) - 0.4),
        (
            "theta(CZ) = pi",
            conditional_phase(&[one, one, one, -one]).map_err(|e| e.to_string())?
                - std::f64::consts::PI,
        ),
        ("cost(ideal CZ) = 0", cost_from(std::f64::consts::PI, 0.0)),
    ];
    for (name, residual) in checks {
        if residual.abs() > 1e-12 {
            return Err(format!("{name} violated by {residual:.3e}"));
        }
    }
    Ok("all four metric identities hold to 1e-12".into())
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

fn criterion_8() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7175_616e_7469_7a65);
    for trial in 0..100 {
        // flux-tunable Josephson energy
        let ej_sum = rng.gen_range(5.0..30.0);
        let d = rng.gen_range(0.0..1.0);
        let flux = rng.gen_range(-1.0..1.0);
        let got = tunable_ej(ej_sum, d, flux).map_err(|e| e.to_string())?;
        let (s, c) = (std::f64::consts::PI * flux).sin_cos();
        let want = (ej_sum * ej_sum * (c * c + d * d * s * s)).sqrt();
        if !rel_close(got, want, 1e-12) {
            return Err(format!("trial {trial}: tunable_ej {got} != {want}"));
        }

        // transmon closed form
        let ec = rng.gen_range(0.1..0.4);
        let ej = rng.gen_range(5.0..30.0);
        let (w, a) = transmon_modes(ec, ej).map_err(|e| e.to_string())?;
        let w_ref = 8.0_f64.sqrt() * (ec * ej).sqrt() - ec;
        if !rel_close(w, w_ref, 1e-12) || a != -ec {
            return Err(format!("trial {trial}: transmon ({w}, {a}) != ({w_ref}, {})", -ec));
        }

        // IST closed form at half flux
        let el = rng.gen_range(5.0..40.0);
        let ej2 = rng.gen_range(0.1..1.0) * el * 0.95;
        let (w2, a2) = ist_modes(ec, ej2, el).map_err(|e| e.to_string())?;
        let dl = el - ej2;
        let w2_ref = 8.0_f64.sqrt() * (ec * dl).sqrt() + (ec / dl) * ej2;
        let a2_ref = ec * ej2 / (2.0 * dl);
        if !rel_close(w2, w2_ref, 1e-12) || !rel_close(a2, a2_ref, 1e-12) {
            return Err(format!(
                "trial {trial}: ist ({w2}, {a2}) != ({w2_ref}, {a2_ref})"
            ));
        }
    }

    // frozen high-precision spot values
    let spot = tunable_ej(14.0, 0.5, 0.25).map_err(|e| e.to_string())?;
    if !rel_close(spot, 11.067_971_810_589_328, 1e-14) {
        return Err(format!("tunable_ej spot value {spot}"));
    }
    let (w_ist, a_ist) = ist_modes(0.228, 14.9, 24.5).map_err(|e| e.to_string())?;
    if !rel_close(w_ist, 4.538_417_985_799_047, 1e-14) || !rel_close(a_ist, 0.176_937_5, 1e-14) {
        return Err(format!("ist spot values ({w_ist}, {a_ist})"));
    }

    // the documented discrepancy: the closed form with the quoted energies
    // does not reproduce the quoted 4.50 GHz
    let (w1, _) = transmon_modes(0.221, 14.0).map_err(|e| e.to_string())?;
    if !rel_close(w1, 4.754_138_189_035_557, 1e-12) {
        return Err(format!("formula value {w1} != 4.754138189035557"));
    }
    if (w1 - 4.50).abs() < 0.2 {
        return Err(format!("expected a visible discrepancy to 4.50 GHz, got {w1}"));
    }
    Ok(format!(
        "100 random inputs match to 1e-12; omega_1 formula gives {w1:.6} GHz vs quoted 4.50"
    ))
}

#[test]
fn acceptance() {
    // nested BLAS threading only slows the small eigenproblems down
    if std::env::var_os("OPENBLAS_NUM_THREADS").is_none() {
        std::env::set_var("OPENBLAS_NUM_THREADS", "1");
    }
    let criteria: [(&str, fn() -> Result<String, String>); 8] = [
        ("fast CZ reproduction", criterion_1),
        ("speedup mechanism", criterion_2),
        ("anharmonicity-offset robustness", criterion_3),
        ("spectator suppression", criterion_4),
        ("structural oracle", criterion_5),
        ("propagator oracle", criterion_6),
        ("metric identities", criterion_7),
        ("quantize closed forms", criterion_8),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {} ({name}): PASS - {detail}", k + 1),
            Err(reason) => {
                failures += 1;
                println!("criterion {} ({name}): FAIL - {reason}", k + 1);
            }
        }
    }
    assert_eq!(failures, 0, "{failures} acceptance criteria failed");
}
