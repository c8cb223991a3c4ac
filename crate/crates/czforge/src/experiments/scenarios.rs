//! Scenario runners behind the CLI: optimize the gate, sweep its knobs,
//! evaluate spectator crosstalk, and dump dressed spectra.
//!
//! Every runner writes deterministic JSON/CSV through [`OutputWriter`];
//! optimization uses a doubled integration step (the cost landscape moves by
//! far less than the tolerances), while all reported gates are re-scored at
//! the configured dt with a half-dt spot check.

use super::lattice::{build_lattice, LatticeCase, C1, LATTICE_CUTOFF, Q1};
use super::output::{config_hash, fmt_f64, OutputWriter};
use super::{
    resolve_device, three_mode_model, BoundsSection, Device,
    ExperimentConfig, Scenario, SpectatorSection,
};
use crate::dynamics::{evolve_states_traced, idle_omegas};
use crate::gateval::{GateContext, GateReport, PulseParams};
use crate::model::{build_with_cutoff, Coupling, CouplingForm, CouplingForm::Full, HamiltonianModel, Mode};
use crate::optimizer::{minimize, OptimizationRun, OptimizerConfig};
use crate::quantize::ModeParams;
use crate::{CzError, Result, TWO_PI};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use std::path::PathBuf;

/// CLI overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<String>,
    pub dt: Option<f64>,
    pub force: bool,
}

/// What the CLI needs to pick an exit code.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    /// False when any optimization hit its iteration cap.
    pub converged: bool,
    pub outputs: Vec<PathBuf>,
}

/// Parallel width: config cap, further capped by CZFORGE_THREADS.
fn pool_width(parallelism: Option<usize>) -> usize {
    let mut w = parallelism.unwrap_or_else(|| {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    });
    if let Ok(s) = std::env::var("CZFORGE_THREADS") {
        if let Ok(n) = s.parse::<usize>() {
            w = w.min(n.max(1));
        }
    }
    w.max(1)
}

/// Run the configured scenario end to end and persist its outputs.
pub fn run_scenario(
    cfg: &ExperimentConfig,
    raw_config: &[u8],
    opts: &RunOptions,
) -> Result<ScenarioOutcome> {
    let mut cfg = cfg.clone();
    if let Some(dir) = &opts.out_dir {
        cfg.run.out_dir = dir.clone();
    }
    if let Some(dt) = opts.dt {
        cfg.run.dt = dt;
    }
    cfg.validate()?;
    let scenario = Scenario::parse(&cfg.scenario.name)?;
    let hash = config_hash(raw_config);
    let mut writer = OutputWriter::new(cfg.run.out_dir.as_ref(), &hash, opts.force)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(pool_width(cfg.run.parallelism))
        .build()
        .map_err(|e| CzError::Config(format!("thread pool: {e}")))?;
    let converged = pool.install(|| match scenario {
        Scenario::CzDemo => run_cz_demo(&cfg, &mut writer),
        Scenario::SweepHold => run_sweep_hold(&cfg, &mut writer),
        Scenario::SweepDelta => run_sweep_delta(&cfg, &mut writer),
        Scenario::Spectator => run_spectator(&cfg, &mut writer),
        Scenario::Optimize => run_optimize(&cfg, &mut writer),
        Scenario::Spectrum => run_spectrum(&cfg, &mut writer),
    })?;
    writer.write_sidecar(scenario.name())?;
    Ok(ScenarioOutcome {
        converged,
        outputs: writer.written().to_vec(),
    })
}

fn comp3() -> [Vec<u8>; 4] {
    [vec![0, 0, 0], vec![0, 1, 0], vec![1, 0, 0], vec![1, 1, 0]]
}

fn three_mode_at_idle(dev: &Device, levels: usize) -> Result<HamiltonianModel> {
    three_mode_model(&dev.modes, dev.qubit_idle, dev.coupler_idle, levels, Full)
}

fn context<'a>(model: &'a HamiltonianModel, dev: &Device, sigma: f64, dt: f64) -> GateContext<'a> {
    GateContext {
        model,
        qubit_mode: 0,
        coupler_mode: 2,
        qubit_idle: dev.qubit_idle,
        coupler_idle: dev.coupler_idle,
        sigma,
        dt,
        comp_labels: comp3(),
    }
}

/// Spread (max - min, angular units) of the three dressed levels nearest
/// the bare E110 energy; proportional to the residual |110>-|B> coupling.
fn manifold_spread_of(model: &HamiltonianModel, omega_q: f64, omega_2: f64) -> f64 {
    let dressed = model.dressed_spectrum();
    let bare = TWO_PI * (omega_q + omega_2);
    let mut nearest: Vec<f64> = dressed.states.iter().map(|s| s.energy).collect();
    nearest.sort_by(|a, b| (a - bare).abs().total_cmp(&(b - bare).abs()));
    let trio = &nearest[..3];
    let hi = trio.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let lo = trio.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    hi - lo
}

/// Qubit-on frequency putting the dressed 110 level on resonance with the
/// bright 200/020 combination at a given coupler-on frequency: the minimizer
/// of the dressed trio spread over the allowed window (golden-section search;
/// the spread is a smooth avoided-crossing gap with a single minimum).
/// `build` maps on-frequencies (omega_q, omega_c) to the model to probe.
fn resonant_qubit_on(
    build: &dyn Fn(f64, f64) -> Result<HamiltonianModel>,
    omega_2: f64,
    omega_c: f64,
    (mut a, mut b): (f64, f64),
) -> Result<(f64, f64)> {
    let phi = 0.5 * (5.0_f64.sqrt() - 1.0);
    let f = |x: f64| -> Result<f64> { Ok(manifold_spread_of(&build(x, omega_c)?, x, omega_2)) };
    let (mut x1, mut x2) = (b - phi * (b - a), a + phi * (b - a));
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    for _ in 0..40 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, f(x)?))
}

/// Candidate starting points: per coupler-on candidate, the resonant
/// qubit-on frequency and a few hold times around one full Rabi cycle of the
/// dressed 110/200/020 splitting (the ramps add a trajectory-dependent share
/// of the rotation, so several offsets are tried).
fn seed_candidates(
    build: &dyn Fn(f64, f64) -> Result<HamiltonianModel>,
    omega_2: f64,
    bounds: &BoundsSection,
) -> Result<Vec<PulseParams>> {
    let (lo, hi) = bounds.omega_c_on;
    let n = 7;
    let mut out = Vec::new();
    for k in 0..n {
        let omega_c = lo + (hi - lo) * (k as f64 + 0.5) / n as f64;
        let (omega_q, split) = resonant_qubit_on(build, omega_2, omega_c, bounds.omega_q_on)?;
        if split <= 0.0 {
            continue;
        }
        let t_cycle = TWO_PI / split;
        for off in [-1.0, 1.0, 3.0] {
            let t_hold = t_cycle + off;
            if t_hold < bounds.t_hold.0 || t_hold > bounds.t_hold.1 {
                continue;
            }
            out.push(PulseParams { t_hold, omega_c_on: omega_c, omega_q_on: omega_q });
        }
    }
    Ok(out)
}

/// Small-simplex, tight-tolerance polish around an explicit start; the
/// simplex is too small to migrate between hold-time basins.
fn polish_stage(
    ctx: &GateContext,
    bounds: &BoundsSection,
    initial: Vec<f64>,
    max_iters: usize,
) -> Result<OptimizationRun> {
    let oc = OptimizerConfig {
        initial,
        bounds: vec![bounds.t_hold, bounds.omega_c_on, bounds.omega_q_on],
        simplex_steps: vec![0.05, 2e-3, 2e-4],
        tol_f: 1e-9,
        tol_x: vec![0.01, 1e-4, 1e-4],
        max_iters,
    };
    minimize(|x| ctx.cost(&PulseParams::from_vec(x)), &oc)
}

/// Two-stage simplex: a broad search on a cheap step, then a polish with a
/// small simplex and tight tolerances. Traces are concatenated.
fn optimize_gate(
    broad: &GateContext,
    polish: &GateContext,
    bounds: &BoundsSection,
    seed: PulseParams,
    max_iters: usize,
) -> Result<OptimizationRun> {
    let oc = OptimizerConfig {
        initial: seed.to_vec(),
        bounds: vec![bounds.t_hold, bounds.omega_c_on, bounds.omega_q_on],
        simplex_steps: vec![0.5, 0.02, 0.002],
        tol_f: 1e-8,
        tol_x: vec![0.05, 5e-4, 5e-5],
        max_iters,
    };
    let stage1 = minimize(|x| broad.cost(&PulseParams::from_vec(x)), &oc)?;
    let stage2 = polish_stage(polish, bounds, stage1.best_params.clone(), max_iters / 2)?;
    let mut trace = stage1.trace;
    trace.extend(stage2.trace);
    Ok(OptimizationRun {
        best_params: stage2.best_params,
        best_cost: stage2.best_cost,
        iterations: stage1.iterations + stage2.iterations,
        converged: stage1.converged && stage2.converged,
        trace,
    })
}

/// Half-dt spot check of the reported errors at the optimum.
#[derive(Debug, Clone, Serialize)]
struct HalfDtCheck {
    dt: f64,
    half_dt: f64,
    errors: [f64; 3],
    half_dt_errors: [f64; 3],
    max_rel_diff: f64,
    ok: bool,
}

fn error_triple(r: &GateReport) -> [f64; 3] {
    [r.eps_leak, r.eps_swap, 1.0 - r.fidelity]
}

fn half_dt_check(ctx: &GateContext, p: &PulseParams, report: &GateReport) -> Result<HalfDtCheck> {
    let mut half_ctx = ctx.clone();
    half_ctx.dt = ctx.dt / 2.0;
    let half = half_ctx.report(p)?;
    let a = error_triple(report);
    let b = error_triple(&half);
    let max_rel_diff = a
        .iter()
        .zip(&b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-8))
        .fold(0.0_f64, f64::max);
    Ok(HalfDtCheck {
        dt: report.dt,
        half_dt: half.dt,
        errors: a,
        half_dt_errors: b,
        max_rel_diff,
        ok: max_rel_diff < 0.10,
    })
}

struct OptimizedGate {
    params: PulseParams,
    run: OptimizationRun,
    report: GateReport,
    half_dt: HalfDtCheck,
}

/// Optimize on cheapened steps (4x dt broad, 2x dt polish), then score the
/// winner at the configured dt.
fn optimize_and_score(
    dev: &Device,
    model: &HamiltonianModel,
    cfg: &ExperimentConfig,
) -> Result<OptimizedGate> {
    let broad = context(model, dev, cfg.pulse.sigma, 4.0 * cfg.run.dt);
    let build = |wq: f64, wc: f64| {
        three_mode_model(&dev.modes, wq, wc, cfg.run.levels, Full)
    };
    let seeds = seed_candidates(&build, dev.modes.omega_2, &cfg.pulse.bounds)?;
    let scored: Vec<(PulseParams, f64)> = seeds
        .into_par_iter()
        .map(|p| {
            let c = broad.cost(&p);
            (p, c)
        })
        .collect();
    let seed = scored
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(p, _)| p)
        .ok_or_else(|| CzError::Config("no usable seed candidate".into()))?;
    let polish = context(model, dev, cfg.pulse.sigma, 2.0 * cfg.run.dt);
    let run = optimize_gate(&broad, &polish, &cfg.pulse.bounds, seed, cfg.run.max_iters)?;
    score_at_fine_dt(dev, model, cfg, run)
}

/// Local re-optimization around an explicit start: polish stage only, with
/// the hold-time window clamped to the start's neighborhood, so the result
/// stays in the start's basin.
fn optimize_and_score_from(
    dev: &Device,
    model: &HamiltonianModel,
    cfg: &ExperimentConfig,
    seed: PulseParams,
) -> Result<OptimizedGate> {
    let polish = context(model, dev, cfg.pulse.sigma, 2.0 * cfg.run.dt);
    let mut bounds = cfg.pulse.bounds.clone();
    bounds.t_hold.0 = bounds.t_hold.0.max(seed.t_hold - 2.0);
    bounds.t_hold.1 = bounds.t_hold.1.min(seed.t_hold + 2.0);
    let run = polish_stage(&polish, &bounds, seed.to_vec(), cfg.run.max_iters / 2)?;
    score_at_fine_dt(dev, model, cfg, run)
}

fn score_at_fine_dt(
    dev: &Device,
    model: &HamiltonianModel,
    cfg: &ExperimentConfig,
    run: OptimizationRun,
) -> Result<OptimizedGate> {
    let params = PulseParams::from_vec(&run.best_params);
    let fine = context(model, dev, cfg.pulse.sigma, cfg.run.dt);
    let report = fine.report(&params)?;
    let half_dt = half_dt_check(&fine, &params, &report)?;
    Ok(OptimizedGate { params, run, report, half_dt })
}

fn optimization_summary(run: &OptimizationRun) -> serde_json::Value {
    json!({
        "iterations": run.iterations,
        "evaluations": run.trace.len(),
        "best_cost": run.best_cost,
        "converged": run.converged,
    })
}

const SWEEP_HEADER: [&str; 6] = ["t_hold", "eps_leak", "eps_swap", "theta", "fidelity", "cost"];

fn sweep_row(t: f64, r: Option<&GateReport>) -> Vec<String> {
    match r {
        Some(r) => vec![
            fmt_f64(t),
            fmt_f64(r.eps_leak),
            fmt_f64(r.eps_swap),
            fmt_f64(r.theta),
            fmt_f64(r.fidelity),
            fmt_f64(r.cost),
        ],
        None => {
            let mut row = vec![fmt_f64(t)];
            row.extend(std::iter::repeat(fmt_f64(f64::NAN)).take(5));
            row
        }
    }
}

/// Score the gate across a hold-time window at fixed frequencies; points
/// where the phase is undefined become NaN rows instead of aborting.
fn hold_sweep(
    ctx: &GateContext,
    params: &PulseParams,
    range: (f64, f64),
    points: usize,
) -> Vec<Vec<String>> {
    let (lo, hi) = range;
    let points = points.max(2);
    let ts: Vec<f64> = (0..points)
        .map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64)
        .collect();
    ts.into_par_iter()
        .map(|t| {
            let p = PulseParams { t_hold: t, ..*params };
            sweep_row(t, ctx.report(&p).ok().as_ref())
        })
        .collect()
}

fn default_hold_range(cfg: &ExperimentConfig, t_opt: f64) -> (f64, f64) {
    cfg.scenario
        .hold_range
        .unwrap_or(((t_opt - 4.0).max(1.0), t_opt + 4.0))
}

/// Per-step populations of the |11> input over the 110/200/020 manifold.
fn write_timeseries(
    writer: &mut OutputWriter,
    name: &str,
    ctx: &GateContext,
    params: &PulseParams,
) -> Result<()> {
    let schedule = ctx.schedule(params)?;
    let dressed = ctx
        .model
        .dressed_spectrum_at(&idle_omegas(ctx.model, &schedule));
    let track = [vec![1u8, 1, 0], vec![2, 0, 0], vec![0, 2, 0]];
    let vectors: Vec<_> = track
        .iter()
        .map(|l| dressed.require(l).map(|s| s.vector.clone()))
        .collect::<Result<_>>()?;
    let mut rows: Vec<Vec<String>> = Vec::new();
    {
        let mut observer = |_k: usize, t: f64, block: &nalgebra::DMatrix<num_complex::Complex64>| {
            let psi = block.column(3);
            let mut row = vec![fmt_f64(t)];
            let mut total = 0.0;
            for v in &vectors {
                let mut a = num_complex::Complex64::new(0.0, 0.0);
                for (r, x) in v.iter().enumerate() {
                    a += psi[r] * *x;
                }
                let p = a.norm_sqr();
                total += p;
                row.push(fmt_f64(p));
            }
            row.push(fmt_f64((1.0 - total).max(0.0)));
            rows.push(row);
        };
        evolve_states_traced(ctx.model, &schedule, &ctx.comp_labels.to_vec(), Some(&mut observer))?;
    }
    writer.write_csv(name, &["t", "p110", "p200", "p020", "p_other"], &rows)?;
    Ok(())
}

fn device_summary(dev: &Device) -> serde_json::Value {
    json!({
        "modes": dev.modes,
        "qubit_idle": dev.qubit_idle,
        "coupler_idle": dev.coupler_idle,
        "work_frequency": dev.omega_work,
    })
}

fn run_cz_demo(cfg: &ExperimentConfig, writer: &mut OutputWriter) -> Result<bool> {
    let dev = resolve_device(cfg)?;
    let model = three_mode_at_idle(&dev, cfg.run.levels)?;
    let og = optimize_and_score(&dev, &model, cfg)?;

    let fine = context(&model, &dev, cfg.pulse.sigma, cfg.run.dt);
    let range = default_hold_range(cfg, og.params.t_hold);
    let points = cfg.scenario.hold_points.unwrap_or(25);
    let rows = hold_sweep(&fine, &og.params, range, points);
    writer.write_csv("cz-demo.sweep.csv", &SWEEP_HEADER, &rows)?;

    if cfg.run.timeseries {
        write_timeseries(writer, "cz-demo.timeseries.csv", &fine, &og.params)?;
    }
    writer.write_json(
        "cz-demo.report.json",
        &json!({
            "config_hash": writer.hash(),
            "device": device_summary(&dev),
            "pulse_params": og.params,
            "optimization": optimization_summary(&og.run),
            "report": og.report,
            "half_dt_check": og.half_dt,
        }),
    )?;
    Ok(og.run.converged)
}

fn run_optimize(cfg: &ExperimentConfig, writer: &mut OutputWriter) -> Result<bool> {
    let dev = resolve_device(cfg)?;
    let model = three_mode_at_idle(&dev, cfg.run.levels)?;
    let og = optimize_and_score(&dev, &model, cfg)?;

    let rows: Vec<Vec<String>> = og
        .run
        .trace
        .iter()
        .enumerate()
        .map(|(k, (p, c))| {
            vec![
                k.to_string(),
                fmt_f64(p[0]),
                fmt_f64(p[1]),
                fmt_f64(p[2]),
                fmt_f64(*c),
            ]
        })
        .collect();
    writer.write_csv(
        "optimize.trace.csv",
        &["evaluation", "t_hold", "omega_c_on", "omega_q_on", "cost"],
        &rows,
    )?;
    if cfg.run.timeseries {
        let fine = context(&model, &dev, cfg.pulse.sigma, cfg.run.dt);
        write_timeseries(writer, "optimize.timeseries.csv", &fine, &og.params)?;
    }
    writer.write_json(
        "optimize.report.json",
        &json!({
            "config_hash": writer.hash(),
            "device": device_summary(&dev),
            "pulse_params": og.params,
            "optimization": optimization_summary(&og.run),
            "report": og.report,
            "half_dt_check": og.half_dt,
        }),
    )?;
    Ok(og.run.converged)
}

fn run_sweep_hold(cfg: &ExperimentConfig, writer: &mut OutputWriter) -> Result<bool> {
    let dev = resolve_device(cfg)?;
    let model = three_mode_at_idle(&dev, cfg.run.levels)?;
    let (params, optimization, report, half_dt, converged) =
        match cfg.scenario.pulse_params {
            Some(p) => {
                let fine = context(&model, &dev, cfg.pulse.sigma, cfg.run.dt);
                let report = fine.report(&p)?;
                let half = half_dt_check(&fine, &p, &report)?;
                (p, serde_json::Value::Null, report, half, true)
            }
            None => {
                let og = optimize_and_score(&dev, &model, cfg)?;
                let converged = og.run.converged;
                (
                    og.params,
                    optimization_summary(&og.run),
                    og.report,
                    og.half_dt,
                    converged,
                )
            }
        };

    let fine = context(&model, &dev, cfg.pulse.sigma, cfg.run.dt);
    let range = default_hold_range(cfg, params.t_hold);
    let points = cfg.scenario.hold_points.unwrap_or(41);
    let rows = hold_sweep(&fine, &params, range, points);
    writer.write_csv("sweep-hold.sweep.csv", &SWEEP_HEADER, &rows)?;
    writer.write_json(
        "sweep-hold.report.json",
        &json!({
            "config_hash": writer.hash(),
            "device": device_summary(&dev),
            "pulse_params": params,
            "optimization": optimization,
            "report": report,
            "half_dt_check": half_dt,
        }),
    )?;
    Ok(converged)
}

fn modes_with_delta(m: &ModeParams, delta_mhz: f64) -> ModeParams {
    ModeParams {
        alpha_2: m.alpha_2 - delta_mhz / 1000.0,
        ..m.clone()
    }
}

fn run_sweep_delta(cfg: &ExperimentConfig, writer: &mut OutputWriter) -> Result<bool> {
    let mut deltas = cfg
        .scenario
        .delta_mhz
        .clone()
        .unwrap_or_else(|| vec![0.0, 10.0, 20.0]);
    deltas.sort_by(f64::total_cmp);

    // ascending, each offset warm-started from the previous optimum so the
    // reported durations all refer to the same operating basin
    let mut per_delta: Vec<(f64, OptimizedGate)> = Vec::with_capacity(deltas.len());
    let mut prev: Option<PulseParams> = None;
    for &d in &deltas {
        let mut dcfg = cfg.clone();
        dcfg.device.modes = Some(modes_with_delta(&cfg.device.resolve()?, d));
        dcfg.device.circuit = None;
        let dev = resolve_device(&dcfg)?;
        let model = three_mode_at_idle(&dev, dcfg.run.levels)?;
        let og = match prev {
            None => optimize_and_score(&dev, &model, &dcfg)?,
            Some(seed) => optimize_and_score_from(&dev, &model, &dcfg, seed)?,
        };
        prev = Some(og.params);
        per_delta.push((d, og));
    }

    let rows: Vec<Vec<String>> = per_delta
        .iter()
        .map(|(d, og)| {
            vec![
                fmt_f64(*d),
                fmt_f64(og.params.t_hold),
                fmt_f64(og.report.t_gate),
                fmt_f64(og.params.omega_c_on),
                fmt_f64(og.params.omega_q_on),
                fmt_f64(og.report.eps_leak),
                fmt_f64(og.report.eps_swap),
                fmt_f64(og.report.theta),
                fmt_f64(og.report.fidelity),
                fmt_f64(og.report.cost),
            ]
        })
        .collect();
    writer.write_csv(
        "sweep-delta.sweep.csv",
        &[
            "delta_mhz", "t_hold", "t_gate", "omega_c_on", "omega_q_on", "eps_leak",
            "eps_swap", "theta", "fidelity", "cost",
        ],
        &rows,
    )?;
    writer.write_json(
        "sweep-delta.report.json",
        &json!({
            "config_hash": writer.hash(),
            "per_delta": per_delta.iter().map(|(d, og)| json!({
                "delta_mhz": d,
                "pulse_params": og.params,
                "optimization": optimization_summary(&og.run),
                "report": og.report,
                "half_dt_check": og.half_dt,
            })).collect::<Vec<_>>(),
        }),
    )?;

    // larger offsets must cost gate duration
    let mut sorted: Vec<(f64, f64)> = per_delta
        .iter()
        .map(|(d, og)| (*d, og.report.t_gate))
        .collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in sorted.windows(2) {
        if w[1].1 <= w[0].1 {
            return Err(CzError::Invariant(format!(
                "gate duration did not grow with the offset: t_gate({}) = {:.4} ns vs \
                 t_gate({}) = {:.4} ns",
                w[1].0, w[1].1, w[0].0, w[0].1
            )));
        }
    }
    Ok(per_delta.iter().all(|(_, og)| og.run.converged))
}

/// Three-mode model with the lattice truncation (3/3/2 levels, same
/// excitation cutoff) so the decoupled control case is comparable.
fn truncated_three_mode(
    dev: &Device,
    omega_q: f64,
    omega_c: f64,
    cutoff: usize,
) -> Result<HamiltonianModel> {
    let m = &dev.modes;
    build_with_cutoff(
        &[
            Mode { omega: omega_q, alpha: m.alpha_1, levels: 3 },
            Mode { omega: m.omega_2, alpha: m.alpha_2, levels: 3 },
            Mode { omega: omega_c, alpha: m.alpha_c, levels: 2 },
        ],
        &[
            Coupling { a: 0, b: 1, g: m.g_12 },
            Coupling { a: 0, b: 2, g: m.g_1c },
            Coupling { a: 1, b: 2, g: m.g_2c },
        ],
        CouplingForm::Full,
        Some(cutoff),
    )
}

fn isolated_truncated(dev: &Device, cutoff: usize) -> Result<HamiltonianModel> {
    truncated_three_mode(dev, dev.qubit_idle, dev.coupler_idle, cutoff)
}

fn lattice_context<'a>(
    case: &'a LatticeCase,
    dev: &Device,
    sigma: f64,
    dt: f64,
) -> GateContext<'a> {
    GateContext {
        model: &case.model,
        qubit_mode: Q1,
        coupler_mode: C1,
        qubit_idle: dev.qubit_idle,
        coupler_idle: dev.coupler_idle,
        sigma,
        dt,
        comp_labels: case.comp_labels.clone(),
    }
}

fn lattice_report(
    dev: &Device,
    spec: &SpectatorSection,
    state: (u8, u8),
    cutoff: usize,
    sigma: f64,
    dt: f64,
    params: &PulseParams,
) -> Result<GateReport> {
    let case = build_lattice(dev, spec, state, cutoff)?;
    lattice_context(&case, dev, sigma, dt).report(params)
}

fn run_spectator(cfg: &ExperimentConfig, writer: &mut OutputWriter) -> Result<bool> {
    let dev = resolve_device(cfg)?;
    let spec = &cfg.scenario.spectator;
    let states = spec
        .states
        .clone()
        .unwrap_or_else(|| vec![(0, 0), (0, 1), (1, 0), (1, 1)]);

    // pulse parameters from the config or from the isolated model
    let model = three_mode_at_idle(&dev, cfg.run.levels)?;
    let (params, optimization, converged) = match cfg.scenario.pulse_params {
        Some(p) => (p, serde_json::Value::Null, true),
        None => {
            let og = optimize_and_score(&dev, &model, cfg)?;
            let c = og.run.converged;
            (og.params, optimization_summary(&og.run), c)
        }
    };

    // isolated references: full truncation, and the lattice truncation the
    // decoupled control case must reproduce
    let fine = context(&model, &dev, cfg.pulse.sigma, cfg.run.dt);
    let isolated = fine.report(&params)?;

    // the lattice truncation (3 qubit levels, 2 coupler levels, global
    // cutoff) moves the work-point resonance and the effective coupling, so
    // the gate is re-optimized on the truncated reference before touching
    // the lattice, as an experiment would recalibrate in situ
    let truncated_model = isolated_truncated(&dev, LATTICE_CUTOFF)?;
    let build_trunc =
        |wq: f64, wc: f64| truncated_three_mode(&dev, wq, wc, LATTICE_CUTOFF);
    let mut seeds = seed_candidates(&build_trunc, dev.modes.omega_2, &cfg.pulse.bounds)?;
    seeds.push(params);
    let cal_broad = context(&truncated_model, &dev, cfg.pulse.sigma, 4.0 * cfg.run.dt);
    let cal_seed = seeds
        .into_iter()
        .map(|p| {
            let c = cal_broad.cost(&p);
            (p, c)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(p, _)| p)
        .ok_or_else(|| CzError::Config("no usable calibration seed".into()))?;
    let cal_polish = context(&truncated_model, &dev, cfg.pulse.sigma, 2.0 * cfg.run.dt);
    let cal = optimize_gate(
        &cal_broad, &cal_polish, &cfg.pulse.bounds, cal_seed, cfg.run.max_iters,
    )?;
    let lattice_params = PulseParams::from_vec(&cal.best_params);
    let converged = converged && cal.converged;
    let truncated =
        context(&truncated_model, &dev, cfg.pulse.sigma, cfg.run.dt).report(&lattice_params)?;

    let decoupled = SpectatorSection { coupling_scale: 0.0, ..spec.clone() };
    let control = lattice_report(
        &dev, &decoupled, (0, 0), LATTICE_CUTOFF, cfg.pulse.sigma, cfg.run.dt, &lattice_params,
    )?;

    // each spectator state at the shipped cutoff and one deeper
    let cases: Vec<((u8, u8), GateReport, GateReport)> = states
        .par_iter()
        .map(|&st| {
            let base = lattice_report(
                &dev, spec, st, LATTICE_CUTOFF, cfg.pulse.sigma, cfg.run.dt, &lattice_params,
            )?;
            let deeper = lattice_report(
                &dev, spec, st, LATTICE_CUTOFF + 1, cfg.pulse.sigma, cfg.run.dt, &lattice_params,
            )?;
            Ok((st, base, deeper))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut case_payload = Vec::new();
    for (st, base, deeper) in &cases {
        let err = 1.0 - base.fidelity;
        let err_deeper = 1.0 - deeper.fidelity;
        let rel = (err - err_deeper).abs() / err.abs().max(err_deeper.abs()).max(1e-10);
        let warn = rel > 0.20;
        rows.push(vec![
            st.0.to_string(),
            st.1.to_string(),
            fmt_f64(base.eps_leak),
            fmt_f64(base.eps_swap),
            fmt_f64(base.theta),
            fmt_f64(base.fidelity),
            fmt_f64(base.cost),
            fmt_f64(err),
            fmt_f64(err_deeper),
            warn.to_string(),
        ]);
        case_payload.push(json!({
            "spectator": st,
            "report": base,
            "error": err,
            "error_cutoff_plus_one": err_deeper,
            "cutoff_rel_change": rel,
            "cutoff_warning": warn,
        }));
        if warn {
            eprintln!(
                "warning: spectator case {:?} error moved {:.0}% at cutoff {} -> {} \
                 ({err:.3e} vs {err_deeper:.3e})",
                st,
                rel * 100.0,
                LATTICE_CUTOFF,
                LATTICE_CUTOFF + 1
            );
        }
    }
    writer.write_csv(
        "spectator.cases.csv",
        &[
            "s1", "s2", "eps_leak", "eps_swap", "theta", "fidelity", "cost", "error",
            "error_cutoff_plus_one", "cutoff_warning",
        ],
        &rows,
    )?;

    let control_error = 1.0 - control.fidelity;
    let truncated_error = 1.0 - truncated.fidelity;
    writer.write_json(
        "spectator.report.json",
        &json!({
            "config_hash": writer.hash(),
            "device": device_summary(&dev),
            "spectator": spec,
            "pulse_params": params,
            "lattice_pulse_params": lattice_params,
            "lattice_calibration": optimization_summary(&cal),
            "optimization": optimization,
            "isolated_error": 1.0 - isolated.fidelity,
            "isolated_truncated_error": truncated_error,
            "control_error": control_error,
            "control_vs_isolated_ratio": control_error / truncated_error.max(1e-12),
            "cases": case_payload,
        }),
    )?;
    Ok(converged)
}

fn run_spectrum(cfg: &ExperimentConfig, writer: &mut OutputWriter) -> Result<bool> {
    let delta = cfg
        .scenario
        .delta_mhz
        .as_ref()
        .and_then(|v| v.first().copied())
        .unwrap_or(0.0);
    let mut dcfg = cfg.clone();
    dcfg.device.modes = Some(modes_with_delta(&cfg.device.resolve()?, delta));
    dcfg.device.circuit = None;
    let dev = resolve_device(&dcfg)?;
    let m = &dev.modes;
    let model = three_mode_at_idle(&dev, dcfg.run.levels)?;

    // Q1 tuned to the 110/200 resonance; with an offset the 020 level is
    // detuned by exactly delta
    let omega_work_q = m.omega_2 - m.alpha_1;
    let det_110_200 = m.omega_2 - omega_work_q - m.alpha_1;
    let det_110_020 = omega_work_q - m.omega_2 - m.alpha_2;

    for (name, omega_1) in [
        ("spectrum.idle.csv", dev.qubit_idle),
        ("spectrum.work.csv", omega_work_q),
    ] {
        let dressed = model.dressed_spectrum_at(&[omega_1, m.omega_2, dev.coupler_idle]);
        let rows: Vec<Vec<String>> = dressed
            .states
            .iter()
            .map(|s| {
                let (label, overlap) = match &s.label {
                    Some((occ, amp)) => (
                        occ.iter().map(|n| n.to_string()).collect::<String>(),
                        amp * amp,
                    ),
                    None => (String::new(), 0.0),
                };
                vec![
                    s.eigenindex.to_string(),
                    fmt_f64(s.energy_ghz()),
                    label,
                    fmt_f64(overlap),
                ]
            })
            .collect();
        writer.write_csv(name, &["eigenindex", "energy_ghz", "label", "overlap"], &rows)?;
    }
    writer.write_json(
        "spectrum.report.json",
        &json!({
            "config_hash": writer.hash(),
            "device": device_summary(&dev),
            "delta_mhz": delta,
            "work_qubit_frequency": omega_work_q,
            "bare_detuning_110_200": det_110_200,
            "bare_detuning_110_020": det_110_020,
        }),
    )?;
    Ok(true)
}
