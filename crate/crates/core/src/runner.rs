//! Executes a validated scenario in one of the run modes and emits CSV/JSON
//! artifacts.
//!
//! All numbers are printed with 17 significant digits, rows in a fixed
//! order, so reruns of the same scenario and seed produce byte-identical
//! files. Wall-clock timings are the one exception and go to a separate
//! `timings.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use crate::error::Error;
use crate::flux::FluxModel;
use crate::germ::{self, BruteForceOpts, GermParams};
use crate::harness::{
    self, ConvergenceReport, NetworkDensity, NetworkHistory, PwLinear, TvKind, Window,
};
use crate::micro::{self, Branch, LightSchedule, MicroRun, MicroRunOpts};
use crate::netfv::{self, FvRun, FvRunOpts, JunctionMode, NetworkGrid};
use crate::scenario::{CompareKind, Mode, ScenarioConfig, TvKindSpec};
use crate::Result;

/// Formats a float with 17 significant digits.
pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

/// Outcome of one run: emitted files, pass/fail of the enabled checks, and
/// the JSON report document.
#[derive(Debug)]
pub struct RunArtifacts {
    pub files: Vec<PathBuf>,
    pub passed: bool,
    pub failures: Vec<String>,
    pub report: serde_json::Value,
}

struct Emitter {
    out_dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Emitter {
    fn new(out_dir: &Path) -> Result<Self> {
        fs::create_dir_all(out_dir)?;
        Ok(Emitter {
            out_dir: out_dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.out_dir.join(name);
        fs::write(&path, contents)?;
        self.files.push(path);
        Ok(())
    }
}

/// Runs `cfg` in `mode` (falling back to the scenario's own mode), writing
/// artifacts into `out_dir`. With `strict`, recorded invariant violations
/// become hard errors.
pub fn run(
    cfg: &ScenarioConfig,
    mode_override: Option<Mode>,
    out_dir: &Path,
    strict: bool,
) -> Result<RunArtifacts> {
    let warnings = cfg.validate()?;
    let mode = mode_override.or(cfg.mode).ok_or(Error::InvalidScenario {
        field: "mode".into(),
        detail: "no mode in the scenario and none given on the command line".into(),
    })?;
    let m = cfg.flux.build()?;
    let mut em = Emitter::new(out_dir)?;
    em.write("scenario.json", &cfg.to_json())?;

    let mut failures: Vec<String> = Vec::new();
    let payload = match mode {
        Mode::Micro => run_micro_mode(cfg, &m, &mut em, &mut failures)?,
        Mode::Meso | Mode::Homog => run_fv_mode(cfg, &m, mode, &mut em, &mut failures)?,
        Mode::Compare => run_compare(cfg, &m, &mut em, &mut failures)?,
        Mode::GermCheck => run_germ_check(cfg, &m, &mut em, &mut failures)?,
        Mode::GermBrute => run_germ_brute(cfg, &m, &mut em, &mut failures)?,
        Mode::TvCheck => run_tv_check(cfg, &m, &mut em, &mut failures)?,
        Mode::EntropyCheck => run_entropy_check(cfg, &m, &mut em, &mut failures)?,
    };

    if strict && !failures.is_empty() {
        return Err(Error::Invariant {
            context: format!("{mode:?} run"),
            detail: failures.join("; "),
        });
    }
    let passed = failures.is_empty();
    let report = json!({
        "schema": crate::scenario::SCHEMA_VERSION,
        "name": cfg.name,
        "mode": mode,
        "seed": cfg.seed,
        "warnings": warnings,
        "passed": passed,
        "failures": failures,
        "payload": payload,
    });
    em.write("report.json", &serde_json::to_string_pretty(&report)?)?;
    Ok(RunArtifacts {
        files: em.files,
        passed,
        failures: report["failures"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_str().unwrap().to_string())
            .collect(),
        report,
    })
}

fn require_epsilon(cfg: &ScenarioConfig) -> Result<f64> {
    cfg.epsilon.ok_or(Error::InvalidScenario {
        field: "epsilon".into(),
        detail: "this mode needs a scale".into(),
    })
}

/// Builds and runs the microscopic model at scale `epsilon`, failing hard
/// on recorded invariant violations.
fn micro_run_checked(
    cfg: &ScenarioConfig,
    m: &FluxModel,
    epsilon: f64,
    scaled_period: f64,
) -> Result<MicroRun> {
    let (run, _light) = micro_run(cfg, m, epsilon, scaled_period, None)?;
    if let Some(v) = run.violations.first() {
        return Err(Error::Invariant {
            context: format!("micro run at epsilon = {epsilon}"),
            detail: v.clone(),
        });
    }
    Ok(run)
}

/// Builds and runs the microscopic model at scale `epsilon`.
fn micro_run(
    cfg: &ScenarioConfig,
    m: &FluxModel,
    epsilon: f64,
    scaled_period: f64,
    dense_branch: Option<Branch>,
) -> Result<(MicroRun, LightSchedule)> {
    let light = LightSchedule::from_theta(scaled_period / epsilon, cfg.theta)?;
    let profiles = cfg.profiles.build()?;
    let initial = micro::init_from_density(&profiles, epsilon, m)?;
    let opts = MicroRunOpts {
        t_end: cfg.t_end,
        dt: cfg.micro_dt(m, epsilon),
        n_snapshots: cfg.n_snapshots,
        dense_branch,
    };
    Ok((micro::simulate_micro(m, &light, epsilon, initial, &opts)?, light))
}

fn micro_history(run: &MicroRun) -> NetworkHistory {
    NetworkHistory {
        times: run.snapshots.iter().map(|s| s.t).collect(),
        states: run
            .snapshots
            .iter()
            .map(|s| NetworkDensity {
                branches: s.density.branches.clone(),
            })
            .collect(),
    }
}

fn fv_run(cfg: &ScenarioConfig, m: &FluxModel, mode: &JunctionMode) -> Result<FvRun> {
    let profiles = cfg.profiles.build()?;
    let grid = NetworkGrid::from_profiles(cfg.grid.length, cfg.grid.n_cells(), &profiles)?;
    let opts = FvRunOpts {
        t_end: cfg.t_end,
        cfl: cfg.cfl,
        n_snapshots: cfg.n_snapshots,
        boundary: cfg.boundary.build(),
    };
    netfv::solve(m, mode, grid, &opts)
}

fn fv_history(run: &FvRun) -> NetworkHistory {
    NetworkHistory {
        times: run.snapshots.iter().map(|s| s.t).collect(),
        states: run
            .snapshots
            .iter()
            .map(|s| NetworkDensity {
                branches: s.branches.clone(),
            })
            .collect(),
    }
}

fn write_micro_outputs(run: &MicroRun, em: &mut Emitter) -> Result<()> {
    let mut snap = String::from("t,branch,x_left,x_right,rho\n");
    for s in &run.snapshots {
        for (k, branch) in s.density.branches.iter().enumerate() {
            for (v, w) in branch.values().iter().zip(branch.breakpoints().windows(2)) {
                snap.push_str(&format!(
                    "{},{k},{},{},{}\n",
                    fmt_f(s.t),
                    fmt_f(w[0]),
                    fmt_f(w[1]),
                    fmt_f(*v)
                ));
            }
        }
    }
    em.write("snapshots.csv", &snap)?;

    let mut veh = String::from("t,i,x,road\n");
    for s in &run.snapshots {
        for (i, (x, road)) in s.vehicles.iter().enumerate() {
            veh.push_str(&format!("{},{i},{},{road}\n", fmt_f(s.t), fmt_f(*x)));
        }
    }
    em.write("vehicles.csv", &veh)?;
    write_tv_series(&run.tv_series, em)
}

fn write_tv_series(series: &[(f64, f64)], em: &mut Emitter) -> Result<()> {
    let mut tv = String::from("t,tv\n");
    for (t, v) in series {
        tv.push_str(&format!("{},{}\n", fmt_f(*t), fmt_f(*v)));
    }
    em.write("tv.csv", &tv)
}

fn write_fv_outputs(run: &FvRun, grid: &crate::scenario::GridSpec, em: &mut Emitter) -> Result<()> {
    let mut snap = String::from("t,branch,x,rho\n");
    for s in &run.snapshots {
        for (k, branch) in s.branches.iter().enumerate() {
            let x0 = if k == 0 { 0.0 } else { -grid.length };
            for (i, v) in branch.values().iter().enumerate() {
                let center = x0 + (i as f64 + 0.5) * grid.dx;
                snap.push_str(&format!("{},{k},{},{}\n", fmt_f(s.t), fmt_f(center), fmt_f(*v)));
            }
        }
    }
    em.write("snapshots.csv", &snap)?;
    write_trace(&run.trace, em)
}

fn write_trace(trace: &[netfv::TraceSample], em: &mut Emitter) -> Result<()> {
    let mut out = String::from("t,p0,p1,p2,f0,f1,f2\n");
    for s in trace {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_f(s.t),
            fmt_f(s.p[0]),
            fmt_f(s.p[1]),
            fmt_f(s.p[2]),
            fmt_f(s.flux[0]),
            fmt_f(s.flux[1]),
            fmt_f(s.flux[2])
        ));
    }
    em.write("trace.csv", &out)
}

fn run_micro_mode(
    cfg: &ScenarioConfig,
    m: &FluxModel,
    em: &mut Emitter,
    failures: &mut Vec<String>,
) -> Result<serde_json::Value> {
    let epsilon = require_epsilon(cfg)?;
    let tau = cfg.scaled_period(epsilon)?;
    let (run, _light) = micro_run(cfg, m, epsilon, tau, None)?;
    failures.extend(run.violations.iter().cloned());
    write_micro_outputs(&run, em)?;
    Ok(json!({
        "epsilon": epsilon,
        "scaled_period": tau,
        "n_vehicles": run.n_vehicles,
        "max_tv": run.max_tv(),
        "violations": run.violations,
    }))
}

fn run_fv_mode(
    cfg: &ScenarioConfig,
    m: &FluxModel,
    mode: Mode,
    em: &mut Emitter,
    failures: &mut Vec<String>,
) -> Result<serde_json::Value> {
    let junction = match mode {
        Mode::Meso => {
            let eps = cfg.epsilon.unwrap_or(1.0);
            let tau = cfg.scaled_period(eps)?;
            JunctionMode::Switching(LightSchedule::from_theta(tau, cfg.theta)?)
        }
        _ => JunctionMode::Homogenized(GermParams::new(cfg.theta)?),
    };
    let run = fv_run(cfg, m, &junction)?;
    failures.extend(run.violations.iter().cloned());
    write_fv_outputs(&run, &cfg.grid, em)?;
    Ok(json!({
        "junction": match mode { Mode::Meso => "switching", _ => "homogenized" },
        "max_conservation_error": run.max_conservation_error,
        "max_step_l1_change": run.max_step_l1_change,
        "violations": run.violations,
    }))
}

fn run_compare(
    cfg: &ScenarioConfig,
    m: &FluxModel,
    em: &mut Emitter,
    failures: &mut Vec<String>,
) -> Result<serde_json::Value> {
    let spec = cfg.compare.ok_or(Error::InvalidScenario {
        field: "compare".into(),
        detail: "compare mode needs a compare block".into(),
    })?;
    let window = Window::new(0.0, cfg.t_end, spec.x_exclude, cfg.grid.length);
    let report = match spec.kind {
        CompareKind::MicroMeso => {
            let params = cfg.epsilon_sweep.clone().unwrap();
            let tau = cfg.scaled_period(params[0])?;
            let reference = {
                let junction =
                    JunctionMode::Switching(LightSchedule::from_theta(tau, cfg.theta)?);
                fv_history(&fv_run(cfg, m, &junction)?)
            };
            harness::convergence_study("micro-vs-meso", &params, &window, |eps| {
                let run = micro_run_checked(cfg, m, eps, tau)?;
                Ok((micro_history(&run), reference.clone(), run.n_vehicles, run.max_tv()))
            })?
        }
        CompareKind::MesoHomog => {
            let params = cfg.period_sweep.clone().unwrap();
            let reference = {
                let junction = JunctionMode::Homogenized(GermParams::new(cfg.theta)?);
                fv_history(&fv_run(cfg, m, &junction)?)
            };
            harness::convergence_study("meso-vs-homog", &params, &window, |period| {
                let junction =
                    JunctionMode::Switching(LightSchedule::from_theta(period, cfg.theta)?);
                let run = fv_run(cfg, m, &junction)?;
                Ok((fv_history(&run), reference.clone(), 0, 0.0))
            })?
        }
        CompareKind::MicroHomog => {
            let params = cfg.epsilon_sweep.clone().unwrap();
            let reference = {
                let junction = JunctionMode::Homogenized(GermParams::new(cfg.theta)?);
                fv_history(&fv_run(cfg, m, &junction)?)
            };
            harness::convergence_study("micro-vs-homog", &params, &window, |eps| {
                let tau = cfg.scaled_period(eps)?;
                let run = micro_run_checked(cfg, m, eps, tau)?;
                Ok((micro_history(&run), reference.clone(), run.n_vehicles, run.max_tv()))
            })?
        }
    };
    if !report.strictly_decreasing {
        failures.push("sweep errors are not strictly decreasing".into());
    }
    if !(report.final_to_initial <= 0.5) {
        failures.push(format!(
            "final/initial error ratio {} exceeds 0.5",
            report.final_to_initial
        ));
    }
    write_sweep_outputs(&report, em)?;
    // timings are wall-clock and excluded from the deterministic report
    let timings = json!({
        "label": report.label,
        "runtimes_s": report.rows.iter().map(|r| r.runtime_s).collect::<Vec<_>>(),
    });
    em.write("timings.json", &serde_json::to_string_pretty(&timings)?)?;
    Ok(deterministic_convergence_json(&report))
}

fn write_sweep_outputs(report: &ConvergenceReport, em: &mut Emitter) -> Result<()> {
    let mut csv = String::from("param,n_vehicles,l1_error,tv_max\n");
    for r in &report.rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f(r.param),
            r.n_vehicles,
            fmt_f(r.l1_error),
            fmt_f(r.tv_max)
        ));
    }
    em.write("sweep.csv", &csv)
}

fn deterministic_convergence_json(report: &ConvergenceReport) -> serde_json::Value {
    json!({
        "label": report.label,
        "window": report.window,
        "rows": report.rows.iter().map(|r| json!({
            "param": r.param,
            "n_vehicles": r.n_vehicles,
            "l1_error": r.l1_error,
            "tv_max": r.tv_max,
        })).collect::<Vec<_>>(),
        "strictly_decreasing": report.strictly_decreasing,
        "final_to_initial": report.final_to_initial,
    })
}

fn run_germ_check(
    cfg: &ScenarioConfig,
    m: &FluxModel,
    em: &mut Emitter,
    failures: &mut Vec<String>,
) -> Result<serde_json::Value> {
    let g = GermParams::new(cfg.theta)?;
    let tol = cfg.germ.tol_rel * m.f_max();
    // a switching run is period-averaged before the check; otherwise the
    // homogenized trace is checked directly
    let (run, checked_trace, averaged) = if let Some(tau) = cfg.light.scaled_period {
        let junction = JunctionMode::Switching(LightSchedule::from_theta(tau, cfg.theta)?);
        let run = fv_run(cfg, m, &junction)?;
        let avg = harness::average_over_periods(&run.trace, tau);
        (run, avg, true)
    } else {
        let junction = JunctionMode::Homogenized(g);
        let run = fv_run(cfg, m, &junction)?;
        let trace = run.trace.clone();
        (run, trace, false)
    };
    failures.extend(run.violations.iter().cloned());
    let report = harness::germ_trace_check(&checked_trace, m, &g, tol, cfg.germ.burn_in)?;
    if report.pass_fraction < 0.95 {
        failures.push(format!(
            "only {:.1}% of trace samples are germ members",
            100.0 * report.pass_fraction
        ));
    }
    write_trace(&run.trace, em)?;
    Ok(json!({
        "averaged_over_periods": averaged,
        "check": report,
        "max_conservation_error": run.max_conservation_error,
        "max_step_l1_change": run.max_step_l1_change,
    }))
}

fn run_germ_brute(
    cfg: &ScenarioConfig,
    m: &FluxModel,
    em: &mut Emitter,
    failures: &mut Vec<String>,
) -> Result<serde_json::Value> {
    let g = GermParams::new(cfg.theta)?;
    let mut opts = BruteForceOpts::new(cfg.brute.grid_step);
    opts.gamma_samples = cfg.brute.gamma_samples;
    let report = germ::brute_force_equivalence(m, &g, &opts)?;
    if !report.symmetric_difference_empty() {
        failures.push(format!(
            "{} lattice points disagree outside the boundary band",
            report.disagreements_outside_band
        ));
    }
    let _ = em;
    Ok(serde_json::to_value(&report)?)
}

fn run_tv_check(
    cfg: &ScenarioConfig,
    m: &FluxModel,
    em: &mut Emitter,
    failures: &mut Vec<String>,
) -> Result<serde_json::Value> {
    let epsilon = require_epsilon(cfg)?;
    let tau = cfg.scaled_period(epsilon)?;
    let (run, light) = micro_run(cfg, m, epsilon, tau, None)?;
    failures.extend(run.violations.iter().cloned());
    let kind = match cfg.tv.kind {
        TvKindSpec::FreeLine => TvKind::FreeLine,
        TvKindSpec::StoppedLine => TvKind::StoppedLine,
        TvKindSpec::WholeSystem => TvKind::WholeSystem,
    };
    let whole = (
        epsilon,
        light.green1(),
        light.period() - light.green1(),
    );
    let check = harness::tv_bound_check(
        &run.tv_series,
        kind,
        m,
        cfg.tv.tol_rel * m.v_max(),
        Some(whole),
    )?;
    if check.passed == Some(false) {
        failures.push(format!(
            "TV bound violated: max {} vs reference {}",
            check.tv_max, check.reference
        ));
    }
    write_micro_outputs(&run, em)?;
    Ok(json!({
        "epsilon": epsilon,
        "n_vehicles": run.n_vehicles,
        "check": check,
    }))
}

fn run_entropy_check(
    cfg: &ScenarioConfig,
    m: &FluxModel,
    em: &mut Emitter,
    failures: &mut Vec<String>,
) -> Result<serde_json::Value> {
    let epsilon = require_epsilon(cfg)?;
    let tau = cfg.scaled_period(epsilon).unwrap_or(4.0 * cfg.t_end);
    let branch = Branch::from_index(cfg.entropy.branch).unwrap();
    let (run, _light) = micro_run(cfg, m, epsilon, tau, Some(branch))?;
    failures.extend(run.violations.iter().cloned());
    let line = run.dense.as_ref().expect("dense recording requested");

    let profiles = cfg.profiles.build()?;
    let (x_lo, x_hi) = match cfg.entropy.x_window {
        Some(w) => w,
        None => {
            let (lo, hi) = profiles[cfg.entropy.branch]
                .span()
                .ok_or(Error::InvalidScenario {
                    field: "entropy.x_window".into(),
                    detail: "empty profile on the recorded branch; give a window".into(),
                })?;
            (lo + 0.02, hi + m.v_max() * cfg.t_end)
        }
    };
    let t_lo = cfg.t_end * cfg.entropy.t_trim;
    let t_hi = cfg.t_end * (1.0 - cfg.entropy.t_trim);

    let hats = |lo: f64, hi: f64, n: usize| -> Result<Vec<PwLinear>> {
        let h = (hi - lo) / (n + 1) as f64;
        (0..n)
            .map(|i| PwLinear::hat(lo + i as f64 * h, lo + (i + 1) as f64 * h, lo + (i + 2) as f64 * h))
            .collect()
    };
    let hats_t = hats(t_lo, t_hi, cfg.entropy.hats_t)?;
    let hats_x = hats(x_lo, x_hi, cfg.entropy.hats_x)?;

    let mut rows = String::from("k,hat_t,hat_x,lhs,bound,sup_tv,passed\n");
    let mut results = Vec::new();
    let mut n_failed = 0usize;
    for &k in &cfg.entropy.k_values {
        for (it, ph_t) in hats_t.iter().enumerate() {
            for (ix, ph_x) in hats_x.iter().enumerate() {
                let r = harness::entropy_residual(line, m, epsilon, k, ph_t, ph_x)?;
                let ok = r.passes(cfg.entropy.slack_rel * r.bound.abs() + cfg.entropy.slack_abs);
                if !ok {
                    n_failed += 1;
                }
                rows.push_str(&format!(
                    "{},{it},{ix},{},{},{},{}\n",
                    fmt_f(k),
                    fmt_f(r.lhs),
                    fmt_f(r.bound),
                    fmt_f(r.sup_tv),
                    ok
                ));
                results.push(json!({
                    "k": k, "hat_t": it, "hat_x": ix,
                    "lhs": r.lhs, "bound": r.bound, "sup_tv": r.sup_tv, "passed": ok,
                }));
            }
        }
    }
    if n_failed > 0 {
        failures.push(format!("{n_failed} entropy residuals fall below the bound"));
    }
    em.write("residuals.csv", &rows)?;
    write_tv_series(&run.tv_series, em)?;
    Ok(json!({
        "epsilon": epsilon,
        "n_vehicles": run.n_vehicles,
        "window": {"t": [t_lo, t_hi], "x": [x_lo, x_hi]},
        "checked": results.len(),
        "failed": n_failed,
        "results": results,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::preset;

    #[test]
    fn generator_steady_run_is_clean() {
        let cfg = preset("generator-steady").unwrap();
        let dir = std::env::temp_dir().join("mergelab-test-generator-steady");
        let _ = fs::remove_dir_all(&dir);
        let artifacts = run(&cfg, None, &dir, true).unwrap();
        assert!(artifacts.passed);
        let payload = &artifacts.report["payload"];
        assert!(payload["max_step_l1_change"].as_f64().unwrap() <= 1e-12);
        assert_eq!(payload["check"]["pass_fraction"].as_f64().unwrap(), 1.0);
        assert!(artifacts
            .files
            .iter()
            .any(|p| p.file_name().unwrap() == "trace.csv"));
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn unknown_mode_is_needed_somewhere() {
        let mut cfg = preset("generator-steady").unwrap();
        cfg.mode = None;
        let dir = std::env::temp_dir().join("mergelab-test-no-mode");
        assert!(run(&cfg, None, &dir, false).is_err());
        let _ = fs::remove_dir_all(&dir);
    }
}
