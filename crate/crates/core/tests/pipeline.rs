//! Cross-module integration: solver runs whose long-time junction behavior
//! is known, and the mass bookkeeping of the empirical density.

use mergelab::germ::{self, GermParams};
use mergelab::micro;
use mergelab::netfv::{self, FvRunOpts, JunctionMode, NetworkGrid};
use mergelab::scenario;
use mergelab::stepfn::StepFn;
use mergelab::FluxModel;

/// A congested merge drives the junction to capacity: the trace converges to
/// the capacity-split point with total flux `f_max`.
#[test]
fn congested_merge_reaches_capacity_flux() {
    let m = FluxModel::quadratic(1.0, 1.0).unwrap();
    let g = GermParams::new(0.5).unwrap();
    let congested = m.supply_inv(0.5 * m.f_max()).unwrap();
    let profiles = [
        StepFn::zero(),
        StepFn::from_intervals(vec![(-2.0, 0.0, congested)]).unwrap(),
        StepFn::from_intervals(vec![(-2.0, 0.0, congested)]).unwrap(),
    ];
    let grid = NetworkGrid::from_profiles(2.0, 400, &profiles).unwrap();
    let opts = FvRunOpts {
        t_end: 1.0,
        cfl: 0.9,
        n_snapshots: 5,
        boundary: Default::default(),
    };
    let run = netfv::solve(&m, &JunctionMode::Homogenized(g), grid, &opts).unwrap();
    let last = run.trace.last().unwrap();
    assert!((last.flux[0] - m.f_max()).abs() < 1e-3, "F0 = {}", last.flux[0]);
    // and the trace is a germ member at the wide tolerance
    let p = germ::GermPoint::new(last.p[0], last.p[1], last.p[2]);
    assert!(germ::in_germ_direct(&m, &g, &p, 1e-2 * m.f_max()).unwrap());
    // it sits near the capacity generator of the curve
    let top = germ::gamma_point(&m, &g, m.f_max()).unwrap();
    for (a, b) in p.as_array().iter().zip(top.as_array()) {
        assert!((a - b).abs() < 2e-2, "{p:?} vs {top:?}");
    }
}

/// Every vehicle with a leader carries exactly `epsilon` of empirical mass.
#[test]
fn empirical_density_mass_accounting() {
    let m = FluxModel::quadratic(1.0, 1.0).unwrap();
    let cfg = scenario::preset("riemann-merge").unwrap();
    let profiles = cfg.profiles.build().unwrap();
    let epsilon = 0.01;
    let state = micro::init_from_density(&profiles, epsilon, &m).unwrap();
    let n = state.len();
    let with_leader = state.leaders().iter().filter(|l| l.is_some()).count();
    let d = micro::empirical_density(&state, epsilon);
    let mass: f64 = d.branches.iter().map(StepFn::integral).sum();
    assert!(n > 0 && with_leader < n);
    assert!(
        (mass - epsilon * with_leader as f64).abs() < 1e-12,
        "mass {mass} vs {} vehicles with a leader",
        with_leader
    );
}

/// A pure Godunov line solution (empty incoming roads) is entropy-consistent:
/// residuals against hat test functions stay above the empirically-frozen
/// sampling tolerance.
#[test]
fn fv_line_solution_is_approximately_entropic() {
    use mergelab::harness::{self, PwLinear};
    use mergelab::micro::LineHistory;

    let m = FluxModel::quadratic(1.0, 1.0).unwrap();
    let profiles = [
        StepFn::from_intervals(vec![(0.5, 1.7, 0.75), (1.7, 2.9, 0.15)]).unwrap(),
        StepFn::zero(),
        StepFn::zero(),
    ];
    let grid = NetworkGrid::from_profiles(4.0, 1600, &profiles).unwrap();
    let opts = FvRunOpts {
        t_end: 0.4,
        cfl: 0.9,
        n_snapshots: 400,
        boundary: Default::default(),
    };
    let g = GermParams::new(0.5).unwrap();
    let run = netfv::solve(&m, &JunctionMode::Homogenized(g), grid, &opts).unwrap();
    let line = LineHistory {
        times: run.snapshots.iter().map(|s| s.t).collect(),
        states: run.snapshots.iter().map(|s| s.branches[0].clone()).collect(),
    };
    // scheme tolerance frozen from a refinement study (observed -4.6e-5 at
    // this resolution)
    let tol = 2e-4;
    let mut worst = f64::INFINITY;
    for k in [0.1, 0.25, 0.5, 0.75] {
        for it in 0..4 {
            for ix in 0..6 {
                let ht = 0.3 / 5.0;
                let phi_t = PwLinear::hat(
                    0.05 + it as f64 * ht,
                    0.05 + (it + 1) as f64 * ht,
                    0.05 + (it + 2) as f64 * ht,
                )
                .unwrap();
                let hx = 2.7 / 7.0;
                let phi_x = PwLinear::hat(
                    0.55 + ix as f64 * hx,
                    0.55 + (ix + 1) as f64 * hx,
                    0.55 + (ix + 2) as f64 * hx,
                )
                .unwrap();
                let r = harness::entropy_residual(&line, &m, 0.0, k, &phi_t, &phi_x).unwrap();
                worst = worst.min(r.lhs);
            }
        }
    }
    assert!(worst >= -tol, "worst residual {worst}");
}

/// Period-averaged switching traces are checked through the same machinery;
/// their worst germ violation shrinks as the period does (the first-cell
/// trace keeps an O(1) within-period oscillation, so this is a trend, not a
/// membership gate).
#[test]
fn averaged_switching_trace_violation_shrinks_with_period() {
    use mergelab::runner;
    use mergelab::scenario::Mode;

    let mut worsts = Vec::new();
    for period in [0.2, 0.05] {
        let mut cfg = scenario::preset("riemann-merge").unwrap();
        cfg.mode = Some(Mode::GermCheck);
        cfg.compare = None;
        cfg.light.scaled_period = Some(period);
        let dir = std::env::temp_dir().join(format!("mergelab-avg-{period}"));
        let _ = std::fs::remove_dir_all(&dir);
        let artifacts = runner::run(&cfg, None, &dir, false).unwrap();
        let payload = &artifacts.report["payload"];
        assert_eq!(payload["averaged_over_periods"], serde_json::json!(true));
        assert!(payload["check"]["samples_checked"].as_u64().unwrap() > 0);
        worsts.push(payload["check"]["worst_violation"].as_f64().unwrap());
        let _ = std::fs::remove_dir_all(&dir);
    }
    assert!(worsts[1] < worsts[0], "violations: {worsts:?}");
}

/// The switching solver at a short period stays close to the homogenized
/// one; at a long period it does not.
#[test]
fn switching_approaches_homogenized_as_period_shrinks() {
    let m = FluxModel::quadratic(1.0, 1.0).unwrap();
    let g = GermParams::new(0.5).unwrap();
    let cfg = scenario::preset("riemann-merge").unwrap();
    let profiles = cfg.profiles.build().unwrap();
    let opts = FvRunOpts {
        t_end: 0.5,
        cfl: 0.9,
        n_snapshots: 10,
        boundary: Default::default(),
    };
    let mk_grid = || NetworkGrid::from_profiles(3.0, 600, &profiles).unwrap();
    let reference = netfv::solve(&m, &JunctionMode::Homogenized(g), mk_grid(), &opts).unwrap();
    let mut errors = Vec::new();
    for period in [0.4, 0.05] {
        let schedule = micro::LightSchedule::from_theta(period, 0.5).unwrap();
        let run = netfv::solve(&m, &JunctionMode::Switching(schedule), mk_grid(), &opts).unwrap();
        let err: f64 = run
            .snapshots
            .iter()
            .zip(&reference.snapshots)
            .map(|(a, b)| {
                a.branches
                    .iter()
                    .zip(&b.branches)
                    .map(|(x, y)| StepFn::l1_distance(x, y, -3.0, 3.0))
                    .sum::<f64>()
            })
            .sum();
        errors.push(err);
    }
    assert!(errors[1] < 0.35 * errors[0], "errors: {errors:?}");
}
