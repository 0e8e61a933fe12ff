//! Godunov finite-volume solver for the conservation law on the three-branch
//! network.
//!
//! The three branches share one cell width; incoming branches 1 and 2 cover
//! `[-L, 0)` with the junction at their right end, the outgoing branch 0
//! covers `(0, L]` with the junction at its left end. Interior interfaces use
//! the demand/supply form of the Godunov flux. The junction interface is
//! served by one of two couplings:
//!
//! * switching — one incoming road at a time is open and coupled to road 0 as
//!   a single line while the other sees a wall (zero supply), alternating
//!   with the (scaled) light schedule;
//! * homogenized — both roads send simultaneously, road `k` limited to the
//!   fraction `theta_k` of road 0's supply:
//!   `F_k = min(demand(p_k), theta_k * supply(p_0))`, `F_0 = F_1 + F_2`.
//!
//! Mass is conserved to roundoff by construction; every constant state built
//! from a germ generator is a discrete steady state of the homogenized
//! coupling.

use crate::error::Error;
use crate::flux::FluxModel;
use crate::germ::GermParams;
use crate::micro::{LightSchedule, Phase};
use crate::stepfn::StepFn;
use crate::Result;

/// Far-boundary treatment of the two incoming roads' upstream ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InflowPolicy {
    /// No vehicles enter (ghost demand 0).
    Closed,
    /// Constant ghost demand, clamped to `[0, f_max]`.
    ConstantFlux(f64),
    /// Copy the boundary cell (flux `f(rho_first)`).
    ZeroGradient,
}

/// Far-boundary treatment of the outgoing road's downstream end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutflowPolicy {
    /// Free outflow (ghost supply `f_max`).
    Free,
    /// Copy the boundary cell (flux `f(rho_last)`).
    ZeroGradient,
}

/// Boundary policies for the three far ends.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryPolicy {
    pub inflow1: InflowPolicy,
    pub inflow2: InflowPolicy,
    pub outflow: OutflowPolicy,
}

impl Default for BoundaryPolicy {
    fn default() -> Self {
        BoundaryPolicy {
            inflow1: InflowPolicy::Closed,
            inflow2: InflowPolicy::Closed,
            outflow: OutflowPolicy::Free,
        }
    }
}

/// Junction coupling selector.
#[derive(Debug, Clone)]
pub enum JunctionMode {
    /// Time-switched coupling driven by a schedule in scaled time.
    Switching(LightSchedule),
    /// Homogenized capacity-split coupling.
    Homogenized(GermParams),
}

/// Cell data for the three branches. Branches 1, 2 store cells left to right
/// over `[-L, 0)`; branch 0 over `(0, L]`, so index 0 of branch 0 and the
/// last index of branches 1, 2 touch the junction.
#[derive(Debug, Clone)]
pub struct NetworkGrid {
    dx: f64,
    length: f64,
    cells: [Vec<f64>; 3],
}

impl NetworkGrid {
    /// An all-zero grid with `n_cells` cells per branch.
    pub fn zeros(length: f64, n_cells: usize) -> Result<Self> {
        if !(length > 0.0) || n_cells == 0 {
            return Err(Error::InvalidParameter {
                what: "network grid",
                detail: "length and cell count must be positive".into(),
            });
        }
        Ok(NetworkGrid {
            dx: length / n_cells as f64,
            length,
            cells: [
                vec![0.0; n_cells],
                vec![0.0; n_cells],
                vec![0.0; n_cells],
            ],
        })
    }

    /// Initializes by exact cell averages of per-branch density profiles
    /// (branch 0 on `[0, L]`, branches 1, 2 on `[-L, 0]`).
    pub fn from_profiles(length: f64, n_cells: usize, profiles: &[StepFn; 3]) -> Result<Self> {
        let mut grid = NetworkGrid::zeros(length, n_cells)?;
        for (k, profile) in profiles.iter().enumerate() {
            for i in 0..n_cells {
                let (lo, hi) = grid.cell_bounds(k, i);
                grid.cells[k][i] = profile.integral_over(lo, hi) / grid.dx;
            }
        }
        Ok(grid)
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_cells(&self) -> usize {
        self.cells[0].len()
    }

    pub fn cells(&self, branch: usize) -> &[f64] {
        &self.cells[branch]
    }

    fn cell_bounds(&self, branch: usize, i: usize) -> (f64, f64) {
        let x0 = if branch == 0 { 0.0 } else { -self.length };
        (x0 + i as f64 * self.dx, x0 + (i + 1) as f64 * self.dx)
    }

    /// Branch densities as step functions in network coordinates.
    pub fn densities(&self) -> [StepFn; 3] {
        [
            StepFn::from_cells(0.0, self.dx, &self.cells[0]),
            StepFn::from_cells(-self.length, self.dx, &self.cells[1]),
            StepFn::from_cells(-self.length, self.dx, &self.cells[2]),
        ]
    }

    /// Total mass over the network.
    pub fn total_mass(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| c.iter().sum::<f64>() * self.dx)
            .sum()
    }

    /// First interior cell values adjacent to the junction: `(p0, p1, p2)`.
    pub fn junction_traces(&self) -> [f64; 3] {
        let n = self.n_cells();
        [
            self.cells[0][0],
            self.cells[1][n - 1],
            self.cells[2][n - 1],
        ]
    }
}

/// Demand/supply form of the Godunov interface flux for concave flux:
/// `min(demand(left), supply(right))`.
pub fn godunov_flux(m: &FluxModel, left: f64, right: f64) -> Result<f64> {
    Ok(m.demand(left)?.min(m.supply(right)?))
}

#[inline]
fn godunov_clamped(m: &FluxModel, left: f64, right: f64) -> f64 {
    m.demand_clamped(left).min(m.supply_clamped(right))
}

/// Junction fluxes `(F1, F2, F0)` of the switching coupling: the green road
/// couples to road 0 as one line, the red road sees a wall.
pub fn junction_flux_switching(
    m: &FluxModel,
    phase: Phase,
    p1: f64,
    p2: f64,
    p0: f64,
) -> (f64, f64, f64) {
    match phase {
        Phase::GreenRoad1 => {
            let f1 = godunov_clamped(m, p1, p0);
            (f1, 0.0, f1)
        }
        Phase::GreenRoad2 => {
            let f2 = godunov_clamped(m, p2, p0);
            (0.0, f2, f2)
        }
    }
}

/// Junction fluxes `(F1, F2, F0)` of the homogenized coupling:
/// `F_k = min(demand(p_k), theta_k * supply(p0))` and `F0 = F1 + F2`.
pub fn junction_flux_homogenized(
    m: &FluxModel,
    g: &GermParams,
    p1: f64,
    p2: f64,
    p0: f64,
) -> (f64, f64, f64) {
    let th = g.split();
    let s0 = m.supply_clamped(p0);
    let f1 = m.demand_clamped(p1).min(th[1] * s0);
    let f2 = m.demand_clamped(p2).min(th[2] * s0);
    (f1, f2, f1 + f2)
}

/// Fluxes and conservation data of one step.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    /// Trace cells seen by the junction at step start.
    pub traces: [f64; 3],
    /// Junction fluxes `(F0, F1, F2)` used during the step.
    pub junction_flux: [f64; 3],
    /// Net boundary inflow (far ends) during the step.
    pub boundary_net_flux: f64,
    /// `|mass change - dt * net flux|`, relative to `max(mass, 1)`.
    pub conservation_error: f64,
}

/// One conservative Godunov step of length `dt` at (scaled) time `t`.
/// `dt` must satisfy the CFL bound `dt <= dx / max|f'|`.
pub fn step_network(
    grid: &mut NetworkGrid,
    mode: &JunctionMode,
    t: f64,
    m: &FluxModel,
    dt: f64,
    bc: &BoundaryPolicy,
) -> Result<StepRecord> {
    let cfl_cap = grid.dx / m.max_char_speed();
    if !(dt > 0.0) || dt > cfl_cap * (1.0 + 1e-12) {
        return Err(Error::Refused {
            detail: format!("dt = {dt} violates the CFL bound {cfl_cap}"),
        });
    }
    let n = grid.n_cells();
    let traces = grid.junction_traces();
    let [p0, p1, p2] = traces;
    let (f1, f2, f0) = match mode {
        JunctionMode::Switching(schedule) => {
            junction_flux_switching(m, schedule.phase(t), p1, p2, p0)
        }
        JunctionMode::Homogenized(g) => junction_flux_homogenized(m, g, p1, p2, p0),
    };

    let mass_before = grid.total_mass();
    let lam = dt / grid.dx;
    let mut boundary_net = 0.0;

    // incoming branches: far inflow on the left, junction flux on the right
    for (k, junction_flux, inflow) in [(1usize, f1, bc.inflow1), (2usize, f2, bc.inflow2)] {
        let cells = &grid.cells[k];
        let left_bc = match inflow {
            InflowPolicy::Closed => 0.0,
            InflowPolicy::ConstantFlux(q) => {
                q.clamp(0.0, m.f_max()).min(m.supply_clamped(cells[0]))
            }
            InflowPolicy::ZeroGradient => godunov_clamped(m, cells[0], cells[0]),
        };
        boundary_net += left_bc;
        let mut flux = Vec::with_capacity(n + 1);
        flux.push(left_bc);
        for i in 1..n {
            flux.push(godunov_clamped(m, cells[i - 1], cells[i]));
        }
        flux.push(junction_flux);
        let cells = &mut grid.cells[k];
        for i in 0..n {
            cells[i] += lam * (flux[i] - flux[i + 1]);
        }
    }

    // outgoing branch: junction flux on the left, far outflow on the right
    {
        let cells = &grid.cells[0];
        let right_bc = match bc.outflow {
            OutflowPolicy::Free => m.demand_clamped(cells[n - 1]),
            OutflowPolicy::ZeroGradient => godunov_clamped(m, cells[n - 1], cells[n - 1]),
        };
        boundary_net -= right_bc;
        let mut flux = Vec::with_capacity(n + 1);
        flux.push(f0);
        for i in 1..n {
            flux.push(godunov_clamped(m, cells[i - 1], cells[i]));
        }
        flux.push(right_bc);
        let cells = &mut grid.cells[0];
        for i in 0..n {
            cells[i] += lam * (flux[i] - flux[i + 1]);
        }
    }

    // maximum principle (checked, not clamped: clamping would break the
    // conservation identity)
    let slack = 1e-12 * m.rho_max();
    for (k, cells) in grid.cells.iter().enumerate() {
        for (i, &c) in cells.iter().enumerate() {
            if !(c >= -slack && c <= m.rho_max() + slack) {
                return Err(Error::Invariant {
                    context: "finite-volume step".into(),
                    detail: format!("cell ({k}, {i}) left [0, rho_max]: {c}"),
                });
            }
        }
    }

    // the junction contributes f1 + f2 - f0 = 0 exactly; only far boundaries
    // move mass
    let mass_after = grid.total_mass();
    let conservation_error =
        ((mass_after - mass_before) - dt * boundary_net).abs() / mass_before.max(1.0);
    Ok(StepRecord {
        traces,
        junction_flux: [f0, f1, f2],
        boundary_net_flux: boundary_net,
        conservation_error,
    })
}

/// A junction trace sample: time, trace cells, junction fluxes.
#[derive(Debug, Clone, Copy)]
pub struct TraceSample {
    pub t: f64,
    /// `(p0, p1, p2)` from the first interior cells.
    pub p: [f64; 3],
    /// `(F0, F1, F2)` used at that time.
    pub flux: [f64; 3],
}

/// One emitted snapshot of the grid.
#[derive(Debug, Clone)]
pub struct FvSnapshot {
    pub t: f64,
    pub branches: [StepFn; 3],
}

/// Options for a finite-volume run.
#[derive(Debug, Clone)]
pub struct FvRunOpts {
    /// Scaled horizon.
    pub t_end: f64,
    /// CFL fraction in (0, 1].
    pub cfl: f64,
    /// Number of uniform snapshot intervals over `[0, t_end]`.
    pub n_snapshots: usize,
    pub boundary: BoundaryPolicy,
}

/// Result of a finite-volume run.
#[derive(Debug, Clone)]
pub struct FvRun {
    pub snapshots: Vec<FvSnapshot>,
    /// Junction trace sampled at every step start, plus the final state.
    pub trace: Vec<TraceSample>,
    /// Worst per-step conservation error (relative).
    pub max_conservation_error: f64,
    /// Worst per-step L1 change, for steady-state checks.
    pub max_step_l1_change: f64,
    pub violations: Vec<String>,
}

/// Runs the solver to the horizon, splitting steps at switch times in
/// switching mode and landing exactly on snapshot times.
pub fn solve(
    m: &FluxModel,
    mode: &JunctionMode,
    mut grid: NetworkGrid,
    opts: &FvRunOpts,
) -> Result<FvRun> {
    if !(opts.t_end > 0.0) {
        return Err(Error::InvalidParameter {
            what: "t_end",
            detail: "must be positive".into(),
        });
    }
    if !(opts.cfl > 0.0 && opts.cfl <= 1.0) {
        return Err(Error::InvalidParameter {
            what: "cfl",
            detail: format!("must lie in (0, 1], got {}", opts.cfl),
        });
    }
    if opts.n_snapshots == 0 {
        return Err(Error::InvalidParameter {
            what: "n_snapshots",
            detail: "need at least one snapshot interval".into(),
        });
    }
    let dt_base = opts.cfl * grid.dx / m.max_char_speed();
    let snap_times: Vec<f64> = (0..=opts.n_snapshots)
        .map(|j| opts.t_end * j as f64 / opts.n_snapshots as f64)
        .collect();

    let mut run = FvRun {
        snapshots: Vec::with_capacity(snap_times.len()),
        trace: Vec::new(),
        max_conservation_error: 0.0,
        max_step_l1_change: 0.0,
        violations: Vec::new(),
    };
    run.snapshots.push(FvSnapshot {
        t: 0.0,
        branches: grid.densities(),
    });

    let mut t = 0.0;
    let mut next_snap = 1usize;
    while t < opts.t_end * (1.0 - 1e-12) {
        let t_snap = snap_times[next_snap.min(opts.n_snapshots)];
        let t_event = match mode {
            JunctionMode::Switching(schedule) => schedule.next_switch_after(t).min(t_snap),
            JunctionMode::Homogenized(_) => t_snap,
        }
        .min(opts.t_end);
        let span = t_event - t;
        let n_sub = (span / dt_base).ceil().max(1.0) as usize;
        let h = span / n_sub as f64;
        for sub in 0..n_sub {
            let before = grid.cells.clone();
            let record = step_network(&mut grid, mode, t, m, h, &opts.boundary)?;
            run.trace.push(TraceSample {
                t,
                p: [record.traces[0], record.traces[1], record.traces[2]],
                flux: record.junction_flux,
            });
            run.max_conservation_error = run.max_conservation_error.max(record.conservation_error);
            let l1_change: f64 = before
                .iter()
                .zip(&grid.cells)
                .map(|(a, b)| {
                    a.iter()
                        .zip(b)
                        .map(|(x, y)| (x - y).abs())
                        .sum::<f64>()
                        * grid.dx
                })
                .sum();
            run.max_step_l1_change = run.max_step_l1_change.max(l1_change);
            if record.conservation_error > 1e-12 {
                run.violations.push(format!(
                    "conservation error {} at t = {t}",
                    record.conservation_error
                ));
            }
            t += h;
            if sub + 1 == n_sub {
                t = t_event;
            }
        }
        if (t - t_snap).abs() < 1e-12 * opts.t_end.max(1.0) {
            run.snapshots.push(FvSnapshot {
                t,
                branches: grid.densities(),
            });
            if next_snap < opts.n_snapshots {
                next_snap += 1;
            }
        }
    }
    // final trace sample at the horizon
    let traces = grid.junction_traces();
    let (f1, f2, f0) = match mode {
        JunctionMode::Switching(schedule) => {
            junction_flux_switching(m, schedule.phase(t), traces[1], traces[2], traces[0])
        }
        JunctionMode::Homogenized(g) => {
            junction_flux_homogenized(m, g, traces[1], traces[2], traces[0])
        }
    };
    run.trace.push(TraceSample {
        t,
        p: traces,
        flux: [f0, f1, f2],
    });
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::germ::{corner_points, gamma_point, GeneratingSet};

    fn unit() -> FluxModel {
        FluxModel::quadratic(1.0, 1.0).unwrap()
    }

    fn half() -> GermParams {
        GermParams::new(0.5).unwrap()
    }

    #[test]
    fn godunov_flux_values() {
        let m = unit();
        assert!((godunov_flux(&m, 0.2, 0.8).unwrap() - 0.16).abs() < 1e-15);
        assert_eq!(godunov_flux(&m, 0.0, 0.7).unwrap(), 0.0);
        assert_eq!(godunov_flux(&m, 0.8, 0.2).unwrap(), 0.25);
        assert!(godunov_flux(&m, -0.5, 0.2).is_err());
    }

    #[test]
    fn switching_junction_fluxes() {
        let m = unit();
        let (f1, f2, f0) = junction_flux_switching(&m, Phase::GreenRoad1, 0.2, 0.9, 0.3);
        assert!((f1 - 0.16).abs() < 1e-15);
        assert_eq!(f2, 0.0);
        assert_eq!(f0, f1);

        let (f1, f2, f0) = junction_flux_switching(&m, Phase::GreenRoad1, 0.0, 0.9, 0.3);
        assert_eq!((f1, f2, f0), (0.0, 0.0, 0.0));

        // green road 2 mirrors with roles swapped
        let (f1, f2, f0) = junction_flux_switching(&m, Phase::GreenRoad2, 0.9, 0.2, 0.3);
        assert_eq!(f1, 0.0);
        assert!((f2 - 0.16).abs() < 1e-15);
        assert_eq!(f0, f2);
    }

    #[test]
    fn homogenized_junction_fluxes() {
        let m = unit();
        let g = half();
        // both roads congested, road 0 at capacity
        let (f1, f2, f0) = junction_flux_homogenized(&m, &g, 1.0 - 1e-9, 1.0 - 1e-9, 0.5);
        assert!((f1 - 0.125).abs() < 1e-9);
        assert!((f2 - 0.125).abs() < 1e-9);
        assert!((f0 - 0.25).abs() < 1e-9);

        assert_eq!(
            junction_flux_homogenized(&m, &g, 0.0, 0.0, 0.3),
            (0.0, 0.0, 0.0)
        );

        // road 2 empty, road 1 congested, road 0 uncongested: road 1 takes
        // exactly its capacity share
        let (f1, f2, f0) = junction_flux_homogenized(&m, &g, 0.9, 0.0, 0.2);
        assert!((f1 - 0.125).abs() < 1e-15);
        assert_eq!(f2, 0.0);
        assert!((f0 - 0.125).abs() < 1e-15);
    }

    #[test]
    fn constant_state_is_steady_with_matching_ghosts() {
        let m = unit();
        let value = 0.35;
        let profiles = [
            StepFn::from_intervals(vec![(0.0, 1.0, value)]).unwrap(),
            StepFn::from_intervals(vec![(-1.0, 0.0, value)]).unwrap(),
            StepFn::from_intervals(vec![(-1.0, 0.0, value)]).unwrap(),
        ];
        let mut grid = NetworkGrid::from_profiles(1.0, 50, &profiles).unwrap();
        // switching mode cannot hold a constant state (one road is walled);
        // check the pure-branch update instead by using homogenized fluxes on
        // a state that satisfies them... a constant 0.35 everywhere does not,
        // so restrict to checking interior cells stay constant
        let mode = JunctionMode::Homogenized(half());
        let bc = BoundaryPolicy {
            inflow1: InflowPolicy::ZeroGradient,
            inflow2: InflowPolicy::ZeroGradient,
            outflow: OutflowPolicy::ZeroGradient,
        };
        let before = grid.cells(1).to_vec();
        let dt = 0.5 * grid.dx();
        step_network(&mut grid, &mode, 0.0, &m, dt, &bc).unwrap();
        // cells away from the junction unchanged
        for (after, b) in grid.cells(1).iter().take(45).zip(&before) {
            assert!((after - b).abs() < 1e-15);
        }
    }

    #[test]
    fn generator_states_are_discrete_steady_states() {
        let m = unit();
        let g = half();
        let set = GeneratingSet::new(&m, &g, 9).unwrap();
        let bc = BoundaryPolicy {
            inflow1: InflowPolicy::ZeroGradient,
            inflow2: InflowPolicy::ZeroGradient,
            outflow: OutflowPolicy::ZeroGradient,
        };
        let mode = JunctionMode::Homogenized(g);
        for p in set.points() {
            let profiles = [
                StepFn::from_intervals(vec![(0.0, 1.0, p.p0)]).unwrap(),
                StepFn::from_intervals(vec![(-1.0, 0.0, p.p1)]).unwrap(),
                StepFn::from_intervals(vec![(-1.0, 0.0, p.p2)]).unwrap(),
            ];
            let mut grid = NetworkGrid::from_profiles(1.0, 40, &profiles).unwrap();
            let before = grid.cells.clone();
            let dt = 0.9 * grid.dx();
            step_network(&mut grid, &mode, 0.0, &m, dt, &bc).unwrap();
            let l1: f64 = before
                .iter()
                .zip(&grid.cells)
                .map(|(a, b)| {
                    a.iter()
                        .zip(b)
                        .map(|(x, y)| (x - y).abs())
                        .sum::<f64>()
                        * grid.dx()
                })
                .sum();
            assert!(
                l1 <= 1e-12,
                "generator {:?} drifted by {l1}",
                p.as_array()
            );
        }
    }

    #[test]
    fn cfl_violation_refused() {
        let m = unit();
        let mut grid = NetworkGrid::zeros(1.0, 10).unwrap();
        let mode = JunctionMode::Homogenized(half());
        let bad_dt = 2.0 * grid.dx() / m.max_char_speed();
        assert!(matches!(
            step_network(&mut grid, &mode, 0.0, &m, bad_dt, &BoundaryPolicy::default()),
            Err(Error::Refused { .. })
        ));
    }

    #[test]
    fn mass_conserved_and_junction_balanced() {
        let m = unit();
        let profiles = [
            StepFn::zero(),
            StepFn::from_intervals(vec![(-1.5, -0.25, 0.7)]).unwrap(),
            StepFn::from_intervals(vec![(-1.0, -0.5, 0.5)]).unwrap(),
        ];
        let grid = NetworkGrid::from_profiles(2.0, 200, &profiles).unwrap();
        let mass0 = grid.total_mass();
        let opts = FvRunOpts {
            t_end: 0.8,
            cfl: 0.9,
            n_snapshots: 4,
            boundary: BoundaryPolicy::default(),
        };
        let run = solve(&m, &JunctionMode::Homogenized(half()), grid, &opts).unwrap();
        assert!(run.max_conservation_error <= 1e-12, "{}", run.max_conservation_error);
        assert!(run.violations.is_empty());
        // junction Rankine-Hugoniot holds exactly in every sample
        for s in &run.trace {
            assert_eq!(s.flux[0], s.flux[1] + s.flux[2]);
            // homogenized caps
            assert!(s.flux[1] <= 0.5 * m.f_max() + 1e-12);
            assert!(s.flux[2] <= 0.5 * m.f_max() + 1e-12);
        }
        // mass only leaves through the free outflow, which is still zero
        // (nothing reached the right boundary): total mass unchanged
        let last = run.snapshots.last().unwrap();
        let mass1: f64 = last.branches.iter().map(StepFn::integral).sum();
        assert!((mass1 - mass0).abs() < 1e-10);
    }

    #[test]
    fn zero_data_stays_zero() {
        let m = unit();
        let grid = NetworkGrid::zeros(1.0, 30).unwrap();
        let opts = FvRunOpts {
            t_end: 0.5,
            cfl: 0.9,
            n_snapshots: 2,
            boundary: BoundaryPolicy::default(),
        };
        let run = solve(&m, &JunctionMode::Homogenized(half()), grid, &opts).unwrap();
        for snap in &run.snapshots {
            for b in &snap.branches {
                assert!(b.values().iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn switching_period_splits_steps() {
        let m = unit();
        let schedule = LightSchedule::new(0.2, 0.1).unwrap(); // scaled
        let profiles = [
            StepFn::zero(),
            StepFn::from_intervals(vec![(-1.0, -0.2, 0.6)]).unwrap(),
            StepFn::from_intervals(vec![(-1.0, -0.2, 0.6)]).unwrap(),
        ];
        let grid = NetworkGrid::from_profiles(1.5, 150, &profiles).unwrap();
        let opts = FvRunOpts {
            t_end: 0.5,
            cfl: 0.9,
            n_snapshots: 5,
            boundary: BoundaryPolicy::default(),
        };
        let run = solve(&m, &JunctionMode::Switching(schedule), grid, &opts).unwrap();
        assert!(run.max_conservation_error <= 1e-12);
        // while road 1 is green, road 2's junction flux vanishes
        for s in &run.trace {
            match schedule.phase(s.t) {
                Phase::GreenRoad1 => assert_eq!(s.flux[2], 0.0),
                Phase::GreenRoad2 => assert_eq!(s.flux[1], 0.0),
            }
        }
    }

    #[test]
    fn gamma_point_traces_reproduced_by_homogenized_flux() {
        // junction fluxes at a generator state equal the generator's own
        // fluxes
        let m = unit();
        let g = half();
        for lam_frac in [0.0, 0.3, 1.0] {
            let p = gamma_point(&m, &g, lam_frac * m.f_max()).unwrap();
            let (f1, f2, f0) = junction_flux_homogenized(&m, &g, p.p1, p.p2, p.p0);
            assert!((f1 - m.flux(p.p1).unwrap()).abs() < 1e-14);
            assert!((f2 - m.flux(p.p2).unwrap()).abs() < 1e-14);
            assert!((f0 - m.flux(p.p0).unwrap()).abs() < 1e-14);
        }
        for p in corner_points(&m, &g).unwrap() {
            let (f1, f2, f0) = junction_flux_homogenized(&m, &g, p.p1, p.p2, p.p0);
            assert!((f1 - m.flux(p.p1).unwrap()).abs() < 1e-14);
            assert!((f2 - m.flux(p.p2).unwrap()).abs() < 1e-14);
            assert!((f0 - m.flux(p.p0).unwrap()).abs() < 1e-14);
        }
    }
}
