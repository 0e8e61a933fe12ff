//! Follow-the-leader vehicle dynamics on the junction with a periodic light.
//!
//! Vehicles live on three roads: the incoming roads 1 and 2 occupy `x < 0`,
//! the outgoing road 0 occupies `x >= 0`, and a vehicle's label is 0 exactly
//! when its position is nonnegative. Each vehicle chases the nearest vehicle
//! ahead of it among those it can see: everyone on road 0, or, while still
//! incoming, vehicles on its own road and on road 0. Its speed is the spacing
//! velocity `V(gap)`, except that the front vehicle of an incoming road whose
//! light is red treats the junction as a standing vehicle and drives at
//! `V(-x)`.
//!
//! Time integration is explicit Euler with velocities frozen at step start
//! and a step bound that keeps gaps of followers above the minimal spacing
//! `1/rho_max`: a gap `g >= e_min` contracts at most to
//! `e_min + (g - e_min)(1 - dt Lip(V))`, so it can never cross `e_min` when
//! `dt <= 1/(2 Lip(V))`. Steps are additionally split at the light switch
//! times so no step straddles a phase change.
//!
//! The scaled empirical density assigns the value `1/(X^lead - X^i)` to the
//! scaled interval between a vehicle and its leader; per-branch densities and
//! the total-variation diagnostic (incoming-green road glued to road 0 as one
//! line, the stopped road truncated at its front vehicle) are built from it.

use crate::error::Error;
use crate::flux::FluxModel;
use crate::stepfn::StepFn;
use crate::Result;

/// Road label; `Out` is the outgoing road 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Out = 0,
    In1 = 1,
    In2 = 2,
}

impl Branch {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(k: usize) -> Option<Branch> {
        match k {
            0 => Some(Branch::Out),
            1 => Some(Branch::In1),
            2 => Some(Branch::In2),
            _ => None,
        }
    }
}

/// Which incoming road currently has the green light.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    GreenRoad1,
    GreenRoad2,
}

/// Periodic light: green for road 1 on `[nT, nT + T1)`, green for road 2 on
/// `[nT + T1, (n+1)T)`.
#[derive(Debug, Clone, Copy)]
pub struct LightSchedule {
    period: f64,
    green1: f64,
}

impl LightSchedule {
    pub fn new(period: f64, green1: f64) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::InvalidParameter {
                what: "light period",
                detail: format!("must be positive and finite, got {period}"),
            });
        }
        if !(green1 > 0.0 && green1 < period) {
            return Err(Error::InvalidParameter {
                what: "light green-1 duration",
                detail: format!("must lie strictly inside (0, {period}), got {green1}"),
            });
        }
        Ok(LightSchedule { period, green1 })
    }

    pub fn from_theta(period: f64, theta: f64) -> Result<Self> {
        LightSchedule::new(period, theta * period)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn green1(&self) -> f64 {
        self.green1
    }

    /// Green-time fraction for road 1.
    pub fn theta(&self) -> f64 {
        self.green1 / self.period
    }

    /// Rescales both durations by `factor` (e.g. by `epsilon` to express the
    /// schedule in scaled time).
    pub fn scaled_by(&self, factor: f64) -> Result<LightSchedule> {
        LightSchedule::new(self.period * factor, self.green1 * factor)
    }

    pub fn phase(&self, t: f64) -> Phase {
        let u = t - self.period * (t / self.period).floor();
        if u < self.green1 {
            Phase::GreenRoad1
        } else {
            Phase::GreenRoad2
        }
    }

    /// Whether `road` faces a red light at time `t`. Road 0 never does.
    pub fn red_for(&self, road: Branch, t: f64) -> bool {
        matches!(
            (road, self.phase(t)),
            (Branch::In1, Phase::GreenRoad2) | (Branch::In2, Phase::GreenRoad1)
        )
    }

    /// First switch time strictly after `t`.
    pub fn next_switch_after(&self, t: f64) -> f64 {
        let n = (t / self.period).floor();
        for cand in [
            n * self.period + self.green1,
            (n + 1.0) * self.period,
            (n + 1.0) * self.period + self.green1,
        ] {
            if cand > t {
                return cand;
            }
        }
        (n + 2.0) * self.period
    }
}

/// Positions and road labels of all vehicles at one (unscaled) time.
#[derive(Debug, Clone)]
pub struct MicroState {
    /// Unscaled time.
    pub t: f64,
    xs: Vec<f64>,
    roads: Vec<Branch>,
    /// Per-road vehicle indices sorted by increasing position.
    order: [Vec<usize>; 3],
}

impl MicroState {
    pub fn new(t: f64, xs: Vec<f64>, roads: Vec<Branch>) -> Result<Self> {
        if xs.len() != roads.len() {
            return Err(Error::InvalidParameter {
                what: "micro state",
                detail: "positions and labels differ in length".into(),
            });
        }
        let mut order = [Vec::new(), Vec::new(), Vec::new()];
        for (i, road) in roads.iter().enumerate() {
            order[road.index()].push(i);
        }
        for list in &mut order {
            list.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
        }
        let state = MicroState { t, xs, roads, order };
        state.check_labels()?;
        state.check_no_collision()?;
        Ok(state)
    }

    fn check_labels(&self) -> Result<()> {
        for (i, (&x, &road)) in self.xs.iter().zip(&self.roads).enumerate() {
            let ok = match road {
                Branch::Out => x >= 0.0,
                _ => x < 0.0,
            };
            if !ok {
                return Err(Error::Invariant {
                    context: "micro state".into(),
                    detail: format!("vehicle {i} at x = {x} carries label {road:?}"),
                });
            }
        }
        Ok(())
    }

    fn check_no_collision(&self) -> Result<()> {
        for list in &self.order {
            for w in list.windows(2) {
                if self.xs[w[0]] >= self.xs[w[1]] {
                    return Err(Error::Invariant {
                        context: "micro state".into(),
                        detail: format!(
                            "vehicles {} and {} share road with positions {} >= {}",
                            w[0], w[1], self.xs[w[0]], self.xs[w[1]]
                        ),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn positions(&self) -> &[f64] {
        &self.xs
    }

    pub fn roads(&self) -> &[Branch] {
        &self.roads
    }

    /// Unscaled position of the front-most vehicle on `road`.
    pub fn front_of(&self, road: Branch) -> Option<f64> {
        self.order[road.index()].last().map(|&i| self.xs[i])
    }

    /// Leader indices for all vehicles: the next vehicle on the same road,
    /// then (for incoming vehicles) the rear-most vehicle on road 0, else
    /// none.
    pub fn leaders(&self) -> Vec<Option<usize>> {
        let mut lead = vec![None; self.xs.len()];
        let out_rear = self.order[0].first().copied();
        for road in [Branch::Out, Branch::In1, Branch::In2] {
            let list = &self.order[road.index()];
            for w in list.windows(2) {
                lead[w[0]] = Some(w[1]);
            }
            if let Some(&front) = list.last() {
                lead[front] = match road {
                    Branch::Out => None,
                    _ => out_rear,
                };
            }
        }
        lead
    }

    /// Leader of one vehicle (see [`Self::leaders`] for the whole state).
    pub fn leader_of(&self, i: usize) -> Option<usize> {
        self.leaders()[i]
    }

    /// The velocity of vehicle `i` given its leader, the light at the state's
    /// own time, and the flux model.
    pub fn velocity_of(
        &self,
        i: usize,
        leader: Option<usize>,
        light: &LightSchedule,
        m: &FluxModel,
    ) -> f64 {
        let road = self.roads[i];
        let stopped_by_light = road != Branch::Out
            && light.red_for(road, self.t)
            // the leader is across the junction; an absent leader counts as
            // standing at +infinity, so the red light still applies
            && leader.is_none_or(|l| self.xs[l] >= 0.0);
        if stopped_by_light {
            m.velocity_from_spacing_clamped(-self.xs[i])
        } else {
            match leader {
                Some(l) => m.velocity_from_spacing_clamped(self.xs[l] - self.xs[i]),
                None => m.v_max(),
            }
        }
    }

    /// All velocities at the state's own time.
    pub fn velocities(&self, light: &LightSchedule, m: &FluxModel) -> Vec<f64> {
        let leaders = self.leaders();
        (0..self.xs.len())
            .map(|i| self.velocity_of(i, leaders[i], light, m))
            .collect()
    }

    /// One explicit Euler step of length `dt`, with velocities frozen at the
    /// step start, followed by relabeling of vehicles that reached `x >= 0`.
    /// The caller must keep `dt` below [`max_stable_dt`] and must not
    /// straddle a light switch.
    pub fn step(&mut self, light: &LightSchedule, m: &FluxModel, dt: f64) -> Result<()> {
        let red1 = light.red_for(Branch::In1, self.t);
        let red2 = light.red_for(Branch::In2, self.t);
        let vel = self.velocities(light, m);
        for (x, v) in self.xs.iter_mut().zip(&vel) {
            *x += v * dt;
        }
        self.t += dt;

        // relabel crossers road by road, front first; they enter road 0 at
        // the rear, keeping their relative order
        let mut crossers: Vec<usize> = Vec::new();
        for road in [Branch::In1, Branch::In2] {
            let list = &mut self.order[road.index()];
            while let Some(&front) = list.last() {
                if self.xs[front] >= 0.0 {
                    let red = if road == Branch::In1 { red1 } else { red2 };
                    if red {
                        return Err(Error::Invariant {
                            context: "micro step".into(),
                            detail: format!(
                                "vehicle {front} crossed the junction against a red light \
                                 (dt too large)"
                            ),
                        });
                    }
                    list.pop();
                    self.roads[front] = Branch::Out;
                    crossers.push(front);
                } else {
                    break;
                }
            }
        }
        if !crossers.is_empty() {
            crossers.sort_by(|&i, &j| self.xs[i].total_cmp(&self.xs[j]));
            crossers.extend_from_slice(&self.order[0]);
            self.order[0] = crossers;
        }

        self.check_labels()?;
        self.check_no_collision()
    }

    /// Lemma-style dichotomy: any leader gap below `e_min` must straddle the
    /// junction. Returns the offending pair if violated.
    pub fn check_tight_gaps(&self, m: &FluxModel) -> Result<()> {
        let e_min = m.e_min();
        let leaders = self.leaders();
        for (i, lead) in leaders.iter().enumerate() {
            if let Some(l) = *lead {
                let gap = self.xs[l] - self.xs[i];
                if gap < e_min * (1.0 - 1e-12) && !(self.xs[i] < 0.0 && self.xs[l] >= 0.0) {
                    return Err(Error::Invariant {
                        context: "micro state".into(),
                        detail: format!(
                            "gap {} < 1/rho_max between {} (x={}) and {} (x={}) away from \
                             the junction at t = {}",
                            gap, i, self.xs[i], l, self.xs[l], self.t
                        ),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Largest Euler step kept stable by the anti-overtaking guard:
/// `min(e_min / (2 V_max), 1 / (2 Lip(V)))`.
pub fn max_stable_dt(m: &FluxModel) -> f64 {
    (0.5 * m.e_min() / m.v_max()).min(0.5 / m.lip_v())
}

/// The scaled empirical density built from vehicle gaps (value
/// `1/(X^lead - X^i)` on the scaled interval between vehicle and leader),
/// split by branch.
#[derive(Debug, Clone)]
pub struct EmpiricalDensity {
    pub epsilon: f64,
    /// Per-branch density in scaled coordinates, indexed 0, 1, 2.
    pub branches: [StepFn; 3],
    /// Scaled position of the front-most vehicle per branch.
    pub front: [Option<f64>; 3],
}

/// Builds the empirical density of `state` at scale `epsilon`.
pub fn empirical_density(state: &MicroState, epsilon: f64) -> EmpiricalDensity {
    let leaders = state.leaders();
    let mut branches: [Vec<(f64, f64, f64)>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (i, lead) in leaders.iter().enumerate() {
        if let Some(l) = *lead {
            let gap = state.positions()[l] - state.positions()[i];
            let lo = epsilon * state.positions()[i];
            let hi = epsilon * state.positions()[l];
            if hi > lo {
                branches[state.roads()[i].index()].push((lo, hi, 1.0 / gap));
            }
        }
    }
    let front = [
        state.front_of(Branch::Out).map(|x| epsilon * x),
        state.front_of(Branch::In1).map(|x| epsilon * x),
        state.front_of(Branch::In2).map(|x| epsilon * x),
    ];
    let branches = branches.map(|iv| StepFn::from_intervals(iv).expect("gap intervals disjoint"));
    EmpiricalDensity {
        epsilon,
        branches,
        front,
    }
}

/// Total variation of the velocity profile under the single-line convention:
/// the green incoming road glued to road 0 counts as one line, and the
/// stopped road is zeroed from its front vehicle onward.
pub fn tv_diagnostic(d: &EmpiricalDensity, phase: Phase, m: &FluxModel) -> f64 {
    let vmap = |r: f64| m.velocity_from_density_clamped(r);
    let (green, stopped) = match phase {
        Phase::GreenRoad1 => (1, 2),
        Phase::GreenRoad2 => (2, 1),
    };
    let line = StepFn::add(&d.branches[green], &d.branches[0]);
    let stopped_line = match d.front[stopped] {
        Some(x) => d.branches[stopped].truncate_above(x),
        None => StepFn::zero(),
    };
    line.tv_mapped(vmap) + stopped_line.tv_mapped(vmap)
}

/// Places vehicles by inverse-CDF sampling of per-branch density profiles
/// (scaled coordinates): vehicle `j` of a branch sits where the cumulative
/// mass reaches `j * epsilon`, so consecutive scaled gaps equal
/// `epsilon / rho` over each constant piece.
pub fn init_from_density(
    profiles: &[StepFn; 3],
    epsilon: f64,
    m: &FluxModel,
) -> Result<MicroState> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter {
            what: "epsilon",
            detail: format!("must be positive and finite, got {epsilon}"),
        });
    }
    let mut xs = Vec::new();
    let mut roads = Vec::new();
    for (k, profile) in profiles.iter().enumerate() {
        let road = Branch::from_index(k).unwrap();
        for (v, w) in profile.values().iter().zip(profile.breakpoints().windows(2)) {
            if *v < 0.0 || *v > m.rho_max() * (1.0 + 1e-12) {
                return Err(Error::InvalidScenario {
                    field: format!("profiles[{k}]"),
                    detail: format!("density {v} outside [0, rho_max]"),
                });
            }
            let bad_side = match road {
                Branch::Out => w[0] < 0.0,
                _ => w[1] > 0.0 && *v > 0.0,
            };
            if bad_side && *v > 0.0 {
                return Err(Error::InvalidScenario {
                    field: format!("profiles[{k}]"),
                    detail: "support on the wrong side of the junction".into(),
                });
            }
        }
        let mass = profile.integral();
        if mass <= 1e-14 {
            continue;
        }
        let ratio = mass / epsilon;
        let n = if (ratio - ratio.round()).abs() < 1e-9 {
            ratio.round() as usize
        } else {
            ratio.ceil() as usize
        };
        let mut acc = 0.0;
        let mut piece = 0;
        let vals = profile.values();
        let bps = profile.breakpoints();
        for j in 0..n {
            let level = j as f64 * epsilon;
            // advance to the piece containing this mass level
            while piece < vals.len() {
                let piece_mass = vals[piece] * (bps[piece + 1] - bps[piece]);
                if acc + piece_mass > level + 1e-15 * mass.max(1.0) || piece + 1 == vals.len() {
                    break;
                }
                acc += piece_mass;
                piece += 1;
            }
            let rho = vals[piece];
            let x_scaled = if rho > 0.0 {
                bps[piece] + (level - acc) / rho
            } else {
                bps[piece]
            };
            xs.push(x_scaled / epsilon);
            roads.push(road);
        }
    }
    let state = MicroState::new(0.0, xs, roads)?;
    // initial spacing must respect the minimal gap everywhere
    let leaders = state.leaders();
    for (i, lead) in leaders.iter().enumerate() {
        if let Some(l) = *lead {
            let gap = state.positions()[l] - state.positions()[i];
            if gap < m.e_min() * (1.0 - 1e-9) {
                return Err(Error::InvalidScenario {
                    field: "profiles".into(),
                    detail: format!(
                        "initial gap {gap} between vehicles {i} and {l} is below 1/rho_max; \
                         branch masses should be multiples of epsilon"
                    ),
                });
            }
        }
    }
    Ok(state)
}

/// Options for a microscopic run.
#[derive(Debug, Clone)]
pub struct MicroRunOpts {
    /// Scaled horizon.
    pub t_end: f64,
    /// Unscaled Euler step; capped by [`max_stable_dt`].
    pub dt: f64,
    /// Number of uniform snapshot intervals over `[0, t_end]` (snapshots at
    /// `j * t_end / n_snapshots`, endpoints included).
    pub n_snapshots: usize,
    /// Record the density of this branch at every step (dense history for
    /// entropy residuals).
    pub dense_branch: Option<Branch>,
}

/// One emitted snapshot (scaled time).
#[derive(Debug, Clone)]
pub struct MicroSnapshot {
    pub t: f64,
    pub phase: Phase,
    pub density: EmpiricalDensity,
    /// `(scaled position, road index)` per vehicle, in vehicle-id order.
    pub vehicles: Vec<(f64, u8)>,
}

/// Dense per-step history of one branch's density, for exact space-time
/// integrals (the density is held constant on `[times[j], times[j+1])`).
#[derive(Debug, Clone)]
pub struct LineHistory {
    pub times: Vec<f64>,
    pub states: Vec<StepFn>,
}

/// Result of a microscopic run.
#[derive(Debug, Clone)]
pub struct MicroRun {
    pub epsilon: f64,
    pub n_vehicles: usize,
    pub snapshots: Vec<MicroSnapshot>,
    /// `(scaled time, TV of the velocity profile)` once per step.
    pub tv_series: Vec<(f64, f64)>,
    pub dense: Option<LineHistory>,
    /// Recorded (non-fatal) invariant violations.
    pub violations: Vec<String>,
}

impl MicroRun {
    pub fn max_tv(&self) -> f64 {
        self.tv_series.iter().map(|&(_, tv)| tv).fold(0.0, f64::max)
    }
}

/// Runs the microscopic model from `initial`, splitting steps at light
/// switches and snapshot times. Density-bound checks run at every snapshot;
/// ordering and label invariants at every step.
pub fn simulate_micro(
    m: &FluxModel,
    light: &LightSchedule,
    epsilon: f64,
    initial: MicroState,
    opts: &MicroRunOpts,
) -> Result<MicroRun> {
    if !(opts.t_end > 0.0) {
        return Err(Error::InvalidParameter {
            what: "t_end",
            detail: "must be positive".into(),
        });
    }
    let dt_cap = max_stable_dt(m);
    if !(opts.dt > 0.0) || opts.dt > dt_cap * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter {
            what: "dt",
            detail: format!("must lie in (0, {dt_cap}] (anti-overtaking guard), got {}", opts.dt),
        });
    }
    if opts.n_snapshots == 0 {
        return Err(Error::InvalidParameter {
            what: "n_snapshots",
            detail: "need at least one snapshot interval".into(),
        });
    }

    let horizon = opts.t_end / epsilon; // unscaled
    let snap_times: Vec<f64> = (0..=opts.n_snapshots)
        .map(|j| horizon * j as f64 / opts.n_snapshots as f64)
        .collect();

    let mut state = initial;
    state.t = 0.0;
    let n_vehicles = state.len();
    let mut run = MicroRun {
        epsilon,
        n_vehicles,
        snapshots: Vec::with_capacity(snap_times.len()),
        tv_series: Vec::new(),
        dense: opts.dense_branch.map(|_| LineHistory {
            times: Vec::new(),
            states: Vec::new(),
        }),
        violations: Vec::new(),
    };

    let record = |state: &MicroState, run: &mut MicroRun| {
        let density = empirical_density(state, epsilon);
        let t_scaled = epsilon * state.t;
        let phase = light.phase(state.t);
        run.tv_series
            .push((t_scaled, tv_diagnostic(&density, phase, m)));
        if let (Some(branch), Some(dense)) = (opts.dense_branch, run.dense.as_mut()) {
            dense.times.push(t_scaled);
            dense.states.push(density.branches[branch.index()].clone());
        }
        density
    };

    let mut next_snap = 0usize;
    let density = record(&state, &mut run);
    emit_snapshot(&state, density, light, epsilon, m, &mut run);
    next_snap += 1;

    while state.t < horizon * (1.0 - 1e-12) {
        let t_snap = snap_times[next_snap.min(opts.n_snapshots)];
        let t_switch = light.next_switch_after(state.t);
        let t_event = t_snap.min(t_switch).min(horizon);
        // march to the event in guarded steps, landing on it exactly
        let span = t_event - state.t;
        let n_sub = (span / opts.dt).ceil().max(1.0) as usize;
        let h = span / n_sub as f64;
        for sub in 0..n_sub {
            state.step(light, m, h)?;
            if sub + 1 == n_sub {
                state.t = t_event; // kill roundoff drift at event times
            }
            if state.len() != n_vehicles {
                return Err(Error::Invariant {
                    context: "micro run".into(),
                    detail: "vehicle count changed".into(),
                });
            }
            if let Err(e) = state.check_tight_gaps(m) {
                run.violations.push(e.to_string());
            }
            let density = record(&state, &mut run);
            if sub + 1 == n_sub && (t_event - t_snap).abs() < 1e-12 * horizon.max(1.0) {
                check_density_bounds(&density, epsilon, m, &mut run.violations);
                emit_snapshot(&state, density, light, epsilon, m, &mut run);
                if next_snap < opts.n_snapshots {
                    next_snap += 1;
                }
            }
        }
    }
    Ok(run)
}

fn emit_snapshot(
    state: &MicroState,
    density: EmpiricalDensity,
    light: &LightSchedule,
    epsilon: f64,
    _m: &FluxModel,
    run: &mut MicroRun,
) {
    run.snapshots.push(MicroSnapshot {
        t: epsilon * state.t,
        phase: light.phase(state.t),
        density,
        vehicles: state
            .positions()
            .iter()
            .zip(state.roads())
            .map(|(&x, &r)| (epsilon * x, r.index() as u8))
            .collect(),
    });
}

/// Uniform density bound away from the junction and the small-mass window
/// around it: values above `rho_max` may only straddle
/// `(-eps/rho_max, eps/rho_max)`, and for the incoming branches the mass in
/// that window stays below `3 eps`.
fn check_density_bounds(
    d: &EmpiricalDensity,
    epsilon: f64,
    m: &FluxModel,
    violations: &mut Vec<String>,
) {
    let window = epsilon * m.e_min();
    let cap = m.rho_max() * (1.0 + 1e-12);
    for (k, branch) in d.branches.iter().enumerate() {
        for (v, w) in branch.values().iter().zip(branch.breakpoints().windows(2)) {
            if *v > cap {
                let pad = 1e-12 * window.max(1.0);
                let straddles = w[0] >= -window - pad && w[1] <= window + pad;
                if k == 0 || !straddles {
                    violations.push(format!(
                        "branch {k} density {v} > rho_max on [{}, {}] away from the junction",
                        w[0], w[1]
                    ));
                }
            }
        }
        if k > 0 {
            let mass = branch.integral_over(-window, window);
            if mass > 3.0 * epsilon * (1.0 + 1e-9) {
                violations.push(format!(
                    "branch {k} mass {mass} inside the junction window exceeds 3 epsilon"
                ));
            }
        }
    }
}
