//! Quantitative experiments: exact L1 comparisons between model runs,
//! entropy residuals against hat test functions, total-variation bounds, and
//! junction-trace checks.

use serde::Serialize;

use crate::error::Error;
use crate::exec;
use crate::flux::FluxModel;
use crate::germ::{direct_margins, DirectMargins, GermParams};
use crate::micro::LineHistory;
use crate::netfv::TraceSample;
use crate::stepfn::StepFn;
use crate::Result;

/// Per-branch densities of the whole network at one instant.
#[derive(Debug, Clone)]
pub struct NetworkDensity {
    /// Indexed 0 (outgoing), 1, 2.
    pub branches: [StepFn; 3],
}

/// Snapshot series of network densities, held constant on
/// `[times[j], times[j+1])`.
#[derive(Debug, Clone)]
pub struct NetworkHistory {
    pub times: Vec<f64>,
    pub states: Vec<NetworkDensity>,
}

/// Space-time comparison window: times in `[t0, t1]`, the junction
/// neighborhood `|x| < x_exclude` removed, positions capped at `|x| <= x_max`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Window {
    pub t0: f64,
    pub t1: f64,
    pub x_exclude: f64,
    pub x_max: f64,
}

impl Window {
    pub fn new(t0: f64, t1: f64, x_exclude: f64, x_max: f64) -> Self {
        Window {
            t0,
            t1,
            x_exclude,
            x_max,
        }
    }
}

/// Exact L1 distance between two network states over the window's spatial
/// part.
pub fn l1_network(a: &NetworkDensity, b: &NetworkDensity, w: &Window) -> f64 {
    let mut acc = 0.0;
    acc += StepFn::l1_distance(&a.branches[0], &b.branches[0], w.x_exclude, w.x_max);
    for k in 1..3 {
        acc += StepFn::l1_distance(&a.branches[k], &b.branches[k], -w.x_max, -w.x_exclude);
    }
    acc
}

/// Exact space-time L1 distance between two histories sharing snapshot
/// times.
pub fn l1_history(a: &NetworkHistory, b: &NetworkHistory, w: &Window) -> Result<f64> {
    if a.times.len() != b.times.len()
        || a.times
            .iter()
            .zip(&b.times)
            .any(|(x, y)| (x - y).abs() > 1e-9 * (1.0 + x.abs()))
    {
        return Err(Error::DomainMismatch {
            detail: "histories sample different times".into(),
        });
    }
    let mut acc = 0.0;
    for j in 0..a.times.len().saturating_sub(1) {
        let (lo, hi) = (a.times[j].max(w.t0), a.times[j + 1].min(w.t1));
        if hi > lo {
            acc += (hi - lo) * l1_network(&a.states[j], &b.states[j], w);
        }
    }
    Ok(acc)
}

/// A continuous piecewise-linear factor with compact support (zero outside
/// its knot span; the end values must vanish).
#[derive(Debug, Clone)]
pub struct PwLinear {
    knots: Vec<f64>,
    vals: Vec<f64>,
}

impl PwLinear {
    pub fn new(knots: Vec<f64>, vals: Vec<f64>) -> Result<Self> {
        if knots.len() != vals.len() || knots.len() < 2 {
            return Err(Error::InvalidParameter {
                what: "piecewise-linear factor",
                detail: "need matching knots and values, at least two".into(),
            });
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter {
                what: "piecewise-linear factor",
                detail: "knots must increase strictly".into(),
            });
        }
        if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter {
                what: "piecewise-linear factor",
                detail: "values must be finite and nonnegative".into(),
            });
        }
        if vals[0] != 0.0 || *vals.last().unwrap() != 0.0 {
            return Err(Error::InvalidParameter {
                what: "piecewise-linear factor",
                detail: "end values must vanish (compact support)".into(),
            });
        }
        Ok(PwLinear { knots, vals })
    }

    /// The unit hat rising on `[a, b]`, falling on `[b, c]`.
    pub fn hat(a: f64, b: f64, c: f64) -> Result<Self> {
        PwLinear::new(vec![a, b, c], vec![0.0, 1.0, 0.0])
    }

    /// `alpha * self + beta * other` on identical knots.
    pub fn combine(alpha: f64, a: &PwLinear, beta: f64, b: &PwLinear) -> Result<PwLinear> {
        if a.knots != b.knots {
            return Err(Error::DomainMismatch {
                detail: "combining piecewise-linear factors requires shared knots".into(),
            });
        }
        PwLinear::new(
            a.knots.clone(),
            a.vals
                .iter()
                .zip(&b.vals)
                .map(|(x, y)| alpha * x + beta * y)
                .collect(),
        )
    }

    pub fn support(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.knots[0] || x >= *self.knots.last().unwrap() {
            return 0.0;
        }
        let i = match self.knots.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(i) => return self.vals[i],
            Err(i) => i - 1,
        };
        let frac = (x - self.knots[i]) / (self.knots[i + 1] - self.knots[i]);
        self.vals[i] + frac * (self.vals[i + 1] - self.vals[i])
    }

    pub fn integral(&self) -> f64 {
        self.knots
            .windows(2)
            .zip(self.vals.windows(2))
            .map(|(k, v)| 0.5 * (v[0] + v[1]) * (k[1] - k[0]))
            .sum()
    }

    pub fn max_abs_slope(&self) -> f64 {
        self.knots
            .windows(2)
            .zip(self.vals.windows(2))
            .map(|(k, v)| ((v[1] - v[0]) / (k[1] - k[0])).abs())
            .fold(0.0, f64::max)
    }
}

/// Outcome of one entropy-residual evaluation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EntropyResidual {
    /// The space-time integral of
    /// `|rho - k| phi_t + sgn(rho - k)(f(rho) - f(k)) phi_x`.
    pub lhs: f64,
    /// The admissible floor `-eps * sup_t TV(v(rho)) * int ||phi_x||`.
    pub bound: f64,
    pub sup_tv: f64,
}

impl EntropyResidual {
    /// The approximate-entropy check, with `slack >= 0` added to the floor.
    pub fn passes(&self, slack: f64) -> bool {
        self.lhs >= self.bound - slack
    }
}

/// Evaluates the Kruzhkov residual of a dense single-line history against the
/// tensor test function `phi(t, x) = phi_t(t) * phi_x(x)`, exactly (the
/// density is piecewise constant in space and, by convention, in time between
/// recorded steps).
///
/// The spatial support must stay clear of the junction at `x = 0`.
pub fn entropy_residual(
    line: &LineHistory,
    m: &FluxModel,
    epsilon: f64,
    k: f64,
    phi_t: &PwLinear,
    phi_x: &PwLinear,
) -> Result<EntropyResidual> {
    let (x_lo, x_hi) = phi_x.support();
    if x_lo <= 0.0 && x_hi >= 0.0 {
        return Err(Error::Refused {
            detail: "test function support touches the junction".into(),
        });
    }
    let (t_lo, t_hi) = phi_t.support();
    if line.times.len() < 2 {
        return Err(Error::DomainMismatch {
            detail: "line history too short".into(),
        });
    }
    let (first, last) = (line.times[0], *line.times.last().unwrap());
    if t_lo < first - 1e-12 || t_hi > last + 1e-12 {
        return Err(Error::DomainMismatch {
            detail: format!(
                "test function time support [{t_lo}, {t_hi}] outside the recorded [{first}, {last}]"
            ),
        });
    }
    let f_k = m.flux(k)?;

    // time cut points: history steps and phi_t knots inside the support
    let mut cuts: Vec<f64> = line
        .times
        .iter()
        .cloned()
        .filter(|&t| t > t_lo && t < t_hi)
        .chain(phi_t.knots().iter().cloned())
        .collect();
    cuts.retain(|&t| t >= t_lo && t <= t_hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let spatial = |rho: &StepFn| -> (f64, f64) {
        // cuts: density breakpoints and phi_x knots, clipped to the support
        let mut xs: Vec<f64> = rho
            .breakpoints()
            .iter()
            .cloned()
            .filter(|&x| x > x_lo && x < x_hi)
            .chain(phi_x.knots().iter().cloned())
            .collect();
        xs.retain(|&x| x >= x_lo && x <= x_hi);
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let mut i_eta = 0.0; // ∫ |rho - k| phi_x
        let mut i_q = 0.0; // ∫ sgn(rho - k)(f(rho) - f(k)) phi_x'
        for w in xs.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let r = rho.eval(mid);
            let sgn = if r > k {
                1.0
            } else if r < k {
                -1.0
            } else {
                0.0
            };
            i_eta += (r - k).abs() * 0.5 * (phi_x.eval(w[0]) + phi_x.eval(w[1])) * (w[1] - w[0]);
            i_q += sgn * (m.flux_clamped(r) - f_k) * (phi_x.eval(w[1]) - phi_x.eval(w[0]));
        }
        (i_eta, i_q)
    };

    let snapshot_at = |t: f64| -> usize {
        // density held constant on [times[j], times[j+1])
        match line.times.binary_search_by(|p| p.total_cmp(&t)) {
            Ok(j) => j,
            Err(j) => j - 1,
        }
        .min(line.states.len() - 1)
    };

    let mut lhs = 0.0;
    let mut sup_tv: f64 = 0.0;
    let mut cached: Option<(usize, (f64, f64))> = None;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let j = snapshot_at(0.5 * (a + b));
        let (i_eta, i_q) = match cached {
            Some((jc, v)) if jc == j => v,
            _ => {
                let v = spatial(&line.states[j]);
                cached = Some((j, v));
                v
            }
        };
        // phi_t is linear on [a, b] by construction of the cuts
        let d_phit = phi_t.eval(b) - phi_t.eval(a);
        let int_phit = 0.5 * (phi_t.eval(a) + phi_t.eval(b)) * (b - a);
        lhs += i_eta * d_phit + i_q * int_phit;
        sup_tv = sup_tv.max(line.states[j].tv_mapped_within(x_lo, x_hi, |r| {
            m.velocity_from_density_clamped(r)
        }));
    }
    let bound = -epsilon * sup_tv * phi_x.max_abs_slope() * phi_t.integral();
    Ok(EntropyResidual { lhs, bound, sup_tv })
}

/// Which total-variation bound to check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TvKind {
    /// Unconstrained line: TV never increases.
    FreeLine,
    /// Line stopped by a red light: TV stays within `TV(0) + 4 V_max`.
    StoppedLine,
    /// Whole junction system: the growth ratio is reported, not asserted.
    WholeSystem,
}

/// Outcome of a TV-bound check over a recorded series.
#[derive(Debug, Clone, Serialize)]
pub struct TvCheck {
    pub kind: TvKind,
    pub tv_initial: f64,
    pub tv_max: f64,
    /// Largest increase `TV(t2) - TV(t1)` over ordered pairs (free line).
    pub worst_increase: f64,
    /// For `StoppedLine`: `TV(0) + 4 V_max`; for `WholeSystem`: the scale
    /// `1 + (1/eps) max(1/T1, 1/(T - T1))`.
    pub reference: f64,
    /// `tv_max / reference` (whole-system only, informational).
    pub ratio: Option<f64>,
    /// None for whole-system (nothing asserted).
    pub passed: Option<bool>,
}

/// Checks a TV time series against the requested bound. `whole_scale` feeds
/// the whole-system reference `(epsilon, T1, T - T1)` in unscaled time.
pub fn tv_bound_check(
    series: &[(f64, f64)],
    kind: TvKind,
    m: &FluxModel,
    tol: f64,
    whole_scale: Option<(f64, f64, f64)>,
) -> Result<TvCheck> {
    if series.is_empty() {
        return Err(Error::DomainMismatch {
            detail: "empty TV series".into(),
        });
    }
    let tv0 = series[0].1;
    let tv_max = series.iter().map(|&(_, tv)| tv).fold(0.0, f64::max);
    let mut running_min = f64::INFINITY;
    let mut worst_increase: f64 = f64::NEG_INFINITY;
    for &(_, tv) in series {
        running_min = running_min.min(tv);
        worst_increase = worst_increase.max(tv - running_min);
    }
    Ok(match kind {
        TvKind::FreeLine => TvCheck {
            kind,
            tv_initial: tv0,
            tv_max,
            worst_increase,
            reference: tv0,
            ratio: None,
            passed: Some(worst_increase <= tol),
        },
        TvKind::StoppedLine => {
            let reference = tv0 + 4.0 * m.v_max();
            TvCheck {
                kind,
                tv_initial: tv0,
                tv_max,
                worst_increase,
                reference,
                ratio: None,
                passed: Some(tv_max <= reference + tol),
            }
        }
        TvKind::WholeSystem => {
            let reference = match whole_scale {
                Some((eps, t1, t2)) => 1.0 + (1.0 / eps) * (1.0 / t1).max(1.0 / t2),
                None => {
                    return Err(Error::InvalidParameter {
                        what: "whole_scale",
                        detail: "whole-system check needs (epsilon, T1, T - T1)".into(),
                    })
                }
            };
            TvCheck {
                kind,
                tv_initial: tv0,
                tv_max,
                worst_increase,
                reference,
                ratio: Some(tv_max / reference),
                passed: None,
            }
        }
    })
}

/// Aggregated germ-membership statistics of a junction trace.
#[derive(Debug, Clone, Serialize)]
pub struct GermTraceReport {
    pub samples_total: usize,
    pub samples_checked: usize,
    pub samples_passed: usize,
    pub pass_fraction: f64,
    pub tol: f64,
    pub burn_in: f64,
    pub worst_violation: f64,
    pub worst_time: f64,
    pub worst_margins: Option<DirectMargins>,
}

/// Checks every post-burn-in trace sample for direct germ membership at flux
/// tolerance `tol`.
pub fn germ_trace_check(
    trace: &[TraceSample],
    m: &FluxModel,
    g: &GermParams,
    tol: f64,
    burn_in: f64,
) -> Result<GermTraceReport> {
    if trace.is_empty() {
        return Err(Error::DomainMismatch {
            detail: "empty junction trace".into(),
        });
    }
    let mut checked = 0usize;
    let mut passed = 0usize;
    let mut worst = f64::NEG_INFINITY;
    let mut worst_time = f64::NAN;
    let mut worst_margins = None;
    for s in trace {
        if s.t < burn_in {
            continue;
        }
        checked += 1;
        let p = crate::germ::GermPoint::new(s.p[0], s.p[1], s.p[2]);
        let margins = direct_margins(m, g, &p)?;
        let v = margins.violation();
        if v <= tol {
            passed += 1;
        }
        if v > worst {
            worst = v;
            worst_time = s.t;
            worst_margins = Some(margins);
        }
    }
    if checked == 0 {
        return Err(Error::DomainMismatch {
            detail: "no trace samples after burn-in".into(),
        });
    }
    Ok(GermTraceReport {
        samples_total: trace.len(),
        samples_checked: checked,
        samples_passed: passed,
        pass_fraction: passed as f64 / checked as f64,
        tol,
        burn_in,
        worst_violation: worst,
        worst_time,
        worst_margins,
    })
}

/// Time-averages a switching trace over whole periods. Each sample is held
/// until the next one; buckets without full coverage are dropped.
pub fn average_over_periods(trace: &[TraceSample], period: f64) -> Vec<TraceSample> {
    if trace.len() < 2 || !(period > 0.0) {
        return Vec::new();
    }
    let t_end = trace.last().unwrap().t;
    let n_buckets = (t_end / period + 1e-9).floor() as usize;
    let mut acc = vec![([0.0; 3], [0.0; 3], 0.0); n_buckets];
    for w in trace.windows(2) {
        let (a, b) = (w[0].t, w[1].t);
        if b <= a {
            continue;
        }
        let first = (a / period).floor() as usize;
        let last = ((b / period).ceil() as usize).min(n_buckets);
        for (bucket, entry) in acc.iter_mut().enumerate().take(last).skip(first) {
            let lo = a.max(bucket as f64 * period);
            let hi = b.min((bucket + 1) as f64 * period);
            if hi > lo {
                let wgt = hi - lo;
                for k in 0..3 {
                    entry.0[k] += wgt * w[0].p[k];
                    entry.1[k] += wgt * w[0].flux[k];
                }
                entry.2 += wgt;
            }
        }
    }
    acc.iter()
        .enumerate()
        .filter(|(_, e)| e.2 >= period * (1.0 - 1e-6))
        .map(|(i, e)| TraceSample {
            t: (i as f64 + 0.5) * period,
            p: [e.0[0] / e.2, e.0[1] / e.2, e.0[2] / e.2],
            flux: [e.1[0] / e.2, e.1[1] / e.2, e.1[2] / e.2],
        })
        .collect()
}

/// One sweep member of a convergence study.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    /// The swept parameter (scale or period).
    pub param: f64,
    pub n_vehicles: usize,
    pub l1_error: f64,
    pub tv_max: f64,
    /// Wall-clock seconds for this member (not part of determinism checks).
    pub runtime_s: f64,
}

/// A full convergence sweep with its monotonicity verdict.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub label: String,
    pub window: Window,
    pub rows: Vec<SweepRow>,
    /// Errors decrease strictly, allowing 5% slack on the final step.
    pub strictly_decreasing: bool,
    pub final_to_initial: f64,
}

/// Runs one sweep member: returns the two histories to compare, the vehicle
/// count (0 when not applicable) and the member's max TV.
pub type SweepMember = (NetworkHistory, NetworkHistory, usize, f64);

/// Drives a convergence sweep: members run concurrently, rows are assembled
/// in parameter order.
pub fn convergence_study<F>(
    label: &str,
    params: &[f64],
    window: &Window,
    run_member: F,
) -> Result<ConvergenceReport>
where
    F: Fn(f64) -> Result<SweepMember> + Sync + Send,
{
    if params.is_empty() {
        return Err(Error::InvalidParameter {
            what: "sweep parameters",
            detail: "need at least one value".into(),
        });
    }
    if params.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter {
            what: "sweep parameters",
            detail: "must be sorted strictly decreasing".into(),
        });
    }
    let members = exec::map_indexed(params.len(), |i| {
        let start = std::time::Instant::now();
        let member = run_member(params[i]);
        (member, start.elapsed().as_secs_f64())
    });
    let mut rows = Vec::with_capacity(params.len());
    for (i, (member, runtime_s)) in members.into_iter().enumerate() {
        let (a, b, n_vehicles, tv_max) = member?;
        rows.push(SweepRow {
            param: params[i],
            n_vehicles,
            l1_error: l1_history(&a, &b, window)?,
            tv_max,
            runtime_s,
        });
    }
    let errors: Vec<f64> = rows.iter().map(|r| r.l1_error).collect();
    let mut strictly_decreasing = true;
    for i in 1..errors.len() {
        let slack = if i + 1 == errors.len() { 1.05 } else { 1.0 };
        if !(errors[i] < errors[i - 1] * slack) {
            strictly_decreasing = false;
        }
    }
    let final_to_initial = if errors[0] > 0.0 {
        errors[errors.len() - 1] / errors[0]
    } else if errors.iter().all(|&e| e == 0.0) {
        0.0
    } else {
        1.0
    };
    Ok(ConvergenceReport {
        label: label.to_string(),
        window: *window,
        rows,
        strictly_decreasing,
        final_to_initial,
    })
}
