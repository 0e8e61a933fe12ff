//! The admissible set of junction traces (the germ), its generating set, and
//! membership tests.
//!
//! A trace triple `P = (p0, p1, p2)` collects the densities seen at the
//! junction from the outgoing road 0 and the incoming roads 1, 2. Inside the
//! box `Q = [0, rho_max]^3`, the germ consists of the triples that
//!
//! * satisfy the Rankine-Hugoniot balance `f(p0) = f(p1) + f(p2)`,
//! * respect the per-road capacity split `f(p_k) <= theta_k * f_max`, and
//! * keep enough supply on the incoming roads:
//!   `f^-(p_k) >= theta_k * f^-(p0)` for `k = 1, 2`,
//!
//! where `theta_0 = 1`, `theta_1 = theta`, `theta_2 = 1 - theta` and `theta`
//! is the fraction of time the light is green for road 1.
//!
//! Membership can equivalently be certified by nonnegative Kruzhkov
//! dissipation against a generating set `E`: the curve `Gamma` of capacity-
//! split triples on the decreasing flux branch plus four corner points.
//! [`brute_force_equivalence`] sweeps a lattice over `Q` and compares the two
//! characterizations, excluding a discretization band around the boundary.

use serde::Serialize;

use crate::error::Error;
use crate::exec;
use crate::flux::FluxModel;
use crate::Result;

/// A trace triple at the junction: outgoing road 0, incoming roads 1 and 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GermPoint {
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
}

impl GermPoint {
    pub fn new(p0: f64, p1: f64, p2: f64) -> Self {
        GermPoint { p0, p1, p2 }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.p0, self.p1, self.p2]
    }

    fn check(&self, m: &FluxModel) -> Result<()> {
        for (k, &p) in self.as_array().iter().enumerate() {
            if !(p >= -1e-12 * m.rho_max()) || !(p <= m.rho_max() * (1.0 + 1e-12)) {
                return Err(Error::OutOfDomain {
                    what: match k {
                        0 => "trace p0",
                        1 => "trace p1",
                        _ => "trace p2",
                    },
                    value: p,
                });
            }
        }
        Ok(())
    }
}

/// The green-time split: `theta` is the fraction of the period during which
/// road 1 may send flux into the junction.
#[derive(Debug, Clone, Copy)]
pub struct GermParams {
    theta: f64,
}

impl GermParams {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidParameter {
                what: "theta",
                detail: format!("must lie in (0, 1), got {theta}"),
            });
        }
        Ok(GermParams { theta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `[theta_0, theta_1, theta_2] = [1, theta, 1 - theta]`.
    pub fn split(&self) -> [f64; 3] {
        [1.0, self.theta, 1.0 - self.theta]
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Kruzhkov entropy pair `(|p - pbar|, sign(p - pbar) (f(p) - f(pbar)))`.
pub fn entropy_pair(m: &FluxModel, pbar: f64, p: f64) -> Result<(f64, f64)> {
    let fp = m.flux(p)?;
    let fpb = m.flux(pbar)?;
    Ok(((p - pbar).abs(), sign(p - pbar) * (fp - fpb)))
}

/// The entropy flux `q(pbar, p)` on a caller-guaranteed domain.
#[inline]
fn q_clamped(m: &FluxModel, pbar: f64, p: f64) -> f64 {
    sign(p - pbar) * (m.flux_clamped(p) - m.flux_clamped(pbar))
}

/// Junction dissipation `D(Pbar, P) = q(pbar1, p1) + q(pbar2, p2) - q(pbar0, p0)`,
/// the incoming minus outgoing Kruzhkov entropy fluxes. Symmetric in its two
/// arguments, zero on the diagonal.
pub fn dissipation(m: &FluxModel, pbar: &GermPoint, p: &GermPoint) -> Result<f64> {
    pbar.check(m)?;
    p.check(m)?;
    Ok(dissipation_clamped(m, pbar, p))
}

#[inline]
fn dissipation_clamped(m: &FluxModel, pbar: &GermPoint, p: &GermPoint) -> f64 {
    q_clamped(m, pbar.p1, p.p1) + q_clamped(m, pbar.p2, p.p2) - q_clamped(m, pbar.p0, p.p0)
}

/// Rankine-Hugoniot residual `f(p0) - f(p1) - f(p2)`.
pub fn rh_residual(m: &FluxModel, p: &GermPoint) -> Result<f64> {
    p.check(m)?;
    Ok(m.flux_clamped(p.p0) - m.flux_clamped(p.p1) - m.flux_clamped(p.p2))
}

/// The capacity-split generator at flux level `lam`:
/// `((f^-)^{-1}(lam), (f^-)^{-1}(theta_1 lam), (f^-)^{-1}(theta_2 lam))`.
/// Satisfies Rankine-Hugoniot by construction.
pub fn gamma_point(m: &FluxModel, g: &GermParams, lam: f64) -> Result<GermPoint> {
    let th = g.split();
    Ok(GermPoint::new(
        m.supply_inv(lam)?,
        m.supply_inv(th[1] * lam)?,
        m.supply_inv(th[2] * lam)?,
    ))
}

/// The four corner generators `[P0, P1, P2, P3]`:
/// `P0 = (rho_max, rho_max, rho_max)`, `P3 = (0, 0, 0)`, and the one-road
/// saturation points `P1`, `P2`.
pub fn corner_points(m: &FluxModel, g: &GermParams) -> Result<[GermPoint; 4]> {
    let th = g.split();
    let p0 = GermPoint::new(m.rho_max(), m.rho_max(), m.rho_max());
    let p1 = GermPoint::new(
        m.demand_inv(th[1] * m.f_max())?,
        m.supply_inv(th[1] * m.f_max())?,
        0.0,
    );
    let p2 = GermPoint::new(
        m.demand_inv(th[2] * m.f_max())?,
        0.0,
        m.supply_inv(th[2] * m.f_max())?,
    );
    let p3 = GermPoint::new(0.0, 0.0, 0.0);
    Ok([p0, p1, p2, p3])
}

/// Signed slacks of the direct membership constraints. Positive means
/// satisfied with room to spare.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DirectMargins {
    /// Rankine-Hugoniot residual `f(p0) - f(p1) - f(p2)` (an equality: any
    /// nonzero value is a violation).
    pub rh: f64,
    /// `theta_k f_max - f(p_k)` for `k = 0, 1, 2`.
    pub cap: [f64; 3],
    /// `f^-(p_k) - theta_k f^-(p0)` for `k = 1, 2`.
    pub sup: [f64; 2],
}

impl DirectMargins {
    /// Worst violation in flux units; zero when every constraint holds.
    pub fn violation(&self) -> f64 {
        let mut v = self.rh.abs();
        for c in self.cap {
            v = v.max(-c);
        }
        for s in self.sup {
            v = v.max(-s);
        }
        v.max(0.0)
    }
}

/// Evaluates all direct-membership constraint slacks at `p`.
pub fn direct_margins(m: &FluxModel, g: &GermParams, p: &GermPoint) -> Result<DirectMargins> {
    p.check(m)?;
    let th = g.split();
    let f = [
        m.flux_clamped(p.p0),
        m.flux_clamped(p.p1),
        m.flux_clamped(p.p2),
    ];
    let s0 = m.supply_clamped(p.p0);
    Ok(DirectMargins {
        rh: f[0] - f[1] - f[2],
        cap: [
            th[0] * m.f_max() - f[0],
            th[1] * m.f_max() - f[1],
            th[2] * m.f_max() - f[2],
        ],
        sup: [
            m.supply_clamped(p.p1) - th[1] * s0,
            m.supply_clamped(p.p2) - th[2] * s0,
        ],
    })
}

/// Direct membership test against the defining constraints, at flux
/// tolerance `tol`.
pub fn in_germ_direct(m: &FluxModel, g: &GermParams, p: &GermPoint, tol: f64) -> Result<bool> {
    Ok(direct_margins(m, g, p)?.violation() <= tol)
}

/// The generating set `E`: a uniform discretization of the capacity-split
/// curve (always including both endpoints) plus the four corners.
#[derive(Debug, Clone)]
pub struct GeneratingSet {
    points: Vec<GermPoint>,
    gamma_len: usize,
}

impl GeneratingSet {
    /// Default number of curve samples.
    pub const DEFAULT_GAMMA_SAMPLES: usize = 200;

    pub fn new(m: &FluxModel, g: &GermParams, gamma_samples: usize) -> Result<Self> {
        if gamma_samples < 2 {
            return Err(Error::InvalidParameter {
                what: "gamma_samples",
                detail: "need at least the two endpoint samples".into(),
            });
        }
        let mut points = Vec::with_capacity(gamma_samples + 4);
        for j in 0..gamma_samples {
            let lam = m.f_max() * j as f64 / (gamma_samples - 1) as f64;
            points.push(gamma_point(m, g, lam)?);
        }
        points.extend_from_slice(&corner_points(m, g)?);
        let set = GeneratingSet {
            points,
            gamma_len: gamma_samples,
        };
        // every generator must itself be an (exact) germ member
        let tol = 1e-10 * m.f_max();
        for p in &set.points {
            let margins = direct_margins(m, g, p)?;
            if margins.violation() > tol {
                return Err(Error::Invariant {
                    context: "generating set construction".into(),
                    detail: format!(
                        "generator {:?} violates membership by {:.3e}",
                        p.as_array(),
                        margins.violation()
                    ),
                });
            }
        }
        Ok(set)
    }

    pub fn points(&self) -> &[GermPoint] {
        &self.points
    }

    /// The curve samples, without the corners.
    pub fn gamma(&self) -> &[GermPoint] {
        &self.points[..self.gamma_len]
    }

    pub fn corners(&self) -> &[GermPoint] {
        &self.points[self.gamma_len..]
    }
}

/// Smallest dissipation of `p` against every member of `set`.
pub fn min_dissipation(m: &FluxModel, p: &GermPoint, set: &GeneratingSet) -> f64 {
    set.points
        .iter()
        .map(|pb| dissipation_clamped(m, pb, p))
        .fold(f64::INFINITY, f64::min)
}

/// Generated membership test: `D(Pbar, P) >= -tol` for every generator.
pub fn in_germ_generated(m: &FluxModel, p: &GermPoint, set: &GeneratingSet, tol: f64) -> bool {
    min_dissipation(m, p, set) >= -tol
}

/// Options for [`brute_force_equivalence`].
#[derive(Debug, Clone)]
pub struct BruteForceOpts {
    /// Lattice spacing over each axis of `Q`.
    pub grid_step: f64,
    /// Number of curve samples in the generating set.
    pub gamma_samples: usize,
    /// Membership tolerance in flux units.
    pub tol: f64,
    /// Cap on retained witness points.
    pub max_witnesses: usize,
}

impl BruteForceOpts {
    pub fn new(grid_step: f64) -> Self {
        BruteForceOpts {
            grid_step,
            gamma_samples: GeneratingSet::DEFAULT_GAMMA_SAMPLES,
            tol: f64::NAN, // filled from the model at run time
            max_witnesses: 32,
        }
    }
}

/// A lattice point where the two membership tests disagree.
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub p: [f64; 3],
    pub direct: bool,
    pub generated: bool,
    pub direct_violation: f64,
    pub min_dissipation: f64,
}

/// Outcome of the lattice sweep comparing direct and generated membership.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub theta: f64,
    pub grid_step: f64,
    pub gamma_samples: usize,
    pub tol: f64,
    /// Half-width, in flux units, of the excluded boundary band:
    /// `2 * grid_step * Lip(f)`.
    pub band: f64,
    pub lattice_points: usize,
    pub direct_members: usize,
    pub generated_members: usize,
    pub disagreements_in_band: usize,
    pub disagreements_outside_band: usize,
    /// Up to `max_witnesses` outside-band disagreements, lattice order.
    pub witnesses: Vec<Witness>,
}

impl EquivalenceReport {
    /// The sweep's verdict: no disagreement survives outside the band.
    pub fn symmetric_difference_empty(&self) -> bool {
        self.disagreements_outside_band == 0
    }
}

struct SlabResult {
    direct: usize,
    generated: usize,
    in_band: usize,
    outside: usize,
    witnesses: Vec<Witness>,
}

/// Sweeps the lattice `{0, step, 2 step, ...}^3` over `Q`, classifies every
/// point by both membership tests and reports their symmetric difference.
/// Lattice points whose decision margin lies within the discretization band
/// of either boundary are excluded from the comparison.
pub fn brute_force_equivalence(
    m: &FluxModel,
    g: &GermParams,
    opts: &BruteForceOpts,
) -> Result<EquivalenceReport> {
    brute_force_impl(m, g, opts, false)
}

/// Sequential twin of [`brute_force_equivalence`], for benchmarking against
/// the parallel path. Produces an identical report.
pub fn brute_force_equivalence_serial(
    m: &FluxModel,
    g: &GermParams,
    opts: &BruteForceOpts,
) -> Result<EquivalenceReport> {
    brute_force_impl(m, g, opts, true)
}

fn brute_force_impl(
    m: &FluxModel,
    g: &GermParams,
    opts: &BruteForceOpts,
    force_serial: bool,
) -> Result<EquivalenceReport> {
    if !(opts.grid_step > 0.0) {
        return Err(Error::InvalidParameter {
            what: "grid_step",
            detail: "must be positive".into(),
        });
    }
    let n = (m.rho_max() / opts.grid_step + 1e-9).floor() as usize + 1;
    if n.pow(3) > 100_000_000 {
        return Err(Error::Refused {
            detail: format!(
                "lattice would have {} points (> 1e8); increase grid_step",
                n.pow(3)
            ),
        });
    }
    let tol = if opts.tol.is_nan() {
        1e-9 * m.f_max()
    } else {
        opts.tol
    };
    let band = 2.0 * opts.grid_step * m.max_char_speed();
    let set = GeneratingSet::new(m, g, opts.gamma_samples)?;
    let th = g.split();

    // per-axis caches: lattice coordinate, f and f^- values
    let axis: Vec<f64> = (0..n)
        .map(|j| (j as f64 * opts.grid_step).min(m.rho_max()))
        .collect();
    let f_ax: Vec<f64> = axis.iter().map(|&r| m.flux_clamped(r)).collect();
    let sup_ax: Vec<f64> = axis.iter().map(|&r| m.supply_clamped(r)).collect();
    // generator caches: coordinates and their fluxes
    let gen_p: Vec<[f64; 3]> = set.points.iter().map(|p| p.as_array()).collect();
    let gen_f: Vec<[f64; 3]> = set
        .points
        .iter()
        .map(|p| {
            [
                m.flux_clamped(p.p0),
                m.flux_clamped(p.p1),
                m.flux_clamped(p.p2),
            ]
        })
        .collect();

    let classify_slab = |i0: usize| -> SlabResult {
        let mut out = SlabResult {
            direct: 0,
            generated: 0,
            in_band: 0,
            outside: 0,
            witnesses: Vec::new(),
        };
        let (p0, f0, s0) = (axis[i0], f_ax[i0], sup_ax[i0]);
        for i1 in 0..n {
            let (p1, f1, s1) = (axis[i1], f_ax[i1], sup_ax[i1]);
            for i2 in 0..n {
                let (p2, f2, s2) = (axis[i2], f_ax[i2], sup_ax[i2]);
                let rh = f0 - f1 - f2;
                let mut violation = rh.abs();
                violation = violation.max(f0 - th[0] * m.f_max());
                violation = violation.max(f1 - th[1] * m.f_max());
                violation = violation.max(f2 - th[2] * m.f_max());
                violation = violation.max(th[1] * s0 - s1);
                violation = violation.max(th[2] * s0 - s2);
                let violation = violation.max(0.0);

                // dissipation against the generators, with early exit once the
                // point is rejected beyond the band
                let mut dmin = f64::INFINITY;
                for (gp, gf) in gen_p.iter().zip(&gen_f) {
                    let d = sign(p1 - gp[1]) * (f1 - gf[1]) + sign(p2 - gp[2]) * (f2 - gf[2])
                        - sign(p0 - gp[0]) * (f0 - gf[0]);
                    if d < dmin {
                        dmin = d;
                        if dmin < -band {
                            break;
                        }
                    }
                }

                let direct = violation <= tol;
                let generated = dmin >= -tol;
                if direct {
                    out.direct += 1;
                }
                if generated {
                    out.generated += 1;
                }
                if direct != generated {
                    if violation <= band || dmin.abs() <= band {
                        out.in_band += 1;
                    } else {
                        out.outside += 1;
                        out.witnesses.push(Witness {
                            p: [p0, p1, p2],
                            direct,
                            generated,
                            direct_violation: violation,
                            min_dissipation: min_dissipation(
                                m,
                                &GermPoint::new(p0, p1, p2),
                                &set,
                            ),
                        });
                    }
                }
            }
        }
        out
    };

    let slabs = if force_serial {
        exec::map_indexed_serial(n, classify_slab)
    } else {
        exec::map_indexed(n, classify_slab)
    };
    Ok(merge_slabs(slabs, g, opts, tol, band, n))
}

fn merge_slabs(
    slabs: Vec<SlabResult>,
    g: &GermParams,
    opts: &BruteForceOpts,
    tol: f64,
    band: f64,
    n: usize,
) -> EquivalenceReport {
    let mut report = EquivalenceReport {
        theta: g.theta(),
        grid_step: opts.grid_step,
        gamma_samples: opts.gamma_samples,
        tol,
        band,
        lattice_points: n * n * n,
        direct_members: 0,
        generated_members: 0,
        disagreements_in_band: 0,
        disagreements_outside_band: 0,
        witnesses: Vec::new(),
    };
    for slab in slabs {
        report.direct_members += slab.direct;
        report.generated_members += slab.generated;
        report.disagreements_in_band += slab.in_band;
        report.disagreements_outside_band += slab.outside;
        for w in slab.witnesses {
            if report.witnesses.len() < opts.max_witnesses {
                report.witnesses.push(w);
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> FluxModel {
        FluxModel::quadratic(1.0, 1.0).unwrap()
    }

    fn half() -> GermParams {
        GermParams::new(0.5).unwrap()
    }

    /// Test-side reimplementation of the dissipation formula, kept
    /// independent of the library path it checks.
    fn oracle_dissipation(pbar: [f64; 3], p: [f64; 3]) -> f64 {
        let f = |r: f64| r * (1.0 - r);
        let q = |a: f64, b: f64| {
            let s = if b > a {
                1.0
            } else if b < a {
                -1.0
            } else {
                0.0
            };
            s * (f(b) - f(a))
        };
        q(pbar[1], p[1]) + q(pbar[2], p[2]) - q(pbar[0], p[0])
    }

    #[test]
    fn entropy_pair_values() {
        let m = unit();
        assert_eq!(entropy_pair(&m, 0.5, 0.5).unwrap(), (0.0, 0.0));
        assert_eq!(entropy_pair(&m, 0.0, 1.0).unwrap(), (1.0, 0.0));
        let (eta, q) = entropy_pair(&m, 0.2, 0.8).unwrap();
        assert!((eta - 0.6).abs() < 1e-15);
        assert!(q.abs() < 1e-15); // f(0.8) = f(0.2)
    }

    #[test]
    fn dissipation_examples() {
        let m = unit();
        let p = GermPoint::new(0.3, 0.9, 0.1);
        assert_eq!(dissipation(&m, &p, &p).unwrap(), 0.0);
        let zero = GermPoint::new(0.0, 0.0, 0.0);
        let jam = GermPoint::new(1.0, 1.0, 1.0);
        assert_eq!(dissipation(&m, &zero, &jam).unwrap(), 0.0);

        // two capacity-split generators: the oracle evaluates to zero
        let g = half();
        let a = gamma_point(&m, &g, 0.25).unwrap();
        let b = gamma_point(&m, &g, 0.125).unwrap();
        let expect = oracle_dissipation(a.as_array(), b.as_array());
        assert!(expect.abs() < 1e-15);
        assert!((dissipation(&m, &a, &b).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn gamma_point_values() {
        let m = unit();
        let g = half();
        let p = gamma_point(&m, &g, 0.25).unwrap();
        assert_eq!(p.p0, 0.5);
        assert!((p.p1 - 0.8535533905932737).abs() < 1e-15);
        assert!((p.p2 - 0.8535533905932737).abs() < 1e-15);
        assert!(rh_residual(&m, &p).unwrap().abs() < 1e-15);

        let p = gamma_point(&m, &g, 0.0).unwrap();
        assert_eq!(p.as_array(), [1.0, 1.0, 1.0]);

        let g3 = GermParams::new(0.3).unwrap();
        let p = gamma_point(&m, &g3, 0.1).unwrap();
        assert_eq!(p.p0, m.supply_inv(0.1).unwrap());
        assert_eq!(p.p1, m.supply_inv(0.03).unwrap());
        assert_eq!(p.p2, m.supply_inv(0.07).unwrap());
    }

    #[test]
    fn corner_point_values() {
        let m = unit();
        let [p0, p1, p2, p3] = corner_points(&m, &half()).unwrap();
        assert_eq!(p0.as_array(), [1.0, 1.0, 1.0]);
        assert_eq!(p3.as_array(), [0.0, 0.0, 0.0]);
        assert!((p1.p0 - 0.14644660940672627).abs() < 1e-15);
        assert!((p1.p1 - 0.8535533905932737).abs() < 1e-15);
        assert_eq!(p1.p2, 0.0);
        // theta_1 = theta_2 = 1/2: P2 mirrors P1
        assert!((p2.p0 - p1.p0).abs() < 1e-15);
        assert_eq!(p2.p1, 0.0);
        assert!((p2.p2 - p1.p1).abs() < 1e-15);
    }

    #[test]
    fn direct_membership_examples() {
        let m = unit();
        let g = half();
        let tol = 1e-10 * m.f_max();
        assert!(in_germ_direct(&m, &g, &GermPoint::new(1.0, 1.0, 1.0), tol).unwrap());
        assert!(in_germ_direct(&m, &g, &GermPoint::new(0.0, 0.0, 0.0), tol).unwrap());
        assert!(!in_germ_direct(&m, &g, &GermPoint::new(0.5, 0.5, 0.5), tol).unwrap());
    }

    #[test]
    fn rh_residual_values() {
        let m = unit();
        assert!((rh_residual(&m, &GermPoint::new(0.5, 1.0, 1.0)).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(
            rh_residual(&m, &GermPoint::new(1.0, 1.0, 1.0)).unwrap(),
            0.0
        );
        let g = half();
        for j in 0..=20 {
            let lam = 0.25 * j as f64 / 20.0;
            let p = gamma_point(&m, &g, lam).unwrap();
            assert!(rh_residual(&m, &p).unwrap().abs() < 1e-14);
            // flux along the curve round-trips to the level
            assert!((m.flux(p.p0).unwrap() - lam).abs() < 1e-14);
        }
    }

    #[test]
    fn generated_membership_examples() {
        let m = unit();
        let g = half();
        let set = GeneratingSet::new(&m, &g, 64).unwrap();
        let tol = 1e-10 * m.f_max();
        // every generator is generated-accepted
        for p in set.points() {
            assert!(in_germ_generated(&m, p, &set, tol));
        }
        // (0.5, 0.5, 0.5) must be rejected; confirm with the oracle
        let bad = GermPoint::new(0.5, 0.5, 0.5);
        let worst = set
            .points()
            .iter()
            .map(|pb| oracle_dissipation(pb.as_array(), bad.as_array()))
            .fold(f64::INFINITY, f64::min);
        assert!(worst < -1e-3);
        assert!(!in_germ_generated(&m, &bad, &set, tol));
        assert!((min_dissipation(&m, &bad, &set) - worst).abs() < 1e-14);
    }

    #[test]
    fn generating_set_shape() {
        let m = unit();
        let set = GeneratingSet::new(&m, &half(), 50).unwrap();
        assert_eq!(set.gamma().len(), 50);
        assert_eq!(set.corners().len(), 4);
        assert_eq!(set.gamma()[0].as_array(), [1.0, 1.0, 1.0]); // lambda = 0
        assert_eq!(set.gamma()[49].p0, 0.5); // lambda = f_max
        assert!(GeneratingSet::new(&m, &half(), 1).is_err());
    }

    #[test]
    fn brute_force_single_point_sweep() {
        let m = unit();
        let mut opts = BruteForceOpts::new(2.0); // larger than rho_max
        opts.gamma_samples = 16;
        let report = brute_force_equivalence(&m, &half(), &opts).unwrap();
        assert_eq!(report.lattice_points, 1);
        assert!(report.symmetric_difference_empty());
    }

    #[test]
    fn brute_force_refuses_huge_grids() {
        let m = unit();
        let opts = BruteForceOpts::new(1e-3 / 2.0);
        assert!(matches!(
            brute_force_equivalence(&m, &half(), &opts),
            Err(Error::Refused { .. })
        ));
    }

    #[test]
    fn brute_force_coarse_sweep_consistent() {
        let m = unit();
        let mut opts = BruteForceOpts::new(0.05);
        opts.gamma_samples = 100;
        let report = brute_force_equivalence(&m, &half(), &opts).unwrap();
        assert_eq!(report.lattice_points, 21usize.pow(3));
        assert!(report.direct_members > 0);
        assert!(
            report.symmetric_difference_empty(),
            "witnesses: {:?}",
            report.witnesses
        );
        // the sequential fallback produces the identical report
        let serial = brute_force_equivalence_serial(&m, &half(), &opts).unwrap();
        assert_eq!(serial.direct_members, report.direct_members);
        assert_eq!(serial.generated_members, report.generated_members);
        assert_eq!(serial.disagreements_in_band, report.disagreements_in_band);
        assert_eq!(
            serial.disagreements_outside_band,
            report.disagreements_outside_band
        );
    }

    proptest! {
        #[test]
        fn dissipation_is_symmetric(
            a in prop::array::uniform3(0.0f64..=1.0),
            b in prop::array::uniform3(0.0f64..=1.0),
        ) {
            let m = unit();
            let pa = GermPoint::new(a[0], a[1], a[2]);
            let pb = GermPoint::new(b[0], b[1], b[2]);
            let d1 = dissipation(&m, &pa, &pb).unwrap();
            let d2 = dissipation(&m, &pb, &pa).unwrap();
            prop_assert_eq!(d1, d2);
            prop_assert_eq!(dissipation(&m, &pa, &pa).unwrap(), 0.0);
        }

        #[test]
        fn generators_dissipate_pairwise(i in 0usize..60, j in 0usize..60) {
            let m = unit();
            let set = GeneratingSet::new(&m, &half(), 56).unwrap();
            let pts = set.points();
            let d = dissipation(&m, &pts[i % pts.len()], &pts[j % pts.len()]).unwrap();
            prop_assert!(d >= -1e-10 * m.f_max());
        }
    }
}
