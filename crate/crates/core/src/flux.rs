//! The concave flux `f`, its monotone envelopes and their inverses, and the
//! velocity laws of the vehicle model.
//!
//! A [`FluxModel`] holds a concave flux `f : [0, rho_max] -> [0, f_max]` with
//! `f(0) = f(rho_max) = 0` and a unique maximizer `rho_crit`. From it derive
//!
//! * the spacing velocity `V(e) = e * f(1/e)` for `e > e_min = 1/rho_max`,
//!   clamped to `0` below `e_min`, with `V_max = f'(0)`;
//! * the density velocity `v(r) = V(1/r) = f(r)/r`, with `v(0) = V_max`;
//! * the supply `f^-` (smallest nonincreasing map above `f`) and demand `f^+`
//!   (smallest nondecreasing map above `f`), and the inverses of their strict
//!   branches.
//!
//! The quadratic family `f(r) = A r - B r^2` gets closed-form inverses; a
//! tabulated strictly concave profile falls back to bisection.

use crate::error::Error;
use crate::Result;

/// Absolute slack, relative to the domain size, accepted when clamping
/// evaluation points onto `[0, rho_max]`. Finite-volume cell values drift to
/// the endpoints by roundoff.
const DOMAIN_SLACK: f64 = 1e-12;

/// Bisection stops when `|f(r) - lambda| <= INV_TOL * f_max`.
const INV_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
enum Profile {
    Quadratic { a: f64, b: f64 },
    /// `values[i] = f(i * step)` on a uniform grid over `[0, rho_max]`,
    /// interpolated linearly. Piecewise-linear interpolation of concave
    /// samples is concave.
    Tabulated { step: f64, values: Vec<f64> },
}

/// A concave flux together with its derived quantities.
///
/// Immutable after construction; share freely across threads.
#[derive(Debug, Clone)]
pub struct FluxModel {
    rho_max: f64,
    rho_crit: f64,
    f_max: f64,
    v_max: f64,
    /// Lipschitz constant of the spacing velocity `V`; equals
    /// `rho_max * |f'(rho_max)|`.
    lip_v: f64,
    profile: Profile,
}

impl FluxModel {
    /// Builds the quadratic flux `f(r) = A r - B r^2`.
    ///
    /// Then `rho_max = A/B`, `rho_crit = A/(2B)`, `f_max = A^2/(4B)` and
    /// `V_max = A`.
    pub fn quadratic(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidParameter {
                what: "quadratic flux coefficient A",
                detail: format!("must be positive and finite, got {a}"),
            });
        }
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::InvalidParameter {
                what: "quadratic flux coefficient B",
                detail: format!("must be positive and finite, got {b}"),
            });
        }
        Ok(FluxModel {
            rho_max: a / b,
            rho_crit: a / (2.0 * b),
            f_max: a * a / (4.0 * b),
            v_max: a,
            lip_v: a * a / b,
            profile: Profile::Quadratic { a, b },
        })
    }

    /// Builds a flux from samples `values[i] = f(i * rho_max / (n-1))` on a
    /// uniform grid, interpolated linearly.
    ///
    /// The samples must vanish at both ends, be nonnegative and strictly
    /// concave (negative second differences).
    pub fn tabulated(rho_max: f64, values: &[f64]) -> Result<Self> {
        if !(rho_max > 0.0) || !rho_max.is_finite() {
            return Err(Error::InvalidParameter {
                what: "tabulated flux rho_max",
                detail: format!("must be positive and finite, got {rho_max}"),
            });
        }
        if values.len() < 3 {
            return Err(Error::InvalidParameter {
                what: "tabulated flux samples",
                detail: format!("need at least 3 samples, got {}", values.len()),
            });
        }
        let f_max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(f_max > 0.0) {
            return Err(Error::InvalidParameter {
                what: "tabulated flux samples",
                detail: "maximum flux must be positive".into(),
            });
        }
        let tiny = 1e-14 * f_max;
        if values[0].abs() > tiny || values[values.len() - 1].abs() > tiny {
            return Err(Error::InvalidParameter {
                what: "tabulated flux samples",
                detail: "f(0) and f(rho_max) must vanish".into(),
            });
        }
        if values.iter().any(|&v| v < -tiny || !v.is_finite()) {
            return Err(Error::InvalidParameter {
                what: "tabulated flux samples",
                detail: "samples must be finite and nonnegative".into(),
            });
        }
        for w in values.windows(3) {
            if w[2] - 2.0 * w[1] + w[0] >= 0.0 {
                return Err(Error::InvalidParameter {
                    what: "tabulated flux samples",
                    detail: "profile is not strictly concave".into(),
                });
            }
        }
        let n = values.len();
        let step = rho_max / (n - 1) as f64;
        // Concave piecewise-linear: the maximum sits at a node.
        let argmax = values
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.total_cmp(y.1))
            .map(|(i, _)| i)
            .unwrap();
        let v_max = (values[1] - values[0]) / step;
        let slope_end = (values[n - 1] - values[n - 2]) / step;
        Ok(FluxModel {
            rho_max,
            rho_crit: argmax as f64 * step,
            f_max,
            v_max,
            lip_v: rho_max * slope_end.abs(),
            profile: Profile::Tabulated {
                step,
                values: values.to_vec(),
            },
        })
    }

    /// Jam density `rho_max`.
    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }

    /// The unique maximizer of `f`.
    pub fn rho_crit(&self) -> f64 {
        self.rho_crit
    }

    /// `max f = f(rho_crit)`.
    pub fn f_max(&self) -> f64 {
        self.f_max
    }

    /// Free-flow speed `V_max = f'(0)`.
    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    /// Minimal spacing `e_min = 1/rho_max`.
    pub fn e_min(&self) -> f64 {
        1.0 / self.rho_max
    }

    /// Lipschitz constant of the spacing velocity `V`.
    pub fn lip_v(&self) -> f64 {
        self.lip_v
    }

    /// Largest characteristic speed `max |f'| = max(f'(0), |f'(rho_max)|)`.
    pub fn max_char_speed(&self) -> f64 {
        self.v_max.max(self.lip_v / self.rho_max)
    }

    fn check_density(&self, r: f64, what: &'static str) -> Result<f64> {
        let slack = DOMAIN_SLACK * self.rho_max;
        if !(r >= -slack) || !(r <= self.rho_max + slack) {
            return Err(Error::OutOfDomain { what, value: r });
        }
        Ok(r.clamp(0.0, self.rho_max))
    }

    fn check_flux_level(&self, lam: f64, what: &'static str) -> Result<f64> {
        let slack = DOMAIN_SLACK * self.f_max;
        if !(lam >= -slack) || !(lam <= self.f_max + slack) {
            return Err(Error::OutOfDomain { what, value: lam });
        }
        Ok(lam.clamp(0.0, self.f_max))
    }

    fn eval(&self, r: f64) -> f64 {
        match &self.profile {
            Profile::Quadratic { a, b } => r * (a - b * r),
            Profile::Tabulated { step, values } => {
                let pos = r / step;
                let i = (pos.floor() as usize).min(values.len() - 2);
                let frac = pos - i as f64;
                values[i] + frac * (values[i + 1] - values[i])
            }
        }
    }

    /// `f(r)`; clamps arguments within roundoff of the endpoints.
    pub fn flux(&self, r: f64) -> Result<f64> {
        Ok(self.eval(self.check_density(r, "density")?))
    }

    /// `f` on a caller-guaranteed domain: the argument is clamped into
    /// `[0, rho_max]` unconditionally. For inner loops whose invariants keep
    /// values in range.
    pub fn flux_clamped(&self, r: f64) -> f64 {
        self.eval(r.clamp(0.0, self.rho_max))
    }

    /// Spacing velocity `V(e) = e f(1/e)` for `e > e_min`, zero at or below
    /// `e_min`. The absent-leader case (`V = V_max`) is the caller's
    /// convention, not an infinite-spacing sentinel.
    pub fn velocity_from_spacing(&self, e: f64) -> Result<f64> {
        if !(e >= -DOMAIN_SLACK * self.e_min()) {
            return Err(Error::OutOfDomain {
                what: "spacing",
                value: e,
            });
        }
        Ok(self.velocity_from_spacing_clamped(e))
    }

    /// Unchecked twin of [`Self::velocity_from_spacing`].
    pub fn velocity_from_spacing_clamped(&self, e: f64) -> f64 {
        if e <= self.e_min() {
            0.0
        } else {
            e * self.flux_clamped(1.0 / e)
        }
    }

    /// Density velocity `v(r) = V(1/r) = f(r)/r`, with `v(0) = V_max`.
    pub fn velocity_from_density(&self, r: f64) -> Result<f64> {
        let r = self.check_density(r, "density")?;
        Ok(self.velocity_from_density_clamped(r))
    }

    /// Unchecked twin of [`Self::velocity_from_density`].
    pub fn velocity_from_density_clamped(&self, r: f64) -> f64 {
        let r = r.clamp(0.0, self.rho_max);
        if r <= DOMAIN_SLACK * self.rho_max {
            self.v_max
        } else {
            self.flux_clamped(r) / r
        }
    }

    /// Supply `f^-(r)`: the smallest nonincreasing map above `f`, i.e.
    /// `f_max` left of `rho_crit` and `f(r)` right of it. The largest flux a
    /// right state `r` can absorb.
    pub fn supply(&self, r: f64) -> Result<f64> {
        let r = self.check_density(r, "density")?;
        Ok(self.supply_clamped(r))
    }

    /// Unchecked twin of [`Self::supply`].
    pub fn supply_clamped(&self, r: f64) -> f64 {
        if r <= self.rho_crit {
            self.f_max
        } else {
            self.eval(r.min(self.rho_max))
        }
    }

    /// Demand `f^+(r)`: the smallest nondecreasing map above `f`, i.e. `f(r)`
    /// left of `rho_crit` and `f_max` right of it. The largest flux a left
    /// state `r` can send.
    pub fn demand(&self, r: f64) -> Result<f64> {
        let r = self.check_density(r, "density")?;
        Ok(self.demand_clamped(r))
    }

    /// Unchecked twin of [`Self::demand`].
    pub fn demand_clamped(&self, r: f64) -> f64 {
        if r >= self.rho_crit {
            self.f_max
        } else {
            self.eval(r.max(0.0))
        }
    }

    /// `(f^-)^{-1}(lambda)`: the unique `r` in `[rho_crit, rho_max]` with
    /// `f(r) = lambda`. In particular `(f^-)^{-1}(0) = rho_max`.
    pub fn supply_inv(&self, lam: f64) -> Result<f64> {
        let lam = self.check_flux_level(lam, "flux level")?;
        Ok(match &self.profile {
            Profile::Quadratic { a, b } => {
                let disc = (a * a - 4.0 * b * lam).max(0.0);
                (a + disc.sqrt()) / (2.0 * b)
            }
            Profile::Tabulated { .. } => self.bisect(lam, self.rho_crit, self.rho_max),
        })
    }

    /// `(f^+)^{-1}(lambda)`: the unique `r` in `[0, rho_crit]` with
    /// `f(r) = lambda`.
    pub fn demand_inv(&self, lam: f64) -> Result<f64> {
        let lam = self.check_flux_level(lam, "flux level")?;
        Ok(match &self.profile {
            Profile::Quadratic { a, b } => {
                let disc = (a * a - 4.0 * b * lam).max(0.0);
                (a - disc.sqrt()) / (2.0 * b)
            }
            Profile::Tabulated { .. } => self.bisect(lam, 0.0, self.rho_crit),
        })
    }

    /// Bisection for `f(r) = lam` on a monotone branch `[lo, hi]`.
    fn bisect(&self, lam: f64, lo: f64, hi: f64) -> f64 {
        let increasing = self.eval(hi) >= self.eval(lo);
        let (mut lo, mut hi) = (lo, hi);
        let tol = INV_TOL * self.f_max;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let fm = self.eval(mid);
            if (fm - lam).abs() <= tol {
                return mid;
            }
            if (fm < lam) == increasing {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}
