//! Scenario configuration: a versioned JSON document describing the flux,
//! the light, initial densities, grids and checks, validated in one pass
//! with field-precise errors. Bundled presets cover the standard
//! experiments.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::flux::FluxModel;
use crate::stepfn::StepFn;
use crate::Result;

pub const SCHEMA_VERSION: u32 = 1;

/// What a run should do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Follow-the-leader simulation.
    Micro,
    /// Finite-volume run with the switching junction.
    Meso,
    /// Finite-volume run with the homogenized junction.
    Homog,
    /// Convergence sweep between two models.
    Compare,
    /// Junction-trace germ membership check.
    GermCheck,
    /// Brute-force germ equivalence sweep.
    GermBrute,
    /// Total-variation bound check on a micro run.
    TvCheck,
    /// Entropy-residual check on a micro run.
    EntropyCheck,
}

impl Mode {
    pub fn parse(s: &str) -> Result<Mode> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| {
            Error::InvalidParameter {
                what: "mode",
                detail: format!(
                    "unknown mode `{s}`; expected one of micro, meso, homog, compare, \
                     germ-check, germ-brute, tv-check, entropy-check"
                ),
            }
        })
    }
}

/// Flux selection: the quadratic family or a tabulated concave profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FluxSpec {
    Quadratic { a: f64, b: f64 },
    Table { rho_max: f64, values: Vec<f64> },
}

impl FluxSpec {
    pub fn build(&self) -> Result<FluxModel> {
        match self {
            FluxSpec::Quadratic { a, b } => FluxModel::quadratic(*a, *b),
            FluxSpec::Table { rho_max, values } => FluxModel::tabulated(*rho_max, values),
        }
    }
}

/// Light timing: either an explicit scaled period, or the scaling-law
/// coupling `period = epsilon^(1 - alpha)`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaled_period: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

/// One constant-density segment of an initial profile.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub from: f64,
    pub to: f64,
    pub rho: f64,
}

/// Initial densities per branch (scaled coordinates; incoming roads on
/// negative x).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    #[serde(default)]
    pub road0: Vec<Segment>,
    #[serde(default)]
    pub road1: Vec<Segment>,
    #[serde(default)]
    pub road2: Vec<Segment>,
}

impl ProfileSpec {
    pub fn build(&self) -> Result<[StepFn; 3]> {
        let mk = |segs: &[Segment]| {
            StepFn::from_intervals(segs.iter().map(|s| (s.from, s.to, s.rho)).collect())
        };
        Ok([mk(&self.road0)?, mk(&self.road1)?, mk(&self.road2)?])
    }
}

/// Finite-volume grid: shared cell width via `length / n_cells`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dx: f64,
    pub length: f64,
}

impl GridSpec {
    pub fn n_cells(&self) -> usize {
        (self.length / self.dx).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InflowSpec {
    Closed,
    ZeroGradient,
    ConstantFlux { flux: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutflowSpec {
    Free,
    ZeroGradient,
}

/// Far-boundary policies (defaults: closed inflow, free outflow).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    #[serde(default = "default_inflow")]
    pub inflow1: InflowSpec,
    #[serde(default = "default_inflow")]
    pub inflow2: InflowSpec,
    #[serde(default = "default_outflow")]
    pub outflow: OutflowSpec,
}

fn default_inflow() -> InflowSpec {
    InflowSpec::Closed
}

fn default_outflow() -> OutflowSpec {
    OutflowSpec::Free
}

impl Default for BoundarySpec {
    fn default() -> Self {
        BoundarySpec {
            inflow1: InflowSpec::Closed,
            inflow2: InflowSpec::Closed,
            outflow: OutflowSpec::Free,
        }
    }
}

impl BoundarySpec {
    pub fn build(&self) -> crate::netfv::BoundaryPolicy {
        let map_in = |s: InflowSpec| match s {
            InflowSpec::Closed => crate::netfv::InflowPolicy::Closed,
            InflowSpec::ZeroGradient => crate::netfv::InflowPolicy::ZeroGradient,
            InflowSpec::ConstantFlux { flux } => crate::netfv::InflowPolicy::ConstantFlux(flux),
        };
        crate::netfv::BoundaryPolicy {
            inflow1: map_in(self.inflow1),
            inflow2: map_in(self.inflow2),
            outflow: match self.outflow {
                OutflowSpec::Free => crate::netfv::OutflowPolicy::Free,
                OutflowSpec::ZeroGradient => crate::netfv::OutflowPolicy::ZeroGradient,
            },
        }
    }
}

/// Which convergence sweep to run in compare mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompareKind {
    /// Micro vs switching FV over an epsilon sweep at fixed scaled period.
    MicroMeso,
    /// Switching vs homogenized FV over a period sweep.
    MesoHomog,
    /// Micro vs homogenized FV over an epsilon sweep with the scaling-law
    /// light coupling.
    MicroHomog,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSpec {
    pub kind: CompareKind,
    /// Junction exclusion radius of the comparison window.
    #[serde(default = "default_x_exclude")]
    pub x_exclude: f64,
}

fn default_x_exclude() -> f64 {
    0.05
}

/// Germ-trace check settings.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GermCheckSpec {
    /// Flux tolerance relative to `f_max`.
    #[serde(default = "default_germ_tol")]
    pub tol_rel: f64,
    #[serde(default = "default_burn_in")]
    pub burn_in: f64,
}

fn default_germ_tol() -> f64 {
    1e-2
}

fn default_burn_in() -> f64 {
    0.2
}

impl Default for GermCheckSpec {
    fn default() -> Self {
        GermCheckSpec {
            tol_rel: default_germ_tol(),
            burn_in: default_burn_in(),
        }
    }
}

/// Brute-force sweep settings.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BruteSpec {
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
    #[serde(default = "default_gamma_samples")]
    pub gamma_samples: usize,
}

fn default_grid_step() -> f64 {
    0.01
}

fn default_gamma_samples() -> usize {
    200
}

impl Default for BruteSpec {
    fn default() -> Self {
        BruteSpec {
            grid_step: default_grid_step(),
            gamma_samples: default_gamma_samples(),
        }
    }
}

/// TV-bound check settings.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TvSpec {
    #[serde(default = "default_tv_kind")]
    pub kind: TvKindSpec,
    /// Tolerance relative to `V_max`.
    #[serde(default = "default_tv_tol")]
    pub tol_rel: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TvKindSpec {
    FreeLine,
    StoppedLine,
    WholeSystem,
}

fn default_tv_kind() -> TvKindSpec {
    TvKindSpec::FreeLine
}

fn default_tv_tol() -> f64 {
    1e-3
}

impl Default for TvSpec {
    fn default() -> Self {
        TvSpec {
            kind: default_tv_kind(),
            tol_rel: default_tv_tol(),
        }
    }
}

/// Entropy-residual check settings: a lattice of tensor hats over a window.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropySpec {
    #[serde(default = "default_k_values")]
    pub k_values: Vec<f64>,
    #[serde(default = "default_hats")]
    pub hats_t: usize,
    #[serde(default = "default_hats")]
    pub hats_x: usize,
    /// Branch whose density is recorded densely (0 = outgoing).
    #[serde(default)]
    pub branch: usize,
    /// Spatial window `[x_lo, x_hi]`; defaults to the recorded branch's
    /// initial support expanded by the free-flow reach.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_window: Option<(f64, f64)>,
    /// Fraction of the horizon trimmed at both ends of the time window.
    #[serde(default = "default_t_trim")]
    pub t_trim: f64,
    /// Allowed violation relative to the bound magnitude.
    #[serde(default = "default_entropy_slack")]
    pub slack_rel: f64,
    /// Absolute roundoff floor added to the slack: the residual is a sum over
    /// thousands of exactly-integrated slabs, which carries O(1e-13) float
    /// noise even where the true value is zero.
    #[serde(default = "default_entropy_floor")]
    pub slack_abs: f64,
}

fn default_k_values() -> Vec<f64> {
    vec![0.1, 0.25, 0.5, 0.75]
}

fn default_hats() -> usize {
    8
}

fn default_t_trim() -> f64 {
    0.1
}

fn default_entropy_slack() -> f64 {
    1e-2
}

fn default_entropy_floor() -> f64 {
    1e-10
}

impl Default for EntropySpec {
    fn default() -> Self {
        EntropySpec {
            k_values: default_k_values(),
            hats_t: default_hats(),
            hats_x: default_hats(),
            branch: 0,
            x_window: None,
            t_trim: default_t_trim(),
            slack_rel: default_entropy_slack(),
            slack_abs: default_entropy_floor(),
        }
    }
}

/// The complete scenario document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema: u32,
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    pub flux: FluxSpec,
    pub theta: f64,
    #[serde(default)]
    pub light: LightSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_sweep: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period_sweep: Option<Vec<f64>>,
    pub t_end: f64,
    #[serde(default)]
    pub profiles: ProfileSpec,
    pub grid: GridSpec,
    /// Unscaled Euler step override for the micro model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub micro_dt: Option<f64>,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_snapshots")]
    pub n_snapshots: usize,
    #[serde(default)]
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareSpec>,
    #[serde(default)]
    pub germ: GermCheckSpec,
    #[serde(default)]
    pub brute: BruteSpec,
    #[serde(default)]
    pub tv: TvSpec,
    #[serde(default)]
    pub entropy: EntropySpec,
}

fn default_cfl() -> f64 {
    0.9
}

fn default_snapshots() -> usize {
    25
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidScenario {
                field: "(document)".into(),
                detail: e.to_string(),
            })?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Resolves the scaled light period for the given scale.
    pub fn scaled_period(&self, epsilon: f64) -> Result<f64> {
        match (self.light.scaled_period, self.light.alpha) {
            (Some(tau), _) => Ok(tau),
            (None, Some(alpha)) => Ok(epsilon.powf(1.0 - alpha)),
            (None, None) => Err(Error::InvalidScenario {
                field: "light".into(),
                detail: "need scaled_period or alpha".into(),
            }),
        }
    }

    /// Default unscaled Euler step: the stability guard, shrunk
    /// proportionally to the scale below `eps = 0.04` so that the Euler
    /// error vanishes along scale sweeps.
    pub fn micro_dt(&self, m: &FluxModel, epsilon: f64) -> f64 {
        self.micro_dt
            .unwrap_or_else(|| crate::micro::max_stable_dt(m) * (epsilon / 0.04).min(1.0))
    }

    /// Single-pass validation; returns non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        let fail = |field: &str, detail: String| -> Result<Vec<String>> {
            Err(Error::InvalidScenario {
                field: field.into(),
                detail,
            })
        };
        if self.schema != SCHEMA_VERSION {
            return fail(
                "schema",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema),
            );
        }
        let m = match self.flux.build() {
            Ok(m) => m,
            Err(e) => return fail("flux", e.to_string()),
        };
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return fail("theta", format!("must lie in (0, 1), got {}", self.theta));
        }
        if !(self.t_end > 0.0) {
            return fail("t_end", "must be positive".into());
        }
        if let Some(alpha) = self.light.alpha {
            if !(alpha > 0.0 && alpha < 1.0) {
                return fail("light.alpha", format!("must lie in (0, 1), got {alpha}"));
            }
            if !(alpha > 2.0 / 3.0) {
                warnings.push(format!(
                    "light.alpha = {alpha} is outside the scaling regime (2/3, 1); \
                     results are exploratory"
                ));
            }
        }
        if let Some(tau) = self.light.scaled_period {
            if !(tau > 0.0) {
                return fail("light.scaled_period", "must be positive".into());
            }
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0) {
                return fail("epsilon", "must be positive".into());
            }
        }
        for (field, sweep) in [
            ("epsilon_sweep", &self.epsilon_sweep),
            ("period_sweep", &self.period_sweep),
        ] {
            if let Some(values) = sweep {
                if values.is_empty() {
                    return fail(field, "must not be empty".into());
                }
                if values.iter().any(|v| !(*v > 0.0)) {
                    return fail(field, "entries must be positive".into());
                }
                if values.windows(2).any(|w| w[1] >= w[0]) {
                    return fail(field, "entries must decrease strictly".into());
                }
            }
        }
        if !(self.grid.dx > 0.0 && self.grid.length > 0.0) {
            return fail("grid", "dx and length must be positive".into());
        }
        let ratio = self.grid.length / self.grid.dx;
        if (ratio - ratio.round()).abs() > 1e-9 {
            return fail(
                "grid.dx",
                format!("length/dx = {ratio} must be an integer cell count"),
            );
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return fail("cfl", format!("must lie in (0, 1], got {}", self.cfl));
        }
        if self.n_snapshots == 0 {
            return fail("n_snapshots", "need at least one interval".into());
        }
        if let Some(dt) = self.micro_dt {
            let cap = crate::micro::max_stable_dt(&m);
            if !(dt > 0.0 && dt <= cap * (1.0 + 1e-12)) {
                return fail("micro_dt", format!("must lie in (0, {cap}], got {dt}"));
            }
        }
        // profiles: bounds, side and domain checks
        for (field, segs, incoming) in [
            ("profiles.road0", &self.profiles.road0, false),
            ("profiles.road1", &self.profiles.road1, true),
            ("profiles.road2", &self.profiles.road2, true),
        ] {
            for (i, s) in segs.iter().enumerate() {
                if !(s.to > s.from) {
                    return fail(field, format!("segment {i}: to must exceed from"));
                }
                if !(s.rho >= 0.0 && s.rho <= m.rho_max()) {
                    return fail(
                        field,
                        format!("segment {i}: rho = {} outside [0, {}]", s.rho, m.rho_max()),
                    );
                }
                let (lo, hi) = if incoming {
                    (-self.grid.length, 0.0)
                } else {
                    (0.0, self.grid.length)
                };
                if s.from < lo - 1e-12 || s.to > hi + 1e-12 {
                    return fail(
                        field,
                        format!("segment {i}: [{}, {}] outside [{lo}, {hi}]", s.from, s.to),
                    );
                }
            }
        }
        if self.profiles.build().is_err() {
            return fail("profiles", "segments overlap".into());
        }
        if let Some(c) = &self.compare {
            if !(c.x_exclude >= 0.0 && c.x_exclude < self.grid.length) {
                return fail("compare.x_exclude", "must lie in [0, length)".into());
            }
            match c.kind {
                CompareKind::MicroMeso | CompareKind::MicroHomog => {
                    if self.epsilon_sweep.is_none() {
                        return fail("epsilon_sweep", "required by this compare kind".into());
                    }
                }
                CompareKind::MesoHomog => {
                    if self.period_sweep.is_none() {
                        return fail("period_sweep", "required by meso-homog compare".into());
                    }
                }
            }
            if c.kind == CompareKind::MicroHomog && self.light.alpha.is_none() {
                return fail("light.alpha", "micro-homog compare uses the scaling law".into());
            }
        }
        if !(self.germ.tol_rel > 0.0) {
            return fail("germ.tol_rel", "must be positive".into());
        }
        if !(self.germ.burn_in >= 0.0 && self.germ.burn_in < self.t_end) {
            return fail("germ.burn_in", "must lie in [0, t_end)".into());
        }
        if !(self.brute.grid_step > 0.0) {
            return fail("brute.grid_step", "must be positive".into());
        }
        if self.brute.gamma_samples < 2 {
            return fail("brute.gamma_samples", "need at least 2".into());
        }
        if !(self.tv.tol_rel >= 0.0) {
            return fail("tv.tol_rel", "must be nonnegative".into());
        }
        if self.entropy.k_values.iter().any(|k| !(*k >= 0.0 && *k <= m.rho_max())) {
            return fail("entropy.k_values", "entries must lie in [0, rho_max]".into());
        }
        if self.entropy.hats_t == 0 || self.entropy.hats_x == 0 {
            return fail("entropy", "hat counts must be positive".into());
        }
        if self.entropy.branch > 2 {
            return fail("entropy.branch", "must be 0, 1 or 2".into());
        }
        if !(self.entropy.t_trim >= 0.0 && self.entropy.t_trim < 0.5) {
            return fail("entropy.t_trim", "must lie in [0, 0.5)".into());
        }
        if !(self.entropy.slack_rel >= 0.0 && self.entropy.slack_abs >= 0.0) {
            return fail("entropy", "slacks must be nonnegative".into());
        }
        Ok(warnings)
    }
}

/// Names of the bundled presets.
pub fn preset_names() -> &'static [&'static str] {
    &[
        "riemann-merge",
        "red-light-platoon",
        "generator-steady",
        "theorem14-sweep",
    ]
}

/// Returns a bundled scenario by name.
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    match name {
        "riemann-merge" => Ok(riemann_merge()),
        "red-light-platoon" => Ok(red_light_platoon()),
        "generator-steady" => Ok(generator_steady()),
        "theorem14-sweep" => Ok(theorem14_sweep()),
        _ => Err(Error::InvalidParameter {
            what: "preset",
            detail: format!(
                "unknown preset `{name}`; available: {}",
                preset_names().join(", ")
            ),
        }),
    }
}

/// Riemann data meeting at the junction under the switching light; the base
/// for the micro-vs-meso convergence sweep.
fn riemann_merge() -> ScenarioConfig {
    ScenarioConfig {
        schema: SCHEMA_VERSION,
        name: "riemann-merge".into(),
        mode: Some(Mode::Compare),
        flux: FluxSpec::Quadratic { a: 1.0, b: 1.0 },
        theta: 0.5,
        light: LightSpec {
            scaled_period: Some(0.2),
            alpha: None,
        },
        epsilon: Some(0.04),
        epsilon_sweep: Some(vec![0.04, 0.02, 0.01, 0.005]),
        period_sweep: Some(vec![0.4, 0.2, 0.1, 0.05]),
        t_end: 1.0,
        profiles: ProfileSpec {
            road0: vec![Segment {
                from: 0.05,
                to: 0.85,
                rho: 0.4,
            }],
            road1: vec![Segment {
                from: -1.65,
                to: -0.05,
                rho: 0.8,
            }],
            road2: vec![Segment {
                from: -1.65,
                to: -0.05,
                rho: 0.6,
            }],
        },
        grid: GridSpec {
            dx: 0.0025,
            length: 3.0,
        },
        micro_dt: None,
        cfl: 0.9,
        n_snapshots: 25,
        boundary: BoundarySpec::default(),
        seed: 0,
        compare: Some(CompareSpec {
            kind: CompareKind::MicroMeso,
            x_exclude: 0.05,
        }),
        germ: GermCheckSpec::default(),
        brute: BruteSpec::default(),
        tv: TvSpec::default(),
        entropy: EntropySpec::default(),
    }
}

/// A platoon on road 2 held by a light that stays red for the whole run; the
/// stopped-road TV bound scenario.
fn red_light_platoon() -> ScenarioConfig {
    ScenarioConfig {
        schema: SCHEMA_VERSION,
        name: "red-light-platoon".into(),
        mode: Some(Mode::TvCheck),
        flux: FluxSpec::Quadratic { a: 1.0, b: 1.0 },
        theta: 0.5,
        light: LightSpec {
            // road 2 is red while road 1 is green: a scaled period of 1.2
            // keeps the first green-for-1 interval longer than the horizon
            scaled_period: Some(1.2),
            alpha: None,
        },
        epsilon: Some(0.0036),
        epsilon_sweep: None,
        period_sweep: None,
        t_end: 0.5,
        profiles: ProfileSpec {
            road0: vec![],
            road1: vec![],
            road2: vec![Segment {
                from: -1.55,
                to: -0.35,
                rho: 0.6,
            }],
        },
        grid: GridSpec {
            dx: 0.005,
            length: 2.0,
        },
        micro_dt: None,
        cfl: 0.9,
        n_snapshots: 25,
        boundary: BoundarySpec::default(),
        seed: 0,
        compare: None,
        germ: GermCheckSpec::default(),
        brute: BruteSpec::default(),
        tv: TvSpec {
            kind: TvKindSpec::StoppedLine,
            tol_rel: 0.05,
        },
        entropy: EntropySpec::default(),
    }
}

/// A capacity-split generator state run under the homogenized junction with
/// copy ghosts: an exact discrete steady state.
fn generator_steady() -> ScenarioConfig {
    let m = FluxModel::quadratic(1.0, 1.0).unwrap();
    let lam = 0.5 * m.f_max();
    let p0 = m.supply_inv(lam).unwrap();
    let p_in = m.supply_inv(0.5 * lam).unwrap();
    ScenarioConfig {
        schema: SCHEMA_VERSION,
        name: "generator-steady".into(),
        mode: Some(Mode::GermCheck),
        flux: FluxSpec::Quadratic { a: 1.0, b: 1.0 },
        theta: 0.5,
        light: LightSpec::default(),
        epsilon: None,
        epsilon_sweep: None,
        period_sweep: None,
        t_end: 0.5,
        profiles: ProfileSpec {
            road0: vec![Segment {
                from: 0.0,
                to: 1.0,
                rho: p0,
            }],
            road1: vec![Segment {
                from: -1.0,
                to: 0.0,
                rho: p_in,
            }],
            road2: vec![Segment {
                from: -1.0,
                to: 0.0,
                rho: p_in,
            }],
        },
        grid: GridSpec {
            dx: 0.01,
            length: 1.0,
        },
        micro_dt: None,
        cfl: 0.9,
        n_snapshots: 10,
        boundary: BoundarySpec {
            inflow1: InflowSpec::ZeroGradient,
            inflow2: InflowSpec::ZeroGradient,
            outflow: OutflowSpec::ZeroGradient,
        },
        seed: 0,
        compare: None,
        germ: GermCheckSpec {
            tol_rel: 1e-10,
            burn_in: 0.0,
        },
        brute: BruteSpec::default(),
        tv: TvSpec::default(),
        entropy: EntropySpec::default(),
    }
}

/// The scaling-law sweep: micro runs against the homogenized limit with the
/// light period coupled as `epsilon^(1 - alpha)`.
fn theorem14_sweep() -> ScenarioConfig {
    let mut cfg = riemann_merge();
    cfg.name = "theorem14-sweep".into();
    cfg.light = LightSpec {
        scaled_period: None,
        alpha: Some(0.75),
    };
    cfg.compare = Some(CompareSpec {
        kind: CompareKind::MicroHomog,
        x_exclude: 0.05,
    });
    cfg
}

/// Five Riemann data `(rho1, rho2, rho0)` whose homogenized junction traces
/// exercise different germ regimes; used by the trace-membership experiment.
pub fn trace_check_data() -> Vec<(String, [f64; 3])> {
    let m = FluxModel::quadratic(1.0, 1.0).unwrap();
    let congested = m.supply_inv(0.5 * m.f_max()).unwrap();
    vec![
        ("congested-merge".into(), [congested, congested, 0.0]),
        ("throttled-free-flow".into(), [0.2, 0.2, 0.0]),
        ("asymmetric-queues".into(), [0.9, 0.2, 0.1]),
        ("one-road-saturated".into(), [0.08, 0.85, 0.0]),
        ("starved-outflow".into(), [0.5, 0.5, 0.9]),
    ]
}

/// A homogenized-junction scenario from one Riemann datum, covering both
/// incoming branches up to the junction.
pub fn trace_check_scenario(name: &str, datum: [f64; 3]) -> ScenarioConfig {
    ScenarioConfig {
        schema: SCHEMA_VERSION,
        name: name.into(),
        mode: Some(Mode::GermCheck),
        flux: FluxSpec::Quadratic { a: 1.0, b: 1.0 },
        theta: 0.5,
        light: LightSpec::default(),
        epsilon: None,
        epsilon_sweep: None,
        period_sweep: None,
        t_end: 1.0,
        profiles: ProfileSpec {
            road0: if datum[2] > 0.0 {
                vec![Segment {
                    from: 0.0,
                    to: 2.0,
                    rho: datum[2],
                }]
            } else {
                vec![]
            },
            road1: vec![Segment {
                from: -2.0,
                to: 0.0,
                rho: datum[0],
            }],
            road2: vec![Segment {
                from: -2.0,
                to: 0.0,
                rho: datum[1],
            }],
        },
        grid: GridSpec {
            dx: 0.005,
            length: 2.0,
        },
        micro_dt: None,
        cfl: 0.9,
        n_snapshots: 10,
        boundary: BoundarySpec::default(),
        seed: 0,
        compare: None,
        germ: GermCheckSpec {
            tol_rel: 1e-2,
            burn_in: 0.2,
        },
        brute: BruteSpec::default(),
        tv: TvSpec::default(),
        entropy: EntropySpec::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for name in preset_names() {
            let cfg = preset(name).unwrap();
            let warnings = cfg.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(warnings.is_empty(), "{name}: {warnings:?}");
            // round-trips through JSON
            let text = cfg.to_json();
            let back = ScenarioConfig::from_json(&text).unwrap();
            back.validate().unwrap();
        }
        assert!(preset("no-such-preset").is_err());
    }

    #[test]
    fn trace_scenarios_validate() {
        for (name, datum) in trace_check_data() {
            trace_check_scenario(&name, datum).validate().unwrap();
        }
    }

    #[test]
    fn validation_reports_field() {
        let mut cfg = preset("riemann-merge").unwrap();
        cfg.theta = 1.5;
        match cfg.validate() {
            Err(Error::InvalidScenario { field, .. }) => assert_eq!(field, "theta"),
            other => panic!("expected a theta error, got {other:?}"),
        }

        let mut cfg = preset("riemann-merge").unwrap();
        cfg.profiles.road1[0].rho = 2.0;
        match cfg.validate() {
            Err(Error::InvalidScenario { field, .. }) => assert_eq!(field, "profiles.road1"),
            other => panic!("expected a profile error, got {other:?}"),
        }

        let mut cfg = preset("riemann-merge").unwrap();
        cfg.grid.dx = 0.7;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unknown_fields_rejected() {
        let mut doc: serde_json::Value =
            serde_json::from_str(&preset("riemann-merge").unwrap().to_json()).unwrap();
        doc["no_such_field"] = serde_json::json!(1);
        assert!(ScenarioConfig::from_json(&doc.to_string()).is_err());
    }

    #[test]
    fn mode_parsing() {
        assert_eq!(Mode::parse("germ-brute").unwrap(), Mode::GermBrute);
        assert!(Mode::parse("nonsense").is_err());
    }

    #[test]
    fn alpha_outside_regime_warns() {
        let mut cfg = theorem14_sweep();
        cfg.light.alpha = Some(0.5);
        let warnings = cfg.validate().unwrap();
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn tabulated_flux_scenario_validates() {
        let mut cfg = preset("generator-steady").unwrap();
        let n = 512;
        let values: Vec<f64> = (0..=n)
            .map(|i| {
                let r = i as f64 / n as f64;
                r * (1.0 - r)
            })
            .collect();
        cfg.flux = FluxSpec::Table {
            rho_max: 1.0,
            values,
        };
        cfg.validate().unwrap();
        let back = ScenarioConfig::from_json(&cfg.to_json()).unwrap();
        assert!(matches!(back.flux, FluxSpec::Table { .. }));
        back.validate().unwrap();
    }
}
