//! Traffic flow on a 2:1 merge junction: two incoming roads joined to one
//! outgoing road at the origin, with a periodic traffic light arbitrating the
//! merge.
//!
//! The crate provides three models of the same network and the machinery to
//! compare them:
//!
//! * [`micro`] — a follow-the-leader vehicle simulator with the traffic light,
//!   plus the scaled empirical density built from vehicle gaps.
//! * [`netfv`] — a Godunov finite-volume solver for the network conservation
//!   law, with either the time-switched junction coupling (one road open at a
//!   time) or the homogenized coupling that splits capacity by the green-time
//!   fraction.
//! * [`germ`] — the admissible set of junction traces (the germ), its
//!   generating set, the Kruzhkov dissipation test for membership, and a
//!   brute-force sweep checking that the two membership characterizations
//!   agree.
//!
//! [`harness`] drives the quantitative experiments: exact L1 distances between
//! piecewise-constant densities, total-variation bounds, entropy residuals
//! against hat test functions, junction-trace checks and convergence sweeps.
//! [`scenario`] and [`runner`] expose the whole thing through JSON scenario
//! files and CSV/JSON outputs for the command line front end.

// validation uses `!(x > 0.0)` style comparisons on purpose: they reject
// NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod flux;
pub mod germ;
pub mod harness;
pub mod micro;
pub mod netfv;
pub mod runner;
pub mod scenario;
pub mod stepfn;

pub use error::Error;
pub use flux::FluxModel;
pub use germ::{GermParams, GermPoint};
pub use stepfn::StepFn;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
