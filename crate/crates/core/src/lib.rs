//! One-dimensional finite-element model of drug release from a drug-eluting
//! stent coating into the arterial media.
//!
//! The coating `(-l, 0)` carries pure diffusion, the media `(0, 1)` an
//! advection-diffusion-reaction equation for the extracellular drug coupled to
//! a pointwise ODE for drug taken up by smooth muscle cells. The two domains
//! exchange drug through a Kedem-Katchalsky interface condition at `x = 0`.
//!
//! Modules, bottom up:
//!
//! * [`params`]: model constants and derived stability/energy constants.
//! * [`tridiag`], [`assembly`]: P1 meshes, operators and norms.
//! * [`stepper`]: explicit Euler with three coupling orders and multi-rate
//!   sub-stepping.
//! * [`fd`]: an independent finite-difference solver used as a cross-check.
//! * [`analysis`]: error norms between runs and convergence studies.
//! * [`io`]: run configuration, CSV and SVG output.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod assembly;
pub mod error;
pub mod fd;
pub mod io;
pub mod params;
pub mod stepper;
pub mod tridiag;

pub use assembly::{build_mesh, discrete_norm, Domain, FemOperators, Mesh1D, NormKind};
pub use error::{Error, Result};
pub use io::{emit_svg_plot, parse_config, write_record_csv, PlotStyle, RunConfig, Series};
pub use params::{derived_constants, validate_params, DerivedConstants, ModelParams};
pub use stepper::{
    initial_state, run_simulation, Field, SchemeConfig, SimState, SolutionRecord, SubstepDomain, Variant,
};
pub use tridiag::{solve_tridiagonal, TridiagonalMatrix};
