//! Measure differential equations on the real line.
//!
//! The crate covers atomic measures and their lattice discretization,
//! Wasserstein and generalized Wasserstein distances, probability vector
//! fields, the LAS and Euler-LAS schemes, an SIR model over a continuum of
//! virus variants, and independent reference solutions for validation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod convergence;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod io;
pub mod measure;
pub mod oracles;
pub mod piecewise;
pub mod pvf;
pub mod sir;
pub mod transport;

pub use dynamics::{
    euler_las_step, euler_las_trajectory, las_interpolate, las_step, las_trajectory,
    support_growth_bound, CoupledSystem, SignedSourceRates, State, Trajectory,
};
pub use error::{Error, Result};
pub use grid::{discretize_space, GridSpec};
pub use measure::{Atom, DiscreteMeasure, Interval};
pub use piecewise::PiecewiseLinearFn;
pub use pvf::{PvfKind, PvfSpec, VelocityAtom, VelocityMeasure};
pub use sir::{EpidemicParams, EpidemicState, SirPoint, SirSystem};
pub use transport::{
    generalized_wasserstein, optimal_partial_plan, velocity_operator_cost, wasserstein_1d,
    GwResult, PlanEntry, TransportPlan,
};
