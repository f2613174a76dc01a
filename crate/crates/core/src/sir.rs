//! SIR model whose infected compartment is a measure over a scalar variant
//! parameter `α`.
//!
//! The ODE state is `x = (S, R)`; the infected measure `I` drifts in variant
//! space under a PVF while growing by infection and shrinking by recovery:
//!
//! ```text
//! Ṡ = -(S/N) ∫ β dI,   Ṙ = ∫ ν dI,   İ = V[I] + ((S/N) β - ν) I.
//! ```
//!
//! The ODE update and the per-atom rates use the same atomic sums, so the
//! discrete scheme conserves `S + |I| + R` up to rounding.

use crate::dynamics::{
    euler_las_trajectory, require_admissible, CoupledSystem, SignedSourceRates, Trajectory,
};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::measure::{DiscreteMeasure, Interval};
use crate::piecewise::PiecewiseLinearFn;
use crate::pvf::PvfSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct EpidemicParams {
    n_pop: f64,
    beta: PiecewiseLinearFn,
    nu: PiecewiseLinearFn,
    pvf: PvfSpec,
    alpha_box: Interval,
}

impl EpidemicParams {
    /// `β` and `ν` must be nonnegative everywhere (they extend constantly
    /// beyond their tables).
    pub fn new(
        n_pop: f64,
        beta: PiecewiseLinearFn,
        nu: PiecewiseLinearFn,
        pvf: PvfSpec,
        alpha_box: Interval,
    ) -> Result<Self> {
        if !n_pop.is_finite() || n_pop <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "N_pop must be positive, got {n_pop}"
            )));
        }
        if beta.min_value() < 0.0 {
            return Err(Error::InvalidParameter("beta takes negative values".into()));
        }
        if nu.min_value() < 0.0 {
            return Err(Error::InvalidParameter("nu takes negative values".into()));
        }
        Ok(Self {
            n_pop,
            beta,
            nu,
            pvf,
            alpha_box,
        })
    }

    /// Constant rates on the variant box `[-1, 1]`.
    pub fn constant(n_pop: f64, beta: f64, nu: f64, pvf: PvfSpec) -> Result<Self> {
        Self::new(
            n_pop,
            PiecewiseLinearFn::constant(beta)?,
            PiecewiseLinearFn::constant(nu)?,
            pvf,
            Interval::new(-1.0, 1.0)?,
        )
    }

    pub fn n_pop(&self) -> f64 {
        self.n_pop
    }

    pub fn beta(&self) -> &PiecewiseLinearFn {
        &self.beta
    }

    pub fn nu(&self) -> &PiecewiseLinearFn {
        &self.nu
    }

    pub fn pvf(&self) -> &PvfSpec {
        &self.pvf
    }

    pub fn alpha_box(&self) -> Interval {
        self.alpha_box
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpidemicState {
    pub s: f64,
    pub i: DiscreteMeasure,
    pub r: f64,
}

impl EpidemicState {
    pub fn new(s: f64, i: DiscreteMeasure, r: f64) -> Result<Self> {
        if !s.is_finite() || s < 0.0 || !r.is_finite() || r < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "S and R must be finite and nonnegative, got S={s}, R={r}"
            )));
        }
        Ok(Self { s, i, r })
    }

    /// Checks `S + |I| + R <= N_pop` (up to rounding).
    pub fn check_population(&self, params: &EpidemicParams) -> Result<()> {
        let total = conserved_total(self);
        if total > params.n_pop * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "S0 + |I0| + R0 = {total} exceeds N_pop = {}",
                params.n_pop
            )));
        }
        Ok(())
    }

    pub fn ode_part(&self) -> Vec<f64> {
        vec![self.s, self.r]
    }

    pub fn from_parts(x: &[f64], i: DiscreteMeasure) -> Self {
        Self {
            s: x[0],
            i,
            r: x[1],
        }
    }
}

fn weighted_mass(f: &PiecewiseLinearFn, i: &DiscreteMeasure) -> f64 {
    i.atoms().iter().map(|a| f.eval(a.position) * a.mass).sum()
}

/// `(S/N) Σ β(α_i) m_i`, the rate at which susceptibles become infected.
pub fn infection_pressure(s: f64, i: &DiscreteMeasure, params: &EpidemicParams) -> f64 {
    s / params.n_pop * weighted_mass(&params.beta, i)
}

/// `Σ ν(α_i) m_i`, the rate at which infected recover.
pub fn recovery_flux(i: &DiscreteMeasure, params: &EpidemicParams) -> f64 {
    weighted_mass(&params.nu, i)
}

/// Per-atom rates `(S/N) β(α_i) - ν(α_i)`; there is no inflow.
pub fn sir_source(state: &EpidemicState, params: &EpidemicParams) -> SignedSourceRates {
    rates_at(state.s, &state.i, params)
}

fn rates_at(s: f64, i: &DiscreteMeasure, params: &EpidemicParams) -> SignedSourceRates {
    let ratio = s / params.n_pop;
    SignedSourceRates {
        rates: i
            .atoms()
            .iter()
            .map(|a| {
                (
                    a.position,
                    ratio * params.beta.eval(a.position) - params.nu.eval(a.position),
                )
            })
            .collect(),
        inflow: None,
    }
}

/// `S + |I| + R`.
pub fn conserved_total(state: &EpidemicState) -> f64 {
    state.s + state.i.total_mass() + state.r
}

/// The assembled coupled system.
#[derive(Debug, Clone, PartialEq)]
pub struct SirSystem {
    params: EpidemicParams,
}

pub fn assemble_system(params: &EpidemicParams) -> SirSystem {
    SirSystem {
        params: params.clone(),
    }
}

impl SirSystem {
    pub fn params(&self) -> &EpidemicParams {
        &self.params
    }

    /// Rejects grids whose truncation box cannot hold the variant box or the
    /// support of `I` up to time `T`.
    pub fn check_grid(&self, initial: &EpidemicState, grid: &GridSpec, t_final: f64) -> Result<()> {
        let radius = initial.i.support_radius();
        require_admissible(radius, &self.params.pvf, grid, t_final)?;
        let alpha = self.params.alpha_box.radius();
        if alpha > grid.box_radius() {
            return Err(Error::GridTooCoarse {
                n: grid.n(),
                min_admissible: alpha.ceil() as u32,
            });
        }
        Ok(())
    }
}

impl CoupledSystem for SirSystem {
    fn ode_rhs(&self, x: &[f64], mu: &DiscreteMeasure) -> Vec<f64> {
        vec![
            -infection_pressure(x[0], mu, &self.params),
            recovery_flux(mu, &self.params),
        ]
    }

    fn pvf(&self) -> &PvfSpec {
        &self.params.pvf
    }

    fn source(&self, mu: &DiscreteMeasure, x: &[f64]) -> SignedSourceRates {
        rates_at(x[0], mu, &self.params)
    }

    fn check_step(&self, x: &[f64], mu: &DiscreteMeasure, grid: &GridSpec) -> Result<()> {
        if x.len() != 2 {
            return Err(Error::InvalidParameter(format!(
                "SIR state has two ODE components, got {}",
                x.len()
            )));
        }
        // S stays nonnegative iff Δ_N Σ β m / N_pop < 1.
        let depletion = grid.dt() * weighted_mass(&self.params.beta, mu) / self.params.n_pop;
        if depletion >= 1.0 {
            return Err(Error::PositivityViolation(format!(
                "one step would remove {depletion} of the susceptibles; refine the grid"
            )));
        }
        Ok(())
    }
}

/// Runs the assembled system from `initial` up to time `T` on `grid`.
pub fn simulate(
    params: &EpidemicParams,
    initial: &EpidemicState,
    grid: &GridSpec,
    t_final: f64,
) -> Result<Trajectory> {
    initial.check_population(params)?;
    let system = assemble_system(params);
    system.check_grid(initial, grid, t_final)?;
    euler_las_trajectory(&initial.ode_part(), &initial.i, &system, grid, t_final)
}

/// One row of an SIR summary: `(t, S, |I|, R)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SirPoint {
    pub t: f64,
    pub s: f64,
    pub i: f64,
    pub r: f64,
}

impl SirPoint {
    pub fn total(&self) -> f64 {
        self.s + self.i + self.r
    }

    /// `|ΔS| + |ΔI| + |ΔR|`.
    pub fn l1_gap(&self, other: &SirPoint) -> f64 {
        (self.s - other.s).abs() + (self.i - other.i).abs() + (self.r - other.r).abs()
    }
}

/// Compartment totals along an SIR trajectory.
pub fn summarize(trajectory: &Trajectory) -> Vec<SirPoint> {
    trajectory
        .iter()
        .map(|(t, state)| SirPoint {
            t,
            s: state.x[0],
            i: state.measure.total_mass(),
            r: state.x[1],
        })
        .collect()
}
