//! The LAS scheme for pure MDEs and the Euler-LAS scheme for coupled
//! ODE-MDE systems.
//!
//! One step evaluates the velocity field on the current measure, snaps the
//! velocities to the `1/N` lattice and moves every atom by `Δ_N · v`. Since
//! `Δx = Δ_N · Δv`, atoms on space nodes land on space nodes again and the
//! step is computed in exact integer node indices.

use crate::error::{Error, Result};
use crate::grid::{discretize_space, GridSpec};
use crate::measure::{Atom, DiscreteMeasure};
use crate::pvf::{PvfSpec, VelocityMeasure};
use crate::transport::generalized_wasserstein;

/// Source term of a coupled system.
///
/// `rates[i]` is the signed per-unit-mass rate of the `i`-th atom of the
/// measure it was computed for, tagged with that atom's position; `inflow`
/// is an optional nonnegative measure of absolute creation rates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SignedSourceRates {
    pub rates: Vec<(f64, f64)>,
    pub inflow: Option<DiscreteMeasure>,
}

impl SignedSourceRates {
    /// No source at all.
    pub fn zero(mu: &DiscreteMeasure) -> Self {
        Self::uniform(mu, 0.0)
    }

    /// The same rate for every atom.
    pub fn uniform(mu: &DiscreteMeasure, rate: f64) -> Self {
        Self {
            rates: mu.positions().map(|x| (x, rate)).collect(),
            inflow: None,
        }
    }

    /// Net mass rate `Σ rate_i m_i + |inflow|`.
    pub fn net_rate(&self, mu: &DiscreteMeasure) -> f64 {
        let multiplicative: f64 = self
            .rates
            .iter()
            .zip(mu.atoms())
            .map(|(&(_, r), a)| r * a.mass)
            .sum();
        multiplicative + self.inflow.as_ref().map_or(0.0, |m| m.total_mass())
    }

    pub fn max_rate(&self) -> f64 {
        self.rates.iter().map(|&(_, r)| r).fold(0.0, f64::max)
    }

    /// Largest decay rate `max(-rate_i, 0)`.
    pub fn max_decay(&self) -> f64 {
        self.rates.iter().map(|&(_, r)| -r).fold(0.0, f64::max)
    }

    fn check_alignment(&self, mu: &DiscreteMeasure) -> Result<()> {
        let aligned = self.rates.len() == mu.len()
            && self
                .rates
                .iter()
                .zip(mu.atoms())
                .all(|(&(x, r), a)| x == a.position && r.is_finite());
        if aligned {
            Ok(())
        } else {
            Err(Error::SourceMismatch)
        }
    }
}

/// A coupled system `ẋ = g(x, μ)`, `μ̇ = V[μ] + s(μ, x)`.
pub trait CoupledSystem {
    fn ode_rhs(&self, x: &[f64], mu: &DiscreteMeasure) -> Vec<f64>;

    fn pvf(&self) -> &PvfSpec;

    fn source(&self, mu: &DiscreteMeasure, x: &[f64]) -> SignedSourceRates;

    /// Model-specific guard run before every step.
    fn check_step(&self, _x: &[f64], _mu: &DiscreteMeasure, _grid: &GridSpec) -> Result<()> {
        Ok(())
    }
}

/// A [`CoupledSystem`] built from closures.
pub struct FnSystem<G, S> {
    pub pvf: PvfSpec,
    pub rhs: G,
    pub source: S,
}

impl<G, S> CoupledSystem for FnSystem<G, S>
where
    G: Fn(&[f64], &DiscreteMeasure) -> Vec<f64>,
    S: Fn(&DiscreteMeasure, &[f64]) -> SignedSourceRates,
{
    fn ode_rhs(&self, x: &[f64], mu: &DiscreteMeasure) -> Vec<f64> {
        (self.rhs)(x, mu)
    }

    fn pvf(&self) -> &PvfSpec {
        &self.pvf
    }

    fn source(&self, mu: &DiscreteMeasure, x: &[f64]) -> SignedSourceRates {
        (self.source)(mu, x)
    }
}

/// ODE state and measure at one snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub x: Vec<f64>,
    pub measure: DiscreteMeasure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: GridSpec,
    pub times: Vec<f64>,
    pub states: Vec<State>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_time(&self) -> f64 {
        *self
            .times
            .last()
            .expect("trajectory has at least one snapshot")
    }

    pub fn final_state(&self) -> &State {
        self.states
            .last()
            .expect("trajectory has at least one snapshot")
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &State)> {
        self.times.iter().copied().zip(&self.states)
    }
}

/// Number of whole steps in `[0, T]` and the length of the leftover step.
fn step_count(t_final: f64, grid: &GridSpec) -> Result<(u64, f64)> {
    if !t_final.is_finite() || t_final < 0.0 {
        return Err(Error::InvalidTime(t_final));
    }
    let scaled = t_final * grid.n() as f64;
    let nearest = scaled.round();
    // Final times that are multiples of Δ_N up to rounding get no partial step.
    if (scaled - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        return Ok((nearest as u64, 0.0));
    }
    let whole = scaled.floor();
    Ok((whole as u64, t_final - whole * grid.dt()))
}

fn grid_time(step: u64, grid: &GridSpec) -> f64 {
    step as f64 / grid.n() as f64
}

/// Moves the atoms of `field` (base projection `mu`) by one full step.
///
/// `multipliers[k]` scales every velocity atom over the `k`-th atom of `mu`.
fn transport_on_grid(
    mu: &DiscreteMeasure,
    field: &VelocityMeasure,
    multipliers: Option<&[f64]>,
    grid: &GridSpec,
) -> Result<Vec<Atom>> {
    let mut out = Vec::with_capacity(field.atoms().len());
    let mut k = 0;
    for va in field.atoms() {
        while mu.atoms()[k].position < va.position {
            k += 1;
        }
        let i = grid.space_cell(va.position)?;
        if grid.space_node(i) != va.position {
            return Err(Error::InvalidParameter(format!(
                "atom at {} is not a node of grid N={}",
                va.position,
                grid.n()
            )));
        }
        let j = grid.velocity_cell(va.velocity)?;
        let target = grid.checked_space_index(i + j)?;
        let factor = multipliers.map_or(1.0, |m| m[k]);
        out.push(Atom::new(grid.space_node(target), va.mass * factor));
    }
    Ok(out)
}

/// Moves the atoms of `field` by `tau · v` without snapping.
fn transport_partial(
    mu: &DiscreteMeasure,
    field: &VelocityMeasure,
    multipliers: Option<&[f64]>,
    tau: f64,
) -> Vec<Atom> {
    let mut k = 0;
    field
        .atoms()
        .iter()
        .map(|va| {
            while mu.atoms()[k].position < va.position {
                k += 1;
            }
            let factor = multipliers.map_or(1.0, |m| m[k]);
            Atom::new(va.position + tau * va.velocity, va.mass * factor)
        })
        .collect()
}

fn lattice_field(mu: &DiscreteMeasure, pvf: &PvfSpec, grid: &GridSpec) -> Result<VelocityMeasure> {
    if mu.is_empty() {
        return Ok(VelocityMeasure::default());
    }
    pvf.evaluate_on_grid(mu, grid)
}

/// One LAS step `μ_ℓ ↦ μ_{ℓ+1}` for a measure supported on grid nodes.
pub fn las_step(mu: &DiscreteMeasure, pvf: &PvfSpec, grid: &GridSpec) -> Result<DiscreteMeasure> {
    let field = lattice_field(mu, pvf, grid)?;
    Ok(DiscreteMeasure::normalized(transport_on_grid(
        mu, &field, None, grid,
    )?))
}

fn check_tau(tau: f64, grid: &GridSpec) -> Result<()> {
    if !(0.0..=grid.dt()).contains(&tau) {
        return Err(Error::InvalidTau { tau, dt: grid.dt() });
    }
    Ok(())
}

/// The LAS interpolant `μ^N(ℓΔ_N + τ)` for `0 <= τ <= Δ_N`.
pub fn las_interpolate(
    mu: &DiscreteMeasure,
    pvf: &PvfSpec,
    grid: &GridSpec,
    tau: f64,
) -> Result<DiscreteMeasure> {
    check_tau(tau, grid)?;
    if tau == 0.0 {
        return Ok(mu.clone());
    }
    if tau == grid.dt() {
        return las_step(mu, pvf, grid);
    }
    let field = lattice_field(mu, pvf, grid)?;
    Ok(DiscreteMeasure::normalized(transport_partial(
        mu, &field, None, tau,
    )))
}

/// LAS trajectory from `A^x_N(μ₀)` up to time `T`, one snapshot per step plus
/// a final interpolated snapshot when `T` is not a multiple of `Δ_N`.
pub fn las_trajectory(
    mu0: &DiscreteMeasure,
    pvf: &PvfSpec,
    grid: &GridSpec,
    t_final: f64,
) -> Result<Trajectory> {
    let (steps, rest) = step_count(t_final, grid)?;
    let mut mu = discretize_space(mu0, grid)?;
    let radius = mu0.support_radius();
    let mut times = vec![0.0];
    let mut states = vec![State {
        x: Vec::new(),
        measure: mu.clone(),
    }];
    for l in 1..=steps {
        mu = las_step(&mu, pvf, grid)?;
        let t = grid_time(l, grid);
        debug_assert!(
            check_support_bound(&mu, radius, pvf.growth_constant(), grid, t),
            "LAS snapshot at t={t} leaves the support bound"
        );
        times.push(t);
        states.push(State {
            x: Vec::new(),
            measure: mu.clone(),
        });
    }
    if rest > 0.0 {
        let last = las_interpolate(&mu, pvf, grid, rest.min(grid.dt()))?;
        times.push(t_final);
        states.push(State {
            x: Vec::new(),
            measure: last,
        });
    }
    Ok(Trajectory {
        grid: *grid,
        times,
        states,
    })
}

/// Validated source of `system` at `(x, μ)` with the positivity guard.
fn checked_source<S: CoupledSystem + ?Sized>(
    system: &S,
    x: &[f64],
    mu: &DiscreteMeasure,
    grid: &GridSpec,
) -> Result<SignedSourceRates> {
    system.check_step(x, mu, grid)?;
    let source = system.source(mu, x);
    source.check_alignment(mu)?;
    let decay = source.max_decay();
    if grid.dt() * decay >= 1.0 {
        return Err(Error::PositivityViolation(format!(
            "step {} times decay rate {decay} reaches 1; refine the grid",
            grid.dt()
        )));
    }
    if let Some(inflow) = &source.inflow {
        if inflow.atoms().iter().any(|a| !a.mass.is_finite()) {
            return Err(Error::SourceMismatch);
        }
    }
    Ok(source)
}

fn multipliers(source: &SignedSourceRates, tau: f64) -> Vec<f64> {
    source.rates.iter().map(|&(_, r)| 1.0 + tau * r).collect()
}

fn euler_update(x: &[f64], g: &[f64], tau: f64) -> Result<Vec<f64>> {
    if g.len() != x.len() {
        return Err(Error::InvalidParameter(format!(
            "ODE right-hand side has dimension {} but the state has {}",
            g.len(),
            x.len()
        )));
    }
    Ok(x.iter().zip(g).map(|(xi, gi)| xi + tau * gi).collect())
}

/// One Euler-LAS step.
///
/// The source multiplies every atom by `1 + Δ_N · rate` before it is
/// transported, the inflow is added as `Δ_N · A^x_N(inflow)`, and the ODE
/// part takes an explicit Euler step at the pre-step state.
pub fn euler_las_step<S: CoupledSystem + ?Sized>(
    x: &[f64],
    mu: &DiscreteMeasure,
    system: &S,
    grid: &GridSpec,
) -> Result<(Vec<f64>, DiscreteMeasure)> {
    let source = checked_source(system, x, mu, grid)?;
    let dt = grid.dt();
    let g = system.ode_rhs(x, mu);
    let x_next = euler_update(x, &g, dt)?;

    let field = lattice_field(mu, system.pvf(), grid)?;
    let mut atoms = transport_on_grid(mu, &field, Some(&multipliers(&source, dt)), grid)?;
    if let Some(inflow) = &source.inflow {
        let snapped = discretize_space(inflow, grid)?;
        atoms.extend(
            snapped
                .atoms()
                .iter()
                .map(|a| Atom::new(a.position, dt * a.mass)),
        );
    }
    Ok((x_next, DiscreteMeasure::normalized(atoms)))
}

/// Euler-LAS interpolant at `ℓΔ_N + τ`: atoms at `x_i + τ v_j`, source and
/// ODE increment weighted by `τ`.
pub fn euler_las_interpolate<S: CoupledSystem + ?Sized>(
    x: &[f64],
    mu: &DiscreteMeasure,
    system: &S,
    grid: &GridSpec,
    tau: f64,
) -> Result<(Vec<f64>, DiscreteMeasure)> {
    check_tau(tau, grid)?;
    if tau == 0.0 {
        return Ok((x.to_vec(), mu.clone()));
    }
    if tau == grid.dt() {
        return euler_las_step(x, mu, system, grid);
    }
    let source = checked_source(system, x, mu, grid)?;
    let g = system.ode_rhs(x, mu);
    let x_next = euler_update(x, &g, tau)?;
    let field = lattice_field(mu, system.pvf(), grid)?;
    let mut atoms = transport_partial(mu, &field, Some(&multipliers(&source, tau)), tau);
    if let Some(inflow) = &source.inflow {
        let snapped = discretize_space(inflow, grid)?;
        atoms.extend(
            snapped
                .atoms()
                .iter()
                .map(|a| Atom::new(a.position, tau * a.mass)),
        );
    }
    Ok((x_next, DiscreteMeasure::normalized(atoms)))
}

/// Euler-LAS trajectory from `(x₀, A^x_N(μ₀))` up to time `T`.
pub fn euler_las_trajectory<S: CoupledSystem + ?Sized>(
    x0: &[f64],
    mu0: &DiscreteMeasure,
    system: &S,
    grid: &GridSpec,
    t_final: f64,
) -> Result<Trajectory> {
    let (steps, rest) = step_count(t_final, grid)?;
    let mut x = x0.to_vec();
    let mut mu = discretize_space(mu0, grid)?;
    let mut times = vec![0.0];
    let mut states = vec![State {
        x: x.clone(),
        measure: mu.clone(),
    }];
    for l in 1..=steps {
        let (x_next, mu_next) = euler_las_step(&x, &mu, system, grid)?;
        debug_assert!(
            mass_bound_holds(&mu, &mu_next, &system.source(&mu, &x), grid),
            "Euler-LAS step {l} exceeds the uniform mass bound"
        );
        x = x_next;
        mu = mu_next;
        times.push(grid_time(l, grid));
        states.push(State {
            x: x.clone(),
            measure: mu.clone(),
        });
    }
    if rest > 0.0 {
        let (x_last, mu_last) = euler_las_interpolate(&x, &mu, system, grid, rest.min(grid.dt()))?;
        times.push(t_final);
        states.push(State {
            x: x_last,
            measure: mu_last,
        });
    }
    Ok(Trajectory {
        grid: *grid,
        times,
        states,
    })
}

/// `|μ_{ℓ+1}| <= |μ_ℓ| (1 + Δ_N max rate) + Δ_N |inflow|` up to rounding.
fn mass_bound_holds(
    before: &DiscreteMeasure,
    after: &DiscreteMeasure,
    source: &SignedSourceRates,
    grid: &GridSpec,
) -> bool {
    let dt = grid.dt();
    let inflow = source.inflow.as_ref().map_or(0.0, |m| m.total_mass());
    let bound = before.total_mass() * (1.0 + dt * source.max_rate()) + dt * inflow;
    after.total_mass() <= bound * (1.0 + 1e-12) + 1e-300
}

/// Support radius bound `e^{C_N T}(R_N + 1) - 1` of LAS snapshots, with
/// `C_N = C + 1/N` and `R_N = R + 1/N²`.
pub fn support_growth_bound(radius: f64, c: f64, n: u32, t: f64) -> f64 {
    let n = n as f64;
    let c_n = c + 1.0 / n;
    let r_n = radius + 1.0 / (n * n);
    (c_n * t).exp() * (r_n + 1.0) - 1.0
}

/// Support radius bound for fields with speeds at most `max_speed`: each step
/// moves an atom by at most `Δ_N (max_speed + 1/N)` after the velocity snap.
pub fn linear_support_bound(radius: f64, max_speed: f64, n: u32, t: f64) -> f64 {
    let n = n as f64;
    radius + 1.0 / (n * n) + t * (max_speed + 1.0 / n)
}

/// The tighter of the two support bounds.
pub fn support_radius_bound(radius: f64, pvf: &PvfSpec, n: u32, t: f64) -> f64 {
    support_growth_bound(radius, pvf.growth_constant(), n, t).min(linear_support_bound(
        radius,
        pvf.max_speed(),
        n,
        t,
    ))
}

/// Whether every atom of a snapshot at time `t` lies within the support
/// growth bound of an initial radius `radius`.
pub fn check_support_bound(
    mu: &DiscreteMeasure,
    radius: f64,
    c: f64,
    grid: &GridSpec,
    t: f64,
) -> bool {
    let bound = support_growth_bound(radius, c, grid.n(), t);
    mu.support_radius() <= bound * (1.0 + 1e-12)
}

/// Whether grid `n` keeps supports of radius `radius` inside the truncation
/// box up to time `T`.
pub fn grid_is_admissible(radius: f64, pvf: &PvfSpec, n: u32, t: f64) -> bool {
    support_radius_bound(radius, pvf, n, t) <= n as f64
}

/// Smallest admissible grid size, or `None` beyond [`GridSpec::MAX_N`].
pub fn minimal_admissible_n(radius: f64, pvf: &PvfSpec, t: f64) -> Option<u32> {
    (1..=GridSpec::MAX_N).find(|&n| grid_is_admissible(radius, pvf, n, t))
}

/// Errors with [`Error::GridTooCoarse`] unless grid `n` is admissible.
pub fn require_admissible(radius: f64, pvf: &PvfSpec, grid: &GridSpec, t: f64) -> Result<()> {
    if grid_is_admissible(radius, pvf, grid.n(), t) {
        return Ok(());
    }
    Err(Error::GridTooCoarse {
        n: grid.n(),
        min_admissible: minimal_admissible_n(radius, pvf, t).unwrap_or(GridSpec::MAX_N),
    })
}

/// Distance between two coupled states: Euclidean distance of the ODE parts
/// plus the generalized Wasserstein distance of the measures.
pub fn state_distance(a: &State, b: &State) -> f64 {
    let ode: f64 =
        a.x.iter()
            .zip(&b.x)
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt();
    ode + generalized_wasserstein(&a.measure, &b.measure).value
}

#[derive(Debug, Clone, PartialEq)]
pub struct DependenceReport {
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    /// `distance(t) / distance(0)`; empty when the report is degenerate.
    pub ratios: Vec<f64>,
    /// `sup_{t>0} ln r(t) / t`, `None` when degenerate.
    pub empirical_rate: Option<f64>,
    /// Set when the two initial states coincide, so ratios are `0/0`.
    pub degenerate: bool,
}

/// Runs two trajectories of the same system and measures how their distance
/// evolves relative to the initial distance.
#[allow(clippy::too_many_arguments)]
pub fn lipschitz_dependence_probe<S: CoupledSystem + ?Sized>(
    x0: &[f64],
    mu0: &DiscreteMeasure,
    y0: &[f64],
    nu0: &DiscreteMeasure,
    system: &S,
    grid: &GridSpec,
    t_final: f64,
) -> Result<DependenceReport> {
    lipschitz_dependence_probe_sampled(x0, mu0, y0, nu0, system, grid, t_final, 1)
}

/// [`lipschitz_dependence_probe`] evaluating the distance only at every
/// `stride`-th snapshot (and the last one).
#[allow(clippy::too_many_arguments)]
pub fn lipschitz_dependence_probe_sampled<S: CoupledSystem + ?Sized>(
    x0: &[f64],
    mu0: &DiscreteMeasure,
    y0: &[f64],
    nu0: &DiscreteMeasure,
    system: &S,
    grid: &GridSpec,
    t_final: f64,
    stride: usize,
) -> Result<DependenceReport> {
    let stride = stride.max(1);
    let first = euler_las_trajectory(x0, mu0, system, grid, t_final)?;
    let second = euler_las_trajectory(y0, nu0, system, grid, t_final)?;
    let last = first.len() - 1;
    let mut times = Vec::new();
    let mut distances = Vec::new();
    for k in (0..=last).filter(|&k| k % stride == 0 || k == last) {
        times.push(first.times[k]);
        distances.push(state_distance(&first.states[k], &second.states[k]));
    }
    let initial = distances[0];
    if initial == 0.0 {
        return Ok(DependenceReport {
            times,
            distances,
            ratios: Vec::new(),
            empirical_rate: None,
            degenerate: true,
        });
    }
    let ratios: Vec<f64> = distances.iter().map(|d| d / initial).collect();
    let empirical_rate = times
        .iter()
        .zip(&ratios)
        .filter(|(t, _)| **t > 0.0)
        .map(|(t, r)| r.ln() / t)
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.max(v)))
        });
    Ok(DependenceReport {
        times,
        distances,
        ratios,
        empirical_rate,
        degenerate: false,
    })
}
