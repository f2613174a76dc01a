//! Experiment orchestration for the four run modes.

use std::fs;
use std::path::{Path, PathBuf};

use mde_core::convergence::loglog_slope;
use mde_core::dynamics::{minimal_admissible_n, require_admissible};
use mde_core::io::{
    format_float, read_snapshot, write_manifest, write_table, write_trajectory_snapshots,
};
use mde_core::oracles::{
    classical_sir_rk4, gw_bruteforce, sample_at, self_similar_cdf, splitting_solution,
};
use mde_core::sir::{conserved_total, simulate, summarize};
use mde_core::{
    generalized_wasserstein, las_trajectory, wasserstein_1d, DiscreteMeasure, EpidemicParams,
    EpidemicState, GridSpec, PvfKind, PvfSpec, SirPoint,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Mode, Model, Reference, RunConfig, ValidateSettings};
use crate::error::CliError;

/// Errors at or below this level count as exact in the convergence fit.
const EXACT_TOLERANCE: f64 = 1e-14;

type ErrorAt = Box<dyn Fn(&GridSpec) -> Result<f64, CliError> + Sync>;

/// Files written by a run, in the order they were written.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
}

pub fn run(config: &RunConfig) -> Result<RunReport, CliError> {
    let out = config.out_dir()?;
    fs::create_dir_all(&out)
        .map_err(|e| CliError::Io(format!("cannot create `out` {}: {e}", out.display())))?;
    match config.mode()? {
        Mode::Simulate => run_simulate(config, &out),
        Mode::Distance => run_distance(config, &out),
        Mode::Convergence => run_convergence(config, &out),
        Mode::Validate => run_validate(config, &out),
    }
}

/// Numerical failures carry the smallest admissible grid for the run.
fn numerical(err: mde_core::Error, radius: f64, pvf: &PvfSpec, t_final: f64) -> CliError {
    match err {
        mde_core::Error::GridOverflow { .. } => {
            let hint = match minimal_admissible_n(radius, pvf, t_final) {
                Some(n) => format!("smallest admissible N is {n}"),
                None => format!("no admissible N up to {}", GridSpec::MAX_N),
            };
            CliError::Numerical(format!("{err}; {hint}"))
        }
        other => other.into(),
    }
}

fn single_grid(config: &RunConfig) -> Result<GridSpec, CliError> {
    match config.grids()?.as_slice() {
        [grid] => Ok(*grid),
        _ => Err(CliError::Config(
            "invalid `N_grid`: simulate takes a single grid size".into(),
        )),
    }
}

fn run_simulate(config: &RunConfig, out: &Path) -> Result<RunReport, CliError> {
    let grid = single_grid(config)?;
    let t_final = config.t_final()?;
    let (trajectory, rows, header) = match config.model()? {
        Model::Epidemic { params, initial } => {
            let radius = initial.i.support_radius();
            let traj = simulate(&params, &initial, &grid, t_final)
                .map_err(|e| numerical(e, radius, params.pvf(), t_final))?;
            let rows: Vec<Vec<f64>> = summarize(&traj)
                .iter()
                .map(|p| vec![p.t, p.s, p.i, p.r, p.total()])
                .collect();
            (traj, rows, vec!["t", "S", "I_total", "R", "conserved"])
        }
        Model::Pure { mu0, pvf } => {
            let radius = mu0.support_radius();
            require_admissible(radius, &pvf, &grid, t_final)?;
            let traj = las_trajectory(&mu0, &pvf, &grid, t_final)
                .map_err(|e| numerical(e, radius, &pvf, t_final))?;
            let rows: Vec<Vec<f64>> = traj
                .iter()
                .map(|(t, s)| vec![t, s.measure.total_mass()])
                .collect();
            (traj, rows, vec!["t", "mass"])
        }
    };
    let mut report = RunReport::default();
    let path = out.join("trajectory.csv");
    write_table(&path, &header, &rows)?;
    report.files.push(path);
    let manifest = write_trajectory_snapshots(out, &trajectory, config.snapshot_stride)?;
    report
        .files
        .extend(manifest.files.iter().map(|f| out.join(f)));
    let path = out.join("manifest.json");
    write_manifest(&path, &manifest)?;
    report.files.push(path);
    Ok(report)
}

fn run_distance(config: &RunConfig, out: &Path) -> Result<RunReport, CliError> {
    let settings = config
        .distance
        .as_ref()
        .ok_or_else(|| CliError::Config("missing field `distance`".into()))?;
    let a = settings
        .a
        .as_ref()
        .ok_or_else(|| CliError::Config("missing field `distance.a`".into()))?;
    let b = settings
        .b
        .as_ref()
        .ok_or_else(|| CliError::Config("missing field `distance.b`".into()))?;
    let (mu, nu) = (read_snapshot(a)?, read_snapshot(b)?);
    let gw = generalized_wasserstein(&mu, &nu);
    let w1 = wasserstein_1d(&mu, &nu).unwrap_or(f64::NAN);
    let plan = &gw.plan;
    let mut report = RunReport::default();
    let path = out.join("distance.csv");
    write_table(
        &path,
        &[
            "generalized_wasserstein",
            "wasserstein_1",
            "transport_cost",
            "removed_mass",
            "added_mass",
        ],
        &[vec![
            gw.value,
            w1,
            plan.transport_cost(),
            plan.removed_mass(),
            plan.added_mass(),
        ]],
    )?;
    report.files.push(path);
    if settings.plan {
        // Removed mass has no destination and created mass no source; both
        // are written with NaN on the missing side.
        let mut rows: Vec<Vec<f64>> = plan
            .entries
            .iter()
            .map(|e| vec![e.source, e.target, e.mass])
            .collect();
        rows.extend(
            plan.unmatched_source
                .iter()
                .filter(|a| a.mass > 0.0)
                .map(|a| vec![a.position, f64::NAN, a.mass]),
        );
        rows.extend(
            plan.unmatched_target
                .iter()
                .filter(|a| a.mass > 0.0)
                .map(|a| vec![f64::NAN, a.position, a.mass]),
        );
        let path = out.join("plan.csv");
        write_table(&path, &["src", "dst", "mass"], &rows)?;
        report.files.push(path);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct Fit {
    reference: Reference,
    slope: Option<f64>,
    fitted_n: Vec<u32>,
    exact: bool,
}

/// Largest gap between the distribution function of `mu` (normalized) and a
/// continuous one.
fn kolmogorov_gap(
    mu: &DiscreteMeasure,
    cdf: impl Fn(f64) -> Result<f64, mde_core::Error>,
) -> Result<f64, CliError> {
    let total = mu.total_mass();
    let mut cum = 0.0;
    let mut worst = 0.0f64;
    for a in mu.atoms() {
        let u = cdf(a.position)?;
        worst = worst.max((cum / total - u).abs());
        cum += a.mass;
        worst = worst.max((cum / total - u).abs());
    }
    Ok(worst)
}

fn sir_gap(points: &[SirPoint], oracle: &[SirPoint]) -> f64 {
    points
        .iter()
        .map(|p| p.l1_gap(&sample_at(oracle, p.t)))
        .fold(0.0, f64::max)
}

fn epidemic_error(
    params: &EpidemicParams,
    initial: &EpidemicState,
    grid: &GridSpec,
    t_final: f64,
    oracle: &[SirPoint],
) -> Result<f64, CliError> {
    let radius = initial.i.support_radius();
    let traj = simulate(params, initial, grid, t_final)
        .map_err(|e| numerical(e, radius, params.pvf(), t_final))?;
    Ok(sir_gap(&summarize(&traj), oracle))
}

fn pure_final(
    mu0: &DiscreteMeasure,
    pvf: &PvfSpec,
    grid: &GridSpec,
    t_final: f64,
) -> Result<DiscreteMeasure, CliError> {
    let radius = mu0.support_radius();
    require_admissible(radius, pvf, grid, t_final)?;
    let traj =
        las_trajectory(mu0, pvf, grid, t_final).map_err(|e| numerical(e, radius, pvf, t_final))?;
    Ok(traj.final_state().measure.clone())
}

fn reference_mismatch(reference: Reference, need: &str) -> CliError {
    CliError::Config(format!(
        "invalid `convergence.reference`: {reference:?} needs {need}"
    ))
}

fn run_convergence(config: &RunConfig, out: &Path) -> Result<RunReport, CliError> {
    let settings = config
        .convergence
        .as_ref()
        .ok_or_else(|| CliError::Config("missing field `convergence`".into()))?;
    let reference = settings.reference;
    let grids = config.grids()?;
    let t_final = config.t_final()?;
    let model = config.model()?;
    let finest = grids.iter().map(|g| g.n()).max().unwrap_or(2);
    let h = settings.h.unwrap_or(0.1 / finest as f64);
    if !h.is_finite() || h <= 0.0 {
        return Err(CliError::Config(format!(
            "invalid `convergence.h`: {h} must be positive"
        )));
    }

    let error_at: ErrorAt = match (reference, model) {
        (Reference::Splitting, Model::Pure { mu0, pvf }) => {
            if pvf.kind() != &PvfKind::BarycenterSplit {
                return Err(reference_mismatch(reference, "the barycenter_split field"));
            }
            let exact = splitting_solution(&mu0, t_final)?;
            Box::new(move |grid| {
                Ok(wasserstein_1d(
                    &pure_final(&mu0, &pvf, grid, t_final)?,
                    &exact,
                )?)
            })
        }
        (Reference::SelfSimilar, Model::Pure { mu0, pvf }) => {
            let phi = match pvf.kind() {
                PvfKind::CumulativePhi(phi) => phi.clone(),
                PvfKind::BarycenterSplit => {
                    return Err(reference_mismatch(reference, "a cumulative field"))
                }
            };
            if mu0.len() != 1 || mu0.atoms()[0].position != 0.0 {
                return Err(reference_mismatch(
                    reference,
                    "`mu0` to be a single atom at 0",
                ));
            }
            self_similar_cdf(&phi, t_final, 0.0)?;
            Box::new(move |grid| {
                let mu = pure_final(&mu0, &pvf, grid, t_final)?;
                kolmogorov_gap(&mu, |x| self_similar_cdf(&phi, t_final, x))
            })
        }
        (Reference::ClassicalSir, Model::Epidemic { params, initial }) => {
            let beta = config.beta.as_ref().and_then(|r| r.constant_value());
            let nu = config.nu.as_ref().and_then(|r| r.constant_value());
            let (Some(beta), Some(nu)) = (beta, nu) else {
                return Err(reference_mismatch(reference, "constant `beta` and `nu`"));
            };
            let oracle = classical_sir_rk4(
                initial.s,
                initial.i.total_mass(),
                initial.r,
                &beta,
                &nu,
                params.n_pop(),
                t_final,
                h,
            )?;
            Box::new(move |grid| epidemic_error(&params, &initial, grid, t_final, &oracle))
        }
        (Reference::TimeDependentSir, Model::Epidemic { params, initial }) => {
            if params.pvf().kind() != &PvfKind::BarycenterSplit {
                return Err(reference_mismatch(reference, "the barycenter_split field"));
            }
            if initial.i.len() != 1 || initial.i.atoms()[0].position != 0.0 {
                return Err(reference_mismatch(
                    reference,
                    "`I0` to be a single atom at 0",
                ));
            }
            let (beta, nu) = (params.beta().clone(), params.nu().clone());
            let oracle = classical_sir_rk4(
                initial.s,
                initial.i.total_mass(),
                initial.r,
                &|t: f64| beta.eval(t),
                &|t: f64| nu.eval(t),
                params.n_pop(),
                t_final,
                h,
            )?;
            Box::new(move |grid| epidemic_error(&params, &initial, grid, t_final, &oracle))
        }
        (Reference::Splitting | Reference::SelfSimilar, _) => {
            return Err(reference_mismatch(reference, "a pure config with `mu0`"))
        }
        (Reference::ClassicalSir | Reference::TimeDependentSir, _) => {
            return Err(reference_mismatch(reference, "an epidemic config"))
        }
    };

    let errors: Vec<f64> = grids.par_iter().map(&error_at).collect::<Result<_, _>>()?;

    let mut table: Vec<(u32, f64)> = grids.iter().map(|g| g.n()).zip(errors).collect();
    table.sort_by_key(|row| row.0);
    let fitted = if table.len() >= 3 {
        &table[1..]
    } else {
        &table[..]
    };
    let exact = table.iter().all(|&(_, e)| e <= EXACT_TOLERANCE);
    let points: Vec<(f64, f64)> = fitted.iter().map(|&(n, e)| (n as f64, e)).collect();
    let fit = Fit {
        reference,
        slope: loglog_slope(&points),
        fitted_n: fitted.iter().map(|row| row.0).collect(),
        exact,
    };

    let mut report = RunReport::default();
    let path = out.join("convergence.csv");
    let rows: Vec<Vec<f64>> = table.iter().map(|&(n, e)| vec![n as f64, e]).collect();
    write_table(&path, &["N", "error"], &rows)?;
    report.files.push(path);
    let path = out.join("fit.json");
    let text = serde_json::to_string_pretty(&fit).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(&path, text + "\n")?;
    report.files.push(path);
    Ok(report)
}

struct Check {
    id: String,
    oracle: f64,
    scheme: f64,
    tolerance: f64,
}

impl Check {
    fn gap(&self) -> f64 {
        (self.scheme - self.oracle).abs()
    }

    fn passed(&self) -> bool {
        self.gap() <= self.tolerance
    }
}

/// Random atomic measure with 1 to 3 atoms on a quarter lattice in `[-2, 2]`.
fn random_measure(rng: &mut ChaCha8Rng) -> DiscreteMeasure {
    let count = rng.gen_range(1..=3);
    let atoms: Vec<(f64, f64)> = (0..count)
        .map(|_| {
            (
                rng.gen_range(-8..=8) as f64 * 0.25,
                rng.gen_range(1..=6) as f64 * 0.25,
            )
        })
        .collect();
    DiscreteMeasure::from_atoms(atoms).expect("lattice atoms are valid")
}

fn gw_checks(settings: &ValidateSettings, rng: &mut ChaCha8Rng) -> Result<Vec<Check>, CliError> {
    let mut checks = Vec::with_capacity(settings.pairs);
    for k in 0..settings.pairs {
        let (mu, nu) = (random_measure(rng), random_measure(rng));
        let flow = generalized_wasserstein(&mu, &nu).value;
        let brute = gw_bruteforce(&mu, &nu, settings.resolution)?;
        checks.push(Check {
            id: format!("gw-{k}"),
            oracle: brute,
            scheme: flow,
            tolerance: settings.tolerance,
        });
    }
    Ok(checks)
}

/// Barycenter LAS runs from random lattice data against the splitting
/// solution at grid times, where the scheme is exact up to rounding.
fn splitting_checks(
    settings: &ValidateSettings,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Check>, CliError> {
    let grid = GridSpec::new(8)?;
    let pvf = PvfSpec::barycenter();
    let mut checks = Vec::new();
    for k in 0..settings.pairs.min(10) {
        let mu0 = random_measure(rng);
        let t_final = rng.gen_range(1..=8) as f64 * grid.dt();
        let scheme = pure_final(&mu0, &pvf, &grid, t_final)?;
        let exact = splitting_solution(&mu0, t_final)?;
        checks.push(Check {
            id: format!("splitting-{k}"),
            oracle: 0.0,
            scheme: wasserstein_1d(&scheme, &exact)?,
            tolerance: 1e-9,
        });
    }
    Ok(checks)
}

/// Scheme against the classical SIR model for a constant-rate epidemic
/// config, one row per compartment at the final time.
fn sir_checks(config: &RunConfig, settings: &ValidateSettings) -> Result<Vec<Check>, CliError> {
    let Ok(Model::Epidemic { params, initial }) = config.model() else {
        return Ok(Vec::new());
    };
    let beta = config.beta.as_ref().and_then(|r| r.constant_value());
    let nu = config.nu.as_ref().and_then(|r| r.constant_value());
    let (Some(beta), Some(nu)) = (beta, nu) else {
        return Ok(Vec::new());
    };
    let grid = single_grid(config)?;
    let t_final = config.t_final()?;
    let radius = initial.i.support_radius();
    let traj = simulate(&params, &initial, &grid, t_final)
        .map_err(|e| numerical(e, radius, params.pvf(), t_final))?;
    let points = summarize(&traj);
    let oracle = classical_sir_rk4(
        initial.s,
        initial.i.total_mass(),
        initial.r,
        &beta,
        &nu,
        params.n_pop(),
        t_final,
        0.1 * grid.dt(),
    )?;
    let last = points.last().expect("trajectories are nonempty");
    let reference = sample_at(&oracle, last.t);
    let tolerance = settings.tolerance * params.n_pop();
    let total = conserved_total(&initial);
    Ok(vec![
        Check {
            id: "sir-S".into(),
            oracle: reference.s,
            scheme: last.s,
            tolerance,
        },
        Check {
            id: "sir-I".into(),
            oracle: reference.i,
            scheme: last.i,
            tolerance,
        },
        Check {
            id: "sir-R".into(),
            oracle: reference.r,
            scheme: last.r,
            tolerance,
        },
        Check {
            id: "sir-conserved".into(),
            oracle: total,
            scheme: last.total(),
            tolerance: 1e-10 * total.max(1.0),
        },
    ])
}

fn run_validate(config: &RunConfig, out: &Path) -> Result<RunReport, CliError> {
    let settings = config.validate.clone().unwrap_or_default();
    if settings.resolution == 0 {
        return Err(CliError::Config(
            "invalid `validate.resolution`: must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut checks = gw_checks(&settings, &mut rng)?;
    checks.extend(splitting_checks(&settings, &mut rng)?);
    checks.extend(sir_checks(config, &settings)?);

    let mut text = String::from("input-id,oracle-value,scheme-value,gap,tolerance,pass\n");
    for c in &checks {
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            c.id,
            format_float(c.oracle),
            format_float(c.scheme),
            format_float(c.gap()),
            format_float(c.tolerance),
            c.passed()
        ));
    }
    let path = out.join("validate.csv");
    fs::write(&path, text)?;
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed())
        .map(|c| c.id.as_str())
        .collect();
    if !failed.is_empty() {
        return Err(CliError::Validation(format!(
            "{} of {} checks failed ({}); see {}",
            failed.len(),
            checks.len(),
            failed.join(", "),
            path.display()
        )));
    }
    Ok(RunReport { files: vec![path] })
}
