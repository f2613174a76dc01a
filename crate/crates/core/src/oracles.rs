//! Reference solutions computed independently of the schemes.

use crate::error::{Error, Result};
use crate::measure::{Atom, DiscreteMeasure};
use crate::piecewise::PiecewiseLinearFn;
use crate::pvf::median_split;
use crate::sir::SirPoint;

/// Exact solution of the barycenter-split dynamics: mass left of the median
/// atom moves at `-1`, mass right of it at `+1`, and the median atom splits so
/// that half of the total mass goes each way.
pub fn splitting_solution(mu0: &DiscreteMeasure, t: f64) -> Result<DiscreteMeasure> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidTime(t));
    }
    let (k, minus, plus) = median_split(mu0)?;
    let mut atoms = Vec::with_capacity(mu0.len() + 1);
    for (idx, a) in mu0.atoms().iter().enumerate() {
        match idx.cmp(&k) {
            std::cmp::Ordering::Less => atoms.push(Atom::new(a.position - t, a.mass)),
            std::cmp::Ordering::Greater => atoms.push(Atom::new(a.position + t, a.mass)),
            std::cmp::Ordering::Equal => {
                atoms.push(Atom::new(a.position - t, minus));
                atoms.push(Atom::new(a.position + t, plus));
            }
        }
    }
    Ok(DiscreteMeasure::normalized(atoms))
}

/// Density at `(t, x)` of the self-similar solution from `δ_0` under the
/// cumulative field of a strictly increasing `φ`: `(φ⁻¹)'(x/t) / t` on
/// `t·φ([0, 1])`, zero elsewhere.
pub fn self_similar_density(phi: &PiecewiseLinearFn, t: f64, x: f64) -> Result<f64> {
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::InvalidTime(t));
    }
    let segments = phi.segments_within(0.0, 1.0);
    if segments.iter().any(|s| !(s.v1 > s.v0)) {
        return Err(Error::NonInvertiblePhi);
    }
    let v = x / t;
    let (lo, hi) = (segments[0].v0, segments[segments.len() - 1].v1);
    if !(lo..=hi).contains(&v) {
        return Ok(0.0);
    }
    let seg = segments
        .iter()
        .find(|s| v < s.v1)
        .unwrap_or(&segments[segments.len() - 1]);
    Ok(1.0 / (seg.slope() * t))
}

/// Distribution function of the self-similar solution: the rank `u` with
/// `φ(u) = x/t`, clamped to `[0, 1]`.
pub fn self_similar_cdf(phi: &PiecewiseLinearFn, t: f64, x: f64) -> Result<f64> {
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::InvalidTime(t));
    }
    let segments = phi.segments_within(0.0, 1.0);
    if segments.iter().any(|s| !(s.v1 > s.v0)) {
        return Err(Error::NonInvertiblePhi);
    }
    let v = x / t;
    if v <= segments[0].v0 {
        return Ok(0.0);
    }
    match segments.iter().find(|s| v < s.v1) {
        Some(seg) => Ok(seg.preimage(v)),
        None => Ok(1.0),
    }
}

/// A rate that may depend on time.
pub trait Schedule {
    fn at(&self, t: f64) -> f64;
}

impl Schedule for f64 {
    fn at(&self, _t: f64) -> f64 {
        *self
    }
}

impl<F: Fn(f64) -> f64> Schedule for F {
    fn at(&self, t: f64) -> f64 {
        self(t)
    }
}

/// Classical SIR model `Ṡ = -(S/N)βI`, `İ = (S/N)βI - νI`, `Ṙ = νI`
/// integrated by fixed-step fourth-order Runge-Kutta. The last step is
/// shortened to land on `T`.
#[allow(clippy::too_many_arguments)]
pub fn classical_sir_rk4(
    s0: f64,
    i0: f64,
    r0: f64,
    beta: &impl Schedule,
    nu: &impl Schedule,
    n_pop: f64,
    t_final: f64,
    h: f64,
) -> Result<Vec<SirPoint>> {
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "step h={h} must be positive"
        )));
    }
    if !t_final.is_finite() || t_final < 0.0 {
        return Err(Error::InvalidTime(t_final));
    }
    if !n_pop.is_finite() || n_pop <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "N_pop={n_pop} must be positive"
        )));
    }
    let rhs = |t: f64, y: [f64; 3]| -> [f64; 3] {
        let infection = y[0] / n_pop * beta.at(t) * y[1];
        let recovery = nu.at(t) * y[1];
        [-infection, infection - recovery, recovery]
    };
    let axpy =
        |y: [f64; 3], a: f64, k: [f64; 3]| [y[0] + a * k[0], y[1] + a * k[1], y[2] + a * k[2]];

    let steps = ((t_final / h) - 1e-9).ceil().max(0.0) as u64;
    let mut y = [s0, i0, r0];
    let mut out = Vec::with_capacity(steps as usize + 1);
    out.push(SirPoint {
        t: 0.0,
        s: s0,
        i: i0,
        r: r0,
    });
    for l in 0..steps {
        let t = l as f64 * h;
        let step = if l + 1 == steps { t_final - t } else { h };
        let k1 = rhs(t, y);
        let k2 = rhs(t + 0.5 * step, axpy(y, 0.5 * step, k1));
        let k3 = rhs(t + 0.5 * step, axpy(y, 0.5 * step, k2));
        let k4 = rhs(t + step, axpy(y, step, k3));
        for c in 0..3 {
            y[c] += step / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        let t_next = if l + 1 == steps {
            t_final
        } else {
            (l + 1) as f64 * h
        };
        out.push(SirPoint {
            t: t_next,
            s: y[0],
            i: y[1],
            r: y[2],
        });
    }
    Ok(out)
}

/// Linear interpolation of an oracle trajectory at time `t`.
pub fn sample_at(points: &[SirPoint], t: f64) -> SirPoint {
    let k = points.partition_point(|p| p.t < t);
    if k == 0 {
        return points[0];
    }
    if k == points.len() {
        return points[points.len() - 1];
    }
    let (a, b) = (points[k - 1], points[k]);
    if b.t == t {
        return b;
    }
    let w = (t - a.t) / (b.t - a.t);
    SirPoint {
        t,
        s: a.s + w * (b.s - a.s),
        i: a.i + w * (b.i - a.i),
        r: a.r + w * (b.r - a.r),
    }
}

/// Number of sign changes of `I(t_{k+1}) - I(t_k)`, ignoring exact ties.
pub fn infected_trend_changes(points: &[SirPoint]) -> usize {
    let mut last = 0.0f64;
    let mut changes = 0;
    for w in points.windows(2) {
        let d = w[1].i - w[0].i;
        if d == 0.0 {
            continue;
        }
        if last != 0.0 && d.signum() != last.signum() {
            changes += 1;
        }
        last = d;
    }
    changes
}

/// Largest number of atoms per measure accepted by [`gw_bruteforce`].
pub const BRUTEFORCE_MAX_ATOMS: usize = 4;

/// Mass lattice cells per unit `resolution` and atom; see [`gw_bruteforce`].
const LATTICE_REFINEMENT: f64 = 16.0;

/// Generalized Wasserstein distance by exhaustive search over kept masses.
///
/// Kept masses range over multiples of `q = (|μ| + |ν|) / (16 · resolution ·
/// atoms)`. Sweeping the merged atoms left to right with the net kept flow
/// `f` as state, every atom contributes its removed mass and every gap
/// contributes `|f| · length`, which is the CDF formula for `W¹` of the kept
/// parts; a balanced sweep ends at `f = 0`. Each atom loses at most `q` of
/// kept mass against the true optimum, so the result is an upper bound
/// within `O(1/resolution)` of the infimum over submeasures.
pub fn gw_bruteforce(mu: &DiscreteMeasure, nu: &DiscreteMeasure, resolution: u32) -> Result<f64> {
    for side in [mu, nu] {
        if side.len() > BRUTEFORCE_MAX_ATOMS {
            return Err(Error::TooManyAtoms {
                max: BRUTEFORCE_MAX_ATOMS,
                got: side.len(),
            });
        }
    }
    if resolution == 0 {
        return Err(Error::InvalidParameter(
            "resolution must be positive".into(),
        ));
    }
    let total = mu.total_mass() + nu.total_mass();
    let atoms = mu.len() + nu.len();
    if atoms == 0 {
        return Ok(0.0);
    }
    let q = total / (LATTICE_REFINEMENT * resolution as f64 * atoms as f64);
    let units = |m: f64| (m / q).floor() as i64;
    let offset = units(mu.total_mass()) + units(nu.total_mass()) + 1;
    let width = (2 * offset + 1) as usize;
    let index = |f: i64| (f + offset) as usize;

    // Events sorted by position; μ before ν at ties (no gap between them).
    let mut events: Vec<(f64, bool, f64)> = mu
        .atoms()
        .iter()
        .map(|a| (a.position, true, a.mass))
        .chain(nu.atoms().iter().map(|a| (a.position, false, a.mass)))
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));

    let mut cost = vec![f64::INFINITY; width];
    cost[index(0)] = 0.0;
    let mut next = vec![f64::INFINITY; width];
    let mut prev_position = events[0].0;
    for &(position, is_source, mass) in &events {
        let gap = position - prev_position;
        if gap > 0.0 {
            for f in -offset..=offset {
                let c = &mut cost[index(f)];
                if c.is_finite() {
                    *c += (f as f64).abs() * q * gap;
                }
            }
        }
        prev_position = position;
        let choices = units(mass);
        if is_source {
            // next[g] = mass - g q + min_{h ∈ [g-K, g]} (cost[h] + h q)
            sliding_min(
                &cost,
                choices,
                |h| h as f64 * q - offset as f64 * q,
                true,
                &mut next,
            );
            for (g, v) in next.iter_mut().enumerate() {
                *v += mass - (g as f64 - offset as f64) * q;
            }
        } else {
            // next[g] = mass + g q + min_{h ∈ [g, g+K]} (cost[h] - h q)
            sliding_min(
                &cost,
                choices,
                |h| -(h as f64) * q + offset as f64 * q,
                false,
                &mut next,
            );
            for (g, v) in next.iter_mut().enumerate() {
                *v += mass + (g as f64 - offset as f64) * q;
            }
        }
        std::mem::swap(&mut cost, &mut next);
    }
    Ok(cost[index(0)].max(0.0))
}

/// `out[g] = min over the window of (values[h] + shift(h))`, where the window
/// is `[g - k, g]` (`backward`) or `[g, g + k]`; computed with a monotone deque.
fn sliding_min(
    values: &[f64],
    k: i64,
    shift: impl Fn(usize) -> f64,
    backward: bool,
    out: &mut [f64],
) {
    let n = values.len();
    let key = |h: usize| values[h] + shift(h);
    let mut deque: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    let k = k.max(0) as usize;
    let order: Box<dyn Iterator<Item = usize>> = if backward {
        Box::new(0..n)
    } else {
        Box::new((0..n).rev())
    };
    for g in order {
        let v = key(g);
        while deque.back().is_some_and(|&h| !(key(h) < v)) {
            deque.pop_back();
        }
        deque.push_back(g);
        while let Some(&front) = deque.front() {
            if front.abs_diff(g) > k {
                deque.pop_front();
            } else {
                break;
            }
        }
        out[g] = key(*deque.front().unwrap());
    }
}
