//! Wasserstein distances between atomic measures on the line.
//!
//! [`generalized_wasserstein`] handles measures of different mass: each unit
//! of mass may be transported at cost `|x - y|` or removed/created at unit
//! cost. It is solved as a min-cost flow with two slack nodes, one absorbing
//! source mass that is removed and one supplying target mass that is created.

mod flow;

use crate::error::{Error, Result};
use crate::measure::{Atom, DiscreteMeasure};
use crate::pvf::{base_projection, VelocityAtom, VelocityMeasure};

use flow::MinCostFlow;

/// Absolute tolerance on the mass balance required by [`wasserstein_1d`].
pub const MASS_TOLERANCE: f64 = 1e-12;

/// One matched sliver of a transport plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanEntry {
    pub source: f64,
    pub target: f64,
    pub mass: f64,
}

/// A partial transport plan with removal/creation bookkeeping.
///
/// `unmatched_source[i]` is the mass of source atom `i` that is removed, and
/// `unmatched_target[j]` the mass of target atom `j` that is created; both are
/// aligned with the atoms of the input measures.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TransportPlan {
    pub entries: Vec<PlanEntry>,
    pub unmatched_source: Vec<Atom>,
    pub unmatched_target: Vec<Atom>,
}

impl TransportPlan {
    pub fn transport_cost(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| (e.source - e.target).abs() * e.mass)
            .sum()
    }

    pub fn matched_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.mass).sum()
    }

    pub fn removed_mass(&self) -> f64 {
        self.unmatched_source.iter().map(|a| a.mass).sum()
    }

    pub fn added_mass(&self) -> f64 {
        self.unmatched_target.iter().map(|a| a.mass).sum()
    }

    /// Largest violation of the marginal constraints against `mu`/`nu`, or of
    /// mass nonnegativity.
    pub fn marginal_error(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
        let mut worst = 0.0f64;
        for e in &self.entries {
            worst = worst.max(-e.mass);
        }
        for (side, unmatched, key) in [
            (mu, &self.unmatched_source, true),
            (nu, &self.unmatched_target, false),
        ] {
            if unmatched.len() != side.len() {
                return f64::INFINITY;
            }
            for (atom, rest) in side.atoms().iter().zip(unmatched) {
                worst = worst.max(-rest.mass);
                let matched: f64 = self
                    .entries
                    .iter()
                    .filter(|e| (if key { e.source } else { e.target }) == atom.position)
                    .map(|e| e.mass)
                    .sum();
                worst = worst.max((matched + rest.mass - atom.mass).abs());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GwResult {
    pub value: f64,
    pub plan: TransportPlan,
    pub kept_source_mass: f64,
    pub kept_target_mass: f64,
}

/// `∫ |F_μ - F_ν| dx` over the union of breakpoints; no mass check.
pub(crate) fn cdf_gap_integral(a: &[Atom], b: &[Atom]) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut diff = 0.0f64;
    let mut total = 0.0;
    let mut last: Option<f64> = None;
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(p), Some(q)) => p.position.min(q.position),
            (Some(p), None) => p.position,
            (None, Some(q)) => q.position,
            (None, None) => unreachable!(),
        };
        if let Some(prev) = last {
            total += diff.abs() * (x - prev);
        }
        while i < a.len() && a[i].position == x {
            diff += a[i].mass;
            i += 1;
        }
        while j < b.len() && b[j].position == x {
            diff -= b[j].mass;
            j += 1;
        }
        last = Some(x);
    }
    total
}

/// `W¹(μ, ν)` for measures of equal total mass, via the CDF formula.
pub fn wasserstein_1d(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<f64> {
    let (left, right) = (mu.total_mass(), nu.total_mass());
    if (left - right).abs() > MASS_TOLERANCE {
        return Err(Error::MassMismatch { left, right });
    }
    Ok(cdf_gap_integral(mu.atoms(), nu.atoms()))
}

/// Generalized Wasserstein distance with unit removal/creation cost.
pub fn generalized_wasserstein(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> GwResult {
    let (kept_source, kept_target) = kept_marginals(mu, nu);
    let plan = monotone_plan(mu, nu, &kept_source, &kept_target);
    let value = plan.transport_cost() + plan.removed_mass() + plan.added_mass();
    let matched = plan.matched_mass();
    GwResult {
        value,
        plan,
        kept_source_mass: matched,
        kept_target_mass: matched,
    }
}

/// The plan behind [`generalized_wasserstein`]: its matched part is the
/// monotone (non-crossing) coupling of the kept submeasures.
pub fn optimal_partial_plan(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> TransportPlan {
    generalized_wasserstein(mu, nu).plan
}

/// Kept mass per atom of `mu` and of `nu` at an optimum of the partial
/// transport program.
fn kept_marginals(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> (Vec<f64>, Vec<f64>) {
    let (n, m) = (mu.len(), nu.len());
    let (total_mu, total_nu) = (mu.total_mass(), nu.total_mass());
    if n == 0 || m == 0 {
        return (vec![0.0; n], vec![0.0; m]);
    }

    // Node layout: source, μ atoms, ν atoms, trash, create, sink.
    let source = 0;
    let mu_node = |i: usize| 1 + i;
    let nu_node = |j: usize| 1 + n + j;
    let trash = 1 + n + m;
    let create = trash + 1;
    let sink = create + 1;

    let mut graph = MinCostFlow::new(sink + 1);
    let mut transport_edges = Vec::new();
    for (i, a) in mu.atoms().iter().enumerate() {
        graph.add_edge(source, mu_node(i), a.mass, 0.0);
        graph.add_edge(mu_node(i), trash, a.mass, 1.0);
        for (j, b) in nu.atoms().iter().enumerate() {
            let cost = (a.position - b.position).abs();
            // Moving a unit further than 2 never beats removing and recreating it.
            if cost < 2.0 {
                let id = graph.add_edge(mu_node(i), nu_node(j), a.mass.min(b.mass), cost);
                transport_edges.push((i, j, id));
            }
        }
    }
    graph.add_edge(source, create, total_nu, 0.0);
    for (j, b) in nu.atoms().iter().enumerate() {
        graph.add_edge(create, nu_node(j), b.mass, 1.0);
        graph.add_edge(nu_node(j), sink, b.mass, 0.0);
    }
    graph.add_edge(create, trash, total_mu.min(total_nu), 0.0);
    graph.add_edge(trash, sink, total_mu, 0.0);

    let scale = total_mu.max(total_nu).max(1.0);
    graph.solve(source, sink, total_mu + total_nu, 1e-15 * scale);

    let mut kept_source = vec![0.0; n];
    let mut kept_target = vec![0.0; m];
    for (i, j, id) in transport_edges {
        let f = graph.flow(id);
        kept_source[i] += f;
        kept_target[j] += f;
    }
    for (k, a) in kept_source.iter_mut().zip(mu.atoms()) {
        *k = k.clamp(0.0, a.mass);
    }
    for (k, b) in kept_target.iter_mut().zip(nu.atoms()) {
        *k = k.clamp(0.0, b.mass);
    }
    (kept_source, kept_target)
}

/// North-west-corner coupling of the kept masses, in ascending position
/// order on both sides.
fn monotone_plan(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    kept_source: &[f64],
    kept_target: &[f64],
) -> TransportPlan {
    let scale = mu.total_mass().max(nu.total_mass()).max(1.0);
    let eps = 1e-14 * scale;
    let mut entries = Vec::new();
    let mut left_source = kept_source.to_vec();
    let mut left_target = kept_target.to_vec();
    let (mut i, mut j) = (0, 0);
    while i < left_source.len() && j < left_target.len() {
        if left_source[i] <= eps {
            i += 1;
            continue;
        }
        if left_target[j] <= eps {
            j += 1;
            continue;
        }
        let w = left_source[i].min(left_target[j]);
        entries.push(PlanEntry {
            source: mu.atoms()[i].position,
            target: nu.atoms()[j].position,
            mass: w,
        });
        left_source[i] -= w;
        left_target[j] -= w;
    }

    let mut matched_source = vec![0.0; mu.len()];
    let mut matched_target = vec![0.0; nu.len()];
    {
        let (mut i, mut j) = (0, 0);
        for e in &entries {
            while mu.atoms()[i].position != e.source {
                i += 1;
            }
            while nu.atoms()[j].position != e.target {
                j += 1;
            }
            matched_source[i] += e.mass;
            matched_target[j] += e.mass;
        }
    }
    let unmatched = |measure: &DiscreteMeasure, matched: &[f64]| -> Vec<Atom> {
        measure
            .atoms()
            .iter()
            .zip(matched)
            .map(|(a, &k)| Atom::new(a.position, (a.mass - k).max(0.0)))
            .collect()
    };
    TransportPlan {
        unmatched_source: unmatched(mu, &matched_source),
        unmatched_target: unmatched(nu, &matched_target),
        entries,
    }
}

/// Computable restriction of the velocity operator `𝒲^g`.
///
/// The base projections are matched by the optimal partial plan (monotone
/// on the kept masses); every matched sliver of mass `w` between `x` and `y`
/// then contributes `w · W¹(ρ_x, σ_y)`, where `ρ_x`, `σ_y` are the normalized
/// velocity laws over `x` and `y`, coupled monotonically. This bounds the
/// infimum in the general definition from above.
pub fn velocity_operator_cost(v1: &VelocityMeasure, v2: &VelocityMeasure) -> Result<f64> {
    for v in [v1, v2] {
        if !v.total_mass().is_finite() {
            return Err(Error::InvalidVelocityMeasure(
                "base projection has infinite mass".into(),
            ));
        }
    }
    let gw = generalized_wasserstein(&base_projection(v1), &base_projection(v2));
    let mut cost = 0.0;
    for entry in &gw.plan.entries {
        let rho = velocity_law(v1.fiber(entry.source));
        let sigma = velocity_law(v2.fiber(entry.target));
        if rho.is_empty() || sigma.is_empty() {
            return Err(Error::InvalidVelocityMeasure(
                "matched base atom has no velocity fiber".into(),
            ));
        }
        cost += entry.mass * cdf_gap_integral(&rho, &sigma);
    }
    Ok(cost)
}

/// Fiber normalized to a probability law on velocities (sorted by velocity).
fn velocity_law(fiber: &[VelocityAtom]) -> Vec<Atom> {
    let total: f64 = fiber.iter().map(|a| a.mass).sum();
    fiber
        .iter()
        .map(|a| Atom::new(a.velocity, a.mass / total))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(atoms: &[(f64, f64)]) -> DiscreteMeasure {
        DiscreteMeasure::from_atoms(atoms.iter().copied()).unwrap()
    }

    fn v(atoms: &[(f64, f64, f64)]) -> VelocityMeasure {
        VelocityMeasure::from_atoms(atoms.iter().copied()).unwrap()
    }

    #[test]
    fn w1_translation() {
        assert_eq!(
            wasserstein_1d(&m(&[(0.0, 1.0)]), &m(&[(1.0, 1.0)])).unwrap(),
            1.0
        );
    }

    #[test]
    fn w1_symmetric_split() {
        // Only one coupling exists when the source is a single atom.
        for t in [0.1, 0.5, 2.0, 7.25] {
            let w = wasserstein_1d(&m(&[(0.0, 1.0)]), &m(&[(-t, 0.5), (t, 0.5)])).unwrap();
            assert!((w - t).abs() < 1e-15);
        }
    }

    #[test]
    fn w1_rejects_unequal_masses() {
        assert!(matches!(
            wasserstein_1d(&m(&[(0.0, 1.0)]), &m(&[(0.0, 2.0)])),
            Err(Error::MassMismatch { .. })
        ));
    }

    #[test]
    fn gw_identity_plan() {
        let mu = m(&[(-1.0, 0.5), (0.3, 1.5), (2.0, 1.0)]);
        let gw = generalized_wasserstein(&mu, &mu);
        assert_eq!(gw.value, 0.0);
        assert_eq!(gw.plan.entries.len(), 3);
        assert!(gw.plan.entries.iter().all(|e| e.source == e.target));
    }

    #[test]
    fn gw_against_empty() {
        let gw = generalized_wasserstein(&m(&[(0.0, 1.0)]), &DiscreteMeasure::empty());
        assert_eq!(gw.value, 1.0);
        assert_eq!(gw.plan.removed_mass(), 1.0);
        let both = generalized_wasserstein(&DiscreteMeasure::empty(), &DiscreteMeasure::empty());
        assert_eq!(both.value, 0.0);
        assert!(both.plan.entries.is_empty());
    }

    #[test]
    fn gw_two_diracs_caps_at_two() {
        for d in [0.0, 0.5, 1.0, 1.9, 2.0, 2.5, 10.0] {
            let gw = generalized_wasserstein(&m(&[(0.0, 1.0)]), &m(&[(d, 1.0)]));
            let expected: f64 = d.min(2.0);
            assert!((gw.value - expected).abs() < 1e-12, "d={d}: {}", gw.value);
        }
    }

    #[test]
    fn gw_surplus_mass_removed() {
        let gw = generalized_wasserstein(&m(&[(0.0, 1.0)]), &m(&[(0.0, 2.0)]));
        assert_eq!(gw.value, 1.0);
        assert_eq!(gw.kept_source_mass, 1.0);
        assert_eq!(gw.plan.added_mass(), 1.0);
    }

    #[test]
    fn plan_examples() {
        let plan = optimal_partial_plan(&m(&[(0.0, 1.0)]), &m(&[(0.0, 1.0)]));
        assert_eq!(
            plan.entries,
            vec![PlanEntry {
                source: 0.0,
                target: 0.0,
                mass: 1.0
            }]
        );
        assert_eq!(plan.removed_mass() + plan.added_mass(), 0.0);

        let far = optimal_partial_plan(&m(&[(0.0, 1.0)]), &m(&[(3.0, 1.0)]));
        assert!(far.entries.is_empty());
        assert_eq!(far.unmatched_source, vec![Atom::new(0.0, 1.0)]);
        assert_eq!(far.unmatched_target, vec![Atom::new(3.0, 1.0)]);

        let two = m(&[(0.0, 1.0), (1.0, 1.0)]);
        let plan = optimal_partial_plan(&two, &two);
        assert_eq!(plan.transport_cost(), 0.0);
        assert_eq!(plan.entries.len(), 2);
    }

    #[test]
    fn plan_is_monotone_under_ties() {
        // Every perfect matching costs 2 here; the plan must not cross.
        let mu = m(&[(0.0, 1.0), (1.0, 1.0)]);
        let nu = m(&[(0.5, 1.0), (1.5, 1.0)]);
        let plan = optimal_partial_plan(&mu, &nu);
        for w in plan.entries.windows(2) {
            assert!(w[0].source <= w[1].source && w[0].target <= w[1].target);
        }
        assert!(plan.marginal_error(&mu, &nu) < 1e-12);
    }

    #[test]
    fn velocity_cost_examples() {
        let a = v(&[(0.0, 1.0, 1.0), (2.0, -0.5, 0.3)]);
        assert_eq!(velocity_operator_cost(&a, &a).unwrap(), 0.0);

        let up = v(&[(0.0, 1.0, 1.0)]);
        let down = v(&[(0.0, -1.0, 1.0)]);
        assert_eq!(velocity_operator_cost(&up, &down).unwrap(), 2.0);

        let far = v(&[(5.0, 1.0, 1.0)]);
        let gw = generalized_wasserstein(&base_projection(&up), &base_projection(&far));
        assert_eq!(gw.kept_source_mass, 0.0);
        assert_eq!(velocity_operator_cost(&up, &far).unwrap(), 0.0);
    }

    #[test]
    fn velocity_cost_couples_fibers_monotonically() {
        // Same base; fibers {-1, 1} vs {0, 2} each with equal halves: W¹ = 1.
        let a = v(&[(0.0, -1.0, 0.5), (0.0, 1.0, 0.5)]);
        let b = v(&[(0.0, 0.0, 0.5), (0.0, 2.0, 0.5)]);
        assert!((velocity_operator_cost(&a, &b).unwrap() - 1.0).abs() < 1e-15);
    }
}
