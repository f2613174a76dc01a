//! Probability vector fields on atomic measures.
//!
//! A PVF assigns to a measure `μ` a measure `V[μ]` on position–velocity
//! pairs whose base projection is `μ`. Two fields are provided:
//!
//! * [`pvf_barycenter`]: mass left of the normalized median moves at speed
//!   `-1`, mass right of it at `+1`, and the median atom is split so that
//!   exactly half of the mass goes each way.
//! * [`pvf_cumulative`]: mass at normalized rank `u` moves with velocity
//!   `φ(u)`; an atom occupying the rank interval `[a, b]` carries the law
//!   `φ#(uniform on [a, b])`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::measure::{Atom, DiscreteMeasure};
use crate::piecewise::PiecewiseLinearFn;

/// Rank-space width below which a velocity cut is merged into its neighbour
/// piece instead of producing a rounding-level sliver.
const SLIVER: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityAtom {
    pub position: f64,
    pub velocity: f64,
    pub mass: f64,
}

/// Finite atomic measure on position–velocity pairs, sorted by
/// `(position, velocity)` with duplicates merged.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VelocityMeasure {
    atoms: Vec<VelocityAtom>,
}

impl VelocityMeasure {
    pub fn from_atoms<I>(atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64, f64)>,
    {
        let atoms = atoms
            .into_iter()
            .map(|(position, velocity, mass)| {
                if !position.is_finite() || !velocity.is_finite() {
                    return Err(Error::InvalidVelocityMeasure(format!(
                        "non-finite atom ({position}, {velocity})"
                    )));
                }
                if !mass.is_finite() || mass < 0.0 {
                    return Err(Error::InvalidVelocityMeasure(format!(
                        "mass {mass} at ({position}, {velocity})"
                    )));
                }
                Ok(VelocityAtom {
                    position,
                    velocity,
                    mass,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::normalized(atoms))
    }

    pub(crate) fn normalized(mut atoms: Vec<VelocityAtom>) -> Self {
        atoms.retain(|a| a.mass > 0.0);
        atoms.sort_by(|a, b| {
            a.position
                .total_cmp(&b.position)
                .then(a.velocity.total_cmp(&b.velocity))
        });
        let mut merged: Vec<VelocityAtom> = Vec::with_capacity(atoms.len());
        for atom in atoms {
            match merged.last_mut() {
                Some(last) if last.position == atom.position && last.velocity == atom.velocity => {
                    last.mass += atom.mass
                }
                _ => merged.push(atom),
            }
        }
        Self { atoms: merged }
    }

    pub fn atoms(&self) -> &[VelocityAtom] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    pub fn max_speed(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.velocity.abs())
            .fold(0.0, f64::max)
    }

    /// Atoms sitting at `position` (a contiguous run, possibly empty).
    pub fn fiber(&self, position: f64) -> &[VelocityAtom] {
        let start = self.atoms.partition_point(|a| a.position < position);
        let end = self.atoms.partition_point(|a| a.position <= position);
        &self.atoms[start..end]
    }

    /// Maps every atom to `(position, velocity) ↦ (position, f(velocity))`.
    fn map_velocities(&self, f: impl Fn(f64) -> Result<f64>) -> Result<Self> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| {
                Ok(VelocityAtom {
                    velocity: f(a.velocity)?,
                    ..*a
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::normalized(atoms))
    }
}

/// `π₁#V`: sums masses over velocities at each position.
pub fn base_projection(v: &VelocityMeasure) -> DiscreteMeasure {
    DiscreteMeasure::normalized(
        v.atoms
            .iter()
            .map(|a| Atom::new(a.position, a.mass))
            .collect(),
    )
}

/// The operator `A^v_N`: velocities snap to the left edge of their
/// `[j/N, (j+1)/N)` cell. Positions and the base projection are unchanged.
pub fn discretize_velocity(v: &VelocityMeasure, grid: &GridSpec) -> Result<VelocityMeasure> {
    v.map_velocities(|w| Ok(grid.velocity_node(grid.velocity_cell(w)?)))
}

/// Normalized median `sup{x : G_μ(x) <= 1/2}`; for an atomic measure this is
/// the first atom at which the cumulative mass exceeds half the total.
pub fn barycenter(mu: &DiscreteMeasure) -> Result<f64> {
    let total = mu.positive_total()?;
    barycenter_index(mu, total).map(|k| mu.atoms()[k].position)
}

fn barycenter_index(mu: &DiscreteMeasure, total: f64) -> Result<usize> {
    let mut cum = 0.0;
    for (k, atom) in mu.atoms().iter().enumerate() {
        cum += atom.mass;
        if 2.0 * cum > total {
            return Ok(k);
        }
    }
    // Rounding left the final cumulative sum at or below half the total.
    mu.atoms().len().checked_sub(1).ok_or(Error::ZeroMass)
}

/// Masses `(towards -1, towards +1)` of the median atom.
pub(crate) fn median_split(mu: &DiscreteMeasure) -> Result<(usize, f64, f64)> {
    let total = mu.positive_total()?;
    let k = barycenter_index(mu, total)?;
    let left: f64 = mu.atoms()[..k].iter().map(|a| a.mass).sum();
    let mass = mu.atoms()[k].mass;
    let minus = (0.5 * total - left).clamp(0.0, mass);
    Ok((k, minus, mass - minus))
}

pub fn pvf_barycenter(mu: &DiscreteMeasure) -> Result<VelocityMeasure> {
    let (k, minus, plus) = median_split(mu)?;
    let mut atoms = Vec::with_capacity(mu.len() + 1);
    for (idx, a) in mu.atoms().iter().enumerate() {
        match idx.cmp(&k) {
            std::cmp::Ordering::Less => atoms.push(VelocityAtom {
                position: a.position,
                velocity: -1.0,
                mass: a.mass,
            }),
            std::cmp::Ordering::Greater => atoms.push(VelocityAtom {
                position: a.position,
                velocity: 1.0,
                mass: a.mass,
            }),
            std::cmp::Ordering::Equal => {
                atoms.push(VelocityAtom {
                    position: a.position,
                    velocity: -1.0,
                    mass: minus,
                });
                atoms.push(VelocityAtom {
                    position: a.position,
                    velocity: 1.0,
                    mass: plus,
                });
            }
        }
    }
    Ok(VelocityMeasure::normalized(atoms))
}

/// One piece of the conditional velocity law of an atom: mass spread
/// uniformly over `[v_lo, v_hi]` (a point mass when the two coincide).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityPiece {
    pub position: f64,
    pub v_lo: f64,
    pub v_hi: f64,
    pub mass: f64,
}

impl VelocityPiece {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.v_lo + self.v_hi)
    }
}

/// Exact conditional velocity laws of the cumulative-φ field, as uniform
/// pieces. With `cell_grid`, pieces are additionally cut at the velocity
/// lattice so that each piece falls in a single velocity cell.
pub fn cumulative_pieces(
    mu: &DiscreteMeasure,
    phi: &PiecewiseLinearFn,
    cell_grid: Option<&GridSpec>,
) -> Result<Vec<VelocityPiece>> {
    if !phi.is_nondecreasing() {
        return Err(Error::NonMonotonePhi);
    }
    let total = mu.positive_total()?;
    let mut pieces = Vec::new();
    let mut cum = 0.0;
    let last = mu.len() - 1;
    for (k, atom) in mu.atoms().iter().enumerate() {
        let a = (cum / total).min(1.0);
        cum += atom.mass;
        let b = if k == last {
            1.0
        } else {
            (cum / total).min(1.0)
        };
        atom_pieces(atom, a, b, phi, cell_grid, &mut pieces);
    }
    Ok(pieces)
}

fn atom_pieces(
    atom: &Atom,
    a: f64,
    b: f64,
    phi: &PiecewiseLinearFn,
    cell_grid: Option<&GridSpec>,
    out: &mut Vec<VelocityPiece>,
) {
    if !(b > a) {
        let v = phi.eval(a);
        out.push(VelocityPiece {
            position: atom.position,
            v_lo: v,
            v_hi: v,
            mass: atom.mass,
        });
        return;
    }

    // Rank cut points: φ breakpoints, plus preimages of velocity-cell edges.
    let mut ranks = vec![a];
    for seg in phi.segments_within(a, b) {
        if let Some(grid) = cell_grid {
            if seg.v1 > seg.v0 {
                let first = (seg.v0 * grid.n() as f64).floor() as i64;
                let mut j = first;
                loop {
                    let edge = grid.velocity_node(j);
                    if edge >= seg.v1 {
                        break;
                    }
                    if edge > seg.v0 {
                        push_cut(&mut ranks, seg.preimage(edge), b);
                    }
                    j += 1;
                }
            }
        }
        push_cut(&mut ranks, seg.u1, b);
    }
    if ranks.len() == 1 {
        ranks.push(b);
    } else if *ranks.last().unwrap() != b {
        // The final cut was absorbed as a sliver; stretch the last piece.
        *ranks.last_mut().unwrap() = b;
    }

    let width = b - a;
    let start = out.len();
    let mut assigned = 0.0;
    for w in ranks.windows(2) {
        let mass = atom.mass * ((w[1] - w[0]) / width);
        assigned += mass;
        out.push(VelocityPiece {
            position: atom.position,
            v_lo: phi.eval(w[0]),
            v_hi: phi.eval(w[1]),
            mass,
        });
    }
    // Make the pieces sum to the atom mass exactly.
    if let Some(last) = out[start..].last_mut() {
        last.mass = (last.mass + (atom.mass - assigned)).max(0.0);
    }
}

fn push_cut(ranks: &mut Vec<f64>, u: f64, b: f64) {
    let prev = *ranks.last().unwrap();
    if u - prev <= SLIVER {
        return;
    }
    if b - u <= SLIVER && u != b {
        return;
    }
    ranks.push(u);
}

/// Cumulative-φ field with each uniform piece placed at its velocity
/// midpoint.
pub fn pvf_cumulative(mu: &DiscreteMeasure, phi: &PiecewiseLinearFn) -> Result<VelocityMeasure> {
    pieces_to_measure(&cumulative_pieces(mu, phi, None)?)
}

/// Cumulative-φ field resolved on the velocity lattice of `grid`: after
/// [`discretize_velocity`] each cell carries exactly the mass the uniform
/// laws put in it.
pub fn pvf_cumulative_resolved(
    mu: &DiscreteMeasure,
    phi: &PiecewiseLinearFn,
    grid: &GridSpec,
) -> Result<VelocityMeasure> {
    pieces_to_measure(&cumulative_pieces(mu, phi, Some(grid))?)
}

fn pieces_to_measure(pieces: &[VelocityPiece]) -> Result<VelocityMeasure> {
    Ok(VelocityMeasure::normalized(
        pieces
            .iter()
            .map(|p| VelocityAtom {
                position: p.position,
                velocity: p.midpoint(),
                mass: p.mass,
            })
            .collect(),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub enum PvfKind {
    BarycenterSplit,
    CumulativePhi(PiecewiseLinearFn),
}

/// A PVF together with its support-growth constant `C`.
///
/// JSON form: `{"kind":"barycenter_split"}` or
/// `{"kind":"cumulative_phi","phi":[[0,-0.5],[1,0.5]],"C":0.5}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPvfSpec", into = "RawPvfSpec")]
pub struct PvfSpec {
    kind: PvfKind,
    support_growth_constant: f64,
}

impl PvfSpec {
    pub fn barycenter() -> Self {
        Self {
            kind: PvfKind::BarycenterSplit,
            support_growth_constant: 1.0,
        }
    }

    /// Cumulative field; `C` defaults to the largest speed `sup |φ|` on `[0, 1]`.
    pub fn cumulative(phi: PiecewiseLinearFn) -> Result<Self> {
        if !phi.is_nondecreasing() {
            return Err(Error::NonMonotonePhi);
        }
        let c = phi.eval(0.0).abs().max(phi.eval(1.0).abs());
        Ok(Self {
            kind: PvfKind::CumulativePhi(phi),
            support_growth_constant: c,
        })
    }

    pub fn with_growth_constant(mut self, c: f64) -> Result<Self> {
        if !c.is_finite() || c < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "support growth constant {c} must be finite and nonnegative"
            )));
        }
        self.support_growth_constant = c;
        Ok(self)
    }

    pub fn kind(&self) -> &PvfKind {
        &self.kind
    }

    pub fn growth_constant(&self) -> f64 {
        self.support_growth_constant
    }

    /// Uniform bound on the speeds the field can produce.
    pub fn max_speed(&self) -> f64 {
        match &self.kind {
            PvfKind::BarycenterSplit => 1.0,
            PvfKind::CumulativePhi(phi) => phi.eval(0.0).abs().max(phi.eval(1.0).abs()),
        }
    }

    pub fn evaluate(&self, mu: &DiscreteMeasure) -> Result<VelocityMeasure> {
        match &self.kind {
            PvfKind::BarycenterSplit => pvf_barycenter(mu),
            PvfKind::CumulativePhi(phi) => pvf_cumulative(mu, phi),
        }
    }

    /// `A^v_N(V[μ])`, the lattice velocity measure used by the schemes.
    pub fn evaluate_on_grid(
        &self,
        mu: &DiscreteMeasure,
        grid: &GridSpec,
    ) -> Result<VelocityMeasure> {
        let v = match &self.kind {
            PvfKind::BarycenterSplit => pvf_barycenter(mu)?,
            PvfKind::CumulativePhi(phi) => pvf_cumulative_resolved(mu, phi, grid)?,
        };
        discretize_velocity(&v, grid)
    }
}

/// Checks `sup |v| <= C (1 + sup |x|)` for the field evaluated on `mu`.
pub fn support_sublinearity_check(spec: &PvfSpec, mu: &DiscreteMeasure) -> Result<bool> {
    let v = spec.evaluate(mu)?;
    let bound = spec.growth_constant() * (1.0 + mu.support_radius());
    Ok(v.max_speed() <= bound)
}

#[derive(Serialize, Deserialize)]
struct RawPvfSpec {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phi: Option<PiecewiseLinearFn>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
}

impl TryFrom<RawPvfSpec> for PvfSpec {
    type Error = Error;

    fn try_from(raw: RawPvfSpec) -> Result<Self> {
        let spec = match (raw.kind.as_str(), raw.phi) {
            ("barycenter_split", None) => PvfSpec::barycenter(),
            ("barycenter_split", Some(_)) => {
                return Err(Error::InvalidParameter(
                    "barycenter_split takes no phi".into(),
                ))
            }
            ("cumulative_phi", Some(phi)) => PvfSpec::cumulative(phi)?,
            ("cumulative_phi", None) => {
                return Err(Error::InvalidParameter(
                    "cumulative_phi requires phi".into(),
                ))
            }
            (other, _) => {
                return Err(Error::InvalidParameter(format!(
                    "unknown pvf kind {other:?}"
                )))
            }
        };
        match raw.c {
            Some(c) => spec.with_growth_constant(c),
            None => Ok(spec),
        }
    }
}

impl From<PvfSpec> for RawPvfSpec {
    fn from(spec: PvfSpec) -> Self {
        match spec.kind {
            PvfKind::BarycenterSplit => RawPvfSpec {
                kind: "barycenter_split".into(),
                phi: None,
                c: Some(spec.support_growth_constant),
            },
            PvfKind::CumulativePhi(phi) => RawPvfSpec {
                kind: "cumulative_phi".into(),
                phi: Some(phi),
                c: Some(spec.support_growth_constant),
            },
        }
    }
}
