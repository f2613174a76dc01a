//! Finite atomic measures on the real line.
//!
//! A [`DiscreteMeasure`] is kept in normal form: atoms sorted by strictly
//! increasing position, masses strictly positive. Every constructor
//! normalizes, so two measures with the same atoms compare equal.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub position: f64,
    pub mass: f64,
}

impl Atom {
    pub fn new(position: f64, mass: f64) -> Self {
        Self { position, mass }
    }
}

/// Closed interval `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower <= upper) {
            return Err(Error::InvalidParameter(format!(
                "interval [{lower}, {upper}] is empty"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    /// Largest absolute value in the interval.
    pub fn radius(&self) -> f64 {
        self.lower.abs().max(self.upper.abs())
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<Atom>,
}

impl DiscreteMeasure {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn dirac(position: f64, mass: f64) -> Result<Self> {
        Self::from_atoms([(position, mass)])
    }

    /// Builds a measure from `(position, mass)` pairs, merging repeated
    /// positions and dropping zero masses.
    pub fn from_atoms<I>(atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let atoms = atoms
            .into_iter()
            .map(|(position, mass)| {
                if !position.is_finite() || !mass.is_finite() || mass < 0.0 {
                    Err(Error::InvalidAtom { position, mass })
                } else {
                    Ok(Atom { position, mass })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::normalized(atoms))
    }

    /// Normal form for atoms already known to be finite and nonnegative.
    pub(crate) fn normalized(mut atoms: Vec<Atom>) -> Self {
        atoms.retain(|a| a.mass > 0.0);
        atoms.sort_by(|a, b| a.position.total_cmp(&b.position));
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for atom in atoms {
            match merged.last_mut() {
                Some(last) if last.position == atom.position => last.mass += atom.mass,
                _ => merged.push(atom),
            }
        }
        Self { atoms: merged }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|a| a.position)
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    /// `[min position, max position]` of the atoms.
    pub fn support_bounds(&self) -> Result<Interval> {
        match (self.atoms.first(), self.atoms.last()) {
            (Some(first), Some(last)) => Ok(Interval {
                lower: first.position,
                upper: last.position,
            }),
            _ => Err(Error::EmptyMeasure),
        }
    }

    /// Largest `|x|` over the support, 0 for the empty measure.
    pub fn support_radius(&self) -> f64 {
        self.support_bounds().map(|i| i.radius()).unwrap_or(0.0)
    }

    /// `μ(]-∞, x])`.
    pub fn cdf(&self, x: f64) -> f64 {
        let end = self.atoms.partition_point(|a| a.position <= x);
        self.atoms[..end].iter().map(|a| a.mass).sum()
    }

    /// `μ(]-∞, x[)`, the left limit of [`cdf`](Self::cdf).
    pub fn cdf_left(&self, x: f64) -> f64 {
        let end = self.atoms.partition_point(|a| a.position < x);
        self.atoms[..end].iter().map(|a| a.mass).sum()
    }

    pub fn normalized_cdf(&self, x: f64) -> Result<f64> {
        let total = self.positive_total()?;
        Ok((self.cdf(x) / total).min(1.0))
    }

    pub fn normalized_cdf_left(&self, x: f64) -> Result<f64> {
        let total = self.positive_total()?;
        Ok((self.cdf_left(x) / total).min(1.0))
    }

    pub(crate) fn positive_total(&self) -> Result<f64> {
        let total = self.total_mass();
        if total > 0.0 {
            Ok(total)
        } else {
            Err(Error::ZeroMass)
        }
    }

    /// Image measure under `map`; coinciding images are merged.
    pub fn push_forward<F>(&self, map: F) -> Result<Self>
    where
        F: Fn(f64) -> f64,
    {
        Self::from_atoms(self.atoms.iter().map(|a| (map(a.position), a.mass)))
    }

    /// Multiplies every mass by `factor` (which must be finite and >= 0).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::from_atoms(self.atoms.iter().map(|a| (a.position, a.mass * factor)))
    }

    /// Mirror image under `x ↦ -x`.
    pub fn reflect(&self) -> Self {
        let atoms = self
            .atoms
            .iter()
            .rev()
            .map(|a| Atom::new(-a.position, a.mass))
            .collect();
        Self::normalized(atoms)
    }

    /// Total-variation norm `|μ - ν|` of the signed difference.
    pub fn tv_distance(&self, other: &Self) -> f64 {
        let (a, b) = (&self.atoms, &other.atoms);
        let (mut i, mut j) = (0, 0);
        let mut total = 0.0;
        while i < a.len() || j < b.len() {
            let take_a = j >= b.len() || (i < a.len() && a[i].position < b[j].position);
            let take_b = i >= a.len() || (j < b.len() && b[j].position < a[i].position);
            if take_a {
                total += a[i].mass;
                i += 1;
            } else if take_b {
                total += b[j].mass;
                j += 1;
            } else {
                total += (a[i].mass - b[j].mass).abs();
                i += 1;
                j += 1;
            }
        }
        total
    }
}
