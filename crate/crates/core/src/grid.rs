//! The space/velocity lattice and the spatial discretization operator.
//!
//! For a grid of size `N` the time step and velocity step are both `1/N` and
//! the space step is their product `1/N²`. Nodes are addressed by integer
//! index so that moving a node by one time step at a lattice velocity is
//! plain integer addition: `i/N² + (1/N)(j/N) = (i + j)/N²`.

use crate::error::{Error, Result};
use crate::measure::{Atom, DiscreteMeasure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridSpec {
    n: u32,
}

impl GridSpec {
    /// Largest supported N; keeps `N³` comfortably inside `i64` and the
    /// node positions exactly representable.
    pub const MAX_N: u32 = 100_000;

    pub fn new(n: u32) -> Result<Self> {
        if n == 0 || n > Self::MAX_N {
            return Err(Error::InvalidGrid(n));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Time step `Δ_N = 1/N`.
    pub fn dt(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Velocity step `1/N`.
    pub fn dv(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Space step `1/N²`.
    pub fn dx(&self) -> f64 {
        1.0 / self.space_cells_per_unit()
    }

    /// Half-width of the truncation box `[-N, N]`.
    pub fn box_radius(&self) -> f64 {
        self.n as f64
    }

    fn space_cells_per_unit(&self) -> f64 {
        let n = self.n as f64;
        n * n
    }

    /// Largest admissible `|i|` for a space node `i/N²`.
    pub fn max_space_index(&self) -> i64 {
        let n = self.n as i64;
        n * n * n
    }

    /// Largest admissible `|j|` for a velocity node `j/N`.
    pub fn max_velocity_index(&self) -> i64 {
        let n = self.n as i64;
        n * n
    }

    pub fn space_node(&self, index: i64) -> f64 {
        index as f64 / self.space_cells_per_unit()
    }

    pub fn velocity_node(&self, index: i64) -> f64 {
        index as f64 / self.n as f64
    }

    /// Index of the left-closed right-open space cell holding `x`.
    ///
    /// Consistent with [`space_node`](Self::space_node): a position produced
    /// by `space_node(i)` maps back to exactly `i`.
    pub fn space_cell(&self, x: f64) -> Result<i64> {
        let bound = self.box_radius();
        if !(x >= -bound && x <= bound) {
            return Err(self.overflow(x));
        }
        Ok(floor_index(x, self.space_cells_per_unit(), |i| {
            self.space_node(i)
        }))
    }

    /// Index of the velocity cell `[j/N, (j+1)/N)` holding `v`.
    pub fn velocity_cell(&self, v: f64) -> Result<i64> {
        let bound = self.box_radius();
        if !(v >= -bound && v <= bound) {
            return Err(self.overflow(v));
        }
        Ok(floor_index(v, self.n as f64, |j| self.velocity_node(j)))
    }

    /// Checks a space index against the truncation box.
    pub fn checked_space_index(&self, index: i64) -> Result<i64> {
        if index.abs() > self.max_space_index() {
            Err(self.overflow(self.space_node(index)))
        } else {
            Ok(index)
        }
    }

    pub fn is_space_node(&self, x: f64) -> bool {
        self.space_cell(x)
            .map(|i| self.space_node(i) == x)
            .unwrap_or(false)
    }

    fn overflow(&self, value: f64) -> Error {
        Error::GridOverflow {
            value,
            bound: self.box_radius(),
            n: self.n,
        }
    }
}

/// Largest `k` with `node(k) <= x`, where `node(k) ≈ k / scale` is monotone.
fn floor_index(x: f64, scale: f64, node: impl Fn(i64) -> f64) -> i64 {
    let mut k = (x * scale).floor() as i64;
    while node(k + 1) <= x {
        k += 1;
    }
    while node(k) > x {
        k -= 1;
    }
    k
}

/// The operator `A^x_N`: every atom is moved to the left end of its space
/// cell. Total mass is preserved.
pub fn discretize_space(mu: &DiscreteMeasure, grid: &GridSpec) -> Result<DiscreteMeasure> {
    let atoms = mu
        .atoms()
        .iter()
        .map(|a| {
            let index = grid.space_cell(a.position)?;
            Ok(Atom::new(grid.space_node(index), a.mass))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DiscreteMeasure::normalized(atoms))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steps_are_consistent() {
        for n in [1, 2, 3, 7, 10, 64, 100, 333] {
            let g = GridSpec::new(n).unwrap();
            assert_eq!(g.dx(), 1.0 / (n as f64 * n as f64));
            assert!((g.dt() * g.dv() - g.dx()).abs() <= f64::EPSILON * g.dx());
        }
    }

    #[test]
    fn node_indices_round_trip() {
        let g = GridSpec::new(30).unwrap();
        for i in -27_000..=27_000 {
            assert_eq!(g.space_cell(g.space_node(i)).unwrap(), i);
        }
        for j in -900..=900 {
            assert_eq!(g.velocity_cell(g.velocity_node(j)).unwrap(), j);
        }
    }

    #[test]
    fn rejects_zero_grid() {
        assert_eq!(GridSpec::new(0), Err(Error::InvalidGrid(0)));
    }

    #[test]
    fn atom_on_node_is_unchanged() {
        let g = GridSpec::new(10).unwrap();
        let mu = DiscreteMeasure::dirac(0.0, 1.0).unwrap();
        assert_eq!(discretize_space(&mu, &g).unwrap(), mu);
    }

    #[test]
    fn atom_snaps_to_left_cell_edge() {
        // 0.015 lies in [0.01, 0.02)
        let g = GridSpec::new(10).unwrap();
        let mu = DiscreteMeasure::dirac(0.015, 1.0).unwrap();
        let snapped = discretize_space(&mu, &g).unwrap();
        assert_eq!(snapped.atoms(), &[Atom::new(0.01, 1.0)]);
    }

    #[test]
    fn negative_positions_floor_towards_minus_infinity() {
        let g = GridSpec::new(10).unwrap();
        let mu = DiscreteMeasure::dirac(-0.015, 1.0).unwrap();
        let snapped = discretize_space(&mu, &g).unwrap();
        assert_eq!(snapped.atoms()[0].position, -0.02);
    }

    #[test]
    fn cell_neighbours_merge() {
        let g = GridSpec::new(10).unwrap();
        let mu = DiscreteMeasure::from_atoms([(0.011, 0.25), (0.019, 0.75)]).unwrap();
        let snapped = discretize_space(&mu, &g).unwrap();
        assert_eq!(snapped.atoms(), &[Atom::new(0.01, 1.0)]);
    }

    #[test]
    fn outside_box_overflows() {
        let g = GridSpec::new(5).unwrap();
        let mu = DiscreteMeasure::dirac(5.5, 1.0).unwrap();
        assert!(matches!(
            discretize_space(&mu, &g),
            Err(Error::GridOverflow { .. })
        ));
        assert!(g.velocity_cell(-5.01).is_err());
    }
}
