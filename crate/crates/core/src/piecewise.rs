use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A tabulated function, linear between breakpoints and constant beyond the
/// first and last breakpoint.
///
/// Serialized as a JSON array of `[input, output]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct PiecewiseLinearFn {
    points: Vec<(f64, f64)>,
}

/// One linear piece `[u0, u1] -> [v0, v1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub u0: f64,
    pub u1: f64,
    pub v0: f64,
    pub v1: f64,
}

impl Segment {
    pub fn slope(&self) -> f64 {
        (self.v1 - self.v0) / (self.u1 - self.u0)
    }

    /// Input at which the segment takes value `v`; `v` must lie in the
    /// segment's range and the segment must not be flat.
    pub fn preimage(&self, v: f64) -> f64 {
        let u = self.u0 + (v - self.v0) / (self.v1 - self.v0) * (self.u1 - self.u0);
        u.clamp(self.u0, self.u1)
    }
}

impl PiecewiseLinearFn {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidTable("table has no breakpoints".into()));
        }
        if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::InvalidTable("breakpoints must be finite".into()));
        }
        if points.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(Error::InvalidTable(
                "breakpoint inputs must be strictly increasing".into(),
            ));
        }
        Ok(Self { points })
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(vec![(0.0, value)])
    }

    /// The affine map `u ↦ slope·u + intercept` tabulated on `[0, 1]`.
    pub fn affine_on_unit(slope: f64, intercept: f64) -> Result<Self> {
        Self::new(vec![(0.0, intercept), (1.0, slope + intercept)])
    }

    /// Samples `f` at `count + 1` evenly spaced points of `[lo, hi]`.
    pub fn tabulate(lo: f64, hi: f64, count: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if !(lo < hi) || count == 0 {
            return Err(Error::InvalidTable(format!(
                "cannot tabulate on [{lo}, {hi}] with {count} pieces"
            )));
        }
        let h = (hi - lo) / count as f64;
        let points = (0..=count)
            .map(|k| {
                let x = if k == count { hi } else { lo + k as f64 * h };
                (x, f(x))
            })
            .collect();
        Self::new(points)
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn eval(&self, x: f64) -> f64 {
        let pts = &self.points;
        let first = pts[0];
        let last = pts[pts.len() - 1];
        if x <= first.0 {
            return first.1;
        }
        if x >= last.0 {
            return last.1;
        }
        let k = pts.partition_point(|p| p.0 <= x);
        let (x0, y0) = pts[k - 1];
        let (x1, y1) = pts[k];
        y0 + (x - x0) / (x1 - x0) * (y1 - y0)
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[0].1 <= w[1].1)
    }

    pub fn min_value(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.1)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.1)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest `|f|` anywhere.
    pub fn sup_abs(&self) -> f64 {
        self.points.iter().map(|p| p.1.abs()).fold(0.0, f64::max)
    }

    /// Linear pieces covering `[a, b]` in order, including the constant
    /// extensions outside the table. A degenerate interval yields one
    /// zero-width segment.
    pub fn segments_within(&self, a: f64, b: f64) -> Vec<Segment> {
        let mut cuts = vec![a];
        cuts.extend(self.points.iter().map(|p| p.0).filter(|&x| a < x && x < b));
        cuts.push(b);
        cuts.windows(2)
            .map(|w| Segment {
                u0: w[0],
                u1: w[1],
                v0: self.eval(w[0]),
                v1: self.eval(w[1]),
            })
            .collect()
    }
}

impl TryFrom<Vec<[f64; 2]>> for PiecewiseLinearFn {
    type Error = Error;

    fn try_from(table: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(table.into_iter().map(|[x, y]| (x, y)).collect())
    }
}

impl From<PiecewiseLinearFn> for Vec<[f64; 2]> {
    fn from(f: PiecewiseLinearFn) -> Self {
        f.points.into_iter().map(|(x, y)| [x, y]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_and_extends_constantly() {
        let f = PiecewiseLinearFn::new(vec![(0.0, 1.0), (1.0, 3.0), (3.0, 2.0)]).unwrap();
        assert_eq!(f.eval(-5.0), 1.0);
        assert_eq!(f.eval(0.5), 2.0);
        assert_eq!(f.eval(1.0), 3.0);
        assert_eq!(f.eval(2.0), 2.5);
        assert_eq!(f.eval(10.0), 2.0);
        assert!(!f.is_nondecreasing());
    }

    #[test]
    fn rejects_unsorted_or_empty() {
        assert!(PiecewiseLinearFn::new(vec![]).is_err());
        assert!(PiecewiseLinearFn::new(vec![(1.0, 0.0), (1.0, 1.0)]).is_err());
        assert!(PiecewiseLinearFn::new(vec![(0.0, f64::NAN)]).is_err());
    }

    #[test]
    fn segments_cover_the_interval() {
        let f = PiecewiseLinearFn::new(vec![(0.0, 0.0), (0.5, 1.0), (1.0, 1.5)]).unwrap();
        let segs = f.segments_within(0.25, 2.0);
        assert_eq!(segs.len(), 3);
        assert_eq!(segs[0].u0, 0.25);
        assert_eq!(segs[0].v0, 0.5);
        assert_eq!(segs[1].u1, 1.0);
        assert_eq!(segs[2].v0, segs[2].v1);
        assert_eq!(segs[0].preimage(0.75), 0.375);
    }

    #[test]
    fn json_table_round_trip() {
        let f: PiecewiseLinearFn = serde_json::from_str("[[0,-0.5],[1,0.5]]").unwrap();
        assert_eq!(f.eval(0.25), -0.25);
        assert_eq!(serde_json::to_string(&f).unwrap(), "[[0.0,-0.5],[1.0,0.5]]");
        assert!(serde_json::from_str::<PiecewiseLinearFn>("[[1,0],[0,1]]").is_err());
    }
}
