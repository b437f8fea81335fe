//! Uniform one-dimensional grids.

use crate::error::{Error, Result};

/// Smallest grid the crate accepts.
pub const MIN_POINTS: usize = 64;

/// A uniform grid `lower + i * step`, `i = 0..points`.
///
/// `points` is always a power of two so that zero-padded radix-2 FFTs line up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    lower: f64,
    upper: f64,
    points: usize,
    step: f64,
}

impl GridSpec {
    pub fn new(lower: f64, upper: f64, points: usize) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite()) || upper <= lower {
            return Err(Error::InvalidGrid(format!(
                "need finite lower < upper, got [{lower}, {upper}]"
            )));
        }
        if points < MIN_POINTS || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points must be a power of two >= {MIN_POINTS}, got {points}"
            )));
        }
        let step = (upper - lower) / (points - 1) as f64;
        Ok(Self {
            lower,
            upper,
            points,
            step,
        })
    }

    /// Grid starting at `lower` with an explicit step.
    pub fn with_step(lower: f64, step: f64, points: usize) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidGrid(format!("step must be positive, got {step}")));
        }
        let mut g = Self::new(lower, lower + step * (points - 1) as f64, points)?;
        g.step = step;
        Ok(g)
    }

    /// Grid whose nodes are integer multiples of `step` and which covers `[lo, hi]`.
    ///
    /// Sums of variables living on such lattices stay on the lattice, which is
    /// what lets convolution results drop onto a shared grid without interpolation.
    pub fn lattice_covering(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(hi > lo) || !(step > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "bad lattice request [{lo}, {hi}] step {step}"
            )));
        }
        let first = (lo / step).floor() as i64;
        let last = (hi / step).ceil() as i64;
        let needed = (last - first + 1).max(MIN_POINTS as i64) as usize;
        let points = needed.next_power_of_two();
        // centre the slack so both tails get headroom
        let slack = (points - (last - first + 1).max(0) as usize) as i64;
        let first = first - slack / 2;
        Self::with_step(first as f64 * step, step, points)
    }

    /// Lattice grid with exactly `points` nodes spanning at least `[lo, hi]`.
    pub fn lattice_with_points(lo: f64, hi: f64, points: usize) -> Result<Self> {
        if points < MIN_POINTS || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points must be a power of two >= {MIN_POINTS}, got {points}"
            )));
        }
        // two spare nodes absorb the rounding of the endpoints onto the lattice
        let step = (hi - lo) / (points - 3) as f64;
        let first = (lo / step).floor();
        Self::with_step(first * step, step, points)
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.lower + i as f64 * self.step
    }

    pub fn abscissae(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.x(i)).collect()
    }

    /// Trapezoid quadrature weight of node `i`.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.points {
            0.5 * self.step
        } else {
            self.step
        }
    }

    pub fn trapezoid(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.points);
        values.iter().enumerate().map(|(i, v)| self.weight(i) * v).sum()
    }

    /// `lower / step` when it is an integer, i.e. the lattice index of node 0.
    pub fn lattice_origin(&self) -> Option<i64> {
        let r = self.lower / self.step;
        let k = r.round();
        ((r - k).abs() < 1e-6).then_some(k as i64)
    }

    /// Integer offset `k` such that node `i` of `self` is node `i + k` of `other`.
    pub fn offset_in(&self, other: &GridSpec) -> Option<i64> {
        if !same_step(self.step, other.step) {
            return None;
        }
        let r = (self.lower - other.lower) / other.step;
        let k = r.round();
        ((r - k).abs() < 1e-6).then_some(k as i64)
    }

    /// The same nodes seen through `x -> alpha * x`.
    pub fn scaled(&self, alpha: f64) -> GridSpec {
        GridSpec {
            lower: self.lower * alpha,
            upper: self.upper * alpha,
            points: self.points,
            step: self.step * alpha,
        }
    }

    /// The same nodes seen through `x -> x + shift`.
    pub fn shifted(&self, shift: f64) -> GridSpec {
        GridSpec {
            lower: self.lower + shift,
            upper: self.upper + shift,
            ..*self
        }
    }
}

pub(crate) fn same_step(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(1.0, 0.0, 64).is_err());
        assert!(GridSpec::new(0.0, 1.0, 32).is_err());
        assert!(GridSpec::new(0.0, 1.0, 100).is_err());
        let g = GridSpec::new(-10.0, 10.0, 1024).unwrap();
        assert!((g.step() - 20.0 / 1023.0).abs() < 1e-15);
        assert_eq!(g.x(1023), g.lower() + 1023.0 * g.step());
    }

    #[test]
    fn lattice_grids_are_aligned() {
        let g = GridSpec::lattice_covering(-3.3, 7.1, 0.01).unwrap();
        assert!(g.lower() <= -3.3 && g.upper() >= 7.1);
        assert!(g.lattice_origin().is_some());
        let h = GridSpec::lattice_with_points(-12.0, 12.0, 1024).unwrap();
        assert!(h.lower() <= -12.0 && h.upper() >= 12.0);
        assert!(h.lattice_origin().is_some());
        let o = GridSpec::with_step(h.lower() - 5.0 * h.step(), h.step(), 2048).unwrap();
        assert_eq!(h.offset_in(&o), Some(5));
    }

    #[test]
    fn trapezoid_of_linear_is_exact() {
        let g = GridSpec::new(0.0, 2.0, 64).unwrap();
        let v: Vec<f64> = g.abscissae();
        assert!((g.trapezoid(&v) - 2.0).abs() < 1e-13);
    }
}
