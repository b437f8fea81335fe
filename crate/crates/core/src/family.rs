//! Densities of the partial sums `S_k = X_1 + ... + X_k` on one shared grid.

use crate::density::{
    convolve, covering_extension, grid_moments, make_density_with_tol, make_evolved_density, ou_coefficients,
    rescale, transfer, GridDensity, Regularity, DEFAULT_TAIL_EPS,
};
use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// How the common grid of a family is laid out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPolicy {
    /// Nodes across the nominal window `mean +- k_spread * sd * sqrt(n_max)`.
    pub points: usize,
    pub k_spread: f64,
    /// Flow time used to mollify rough bases; 0 leaves them rough.
    pub t_smooth: f64,
    pub tail_eps: f64,
}

impl Default for GridPolicy {
    fn default() -> Self {
        Self {
            points: 2048,
            k_spread: 12.0,
            t_smooth: 0.01,
            tail_eps: DEFAULT_TAIL_EPS,
        }
    }
}

impl GridPolicy {
    pub fn with_points(mut self, points: usize) -> Self {
        self.points = points;
        self
    }

    pub fn with_t_smooth(mut self, t: f64) -> Self {
        self.t_smooth = t;
        self
    }
}

/// A base law and the densities of its partial sums, all on one grid.
#[derive(Debug, Clone)]
pub struct IidSumFamily {
    base: GridDensity,
    n_max: usize,
    sums: Vec<GridDensity>,
}

impl IidSumFamily {
    /// Build `S_1..S_{n_max}` from `spec`.
    ///
    /// Rough bases are replaced by their Ornstein-Uhlenbeck evolute at
    /// `policy.t_smooth` (a no-op on variance for standardized inputs).
    pub fn build(spec: &DistributionSpec, n_max: usize, policy: &GridPolicy) -> Result<Self> {
        let base = base_density(spec, n_max, policy)?;
        Self::from_base_in(base, n_max, policy.k_spread, policy.points, policy.tail_eps)
    }

    /// Family generated by an already gridded base density.
    ///
    /// The common grid keeps the base step and is widened beyond the nominal
    /// window when a skewed sum needs it.
    pub fn from_base(base: &GridDensity, n_max: usize, policy: &GridPolicy) -> Result<Self> {
        Self::from_base_in(
            base.clone(),
            n_max,
            policy.k_spread,
            policy.points,
            policy.tail_eps,
        )
    }

    fn from_base_in(
        base: GridDensity,
        n_max: usize,
        k_spread: f64,
        points: usize,
        tail_eps: f64,
    ) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::IndexOutOfRange { m: 0, n: 0, n_max: 0 });
        }
        if base.grid().lattice_origin().is_none() {
            return Err(Error::InvalidGrid("base grid is not lattice aligned".into()));
        }
        let (_, mean, var) = grid_moments(base.grid(), base.values());
        let sd = var.sqrt();
        let step = base.grid().step();

        // full, untruncated sums; each convolution stays exact on the base lattice
        let mut full = vec![base.clone()];
        for k in 1..n_max {
            let next = convolve(&full[k - 1], &base)?;
            full.push(trim(&next, tail_eps / (4.0 * n_max as f64))?);
        }

        let (lo, hi) = nominal_window(mean, sd, n_max, k_spread);
        let first = (lo / step).floor();
        let nominal = GridSpec::with_step(
            first * step,
            step,
            points.max(((hi - lo) / step) as usize + 3).next_power_of_two(),
        )?;
        let mut grid = nominal;
        for s in &full {
            let (a, b) = s
                .effective_range(tail_eps / (4.0 * n_max as f64))
                .ok_or(Error::ZeroMass)?;
            grid = covering_extension(&grid, s.grid().x(a), s.grid().x(b))?;
        }
        let sums = full
            .iter()
            .map(|s| transfer(s, &grid, tail_eps))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            base: sums[0].clone(),
            n_max,
            sums,
        })
    }

    pub fn base(&self) -> &GridDensity {
        &self.base
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn grid(&self) -> &GridSpec {
        self.base.grid()
    }

    pub fn is_smooth(&self) -> bool {
        self.base.regularity() == Regularity::Smooth
    }

    /// Density of `S_k`, `1 <= k <= n_max`.
    pub fn sum(&self, k: usize) -> Result<&GridDensity> {
        if k == 0 || k > self.n_max {
            return Err(Error::IndexOutOfRange {
                m: k,
                n: k,
                n_max: self.n_max,
            });
        }
        Ok(&self.sums[k - 1])
    }

    pub fn sums(&self) -> &[GridDensity] {
        &self.sums
    }

    /// Density of `U_k = S_k / sqrt(k)`.
    pub fn standardized(&self, k: usize) -> Result<GridDensity> {
        rescale(self.sum(k)?, 1.0 / (k as f64).sqrt())
    }
}

/// The gridded base of the family [`IidSumFamily::build`] would produce.
///
/// Its step puts `policy.points` nodes across the nominal window of `S_{n_max}`.
pub fn base_density(spec: &DistributionSpec, n_max: usize, policy: &GridPolicy) -> Result<GridDensity> {
    if n_max == 0 {
        return Err(Error::IndexOutOfRange { m: 0, n: 0, n_max: 0 });
    }
    let analytic = spec.resolve()?;
    let (mean, var) = analytic.moments();
    let smooth_rough = !analytic.is_smooth() && policy.t_smooth > 0.0;
    let (mean, sd) = if smooth_rough {
        let a = (-policy.t_smooth).exp();
        (a * mean, (a * a * var + 1.0 - a * a).sqrt())
    } else {
        (mean, var.sqrt())
    };

    let (lo, hi) = nominal_window(mean, sd, n_max, policy.k_spread);
    let step = GridSpec::lattice_with_points(lo, hi, policy.points)?.step();
    // each summand may lose at most this much, so S_n loses at most half the budget
    let per_summand = policy.tail_eps / (4.0 * n_max as f64);
    if smooth_rough {
        let (a, s) = ou_coefficients(policy.t_smooth);
        let (slo, shi) = analytic.effective_support(0.5 * per_summand);
        let base_grid = GridSpec::lattice_covering(
            (a * slo - 8.0 * s).min(mean - 6.0 * sd),
            (a * shi + 8.0 * s).max(mean + 6.0 * sd),
            step,
        )?;
        make_evolved_density(spec, &base_grid, policy.t_smooth, per_summand)
    } else {
        let (slo, shi) = analytic.effective_support(per_summand);
        let base_grid = GridSpec::lattice_covering(slo.min(mean - 6.0 * sd), shi.max(mean + 6.0 * sd), step)?;
        make_density_with_tol(spec, &base_grid, per_summand)
    }
}

fn nominal_window(mean: f64, sd: f64, n_max: usize, k_spread: f64) -> (f64, f64) {
    let n = n_max as f64;
    let spread = k_spread * sd * n.sqrt();
    (mean.min(n * mean) - spread, mean.max(n * mean) + spread)
}

/// Drop negligible tails so repeated convolutions do not keep doubling the grid.
fn trim(d: &GridDensity, eps: f64) -> Result<GridDensity> {
    let (a, b) = d.effective_range(eps).ok_or(Error::ZeroMass)?;
    let g = d.grid();
    let len = (b - a + 1).max(crate::grid::MIN_POINTS).next_power_of_two();
    let pad = (len - (b - a + 1)) / 2;
    let start = a as i64 - pad as i64;
    let target = GridSpec::with_step(g.lower() + start as f64 * g.step(), g.step(), len)?;
    transfer(d, &target, f64::INFINITY)
}
