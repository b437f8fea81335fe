//! Probability densities sampled on uniform grids.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::dist::{Analytic, DistributionSpec};
use crate::error::{Error, Result};
use crate::grid::{same_step, GridSpec};

/// Default bound on probability mass allowed to fall outside a grid.
pub const DEFAULT_TAIL_EPS: f64 = 1e-10;

/// Clamped FFT round-off mass above this is treated as a numerical failure.
const CLAMP_LIMIT: f64 = 1e-12;

/// Gaussian kernels are truncated this many standard deviations out.
const KERNEL_RADIUS: f64 = 13.0;

/// Whether finite differences of the density are meaningful.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regularity {
    Smooth,
    /// Has jumps or kinks; must be mollified before taking derivatives.
    Rough,
}

impl Regularity {
    fn join(self, other: Regularity) -> Regularity {
        if self == Regularity::Smooth || other == Regularity::Smooth {
            Regularity::Smooth
        } else {
            Regularity::Rough
        }
    }
}

/// A density sampled at the nodes of a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    grid: GridSpec,
    values: Vec<f64>,
    tail_mass_bound: f64,
    regularity: Regularity,
}

impl GridDensity {
    /// Wrap raw samples. Values must be finite and nonnegative; they are not normalized.
    pub fn from_values(
        grid: GridSpec,
        values: Vec<f64>,
        tail_mass_bound: f64,
        regularity: Regularity,
    ) -> Result<Self> {
        if values.len() != grid.points() {
            return Err(Error::InvalidGrid(format!(
                "{} values for a {}-point grid",
                values.len(),
                grid.points()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidGrid(format!(
                "density value {v} is not finite and >= 0"
            )));
        }
        Ok(Self {
            grid,
            values,
            tail_mass_bound,
            regularity,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail_mass_bound(&self) -> f64 {
        self.tail_mass_bound
    }

    pub fn regularity(&self) -> Regularity {
        self.regularity
    }

    pub fn is_smooth(&self) -> bool {
        self.regularity == Regularity::Smooth
    }

    /// Mark the density smooth or rough regardless of how it was built.
    pub fn with_regularity(mut self, regularity: Regularity) -> Self {
        self.regularity = regularity;
        self
    }

    pub fn mass(&self) -> f64 {
        self.grid.trapezoid(&self.values)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Linear interpolation between nodes; zero off the grid.
    pub fn value_at(&self, x: f64) -> f64 {
        let r = (x - self.grid.lower()) / self.grid.step();
        if r < 0.0 || r > (self.grid.points() - 1) as f64 {
            return 0.0;
        }
        let i = (r.floor() as usize).min(self.grid.points() - 2);
        let frac = r - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    /// Indices of the first and last strictly positive values.
    pub(crate) fn nonzero_range(&self) -> Option<(usize, usize)> {
        let first = self.values.iter().position(|&v| v > 0.0)?;
        let last = self.values.iter().rposition(|&v| v > 0.0)?;
        Some((first, last))
    }

    /// Index range left after trimming at most `eps / 2` of mass from each tail.
    pub(crate) fn effective_range(&self, eps: f64) -> Option<(usize, usize)> {
        let (first, last) = self.nonzero_range()?;
        let budget = 0.5 * eps;
        let mut lo = first;
        let mut acc = 0.0;
        while lo < last {
            acc += self.grid.weight(lo) * self.values[lo];
            if acc > budget {
                break;
            }
            lo += 1;
        }
        let mut hi = last;
        acc = 0.0;
        while hi > lo {
            acc += self.grid.weight(hi) * self.values[hi];
            if acc > budget {
                break;
            }
            hi -= 1;
        }
        Some((lo, hi))
    }

    /// Translate by an integer number of grid steps (values are untouched).
    pub fn shifted_by_steps(&self, k: i64) -> GridDensity {
        GridDensity {
            grid: self.grid.shifted(k as f64 * self.grid.step()),
            ..self.clone()
        }
    }
}

/// Trapezoid mass, mean and central variance of grid values.
pub(crate) fn grid_moments(grid: &GridSpec, values: &[f64]) -> (f64, f64, f64) {
    let (mut m0, mut m1) = (0.0, 0.0);
    for (i, v) in values.iter().enumerate() {
        let w = grid.weight(i) * v;
        m0 += w;
        m1 += w * grid.x(i);
    }
    let mean = m1 / m0;
    let mut m2 = 0.0;
    for (i, v) in values.iter().enumerate() {
        let d = grid.x(i) - mean;
        m2 += grid.weight(i) * v * d * d;
    }
    (m0, mean, m2 / m0)
}

fn sample_analytic(a: &Analytic, grid: &GridSpec) -> Vec<f64> {
    let jumps = a.jumps();
    let h = grid.step();
    (0..grid.points())
        .map(|i| a.cell_value(grid.x(i), h, &jumps))
        .collect()
}

/// Sample `spec` on `grid` and normalize.
///
/// Continuous stretches are point-sampled; a cell that straddles a jump gets
/// the cell average. With `standardize` set the shift and scale are refined
/// until the grid moments themselves are 0 and 1.
pub fn make_density(spec: &DistributionSpec, grid: &GridSpec) -> Result<GridDensity> {
    make_density_with_tol(spec, grid, DEFAULT_TAIL_EPS)
}

pub fn make_density_with_tol(spec: &DistributionSpec, grid: &GridSpec, tail_eps: f64) -> Result<GridDensity> {
    let mut analytic = spec.resolve()?;
    let regularity = if analytic.is_smooth() {
        Regularity::Smooth
    } else {
        Regularity::Rough
    };
    let mut values;
    let mut refinements = 0;
    loop {
        let tail = analytic.tail_mass(grid.lower(), grid.upper());
        if tail > tail_eps {
            return Err(Error::GridTooNarrow {
                lower: grid.lower(),
                upper: grid.upper(),
                tail_mass: tail,
                limit: tail_eps,
            });
        }
        values = sample_analytic(&analytic, grid);
        if !spec.standardize || refinements == 4 {
            let d = GridDensity::from_values(*grid, values, tail, regularity)?;
            return normalize(&d);
        }
        let (mass, mean, var) = grid_moments(grid, &values);
        if !(mass > 0.0) {
            return Err(Error::ZeroMass);
        }
        if mean.abs() < 1e-14 && (var - 1.0).abs() < 1e-14 {
            refinements = 4;
            continue;
        }
        analytic = analytic.affine(mean, var.sqrt());
        refinements += 1;
    }
}

/// Sample the Ornstein-Uhlenbeck evolute at time `t > 0` of the law in
/// `spec` pointwise on `grid`, then normalize.
///
/// The evolute is smooth even when `spec` is not, so no cell averaging is
/// needed and the result is marked smooth.
pub fn make_evolved_density(
    spec: &DistributionSpec,
    grid: &GridSpec,
    t: f64,
    tail_eps: f64,
) -> Result<GridDensity> {
    if !(t > 0.0) {
        return Err(Error::NegativeTime(t));
    }
    let analytic = spec.resolve()?;
    let (alpha, sigma) = ou_coefficients(t);
    if sigma < grid.step() {
        return Err(Error::UnderResolved {
            sigma,
            step: grid.step(),
        });
    }
    // mass outside: the source beyond the grid pulled in by 8 kernel widths, plus the kernel tails
    let reach = 8.0 * sigma;
    let tail = analytic.tail_mass((grid.lower() + reach) / alpha, (grid.upper() - reach) / alpha)
        + 2.0 * crate::dist::normal_cdf(-8.0);
    if tail > tail_eps {
        return Err(Error::GridTooNarrow {
            lower: grid.lower(),
            upper: grid.upper(),
            tail_mass: tail,
            limit: tail_eps,
        });
    }
    let values = (0..grid.points())
        .map(|i| analytic.ou_pdf(grid.x(i), t))
        .collect();
    normalize(&GridDensity::from_values(
        *grid,
        values,
        tail,
        Regularity::Smooth,
    )?)
}

/// Rescale to unit trapezoid mass.
pub fn normalize(d: &GridDensity) -> Result<GridDensity> {
    let mass = d.mass();
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::ZeroMass);
    }
    let values = d.values.iter().map(|v| v / mass).collect();
    Ok(GridDensity { values, ..d.clone() })
}

/// Zero-padded linear convolution of two sequences via one complex FFT pair.
pub(crate) fn linear_convolution(a: &[f64], b: &[f64]) -> Vec<f64> {
    let len = a.len() + b.len() - 1;
    let n = len.next_power_of_two();
    // pack a into the real part and b into the imaginary part
    let mut buf: Vec<Complex<f64>> = (0..n)
        .map(|i| Complex::new(a.get(i).copied().unwrap_or(0.0), b.get(i).copied().unwrap_or(0.0)))
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let spectrum: Vec<Complex<f64>> = (0..n)
        .map(|k| {
            let x = buf[k];
            let y = buf[(n - k) % n].conj();
            let fa = (x + y) * 0.5;
            let fb = (x - y) * Complex::new(0.0, -0.5);
            fa * fb
        })
        .collect();
    buf.copy_from_slice(&spectrum);
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf[..len].iter().map(|c| c.re * scale).collect()
}

/// Clamp round-off negatives, failing if they carry real mass.
fn clamp_negatives(values: &mut [f64], step: f64) -> Result<()> {
    let mut clamped = 0.0;
    for v in values.iter_mut() {
        if *v < 0.0 {
            clamped += -*v * step;
            *v = 0.0;
        }
    }
    if clamped > CLAMP_LIMIT {
        return Err(Error::ClampedMass(clamped));
    }
    Ok(())
}

fn check_steps(a: &GridDensity, b: &GridDensity) -> Result<()> {
    if same_step(a.grid.step(), b.grid.step()) {
        Ok(())
    } else {
        Err(Error::StepMismatch(a.grid.step(), b.grid.step()))
    }
}

/// Density of the sum of independent draws from `a` and `b`.
///
/// The output grid starts at `a.lower + b.lower` and holds the full linear
/// convolution, so nothing wraps around or gets truncated.
pub fn convolve(a: &GridDensity, b: &GridDensity) -> Result<GridDensity> {
    check_steps(a, b)?;
    let h = a.grid.step();
    let len = a.values.len() + b.values.len() - 1;
    let points = len.next_power_of_two();
    if points > 1 << 26 {
        return Err(Error::GridOverflow(format!("{points} points")));
    }
    let mut values = linear_convolution(&a.values, &b.values);
    values.iter_mut().for_each(|v| *v *= h);
    values.resize(points, 0.0);
    clamp_negatives(&mut values, h)?;
    let grid = GridSpec::with_step(a.grid.lower() + b.grid.lower(), h, points)?;
    normalize(&GridDensity {
        grid,
        values,
        tail_mass_bound: a.tail_mass_bound + b.tail_mass_bound,
        regularity: a.regularity.join(b.regularity),
    })
}

/// Copy `d` onto a lattice-aligned `target`, charging whatever falls off it
/// to the tail bound.
pub fn transfer(d: &GridDensity, target: &GridSpec, tail_eps: f64) -> Result<GridDensity> {
    let offset = d
        .grid
        .offset_in(target)
        .ok_or_else(|| Error::GridOverflow("source and target grids are not on a common lattice".into()))?;
    let mut values = vec![0.0; target.points()];
    let mut lost = 0.0;
    for (i, &v) in d.values.iter().enumerate() {
        let j = i as i64 + offset;
        if j >= 0 && (j as usize) < target.points() {
            values[j as usize] = v;
        } else {
            lost += v * d.grid.step();
        }
    }
    let tail = d.tail_mass_bound + lost;
    if tail > tail_eps {
        return Err(Error::GridOverflow(format!(
            "mass {tail:e} falls outside [{}, {}]",
            target.lower(),
            target.upper()
        )));
    }
    normalize(&GridDensity {
        grid: *target,
        values,
        tail_mass_bound: tail,
        regularity: d.regularity,
    })
}

/// [`convolve`] followed by [`transfer`] onto `target`.
pub fn convolve_onto(
    a: &GridDensity,
    b: &GridDensity,
    target: &GridSpec,
    tail_eps: f64,
) -> Result<GridDensity> {
    transfer(&convolve(a, b)?, target, tail_eps)
}

/// Density of `alpha * X`.
pub fn rescale(d: &GridDensity, alpha: f64) -> Result<GridDensity> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::NonPositiveAlpha(alpha));
    }
    Ok(GridDensity {
        grid: d.grid.scaled(alpha),
        values: d.values.iter().map(|v| v / alpha).collect(),
        ..d.clone()
    })
}

/// Coefficients `(e^{-t}, sqrt(1 - e^{-2t}))` of the evolute.
pub fn ou_coefficients(t: f64) -> (f64, f64) {
    ((-t).exp(), (-(-2.0 * t).exp_m1()).sqrt())
}

/// Law of `e^{-t} X + sqrt(1 - e^{-2t}) G` for standard normal `G`.
///
/// The result lives on a grid with the input step, aligned to the input
/// lattice, widened if the evolute spills past the input grid.
pub fn ou_evolve(d: &GridDensity, t: f64) -> Result<GridDensity> {
    if !(t >= 0.0) {
        return Err(Error::NegativeTime(t));
    }
    if t == 0.0 {
        return Ok(d.clone());
    }
    let (alpha, sigma) = ou_coefficients(t);
    let (first, last) = d.nonzero_range().ok_or(Error::ZeroMass)?;
    let lo = alpha * d.grid.x(first) - KERNEL_RADIUS * sigma;
    let hi = alpha * d.grid.x(last) + KERNEL_RADIUS * sigma;
    let target = covering_extension(&d.grid, lo, hi)?;
    ou_evolve_onto(d, t, &target)
}

/// Smallest power-of-two grid that keeps the nodes of `g` and covers `[lo, hi]`.
pub(crate) fn covering_extension(g: &GridSpec, lo: f64, hi: f64) -> Result<GridSpec> {
    if lo >= g.lower() && hi <= g.upper() {
        return Ok(*g);
    }
    let h = g.step();
    let below = ((g.lower() - lo) / h).ceil().max(0.0) as usize;
    let above = ((hi - g.upper()) / h).ceil().max(0.0) as usize;
    let points = (g.points() + below + above).next_power_of_two();
    let slack = points - g.points() - below - above;
    let start = g.lower() - (below + slack / 2) as f64 * h;
    GridSpec::with_step(start, h, points)
}

/// [`ou_evolve`] evaluated on an explicit output grid.
///
/// Each input node contributes a Gaussian of width `sqrt(1 - e^{-2t})`
/// centred at `e^{-t}` times its abscissa; the sum is evaluated directly, so
/// input and output grids need not be related.
pub fn ou_evolve_onto(d: &GridDensity, t: f64, target: &GridSpec) -> Result<GridDensity> {
    if !(t >= 0.0) {
        return Err(Error::NegativeTime(t));
    }
    if t == 0.0 {
        return transfer(d, target, f64::INFINITY);
    }
    let (alpha, sigma) = ou_coefficients(t);
    let h_in = d.grid.step();
    let resolution = (alpha * h_in).max(target.step());
    if sigma < resolution {
        return Err(Error::UnderResolved {
            sigma,
            step: resolution,
        });
    }
    let (first, last) = d.nonzero_range().ok_or(Error::ZeroMass)?;
    let weights: Vec<f64> = (0..d.grid.points())
        .map(|j| d.grid.weight(j) * d.values[j])
        .collect();

    let delta = alpha * h_in / sigma;
    let decay = (-delta * delta).exp();
    let half = KERNEL_RADIUS * sigma / (alpha * h_in);
    let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
    let lower_in = d.grid.lower();

    let mut values = vec![0.0; target.points()];
    for (i, out) in values.iter_mut().enumerate() {
        let y = target.x(i);
        let c = (y / alpha - lower_in) / h_in;
        let j_lo = (c - half).floor().max(first as f64) as i64;
        let j_hi = (c + half).ceil().min(last as f64) as i64;
        if j_lo > j_hi {
            continue;
        }
        let j0 = (c.round() as i64).clamp(j_lo, j_hi);
        let z0 = (y - alpha * d.grid.x(j0 as usize)) / sigma;
        let g0 = (-0.5 * z0 * z0).exp();
        let mut acc = weights[j0 as usize] * g0;
        // Gaussian ratios between neighbouring centres follow a geometric recurrence
        let (mut g, mut q) = (g0, (z0 * delta - 0.5 * delta * delta).exp());
        for j in (j0 + 1)..=j_hi {
            g *= q;
            q *= decay;
            acc += weights[j as usize] * g;
        }
        let (mut g, mut q) = (g0, (-z0 * delta - 0.5 * delta * delta).exp());
        for j in (j_lo..j0).rev() {
            g *= q;
            q *= decay;
            acc += weights[j as usize] * g;
        }
        *out = acc * norm;
    }

    // mass of the kernels beyond the target edges, bounded by the extreme centres
    let spill = crate::dist::normal_cdf((target.lower() - alpha * d.grid.x(first)) / sigma)
        + crate::dist::normal_cdf((alpha * d.grid.x(last) - target.upper()) / sigma);
    normalize(&GridDensity {
        grid: *target,
        values,
        tail_mass_bound: d.tail_mass_bound + spill,
        regularity: Regularity::Smooth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{normal_pdf, Family};

    fn std_normal(points: usize) -> GridDensity {
        let g = GridSpec::new(-10.0, 10.0, points).unwrap();
        make_density(&DistributionSpec::gaussian(0.0, 1.0), &g).unwrap()
    }

    fn sup_diff(d: &GridDensity, f: impl Fn(f64) -> f64) -> f64 {
        (0..d.grid().points())
            .map(|i| (d.values()[i] - f(d.grid().x(i))).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn gaussian_samples_are_exact() {
        let d = std_normal(1024);
        assert!(sup_diff(&d, normal_pdf) < 1e-12);
        assert!(d.tail_mass_bound() < 1e-20);
    }

    #[test]
    fn uniform_is_flat_inside() {
        let g = GridSpec::new(-2.0, 3.0, 1024).unwrap();
        let d = make_density(&DistributionSpec::uniform(0.0, 1.0), &g).unwrap();
        assert!((d.mass() - 1.0).abs() < 1e-12);
        for i in 0..g.points() {
            let x = g.x(i);
            if x > 0.01 && x < 0.99 {
                assert!((d.values()[i] - 1.0).abs() < 1e-12);
            } else if !(-0.01..=1.01).contains(&x) {
                assert_eq!(d.values()[i], 0.0);
            }
        }
    }

    #[test]
    fn mixture_moments_on_grid() {
        let g = GridSpec::new(-15.0, 15.0, 2048).unwrap();
        let spec =
            DistributionSpec::parse("gaussian_mixture", &[0.5, -2.0, 1.0, 0.5, 2.0, 1.0], false).unwrap();
        let d = make_density(&spec, &g).unwrap();
        let (_, m, v) = grid_moments(d.grid(), d.values());
        assert!(m.abs() < 1e-6 && (v - 5.0).abs() < 1e-6);
    }

    #[test]
    fn standardization_hits_grid_moments() {
        let g = GridSpec::new(-12.0, 26.0, 4096).unwrap();
        for name in ["uniform", "triangular", "exponential", "mixture"] {
            let spec = DistributionSpec::parse(name, &[], true).unwrap();
            let d = make_density(&spec, &g).unwrap();
            let (_, m, v) = grid_moments(d.grid(), d.values());
            assert!(m.abs() < 1e-12 && (v - 1.0).abs() < 1e-12, "{name}: {m} {v}");
        }
    }

    #[test]
    fn narrow_grid_is_rejected() {
        let g = GridSpec::new(-3.0, 3.0, 256).unwrap();
        assert!(matches!(
            make_density(&DistributionSpec::gaussian(0.0, 1.0), &g),
            Err(Error::GridTooNarrow { .. })
        ));
    }

    #[test]
    fn normalize_cases() {
        let d = std_normal(256);
        let again = normalize(&d).unwrap();
        assert!(sup_diff(&again, |x| d.value_at(x)) < 1e-15);
        let doubled = GridDensity::from_values(
            *d.grid(),
            d.values().iter().map(|v| 2.0 * v).collect(),
            0.0,
            Regularity::Smooth,
        )
        .unwrap();
        assert!(sup_diff(&normalize(&doubled).unwrap(), |x| d.value_at(x)) < 1e-15);
        let zero = GridDensity::from_values(*d.grid(), vec![0.0; 256], 0.0, Regularity::Smooth).unwrap();
        assert_eq!(normalize(&zero), Err(Error::ZeroMass));
    }

    #[test]
    fn uniform_convolution_is_triangle() {
        let g = GridSpec::lattice_covering(-1.0, 2.0, 1.0 / 1000.0).unwrap();
        let u = make_density(&DistributionSpec::uniform(0.0, 1.0), &g).unwrap();
        let t = convolve(&u, &u).unwrap();
        let tri = |x: f64| {
            if (0.0..=2.0).contains(&x) {
                1.0 - (x - 1.0).abs()
            } else {
                0.0
            }
        };
        // cell-averaged edges make the convolution exact up to O(h^2) at the kinks
        assert!(sup_diff(&t, tri) < 2e-3);
        let far: f64 = (0..t.grid().points())
            .filter(|&i| (t.grid().x(i) - 1.0).abs() > 0.01 && t.grid().x(i).min(2.0 - t.grid().x(i)) > 0.01)
            .map(|i| (t.values()[i] - tri(t.grid().x(i))).abs())
            .fold(0.0, f64::max);
        assert!(far < 1e-6, "{far}");
    }

    #[test]
    fn gaussian_convolution_closure() {
        let d = std_normal(1024);
        let s = convolve(&d, &d).unwrap();
        let target = |x: f64| normal_pdf(x / 2f64.sqrt()) / 2f64.sqrt();
        assert!(sup_diff(&s, target) < 1e-8);
    }

    #[test]
    fn near_delta_is_identity() {
        let g = GridSpec::lattice_covering(-8.0, 8.0, 0.02).unwrap();
        let spec = DistributionSpec::parse("mixture", &[], false).unwrap();
        let f = make_density(&spec, &GridSpec::lattice_covering(-12.0, 12.0, 0.02).unwrap()).unwrap();
        let delta = make_density(&DistributionSpec::gaussian(0.0, g.step() / 100.0), &g).unwrap();
        let c = convolve(&f, &delta).unwrap();
        assert!(sup_diff(&c, |x| f.value_at(x)) < 1e-6);
    }

    #[test]
    fn convolution_commutes() {
        let g = GridSpec::lattice_covering(-10.0, 26.0, 0.02).unwrap();
        let a = make_density(&DistributionSpec::parse("mixture", &[], true).unwrap(), &g).unwrap();
        let b = make_density(&DistributionSpec::parse("exponential", &[], true).unwrap(), &g).unwrap();
        let ab = convolve(&a, &b).unwrap();
        let ba = convolve(&b, &a).unwrap();
        assert_eq!(ab.grid(), ba.grid());
        assert!(sup_diff(&ab, |x| ba.value_at(x)) < 1e-10);
    }

    #[test]
    fn mismatched_steps_are_rejected() {
        let a = std_normal(256);
        let b = std_normal(512);
        assert!(matches!(convolve(&a, &b), Err(Error::StepMismatch(..))));
    }

    #[test]
    fn rescale_closure_and_inverse() {
        let d = std_normal(1024);
        assert_eq!(rescale(&d, 1.0).unwrap(), d);
        let r = rescale(&d, 2.0).unwrap();
        assert!(sup_diff(&r, |x| normal_pdf(x / 2.0) / 2.0) < 1e-8);
        let back = rescale(&r, 0.5).unwrap();
        assert!(sup_diff(&back, |x| d.value_at(x)) < 1e-8);
        assert_eq!(rescale(&d, 0.0), Err(Error::NonPositiveAlpha(0.0)));
    }

    #[test]
    fn ou_fixed_point_and_identity() {
        let d = std_normal(2048);
        assert_eq!(ou_evolve(&d, 0.0).unwrap(), d);
        assert_eq!(ou_evolve(&d, -1.0), Err(Error::NegativeTime(-1.0)));
        for t in [0.01, 0.1, 1.0, 5.0] {
            let e = ou_evolve(&d, t).unwrap();
            assert!(sup_diff(&e, normal_pdf) < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn ou_long_time_forgets_input() {
        let g = GridSpec::new(-14.0, 26.0, 2048).unwrap();
        let spec = DistributionSpec::parse("exponential", &[], true).unwrap();
        let d = make_density(&spec, &g).unwrap();
        let e = ou_evolve(&d, 10.0).unwrap();
        assert!(sup_diff(&e, normal_pdf) < 1e-4);
        let (_, m, v) = grid_moments(e.grid(), e.values());
        assert!(m.abs() < 1e-6 && (v - 1.0).abs() < 1e-6);
    }

    #[test]
    fn ou_semigroup_law() {
        let g = GridSpec::new(-12.0, 12.0, 2048).unwrap();
        let spec = DistributionSpec::new(Family::Uniform { low: 0.0, high: 1.0 }, true).unwrap();
        let d = ou_evolve(&make_density(&spec, &g).unwrap(), 0.05).unwrap();
        for (s, t) in [(0.1, 0.1), (0.1, 0.5), (0.5, 0.5)] {
            let two = ou_evolve(&ou_evolve(&d, s).unwrap(), t).unwrap();
            let one = ou_evolve(&d, s + t).unwrap();
            assert!(sup_diff(&two, |x| one.value_at(x)) < 1e-6, "{s} {t}");
        }
    }

    #[test]
    fn ou_preserves_unit_variance() {
        let g = GridSpec::new(-12.0, 12.0, 2048).unwrap();
        let spec = DistributionSpec::parse("uniform", &[], true).unwrap();
        let d = make_density(&spec, &g).unwrap();
        for t in [0.001, 0.05, 0.7] {
            let e = ou_evolve(&d, t).unwrap();
            let (mass, m, v) = grid_moments(e.grid(), e.values());
            assert!((mass - 1.0).abs() < 1e-12);
            assert!(m.abs() < 1e-9 && (v - 1.0).abs() < 1e-6, "t = {t}: {m} {v}");
        }
    }

    #[test]
    fn ou_rejects_unresolved_kernels() {
        let d = std_normal(256);
        assert!(matches!(ou_evolve(&d, 1e-6), Err(Error::UnderResolved { .. })));
    }
}
