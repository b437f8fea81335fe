//! Conditional expectations between partial sums and their maximal correlation.
//!
//! On a lattice grid the pair `(S_m, S_n)` has an explicit discrete joint law:
//! `S_m` and the increment `S_n - S_m` are independent with the gridded
//! densities of `S_m` and `S_{n-m}`. Everything here is computed from that
//! joint law, with conditioning values restricted to nodes where the density
//! of `S_n` clears the floor.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::density::GridDensity;
use crate::error::{Error, Result};
use crate::family::IidSumFamily;
use crate::functionals::{score, ScoreField, DEFAULT_REL_FLOOR};
use crate::grid::GridSpec;

/// Seed of the pseudorandom start used to cross-check power iteration.
const CROSS_CHECK_SEED: u64 = 0x5eed_0fc0_ffee;

/// A real function sampled on a grid, with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: GridSpec,
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl GridFunction {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        let valid = vec![true; values.len()];
        Self::with_mask(grid, values, valid)
    }

    pub fn with_mask(grid: GridSpec, values: Vec<f64>, valid: Vec<bool>) -> Result<Self> {
        if values.len() != grid.points() || valid.len() != grid.points() {
            return Err(Error::GridMismatch);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("grid function has non-finite values".into()));
        }
        Ok(Self { grid, values, valid })
    }

    pub fn from_fn(grid: &GridSpec, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(*grid, grid.abscissae().into_iter().map(f).collect())
    }

    pub fn from_score(s: &ScoreField) -> Self {
        Self {
            grid: *s.grid(),
            values: s.values().to_vec(),
            valid: s.valid().to_vec(),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }
}

/// The operator `theta -> E[theta(S_m) | S_n]` on the family grid.
#[derive(Debug, Clone)]
pub struct CondExpKernel {
    m: usize,
    n: usize,
    grid: GridSpec,
    /// Grid indices of the conditioning values `s` (rows) and of `x` (columns).
    rows: Vec<usize>,
    cols: Vec<usize>,
    /// Row-stochastic, `rows.len() x cols.len()`, row-major.
    kernel: Vec<f64>,
    /// Marginal weights of the truncated joint law; each sums to 1.
    row_weights: Vec<f64>,
    col_weights: Vec<f64>,
}

fn support(d: &GridDensity, rel_floor: f64) -> Vec<usize> {
    let floor = rel_floor * d.max_value();
    (0..d.values().len())
        .filter(|&i| d.values()[i] >= floor && d.values()[i] > 0.0)
        .collect()
}

fn check_indices(family: &IidSumFamily, m: usize, n: usize) -> Result<()> {
    if m == 0 || m > n || n > family.n_max() {
        return Err(Error::IndexOutOfRange {
            m,
            n,
            n_max: family.n_max(),
        });
    }
    Ok(())
}

impl CondExpKernel {
    pub fn build(family: &IidSumFamily, m: usize, n: usize) -> Result<Self> {
        check_indices(family, m, n)?;
        let grid = *family.grid();
        let f_n = family.sum(n)?;
        let rows = support(f_n, DEFAULT_REL_FLOOR);
        if m == n {
            return Ok(Self::identity(m, grid, f_n, rows));
        }
        let f_m = family.sum(m)?;
        let f_rest = family.sum(n - m)?;
        // every node carrying mass, so that tail rows see their full conditional law
        let cols = support(f_m, 0.0);
        let origin = grid.lattice_origin().ok_or(Error::GridMismatch)?;
        let h = grid.step();
        let points = grid.points() as i64;

        let mut kernel = vec![0.0; rows.len() * cols.len()];
        let mut row_mass = vec![0.0; rows.len()];
        let mut col_mass = vec![0.0; cols.len()];
        for (r, &s) in rows.iter().enumerate() {
            let row = &mut kernel[r * cols.len()..(r + 1) * cols.len()];
            let mut total = 0.0;
            for (c, &x) in cols.iter().enumerate() {
                // node of s - x on the shared lattice
                let k = s as i64 - x as i64 - origin;
                if k < 0 || k >= points {
                    continue;
                }
                let joint = grid.weight(x) * f_m.values()[x] * f_rest.values()[k as usize] * h;
                row[c] = joint;
                total += joint;
            }
            if !(total > 0.0) || !total.is_finite() {
                return Err(Error::DegenerateRow(s));
            }
            for (c, v) in row.iter_mut().enumerate() {
                col_mass[c] += *v;
                *v /= total;
            }
            row_mass[r] = total;
        }
        let z: f64 = row_mass.iter().sum();
        Ok(Self {
            m,
            n,
            grid,
            rows,
            cols,
            kernel,
            row_weights: row_mass.iter().map(|v| v / z).collect(),
            col_weights: col_mass.iter().map(|v| v / z).collect(),
        })
    }

    fn identity(m: usize, grid: GridSpec, f: &GridDensity, rows: Vec<usize>) -> Self {
        let k = rows.len();
        let mut kernel = vec![0.0; k * k];
        for i in 0..k {
            kernel[i * k + i] = 1.0;
        }
        let mass: Vec<f64> = rows.iter().map(|&i| grid.weight(i) * f.values()[i]).collect();
        let z: f64 = mass.iter().sum();
        let weights: Vec<f64> = mass.iter().map(|v| v / z).collect();
        Self {
            m,
            n: m,
            grid,
            cols: rows.clone(),
            rows,
            kernel,
            row_weights: weights.clone(),
            col_weights: weights,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Grid indices where the conditional law is defined.
    pub fn support_rows(&self) -> &[usize] {
        &self.rows
    }

    /// Sum of each kernel row (1 up to round-off).
    pub fn row_sums(&self) -> Vec<f64> {
        self.kernel
            .chunks(self.cols.len())
            .map(|r| r.iter().sum())
            .collect()
    }

    pub fn min_entry(&self) -> f64 {
        self.kernel.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn apply_cols(&self, theta: &[f64]) -> Vec<f64> {
        self.kernel
            .chunks(self.cols.len())
            .map(|row| row.iter().zip(theta).map(|(k, t)| k * t).sum())
            .collect()
    }

    /// Adjoint map `u -> E[u(S_n) | S_m]` on the column support.
    fn apply_adjoint(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols.len()];
        for (r, row) in self.kernel.chunks(self.cols.len()).enumerate() {
            let a = self.row_weights[r] * u[r];
            for (o, k) in out.iter_mut().zip(row) {
                *o += a * k;
            }
        }
        for (o, w) in out.iter_mut().zip(&self.col_weights) {
            // columns no conditioning row reaches carry no weight and stay 0
            if *w > 0.0 {
                *o /= w;
            }
        }
        out
    }

    fn gather(&self, theta: &GridFunction) -> Result<Vec<f64>> {
        if theta.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .cols
            .iter()
            .map(|&i| if theta.valid[i] { theta.values[i] } else { 0.0 })
            .collect())
    }

    fn scatter(&self, on_rows: &[f64]) -> GridFunction {
        let mut values = vec![0.0; self.grid.points()];
        let mut valid = vec![false; self.grid.points()];
        for (&i, &v) in self.rows.iter().zip(on_rows) {
            values[i] = v;
            valid[i] = true;
        }
        GridFunction {
            grid: self.grid,
            values,
            valid,
        }
    }

    /// Mean of `theta(S_m)`.
    pub fn mean_m(&self, theta: &GridFunction) -> Result<f64> {
        Ok(dot(&self.gather(theta)?, &self.col_weights))
    }

    /// Mean of `u(S_n)` over the rows.
    pub fn mean_n(&self, u: &GridFunction) -> Result<f64> {
        if u.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .rows
            .iter()
            .zip(&self.row_weights)
            .map(|(&i, w)| w * u.values[i])
            .sum())
    }

    /// `E[theta^2(S_m)]` and `E[u^2(S_n)]`.
    pub fn second_moment_m(&self, theta: &GridFunction) -> Result<f64> {
        let t = self.gather(theta)?;
        Ok(t.iter().zip(&self.col_weights).map(|(v, w)| w * v * v).sum())
    }

    pub fn second_moment_n(&self, u: &GridFunction) -> Result<f64> {
        Ok(self
            .rows
            .iter()
            .zip(&self.row_weights)
            .map(|(&i, w)| w * u.values[i] * u.values[i])
            .sum())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `s -> E[theta(S_m) | S_n = s]`; invalid off the row support.
pub fn cond_exp(k: &CondExpKernel, theta: &GridFunction) -> Result<GridFunction> {
    let t = k.gather(theta)?;
    Ok(k.scatter(&k.apply_cols(&t)))
}

/// `E|E[theta(S_m)|S_n]|^2 / E|theta(S_m)|^2` after centering `theta` under `S_m`.
pub fn contraction_ratio(k: &CondExpKernel, theta: &GridFunction) -> Result<f64> {
    let mut t = k.gather(theta)?;
    let mean = dot(&t, &k.col_weights);
    t.iter_mut().for_each(|v| *v -= mean);
    let den: f64 = t.iter().zip(&k.col_weights).map(|(v, w)| w * v * v).sum();
    if den < 1e-14 {
        return Err(Error::ConstantFunction(den));
    }
    let u = k.apply_cols(&t);
    let num: f64 = u.iter().zip(&k.row_weights).map(|(v, w)| w * v * v).sum();
    Ok(num / den)
}

/// Outcome of the power iteration for `r^2(S_m; S_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxCorrelation {
    pub r2: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Rayleigh quotient after each iteration of the primary run.
    pub rayleigh: Vec<f64>,
    /// Value reached from a pseudorandom start.
    pub cross_check_r2: f64,
    /// Rayleigh quotients of the pseudorandom-start run.
    pub cross_check_rayleigh: Vec<f64>,
}

impl MaxCorrelation {
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NoConvergence(self.iterations))
        }
    }
}

struct PowerRun {
    r2: f64,
    iterations: usize,
    converged: bool,
    rayleigh: Vec<f64>,
}

fn power_iteration(k: &CondExpKernel, start: Vec<f64>, max_iter: usize, tol: f64) -> Result<PowerRun> {
    let w = &k.col_weights;
    let mut v = start;
    let mut rayleigh: Vec<f64> = Vec::new();
    for it in 1..=max_iter {
        let mean = dot(&v, w);
        v.iter_mut().for_each(|x| *x -= mean);
        let norm2: f64 = v.iter().zip(w).map(|(x, q)| q * x * x).sum();
        if !(norm2 > 1e-300) {
            return Err(Error::ConstantFunction(norm2));
        }
        let scale = norm2.sqrt().recip();
        v.iter_mut().for_each(|x| *x *= scale);
        let u = k.apply_cols(&v);
        let r: f64 = u.iter().zip(&k.row_weights).map(|(x, q)| q * x * x).sum();
        let prev = rayleigh.last().copied();
        rayleigh.push(r);
        if let Some(p) = prev {
            if (r - p).abs() < tol {
                return Ok(PowerRun {
                    r2: r,
                    iterations: it,
                    converged: true,
                    rayleigh,
                });
            }
        }
        v = k.apply_adjoint(&u);
    }
    Ok(PowerRun {
        r2: *rayleigh.last().unwrap_or(&f64::NAN),
        iterations: max_iter,
        converged: false,
        rayleigh,
    })
}

/// `r^2(S_m; S_n)` as the top eigenvalue of `E[E[. | S_n] | S_m]` on
/// mean-zero functions, by power iteration from `x - E[S_m]`.
///
/// A second run from a pseudorandom start, iterated to `tol / 10`, is
/// reported alongside as a guard against starting in a non-dominant
/// eigenspace.
pub fn maximal_correlation(
    family: &IidSumFamily,
    m: usize,
    n: usize,
    max_iter: usize,
    tol: f64,
) -> Result<MaxCorrelation> {
    let k = CondExpKernel::build(family, m, n)?;
    maximal_correlation_with(&k, max_iter, tol)
}

pub fn maximal_correlation_with(k: &CondExpKernel, max_iter: usize, tol: f64) -> Result<MaxCorrelation> {
    let linear: Vec<f64> = k.cols.iter().map(|&i| k.grid.x(i)).collect();
    let primary = power_iteration(k, linear, max_iter, tol)?;
    let mut rng = ChaCha20Rng::seed_from_u64(CROSS_CHECK_SEED);
    let noise: Vec<f64> = k.cols.iter().map(|_| rng.random::<f64>() - 0.5).collect();
    let check = power_iteration(k, noise, max_iter, 0.1 * tol)?;
    Ok(MaxCorrelation {
        r2: primary.r2,
        iterations: primary.iterations,
        converged: primary.converged && check.converged,
        rayleigh: primary.rayleigh,
        cross_check_r2: check.r2,
        cross_check_rayleigh: check.rayleigh,
    })
}

/// Discrepancy between the score of `S_n` and the conditional expectation of
/// the score of `S_m` given `S_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreProjection {
    /// `max |diff| * f_n / max f_n` over nodes with `f_n >= 1e-6 max f_n`.
    pub weighted_sup: f64,
    /// `(int diff^2 f_n)^(1/2)` over the same nodes.
    pub l2: f64,
}

pub fn verify_score_projection(family: &IidSumFamily, m: usize, n: usize) -> Result<ScoreProjection> {
    check_indices(family, m, n)?;
    if !family.is_smooth() {
        return Err(Error::NonSmoothInput);
    }
    let f_n = family.sum(n)?;
    let rho_n = score(f_n)?;
    let rho_m = GridFunction::from_score(&score(family.sum(m)?)?);
    let k = CondExpKernel::build(family, m, n)?;
    let projected = cond_exp(&k, &rho_m)?;
    let peak = f_n.max_value();
    let g = family.grid();
    let (mut sup, mut l2) = (0.0f64, 0.0);
    for i in 0..g.points() {
        let f = f_n.values()[i];
        if f < 1e-6 * peak {
            continue;
        }
        if !(rho_n.valid()[i] && projected.valid[i]) {
            return Err(Error::GridMismatch);
        }
        let diff = rho_n.values()[i] - projected.values[i];
        sup = sup.max(diff.abs() * f / peak);
        l2 += g.weight(i) * f * diff * diff;
    }
    Ok(ScoreProjection {
        weighted_sup: sup,
        l2: l2.sqrt(),
    })
}

/// [`ScoreProjection`] norms of `E[rho_{S_m}(S_m) | S_n] - rho_ref`, where
/// `rho_ref` is the score of `reference` (a finer gridding of `S_n`)
/// interpolated onto the family grid.
pub fn projection_error_against(
    family: &IidSumFamily,
    m: usize,
    n: usize,
    reference: &GridDensity,
) -> Result<ScoreProjection> {
    check_indices(family, m, n)?;
    if !family.is_smooth() {
        return Err(Error::NonSmoothInput);
    }
    let f_n = family.sum(n)?;
    let rho_ref = score(reference)?;
    let rho_m = GridFunction::from_score(&score(family.sum(m)?)?);
    let k = CondExpKernel::build(family, m, n)?;
    let projected = cond_exp(&k, &rho_m)?;
    let peak = f_n.max_value();
    let g = family.grid();
    let (mut sup, mut l2) = (0.0f64, 0.0);
    for i in 0..g.points() {
        let f = f_n.values()[i];
        if f < 1e-6 * peak {
            continue;
        }
        let r = rho_ref.value_at(g.x(i)).ok_or(Error::GridMismatch)?;
        if !projected.valid[i] {
            return Err(Error::GridMismatch);
        }
        let diff = r - projected.values[i];
        sup = sup.max(diff.abs() * f / peak);
        l2 += g.weight(i) * f * diff * diff;
    }
    Ok(ScoreProjection {
        weighted_sup: sup,
        l2: l2.sqrt(),
    })
}

/// Test functions for the contraction check: standardized monomials of
/// degree 1 to 4, a clipped sine and the score of `S_m`.
pub fn theta_battery(family: &IidSumFamily, m: usize) -> Result<Vec<(String, GridFunction)>> {
    let f_m = family.sum(m)?;
    let (mean, var) = crate::functionals::moments(f_m);
    let sd = var.sqrt();
    let g = family.grid();
    let mut out = Vec::new();
    for p in 1..=4 {
        out.push((
            format!("poly{p}"),
            GridFunction::from_fn(g, |x| ((x - mean) / sd).powi(p))?,
        ));
    }
    out.push((
        "clipped_sine".into(),
        GridFunction::from_fn(g, |x| (2.0 * (x - mean) / sd).sin().clamp(-0.5, 0.5))?,
    ));
    if family.is_smooth() {
        out.push(("score".into(), GridFunction::from_score(&score(f_m)?)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::DistributionSpec;
    use crate::family::GridPolicy;
    use crate::functionals::fisher_information;

    fn family(name: &str, n_max: usize) -> IidSumFamily {
        let spec = DistributionSpec::parse(name, &[], true).unwrap();
        IidSumFamily::build(&spec, n_max, &GridPolicy::default().with_points(1024)).unwrap()
    }

    #[test]
    fn index_checks() {
        let f = family("gaussian", 3);
        assert!(matches!(
            CondExpKernel::build(&f, 0, 2),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            CondExpKernel::build(&f, 3, 2),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            CondExpKernel::build(&f, 1, 4),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn identity_when_m_equals_n() {
        let f = family("mixture", 2);
        for m in 1..=2 {
            let k = CondExpKernel::build(&f, m, m).unwrap();
            let theta = GridFunction::from_fn(f.grid(), |x| (x * 0.7).sin() + x * x).unwrap();
            let out = cond_exp(&k, &theta).unwrap();
            for &i in k.support_rows() {
                assert!((out.values()[i] - theta.values()[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn linear_regression_of_sums() {
        let f = family("gaussian", 2);
        let k = CondExpKernel::build(&f, 1, 2).unwrap();
        let theta = GridFunction::from_fn(f.grid(), |x| x).unwrap();
        let out = cond_exp(&k, &theta).unwrap();
        let peak = f.sum(2).unwrap().max_value();
        for &i in k.support_rows() {
            if f.sum(2).unwrap().values()[i] > 1e-8 * peak {
                let s = f.grid().x(i);
                assert!((out.values()[i] - s / 2.0).abs() < 1e-6, "s = {s}");
            }
        }
    }

    #[test]
    fn rows_are_stochastic() {
        let f = family("uniform", 3);
        let k = CondExpKernel::build(&f, 2, 3).unwrap();
        assert!(k.row_sums().iter().all(|s| (s - 1.0).abs() < 1e-8));
        assert!(k.min_entry() >= 0.0);
        let c = GridFunction::from_fn(f.grid(), |_| 2.5).unwrap();
        let out = cond_exp(&k, &c).unwrap();
        for &i in k.support_rows() {
            assert!((out.values()[i] - 2.5).abs() < 1e-9);
        }
    }

    #[test]
    fn linear_theta_attains_the_bound() {
        let f = family("exponential", 5);
        for (m, n) in [(1, 2), (2, 3), (2, 5), (4, 5)] {
            let k = CondExpKernel::build(&f, m, n).unwrap();
            let theta = GridFunction::from_fn(f.grid(), |x| x).unwrap();
            let r = contraction_ratio(&k, &theta).unwrap();
            assert!((r - m as f64 / n as f64).abs() < 1e-6, "{m},{n}: {r}");
        }
    }

    #[test]
    fn constant_theta_is_rejected() {
        let f = family("gaussian", 2);
        let k = CondExpKernel::build(&f, 1, 2).unwrap();
        let c = GridFunction::from_fn(f.grid(), |_| 1.0).unwrap();
        assert!(matches!(
            contraction_ratio(&k, &c),
            Err(Error::ConstantFunction(_))
        ));
    }

    #[test]
    fn score_contraction_is_fisher_ratio() {
        let f = family("mixture", 3);
        let k = CondExpKernel::build(&f, 1, 3).unwrap();
        let rho = GridFunction::from_score(&score(f.sum(1).unwrap()).unwrap());
        let r = contraction_ratio(&k, &rho).unwrap();
        let ratio =
            fisher_information(f.sum(3).unwrap()).unwrap() / fisher_information(f.sum(1).unwrap()).unwrap();
        assert!((r / ratio - 1.0).abs() < 1e-5, "{r} vs {ratio}");
        assert!(r <= 1.0 / 3.0 + 1e-6);
    }

    #[test]
    fn dks_on_the_grid() {
        let f = family("gaussian", 3);
        let r = maximal_correlation(&f, 1, 2, 2000, 1e-10).unwrap();
        assert!(r.converged);
        assert!((r.r2 - 0.5).abs() < 1e-4);
        assert!((r.cross_check_r2 - r.r2).abs() < 2e-10);
        let r = maximal_correlation(&f, 3, 3, 2000, 1e-10).unwrap();
        assert!((r.r2 - 1.0).abs() < 1e-10);
        assert!(r.rayleigh.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }

    #[test]
    fn gaussian_score_projection() {
        let f = family("gaussian", 3);
        for (m, n) in [(1, 2), (2, 3), (2, 2)] {
            let e = verify_score_projection(&f, m, n).unwrap();
            assert!(e.weighted_sup < 1e-6 && e.l2 < 1e-6, "{m},{n}: {e:?}");
        }
    }

    #[test]
    fn mismatched_grid_is_rejected() {
        let f = family("gaussian", 2);
        let k = CondExpKernel::build(&f, 1, 2).unwrap();
        let other = GridSpec::new(-1.0, 1.0, 64).unwrap();
        let theta = GridFunction::from_fn(&other, |x| x).unwrap();
        assert_eq!(cond_exp(&k, &theta), Err(Error::GridMismatch));
    }
}
