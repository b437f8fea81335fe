//! Entropy, score, Fisher information and moments of grid densities.

use std::fmt::Write as _;

use crate::density::{grid_moments, rescale, GridDensity};
use crate::error::{Error, Result};
use crate::family::IidSumFamily;
use crate::grid::GridSpec;
use crate::numfmt::sig12;

/// Densities below this fraction of their maximum are treated as zero.
pub const DEFAULT_REL_FLOOR: f64 = 1e-12;

/// Default slack for the monotonicity verdicts, in nats.
pub const DEFAULT_MONOTONE_TOL: f64 = 1e-6;

const MASS_TOL: f64 = 1e-8;

fn check_normalized(d: &GridDensity) -> Result<()> {
    let mass = d.mass();
    if (mass - 1.0).abs() > MASS_TOL {
        return Err(Error::NotNormalized(mass));
    }
    Ok(())
}

/// `-int f log f` by the trapezoid rule; nodes below the floor contribute 0.
pub fn entropy(d: &GridDensity) -> Result<f64> {
    entropy_with_floor(d, DEFAULT_REL_FLOOR)
}

pub fn entropy_with_floor(d: &GridDensity, rel_floor: f64) -> Result<f64> {
    check_normalized(d)?;
    let floor = rel_floor * d.max_value();
    let g = d.grid();
    Ok(d.values()
        .iter()
        .enumerate()
        .filter(|(_, &f)| f >= floor && f > 0.0)
        .map(|(i, &f)| -g.weight(i) * f * f.ln())
        .sum())
}

/// `(mean, variance)` by the trapezoid rule.
pub fn moments(d: &GridDensity) -> (f64, f64) {
    let (_, mean, var) = grid_moments(d.grid(), d.values());
    (mean, var)
}

/// Score `f'/f` with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreField {
    grid: GridSpec,
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl ScoreField {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Score values; zero at invalid nodes.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    /// Cubic Lagrange interpolation through the four surrounding nodes, or
    /// `None` if any of them is invalid.
    pub fn value_at(&self, x: f64) -> Option<f64> {
        let g = &self.grid;
        let pos = (x - g.lower()) / g.step();
        let i = pos.floor() as i64;
        if i < 1 || i + 2 >= g.points() as i64 {
            return None;
        }
        let i = i as usize;
        if !self.valid[i - 1..=i + 2].iter().all(|&v| v) {
            return None;
        }
        let u = pos - i as f64;
        let w = [
            -u * (u - 1.0) * (u - 2.0) / 6.0,
            (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0,
            -(u + 1.0) * u * (u - 2.0) / 2.0,
            (u + 1.0) * u * (u - 1.0) / 6.0,
        ];
        Some((0..4).map(|k| w[k] * self.values[i - 1 + k]).sum())
    }
}

/// Derivative of `f` at every node of the runs where `mask` holds.
///
/// Fourth-order throughout: centred in the interior of a run, one-sided on
/// its first and last two nodes. Runs shorter than five nodes are dropped
/// from `mask`.
fn derivative(values: &[f64], step: f64, mask: &mut [bool]) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    let c = 1.0 / (12.0 * step);
    let f = |i: usize| values[i];
    let mut i = 0;
    while i < n {
        if !mask[i] {
            i += 1;
            continue;
        }
        let a = i;
        while i < n && mask[i] {
            i += 1;
        }
        let b = i - 1;
        if b - a + 1 < 5 {
            mask[a..=b].iter_mut().for_each(|m| *m = false);
            continue;
        }
        #[allow(clippy::needless_range_loop)] // the stencil reads neighbours of k
        for k in a..=b {
            out[k] = c * if k == a {
                -25.0 * f(k) + 48.0 * f(k + 1) - 36.0 * f(k + 2) + 16.0 * f(k + 3) - 3.0 * f(k + 4)
            } else if k == a + 1 {
                -3.0 * f(k - 1) - 10.0 * f(k) + 18.0 * f(k + 1) - 6.0 * f(k + 2) + f(k + 3)
            } else if k == b {
                3.0 * f(k - 4) - 16.0 * f(k - 3) + 36.0 * f(k - 2) - 48.0 * f(k - 1) + 25.0 * f(k)
            } else if k == b - 1 {
                -f(k - 3) + 6.0 * f(k - 2) - 18.0 * f(k - 1) + 10.0 * f(k) + 3.0 * f(k + 1)
            } else {
                f(k - 2) - 8.0 * f(k - 1) + 8.0 * f(k + 1) - f(k + 2)
            };
        }
    }
    out
}

fn derivative_on_support(d: &GridDensity, rel_floor: f64) -> Result<(Vec<f64>, Vec<bool>)> {
    if !d.is_smooth() {
        return Err(Error::NonSmoothInput);
    }
    let floor = rel_floor * d.max_value();
    let mut mask: Vec<bool> = d.values().iter().map(|&f| f >= floor && f > 0.0).collect();
    let df = derivative(d.values(), d.grid().step(), &mut mask);
    Ok((df, mask))
}

pub fn score(d: &GridDensity) -> Result<ScoreField> {
    score_with_floor(d, DEFAULT_REL_FLOOR)
}

pub fn score_with_floor(d: &GridDensity, rel_floor: f64) -> Result<ScoreField> {
    let (df, valid) = derivative_on_support(d, rel_floor)?;
    let values = df
        .iter()
        .zip(d.values())
        .zip(&valid)
        .map(|((&g, &f), &ok)| if ok { g / f } else { 0.0 })
        .collect();
    Ok(ScoreField {
        grid: *d.grid(),
        values,
        valid,
    })
}

/// `int (f')^2 / f` over the valid region.
pub fn fisher_information(d: &GridDensity) -> Result<f64> {
    fisher_information_with_floor(d, DEFAULT_REL_FLOOR)
}

pub fn fisher_information_with_floor(d: &GridDensity, rel_floor: f64) -> Result<f64> {
    let (df, valid) = derivative_on_support(d, rel_floor)?;
    let g = d.grid();
    Ok((0..g.points())
        .filter(|&i| valid[i])
        .map(|i| g.weight(i) * df[i] * df[i] / d.values()[i])
        .sum())
}

/// Per-n entropy, Fisher information and variance of the standardized sums.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalReport {
    pub n_values: Vec<usize>,
    pub entropy_std: Vec<f64>,
    pub fisher_std: Vec<f64>,
    pub variance_std: Vec<f64>,
    pub entropy_monotone: bool,
    pub fisher_monotone: bool,
    pub tolerance: f64,
}

impl FunctionalReport {
    pub fn from_columns(
        n_values: Vec<usize>,
        entropy_std: Vec<f64>,
        fisher_std: Vec<f64>,
        variance_std: Vec<f64>,
        tolerance: f64,
    ) -> Self {
        let entropy_monotone = entropy_std.windows(2).all(|w| w[1] >= w[0] - tolerance);
        let fisher_monotone = fisher_std.windows(2).all(|w| w[1] <= w[0] + tolerance);
        Self {
            n_values,
            entropy_std,
            fisher_std,
            variance_std,
            entropy_monotone,
            fisher_monotone,
            tolerance,
        }
    }

    /// Largest one-step decrease of entropy (0 if entropy never decreases).
    pub fn worst_entropy_drop(&self) -> f64 {
        self.entropy_std
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(0.0, f64::max)
    }

    /// Largest one-step increase of Fisher information (0 if it never increases).
    pub fn worst_fisher_rise(&self) -> f64 {
        self.fisher_std
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,entropy,fisher,variance\n");
        for i in 0..self.n_values.len() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                self.n_values[i],
                sig12(self.entropy_std[i]),
                sig12(self.fisher_std[i]),
                sig12(self.variance_std[i])
            );
        }
        out
    }
}

/// Evaluate `h`, `J` and the variance of `U_n = S_n / sqrt(n)` for every `n`.
pub fn report(family: &IidSumFamily, tolerance: f64) -> Result<FunctionalReport> {
    let (mut ns, mut hs, mut js, mut vs) = (vec![], vec![], vec![], vec![]);
    for n in 1..=family.n_max() {
        let u = rescale(family.sum(n)?, 1.0 / (n as f64).sqrt())?;
        ns.push(n);
        hs.push(entropy(&u)?);
        js.push(fisher_information(&u)?);
        vs.push(moments(&u).1);
    }
    Ok(FunctionalReport::from_columns(ns, hs, js, vs, tolerance))
}

/// Largest relative excess of `J(S_n)` over `(m/n) J(S_m)` across `1 <= m <= n <= n_max`.
///
/// Non-positive means the chain of inequalities holds everywhere.
pub fn fisher_chain_excess(family: &IidSumFamily) -> Result<f64> {
    let js = family
        .sums()
        .iter()
        .map(fisher_information)
        .collect::<Result<Vec<_>>>()?;
    let mut worst = f64::NEG_INFINITY;
    for n in 1..=js.len() {
        for m in 1..=n {
            let bound = m as f64 / n as f64 * js[m - 1];
            worst = worst.max(js[n - 1] / bound - 1.0);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{convolve, make_density, ou_evolve};
    use crate::dist::DistributionSpec;
    use std::f64::consts::{E, PI};

    fn gaussian(sd: f64, points: usize) -> GridDensity {
        let g = GridSpec::new(-10.0 * sd, 10.0 * sd, points).unwrap();
        make_density(&DistributionSpec::gaussian(0.0, sd), &g).unwrap()
    }

    /// Uniform(0,1) on a grid whose cell boundaries sit on 0 and 1.
    fn unit_uniform(per_unit: usize) -> GridDensity {
        let h = 1.0 / per_unit as f64;
        let g = GridSpec::with_step(-1.0 - 0.5 * h, h, (3 * per_unit).next_power_of_two()).unwrap();
        make_density(&DistributionSpec::uniform(0.0, 1.0), &g).unwrap()
    }

    #[test]
    fn closed_form_entropies() {
        let h = entropy(&gaussian(1.0, 1024)).unwrap();
        assert!((h - 0.5 * (2.0 * PI * E).ln()).abs() < 1e-6);
        let u = unit_uniform(1000);
        assert!(entropy(&u).unwrap().abs() < 1e-6);
        let tri = convolve(&u, &u).unwrap();
        assert!((entropy(&tri).unwrap() - 0.5).abs() < 1e-5);
    }

    #[test]
    fn closed_form_moments() {
        let (m, v) = moments(&gaussian(1.0, 1024));
        assert!(m.abs() < 1e-8 && (v - 1.0).abs() < 1e-8);
        // the lattice box has variance (1 - h^2) / 12
        let u = unit_uniform(4000);
        let (m, v) = moments(&u);
        assert!((m - 0.5).abs() < 1e-8 && (v - 1.0 / 12.0).abs() < 1e-8);
        let (m, v) = moments(&convolve(&u, &u).unwrap());
        assert!((m - 1.0).abs() < 1e-7 && (v - 1.0 / 6.0).abs() < 1e-7);
    }

    #[test]
    fn unnormalized_input_is_rejected() {
        let d = gaussian(1.0, 256);
        let doubled = GridDensity::from_values(
            *d.grid(),
            d.values().iter().map(|v| 2.0 * v).collect(),
            0.0,
            d.regularity(),
        )
        .unwrap();
        assert!(matches!(entropy(&doubled), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn gaussian_scores_are_linear() {
        let d = gaussian(1.0, 4096);
        let s = score(&d).unwrap();
        for i in 0..d.grid().points() {
            let x = d.grid().x(i);
            if x.abs() <= 5.0 {
                assert!(s.valid()[i]);
                assert!((s.values()[i] + x).abs() < 1e-6, "x = {x}");
            }
        }
        let d = gaussian(2.0, 4096);
        let s = score(&d).unwrap();
        for i in 0..d.grid().points() {
            let x = d.grid().x(i);
            if x.abs() <= 10.0 {
                assert!((s.values()[i] + x / 4.0).abs() < 1e-6, "x = {x}");
            }
        }
    }

    #[test]
    fn gaussian_fisher() {
        assert!((fisher_information(&gaussian(1.0, 1024)).unwrap() - 1.0).abs() < 1e-6);
        assert!((fisher_information(&gaussian(2.0, 1024)).unwrap() - 0.25).abs() < 1e-6);
    }

    #[test]
    fn rough_input_is_refused() {
        let u = unit_uniform(100);
        assert_eq!(score(&u), Err(Error::NonSmoothInput));
        assert_eq!(fisher_information(&u), Err(Error::NonSmoothInput));
    }

    #[test]
    fn score_has_mean_zero() {
        let g = GridSpec::new(-12.0, 12.0, 2048).unwrap();
        let u = make_density(&DistributionSpec::parse("uniform", &[], true).unwrap(), &g).unwrap();
        let d = ou_evolve(&u, 0.01).unwrap();
        let s = score(&d).unwrap();
        let mean: f64 = (0..g.points())
            .filter(|&i| s.valid()[i])
            .map(|i| g.weight(i) * s.values()[i] * d.values()[i])
            .sum();
        assert!(mean.abs() < 1e-6, "{mean}");
    }

    #[test]
    fn short_runs_are_masked() {
        let mut mask = vec![
            false, true, true, true, true, false, true, true, true, true, true, false,
        ];
        let vals: Vec<f64> = (0..12).map(|i| (i as f64).powi(2)).collect();
        let d = derivative(&vals, 1.0, &mut mask);
        assert!(!mask[1..5].iter().any(|&m| m));
        // quartic-exact stencils reproduce the derivative of x^2 everywhere in the run
        for k in 6..=10 {
            assert!(mask[k]);
            assert!((d[k] - 2.0 * k as f64).abs() < 1e-12, "{k}: {}", d[k]);
        }
    }

    #[test]
    fn report_csv_shape() {
        let r =
            FunctionalReport::from_columns(vec![1, 2], vec![1.0, 1.5], vec![2.0, 1.0], vec![1.0, 1.0], 1e-6);
        assert!(r.entropy_monotone && r.fisher_monotone);
        assert_eq!(r.to_csv(), "n,entropy,fisher,variance\n1,1,2,1\n2,1.5,1,1\n");
        let bad =
            FunctionalReport::from_columns(vec![1, 2], vec![1.0, 0.9], vec![1.0, 1.1], vec![1.0, 1.0], 1e-6);
        assert!(!bad.entropy_monotone && !bad.fisher_monotone);
        assert!((bad.worst_entropy_drop() - 0.1).abs() < 1e-12);
    }
}
