//! Sample-based estimators used to cross-check the grid pipeline.
//!
//! All randomness comes from `ChaCha20Rng` seeded with `seed_from_u64`, which
//! is portable and bit-reproducible. Confidence intervals use 20 contiguous
//! batches and a Student t quantile with 19 degrees of freedom.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::gamma::digamma;

use crate::density::{linear_convolution, ou_coefficients};
use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::numfmt::sig12;

/// Name of the generator, recorded in report files.
pub const RNG_NAME: &str = "ChaCha20Rng (rand_chacha, seed_from_u64)";

const BATCHES: usize = 20;
const MIN_ENTROPY_SAMPLES: usize = 10_000;
const MIN_FISHER_SAMPLES: usize = 1_000;
const MIN_BINS: usize = 32;

/// Draws from a distribution together with the seed that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub values: Vec<f64>,
    pub seed: u64,
    pub spec: DistributionSpec,
}

/// A point estimate with a 99% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateWithCI {
    pub point: f64,
    pub half_width_99: f64,
    pub n_samples: usize,
}

impl EstimateWithCI {
    pub fn contains(&self, x: f64) -> bool {
        (self.point - x).abs() <= self.half_width_99
    }

    /// Half-width at simultaneous 99% coverage over `comparisons` intervals
    /// (Bonferroni: each interval at level `1 - 0.01 / comparisons`).
    pub fn simultaneous_half_width(&self, comparisons: usize) -> f64 {
        self.half_width_99 * t_quantile(1.0 - 0.005 / comparisons.max(1) as f64) / t99()
    }
}

/// CSV rows `quantity,point,ci99,n_samples,seed` plus a generator comment.
pub fn estimates_csv(rows: &[(String, EstimateWithCI, u64)]) -> String {
    let mut out = String::from("quantity,point,ci99,n_samples,seed\n");
    for (name, e, seed) in rows {
        let _ = writeln!(
            out,
            "{name},{},{},{},{seed}",
            sig12(e.point),
            sig12(e.half_width_99),
            e.n_samples
        );
    }
    let _ = writeln!(out, "# rng={RNG_NAME}");
    out
}

/// `count` i.i.d. draws of `spec`.
pub fn sample(spec: &DistributionSpec, count: usize, seed: u64) -> Result<SampleSet> {
    let law = spec.resolve()?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let values = (0..count).map(|_| law.draw(&mut rng)).collect();
    Ok(SampleSet {
        values,
        seed,
        spec: spec.clone(),
    })
}

impl SampleSet {
    /// Apply the Ornstein-Uhlenbeck map for time `t` with fresh Gaussian noise
    /// from a separate stream of the same seed.
    pub fn ou_smoothed(&self, t: f64) -> Result<SampleSet> {
        if !(t >= 0.0) {
            return Err(Error::NegativeTime(t));
        }
        let (a, s) = ou_coefficients(t);
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(1);
        let values = self
            .values
            .iter()
            .map(|x| {
                let z: f64 = StandardNormal.sample(&mut rng);
                a * x + s * z
            })
            .collect();
        Ok(SampleSet {
            values,
            seed: self.seed,
            spec: self.spec.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean_variance(&self) -> (f64, f64) {
        let n = self.values.len() as f64;
        let mean = self.values.iter().sum::<f64>() / n;
        let var = self.values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }
}

/// Jointly drawn `(S_m, S_n)` pairs: `S_n` extends `S_m` by `n - m` fresh summands.
pub fn paired_sums(
    spec: &DistributionSpec,
    m: usize,
    n: usize,
    count: usize,
    seed: u64,
) -> Result<(SampleSet, SampleSet)> {
    if m == 0 || m > n {
        return Err(Error::IndexOutOfRange { m, n, n_max: n });
    }
    let law = spec.resolve()?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(count);
    let mut ys = Vec::with_capacity(count);
    for _ in 0..count {
        let mut s = 0.0;
        let mut at_m = 0.0;
        for k in 1..=n {
            s += law.draw(&mut rng);
            if k == m {
                at_m = s;
            }
        }
        xs.push(at_m);
        ys.push(s);
    }
    let wrap = |values| SampleSet {
        values,
        seed,
        spec: spec.clone(),
    };
    Ok((wrap(xs), wrap(ys)))
}

fn t_quantile(p: f64) -> f64 {
    StudentsT::new(0.0, 1.0, (BATCHES - 1) as f64)
        .expect("valid t distribution")
        .inverse_cdf(p)
}

fn t99() -> f64 {
    t_quantile(0.995)
}

fn batch_half_width(batch_values: &[f64]) -> f64 {
    let k = batch_values.len() as f64;
    let mean = batch_values.iter().sum::<f64>() / k;
    let var = batch_values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    t99() * (var / k).sqrt()
}

/// Spacing order used by the entropy estimator.
fn spacing_order(n: usize) -> usize {
    ((n as f64).powf(0.4).round() as usize).max(1)
}

/// Spacing entropy estimate on an already sorted sample.
///
/// Ebrahimi's boundary weights, plus the `ln(2m) - psi(2m)` correction for the
/// mean log of a normalized `2m`-spacing.
fn spacing_entropy(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    let m = spacing_order(n).min((n - 1) / 2).max(1);
    let mf = m as f64;
    let nf = n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let up = sorted[(i + m).min(n - 1)];
        let lo = sorted[i.saturating_sub(m)];
        let c = if i < m {
            1.0 + i as f64 / mf
        } else if i >= n - m {
            1.0 + (n - 1 - i) as f64 / mf
        } else {
            2.0
        };
        acc += (nf / (c * mf) * (up - lo)).ln();
    }
    acc / nf + (2.0 * mf).ln() - digamma(2.0 * mf)
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Differential entropy from an m-spacing estimator.
pub fn mc_entropy(s: &SampleSet) -> Result<EstimateWithCI> {
    let n = s.values.len();
    if n < MIN_ENTROPY_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_ENTROPY_SAMPLES,
            got: n,
        });
    }
    let point = spacing_entropy(&sorted(&s.values));
    let size = n / BATCHES;
    let batches: Vec<f64> = s.values[..size * BATCHES]
        .chunks(size)
        .map(|c| spacing_entropy(&sorted(c)))
        .collect();
    Ok(EstimateWithCI {
        point,
        half_width_99: batch_half_width(&batches),
        n_samples: n,
    })
}

/// Rule-of-thumb Gaussian kernel bandwidth `1.06 sd n^{-1/5}`.
pub fn default_bandwidth(s: &SampleSet) -> f64 {
    let (_, var) = s.mean_variance();
    1.06 * var.sqrt() * (s.values.len() as f64).powf(-0.2)
}

/// Fisher information as the sample mean of `(f'/f)^2` for a leave-one-out
/// Gaussian kernel estimate `f`.
///
/// Samples whose leave-one-out density is below the mass of
/// `TRIM_NEIGHBORS` kernels contribute zero; isolated tail points would
/// otherwise dominate. The half-width comes from 20 independent batch
/// estimates, each with its own kernel sum.
pub fn mc_fisher(s: &SampleSet, bandwidth: f64) -> Result<EstimateWithCI> {
    let n = s.values.len();
    if n < MIN_FISHER_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_FISHER_SAMPLES,
            got: n,
        });
    }
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(Error::BandwidthNonPositive(bandwidth));
    }
    let point = kde_fisher(&s.values, bandwidth);
    let size = n / BATCHES;
    let batches: Vec<f64> = s.values[..size * BATCHES]
        .chunks(size)
        .map(|c| kde_fisher(c, bandwidth))
        .collect();
    Ok(EstimateWithCI {
        point,
        half_width_99: batch_half_width(&batches),
        n_samples: n,
    })
}

const TRIM_NEIGHBORS: f64 = 5.0;

/// Kernel sums by linear binning onto a grid of spacing about `b / 40` and one
/// FFT convolution each.
fn kde_fisher(values: &[f64], b: f64) -> f64 {
    let n = values.len();
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, c), &x| {
            (a.min(x), c.max(x))
        });
    let lo = min - b;
    let span = max + b - lo;
    let points = ((span / (b / 40.0)) as usize + 2)
        .next_power_of_two()
        .clamp(1 << 12, 1 << 22);
    let h = span / (points - 1) as f64;

    let mut counts = vec![0.0; points];
    for &x in values {
        let pos = (x - lo) / h;
        let i = (pos.floor() as usize).min(points - 2);
        let frac = pos - i as f64;
        counts[i] += 1.0 - frac;
        counts[i + 1] += frac;
    }

    let reach = (10.0 * b / h).ceil() as usize;
    let offsets = || (0..=2 * reach).map(|k| (k as f64 - reach as f64) * h);
    let kernel: Vec<f64> = offsets().map(|d| (-0.5 * (d / b).powi(2)).exp()).collect();
    let dkernel: Vec<f64> = offsets()
        .map(|d| -d / (b * b) * (-0.5 * (d / b).powi(2)).exp())
        .collect();
    let norm = 1.0 / (n as f64 * b * (2.0 * std::f64::consts::PI).sqrt());
    let dens: Vec<f64> = linear_convolution(&counts, &kernel)[reach..reach + points]
        .iter()
        .map(|v| v * norm)
        .collect();
    let deriv: Vec<f64> = linear_convolution(&counts, &dkernel)[reach..reach + points]
        .iter()
        .map(|v| v * norm)
        .collect();

    let interp = |grid: &[f64], x: f64| {
        let pos = (x - lo) / h;
        let i = (pos.floor() as usize).min(points - 2);
        let frac = pos - i as f64;
        grid[i] * (1.0 - frac) + grid[i + 1] * frac
    };
    let loo = n as f64 / (n as f64 - 1.0);
    let floor = TRIM_NEIGHBORS * norm * loo;
    let total: f64 = values
        .iter()
        .map(|&x| {
            let f = (interp(&dens, x) - norm) * loo;
            let fp = interp(&deriv, x) * loo;
            if f > floor {
                (fp / f).powi(2)
            } else {
                0.0
            }
        })
        .sum();
    total / n as f64
}

/// Equal-mass bin index of every value.
fn equal_mass_bins(v: &[f64], bins: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0; v.len()];
    for (rank, &i) in order.iter().enumerate() {
        out[i] = rank * bins / v.len();
    }
    out
}

/// Least-squares fit of `t` on `v` separately within each bin: an orthogonal
/// projection onto functions of `v` that are affine on every bin.
fn binwise_affine(bin: &[usize], v: &[f64], t: &[f64], bins: usize) -> Vec<f64> {
    let mut n0 = vec![0.0; bins];
    let mut sv = vec![0.0; bins];
    let mut st = vec![0.0; bins];
    for i in 0..v.len() {
        n0[bin[i]] += 1.0;
        sv[bin[i]] += v[i];
        st[bin[i]] += t[i];
    }
    let mv: Vec<f64> = sv.iter().zip(&n0).map(|(s, n)| s / n).collect();
    let mt: Vec<f64> = st.iter().zip(&n0).map(|(s, n)| s / n).collect();
    let mut svv = vec![0.0; bins];
    let mut svt = vec![0.0; bins];
    for i in 0..v.len() {
        let b = bin[i];
        let dv = v[i] - mv[b];
        svv[b] += dv * dv;
        svt[b] += dv * (t[i] - mt[b]);
    }
    (0..v.len())
        .map(|i| {
            let b = bin[i];
            let slope = if svv[b] > 0.0 { svt[b] / svv[b] } else { 0.0 };
            mt[b] + slope * (v[i] - mv[b])
        })
        .collect()
}

fn ace(x: &[f64], y: &[f64], bins: usize, max_iter: usize) -> Result<f64> {
    const TOL: f64 = 1e-10;
    let n = x.len() as f64;
    let bx = equal_mass_bins(x, bins);
    let by = equal_mass_bins(y, bins);
    let standardize = |v: &mut Vec<f64>| {
        let mean = v.iter().sum::<f64>() / n;
        v.iter_mut().for_each(|a| *a -= mean);
        let sd = (v.iter().map(|a| a * a).sum::<f64>() / n).sqrt();
        v.iter_mut().for_each(|a| *a /= sd);
    };
    let mut theta = x.to_vec();
    standardize(&mut theta);
    let mut prev: Option<f64> = None;
    for _ in 0..max_iter {
        let phi = binwise_affine(&by, y, &theta, bins);
        let r2 = phi.iter().map(|a| a * a).sum::<f64>() / theta.iter().map(|a| a * a).sum::<f64>();
        if let Some(p) = prev {
            if (r2 - p).abs() < TOL {
                return Ok(r2);
            }
        }
        prev = Some(r2);
        theta = binwise_affine(&bx, x, &phi, bins);
        standardize(&mut theta);
    }
    Err(Error::NoConvergence(max_iter))
}

/// Squared maximal correlation of paired samples by alternating conditional
/// expectations over equal-mass bins.
pub fn mc_maxcorr(x: &SampleSet, y: &SampleSet, bins: usize, max_iter: usize) -> Result<EstimateWithCI> {
    let n = x.values.len();
    if n != y.values.len() {
        return Err(Error::InvalidParameters {
            family: "paired samples",
            reason: format!("lengths differ: {n} vs {}", y.values.len()),
        });
    }
    if bins < MIN_BINS {
        return Err(Error::InvalidParameters {
            family: "ace",
            reason: format!("need at least {MIN_BINS} bins, got {bins}"),
        });
    }
    let needed = BATCHES * bins * 10;
    if n < needed {
        return Err(Error::TooFewSamples { needed, got: n });
    }
    let point = ace(&x.values, &y.values, bins, max_iter)?;
    let size = n / BATCHES;
    let folds = (0..BATCHES)
        .map(|k| {
            let r = k * size..(k + 1) * size;
            ace(&x.values[r.clone()], &y.values[r], bins, max_iter)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EstimateWithCI {
        point,
        half_width_99: batch_half_width(&folds),
        n_samples: n,
    })
}
