//! Parametric and tabulated base distributions.
//!
//! A [`DistributionSpec`] names a family and its parameters. Resolving it yields
//! an [`Analytic`] density with closed-form pdf, cdf and moments, optionally
//! composed with the affine map that standardizes it. The grid layer samples
//! these; the Monte Carlo layer draws from them.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::path::Path;

use libm::erfc;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};

/// Distribution family with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Gaussian {
        mean: f64,
        sd: f64,
    },
    Uniform {
        low: f64,
        high: f64,
    },
    Triangular {
        low: f64,
        mode: f64,
        high: f64,
    },
    /// Components are `(weight, mean, sd)`.
    GaussianMixture {
        components: Vec<(f64, f64, f64)>,
    },
    /// Support `[0, inf)`.
    Exponential {
        rate: f64,
    },
    /// `(x, density)` knots, linearly interpolated and renormalized.
    Tabulated {
        knots: Vec<(f64, f64)>,
    },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Gaussian { .. } => "gaussian",
            Family::Uniform { .. } => "uniform",
            Family::Triangular { .. } => "triangular",
            Family::GaussianMixture { .. } => "gaussian_mixture",
            Family::Exponential { .. } => "exponential",
            Family::Tabulated { .. } => "tabulated",
        }
    }

    /// Build a parametric family from its name and a flat parameter list.
    ///
    /// Missing parameters fall back to the canonical member of the family:
    /// `gaussian` (0, 1), `uniform` (0, 1), `triangular` (0, 0.5, 1),
    /// `gaussian_mixture` 0.5/0.5 at -2 and 2 with unit components, `exponential` (1).
    pub fn from_name(name: &str, params: &[f64]) -> Result<Family> {
        let family = match name.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => match params {
                [] => Family::Gaussian { mean: 0.0, sd: 1.0 },
                [mean, sd] => Family::Gaussian { mean: *mean, sd: *sd },
                _ => return Err(arity("gaussian", "mean, sd")),
            },
            "uniform" => match params {
                [] => Family::Uniform { low: 0.0, high: 1.0 },
                [low, high] => Family::Uniform {
                    low: *low,
                    high: *high,
                },
                _ => return Err(arity("uniform", "low, high")),
            },
            "triangular" => match params {
                [] => Family::Triangular {
                    low: 0.0,
                    mode: 0.5,
                    high: 1.0,
                },
                [low, mode, high] => Family::Triangular {
                    low: *low,
                    mode: *mode,
                    high: *high,
                },
                _ => return Err(arity("triangular", "low, mode, high")),
            },
            "gaussian_mixture" | "mixture" => {
                if params.is_empty() {
                    Family::GaussianMixture {
                        components: vec![(0.5, -2.0, 1.0), (0.5, 2.0, 1.0)],
                    }
                } else if params.len().is_multiple_of(3) {
                    Family::GaussianMixture {
                        components: params.chunks(3).map(|c| (c[0], c[1], c[2])).collect(),
                    }
                } else {
                    return Err(arity("gaussian_mixture", "weight, mean, sd triples"));
                }
            }
            "exponential" => match params {
                [] => Family::Exponential { rate: 1.0 },
                [rate] => Family::Exponential { rate: *rate },
                _ => return Err(arity("exponential", "rate")),
            },
            "tabulated" => {
                return Err(Error::InvalidParameters {
                    family: "tabulated",
                    reason: "tabulated densities are read from a file".into(),
                })
            }
            other => return Err(Error::UnknownFamily(other.to_string())),
        };
        family.validate()?;
        Ok(family)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, value: f64| {
            if value > 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(Error::NonPositiveParameter { name, value })
            }
        };
        match self {
            Family::Gaussian { mean, sd } => {
                finite("gaussian", *mean)?;
                positive("sd", *sd)
            }
            Family::Uniform { low, high } => {
                finite("uniform", *low)?;
                positive("width", high - low)
            }
            Family::Triangular { low, mode, high } => {
                finite("triangular", *low)?;
                positive("width", high - low)?;
                if mode < low || mode > high {
                    return Err(Error::InvalidParameters {
                        family: "triangular",
                        reason: format!("mode {mode} outside [{low}, {high}]"),
                    });
                }
                Ok(())
            }
            Family::GaussianMixture { components } => {
                if components.is_empty() {
                    return Err(Error::InvalidParameters {
                        family: "gaussian_mixture",
                        reason: "no components".into(),
                    });
                }
                let mut total = 0.0;
                for &(w, m, s) in components {
                    positive("weight", w)?;
                    finite("gaussian_mixture", m)?;
                    positive("sd", s)?;
                    total += w;
                }
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidParameters {
                        family: "gaussian_mixture",
                        reason: format!("weights sum to {total}, not 1"),
                    });
                }
                Ok(())
            }
            Family::Exponential { rate } => positive("rate", *rate),
            Family::Tabulated { knots } => {
                if knots.len() < 2 {
                    return Err(Error::InvalidParameters {
                        family: "tabulated",
                        reason: "need at least two knots".into(),
                    });
                }
                for w in knots.windows(2) {
                    if !(w[1].0 > w[0].0) {
                        return Err(Error::InvalidParameters {
                            family: "tabulated",
                            reason: "abscissae must be strictly increasing".into(),
                        });
                    }
                }
                if knots
                    .iter()
                    .any(|&(x, v)| !x.is_finite() || !(v >= 0.0) || !v.is_finite())
                {
                    return Err(Error::InvalidParameters {
                        family: "tabulated",
                        reason: "density values must be finite and nonnegative".into(),
                    });
                }
                let mass: f64 = knots
                    .windows(2)
                    .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
                    .sum();
                positive("tabulated mass", mass)
            }
        }
    }

    /// Whether the density has a continuous derivative everywhere.
    pub fn is_smooth(&self) -> bool {
        matches!(self, Family::Gaussian { .. } | Family::GaussianMixture { .. })
    }
}

fn arity(family: &'static str, expected: &str) -> Error {
    Error::InvalidParameters {
        family,
        reason: format!("expected parameters: {expected}"),
    }
}

fn finite(family: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameters {
            family,
            reason: format!("non-finite parameter {v}"),
        })
    }
}

/// What to build: a family plus whether to standardize it to mean 0, variance 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSpec {
    pub family: Family,
    pub standardize: bool,
}

impl DistributionSpec {
    pub fn new(family: Family, standardize: bool) -> Result<Self> {
        family.validate()?;
        Ok(Self { family, standardize })
    }

    pub fn parse(name: &str, params: &[f64], standardize: bool) -> Result<Self> {
        Self::new(Family::from_name(name, params)?, standardize)
    }

    pub fn gaussian(mean: f64, sd: f64) -> Self {
        Self {
            family: Family::Gaussian { mean, sd },
            standardize: false,
        }
    }

    pub fn uniform(low: f64, high: f64) -> Self {
        Self {
            family: Family::Uniform { low, high },
            standardize: false,
        }
    }

    pub fn standardized(mut self) -> Self {
        self.standardize = true;
        self
    }

    /// Read a two-column `x value` table; `#` starts a comment.
    pub fn tabulated_from_file(path: impl AsRef<Path>, standardize: bool) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::new(
            Family::Tabulated {
                knots: parse_table(&text)?,
            },
            standardize,
        )
    }

    /// The closed-form density this spec describes, standardized if requested
    /// (using the family's exact moments).
    pub fn resolve(&self) -> Result<Analytic> {
        self.family.validate()?;
        let raw = Analytic::new(self.family.clone());
        if self.standardize {
            let (m, v) = raw.moments();
            Ok(raw.affine(m, v.sqrt()))
        } else {
            Ok(raw)
        }
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.family.name())?;
        if self.standardize {
            write!(f, " (standardized)")?;
        }
        Ok(())
    }
}

/// Parse the tabulated-density text format.
pub fn parse_table(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut knots = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split_whitespace();
        let mut next = || -> Result<f64> {
            cols.next()
                .ok_or_else(|| Error::Parse(format!("line {}: expected two columns", lineno + 1)))?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
        };
        let x = next()?;
        let v = next()?;
        if cols.next().is_some() {
            return Err(Error::Parse(format!("line {}: expected two columns", lineno + 1)));
        }
        knots.push((x, v));
    }
    Ok(knots)
}

#[inline]
pub(crate) fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Standard normal cdf, accurate in both tails.
#[inline]
pub(crate) fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Positive nodes and weights of the 8-point Gauss-Legendre rule on [-1, 1].
const GAUSS_LEGENDRE_8: [(f64, f64); 4] = [
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

/// A density with closed-form pdf and cdf: the law of `(X - shift) / scale`
/// for `X` drawn from `family`.
#[derive(Debug, Clone, PartialEq)]
pub struct Analytic {
    family: Family,
    shift: f64,
    scale: f64,
    /// `(x, cdf)` at the knots of a tabulated family; empty otherwise.
    table_cdf: Vec<f64>,
    table_mass: f64,
}

impl Analytic {
    pub fn new(family: Family) -> Self {
        let (table_cdf, table_mass) = match &family {
            Family::Tabulated { knots } => {
                let mut acc = vec![0.0];
                let mut total = 0.0;
                for w in knots.windows(2) {
                    total += 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1);
                    acc.push(total);
                }
                (acc, total)
            }
            _ => (Vec::new(), 1.0),
        };
        Self {
            family,
            shift: 0.0,
            scale: 1.0,
            table_cdf,
            table_mass,
        }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Compose with `y -> (y - shift) / scale`.
    pub fn affine(&self, shift: f64, scale: f64) -> Analytic {
        Analytic {
            shift: self.shift + self.scale * shift,
            scale: self.scale * scale,
            ..self.clone()
        }
    }

    pub fn is_smooth(&self) -> bool {
        self.family.is_smooth()
    }

    fn raw_pdf(&self, x: f64) -> f64 {
        match &self.family {
            Family::Gaussian { mean, sd } => normal_pdf((x - mean) / sd) / sd,
            Family::Uniform { low, high } => {
                if x >= *low && x <= *high {
                    1.0 / (high - low)
                } else {
                    0.0
                }
            }
            Family::Triangular { low, mode, high } => {
                if x < *low || x > *high {
                    0.0
                } else if x < *mode {
                    2.0 * (x - low) / ((high - low) * (mode - low))
                } else if x > *mode {
                    2.0 * (high - x) / ((high - low) * (high - mode))
                } else {
                    2.0 / (high - low)
                }
            }
            Family::GaussianMixture { components } => components
                .iter()
                .map(|&(w, m, s)| w * normal_pdf((x - m) / s) / s)
                .sum(),
            Family::Exponential { rate } => {
                if x >= 0.0 {
                    rate * (-rate * x).exp()
                } else {
                    0.0
                }
            }
            Family::Tabulated { knots } => {
                let (first, last) = (knots[0].0, knots[knots.len() - 1].0);
                if x < first || x > last {
                    return 0.0;
                }
                let k = knots
                    .partition_point(|&(kx, _)| kx <= x)
                    .clamp(1, knots.len() - 1);
                let (x0, v0) = knots[k - 1];
                let (x1, v1) = knots[k];
                (v0 + (v1 - v0) * (x - x0) / (x1 - x0)) / self.table_mass
            }
        }
    }

    fn raw_cdf(&self, x: f64) -> f64 {
        match &self.family {
            Family::Gaussian { mean, sd } => normal_cdf((x - mean) / sd),
            Family::Uniform { low, high } => ((x - low) / (high - low)).clamp(0.0, 1.0),
            Family::Triangular { low, mode, high } => {
                if x <= *low {
                    0.0
                } else if x >= *high {
                    1.0
                } else if x <= *mode {
                    (x - low).powi(2) / ((high - low) * (mode - low))
                } else {
                    1.0 - (high - x).powi(2) / ((high - low) * (high - mode))
                }
            }
            Family::GaussianMixture { components } => components
                .iter()
                .map(|&(w, m, s)| w * normal_cdf((x - m) / s))
                .sum(),
            Family::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Family::Tabulated { knots } => {
                let (first, last) = (knots[0].0, knots[knots.len() - 1].0);
                if x <= first {
                    return 0.0;
                }
                if x >= last {
                    return 1.0;
                }
                let k = knots
                    .partition_point(|&(kx, _)| kx <= x)
                    .clamp(1, knots.len() - 1);
                let (x0, v0) = knots[k - 1];
                let (x1, v1) = knots[k];
                let d = x - x0;
                let slope = (v1 - v0) / (x1 - x0);
                (self.table_cdf[k - 1] + v0 * d + 0.5 * slope * d * d) / self.table_mass
            }
        }
    }

    /// Upper tail `P(X > x)` without cancellation where it matters.
    fn raw_sf(&self, x: f64) -> f64 {
        match &self.family {
            Family::Gaussian { mean, sd } => normal_cdf(-(x - mean) / sd),
            Family::GaussianMixture { components } => components
                .iter()
                .map(|&(w, m, s)| w * normal_cdf(-(x - m) / s))
                .sum(),
            Family::Exponential { rate } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-rate * x).exp()
                }
            }
            _ => 1.0 - self.raw_cdf(x),
        }
    }

    pub fn pdf(&self, y: f64) -> f64 {
        self.scale * self.raw_pdf(self.shift + self.scale * y)
    }

    pub fn cdf(&self, y: f64) -> f64 {
        self.raw_cdf(self.shift + self.scale * y)
    }

    pub fn sf(&self, y: f64) -> f64 {
        self.raw_sf(self.shift + self.scale * y)
    }

    /// Probability mass outside `[lower, upper]`.
    pub fn tail_mass(&self, lower: f64, upper: f64) -> f64 {
        self.cdf(lower) + self.sf(upper)
    }

    /// Points where the density jumps.
    pub fn jumps(&self) -> Vec<f64> {
        let raw = match &self.family {
            Family::Gaussian { .. } | Family::GaussianMixture { .. } => vec![],
            Family::Uniform { low, high } => vec![*low, *high],
            Family::Triangular { low, mode, high } => {
                let mut j = Vec::new();
                if mode == low {
                    j.push(*low);
                }
                if mode == high {
                    j.push(*high);
                }
                j
            }
            Family::Exponential { .. } => vec![0.0],
            Family::Tabulated { knots } => {
                let mut j = Vec::new();
                if knots[0].1 > 0.0 {
                    j.push(knots[0].0);
                }
                if knots[knots.len() - 1].1 > 0.0 {
                    j.push(knots[knots.len() - 1].0);
                }
                j
            }
        };
        raw.into_iter().map(|x| (x - self.shift) / self.scale).collect()
    }

    /// Points where the density or its derivative is discontinuous.
    pub fn breakpoints(&self) -> Vec<f64> {
        let raw = match &self.family {
            Family::Gaussian { .. } | Family::GaussianMixture { .. } => vec![],
            Family::Uniform { low, high } => vec![*low, *high],
            Family::Triangular { low, mode, high } => vec![*low, *mode, *high],
            Family::Exponential { .. } => vec![0.0],
            Family::Tabulated { knots } => knots.iter().map(|k| k.0).collect(),
        };
        let mut out: Vec<f64> = raw.into_iter().map(|x| (x - self.shift) / self.scale).collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Density at `x` of `e^{-t} Y + sqrt(1 - e^{-2t}) G`, with `Y` drawn from
    /// this law and `G` standard normal.
    ///
    /// Composite 8-point Gauss-Legendre in `y` over `+-KERNEL_SDS` kernel
    /// widths, with panels no wider than one kernel width and split at every
    /// breakpoint, so each panel integrand is smooth.
    pub fn ou_pdf(&self, x: f64, t: f64) -> f64 {
        const KERNEL_SDS: f64 = 13.0;
        let alpha = (-t).exp();
        let sigma = (-(-2.0 * t).exp_m1()).sqrt();
        let width = sigma / alpha;
        let centre = x / alpha;
        let (lo, hi) = (centre - KERNEL_SDS * width, centre + KERNEL_SDS * width);
        let mut cuts = vec![lo];
        cuts.extend(self.breakpoints().into_iter().filter(|&b| b > lo && b < hi));
        cuts.push(hi);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let panels = ((w[1] - w[0]) / width).ceil().max(1.0) as usize;
            let step = (w[1] - w[0]) / panels as f64;
            for p in 0..panels {
                let mid = w[0] + (p as f64 + 0.5) * step;
                for (node, weight) in GAUSS_LEGENDRE_8 {
                    for y in [mid - 0.5 * step * node, mid + 0.5 * step * node] {
                        let z = (x - alpha * y) / sigma;
                        total += 0.5 * step * weight * self.pdf(y) * normal_pdf(z);
                    }
                }
            }
        }
        total / sigma
    }

    /// Value representing the density on the cell `[y - h/2, y + h/2]`:
    /// the point value where the density is continuous, the cell average where
    /// the cell straddles a jump.
    pub fn cell_value(&self, y: f64, h: f64, jumps: &[f64]) -> f64 {
        let (a, b) = (y - 0.5 * h, y + 0.5 * h);
        if jumps.iter().any(|&j| j > a && j <= b) {
            ((self.cdf(b) - self.cdf(a)) / h).max(0.0)
        } else {
            self.pdf(y)
        }
    }

    /// Exact mean and variance of the (affinely mapped) law.
    pub fn moments(&self) -> (f64, f64) {
        let (m, v) = match &self.family {
            Family::Gaussian { mean, sd } => (*mean, sd * sd),
            Family::Uniform { low, high } => (0.5 * (low + high), (high - low).powi(2) / 12.0),
            Family::Triangular { low, mode, high } => {
                let (a, c, b) = (*low, *mode, *high);
                (
                    (a + b + c) / 3.0,
                    (a * a + b * b + c * c - a * b - a * c - b * c) / 18.0,
                )
            }
            Family::GaussianMixture { components } => {
                let mean: f64 = components.iter().map(|&(w, m, _)| w * m).sum();
                let second: f64 = components.iter().map(|&(w, m, s)| w * (s * s + m * m)).sum();
                (mean, second - mean * mean)
            }
            Family::Exponential { rate } => (1.0 / rate, 1.0 / (rate * rate)),
            Family::Tabulated { knots } => {
                // Simpson is exact on each segment: the integrands are cubic at most.
                let (mut m1, mut m2) = (0.0, 0.0);
                for w in knots.windows(2) {
                    let (x0, v0) = w[0];
                    let (x1, v1) = w[1];
                    let xm = 0.5 * (x0 + x1);
                    let vm = 0.5 * (v0 + v1);
                    let h6 = (x1 - x0) / 6.0;
                    m1 += h6 * (x0 * v0 + 4.0 * xm * vm + x1 * v1);
                    m2 += h6 * (x0 * x0 * v0 + 4.0 * xm * xm * vm + x1 * x1 * v1);
                }
                let mean = m1 / self.table_mass;
                (mean, m2 / self.table_mass - mean * mean)
            }
        };
        ((m - self.shift) / self.scale, v / (self.scale * self.scale))
    }

    /// Interval outside which each tail carries at most `eps / 2`.
    pub fn effective_support(&self, eps: f64) -> (f64, f64) {
        let (m, v) = self.moments();
        let sd = v.sqrt();
        let search = |inside: &dyn Fn(f64) -> bool, mut a: f64, mut b: f64| {
            // invariant: inside(a) is false, inside(b) is true
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if inside(mid) {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            b
        };
        let mut far = 1.0;
        while self.cdf(m - far * sd) > 0.5 * eps || self.sf(m + far * sd) > 0.5 * eps {
            far *= 2.0;
        }
        let lo = search(&|x| self.cdf(x) > 0.5 * eps, m - far * sd, m);
        let hi = search(&|x| self.sf(x) > 0.5 * eps, m + far * sd, m);
        (lo, hi)
    }

    /// Inverse cdf by bisection; used for families without a direct sampler.
    fn quantile(&self, p: f64) -> f64 {
        let (m, v) = self.moments();
        let sd = v.sqrt();
        let (mut lo, mut hi) = (m - 40.0 * sd, m + 40.0 * sd);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * (1.0 + mid.abs()) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// One draw of the affinely mapped law.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let x = match &self.family {
            Family::Gaussian { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + sd * z
            }
            Family::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            Family::Triangular { low, mode, high } => {
                let (a, c, b) = (*low, *mode, *high);
                let u: f64 = rng.random();
                let fc = (c - a) / (b - a);
                if u < fc {
                    a + (u * (b - a) * (c - a)).sqrt()
                } else {
                    b - ((1.0 - u) * (b - a) * (b - c)).sqrt()
                }
            }
            Family::GaussianMixture { components } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = components[components.len() - 1];
                for &c in components {
                    acc += c.0;
                    if u < acc {
                        pick = c;
                        break;
                    }
                }
                let z: f64 = StandardNormal.sample(rng);
                pick.1 + pick.2 * z
            }
            Family::Exponential { rate } => {
                let e: f64 = Exp1.sample(rng);
                e / rate
            }
            Family::Tabulated { .. } => {
                let u: f64 = rng.random();
                // quantile works in mapped coordinates; undo the map here
                let y = self.quantile(u);
                return y;
            }
        };
        (x - self.shift) / self.scale
    }
}
