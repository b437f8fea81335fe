//! Run configuration: defaults, a flat `key = value` file, and flag overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::family::GridPolicy;
use crate::semigroup::FlowSchedule;

/// One named base law of the verification battery.
#[derive(Debug, Clone, PartialEq)]
pub struct BatteryEntry {
    pub label: String,
    pub spec: DistributionSpec,
}

/// Gaussian, standardized uniform, standardized two-component mixture and
/// standardized exponential. The rough ones are mollified by `t_smooth`.
pub fn default_battery() -> Vec<BatteryEntry> {
    let entry = |label: &str, name: &str| BatteryEntry {
        label: label.into(),
        spec: DistributionSpec::parse(name, &[], true).expect("built-in family"),
    };
    vec![
        entry("gaussian", "gaussian"),
        entry("uniform", "uniform"),
        entry("mixture", "gaussian_mixture"),
        entry("exponential", "exponential"),
    ]
}

/// Named check thresholds and their defaults.
pub const TOLERANCES: &[(&str, f64)] = &[
    ("entropy_monotone", 1e-6),
    ("fisher_monotone", 1e-6),
    ("fisher_chain", 1e-6),
    ("strict_increase", 1e-4),
    ("dks_grid", 1e-3),
    ("contraction", 1e-6),
    ("linear_equality", 1e-6),
    ("score_projection", 1e-3),
    ("refinement_factor", 3.0),
    ("debruijn", 1e-3),
    ("uniform_gap", 1e-3),
    ("time_refinement", 2e-4),
    ("flow_difference", 1e-3),
    ("gaussian_fixed_point", 1e-6),
    ("scaling", 1e-5),
    ("cramer_rao", 1e-6),
    ("max_entropy", 1e-8),
    ("row_sum", 1e-8),
    ("rayleigh", 1e-12),
    ("calibration_hits", 95.0),
];

/// Flow schedule knobs: geometric times `t0 * ratio^i` up to `t_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleConfig {
    pub t0: f64,
    pub ratio: f64,
    pub t_max: f64,
    pub tail_tol: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            t0: 1e-3,
            ratio: 1.25,
            t_max: 30.0,
            tail_tol: 1e-5,
        }
    }
}

impl ScheduleConfig {
    pub fn build(&self) -> Result<FlowSchedule> {
        FlowSchedule::geometric(self.t0, self.ratio, self.t_max, self.tail_tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub battery: Vec<BatteryEntry>,
    pub n_max: usize,
    /// Nodes across the nominal window for the entropy and Fisher suites.
    pub grid_points: usize,
    /// Nodes for suites that build dense conditional-expectation kernels.
    pub kernel_points: usize,
    /// Nodes of the fine grid used as ground truth in refinement checks.
    pub reference_points: usize,
    /// Half-width of the nominal window in standard deviations of `S_{n_max}`.
    pub grid_span: f64,
    pub t_smooth: f64,
    pub tolerances: BTreeMap<String, f64>,
    pub schedule: ScheduleConfig,
    pub seed: u64,
    pub mc_samples: usize,
    pub mc_bins: usize,
    pub calibration_reps: usize,
    pub calibration_samples: usize,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            battery: default_battery(),
            n_max: 8,
            grid_points: 4096,
            kernel_points: 1024,
            reference_points: 16384,
            grid_span: 12.0,
            t_smooth: 0.01,
            tolerances: TOLERANCES.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            schedule: ScheduleConfig::default(),
            seed: 20_240_601,
            mc_samples: 1_000_000,
            mc_bins: 32,
            calibration_reps: 100,
            calibration_samples: 100_000,
            output_dir: PathBuf::from("clt-report"),
        }
    }
}

impl RunConfig {
    pub fn tol(&self, name: &str) -> f64 {
        self.tolerances[name]
    }

    pub fn policy(&self) -> GridPolicy {
        GridPolicy {
            points: self.grid_points,
            k_spread: self.grid_span,
            t_smooth: self.t_smooth,
            ..GridPolicy::default()
        }
    }

    pub fn kernel_policy(&self) -> GridPolicy {
        self.policy().with_points(self.kernel_points)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=16).contains(&self.n_max) {
            return Err(Error::Parse(format!(
                "n_max must lie in [1, 16], got {}",
                self.n_max
            )));
        }
        for (name, points) in [
            ("grid_points", self.grid_points),
            ("kernel_points", self.kernel_points),
            ("reference_points", self.reference_points),
        ] {
            if points < 64 || !points.is_power_of_two() {
                return Err(Error::Parse(format!(
                    "{name} must be a power of two >= 64, got {points}"
                )));
            }
        }
        if !(self.grid_span > 0.0) {
            return Err(Error::Parse(format!(
                "grid_span must be positive, got {}",
                self.grid_span
            )));
        }
        if !(self.t_smooth >= 0.0) {
            return Err(Error::Parse(format!(
                "t_smooth must be nonnegative, got {}",
                self.t_smooth
            )));
        }
        if let Some((k, v)) = self.tolerances.iter().find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::Parse(format!(
                "tolerance {k} must be nonnegative, got {v}"
            )));
        }
        if self.battery.is_empty() {
            return Err(Error::Parse("empty distribution battery".into()));
        }
        if self.mc_bins < 32 {
            return Err(Error::Parse(format!(
                "mc_bins must be at least 32, got {}",
                self.mc_bins
            )));
        }
        self.schedule.build()?;
        Ok(())
    }

    /// Apply `key = value` settings in order.
    pub fn apply(&mut self, settings: &[(String, String)]) -> Result<()> {
        let mut dist: Option<String> = None;
        let mut params: Option<Vec<f64>> = None;
        let mut standardize = true;
        let mut table: Option<PathBuf> = None;
        for (key, value) in settings {
            match key.as_str() {
                "dist" => {
                    dist = Some(value.clone());
                    table = None;
                }
                "params" => params = Some(parse_list(value)?),
                "standardize" => standardize = parse_bool(key, value)?,
                "table" => {
                    table = Some(PathBuf::from(value));
                    dist = None;
                }
                "n_max" => self.n_max = parse_num(key, value)?,
                "grid_points" => self.grid_points = parse_num(key, value)?,
                "kernel_points" => self.kernel_points = parse_num(key, value)?,
                "reference_points" => self.reference_points = parse_num(key, value)?,
                "grid_span" => self.grid_span = parse_num(key, value)?,
                "t_smooth" => self.t_smooth = parse_num(key, value)?,
                "seed" => self.seed = parse_num(key, value)?,
                "mc_samples" => self.mc_samples = parse_num(key, value)?,
                "mc_bins" => self.mc_bins = parse_num(key, value)?,
                "calibration_reps" => self.calibration_reps = parse_num(key, value)?,
                "calibration_samples" => self.calibration_samples = parse_num(key, value)?,
                "out" | "output_dir" => self.output_dir = PathBuf::from(value),
                "t0" => self.schedule.t0 = parse_num(key, value)?,
                "ratio" => self.schedule.ratio = parse_num(key, value)?,
                "t_max" => self.schedule.t_max = parse_num(key, value)?,
                "tail_tol" => self.schedule.tail_tol = parse_num(key, value)?,
                other => match other.strip_prefix("tol.") {
                    Some(name) if self.tolerances.contains_key(name) => {
                        self.tolerances.insert(name.to_string(), parse_num(key, value)?);
                    }
                    _ => return Err(Error::Parse(format!("unknown setting `{other}`"))),
                },
            }
        }
        // the later of `dist` and `table` wins
        let spec = match (dist.as_deref(), table) {
            (_, Some(path)) => Some(DistributionSpec::tabulated_from_file(path, standardize)?),
            (Some(name), None) => Some(DistributionSpec::parse(
                name,
                params.as_deref().unwrap_or(&[]),
                standardize,
            )?),
            (None, None) if params.is_some() => {
                return Err(Error::Parse("`params` given without `dist`".into()));
            }
            (None, None) => None,
        };
        if let Some(spec) = spec {
            self.battery = vec![BatteryEntry {
                label: spec.family.name().to_string(),
                spec,
            }];
        }
        Ok(())
    }
}

/// `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", no + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::Parse(format!("line {}: empty key", no + 1)));
        }
        out.push((k.replace('-', "_"), v.to_string()));
    }
    Ok(out)
}

pub fn read_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_text(&text)
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Parse(format!("bad value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Parse(format!("bad boolean `{value}` for `{key}`"))),
    }
}

pub fn parse_list(value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num("params", s))
        .collect()
}
