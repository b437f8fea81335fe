//! Fisher information along the Ornstein-Uhlenbeck flow and the entropy gaps
//! it integrates to.

use std::fmt::Write as _;

use crate::density::{ou_coefficients, ou_evolve, rescale, GridDensity};
use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::family::{base_density, GridPolicy, IidSumFamily};
use crate::functionals::{fisher_information, moments};
use crate::numfmt::sig12;

const UNIT_VARIANCE_TOL: f64 = 1e-6;

/// Candidate evaluation times; a run stops at the first time where the
/// Fisher information is within `tail_tol` of 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSchedule {
    times: Vec<f64>,
    tail_tol: f64,
}

impl FlowSchedule {
    pub fn new(times: Vec<f64>, tail_tol: f64) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidSchedule("need at least two times".into()));
        }
        if !(times[0] > 0.0) {
            return Err(Error::InvalidSchedule(format!(
                "first time {} must be positive",
                times[0]
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidSchedule(
                "times must be finite and strictly increasing".into(),
            ));
        }
        if !(tail_tol > 0.0) {
            return Err(Error::InvalidSchedule(format!(
                "tail tolerance {tail_tol} must be positive"
            )));
        }
        Ok(Self { times, tail_tol })
    }

    /// `t0 * ratio^i` up to `t_max`.
    pub fn geometric(t0: f64, ratio: f64, t_max: f64, tail_tol: f64) -> Result<Self> {
        if !(ratio > 1.0) || !(t0 > 0.0) || !(t_max > t0) {
            return Err(Error::InvalidSchedule(format!(
                "need t0 > 0, ratio > 1, t_max > t0 (got {t0}, {ratio}, {t_max})"
            )));
        }
        let mut times = vec![t0];
        let mut i = 1;
        loop {
            let t = t0 * ratio.powi(i);
            if t > t_max * (1.0 + 1e-12) {
                break;
            }
            times.push(t);
            i += 1;
        }
        Self::new(times, tail_tol)
    }

    /// Same span with the log-time step halved.
    pub fn refined(&self) -> Self {
        let mut times = Vec::with_capacity(2 * self.times.len());
        for w in self.times.windows(2) {
            times.push(w[0]);
            times.push((w[0] * w[1]).sqrt());
        }
        times.push(*self.times.last().expect("nonempty"));
        Self {
            times,
            tail_tol: self.tail_tol,
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }

    pub fn cutoff(&self) -> f64 {
        *self.times.last().expect("nonempty")
    }
}

impl Default for FlowSchedule {
    fn default() -> Self {
        Self::geometric(1e-3, 1.25, 30.0, 1e-5).expect("valid default schedule")
    }
}

/// Fisher information sampled along the flow, and its integrated excess over 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace {
    pub times: Vec<f64>,
    pub fisher_values: Vec<f64>,
    pub entropy_gap: f64,
}

impl FlowTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,fisher\n");
        for (t, j) in self.times.iter().zip(&self.fisher_values) {
            let _ = writeln!(out, "{},{}", sig12(*t), sig12(*j));
        }
        let _ = writeln!(out, "# entropy_gap={}", sig12(self.entropy_gap));
        out
    }
}

/// `int_0^inf (J(t) - 1) dt` from samples at increasing times.
///
/// Trapezoid in `log t` between samples; on `[0, t_0]` the Fisher information
/// is extrapolated as a power law fitted to the first two samples (a constant
/// for smooth inputs, `t^{-1/2}`-like after a jump); past the last sample the
/// excess is continued as a decaying exponential.
pub fn integrate_excess(times: &[f64], fisher: &[f64]) -> f64 {
    assert!(times.len() >= 2 && times.len() == fisher.len());
    let (t0, t1) = (times[0], times[1]);
    let (j0, j1) = (fisher[0], fisher[1]);
    let p = if j0 > 0.0 && j1 > 0.0 {
        (-(j1 / j0).ln() / (t1 / t0).ln()).clamp(0.0, 0.9)
    } else {
        0.0
    };
    let head = j0 * t0 / (1.0 - p) - t0;

    let mut body = 0.0;
    for i in 1..times.len() {
        let du = (times[i] / times[i - 1]).ln();
        let a = (fisher[i - 1] - 1.0) * times[i - 1];
        let b = (fisher[i] - 1.0) * times[i];
        body += 0.5 * du * (a + b);
    }

    let k = times.len() - 1;
    let (g_prev, g_last) = (fisher[k - 1] - 1.0, fisher[k] - 1.0);
    let tail = if g_last > 0.0 && g_prev > g_last {
        let rate = (g_prev / g_last).ln() / (times[k] - times[k - 1]);
        g_last / rate
    } else {
        0.0
    };
    head + body + tail
}

fn check_unit_variance(d: &GridDensity) -> Result<()> {
    let mass = d.mass();
    if (mass - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized(mass));
    }
    let (_, var) = moments(d);
    if (var - 1.0).abs() > UNIT_VARIANCE_TOL {
        return Err(Error::VarianceNotUnit(var));
    }
    Ok(())
}

/// `J(Z_t)` for the evolutes `Z_t` of a unit-variance density `d`.
pub fn fisher_along_flow(d: &GridDensity, schedule: &FlowSchedule) -> Result<FlowTrace> {
    check_unit_variance(d)?;
    let mut times = Vec::new();
    let mut fisher = Vec::new();
    for &t in schedule.times() {
        let j = fisher_information(&ou_evolve(d, t)?)?;
        times.push(t);
        fisher.push(j);
        if (j - 1.0).abs() < schedule.tail_tol() && times.len() >= 2 {
            let entropy_gap = integrate_excess(&times, &fisher);
            return Ok(FlowTrace {
                times,
                fisher_values: fisher,
                entropy_gap,
            });
        }
    }
    Err(Error::TailNotConverged {
        last: *fisher.last().unwrap_or(&f64::NAN),
        tol: schedule.tail_tol(),
    })
}

/// `h(G) - h(d)` for standard normal `G`, by integrating along the flow.
pub fn debruijn_gap(d: &GridDensity, schedule: &FlowSchedule) -> Result<f64> {
    Ok(fisher_along_flow(d, schedule)?.entropy_gap)
}

/// Fisher information of two standardized sums followed along the flow.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowComparison {
    pub m: usize,
    pub n: usize,
    pub times: Vec<f64>,
    pub fisher_m: Vec<f64>,
    pub fisher_n: Vec<f64>,
    /// `J((U_n)_t) <= J((U_m)_t) + 1e-6` at every time.
    pub fisher_dominance: bool,
    /// Integrated difference, approximating `h(U_n) - h(U_m)`.
    pub entropy_difference: f64,
}

/// Follow `U_m` and `U_n` of the base described by `spec` along the flow.
///
/// The evolute of a standardized sum of i.i.d. variables is the standardized
/// sum of i.i.d. evolutes at the same time, so each time step evolves the
/// base and re-forms the sums.
pub fn monotonicity_via_flow(
    spec: &DistributionSpec,
    m: usize,
    n: usize,
    schedule: &FlowSchedule,
    policy: &GridPolicy,
) -> Result<FlowComparison> {
    let base = base_density(spec, n.max(1), policy)?;
    monotonicity_from_base(&base, m, n, schedule, policy)
}

pub fn monotonicity_from_base(
    base: &GridDensity,
    m: usize,
    n: usize,
    schedule: &FlowSchedule,
    policy: &GridPolicy,
) -> Result<FlowComparison> {
    if m == 0 || m > n {
        return Err(Error::IndexOutOfRange { m, n, n_max: n });
    }
    let profile = flow_profile(base, n, schedule, policy)?;
    let jm = profile.fisher[m - 1].clone();
    let jn = profile.fisher[n - 1].clone();
    let fisher_dominance = jm.iter().zip(&jn).all(|(a, b)| *b <= *a + 1e-6);
    let entropy_difference = if m == n {
        0.0
    } else {
        integrate_excess(&profile.times, &jm) - integrate_excess(&profile.times, &jn)
    };
    Ok(FlowComparison {
        m,
        n,
        times: profile.times,
        fisher_m: jm,
        fisher_n: jn,
        fisher_dominance,
        entropy_difference,
    })
}

/// `J((U_k)_t)` for `k = 1..=n_max` along the flow.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowProfile {
    pub times: Vec<f64>,
    /// `fisher[k - 1][i]` is the value for `U_k` at `times[i]`.
    pub fisher: Vec<Vec<f64>>,
}

impl FlowProfile {
    /// Largest `J((U_n)_t) - J((U_m)_t)` over `m < n` and all times.
    pub fn worst_dominance_excess(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for n in 1..self.fisher.len() {
            for m in 0..n {
                for (a, b) in self.fisher[m].iter().zip(&self.fisher[n]) {
                    worst = worst.max(b - a);
                }
            }
        }
        worst
    }

    /// Integrated difference approximating `h(U_n) - h(U_m)`.
    pub fn entropy_difference(&self, m: usize, n: usize) -> f64 {
        integrate_excess(&self.times, &self.fisher[m - 1])
            - integrate_excess(&self.times, &self.fisher[n - 1])
    }
}

/// Follow every standardized sum of a unit-variance base along the flow until
/// all of them are within the schedule's tail tolerance of 1.
///
/// Schedule times whose Gaussian kernel is narrower than the grid step are
/// skipped; the integration head covers them.
pub fn flow_profile(
    base: &GridDensity,
    n_max: usize,
    schedule: &FlowSchedule,
    policy: &GridPolicy,
) -> Result<FlowProfile> {
    if n_max == 0 {
        return Err(Error::IndexOutOfRange { m: 0, n: 0, n_max });
    }
    check_unit_variance(base)?;
    let mut times = Vec::new();
    let mut fisher = vec![Vec::new(); n_max];
    let step = base.grid().step();
    let resolved = schedule.times().iter().copied().filter(|&t| {
        let (_, sigma) = ou_coefficients(t);
        sigma >= step
    });
    for t in resolved {
        let evolved = ou_evolve(base, t)?;
        let fam = IidSumFamily::from_base(&evolved, n_max, policy)?;
        let mut settled = true;
        for k in 1..=n_max {
            let j = fisher_information(&rescale(fam.sum(k)?, 1.0 / (k as f64).sqrt())?)?;
            settled &= (j - 1.0).abs() < schedule.tail_tol();
            fisher[k - 1].push(j);
        }
        times.push(t);
        if settled && times.len() >= 2 {
            return Ok(FlowProfile { times, fisher });
        }
    }
    Err(Error::TailNotConverged {
        last: fisher.last().and_then(|v| v.last()).copied().unwrap_or(f64::NAN),
        tol: schedule.tail_tol(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::make_density;
    use crate::functionals::entropy;
    use crate::grid::GridSpec;
    use std::f64::consts::{E, PI};

    fn h_gauss() -> f64 {
        0.5 * (2.0 * PI * E).ln()
    }

    #[test]
    fn schedule_validation() {
        assert!(FlowSchedule::new(vec![0.0, 1.0], 1e-5).is_err());
        assert!(FlowSchedule::new(vec![1.0, 0.5], 1e-5).is_err());
        assert!(FlowSchedule::geometric(1e-3, 1.0, 10.0, 1e-5).is_err());
        let s = FlowSchedule::default();
        assert_eq!(s.times()[0], 1e-3);
        assert!((s.times()[1] / s.times()[0] - 1.25).abs() < 1e-12);
        let r = s.refined();
        assert_eq!(r.times().len(), 2 * s.times().len() - 1);
        assert_eq!(r.cutoff(), s.cutoff());
    }

    #[test]
    fn constant_excess_integrates_exactly() {
        // J - 1 = e^{-2t}: integral 1/2
        let s = FlowSchedule::geometric(1e-4, 1.05, 12.0, 1e-5).unwrap();
        let js: Vec<f64> = s.times().iter().map(|t| 1.0 + (-2.0 * t).exp()).collect();
        let v = integrate_excess(s.times(), &js);
        assert!((v - 0.5).abs() < 1e-4, "{v}");
    }

    #[test]
    fn gaussian_is_a_fixed_point() {
        let g = GridSpec::new(-12.0, 12.0, 2048).unwrap();
        let d = make_density(&DistributionSpec::gaussian(0.0, 1.0), &g).unwrap();
        let trace = fisher_along_flow(&d, &FlowSchedule::default()).unwrap();
        assert!(trace.fisher_values.iter().all(|j| (j - 1.0).abs() < 1e-6));
        assert!(trace.entropy_gap.abs() < 1e-6);
        assert!(trace.to_csv().starts_with("t,fisher\n0.001,"));
        assert!(trace.to_csv().contains("# entropy_gap="));
    }

    #[test]
    fn variance_is_checked() {
        let g = GridSpec::new(-12.0, 12.0, 1024).unwrap();
        let d = make_density(&DistributionSpec::gaussian(0.0, 1.5), &g).unwrap();
        assert!(matches!(
            fisher_along_flow(&d, &FlowSchedule::default()),
            Err(Error::VarianceNotUnit(_))
        ));
    }

    #[test]
    fn short_schedule_does_not_converge() {
        let g = GridSpec::new(-12.0, 12.0, 2048).unwrap();
        let spec = DistributionSpec::parse("mixture", &[], true).unwrap();
        let d = make_density(&spec, &g).unwrap();
        let s = FlowSchedule::geometric(1e-3, 1.25, 0.1, 1e-5).unwrap();
        assert!(matches!(
            fisher_along_flow(&d, &s),
            Err(Error::TailNotConverged { .. })
        ));
    }

    #[test]
    fn mixture_gap_matches_entropy() {
        let g = GridSpec::new(-12.0, 12.0, 4096).unwrap();
        let spec = DistributionSpec::parse("mixture", &[], true).unwrap();
        let d = make_density(&spec, &g).unwrap();
        let trace = fisher_along_flow(&d, &FlowSchedule::default()).unwrap();
        assert!(trace.fisher_values.iter().all(|&j| j >= 1.0 - 1e-6));
        let direct = h_gauss() - entropy(&d).unwrap();
        assert!(
            (trace.entropy_gap - direct).abs() < 1e-3,
            "{} vs {direct}",
            trace.entropy_gap
        );
    }

    #[test]
    fn equal_indices_give_zero_difference() {
        let spec = DistributionSpec::parse("mixture", &[], true).unwrap();
        let policy = GridPolicy::default().with_points(1024);
        let c = monotonicity_via_flow(&spec, 2, 2, &FlowSchedule::default(), &policy).unwrap();
        assert_eq!(c.entropy_difference, 0.0);
        assert!(c.fisher_dominance);
    }
}
