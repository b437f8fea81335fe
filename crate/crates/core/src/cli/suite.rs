//! Verification suites. Each one appends checks and report files to a [`Report`].

use std::f64::consts::{E, PI};
use std::fmt::Write as _;

use crate::cli::config::{BatteryEntry, RunConfig};
use crate::cli::report::Report;
use crate::correlation::{
    cond_exp, contraction_ratio, maximal_correlation_with, projection_error_against, theta_battery,
    verify_score_projection, CondExpKernel,
};
use crate::density::{make_density, rescale, GridDensity};
use crate::dist::{DistributionSpec, Family};
use crate::error::Result;
use crate::family::{base_density, IidSumFamily};
use crate::functionals::{entropy, fisher_chain_excess, fisher_information, report};
use crate::grid::GridSpec;
use crate::numfmt::sig12;
use crate::oracle::{
    default_bandwidth, estimates_csv, mc_entropy, mc_fisher, mc_maxcorr, paired_sums, sample, EstimateWithCI,
    SampleSet,
};
use crate::semigroup::{debruijn_gap, fisher_along_flow, flow_profile};

const POWER_MAX_ITER: usize = 10_000;
const POWER_TOL: f64 = 1e-12;
/// Largest index used by the conditional-expectation suites.
const KERNEL_N_MAX: usize = 5;
const MC_PAIRS: [(usize, usize); 3] = [(1, 2), (2, 3), (2, 5)];
const PROJECTION_PAIRS: [(usize, usize); 2] = [(1, 2), (2, 3)];
const ACE_MAX_ITER: usize = 1_000;
/// Flow time of the smoothed uniform used to compare grid and sample Fisher information.
const FISHER_CROSS_CHECK_T: f64 = 0.05;
/// Half-cells of the raw uniform lattice in the closed-form de Bruijn check.
const UNIFORM_HALF_CELLS: usize = 500;

fn h_gauss() -> f64 {
    0.5 * (2.0 * PI * E).ln()
}

fn std_sum(fam: &IidSumFamily, k: usize) -> Result<GridDensity> {
    rescale(fam.sum(k)?, 1.0 / (k as f64).sqrt())
}

fn is_gaussian(e: &BatteryEntry) -> bool {
    matches!(e.spec.family, Family::Gaussian { .. })
}

fn is_uniform(e: &BatteryEntry) -> bool {
    matches!(e.spec.family, Family::Uniform { .. })
}

/// Entropy and Fisher information of `U_1..U_{n_max}`: monotonicity, the
/// Fisher chain, the Gaussian fixed point, scaling, Cramer-Rao and maximum entropy.
pub fn functionals_suite(cfg: &RunConfig, r: &mut Report) {
    for e in &cfg.battery {
        r.suite(&format!("functionals/{}", e.label), |r| {
            functionals_entry(cfg, e, r)
        });
    }
}

fn functionals_entry(cfg: &RunConfig, e: &BatteryEntry, r: &mut Report) -> Result<()> {
    let name = |check: &str| format!("{check}/{}", e.label);
    let fam = IidSumFamily::build(&e.spec, cfg.n_max, &cfg.policy())?;
    let rep = report(&fam, cfg.tol("entropy_monotone"))?;
    r.file(format!("functionals_{}.csv", e.label), rep.to_csv());
    println!(
        "{}: entropy monotone {}, fisher monotone {}",
        e.label,
        rep.worst_entropy_drop() <= cfg.tol("entropy_monotone"),
        rep.worst_fisher_rise() <= cfg.tol("fisher_monotone")
    );
    r.at_most(
        name("entropy_monotone"),
        rep.worst_entropy_drop(),
        cfg.tol("entropy_monotone"),
    );
    r.at_most(
        name("fisher_monotone"),
        rep.worst_fisher_rise(),
        cfg.tol("fisher_monotone"),
    );
    r.at_most(
        name("fisher_chain"),
        fisher_chain_excess(&fam)?,
        cfg.tol("fisher_chain"),
    );
    if !is_gaussian(e) && cfg.n_max >= 2 {
        r.at_least(
            name("strict_increase"),
            rep.entropy_std[1] - rep.entropy_std[0],
            cfg.tol("strict_increase"),
        );
    }
    if is_gaussian(e) {
        let (_, var) = e.spec.resolve()?.moments();
        let h_target = 0.5 * (2.0 * PI * E * var).ln();
        let dh = rep
            .entropy_std
            .iter()
            .map(|h| (h - h_target).abs())
            .fold(0.0, f64::max);
        let dj = rep
            .fisher_std
            .iter()
            .map(|j| (j * var - 1.0).abs())
            .fold(0.0, f64::max);
        r.at_most(name("gaussian_entropy"), dh, cfg.tol("gaussian_fixed_point"));
        r.at_most(name("gaussian_fisher"), dj, cfg.tol("gaussian_fixed_point"));
    }
    let mut cr_gap = f64::NEG_INFINITY;
    let mut me_excess = f64::NEG_INFINITY;
    for i in 0..rep.n_values.len() {
        let v = rep.variance_std[i];
        cr_gap = cr_gap.max(1.0 - rep.fisher_std[i] * v);
        me_excess = me_excess.max(rep.entropy_std[i] - 0.5 * (2.0 * PI * E * v).ln());
    }
    r.at_most(name("cramer_rao"), cr_gap, cfg.tol("cramer_rao"));
    r.at_most(name("max_entropy"), me_excess, cfg.tol("max_entropy"));

    let base = fam.sum(1)?;
    let (h0, j0) = (entropy(base)?, fisher_information(base)?);
    let mut scaling = String::from("alpha,entropy_shift,log_alpha,fisher_ratio\n");
    let (mut dh, mut dj) = (0.0f64, 0.0f64);
    for alpha in [0.5, 2.0] {
        let scaled = rescale(base, alpha)?;
        let shift = entropy(&scaled)? - h0;
        let ratio = alpha * alpha * fisher_information(&scaled)? / j0;
        dh = dh.max((shift - alpha.ln()).abs() / h0.abs().max(1.0));
        dj = dj.max((ratio - 1.0).abs());
        let _ = writeln!(
            scaling,
            "{},{},{},{}",
            alpha,
            sig12(shift),
            sig12(alpha.ln()),
            sig12(ratio)
        );
    }
    r.file(format!("scaling_{}.csv", e.label), scaling);
    r.at_most(name("scaling_entropy"), dh, cfg.tol("scaling"));
    r.at_most(name("scaling_fisher"), dj, cfg.tol("scaling"));

    let shifted = base.shifted_by_steps(7);
    r.at_most(name("translation"), (entropy(&shifted)? - h0).abs(), 1e-8);
    Ok(())
}

/// Conditional-expectation kernels for `1 <= m <= n <= 5`: maximal
/// correlation, contraction over the test battery, and operator sanity.
pub fn correlation_suite(cfg: &RunConfig, r: &mut Report) {
    let mut dks = String::from("dist,m,n,r2,target,abs_error,iterations,cross_check_r2\n");
    let mut contraction = String::from("dist,m,n,theta,ratio,bound\n");
    for e in &cfg.battery {
        r.suite(&format!("correlation/{}", e.label), |r| {
            correlation_entry(cfg, e, r, &mut dks, &mut contraction)
        });
    }
    r.file("correlation.csv", dks);
    r.file("contraction.csv", contraction);
}

fn correlation_entry(
    cfg: &RunConfig,
    e: &BatteryEntry,
    r: &mut Report,
    dks: &mut String,
    contraction: &mut String,
) -> Result<()> {
    let name = |check: &str| format!("{check}/{}", e.label);
    let n_top = cfg.n_max.min(KERNEL_N_MAX);
    let fam = IidSumFamily::build(&e.spec, n_top, &cfg.kernel_policy())?;
    let fisher_s: Vec<f64> = if fam.is_smooth() {
        fam.sums().iter().map(fisher_information).collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let (mut dks_err, mut cross_err, mut rayleigh_drop, mut row_err) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut excess, mut linear_err, mut tower_err, mut jensen) =
        (f64::NEG_INFINITY, 0.0f64, 0.0f64, f64::NEG_INFINITY);
    let mut score_chain = 0.0f64;
    for n in 1..=n_top {
        for m in 1..=n {
            let k = CondExpKernel::build(&fam, m, n)?;
            row_err = k
                .row_sums()
                .iter()
                .map(|s| (s - 1.0).abs())
                .fold(row_err, f64::max);
            let mc = maximal_correlation_with(&k, POWER_MAX_ITER, POWER_TOL)?.require_converged()?;
            let target = m as f64 / n as f64;
            dks_err = dks_err.max((mc.r2 - target).abs());
            cross_err = cross_err.max((mc.cross_check_r2 - mc.r2).abs());
            for seq in [&mc.rayleigh, &mc.cross_check_rayleigh] {
                rayleigh_drop = seq.windows(2).map(|w| w[0] - w[1]).fold(rayleigh_drop, f64::max);
            }
            let _ = writeln!(
                dks,
                "{},{m},{n},{},{},{},{},{}",
                e.label,
                sig12(mc.r2),
                sig12(target),
                sig12((mc.r2 - target).abs()),
                mc.iterations,
                sig12(mc.cross_check_r2)
            );
            if m == n {
                continue;
            }
            for (theta_name, theta) in theta_battery(&fam, m)? {
                let ratio = contraction_ratio(&k, &theta)?;
                excess = excess.max(ratio - target);
                if theta_name == "poly1" {
                    linear_err = linear_err.max((ratio - target).abs());
                }
                if theta_name == "score" {
                    let reproduced = ratio * fisher_s[m - 1] / fisher_s[n - 1];
                    score_chain = score_chain.max((reproduced - 1.0).abs());
                }
                let projected = cond_exp(&k, &theta)?;
                tower_err = tower_err.max((k.mean_n(&projected)? - k.mean_m(&theta)?).abs());
                jensen = jensen.max(k.second_moment_n(&projected)? - k.second_moment_m(&theta)?);
                let _ = writeln!(
                    contraction,
                    "{},{m},{n},{theta_name},{},{}",
                    e.label,
                    sig12(ratio),
                    sig12(target)
                );
            }
        }
    }
    r.at_most(name("dks_grid"), dks_err, cfg.tol("dks_grid"));
    r.at_most(name("power_cross_check"), cross_err, 2.0 * POWER_TOL);
    r.at_most(name("rayleigh_monotone"), rayleigh_drop, cfg.tol("rayleigh"));
    r.at_most(name("kernel_row_sums"), row_err, cfg.tol("row_sum"));
    if n_top >= 2 {
        r.at_most(name("contraction"), excess, cfg.tol("contraction"));
        r.at_most(
            name("contraction_linear_equality"),
            linear_err,
            cfg.tol("linear_equality"),
        );
        r.at_most(name("tower_property"), tower_err, 1e-8);
        r.at_most(name("jensen"), jensen, 1e-9);
        if fam.is_smooth() {
            r.at_most(name("score_contraction_chain"), score_chain, 1e-5);
        }
    }
    Ok(())
}

/// Sample-based maximal correlation of `(S_m, S_n)` for a few pairs.
pub fn mc_maxcorr_suite(cfg: &RunConfig, r: &mut Report) {
    let mut rows = Vec::new();
    for (idx, e) in cfg.battery.iter().enumerate() {
        for (p, &(m, n)) in MC_PAIRS.iter().enumerate() {
            let seed = cfg.seed.wrapping_add(1000 * idx as u64 + p as u64);
            r.suite(&format!("mc_maxcorr/{}/{m}_{n}", e.label), |r| {
                let (x, y) = paired_sums(&e.spec, m, n, cfg.mc_samples, seed)?;
                let est = mc_maxcorr(&x, &y, cfg.mc_bins, ACE_MAX_ITER)?;
                let target = m as f64 / n as f64;
                r.at_most(
                    format!("dks_mc/{}/{m}_{n}", e.label),
                    (est.point - target).abs(),
                    est.half_width_99,
                );
                rows.push((format!("r2_{}_{m}_{n}", e.label), est, seed));
                Ok(())
            });
        }
    }
    r.file("mc_maxcorr.csv", estimates_csv(&rows));
}

/// Checks `rho_{S_n} = E[rho_{S_m}(S_m) | S_n]` on the kernel grid, and
/// its convergence towards a fine-grid reference score under grid doubling.
pub fn score_suite(cfg: &RunConfig, pairs: &[(usize, usize)], r: &mut Report) {
    let mut csv = String::from("dist,m,n,points,weighted_sup,l2,ref_error,ref_error_doubled,ratio\n");
    for e in &cfg.battery {
        r.suite(&format!("scorecheck/{}", e.label), |r| {
            score_entry(cfg, e, pairs, r, &mut csv)
        });
    }
    r.file("score_projection.csv", csv);
}

fn score_entry(
    cfg: &RunConfig,
    e: &BatteryEntry,
    pairs: &[(usize, usize)],
    r: &mut Report,
    csv: &mut String,
) -> Result<()> {
    let n_top = pairs.iter().map(|p| p.1).max().unwrap_or(1);
    let policy = |points| cfg.kernel_policy().with_points(points);
    let coarse = IidSumFamily::build(&e.spec, n_top, &policy(cfg.kernel_points))?;
    if !coarse.is_smooth() {
        println!("{}: rough base, score projection skipped", e.label);
        return Ok(());
    }
    let fine = IidSumFamily::build(&e.spec, n_top, &policy(2 * cfg.kernel_points))?;
    let reference = IidSumFamily::build(&e.spec, n_top, &policy(cfg.reference_points))?;
    for &(m, n) in pairs {
        let own = verify_score_projection(&coarse, m, n)?;
        let e1 = projection_error_against(&coarse, m, n, reference.sum(n)?)?.weighted_sup;
        let e2 = projection_error_against(&fine, m, n, reference.sum(n)?)?.weighted_sup;
        let _ = writeln!(
            csv,
            "{},{m},{n},{},{},{},{},{},{}",
            e.label,
            coarse.grid().points(),
            sig12(own.weighted_sup),
            sig12(own.l2),
            sig12(e1),
            sig12(e2),
            sig12(e1 / e2)
        );
        r.at_most(
            format!("score_projection/{}/{m}_{n}", e.label),
            own.weighted_sup,
            cfg.tol("score_projection"),
        );
        r.at_least(
            format!("score_refinement/{}/{m}_{n}", e.label),
            e1 / e2,
            cfg.tol("refinement_factor"),
        );
    }
    Ok(())
}

/// The standardized uniform on a lattice whose cell boundaries fall on
/// `+-sqrt(3)`; its variance is `1 - h^2 / 12`.
pub fn lattice_standard_uniform(half_cells: usize) -> Result<GridDensity> {
    let edge = 3f64.sqrt();
    let h = edge / (half_cells as f64 + 0.5);
    let points = (2 * half_cells + 1).next_power_of_two().max(64) * 4;
    let grid = GridSpec::with_step(-((points / 2) as f64) * h, h, points)?;
    make_density(&DistributionSpec::uniform(-edge, edge), &grid)
}

/// Entropy gaps from integrating `J(Z_t) - 1` along the flow, compared with
/// direct entropy differences; plus Fisher dominance along the flow.
pub fn debruijn_suite(cfg: &RunConfig, r: &mut Report) {
    let mut csv = String::from("dist,gap,direct,abs_error,refined_gap\n");
    for e in &cfg.battery {
        r.suite(&format!("debruijn/{}", e.label), |r| {
            debruijn_entry(cfg, e, r, &mut csv)
        });
    }
    if cfg.battery.iter().any(is_uniform) {
        r.suite("debruijn/uniform_closed_form", |r| {
            let schedule = cfg.schedule.build()?;
            let d = lattice_standard_uniform(UNIFORM_HALF_CELLS)?;
            let trace = fisher_along_flow(&d, &schedule)?;
            let target = h_gauss() - 0.5 * 12f64.ln();
            let _ = writeln!(
                csv,
                "uniform_raw,{},{},{},",
                sig12(trace.entropy_gap),
                sig12(target),
                sig12((trace.entropy_gap - target).abs())
            );
            r.file("debruijn_uniform_raw.csv", trace.to_csv());
            r.at_most(
                "debruijn_closed_form/uniform",
                (trace.entropy_gap - target).abs(),
                cfg.tol("uniform_gap"),
            );
            Ok(())
        });
    }
    r.file("debruijn.csv", csv);
}

fn debruijn_entry(cfg: &RunConfig, e: &BatteryEntry, r: &mut Report, csv: &mut String) -> Result<()> {
    let name = |check: &str| format!("{check}/{}", e.label);
    let schedule = cfg.schedule.build()?;
    let base = base_density(&e.spec, 1, &cfg.policy())?;
    let trace = fisher_along_flow(&base, &schedule)?;
    let direct = h_gauss() - entropy(&base)?;
    let refined = debruijn_gap(&base, &schedule.refined())?;
    let _ = writeln!(
        csv,
        "{},{},{},{},{}",
        e.label,
        sig12(trace.entropy_gap),
        sig12(direct),
        sig12((trace.entropy_gap - direct).abs()),
        sig12(refined)
    );
    r.file(format!("debruijn_{}.csv", e.label), trace.to_csv());
    r.at_most(
        name("debruijn"),
        (trace.entropy_gap - direct).abs(),
        cfg.tol("debruijn"),
    );
    r.at_most(
        name("debruijn_time_refinement"),
        (refined - trace.entropy_gap).abs(),
        cfg.tol("time_refinement"),
    );
    let min_j = trace.fisher_values.iter().copied().fold(f64::INFINITY, f64::min);
    r.at_most(name("flow_cramer_rao"), 1.0 - min_j, cfg.tol("cramer_rao"));

    // flow of the sums: grid family with the kernel resolution keeps this affordable
    let n_top = cfg.n_max.min(KERNEL_N_MAX);
    if n_top >= 2 {
        let policy = cfg.kernel_policy();
        let sums_base = base_density(&e.spec, n_top, &policy)?;
        let profile = flow_profile(&sums_base, n_top, &schedule, &policy)?;
        let fam = IidSumFamily::from_base(&sums_base, 2, &policy)?;
        let direct = entropy(&std_sum(&fam, 2)?)? - entropy(&std_sum(&fam, 1)?)?;
        let via_flow = profile.entropy_difference(1, 2);
        let mut out = String::from("t");
        for k in 1..=n_top {
            let _ = write!(out, ",fisher_u{k}");
        }
        out.push('\n');
        for (i, t) in profile.times.iter().enumerate() {
            out.push_str(&sig12(*t));
            for k in 0..n_top {
                let _ = write!(out, ",{}", sig12(profile.fisher[k][i]));
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "# entropy_difference_1_2={} direct={}",
            sig12(via_flow),
            sig12(direct)
        );
        r.file(format!("flow_sums_{}.csv", e.label), out);
        r.at_most(
            name("flow_fisher_dominance"),
            profile.worst_dominance_excess(),
            cfg.tol("fisher_monotone"),
        );
        r.at_most(
            name("flow_entropy_difference"),
            (via_flow - direct).abs(),
            cfg.tol("flow_difference"),
        );
    }
    Ok(())
}

/// Sample-based entropy and Fisher information against the grid values,
/// seed determinism, and the coverage of the 99% intervals.
pub fn oracle_suite(cfg: &RunConfig, r: &mut Report) {
    let mut rows: Vec<(String, EstimateWithCI, u64)> = Vec::new();
    r.suite("oracle/determinism", |r| {
        let spec = &cfg.battery[0].spec;
        let a = sample(spec, 20_000, cfg.seed)?;
        let b = sample(spec, 20_000, cfg.seed)?;
        let (x1, y1) = paired_sums(spec, 1, 2, 20_000, cfg.seed)?;
        let (x2, y2) = paired_sums(spec, 1, 2, 20_000, cfg.seed)?;
        let same = a == b
            && x1 == x2
            && y1 == y2
            && mc_entropy(&a)? == mc_entropy(&b)?
            && a.ou_smoothed(0.1)? == b.ou_smoothed(0.1)?;
        r.at_most("seed_determinism", if same { 0.0 } else { 1.0 }, 0.0);
        Ok(())
    });
    // grid-vs-sample agreement is one family: two entropies per entry plus one Fisher value
    let comparisons = 2 * cfg.battery.len() + 1;
    for (idx, e) in cfg.battery.iter().enumerate() {
        let seed = cfg.seed.wrapping_add(500 + idx as u64);
        r.suite(&format!("oracle/{}", e.label), |r| {
            let name = |check: &str| format!("{check}/{}", e.label);
            let fam = IidSumFamily::build(&e.spec, 2, &cfg.kernel_policy())?;
            let grid_h: Vec<f64> = (1..=2)
                .map(|k| entropy(&std_sum(&fam, k)?))
                .collect::<Result<_>>()?;
            let smoothing = if e.spec.family.is_smooth() {
                0.0
            } else {
                cfg.t_smooth
            };
            let (x, y) = paired_sums(&e.spec, 1, 2, cfg.mc_samples, seed)?;
            let u2 = SampleSet {
                values: y.values.iter().map(|v| v / 2f64.sqrt()).collect(),
                ..y
            };
            let h1 = mc_entropy(&x.ou_smoothed(smoothing)?)?;
            let h2 = mc_entropy(&u2.ou_smoothed(smoothing)?)?;
            r.at_most(
                name("oracle_entropy_u1"),
                (h1.point - grid_h[0]).abs(),
                h1.simultaneous_half_width(comparisons),
            );
            r.at_most(
                name("oracle_entropy_u2"),
                (h2.point - grid_h[1]).abs(),
                h2.simultaneous_half_width(comparisons),
            );
            if !is_gaussian(e) {
                r.at_least(
                    name("oracle_strict_increase"),
                    h2.point - h1.point - h1.half_width_99 - h2.half_width_99,
                    0.0,
                );
            }
            rows.push((format!("entropy_u1_{}", e.label), h1, seed));
            rows.push((format!("entropy_u2_{}", e.label), h2, seed));
            Ok(())
        });
    }
    r.suite("oracle/fisher_smoothed_uniform", |r| {
        let spec = DistributionSpec::uniform(0.0, 1.0).standardized();
        let policy = cfg.policy().with_t_smooth(FISHER_CROSS_CHECK_T);
        let grid_j = fisher_information(&base_density(&spec, 1, &policy)?)?;
        let seed = cfg.seed.wrapping_add(900);
        let s = sample(&spec, cfg.mc_samples, seed)?.ou_smoothed(FISHER_CROSS_CHECK_T)?;
        let est = mc_fisher(&s, 0.5 * default_bandwidth(&s))?;
        r.at_most(
            "oracle_fisher/uniform_t0.05",
            (est.point - grid_j).abs(),
            est.simultaneous_half_width(comparisons),
        );
        rows.push(("fisher_uniform_t0.05".into(), est, seed));
        Ok(())
    });
    r.suite("oracle/calibration", |r| {
        let (hits_h, hits_j, hits_r) = calibration(cfg)?;
        let need = cfg.tol("calibration_hits") * cfg.calibration_reps as f64 / 100.0;
        r.at_least("ci_calibration/entropy", hits_h as f64, need);
        r.at_least("ci_calibration/fisher", hits_j as f64, need);
        r.at_least("ci_calibration/maxcorr", hits_r as f64, need);
        Ok(())
    });
    r.file("oracle.csv", estimates_csv(&rows));
}

/// How many of the seeded replications put the Gaussian truth inside the
/// 99% interval, for entropy, Fisher information and `r^2(S_1; S_2)`.
pub fn calibration(cfg: &RunConfig) -> Result<(usize, usize, usize)> {
    let g = DistributionSpec::gaussian(0.0, 1.0);
    let (mut hits_h, mut hits_j, mut hits_r) = (0, 0, 0);
    for rep in 0..cfg.calibration_reps as u64 {
        let seed = cfg.seed.wrapping_add(10_000 + rep);
        let s = sample(&g, cfg.calibration_samples, seed)?;
        hits_h += mc_entropy(&s)?.contains(h_gauss()) as usize;
        hits_j += mc_fisher(&s, default_bandwidth(&s))?.contains(1.0) as usize;
        let (x, y) = paired_sums(&g, 1, 2, cfg.calibration_samples, seed)?;
        hits_r += mc_maxcorr(&x, &y, cfg.mc_bins, ACE_MAX_ITER)?.contains(0.5) as usize;
    }
    Ok((hits_h, hits_j, hits_r))
}

/// Every suite, in a fixed order.
pub fn run_verify(cfg: &RunConfig) -> Report {
    let mut r = Report::new();
    functionals_suite(cfg, &mut r);
    correlation_suite(cfg, &mut r);
    mc_maxcorr_suite(cfg, &mut r);
    score_suite(cfg, &PROJECTION_PAIRS, &mut r);
    debruijn_suite(cfg, &mut r);
    oracle_suite(cfg, &mut r);
    r
}

pub fn default_projection_pairs() -> &'static [(usize, usize)] {
    &PROJECTION_PAIRS
}

pub fn mc_pairs() -> &'static [(usize, usize)] {
    &MC_PAIRS
}

/// Grid and sample estimates of `r^2(S_m; S_n)` for each battery entry.
pub fn maxcorr_suite(cfg: &RunConfig, m: usize, n: usize, r: &mut Report) {
    let mut csv = String::from("dist,m,n,grid_r2,target,mc_point,mc_ci99,n_samples,seed\n");
    for (idx, e) in cfg.battery.iter().enumerate() {
        r.suite(&format!("maxcorr/{}", e.label), |r| {
            if m == 0 || m > n || n > cfg.n_max {
                return Err(crate::error::Error::IndexOutOfRange {
                    m,
                    n,
                    n_max: cfg.n_max,
                });
            }
            let fam = IidSumFamily::build(&e.spec, n, &cfg.kernel_policy())?;
            let k = CondExpKernel::build(&fam, m, n)?;
            let grid = maximal_correlation_with(&k, POWER_MAX_ITER, POWER_TOL)?.require_converged()?;
            let target = m as f64 / n as f64;
            let seed = cfg.seed.wrapping_add(idx as u64);
            let (x, y) = paired_sums(&e.spec, m, n, cfg.mc_samples, seed)?;
            let est = mc_maxcorr(&x, &y, cfg.mc_bins, ACE_MAX_ITER)?;
            println!(
                "{}: r2(S_{m}; S_{n}) grid {:.6}  ACE {:.6} +- {:.6}  target {:.6}",
                e.label, grid.r2, est.point, est.half_width_99, target
            );
            let _ = writeln!(
                csv,
                "{},{m},{n},{},{},{},{},{},{seed}",
                e.label,
                sig12(grid.r2),
                sig12(target),
                sig12(est.point),
                sig12(est.half_width_99),
                est.n_samples
            );
            r.at_most(
                format!("dks_grid/{}/{m}_{n}", e.label),
                (grid.r2 - target).abs(),
                cfg.tol("dks_grid"),
            );
            r.at_most(
                format!("dks_mc/{}/{m}_{n}", e.label),
                (est.point - target).abs(),
                est.half_width_99,
            );
            Ok(())
        });
    }
    r.file("maxcorr.csv", csv);
}

/// Score-projection checks for one explicit pair.
pub fn scorecheck_suite(cfg: &RunConfig, m: usize, n: usize, r: &mut Report) {
    if m == 0 || m > n || n > cfg.n_max {
        r.error(
            "scorecheck",
            crate::error::Error::IndexOutOfRange {
                m,
                n,
                n_max: cfg.n_max,
            },
        );
        return;
    }
    score_suite(cfg, &[(m, n)], r);
}
