//! Exit gate: one PASS/FAIL line per acceptance criterion.
//!
//! Runs `verify` end to end through the binary, then reads its summary. A few
//! criteria are recomputed directly through the library so that they do not
//! rest on the report alone.

use std::f64::consts::{E, PI};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use clt_monotone::cli::{default_battery, suite, Report, RunConfig};
use clt_monotone::{entropy, fisher_information, rescale, DistributionSpec, GridPolicy, IidSumFamily};

const BIN: &str = env!("CARGO_BIN_EXE_clt-monotone");

struct Summary {
    rows: Vec<(String, bool, String)>,
}

impl Summary {
    fn read(dir: &Path) -> Summary {
        let text = std::fs::read_to_string(dir.join("summary.csv")).unwrap_or_default();
        let rows = text
            .lines()
            .skip(1)
            .filter_map(|l| {
                let c: Vec<&str> = l.split(',').collect();
                (c.len() == 4).then(|| (c[0].to_string(), c[1] == "true", c[2].to_string()))
            })
            .collect();
        Summary { rows }
    }

    /// Every check whose name starts with one of `prefixes` passed, and each
    /// prefix matched at least `min_each` checks.
    fn all_pass(&self, prefixes: &[&str], min_each: usize) -> (bool, String) {
        let mut ok = true;
        let mut detail = Vec::new();
        for p in prefixes {
            let hits: Vec<_> = self.rows.iter().filter(|(n, _, _)| n.starts_with(p)).collect();
            let failed: Vec<_> = hits
                .iter()
                .filter(|(_, pass, _)| !pass)
                .map(|(n, _, v)| format!("{n}={v}"))
                .collect();
            ok &= hits.len() >= min_each && failed.is_empty();
            if hits.len() < min_each {
                detail.push(format!("{p}: {} checks, expected >= {min_each}", hits.len()));
            }
            detail.extend(failed);
        }
        let detail = if detail.is_empty() {
            "all checks green".to_string()
        } else {
            detail.join("; ")
        };
        (ok, detail)
    }
}

fn line(results: &mut Vec<bool>, n: usize, title: &str, ok: bool, detail: &str) {
    println!(
        "criterion {n:>2} {}: {title} ({detail})",
        if ok { "PASS" } else { "FAIL" }
    );
    results.push(ok);
}

fn h_gauss() -> f64 {
    0.5 * (2.0 * PI * E).ln()
}

/// Closed-form Gaussian fixed point on a fresh family.
fn gaussian_fixed_point() -> (bool, String) {
    let fam = match IidSumFamily::build(
        &DistributionSpec::gaussian(0.0, 1.0),
        8,
        &GridPolicy::default().with_points(4096),
    ) {
        Ok(f) => f,
        Err(e) => return (false, e.to_string()),
    };
    let mut worst: f64 = 0.0;
    for k in 1..=8 {
        let u = fam.standardized(k).unwrap();
        worst = worst.max((entropy(&u).unwrap() - h_gauss()).abs());
        worst = worst.max((fisher_information(&u).unwrap() - 1.0).abs());
    }
    (worst <= 1e-6, format!("worst deviation {worst:.2e}"))
}

/// alpha^2 J(alpha X) = J(X) and h(alpha X) = h(X) + ln alpha across the battery.
fn scaling_laws() -> (bool, String) {
    let mut worst: f64 = 0.0;
    for e in default_battery() {
        let fam = IidSumFamily::build(&e.spec, 1, &GridPolicy::default().with_points(4096)).unwrap();
        let d = fam.base();
        let (h, j) = (entropy(d).unwrap(), fisher_information(d).unwrap());
        for alpha in [0.5, 2.0] {
            let s = rescale(d, alpha).unwrap();
            let dh = (entropy(&s).unwrap() - h - f64::ln(alpha)).abs() / h.abs().max(1.0);
            let dj = (alpha * alpha * fisher_information(&s).unwrap() - j).abs() / j;
            worst = worst.max(dh).max(dj);
        }
    }
    (worst <= 1e-5, format!("worst relative deviation {worst:.2e}"))
}

/// The correlation criterion on its own clock.
fn dks_timed(cfg: &RunConfig) -> (bool, String) {
    let start = Instant::now();
    let mut r = Report::new();
    suite::correlation_suite(cfg, &mut r);
    suite::mc_maxcorr_suite(cfg, &mut r);
    let elapsed = start.elapsed();
    let relevant: Vec<_> = r
        .checks()
        .iter()
        .filter(|c| c.name.starts_with("dks_grid/") || c.name.starts_with("dks_mc/"))
        .collect();
    let expected = cfg.battery.len() * (1 + suite::mc_pairs().len());
    let failed: Vec<_> = relevant
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.name.clone())
        .collect();
    let ok = r.errors().is_empty()
        && relevant.len() == expected
        && failed.is_empty()
        && elapsed < Duration::from_secs(120);
    (
        ok,
        format!(
            "{} checks, {} failed, {:.1} s of 120 s",
            relevant.len(),
            failed.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temporary directory");
    let out = dir.path().join("report");
    let start = Instant::now();
    let status = Command::new(BIN)
        .args(["verify", "--out", out.to_str().unwrap()])
        .output()
        .expect("binary runs");
    let verify_time = start.elapsed();
    let code = status.status.code();
    let s = Summary::read(&out);
    let entries = default_battery().len();

    let mut results = Vec::new();
    let (ok, d) = dks_timed(&RunConfig::default());
    line(
        &mut results,
        1,
        "maximal correlation equals m/n on the grid and in sampled ACE intervals",
        ok,
        &d,
    );

    let (ok, d) = s.all_pass(&["contraction/", "contraction_linear_equality/"], entries);
    line(
        &mut results,
        2,
        "conditional expectation contracts by m/n, linear functions attain it",
        ok,
        &d,
    );

    let (ok, d) = s.all_pass(&["score_projection/", "score_refinement/"], 2 * entries);
    line(
        &mut results,
        3,
        "score of S_n is the projected score of S_m and converges under refinement",
        ok,
        &d,
    );

    let (ok, d) = s.all_pass(
        &["fisher_monotone/", "fisher_chain/", "flow_fisher_dominance/"],
        entries,
    );
    line(
        &mut results,
        4,
        "Fisher information of U_n is non-increasing",
        ok,
        &d,
    );

    let (ok, d) = s.all_pass(&["entropy_monotone/", "strict_increase/"], entries - 1);
    line(
        &mut results,
        5,
        "entropy of U_n is non-decreasing, strictly for non-Gaussian bases",
        ok,
        &d,
    );

    let (ok, d) = s.all_pass(&["debruijn/", "debruijn_closed_form/uniform"], 1);
    let (ok_each, _) = s.all_pass(&["debruijn/"], entries);
    line(
        &mut results,
        6,
        "flow integral of Fisher information reproduces entropy gaps",
        ok && ok_each,
        &d,
    );

    let (ok_direct, d_direct) = gaussian_fixed_point();
    let (ok, d) = s.all_pass(&["gaussian_entropy/", "gaussian_fisher/"], 1);
    line(
        &mut results,
        7,
        "Gaussian sums stay at the fixed point",
        ok && ok_direct,
        &format!("{d}; {d_direct}"),
    );

    let (ok_direct, d_direct) = scaling_laws();
    let (ok, d) = s.all_pass(&["scaling_entropy/", "scaling_fisher/"], entries);
    line(
        &mut results,
        8,
        "entropy and Fisher information obey the scaling laws",
        ok && ok_direct,
        &format!("{d}; {d_direct}"),
    );

    let (ok, d) = s.all_pass(
        &[
            "cramer_rao/",
            "max_entropy/",
            "kernel_row_sums/",
            "rayleigh_monotone/",
            "seed_determinism",
            "ci_calibration/",
        ],
        1,
    );
    line(&mut results, 9, "property suites", ok, &d);

    let all_green = !s.rows.is_empty() && s.rows.iter().all(|(_, p, _)| *p);
    let ok = code == Some(0) && all_green && verify_time < Duration::from_secs(300);
    line(
        &mut results,
        10,
        "verify exits 0 within 5 minutes",
        ok,
        &format!(
            "exit {:?}, {} checks, {:.1} s",
            code,
            s.rows.len(),
            verify_time.as_secs_f64()
        ),
    );

    let passed = results.iter().filter(|r| **r).count();
    println!("{passed}/{} acceptance criteria pass", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        eprintln!("{}", String::from_utf8_lossy(&status.stderr));
        ExitCode::FAILURE
    }
}
