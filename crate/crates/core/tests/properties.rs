//! Randomized invariants of the grid pipeline, the operators and the plumbing.

use std::f64::consts::{E, PI};

use clt_monotone::cli::config::{parse_config_text, RunConfig};
use clt_monotone::cli::Report;
use clt_monotone::correlation::theta_battery;
use clt_monotone::numfmt::sig12;
use clt_monotone::{
    cond_exp, contraction_ratio, convolve, entropy, fisher_information, make_density, moments, normalize,
    ou_evolve, rescale, sample, score, CondExpKernel, DistributionSpec, Family, GridFunction, GridPolicy,
    GridSpec, IidSumFamily,
};
use proptest::prelude::*;

fn h_gauss(var: f64) -> f64 {
    0.5 * (2.0 * PI * E * var).ln()
}

/// Two-component mixtures with well separated to overlapping components.
fn mixture() -> impl Strategy<Value = DistributionSpec> {
    (0.2f64..0.8, -2.0f64..0.0, 0.0f64..2.0, 0.6f64..1.5, 0.6f64..1.5).prop_map(|(w, m1, m2, s1, s2)| {
        DistributionSpec::new(
            Family::GaussianMixture {
                components: vec![(w, m1, s1), (1.0 - w, m2, s2)],
            },
            false,
        )
        .unwrap()
    })
}

fn grid() -> GridSpec {
    GridSpec::with_step(-20.0, 40.0 / 2048.0, 2048).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn convolution_commutes_and_adds_moments(a in mixture(), b in mixture()) {
        let g = grid();
        let (da, db) = (make_density(&a, &g).unwrap(), make_density(&b, &g).unwrap());
        let ab = convolve(&da, &db).unwrap();
        let ba = convolve(&db, &da).unwrap();
        for (x, y) in ab.values().iter().zip(ba.values()) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
        let ((ma, va), (mb, vb), (ms, vs)) = (moments(&da), moments(&db), moments(&ab));
        prop_assert!((ms - ma - mb).abs() <= 1e-6 * (1.0 + (ma + mb).abs()));
        prop_assert!((vs - va - vb).abs() <= 1e-6 * (va + vb));
        prop_assert!(ab.values().iter().all(|v| *v >= 0.0));
        prop_assert!((ab.mass() - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn scaling_laws(spec in mixture(), alpha in prop_oneof![Just(0.5), Just(2.0), 0.6f64..1.8]) {
        let d = make_density(&spec, &grid()).unwrap();
        let s = rescale(&d, alpha).unwrap();
        let (h, hs) = (entropy(&d).unwrap(), entropy(&s).unwrap());
        prop_assert!((hs - h - alpha.ln()).abs() <= 1e-6);
        let (j, js) = (fisher_information(&d).unwrap(), fisher_information(&s).unwrap());
        prop_assert!((alpha * alpha * js - j).abs() <= 1e-5 * j);
        let back = rescale(&s, 1.0 / alpha).unwrap();
        for (x, y) in back.values().iter().zip(d.values()) {
            prop_assert!((x - y).abs() <= 1e-8);
        }
    }

    #[test]
    fn translation_invariance(spec in mixture(), k in -200i64..200) {
        let d = make_density(&spec, &grid()).unwrap();
        let shifted = d.shifted_by_steps(k);
        prop_assert!((entropy(&shifted).unwrap() - entropy(&d).unwrap()).abs() <= 1e-8);
    }

    #[test]
    fn information_inequalities(spec in mixture()) {
        let d = make_density(&spec, &grid()).unwrap();
        let (_, var) = moments(&d);
        prop_assert!(fisher_information(&d).unwrap() * var >= 1.0 - 1e-6);
        prop_assert!(entropy(&d).unwrap() <= h_gauss(var) + 1e-8);
        let rho = score(&d).unwrap();
        let mean: f64 = (0..d.grid().points())
            .filter(|&i| rho.valid()[i])
            .map(|i| d.grid().weight(i) * rho.values()[i] * d.values()[i])
            .sum();
        prop_assert!(mean.abs() <= 1e-6);
    }

    #[test]
    fn normalize_recovers_shape(spec in mixture(), c in 0.01f64..100.0) {
        let d = make_density(&spec, &grid()).unwrap();
        let scaled = clt_monotone::GridDensity::from_values(
            *d.grid(),
            d.values().iter().map(|v| v * c).collect(),
            d.tail_mass_bound(),
            d.regularity(),
        )
        .unwrap();
        let n = normalize(&scaled).unwrap();
        for (x, y) in n.values().iter().zip(d.values()) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + y));
        }
    }

    #[test]
    fn ou_semigroup(s in 0.05f64..0.6, t in 0.05f64..0.6) {
        let g = GridSpec::new(-12.0, 12.0, 2048).unwrap();
        let d = make_density(&DistributionSpec::parse("gaussian_mixture", &[], true).unwrap(), &g).unwrap();
        let two = ou_evolve(&ou_evolve(&d, s).unwrap(), t).unwrap();
        let one = ou_evolve(&d, s + t).unwrap();
        for i in 0..g.points() {
            let x = g.x(i);
            prop_assert!((two.value_at(x) - one.value_at(x)).abs() <= 1e-6);
        }
    }
}

fn small_family() -> IidSumFamily {
    let spec = DistributionSpec::parse("gaussian_mixture", &[], true).unwrap();
    IidSumFamily::build(&spec, 3, &GridPolicy::default().with_points(256)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn conditional_expectation_contracts(
        coeffs in prop::collection::vec(-1.0f64..1.0, 1..5),
        (m, n) in prop_oneof![Just((1usize, 2usize)), Just((1, 3)), Just((2, 3))],
    ) {
        prop_assume!(coeffs.iter().any(|c| c.abs() > 1e-3));
        let fam = small_family();
        let k = CondExpKernel::build(&fam, m, n).unwrap();
        let theta = GridFunction::from_fn(fam.grid(), |x| {
            coeffs.iter().enumerate().map(|(p, c)| c * x.powi(p as i32 + 1)).sum()
        })
        .unwrap();
        let ratio = contraction_ratio(&k, &theta).unwrap();
        prop_assert!(ratio <= m as f64 / n as f64 + 1e-6);
        prop_assert!(ratio >= 0.0);

        // tower property and Jensen on the raw function
        let u = cond_exp(&k, &theta).unwrap();
        let (mt, mu) = (k.mean_m(&theta).unwrap(), k.mean_n(&u).unwrap());
        prop_assert!((mt - mu).abs() <= 1e-8 * (1.0 + mt.abs()));
        prop_assert!(k.second_moment_n(&u).unwrap() <= k.second_moment_m(&theta).unwrap() * (1.0 + 1e-9) + 1e-9);
    }

    #[test]
    fn constants_are_conditional_fixed_points(c in -5.0f64..5.0) {
        let fam = small_family();
        let k = CondExpKernel::build(&fam, 1, 2).unwrap();
        let u = cond_exp(&k, &GridFunction::from_fn(fam.grid(), |_| c).unwrap()).unwrap();
        for i in 0..fam.grid().points() {
            if u.valid()[i] {
                prop_assert!((u.values()[i] - c).abs() <= 1e-9 * (1.0 + c.abs()));
            }
        }
    }

    #[test]
    fn samples_repeat_per_seed(seed in any::<u64>(), count in 1usize..2000) {
        let spec = DistributionSpec::parse("exponential", &[], true).unwrap();
        let a = sample(&spec, count, seed).unwrap();
        let b = sample(&spec, count, seed).unwrap();
        prop_assert_eq!(&a.values, &b.values);
        prop_assert_eq!(a.ou_smoothed(0.1).unwrap(), b.ou_smoothed(0.1).unwrap());
    }

    #[test]
    fn verdict_is_conjunction(values in prop::collection::vec((-1.0f64..1.0, any::<bool>()), 0..20)) {
        let mut r = Report::new();
        for (i, (v, upper)) in values.iter().enumerate() {
            if *upper {
                r.at_most(format!("c{i}"), *v, 0.0);
            } else {
                r.at_least(format!("c{i}"), *v, 0.0);
            }
        }
        let v = r.verdict();
        prop_assert_eq!(v.overall, v.checks.iter().all(|c| c.pass));
        prop_assert_eq!(r.exit_code() == 0, v.overall);
        prop_assert_eq!(v.summary_csv().lines().count(), values.len() + 1);
    }

    #[test]
    fn sig12_round_trips(x in prop::num::f64::NORMAL) {
        let back: f64 = sig12(x).parse().unwrap();
        prop_assert!((back - x).abs() <= 1e-11 * x.abs());
    }

    #[test]
    fn config_settings_apply(n_max in 1usize..=16, exp in 6u32..14, span in 4.0f64..20.0) {
        let text = format!("n_max = {n_max}\ngrid_points = {}\ngrid_span = {span}\n", 1usize << exp);
        let mut cfg = RunConfig::default();
        cfg.apply(&parse_config_text(&text).unwrap()).unwrap();
        prop_assert!(cfg.validate().is_ok());
        prop_assert_eq!(cfg.n_max, n_max);
        prop_assert_eq!(cfg.grid_points, 1usize << exp);
        prop_assert_eq!(cfg.grid_span, span);
    }
}

#[test]
fn theta_battery_respects_the_bound_on_every_pair() {
    let fam = small_family();
    for (m, n) in [(1, 2), (1, 3), (2, 3)] {
        let k = CondExpKernel::build(&fam, m, n).unwrap();
        for (name, theta) in theta_battery(&fam, m).unwrap() {
            let r = contraction_ratio(&k, &theta).unwrap();
            assert!(r <= m as f64 / n as f64 + 1e-6, "{name} ({m},{n}): {r}");
        }
    }
}
