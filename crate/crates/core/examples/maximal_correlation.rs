//! r^2(S_m; S_n) = m/n on the grid, plus the contraction of a few test functions.
//!
//! cargo run --release --example maximal_correlation

use clt_monotone::correlation::theta_battery;
use clt_monotone::{
    contraction_ratio, maximal_correlation, CondExpKernel, DistributionSpec, GridPolicy, IidSumFamily,
};

fn main() -> clt_monotone::Result<()> {
    let spec = DistributionSpec::parse("gaussian_mixture", &[], true)?;
    let family = IidSumFamily::build(&spec, 5, &GridPolicy::default().with_points(1024))?;
    for (m, n) in [(1, 2), (2, 3), (2, 5), (4, 5)] {
        let r = maximal_correlation(&family, m, n, 10_000, 1e-12)?;
        println!(
            "r2(S_{m}; S_{n}) = {:.9}  target {:.9}  iterations {}",
            r.r2,
            m as f64 / n as f64,
            r.iterations
        );
    }
    let k = CondExpKernel::build(&family, 2, 3)?;
    for (name, theta) in theta_battery(&family, 2)? {
        // linear theta attains the bound, everything else sits below it
        println!(
            "{name:>12}: Var E[theta|S_3] / Var theta = {:.6}",
            contraction_ratio(&k, &theta)?
        );
    }
    Ok(())
}
