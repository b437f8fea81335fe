//! The score of S_n is the conditional expectation of the score of S_m.
//!
//! cargo run --release --example score_projection

use clt_monotone::{verify_score_projection, DistributionSpec, GridPolicy, IidSumFamily};

fn main() -> clt_monotone::Result<()> {
    for name in ["gaussian", "gaussian_mixture", "uniform"] {
        let spec = DistributionSpec::parse(name, &[], true)?;
        for points in [512, 1024, 2048] {
            let family = IidSumFamily::build(&spec, 3, &GridPolicy::default().with_points(points))?;
            let p = verify_score_projection(&family, 1, 2)?;
            println!(
                "{name:>16} points {points:>5}: weighted sup error {:.3e}",
                p.weighted_sup
            );
        }
    }
    Ok(())
}
