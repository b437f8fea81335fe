//! Entropy gap to the Gaussian by integrating Fisher information along the
//! Ornstein-Uhlenbeck flow, against the direct grid value.
//!
//! cargo run --release --example debruijn_flow

use clt_monotone::family::base_density;
use clt_monotone::{entropy, fisher_along_flow, flow_profile, DistributionSpec, FlowSchedule, GridPolicy};

fn main() -> clt_monotone::Result<()> {
    let h_gauss = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
    let schedule = FlowSchedule::default();
    let policy = GridPolicy::default().with_points(4096);
    for name in ["gaussian_mixture", "exponential"] {
        let spec = DistributionSpec::parse(name, &[], true)?;
        let base = base_density(&spec, 1, &policy)?;
        let trace = fisher_along_flow(&base, &schedule)?;
        let direct = h_gauss - entropy(&base)?;
        println!(
            "{name:>16}: flow {:.6}  direct {:.6}  ({} times)",
            trace.entropy_gap,
            direct,
            trace.times.len()
        );
    }

    // every standardized sum along the same flow: J((U_n)_t) <= J((U_m)_t) pointwise
    let spec = DistributionSpec::parse("exponential", &[], true)?;
    let coarse = policy.with_points(1024);
    let profile = flow_profile(&base_density(&spec, 4, &coarse)?, 4, &schedule, &coarse)?;
    println!(
        "largest J(U_n)_t - J(U_m)_t over m < n: {:e}",
        profile.worst_dominance_excess()
    );
    println!(
        "h(U_2) - h(U_1) via the flow: {:.6}",
        profile.entropy_difference(1, 2)
    );
    Ok(())
}
