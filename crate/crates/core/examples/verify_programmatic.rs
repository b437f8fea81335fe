//! Drive one verification suite from code and inspect its checks.
//!
//! cargo run --release --example verify_programmatic

use clt_monotone::cli::config::parse_config_text;
use clt_monotone::cli::{suite, Report, RunConfig};

fn main() -> clt_monotone::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.apply(&parse_config_text(
        "dist = triangular\nn_max = 6\ngrid_points = 2048\n",
    )?)?;
    cfg.validate()?;
    let mut r = Report::new();
    suite::functionals_suite(&cfg, &mut r);
    for c in r.checks() {
        println!(
            "{:<32} {:<5} value {:>12.4e}  threshold {:e}",
            c.name, c.pass, c.value, c.threshold
        );
    }
    println!("exit status would be {}", r.exit_code());
    Ok(())
}
