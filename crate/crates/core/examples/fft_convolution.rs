//! Two uniforms convolve to a triangle; its entropy is 1/2 in closed form.
//!
//! cargo run --release --example fft_convolution

use clt_monotone::{convolve, entropy, make_density, DistributionSpec, GridSpec};

fn main() -> clt_monotone::Result<()> {
    // nodes on multiples of the step keep the jumps of U(0,1) on the lattice
    let step = 1.0 / 1024.0;
    let grid = GridSpec::with_step(-1.0, step, 4096)?;
    let u = make_density(&DistributionSpec::uniform(0.0, 1.0), &grid)?;
    let tri = convolve(&u, &u)?;
    println!("mass of U+U'  = {:.12}", tri.mass());
    // half-weight cells at the two jumps cost first order in the step
    println!("h(U)          = {:.6} (exact 0)", entropy(&u)?);
    println!("h(U+U')       = {:.6} (exact 0.5)", entropy(&tri)?);
    println!("density at 1  = {:.6} (exact 1)", tri.value_at(1.0));
    Ok(())
}
