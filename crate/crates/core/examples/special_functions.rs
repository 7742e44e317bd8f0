//! Exponential integral and adaptive quadrature.

use hor::special::{exp_integral_ei, exp_integral_ei_scaled, quad_gk, quad_gk_points, QuadOptions};

fn main() -> hor::Result<()> {
    for x in [-30.0, -1.0, 0.5, 1.0, 10.0, 100.0] {
        println!(
            "Ei({x}) = {:e}   e^-x Ei(x) = {:e}",
            exp_integral_ei(x)?,
            exp_integral_ei_scaled(x)?
        );
    }
    // Ei(0) is a domain error, Ei(800) overflows
    println!("Ei(0): {:?}", exp_integral_ei(0.0));
    println!("Ei(800): {:?}", exp_integral_ei(800.0));

    let r = quad_gk(|x: f64| (-x * x).exp(), 0.0, 10.0, 1e-12, 1e-12)?;
    println!(
        "int_0^10 exp(-x^2) = {} (err {:e}, {} panels)",
        r.value, r.error_estimate, r.subdivisions
    );
    // a kink at 1 is handled by passing it as a breakpoint
    let r = quad_gk_points(
        |x: f64| (x - 1.0).abs(),
        &[0.0, 1.0, 3.0],
        QuadOptions::default(),
    )?;
    println!("int_0^3 |x - 1| = {}", r.value);
    Ok(())
}
