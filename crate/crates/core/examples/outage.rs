//! Transmission outage probability at the default operating point.

use hor::outage::cdf_gamma_d_h0;
use hor::params::{default_params, derive_gains};
use hor::sweep::analyze;

fn main() -> hor::Result<()> {
    let p = default_params();
    let (_, phi, r) = analyze(&p)?;
    println!("relaying threshold level: {phi}");
    println!("TOP           = {:.6}", r.top);
    println!("  relay part  = {:.6}", r.top_fs);
    println!("  direct part = {:.6}", r.top_peh);
    println!("no relay      = {:.6}", r.top_no_relay);
    println!("Pr(energy ok) = {:.6}", r.p_energy_ok);

    // closed form of the no-covert joint CDF and its quadrature check
    let g = derive_gains(&p);
    for x in [0.1, 1.0, 5.0] {
        let h0 = cdf_gamma_d_h0(&p, &g, x)?;
        println!(
            "x = {x}: closed form {:?}, quadrature {:.10}",
            h0.closed_form, h0.oracle
        );
    }
    Ok(())
}
