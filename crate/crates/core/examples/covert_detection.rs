//! Warden's radiometer at fixed channel gains: error curve, optimal
//! threshold, and how channel uncertainty changes the minimum error.

use hor::covert::{
    covert_metrics, min_detection_error, optimal_threshold, CovertScenario, EXAMPLE_G_RD,
    EXAMPLE_G_SD,
};
use hor::params::{default_params, derive_gains, SystemParams};
use hor::sweep::{empirical_detection, tau_grid};

fn main() {
    let p = default_params();
    let g = derive_gains(&p);
    let s = CovertScenario::new(&p, &g, EXAMPLE_G_SD, EXAMPLE_G_RD);
    let tau_star = optimal_threshold(&s);
    println!(
        "j0 = {:e}, j1 = {:e}, tau* = {tau_star:e}, P_E* = {:.5}",
        s.j0(),
        s.j1(),
        min_detection_error(&s)
    );

    let taus = tau_grid(&s, 12);
    let emp = empirical_detection(&s, &taus, 200_000, 1);
    println!(
        "{:>12} {:>8} {:>8} {:>8} {:>8}",
        "tau", "P_FA", "P_MD", "P_E", "sim P_E"
    );
    for (&tau, (fa, md)) in taus.iter().zip(emp) {
        let m = covert_metrics(&s, tau);
        println!(
            "{tau:>12.4e} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            m.p_fa,
            m.p_md,
            m.p_e,
            fa + md
        );
    }

    println!("\nbeta  P_E*");
    for i in 1..10 {
        let beta = i as f64 / 10.0;
        let pb = SystemParams { beta, ..p };
        let s = CovertScenario::new(&pb, &g, EXAMPLE_G_SD, EXAMPLE_G_RD);
        println!("{beta:.1}   {:.5}", min_detection_error(&s));
    }
}
