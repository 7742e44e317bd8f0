//! Battery-level chain and its stationary distribution.

use hor::markov::{build_transition_matrix, power_iteration, stationary_distribution};
use hor::params::{default_params, derive_gains, SystemParams};

fn main() -> hor::Result<()> {
    for levels in [5, 25] {
        let p = SystemParams {
            levels,
            ..default_params()
        };
        let g = derive_gains(&p);
        let m = build_transition_matrix(&p, &g, 0.5)?;
        let xi = stationary_distribution(&m)?;
        let check = power_iteration(&m, 100_000);
        let diff = xi
            .xi
            .iter()
            .zip(&check.xi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!(
            "L = {levels}: relaying needs level >= {}, Pr(energy ok) = {:.5}",
            m.phi,
            xi.prob_energy_ok(m.phi)
        );
        for (i, v) in xi.xi.iter().enumerate() {
            println!("  level {i:>2}: {v:.6}");
        }
        println!("  power iteration agrees to {diff:.1e}");
    }
    Ok(())
}
