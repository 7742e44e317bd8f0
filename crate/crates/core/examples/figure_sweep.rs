//! Named sweep presets: power-splitting optimum and the L=400 proxy check.

use hor::params::{default_params, ParamsBuilder};
use hor::sweep::{figure_preset, proxy_convergence, run_sweep};

fn main() -> hor::Result<()> {
    let mut spec = figure_preset("fig6")?;
    spec.blocks_per_point = 20_000;
    let t = run_sweep(&spec, &ParamsBuilder::new())?;
    let (levels, rho, top) = (
        t.column("L").unwrap(),
        t.column("rho").unwrap(),
        t.column("top").unwrap(),
    );
    let n = spec.grid.len();
    for c in 0..levels.len() / n {
        let r = c * n..(c + 1) * n;
        let best = r
            .clone()
            .min_by(|&a, &b| top[a].total_cmp(&top[b]))
            .unwrap();
        println!(
            "L = {:>3}: best rho {:.2} with TOP {:.5}",
            levels[best], rho[best], top[best]
        );
    }
    println!("max |analytic - simulated| = {:.4}", t.max_gap.unwrap());

    let (a, b) = proxy_convergence(&default_params())?;
    println!("TOP at L=200 {a:.6}, L=400 {b:.6}");

    let mut out = std::io::stdout().lock();
    let mut f10 = figure_preset("fig10")?;
    f10.blocks_per_point = 0;
    run_sweep(&f10, &ParamsBuilder::new())?.write_csv(&mut out, None, &[])?;
    Ok(())
}
