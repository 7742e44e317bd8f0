//! Block-level simulation against the closed forms.

use hor::params::default_params;
use hor::sim::{empirical_covert_metrics, run, SimConfig};
use hor::sweep::analyze;

fn main() -> hor::Result<()> {
    let p = default_params();
    let (xi, _, r) = analyze(&p)?;
    let mut cfg = SimConfig::new(p, 500_000, 42);
    cfg.record_trace = true;
    let out = run(&cfg)?;
    let s = &out.summary;
    println!(
        "TOP analytic {:.5}  simulated {:.5}",
        r.top,
        s.empirical_top()
    );
    let emp = s.empirical_xi();
    let tv: f64 = 0.5
        * xi.xi
            .iter()
            .zip(&emp)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>();
    println!("level distribution total variation {tv:.4}");
    let c = empirical_covert_metrics(s)?;
    println!(
        "warden over {} relaying blocks: P_FA {:.4}, P_MD {:.4}, mean analytic P_E {:.4}",
        s.fs_blocks, c.p_fa, c.p_md, c.mean_analytic_p_e
    );
    let trace = out.trace.unwrap();
    for t in trace.iter().filter(|t| t.covert_flag).take(3) {
        println!("{t:?}");
    }
    Ok(())
}
