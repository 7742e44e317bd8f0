//! Distributional checks of the sampler and the closed forms it feeds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hor::covert::{self, CovertScenario, EXAMPLE_G_RD, EXAMPLE_G_SD};
use hor::markov::{build_transition_matrix, cdf_z, q_sd};
use hor::outage::cdf_y;
use hor::params::{default_params, derive_gains, sample_block};
use hor::sim::{run, SimConfig};

/// Kolmogorov-Smirnov distance of a sample to a CDF.
fn ks(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// 0.1% critical value of the one-sample KS statistic.
fn ks_critical(n: usize) -> f64 {
    1.95 / (n as f64).sqrt()
}

#[test]
fn channel_draws_are_exponential() {
    let p = default_params();
    let g = derive_gains(&p);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 50_000;
    let draws: Vec<_> = (0..n).map(|_| sample_block(&g, p.beta, &mut rng)).collect();
    let exp_cdf = |m: f64| move |x: f64| -(-x / m).exp_m1();
    let d = ks(draws.iter().map(|b| b.g_sd).collect(), exp_cdf(g.omega_sd));
    assert!(d < ks_critical(n), "g_SD KS {d}");
    let d = ks(draws.iter().map(|b| b.g_rr).collect(), exp_cdf(g.omega_rr));
    assert!(d < ks_critical(n), "g_RR KS {d}");
    let d = ks(
        draws.iter().map(|b| b.g_rd_hat).collect(),
        exp_cdf((1.0 - p.beta) * g.omega_rd),
    );
    assert!(d < ks_critical(n), "g_RD_hat KS {d}");
    let d = ks(
        draws.iter().map(|b| b.g_rd_tilde).collect(),
        exp_cdf(p.beta * g.omega_rd),
    );
    assert!(d < ks_critical(n), "g_RD_tilde KS {d}");
}

#[test]
fn harvest_mixture_matches_its_cdf() {
    let p = default_params();
    let g = derive_gains(&p);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 50_000;
    for covert in [false, true] {
        let pfs = if covert { p.p_r + p.p_delta } else { p.p_r };
        let z: Vec<f64> = (0..n)
            .map(|_| {
                let b = sample_block(&g, p.beta, &mut rng);
                p.p_s * b.g_sr + p.k * pfs * b.g_rr
            })
            .collect();
        let d = ks(z, |x| cdf_z(&p, &g, x, covert));
        assert!(d < ks_critical(n), "covert={covert} KS {d}");
    }
}

#[test]
fn relayed_sinr_cdf_matches_draws() {
    let p = default_params();
    let g = derive_gains(&p);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 400_000;
    let mut y0 = Vec::with_capacity(n);
    let mut y1 = Vec::with_capacity(n);
    for _ in 0..n {
        let b = sample_block(&g, p.beta, &mut rng);
        let hop1 = |pfs: f64| {
            (1.0 - p.rho) * p.p_s * b.g_sr / ((1.0 - p.rho) * p.k * pfs * b.g_rr + p.sigma2_r)
        };
        y0.push(hop1(p.p_r).min(p.p_r * b.g_rd / p.sigma2_d));
        y1.push(hop1(p.p_r + p.p_delta).min(p.p_r * b.g_rd / (p.p_delta * b.g_rd + p.sigma2_d)));
    }
    for x in [0.1, 0.5, 1.0, 2.0, 4.0] {
        let e0 = y0.iter().filter(|&&y| y < x).count() as f64 / n as f64;
        let e1 = y1.iter().filter(|&&y| y < x).count() as f64 / n as f64;
        assert!((cdf_y(&p, &g, x, false) - e0).abs() < 3e-3, "x={x}");
        assert!((cdf_y(&p, &g, x, true) - e1).abs() < 3e-3, "x={x}");
    }
    // the covert link saturates at P_R / P_Delta
    let cap = p.p_r / p.p_delta;
    assert!(y1.iter().all(|&y| y < cap));
    assert_eq!(cdf_y(&p, &g, cap * 1.0001, true), 1.0);
}

/// The radiometer is the likelihood-ratio test exactly when the ratio of
/// the statistic's densities is nondecreasing; check it on a grid and
/// compare ranking power with a small sample.
#[test]
fn radiometer_is_likelihood_ratio_test() {
    let p = default_params();
    let g = derive_gains(&p);
    let s = CovertScenario::new(&p, &g, EXAMPLE_G_SD, EXAMPLE_G_RD);
    let h = 1e-14;
    let (lo, hi) = (
        s.j1() + 1e-12,
        s.j1() + 8.0 * p.beta * (p.p_r + p.p_delta) * g.omega_rd,
    );
    let mut last = 0.0;
    for i in 0..200 {
        let t = lo + (hi - lo) * i as f64 / 199.0;
        let f0 = (covert::p_false_alarm(&s, t - h) - covert::p_false_alarm(&s, t + h)) / (2.0 * h);
        let f1 = (covert::p_missed_detection(&s, t + h) - covert::p_missed_detection(&s, t - h))
            / (2.0 * h);
        let lr = f1 / f0;
        assert!(lr >= last * (1.0 - 1e-6), "likelihood ratio drops at {t}");
        last = lr;
    }

    // empirical AUC against the analytic one
    use rand::Rng;
    use rand_distr::Exp1;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 2000;
    let mean = s.beta * s.omega_rd;
    let t0: Vec<f64> = (0..n)
        .map(|_| covert::radiometer_statistic(&s, mean * rng.sample::<f64, _>(Exp1), false))
        .collect();
    let t1: Vec<f64> = (0..n)
        .map(|_| covert::radiometer_statistic(&s, mean * rng.sample::<f64, _>(Exp1), true))
        .collect();
    let wins = t1
        .iter()
        .map(|a| t0.iter().filter(|&&b| *a > b).count())
        .sum::<usize>();
    let auc = wins as f64 / (n * n) as f64;
    // every H1 statistic sits above j1, every H0 statistic above j0 < j1
    assert!(auc > 0.5, "auc {auc}");
    let grid: Vec<f64> = (0..4000)
        .map(|i| s.j0() + i as f64 * (hi - s.j0()) / 3999.0)
        .collect();
    let analytic_auc: f64 = grid
        .windows(2)
        .map(|w| {
            let df0 = covert::p_false_alarm(&s, w[0]) - covert::p_false_alarm(&s, w[1]);
            df0 * (1.0 - covert::p_missed_detection(&s, 0.5 * (w[0] + w[1])))
        })
        .sum();
    assert!(
        (auc - analytic_auc).abs() < 0.03,
        "auc {auc} vs {analytic_auc}"
    );
}

#[test]
fn simulator_direct_link_and_charging_rows() {
    let p = default_params();
    let g = derive_gains(&p);
    let n = 400_000;
    let s = run(&SimConfig::new(p, n, 5)).unwrap().summary;
    let q = q_sd(&p, &g);
    let relay_wanted = 1.0 - s.direct_blocks as f64 / n as f64;
    assert!((relay_wanted - q).abs() < 5.0 * (q * (1.0 - q) / n as f64).sqrt());

    let m = build_transition_matrix(&p, &g, 0.5).unwrap();
    for i in 0..4 {
        for j in i..i + 3 {
            if let Some(f) = s.transition_frequency(i, j) {
                let visits: u64 = s.transitions[i].iter().sum();
                let sd = (m.get(i, j) * (1.0 - m.get(i, j)) / visits as f64).sqrt();
                assert!(
                    (f - m.get(i, j)).abs() < 5.0 * sd + 1e-4,
                    "{i}->{j}: {f} vs {}",
                    m.get(i, j)
                );
            }
        }
    }
}
