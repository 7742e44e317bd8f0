//! End-to-end acceptance checks. Each prints one PASS/FAIL line straight
//! to stderr so it shows up even when test output is captured.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use hor::covert::{self, CovertScenario, EXAMPLE_G_RD, EXAMPLE_G_SD};
use hor::markov::{build_transition_matrix, power_iteration, stationary_distribution};
use hor::outage::{cdf_gamma_d_h0, cdf_gamma_d_h1};
use hor::params::{default_params, derive_gains, ParamsBuilder, SystemParams};
use hor::sim::{run, SimConfig};
use hor::special::erlang2_cdf;
use hor::sweep::{analyze, empirical_detection, figure_preset, run_sweep, tau_grid, PRESET_NAMES};

fn report(n: u32, name: &str, result: Result<String, String>) {
    let line = match &result {
        Ok(detail) => format!("criterion {n} PASS {name}: {detail}"),
        Err(detail) => format!("criterion {n} FAIL {name}: {detail}"),
    };
    let _ = writeln!(std::io::stderr(), "{line}");
    if let Err(d) = result {
        panic!("criterion {n} ({name}) failed: {d}");
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

#[test]
fn criterion_1_chain_validity() {
    let result = (|| {
        let base = ParamsBuilder::new();
        let mut points = vec![default_params()];
        for name in PRESET_NAMES {
            let spec = figure_preset(name).unwrap();
            let fams = spec
                .family
                .as_ref()
                .map(|(_, v)| v.iter().map(|&f| Some(f)).collect())
                .unwrap_or(vec![None]);
            for f in fams {
                for &x in &spec.grid {
                    points.push(spec.params_at(&base, f, x).map_err(|e| e.to_string())?);
                }
            }
        }
        let bad: Vec<String> = points
            .par_iter()
            .filter_map(|p| {
                let g = derive_gains(p);
                let m = match build_transition_matrix(p, &g, 0.5) {
                    Ok(m) => m,
                    Err(e) => return Some(e.to_string()),
                };
                if let Err(e) = m.check_stochastic(1e-9) {
                    return Some(e.to_string());
                }
                (!m.is_irreducible()).then(|| format!("reducible at L={} P_S={}", p.levels, p.p_s))
            })
            .collect();
        check(bad.is_empty(), || {
            format!("{} bad points, first: {}", bad.len(), bad[0])
        })?;
        Ok(format!(
            "{} parameter points stochastic within 1e-9 and irreducible",
            points.len()
        ))
    })();
    report(1, "chain validity", result);
}

#[test]
fn criterion_2_stationary_reproduction() {
    let result = (|| {
        let p = default_params();
        let g = derive_gains(&p);
        let m = build_transition_matrix(&p, &g, 0.5).map_err(|e| e.to_string())?;
        let xi = stationary_distribution(&m).map_err(|e| e.to_string())?;
        let emp = run(&SimConfig::new(p, 1_000_000, 2024))
            .map_err(|e| e.to_string())?
            .summary
            .empirical_xi();
        let tv = 0.5
            * xi.xi
                .iter()
                .zip(&emp)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>();
        check(tv <= 0.02, || format!("total variation {tv}"))?;
        let pi = power_iteration(&m, 100_000);
        let max_diff = xi
            .xi
            .iter()
            .zip(&pi.xi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        check(max_diff <= 1e-8, || {
            format!("linear solve vs power iteration differ by {max_diff}")
        })?;
        Ok(format!(
            "TV={tv:.5} over 1e6 blocks, solve vs power iteration {max_diff:.1e}"
        ))
    })();
    report(2, "stationary distribution", result);
}

fn random_scenario(p: &SystemParams, rng: &mut ChaCha8Rng) -> CovertScenario {
    let beta = rng.random_range(0.05..0.95);
    let p_r = rng.random_range(0.1e-6..1.0e-6);
    let p = SystemParams {
        beta,
        p_r,
        p_delta: 0.2 * p_r,
        ..*p
    };
    let g = derive_gains(&p);
    let g_sd = Exp::new(1.0 / g.omega_sd).unwrap().sample(rng);
    let g_hat = Exp::new(1.0 / ((1.0 - beta) * g.omega_rd))
        .unwrap()
        .sample(rng);
    CovertScenario::new(&p, &g, g_sd, g_hat)
}

#[test]
fn criterion_3_covert_closed_forms() {
    let result = (|| {
        let p = default_params();
        let g = derive_gains(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let mut scenarios = vec![CovertScenario::new(&p, &g, EXAMPLE_G_SD, EXAMPLE_G_RD)];
        scenarios.extend((0..10).map(|_| random_scenario(&p, &mut rng)));
        struct Outcome {
            worst_gap: f64,
            steps_off: f64,
            excess_at_argmin: f64,
        }
        let outcomes: Vec<Outcome> = scenarios
            .par_iter()
            .enumerate()
            .map(|(i, s)| {
                let taus = tau_grid(s, 200);
                let emp = empirical_detection(s, &taus, 1_000_000, 300 + i as u64);
                let mut worst_gap = 0.0f64;
                let mut best = (f64::INFINITY, 0);
                for (k, (&tau, (fa, md))) in taus.iter().zip(&emp).enumerate() {
                    worst_gap = worst_gap.max((covert::p_detection_error(s, tau) - fa - md).abs());
                    if fa + md < best.0 {
                        best = (fa + md, k);
                    }
                }
                let step = taus[1] - taus[0];
                let star = covert::optimal_threshold(s);
                Outcome {
                    worst_gap,
                    steps_off: (taus[best.1] - star).abs() / step,
                    excess_at_argmin: covert::p_detection_error(s, taus[best.1])
                        - covert::min_detection_error(s),
                }
            })
            .collect();
        let worst = outcomes.iter().map(|o| o.worst_gap).fold(0.0, f64::max);
        check(worst <= 5e-3, || format!("max |P_E - empirical| = {worst}"))?;
        let off: Vec<String> = outcomes
            .iter()
            .enumerate()
            .filter(|(_, o)| o.steps_off > 1.0)
            .map(|(i, o)| {
                format!(
                    "#{i} {:.1} steps (P_E there exceeds P_E* by {:.1e})",
                    o.steps_off, o.excess_at_argmin
                )
            })
            .collect();
        check(off.is_empty(), || {
            format!(
                "P_E gap {worst:.2e} ok, but empirical argmin more than one step from tau* in {}/11 scenarios: {}",
                off.len(),
                off.join("; ")
            )
        })?;
        Ok(format!(
            "11 scenarios, max |P_E - empirical| = {worst:.2e}, argmin within one step"
        ))
    })();
    report(3, "covert closed forms", result);
}

#[test]
fn criterion_4_detection_error_monotone_in_beta() {
    let result = (|| {
        let p = default_params();
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let betas: Vec<f64> = (1..=19).map(|i| i as f64 * 0.05).collect();
        let mut violations = 0;
        for _ in 0..100 {
            let base = random_scenario(&p, &mut rng);
            let curve: Vec<f64> = betas
                .iter()
                .map(|&beta| covert::min_detection_error(&CovertScenario { beta, ..base }))
                .collect();
            violations += curve.windows(2).filter(|w| w[1] < w[0] - 1e-12).count();
        }
        check(violations == 0, || format!("{violations} decreasing steps"))?;
        Ok("100 scenarios x 19 beta values, no decreasing step".into())
    })();
    report(4, "P_E* monotone in beta", result);
}

#[test]
fn criterion_5_detection_error_independent_of_source_power() {
    let result = (|| {
        let values: Vec<f64> = [1e-5, 1e-4, 1e-3]
            .iter()
            .map(|&p_s| {
                let p = SystemParams {
                    p_s,
                    ..default_params()
                };
                let s = CovertScenario::new(&p, &derive_gains(&p), EXAMPLE_G_SD, EXAMPLE_G_RD);
                covert::min_detection_error(&s)
            })
            .collect();
        let spread = values
            .iter()
            .fold(0.0f64, |m, v| m.max((v - values[0]).abs()));
        check(spread <= 1e-12, || format!("P_E* spread {spread}"))?;
        Ok(format!("P_E*={} for all three source powers", values[0]))
    })();
    report(5, "P_E* independent of P_S", result);
}

#[test]
fn criterion_6_outage_cdf_oracles() {
    let result = (|| {
        let p = default_params();
        let g = derive_gains(&p);
        let mut worst = 0.0f64;
        for i in 0..50 {
            let x = 0.01 + (10.0 - 0.01) * i as f64 / 49.0;
            let r = cdf_gamma_d_h0(&p, &g, x).map_err(|e| e.to_string())?;
            let cf = r
                .closed_form
                .ok_or_else(|| format!("closed form unavailable at x={x}"))?;
            worst = worst.max((cf - r.oracle).abs());
        }
        check(worst <= 1e-6, || {
            format!("closed form vs quadrature gap {worst}")
        })?;

        let x = 1.0;
        let n = 10_000_000u64;
        let chunks = 16u64;
        let hits: (u64, u64) = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = ChaCha8Rng::seed_from_u64(600 + c);
                let e = |m: f64| Exp::new(1.0 / m).unwrap();
                let (sd, sr, rr, rd) = (e(g.omega_sd), e(g.omega_sr), e(g.omega_rr), e(g.omega_rd));
                let mut h = (0, 0);
                for _ in 0..n / chunks {
                    let gamma_sd = p.p_s * sd.sample(&mut rng) / p.sigma2_d;
                    let (g_sr, g_rr, g_rd) = (
                        sr.sample(&mut rng),
                        rr.sample(&mut rng),
                        rd.sample(&mut rng),
                    );
                    if gamma_sd >= p.gamma_th {
                        continue;
                    }
                    let hop1 = |pfs: f64| {
                        (1.0 - p.rho) * p.p_s * g_sr
                            / ((1.0 - p.rho) * p.k * pfs * g_rr + p.sigma2_r)
                    };
                    let y0 = hop1(p.p_r).min(p.p_r * g_rd / p.sigma2_d);
                    let y1 =
                        hop1(p.p_r + p.p_delta).min(p.p_r * g_rd / (p.p_delta * g_rd + p.sigma2_d));
                    h.0 += (gamma_sd + y0 < x) as u64;
                    h.1 += (gamma_sd + y1 < x) as u64;
                }
                h
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        let mc0 = hits.0 as f64 / n as f64;
        let mc1 = hits.1 as f64 / n as f64;
        let an0 = cdf_gamma_d_h0(&p, &g, x).map_err(|e| e.to_string())?.value;
        let an1 = cdf_gamma_d_h1(&p, &g, x).map_err(|e| e.to_string())?;
        check((an1 - mc1).abs() <= 1e-3, || {
            format!("covert joint CDF {an1} vs MC {mc1}")
        })?;
        check((an0 - mc0).abs() <= 1e-3, || {
            format!("plain joint CDF {an0} vs MC {mc0}")
        })?;
        Ok(format!(
            "closed form vs quadrature {worst:.1e}; at x=1 covert {an1:.6} vs MC {mc1:.6}, plain {an0:.6} vs MC {mc0:.6}"
        ))
    })();
    report(6, "outage CDF oracles", result);
}

#[test]
fn criterion_7_overall_outage_cross_validation() {
    let result = (|| {
        let mut spec = figure_preset("fig4").unwrap();
        spec.family = Some((hor::params::ParamKey::L, vec![5.0, 25.0]));
        spec.blocks_per_point = 1_000_000;
        let t = run_sweep(&spec, &ParamsBuilder::new()).map_err(|e| e.to_string())?;
        let gap = t.max_gap.unwrap();
        check(gap <= 0.01, || {
            format!("max |analytic - simulated| = {gap}")
        })?;
        let top = t.column("top").unwrap();
        let n = spec.grid.len();
        let (l5, l25) = top.split_at(n);
        let excess = l25
            .iter()
            .zip(l5)
            .map(|(a, b)| a - b)
            .fold(f64::NEG_INFINITY, f64::max);
        check(excess <= 0.005, || format!("L=25 exceeds L=5 by {excess}"))?;
        Ok(format!(
            "{} points, max gap {gap:.4}, max(L25 - L5) = {excess:.2e}",
            2 * n
        ))
    })();
    report(7, "overall outage vs simulation", result);
}

fn analytic(name: &str) -> hor::sweep::SweepTable {
    let mut spec = figure_preset(name).unwrap();
    spec.blocks_per_point = 0;
    run_sweep(&spec, &ParamsBuilder::new()).unwrap()
}

fn argmin(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0
}

#[test]
fn criterion_8_qualitative_shapes() {
    let result = (|| {
        let mut notes = Vec::new();

        let t = analytic("fig6");
        let rho = t.column("rho").unwrap();
        let top = t.column("top").unwrap();
        let n = figure_preset("fig6").unwrap().grid.len();
        // L=25 curve
        let (r, c) = (&rho[n..2 * n], &top[n..2 * n]);
        let i = argmin(c);
        check(i > 0 && i < n - 1 && (0.79..=0.89).contains(&r[i]), || {
            format!("rho argmin {}", r[i])
        })?;
        notes.push(format!("rho*={}", r[i]));

        let t = analytic("fig7");
        let s2 = t.column("sigma2_R").unwrap();
        let top = t.column("top").unwrap();
        let sigma2_d = default_params().sigma2_d;
        let n = figure_preset("fig7").unwrap().grid.len();
        for (s, c) in s2.chunks(n).zip(top.chunks(n)) {
            let flat: Vec<f64> = s
                .iter()
                .zip(c)
                .filter(|(s, _)| **s <= sigma2_d * (1.0 + 1e-9))
                .map(|x| *x.1)
                .collect();
            let spread = flat.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - flat.iter().cloned().fold(f64::INFINITY, f64::min);
            check(spread <= 0.002, || {
                format!("sigma2_R flat region spread {spread}")
            })?;
            let rising: Vec<f64> = s
                .iter()
                .zip(c)
                .filter(|(s, _)| **s >= sigma2_d * (1.0 - 1e-9))
                .map(|x| *x.1)
                .collect();
            check(rising.windows(2).all(|w| w[1] > w[0]), || {
                "TOP not strictly increasing above sigma2_D".into()
            })?;
        }
        notes.push("sigma2_R flat then rising".into());

        let t = analytic("fig8");
        let top = t.column("top").unwrap();
        let n = figure_preset("fig8").unwrap().grid.len();
        for c in top.chunks(n) {
            check(c.windows(2).all(|w| w[1] >= w[0] - 1e-12), || {
                "TOP decreases in k".into()
            })?;
        }
        notes.push("TOP nondecreasing in k".into());

        let t = analytic("fig10");
        let gth = t.column("gamma_th").unwrap();
        let top = t.column("top").unwrap();
        let n = figure_preset("fig10").unwrap().grid.len();
        let (a, b) = (argmin(&top[..n]), argmin(&top[n..]));
        check(a.abs_diff(b) <= 1, || {
            format!("gamma_th argmins {} vs {}", gth[a], gth[n + b])
        })?;
        notes.push(format!("gamma_th*={} for both k", gth[a]));
        Ok(notes.join(", "))
    })();
    report(8, "qualitative shapes", result);
}

#[test]
fn criterion_9_typo_regressions() {
    let result = (|| {
        let tail = erlang2_cdf(f64::INFINITY, 1.0).map_err(|e| e.to_string())?;
        check(tail == 1.0, || format!("erlang2_cdf(inf) = {tail}"))?;
        let p = default_params();
        let g = derive_gains(&p);
        let m = build_transition_matrix(&p, &g, 0.5).map_err(|e| e.to_string())?;
        let s = run(&SimConfig::new(p, 1_000_000, 99))
            .map_err(|e| e.to_string())?
            .summary;
        let mut worst = 0.0f64;
        let mut rows = 0;
        for i in 0..m.states() {
            let visits: u64 = s.transitions[i].iter().sum();
            if visits < 10_000 {
                continue;
            }
            rows += 1;
            for j in 0..i {
                let f = s.transition_frequency(i, j).unwrap();
                worst = worst.max((f - m.get(i, j)).abs());
            }
        }
        check(worst <= 2e-3, || {
            format!("descending transitions differ by {worst}")
        })?;
        check(rows > 0, || "no row visited often enough".into())?;
        let (_, _, r) = analyze(&p).map_err(|e| e.to_string())?;
        Ok(format!(
            "erlang tail 1; {rows} rows with >=1e4 visits, max descending gap {worst:.1e} (TOP {:.5})",
            r.top
        ))
    })();
    report(9, "typo regressions", result);
}
