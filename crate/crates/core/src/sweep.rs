//! Parameter sweeps pairing the closed forms with simulation, and the
//! named presets that reproduce the standard figure scenarios.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use crate::covert::{self, CovertScenario, EXAMPLE_G_RD, EXAMPLE_G_SD};
use crate::energy::unit;
use crate::error::{Error, Result};
use crate::markov::{build_transition_matrix, stationary_distribution, StationaryDistribution};
use crate::outage::{top_overall, OutageReport};
use crate::params::{
    dbm_to_watt, derive_gains, watt_to_dbm, Binding, ParamKey, ParamsBuilder, SystemParams,
};
use crate::sim::{run, SimConfig};

/// Share of relaying blocks carrying a covert message under equal priors.
pub const EQUAL_PRIOR: f64 = 0.5;

/// Thresholds per point of a covert sweep.
pub const COVERT_TAU_POINTS: usize = 200;

/// Level count standing in for an unquantized battery.
pub const UNQUANTIZED_PROXY_LEVELS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    /// Outage probability per grid point.
    Outage,
    /// Stationary level distribution per grid point.
    Stationary,
    /// Detection error over a threshold grid per point, at fixed channel gains.
    Covert,
}

impl std::str::FromStr for SweepKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "outage" => Ok(SweepKind::Outage),
            "stationary" => Ok(SweepKind::Stationary),
            "covert" => Ok(SweepKind::Covert),
            _ => Err(Error::Config(format!(
                "unknown sweep kind '{s}' (outage, stationary, covert)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub name: String,
    pub kind: SweepKind,
    pub target: ParamKey,
    pub grid: Vec<f64>,
    /// Second parameter; one curve per value.
    pub family: Option<(ParamKey, Vec<f64>)>,
    /// Bindings the sweep turns off so the target can move freely.
    pub release: Vec<Binding>,
    pub blocks_per_point: u64,
    pub seed_base: u64,
    /// Fixed `(g_SD, g_RD_hat)` for covert sweeps.
    pub covert_gains: (f64, f64),
}

impl SweepSpec {
    pub fn new(name: &str, kind: SweepKind, target: ParamKey, grid: Vec<f64>) -> Self {
        Self {
            name: name.to_string(),
            kind,
            target,
            grid,
            family: None,
            release: Vec::new(),
            blocks_per_point: 100_000,
            seed_base: 0x5eed,
            covert_gains: (EXAMPLE_G_SD, EXAMPLE_G_RD),
        }
    }

    pub fn with_family(mut self, key: ParamKey, values: Vec<f64>) -> Self {
        self.family = Some((key, values));
        self
    }

    pub fn releasing(mut self, b: Binding) -> Self {
        self.release.push(b);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let monotone = |v: &[f64]| {
            !v.is_empty()
                && v.iter().all(|x| x.is_finite())
                && (v.windows(2).all(|w| w[1] > w[0]) || v.windows(2).all(|w| w[1] < w[0]))
        };
        if !monotone(&self.grid) {
            return Err(Error::Config(format!(
                "sweep '{}': grid must be nonempty, finite and strictly monotone",
                self.name
            )));
        }
        if let Some((key, values)) = &self.family {
            if *key == self.target {
                return Err(Error::Config(
                    "family parameter must differ from the target".into(),
                ));
            }
            if values.is_empty() {
                return Err(Error::Config("family needs at least one value".into()));
            }
        }
        Ok(())
    }

    /// `(family value, target value)` pairs in output order.
    fn points(&self) -> Vec<(Option<f64>, f64)> {
        match &self.family {
            Some((_, fam)) => fam
                .iter()
                .flat_map(|&f| self.grid.iter().map(move |&x| (Some(f), x)))
                .collect(),
            None => self.grid.iter().map(|&x| (None, x)).collect(),
        }
    }

    /// Parameters at one grid point. Conflicting bindings surface here.
    pub fn params_at(
        &self,
        base: &ParamsBuilder,
        family: Option<f64>,
        x: f64,
    ) -> Result<SystemParams> {
        let mut b = base.clone();
        for r in &self.release {
            b.release(*r);
        }
        if let (Some((key, _)), Some(f)) = (&self.family, family) {
            b.set(*key, f)?;
        }
        b.set(self.target, x)?;
        b.build()
    }
}

pub const PRESET_NAMES: [&str; 11] = [
    "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig11", "fig12",
];

fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![start];
    }
    (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            tidy(start * (1.0 - t) + stop * t)
        })
        .collect()
}

/// Rounds to 12 significant digits so grids print as typed.
fn tidy(x: f64) -> f64 {
    format!("{x:.11e}").parse().expect("formatted float parses")
}

fn dbm_grid(start: f64, stop: f64, n: usize) -> Vec<f64> {
    linspace(start, stop, n)
        .into_iter()
        .map(|d| tidy(dbm_to_watt(d)))
        .collect()
}

/// Named sweep presets. The grids are listed in the README.
pub fn figure_preset(name: &str) -> Result<SweepSpec> {
    use ParamKey::*;
    use SweepKind::*;
    let levels = vec![5.0, 25.0, UNQUANTIZED_PROXY_LEVELS as f64];
    let ks = vec![0.1, 1.0];
    let spec = match name {
        "fig2" => SweepSpec::new(name, Stationary, L, vec![5.0, 25.0]),
        "fig3" => SweepSpec::new(name, Covert, Beta, vec![0.5]),
        "fig4" => {
            SweepSpec::new(name, Outage, PS, dbm_grid(-30.0, 10.0, 17)).with_family(L, levels)
        }
        "fig5" => {
            SweepSpec::new(name, Outage, CP, linspace(0.2e-6, 2.0e-6, 10)).with_family(L, levels)
        }
        "fig6" => {
            SweepSpec::new(name, Outage, Rho, linspace(0.02, 0.98, 49)).with_family(L, levels)
        }
        "fig7" => SweepSpec::new(name, Outage, Sigma2R, dbm_grid(-80.0, -20.0, 13))
            .with_family(Rho, vec![0.5, 0.84, 0.9]),
        "fig8" => SweepSpec::new(name, Outage, K, linspace(0.05, 1.0, 20)).with_family(
            PS,
            vec![dbm_to_watt(-20.0), dbm_to_watt(-10.0), dbm_to_watt(0.0)],
        ),
        "fig9" => SweepSpec::new(name, Outage, DSR, linspace(8.0, 22.0, 15)).with_family(L, levels),
        "fig10" => SweepSpec::new(name, Outage, GammaTh, linspace(0.1, 3.0, 30)).with_family(K, ks),
        "fig11" => SweepSpec::new(name, Outage, ETh, linspace(0.1e-6, 1.0e-6, 10))
            .with_family(K, ks)
            .releasing(Binding::EthFromCp),
        "fig12" => SweepSpec::new(name, Outage, PR, linspace(0.1e-6, 1.0e-6, 10))
            .with_family(K, ks)
            .releasing(Binding::PrFromEth),
        _ => {
            return Err(Error::UnknownPreset {
                name: name.to_string(),
                valid: PRESET_NAMES.join(", "),
            })
        }
    };
    Ok(spec)
}

/// Table of a sweep. Missing values are `NaN` and print as empty cells.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Largest |analytic - empirical| of the headline metric.
    pub max_gap: Option<f64>,
    /// Some closed form disagreed with its quadrature check.
    pub diverged: bool,
}

impl SweepTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Writes the table as CSV. `meta` is an optional leading comment line
    /// (typically a timestamp); trailing notes become `# ` lines.
    pub fn write_csv<W: Write>(&self, out: W, meta: Option<&str>, notes: &[String]) -> Result<()> {
        write_csv(out, &self.columns, &self.rows, meta, notes)
    }
}

/// Comma-separated, `.` decimals, LF line ends; `NaN` as an empty cell.
pub fn write_csv<W: Write, S: AsRef<str>>(
    mut out: W,
    columns: &[S],
    rows: &[Vec<f64>],
    meta: Option<&str>,
    notes: &[String],
) -> Result<()> {
    if let Some(m) = meta {
        writeln!(out, "# {m}")?;
    }
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut out);
        w.write_record(columns.iter().map(|c| c.as_ref()))?;
        for r in rows {
            w.write_record(r.iter().map(|v| {
                if v.is_nan() {
                    String::new()
                } else {
                    v.to_string()
                }
            }))?;
        }
        w.flush()?;
    }
    for n in notes {
        writeln!(out, "# {n}")?;
    }
    Ok(())
}

/// Chain, stationary law and outage report at one parameter point.
pub fn analyze(p: &SystemParams) -> Result<(StationaryDistribution, usize, OutageReport)> {
    let g = derive_gains(p);
    let m = build_transition_matrix(p, &g, EQUAL_PRIOR)?;
    let xi = stationary_distribution(&m)?;
    let report = top_overall(p, &g, &xi, m.phi, EQUAL_PRIOR)?;
    Ok((xi, m.phi, report))
}

/// Empirical false-alarm and missed-detection rates at each threshold from
/// `draws` estimation-error samples per hypothesis. The same samples serve
/// every threshold.
pub fn empirical_detection(
    s: &CovertScenario,
    taus: &[f64],
    draws: usize,
    seed: u64,
) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean = s.beta * s.omega_rd;
    let mut t0 = Vec::with_capacity(draws);
    let mut t1 = Vec::with_capacity(draws);
    for _ in 0..draws {
        let e: f64 = mean * rng.sample::<f64, _>(Exp1);
        t0.push(covert::radiometer_statistic(s, e, false));
        let e: f64 = mean * rng.sample::<f64, _>(Exp1);
        t1.push(covert::radiometer_statistic(s, e, true));
    }
    t0.sort_by(f64::total_cmp);
    t1.sort_by(f64::total_cmp);
    let n = draws as f64;
    taus.iter()
        .map(|&tau| {
            let fa = (draws - t0.partition_point(|&t| t <= tau)) as f64 / n;
            let md = t1.partition_point(|&t| t <= tau) as f64 / n;
            (fa, md)
        })
        .collect()
}

/// Threshold grid covering both knees and the optimum of `P_E`.
pub fn tau_grid(s: &CovertScenario, n: usize) -> Vec<f64> {
    let (j0, j1) = (s.j0(), s.j1());
    let star = covert::optimal_threshold(s);
    let spread = s.beta * (s.p_r + s.p_delta) * s.omega_rd;
    let lo = j0 - 0.25 * (j1 - j0).max(spread);
    let hi = star.max(j1) + 4.0 * spread;
    linspace(lo, hi, n)
}

fn gap(a: f64, b: f64) -> f64 {
    if b.is_nan() {
        f64::NAN
    } else {
        (a - b).abs()
    }
}

pub fn run_sweep(spec: &SweepSpec, base: &ParamsBuilder) -> Result<SweepTable> {
    spec.validate()?;
    let points = spec.points();
    // bindings are checked up front so a conflict is one clear error
    for &(f, x) in &points {
        spec.params_at(base, f, x)?;
    }
    let with_sim = spec.blocks_per_point > 0;
    let rows: Vec<Result<Vec<Vec<f64>>>> = points
        .par_iter()
        .enumerate()
        .map(|(idx, &(f, x))| {
            let p = spec.params_at(base, f, x)?;
            let seed = spec.seed_base ^ idx as u64;
            let lead: Vec<f64> = f.into_iter().chain([x]).collect();
            point_rows(spec, &p, lead, seed, with_sim)
        })
        .collect();
    let mut table_rows = Vec::new();
    let mut diverged = false;
    for r in rows {
        for row in r? {
            table_rows.push(row);
        }
    }
    let mut columns: Vec<String> = Vec::new();
    if let Some((key, _)) = &spec.family {
        columns.push(key.name().to_string());
    }
    columns.push(spec.target.name().to_string());
    let (metric_cols, gap_col): (Vec<&str>, &str) = match spec.kind {
        SweepKind::Outage => (
            vec![
                "top_fs",
                "top_peh",
                "top",
                "top_no_relay",
                "p_energy_ok",
                "diverged",
                "sim_top_fs",
                "sim_top_peh",
                "sim_top",
                "gap_top",
            ],
            "gap_top",
        ),
        SweepKind::Stationary => (
            vec!["level", "index_energy_joule", "xi", "sim_xi", "gap_xi"],
            "gap_xi",
        ),
        SweepKind::Covert => (
            vec![
                "tau", "p_fa", "p_md", "p_e", "sim_p_fa", "sim_p_md", "sim_p_e", "gap_p_e",
                "tau_star", "p_e_star",
            ],
            "gap_p_e",
        ),
    };
    columns.extend(metric_cols.iter().map(|s| s.to_string()));
    if spec.kind == SweepKind::Outage {
        let i = columns
            .iter()
            .position(|c| c == "diverged")
            .expect("column exists");
        diverged = table_rows.iter().any(|r| r[i] > 0.0);
    }
    let gi = columns
        .iter()
        .position(|c| c == gap_col)
        .expect("column exists");
    let max_gap = table_rows
        .iter()
        .map(|r| r[gi])
        .filter(|v| !v.is_nan())
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
    Ok(SweepTable {
        name: spec.name.clone(),
        columns,
        rows: table_rows,
        max_gap,
        diverged,
    })
}

fn point_rows(
    spec: &SweepSpec,
    p: &SystemParams,
    lead: Vec<f64>,
    seed: u64,
    with_sim: bool,
) -> Result<Vec<Vec<f64>>> {
    let row = |rest: &[f64]| -> Vec<f64> { lead.iter().chain(rest).copied().collect() };
    match spec.kind {
        SweepKind::Outage => {
            let (_, _, r) = analyze(p)?;
            let (fs, peh, top) = if with_sim {
                let s = run(&SimConfig::new(*p, spec.blocks_per_point, seed))?.summary;
                (
                    s.empirical_top_fs(),
                    s.empirical_top_peh(),
                    s.empirical_top(),
                )
            } else {
                (f64::NAN, f64::NAN, f64::NAN)
            };
            Ok(vec![row(&[
                r.top_fs,
                r.top_peh,
                r.top,
                r.top_no_relay,
                r.p_energy_ok,
                r.diverged as u8 as f64,
                fs,
                peh,
                top,
                gap(r.top, top),
            ])])
        }
        SweepKind::Stationary => {
            let (xi, _, _) = analyze(p)?;
            let sim_xi = if with_sim {
                run(&SimConfig::new(*p, spec.blocks_per_point, seed))?
                    .summary
                    .empirical_xi()
            } else {
                vec![f64::NAN; xi.xi.len()]
            };
            let u = unit(p);
            Ok(xi
                .xi
                .iter()
                .zip(&sim_xi)
                .enumerate()
                .map(|(lvl, (&a, &e))| row(&[lvl as f64, lvl as f64 * u, a, e, gap(a, e)]))
                .collect())
        }
        SweepKind::Covert => {
            let g = derive_gains(p);
            let (g_sd, g_hat) = spec.covert_gains;
            let s = CovertScenario::new(p, &g, g_sd, g_hat);
            let taus = tau_grid(&s, COVERT_TAU_POINTS);
            let emp = if with_sim {
                empirical_detection(&s, &taus, spec.blocks_per_point as usize, seed)
            } else {
                vec![(f64::NAN, f64::NAN); taus.len()]
            };
            let (star, pe_star) = (
                covert::optimal_threshold(&s),
                covert::min_detection_error(&s),
            );
            Ok(taus
                .iter()
                .zip(emp)
                .map(|(&tau, (fa, md))| {
                    let m = covert::covert_metrics(&s, tau);
                    row(&[
                        tau,
                        m.p_fa,
                        m.p_md,
                        m.p_e,
                        fa,
                        md,
                        fa + md,
                        gap(m.p_e, fa + md),
                        star,
                        pe_star,
                    ])
                })
                .collect())
        }
    }
}

/// Outage at `L = 200` and at the proxy level count; their difference
/// bounds the error of treating the proxy as an unquantized battery.
pub fn proxy_convergence(p: &SystemParams) -> Result<(f64, f64)> {
    let at = |levels| analyze(&SystemParams { levels, ..*p }).map(|(_, _, r)| r.top);
    Ok((at(200)?, at(UNQUANTIZED_PROXY_LEVELS)?))
}

/// Converts a grid in watts to dBm for display.
pub fn to_dbm(values: &[f64]) -> Vec<f64> {
    values.iter().map(|&v| watt_to_dbm(v)).collect()
}
