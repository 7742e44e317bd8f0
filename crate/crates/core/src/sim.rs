//! Block-by-block Monte Carlo of the whole protocol.
//!
//! Each block draws fresh channels, picks the mode, moves the PEC level,
//! optionally injects a covert message, runs the destination's radiometer
//! and scores outage. Nothing here calls the closed forms except the
//! per-block optimal detection threshold, which the destination is
//! assumed to know.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::covert::{self, CovertScenario};
use crate::energy::{
    discretize_charge_fs, discretize_charge_peh, discretize_consume, harvest_fs, harvest_peh,
    relay_power,
};
use crate::error::{Error, Result};
use crate::params::{derive_gains, sample_block, BlockChannels, ChannelGains, SystemParams};

/// How blocks that want to relay but lack energy enter the outage rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutageAccounting {
    /// The destination gets nothing usable that block: outage.
    #[default]
    ChargingCountsAsOutage,
    /// Such blocks are left out of numerator and denominator.
    ExcludeChargingBlocks,
}

/// Which `g_SD`, `g_RD_hat` the detector sees.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum CovertChannels {
    /// The block's own draws.
    #[default]
    PerBlock,
    /// Fixed known gains; only the estimation error is random.
    Fixed { g_sd: f64, g_rd_hat: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ThresholdPolicy {
    /// The per-block optimal threshold.
    #[default]
    Optimal,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub params: SystemParams,
    pub blocks: u64,
    pub seed: u64,
    pub record_trace: bool,
    pub covert_prior: f64,
    pub outage_accounting: OutageAccounting,
    pub covert_channels: CovertChannels,
    pub threshold: ThresholdPolicy,
}

impl SimConfig {
    pub fn new(params: SystemParams, blocks: u64, seed: u64) -> Self {
        Self {
            params,
            blocks,
            seed,
            record_trace: false,
            covert_prior: 0.5,
            outage_accounting: OutageAccounting::default(),
            covert_channels: CovertChannels::default(),
            threshold: ThresholdPolicy::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.blocks == 0 {
            return Err(Error::InvalidParams("blocks must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.covert_prior) {
            return Err(Error::InvalidParams(format!(
                "covert_prior must lie in [0, 1], got {}",
                self.covert_prior
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Mode {
    #[serde(rename = "PEH")]
    Peh,
    #[serde(rename = "FS")]
    Fs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    D0,
    D1,
    #[serde(rename = "NOT_TESTED")]
    NotTested,
}

/// One block of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub block_index: u64,
    pub mode: Mode,
    pub pec_level_before: usize,
    pub pec_level_after: usize,
    pub covert_flag: bool,
    pub detection_verdict: Verdict,
    pub outage_flag: bool,
    #[serde(rename = "gamma_D")]
    pub gamma_d: f64,
}

/// Raw counts of a run. Counts from independent runs of the same
/// parameters can be merged.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSummary {
    pub blocks: u64,
    /// Blocks that started at each level.
    pub level_hist: Vec<u64>,
    /// `transitions[i][j]`: blocks that went from level `i` to `j`.
    pub transitions: Vec<Vec<u64>>,
    pub fs_blocks: u64,
    /// PEH blocks chosen because the direct link was good enough.
    pub direct_blocks: u64,
    /// PEH blocks forced by a short battery while the direct link was weak.
    pub charging_blocks: u64,
    pub fs_outages: u64,
    pub direct_outages: u64,
    pub charging_outages: u64,
    pub h0_blocks: u64,
    pub h1_blocks: u64,
    pub false_alarms: u64,
    pub missed_detections: u64,
    /// Sums of the analytic per-block probabilities, for comparison with
    /// the empirical frequencies.
    pub sum_p_fa: f64,
    pub sum_p_md: f64,
    pub sum_p_e_star: f64,
    pub phi: usize,
    pub outage_accounting: OutageAccounting,
}

impl SimSummary {
    fn new(levels: usize, phi: usize, accounting: OutageAccounting) -> Self {
        Self {
            blocks: 0,
            level_hist: vec![0; levels + 1],
            transitions: vec![vec![0; levels + 1]; levels + 1],
            fs_blocks: 0,
            direct_blocks: 0,
            charging_blocks: 0,
            fs_outages: 0,
            direct_outages: 0,
            charging_outages: 0,
            h0_blocks: 0,
            h1_blocks: 0,
            false_alarms: 0,
            missed_detections: 0,
            sum_p_fa: 0.0,
            sum_p_md: 0.0,
            sum_p_e_star: 0.0,
            phi,
            outage_accounting: accounting,
        }
    }

    /// Adds the counts of another run with the same parameters.
    pub fn merge(&mut self, other: &SimSummary) -> Result<()> {
        if self.level_hist.len() != other.level_hist.len()
            || self.phi != other.phi
            || self.outage_accounting != other.outage_accounting
        {
            return Err(Error::InvalidParams(
                "cannot merge runs of different chains".into(),
            ));
        }
        self.blocks += other.blocks;
        for (a, b) in self.level_hist.iter_mut().zip(&other.level_hist) {
            *a += b;
        }
        for (ra, rb) in self.transitions.iter_mut().zip(&other.transitions) {
            for (a, b) in ra.iter_mut().zip(rb) {
                *a += b;
            }
        }
        self.fs_blocks += other.fs_blocks;
        self.direct_blocks += other.direct_blocks;
        self.charging_blocks += other.charging_blocks;
        self.fs_outages += other.fs_outages;
        self.direct_outages += other.direct_outages;
        self.charging_outages += other.charging_outages;
        self.h0_blocks += other.h0_blocks;
        self.h1_blocks += other.h1_blocks;
        self.false_alarms += other.false_alarms;
        self.missed_detections += other.missed_detections;
        self.sum_p_fa += other.sum_p_fa;
        self.sum_p_md += other.sum_p_md;
        self.sum_p_e_star += other.sum_p_e_star;
        Ok(())
    }

    pub fn empirical_xi(&self) -> Vec<f64> {
        let n = self.blocks as f64;
        self.level_hist.iter().map(|&c| c as f64 / n).collect()
    }

    /// Fraction of blocks that started with enough energy to relay.
    pub fn energy_ok_fraction(&self) -> f64 {
        self.level_hist[self.phi..].iter().sum::<u64>() as f64 / self.blocks as f64
    }

    fn outage_denominator(&self) -> f64 {
        match self.outage_accounting {
            OutageAccounting::ChargingCountsAsOutage => self.blocks as f64,
            OutageAccounting::ExcludeChargingBlocks => (self.blocks - self.charging_blocks) as f64,
        }
    }

    pub fn empirical_top_fs(&self) -> f64 {
        self.fs_outages as f64 / self.outage_denominator()
    }

    pub fn empirical_top_peh(&self) -> f64 {
        let charging = match self.outage_accounting {
            OutageAccounting::ChargingCountsAsOutage => self.charging_outages,
            OutageAccounting::ExcludeChargingBlocks => 0,
        };
        (self.direct_outages + charging) as f64 / self.outage_denominator()
    }

    pub fn empirical_top(&self) -> f64 {
        self.empirical_top_fs() + self.empirical_top_peh()
    }

    /// Frequency of `i -> j` among blocks that started at `i`.
    pub fn transition_frequency(&self, i: usize, j: usize) -> Option<f64> {
        let row: u64 = self.transitions[i].iter().sum();
        (row > 0).then(|| self.transitions[i][j] as f64 / row as f64)
    }

    /// `key=value` lines for the command line tool.
    pub fn key_values(&self) -> Vec<(String, String)> {
        let mut kv = vec![
            ("blocks".to_string(), self.blocks.to_string()),
            ("fs_blocks".into(), self.fs_blocks.to_string()),
            ("direct_blocks".into(), self.direct_blocks.to_string()),
            ("charging_blocks".into(), self.charging_blocks.to_string()),
            (
                "energy_ok_fraction".into(),
                self.energy_ok_fraction().to_string(),
            ),
            ("empirical_top".into(), self.empirical_top().to_string()),
            (
                "empirical_top_fs".into(),
                self.empirical_top_fs().to_string(),
            ),
            (
                "empirical_top_peh".into(),
                self.empirical_top_peh().to_string(),
            ),
        ];
        if let Ok(c) = empirical_covert_metrics(self) {
            kv.push(("empirical_p_fa".into(), c.p_fa.to_string()));
            kv.push(("empirical_p_md".into(), c.p_md.to_string()));
            kv.push(("empirical_p_e".into(), c.p_e.to_string()));
            kv.push(("mean_analytic_p_e".into(), c.mean_analytic_p_e.to_string()));
            kv.push(("mean_p_e_star".into(), c.mean_p_e_star.to_string()));
        }
        kv
    }
}

/// Result of [`run`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimRun {
    pub summary: SimSummary,
    pub trace: Option<Vec<TraceRecord>>,
}

/// Draws of one block beyond the channel gains.
struct BlockDraws {
    ch: BlockChannels,
    covert_u: f64,
}

fn draw<R: Rng>(gains: &ChannelGains, beta: f64, rng: &mut R) -> BlockDraws {
    let ch = sample_block(gains, beta, rng);
    // drawn every block so streams stay aligned across parameter changes
    let covert_u = rng.random::<f64>();
    BlockDraws { ch, covert_u }
}

/// Relayed SINR `Y` for one block.
fn relayed_sinr(p: &SystemParams, ch: &BlockChannels, covert: bool) -> f64 {
    let p_fs = relay_power(p, covert);
    let first =
        (1.0 - p.rho) * p.p_s * ch.g_sr / ((1.0 - p.rho) * p.k * p_fs * ch.g_rr + p.sigma2_r);
    let second = if covert {
        p.p_r * ch.g_rd / (p.p_delta * ch.g_rd + p.sigma2_d)
    } else {
        p.p_r * ch.g_rd / p.sigma2_d
    };
    first.min(second)
}

pub fn run(cfg: &SimConfig) -> Result<SimRun> {
    cfg.validate()?;
    let p = &cfg.params;
    let gains = derive_gains(p);
    let levels = p.levels;
    let q_c = discretize_consume(p) as usize;
    let phi = q_c;
    let x_th = p.rate_threshold();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut summary = SimSummary::new(levels, phi, cfg.outage_accounting);
    let mut trace = cfg.record_trace.then(Vec::new);
    let mut level = 0usize;

    for b in 0..cfg.blocks {
        let BlockDraws { ch, covert_u } = draw(&gains, p.beta, &mut rng);
        let before = level;
        let gamma_sd = p.p_s * ch.g_sd / p.sigma2_d;
        let mut rec = TraceRecord {
            block_index: b,
            mode: Mode::Peh,
            pec_level_before: before,
            pec_level_after: before,
            covert_flag: false,
            detection_verdict: Verdict::NotTested,
            outage_flag: false,
            gamma_d: gamma_sd,
        };
        if gamma_sd >= p.gamma_th || before < phi {
            let credit = discretize_charge_peh(p, harvest_peh(p, ch.g_sr));
            level = (before as u64 + credit).min(levels as u64) as usize;
            if gamma_sd >= p.gamma_th {
                summary.direct_blocks += 1;
                rec.outage_flag = gamma_sd < x_th;
                summary.direct_outages += rec.outage_flag as u64;
            } else {
                // the relay cannot help and the direct link alone is too weak
                summary.charging_blocks += 1;
                rec.outage_flag = true;
                rec.gamma_d = 0.0;
                summary.charging_outages += 1;
            }
        } else {
            let covert = covert_u < cfg.covert_prior;
            let credit = discretize_charge_fs(p, harvest_fs(p, ch.g_sr, ch.g_rr, covert));
            level = ((before - q_c) as u64 + credit).min(levels as u64) as usize;
            let gamma_d = gamma_sd + relayed_sinr(p, &ch, covert);
            rec.mode = Mode::Fs;
            rec.covert_flag = covert;
            rec.gamma_d = gamma_d;
            rec.outage_flag = gamma_d < x_th;
            summary.fs_blocks += 1;
            summary.fs_outages += rec.outage_flag as u64;

            let scenario = match cfg.covert_channels {
                CovertChannels::PerBlock => CovertScenario::new(p, &gains, ch.g_sd, ch.g_rd_hat),
                CovertChannels::Fixed { g_sd, g_rd_hat } => {
                    CovertScenario::new(p, &gains, g_sd, g_rd_hat)
                }
            };
            let tau = match cfg.threshold {
                ThresholdPolicy::Optimal => covert::optimal_threshold(&scenario),
                ThresholdPolicy::Fixed(t) => t,
            };
            let t = covert::radiometer_statistic(&scenario, ch.g_rd_tilde, covert);
            let declares_covert = t > tau;
            rec.detection_verdict = if declares_covert {
                Verdict::D1
            } else {
                Verdict::D0
            };
            if covert {
                summary.h1_blocks += 1;
                summary.missed_detections += (!declares_covert) as u64;
            } else {
                summary.h0_blocks += 1;
                summary.false_alarms += declares_covert as u64;
            }
            summary.sum_p_fa += covert::p_false_alarm(&scenario, tau);
            summary.sum_p_md += covert::p_missed_detection(&scenario, tau);
            summary.sum_p_e_star += covert::min_detection_error(&scenario);
        }
        rec.pec_level_after = level;
        summary.blocks += 1;
        summary.level_hist[before] += 1;
        summary.transitions[before][level] += 1;
        if let Some(t) = trace.as_mut() {
            t.push(rec);
        }
    }
    Ok(SimRun { summary, trace })
}

/// Detection error rates over the relaying blocks of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmpiricalCovert {
    pub p_fa: f64,
    pub p_md: f64,
    pub p_e: f64,
    /// Block averages of the analytic probabilities at the thresholds used.
    pub mean_analytic_p_fa: f64,
    pub mean_analytic_p_md: f64,
    pub mean_analytic_p_e: f64,
    pub mean_p_e_star: f64,
}

pub const MIN_FS_BLOCKS: u64 = 1000;

pub fn empirical_covert_metrics(s: &SimSummary) -> Result<EmpiricalCovert> {
    if s.fs_blocks < MIN_FS_BLOCKS || s.h0_blocks == 0 || s.h1_blocks == 0 {
        return Err(Error::TooFewFsBlocks {
            observed: s.fs_blocks,
            required: MIN_FS_BLOCKS,
        });
    }
    let p_fa = s.false_alarms as f64 / s.h0_blocks as f64;
    let p_md = s.missed_detections as f64 / s.h1_blocks as f64;
    let n = s.fs_blocks as f64;
    let (fa, md) = (s.sum_p_fa / n, s.sum_p_md / n);
    Ok(EmpiricalCovert {
        p_fa,
        p_md,
        p_e: p_fa + p_md,
        mean_analytic_p_fa: fa,
        mean_analytic_p_md: md,
        mean_analytic_p_e: fa + md,
        mean_p_e_star: s.sum_p_e_star / n,
    })
}

/// Writes a trace as CSV with a header row.
pub fn write_trace_csv<W: Write>(trace: &[TraceRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    for r in trace {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
