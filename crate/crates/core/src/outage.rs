//! Transmission outage probability.
//!
//! In a relaying block the destination combines the direct SNR
//! `gamma_SD` with the decode-and-forward SINR `Y`, so
//! `gamma_D = gamma_SD + Y`. Relaying only happens when
//! `gamma_SD < gamma_th`, hence the CDFs below are joint probabilities
//! with that event and saturate at `q_SD`.

use crate::error::{Error, Result};
use crate::markov::{q_sd, StationaryDistribution};
use crate::params::{ChannelGains, SystemParams};
use crate::special::{exp_integral_ei_scaled, quad_gk_points, QuadOptions};

/// Closed form and quadrature may differ by at most this much before the
/// quadrature value is reported instead.
pub const DIVERGENCE_TOL: f64 = 1e-6;

fn quad_opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-12,
        rel_tol: 1e-10,
        max_subdivisions: 200,
    }
}

/// Rate `lambda` of the exponential law of `gamma_SD`.
fn sd_rate(p: &SystemParams, g: &ChannelGains) -> f64 {
    p.sigma2_d / (p.p_s * g.omega_sd)
}

/// CDF of the relayed SINR `Y`. Under H1 the second hop saturates at
/// `P_R / P_Delta`, so the CDF is 1 from there on.
pub fn cdf_y(p: &SystemParams, g: &ChannelGains, x: f64, covert: bool) -> f64 {
    if !(x > 0.0) {
        return 0.0;
    }
    let a = p.p_s * g.omega_sr;
    let first_hop = p.sigma2_r / ((1.0 - p.rho) * a);
    if covert {
        if x >= p.p_r / p.p_delta {
            return 1.0;
        }
        let c = first_hop + p.sigma2_d / ((p.p_r - p.p_delta * x) * g.omega_rd);
        1.0 - a * (-c * x).exp() / (a + p.k * (p.p_r + p.p_delta) * g.omega_rr * x)
    } else {
        let c = first_hop + p.sigma2_d / (p.p_r * g.omega_rd);
        1.0 - a * (-c * x).exp() / (a + p.k * p.p_r * g.omega_rr * x)
    }
}

/// Convolution `Pr(gamma_SD + Y < x, gamma_SD < gamma_th)` by quadrature.
fn convolve_with_sd(p: &SystemParams, g: &ChannelGains, x: f64, covert: bool) -> Result<f64> {
    if !(x > 0.0) {
        return Ok(0.0);
    }
    let lambda = sd_rate(p, g);
    let upper = x.min(p.gamma_th);
    let mut points = vec![0.0];
    if covert {
        // F_Y1 reaches 1 at x - y = P_R / P_Delta
        let kink = x - p.p_r / p.p_delta;
        if kink > 0.0 && kink < upper {
            points.push(kink);
        }
    }
    points.push(upper);
    let f = |y: f64| lambda * (-lambda * y).exp() * cdf_y(p, g, x - y, covert);
    Ok(quad_gk_points(f, &points, quad_opts())?.value)
}

/// Result of the H0 end-to-end CDF: the reported value plus both routes
/// that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaDH0 {
    /// Closed form when it agrees with the oracle, else the oracle.
    pub value: f64,
    /// `None` when the closed form hits the Ei singularity.
    pub closed_form: Option<f64>,
    pub oracle: f64,
    pub diverged: bool,
}

/// Closed form of the H0 CDF through the exponential integral. Valid for
/// any `x > 0`; the integration range of `gamma_SD` is `[0, min(x,
/// gamma_th)]`.
pub fn cdf_gamma_d_h0_closed_form(p: &SystemParams, g: &ChannelGains, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Ok(0.0);
    }
    let lambda = sd_rate(p, g);
    let u = x.min(p.gamma_th);
    let a = p.p_s * g.omega_sr;
    let b = p.k * p.p_r * g.omega_rr;
    let c = p.sigma2_r / ((1.0 - p.rho) * a) + p.sigma2_d / (p.p_r * g.omega_rd);
    let v1 = lambda * a / b;
    let v2 = (lambda - c) / b;
    let v3 = v2 * (a + b * x);
    let v4 = v2 * (a + b * (x - u));
    // e^{-z} Ei(z) keeps the exponentials bounded on both ends
    let e3 = exp_integral_ei_scaled(v3)?;
    let e4 = exp_integral_ei_scaled(v4)?;
    let head = -(-lambda * u).exp_m1();
    Ok(head - v1 * (e3 * (-c * x).exp() - e4 * (-lambda * u - c * (x - u)).exp()))
}

/// `Pr(gamma_D < x, gamma_SD < gamma_th)` without a covert message. The
/// closed form is always checked against the quadrature convolution.
pub fn cdf_gamma_d_h0(p: &SystemParams, g: &ChannelGains, x: f64) -> Result<GammaDH0> {
    let oracle = convolve_with_sd(p, g, x, false)?;
    let closed_form = match cdf_gamma_d_h0_closed_form(p, g, x) {
        Ok(v) if v.is_finite() => Some(v),
        Ok(_) | Err(Error::Domain(_)) | Err(Error::Overflow { .. }) => None,
        Err(e) => return Err(e),
    };
    let (value, diverged) = match closed_form {
        Some(v) if (v - oracle).abs() <= DIVERGENCE_TOL => (v, false),
        Some(_) => (oracle, true),
        None => (oracle, false),
    };
    Ok(GammaDH0 {
        value,
        closed_form,
        oracle,
        diverged,
    })
}

/// `Pr(gamma_D < x, gamma_SD < gamma_th)` with a covert message, by
/// adaptive quadrature split at the saturation kink.
pub fn cdf_gamma_d_h1(p: &SystemParams, g: &ChannelGains, x: f64) -> Result<f64> {
    convolve_with_sd(p, g, x, true)
}

/// `Pr(gamma_SD < x, gamma_SD >= gamma_th)`: outage of a block the direct
/// link serves alone.
pub fn cdf_gamma_sd_above_threshold(p: &SystemParams, g: &ChannelGains, x: f64) -> f64 {
    if x <= p.gamma_th {
        return 0.0;
    }
    let lambda = sd_rate(p, g);
    (-lambda * p.gamma_th).exp() - (-lambda * x).exp()
}

/// Outage without any relay: the direct link alone.
pub fn top_no_relay(p: &SystemParams, g: &ChannelGains) -> f64 {
    q_sd(p, g) + cdf_gamma_sd_above_threshold(p, g, p.rate_threshold())
}

/// Outage of relaying blocks, weighting H1 by `covert_mix`.
pub fn top_fs(
    p: &SystemParams,
    g: &ChannelGains,
    xi: &StationaryDistribution,
    phi: usize,
    covert_mix: f64,
) -> Result<f64> {
    let x = p.rate_threshold();
    let f0 = cdf_gamma_d_h0(p, g, x)?.value;
    let f1 = cdf_gamma_d_h1(p, g, x)?;
    Ok(xi.prob_energy_ok(phi) * ((1.0 - covert_mix) * f0 + covert_mix * f1))
}

/// Outage of harvesting blocks: a block that wants to relay but lacks
/// energy is lost, and a block the direct link serves may still fall
/// below the rate target.
pub fn top_peh(p: &SystemParams, g: &ChannelGains, xi: &StationaryDistribution, phi: usize) -> f64 {
    let short: f64 = xi.xi.iter().take(phi).sum();
    q_sd(p, g) * short + cdf_gamma_sd_above_threshold(p, g, p.rate_threshold())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageReport {
    pub top_fs: f64,
    pub top_peh: f64,
    pub top: f64,
    /// SNR threshold `2^R_th - 1` the CDFs are evaluated at.
    pub x: f64,
    pub f_h0: f64,
    pub f_h1: f64,
    pub q_sd: f64,
    pub p_energy_ok: f64,
    pub top_no_relay: f64,
    /// The H0 closed form disagreed with its quadrature check.
    pub diverged: bool,
}

pub fn top_overall(
    p: &SystemParams,
    g: &ChannelGains,
    xi: &StationaryDistribution,
    phi: usize,
    covert_mix: f64,
) -> Result<OutageReport> {
    let x = p.rate_threshold();
    let h0 = cdf_gamma_d_h0(p, g, x)?;
    let f_h1 = cdf_gamma_d_h1(p, g, x)?;
    let p_energy_ok = xi.prob_energy_ok(phi);
    let top_fs = p_energy_ok * ((1.0 - covert_mix) * h0.value + covert_mix * f_h1);
    let top_peh = top_peh(p, g, xi, phi);
    Ok(OutageReport {
        top_fs,
        top_peh,
        top: top_fs + top_peh,
        x,
        f_h0: h0.value,
        f_h1,
        q_sd: q_sd(p, g),
        p_energy_ok,
        top_no_relay: top_no_relay(p, g),
        diverged: h0.diverged,
    })
}
