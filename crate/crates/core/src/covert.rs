//! Radiometer detection of the covert message at the destination.
//!
//! With infinitely many symbols per block the radiometer reads the exact
//! received power `T`. The destination knows `g_SD` and the estimate
//! `g_RD_hat`; the estimation error `g_RD_tilde ~ Exp(beta Omega_RD)` is
//! the only source of randomness in its decision.

use crate::params::{ChannelGains, SystemParams};

/// Inputs of one detection test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovertScenario {
    pub g_sd: f64,
    pub g_rd_hat: f64,
    pub beta: f64,
    pub p_s: f64,
    pub p_r: f64,
    pub p_delta: f64,
    pub sigma2_d: f64,
    pub omega_rd: f64,
}

impl CovertScenario {
    pub fn new(p: &SystemParams, g: &ChannelGains, g_sd: f64, g_rd_hat: f64) -> Self {
        Self {
            g_sd,
            g_rd_hat,
            beta: p.beta,
            p_s: p.p_s,
            p_r: p.p_r,
            p_delta: p.p_delta,
            sigma2_d: p.sigma2_d,
            omega_rd: g.omega_rd,
        }
    }

    /// Received power that does not depend on the relay.
    fn base(&self) -> f64 {
        self.p_s * self.g_sd + self.sigma2_d
    }

    /// Known part of the received power without a covert message.
    pub fn j0(&self) -> f64 {
        self.base() + self.p_r * self.g_rd_hat
    }

    /// Known part of the received power with a covert message.
    pub fn j1(&self) -> f64 {
        self.base() + (self.p_r + self.p_delta) * self.g_rd_hat
    }

    /// Mean of the unknown power under H0.
    fn scale0(&self) -> f64 {
        self.beta * self.p_r * self.omega_rd
    }

    /// Mean of the unknown power under H1.
    fn scale1(&self) -> f64 {
        self.beta * (self.p_r + self.p_delta) * self.omega_rd
    }

    /// Offset of the stationary point of `P_E` above the relay-free power.
    fn stationary_offset(&self) -> f64 {
        let (pr, pd) = (self.p_r, self.p_delta);
        -(self.beta * pr * (pr + pd) * self.omega_rd / pd) * (pr / (pr + pd)).ln()
    }
}

/// Received power measured by the radiometer.
pub fn radiometer_statistic(s: &CovertScenario, g_rd_tilde: f64, covert: bool) -> f64 {
    if covert {
        s.j1() + (s.p_r + s.p_delta) * g_rd_tilde
    } else {
        s.j0() + s.p_r * g_rd_tilde
    }
}

/// `Pr(T > tau | H0)`.
pub fn p_false_alarm(s: &CovertScenario, tau: f64) -> f64 {
    let j0 = s.j0();
    if tau >= j0 {
        ((j0 - tau) / s.scale0()).exp()
    } else {
        1.0
    }
}

/// `Pr(T <= tau | H1)`.
pub fn p_missed_detection(s: &CovertScenario, tau: f64) -> f64 {
    let j1 = s.j1();
    if tau >= j1 {
        -((j1 - tau) / s.scale1()).exp_m1()
    } else {
        0.0
    }
}

/// `P_FA + P_MD`.
pub fn p_detection_error(s: &CovertScenario, tau: f64) -> f64 {
    p_false_alarm(s, tau) + p_missed_detection(s, tau)
}

/// Threshold minimizing [`p_detection_error`]: the interior stationary
/// point when it lies above `j1`, else `j1` itself.
pub fn optimal_threshold(s: &CovertScenario) -> f64 {
    let tau_k = s.base() + s.stationary_offset();
    let j1 = s.j1();
    if j1 >= tau_k {
        j1
    } else {
        tau_k
    }
}

/// Minimum of [`p_detection_error`] over the threshold. Evaluated from
/// differences of powers so that it does not depend on `P_S` or `g_SD`
/// even in floating point.
pub fn min_detection_error(s: &CovertScenario) -> f64 {
    let k = s.stationary_offset();
    let hi = (s.p_r + s.p_delta) * s.g_rd_hat;
    if hi >= k {
        (-s.p_delta * s.g_rd_hat / s.scale0()).exp()
    } else {
        let lo = s.p_r * s.g_rd_hat;
        1.0 + ((lo - k) / s.scale0()).exp() - ((hi - k) / s.scale1()).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovertMetrics {
    pub p_fa: f64,
    pub p_md: f64,
    pub p_e: f64,
    pub tau_star: f64,
    pub p_e_star: f64,
}

/// All metrics of `s` at threshold `tau`.
pub fn covert_metrics(s: &CovertScenario, tau: f64) -> CovertMetrics {
    let p_fa = p_false_alarm(s, tau);
    let p_md = p_missed_detection(s, tau);
    CovertMetrics {
        p_fa,
        p_md,
        p_e: p_fa + p_md,
        tau_star: optimal_threshold(s),
        p_e_star: min_detection_error(s),
    }
}

/// Channel draw used for the fixed-channel detection example:
/// `|h_SD|^2 = 8.29e-6`, `|h_RD|^2 = 3.44837e-3`.
pub const EXAMPLE_G_SD: f64 = 8.29e-6;
pub const EXAMPLE_G_RD: f64 = 3.44837e-3;
