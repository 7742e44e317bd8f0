//! System parameters, derived mean channel gains and per-block channel
//! draws.
//!
//! Powers are in watts, energies in joules, distances in meters. The block
//! duration is one time unit, so watts and joules per block coincide.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};

/// Every scalar of the network model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Source transmit power.
    pub p_s: f64,
    /// Noise power at the relay.
    pub sigma2_r: f64,
    /// Noise power at the destination.
    pub sigma2_d: f64,
    /// Capacity of the principal energy carrier.
    pub c_p: f64,
    /// Capacity of the minor battery.
    pub c_m: f64,
    /// RF-to-DC conversion efficiency.
    pub eta: f64,
    /// Transfer efficiency from the minor battery into the PEC.
    pub eta_prime: f64,
    /// Power-splitting factor (fraction routed to harvesting).
    pub rho: f64,
    /// Residual self-interference coefficient.
    pub k: f64,
    /// Number of discrete PEC levels above empty.
    pub levels: usize,
    /// Direct-link SNR threshold for mode selection.
    pub gamma_th: f64,
    /// Energy a relaying block needs.
    pub e_th: f64,
    /// Target rate in bit/s/Hz.
    pub r_th: f64,
    /// Relay transmit power.
    pub p_r: f64,
    /// Extra power carried by a covert message.
    pub p_delta: f64,
    /// Relative channel-estimation uncertainty at the destination.
    pub beta: f64,
    pub d_sd: f64,
    pub d_sr: f64,
    pub d_rd: f64,
    pub d_rr: f64,
    /// Path-loss exponent.
    pub alpha: f64,
}

/// Default setup: 15/8/8/0.1 m geometry, -10 dBm source, 1 uJ storage.
pub fn default_params() -> SystemParams {
    let c_p = 1e-6;
    let e_th = 0.6 * c_p;
    SystemParams {
        p_s: 1e-4,
        sigma2_r: 1e-9,
        sigma2_d: 1e-9,
        c_p,
        c_m: 1e-6,
        eta: 0.4,
        eta_prime: 0.9,
        rho: 0.5,
        k: 1.0,
        levels: 25,
        gamma_th: 1.0,
        e_th,
        r_th: 1.0,
        p_r: e_th,
        p_delta: 0.2 * e_th,
        beta: 0.5,
        d_sd: 15.0,
        d_sr: 8.0,
        d_rd: 8.0,
        d_rr: 0.1,
        alpha: 3.0,
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        default_params()
    }
}

impl SystemParams {
    /// Checks the physical constraints of the model.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        let positive = [
            ("P_S", self.p_s),
            ("sigma2_R", self.sigma2_r),
            ("sigma2_D", self.sigma2_d),
            ("C_P", self.c_p),
            ("E_th", self.e_th),
            ("P_R", self.p_r),
            ("P_Delta", self.p_delta),
            ("d_SD", self.d_sd),
            ("d_SR", self.d_sr),
            ("d_RD", self.d_rd),
            ("d_RR", self.d_rr),
            ("alpha", self.alpha),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        for (name, v) in [
            ("C_M", self.c_m),
            ("gamma_th", self.gamma_th),
            ("R_th", self.r_th),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be nonnegative and finite, got {v}"));
            }
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return bad(format!("eta must lie in (0, 1), got {}", self.eta));
        }
        if !(self.eta_prime > 0.0 && self.eta_prime <= 1.0) {
            return bad(format!(
                "eta_prime must lie in (0, 1], got {}",
                self.eta_prime
            ));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad(format!("rho must lie in (0, 1), got {}", self.rho));
        }
        if !(self.k > 0.0 && self.k <= 1.0) {
            return bad(format!("k must lie in (0, 1], got {}", self.k));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad(format!("beta must lie in (0, 1), got {}", self.beta));
        }
        if self.levels == 0 {
            return bad("L must be at least 1".into());
        }
        if self.c_p < self.e_th {
            return bad(format!(
                "C_P ({}) must be at least E_th ({})",
                self.c_p, self.e_th
            ));
        }
        if self.p_delta >= self.p_r {
            return bad(format!(
                "need P_R > P_Delta > 0, got P_R={} P_Delta={}",
                self.p_r, self.p_delta
            ));
        }
        Ok(())
    }

    /// SNR outage threshold `2^R_th - 1`.
    pub fn rate_threshold(&self) -> f64 {
        self.r_th.exp2() - 1.0
    }

    pub fn get(&self, key: ParamKey) -> f64 {
        use ParamKey::*;
        match key {
            PS => self.p_s,
            Sigma2R => self.sigma2_r,
            Sigma2D => self.sigma2_d,
            CP => self.c_p,
            CM => self.c_m,
            Eta => self.eta,
            EtaPrime => self.eta_prime,
            Rho => self.rho,
            K => self.k,
            L => self.levels as f64,
            GammaTh => self.gamma_th,
            ETh => self.e_th,
            RTh => self.r_th,
            PR => self.p_r,
            PDelta => self.p_delta,
            Beta => self.beta,
            DSD => self.d_sd,
            DSR => self.d_sr,
            DRD => self.d_rd,
            DRR => self.d_rr,
            Alpha => self.alpha,
        }
    }

    fn set_raw(&mut self, key: ParamKey, v: f64) -> Result<()> {
        use ParamKey::*;
        match key {
            PS => self.p_s = v,
            Sigma2R => self.sigma2_r = v,
            Sigma2D => self.sigma2_d = v,
            CP => self.c_p = v,
            CM => self.c_m = v,
            Eta => self.eta = v,
            EtaPrime => self.eta_prime = v,
            Rho => self.rho = v,
            K => self.k = v,
            L => {
                if !(v >= 1.0 && v.fract() == 0.0 && v <= 1e6) {
                    return Err(Error::Config(format!(
                        "L must be a positive integer, got {v}"
                    )));
                }
                self.levels = v as usize
            }
            GammaTh => self.gamma_th = v,
            ETh => self.e_th = v,
            RTh => self.r_th = v,
            PR => self.p_r = v,
            PDelta => self.p_delta = v,
            Beta => self.beta = v,
            DSD => self.d_sd = v,
            DSR => self.d_sr = v,
            DRD => self.d_rd = v,
            DRR => self.d_rr = v,
            Alpha => self.alpha = v,
        }
        Ok(())
    }
}

/// Names of the tunable parameters, spelled as in config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ParamKey {
    PS,
    Sigma2R,
    Sigma2D,
    CP,
    CM,
    Eta,
    EtaPrime,
    Rho,
    K,
    L,
    GammaTh,
    ETh,
    RTh,
    PR,
    PDelta,
    Beta,
    DSD,
    DSR,
    DRD,
    DRR,
    Alpha,
}

impl ParamKey {
    pub const ALL: [ParamKey; 21] = [
        ParamKey::PS,
        ParamKey::Sigma2R,
        ParamKey::Sigma2D,
        ParamKey::CP,
        ParamKey::CM,
        ParamKey::Eta,
        ParamKey::EtaPrime,
        ParamKey::Rho,
        ParamKey::K,
        ParamKey::L,
        ParamKey::GammaTh,
        ParamKey::ETh,
        ParamKey::RTh,
        ParamKey::PR,
        ParamKey::PDelta,
        ParamKey::Beta,
        ParamKey::DSD,
        ParamKey::DSR,
        ParamKey::DRD,
        ParamKey::DRR,
        ParamKey::Alpha,
    ];

    pub fn name(self) -> &'static str {
        use ParamKey::*;
        match self {
            PS => "P_S",
            Sigma2R => "sigma2_R",
            Sigma2D => "sigma2_D",
            CP => "C_P",
            CM => "C_M",
            Eta => "eta",
            EtaPrime => "eta_prime",
            Rho => "rho",
            K => "k",
            L => "L",
            GammaTh => "gamma_th",
            ETh => "E_th",
            RTh => "R_th",
            PR => "P_R",
            PDelta => "P_Delta",
            Beta => "beta",
            DSD => "d_SD",
            DSR => "d_SR",
            DRD => "d_RD",
            DRR => "d_RR",
            Alpha => "alpha",
        }
    }

    /// Whether a `dBm` suffix makes sense for this key.
    fn is_power(self) -> bool {
        matches!(
            self,
            ParamKey::PS | ParamKey::Sigma2R | ParamKey::Sigma2D | ParamKey::PR | ParamKey::PDelta
        )
    }
}

impl fmt::Display for ParamKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ParamKey {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ParamKey::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = ParamKey::ALL.iter().map(|k| k.name()).collect();
                Error::Config(format!(
                    "unknown parameter '{s}'; known: {}",
                    names.join(", ")
                ))
            })
    }
}

/// `P[W] = 10^((P[dBm] - 30) / 10)`.
pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watt_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// Parses a value with an optional unit suffix: `dBm` for powers, or one
/// of `W`, `J`, `m` which are accepted and ignored.
pub fn parse_value(key: ParamKey, raw: &str) -> Result<f64> {
    let s = raw.trim();
    let (num, dbm) = if let Some(n) = s.strip_suffix("dBm") {
        (n.trim(), true)
    } else if let Some(n) = s.strip_suffix(['W', 'J', 'm']) {
        (n.trim(), false)
    } else {
        (s, false)
    };
    let v: f64 = num
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse value '{raw}' for {key}")))?;
    if dbm {
        if !key.is_power() {
            return Err(Error::Config(format!(
                "{key} is not a power; dBm suffix not allowed"
            )));
        }
        return Ok(dbm_to_watt(v));
    }
    Ok(v)
}

/// Default couplings between parameters. A binding only fills in its
/// dependent when that dependent was not set explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Binding {
    /// `E_th = 0.6 C_P`
    EthFromCp,
    /// `P_R = E_th`
    PrFromEth,
    /// `P_Delta = 0.2 P_R`
    PdeltaFromPr,
}

impl Binding {
    pub const ALL: [Binding; 3] = [
        Binding::EthFromCp,
        Binding::PrFromEth,
        Binding::PdeltaFromPr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Binding::EthFromCp => "eth_from_cp",
            Binding::PrFromEth => "pr_from_eth",
            Binding::PdeltaFromPr => "pdelta_from_pr",
        }
    }

    pub fn source(self) -> ParamKey {
        match self {
            Binding::EthFromCp => ParamKey::CP,
            Binding::PrFromEth => ParamKey::ETh,
            Binding::PdeltaFromPr => ParamKey::PR,
        }
    }

    pub fn dependent(self) -> ParamKey {
        match self {
            Binding::EthFromCp => ParamKey::ETh,
            Binding::PrFromEth => ParamKey::PR,
            Binding::PdeltaFromPr => ParamKey::PDelta,
        }
    }

    fn factor(self) -> f64 {
        match self {
            Binding::EthFromCp => 0.6,
            Binding::PrFromEth => 1.0,
            Binding::PdeltaFromPr => 0.2,
        }
    }
}

impl FromStr for Binding {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Binding::ALL
            .iter()
            .copied()
            .find(|b| b.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown binding '{s}'; known: eth_from_cp, pr_from_eth, pdelta_from_pr"
                ))
            })
    }
}

/// Builds [`SystemParams`] from defaults plus explicit settings, applying
/// the active bindings.
#[derive(Debug, Clone)]
pub struct ParamsBuilder {
    values: SystemParams,
    explicit: BTreeSet<ParamKey>,
    released: BTreeSet<Binding>,
}

impl Default for ParamsBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl ParamsBuilder {
    pub fn new() -> Self {
        Self {
            values: default_params(),
            explicit: BTreeSet::new(),
            released: BTreeSet::new(),
        }
    }

    pub fn set(&mut self, key: ParamKey, value: f64) -> Result<&mut Self> {
        self.values.set_raw(key, value)?;
        self.explicit.insert(key);
        Ok(self)
    }

    /// Parses `key=value`, with unit suffixes as in [`parse_value`].
    pub fn set_str(&mut self, assignment: &str) -> Result<&mut Self> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got '{assignment}'")))?;
        let key: ParamKey = k.trim().parse()?;
        let value = parse_value(key, v)?;
        self.set(key, value)
    }

    /// Reads a flat `key=value` file; `#` starts a comment.
    pub fn apply_config_text(&mut self, text: &str) -> Result<&mut Self> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.set_str(line)
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(self)
    }

    pub fn release(&mut self, b: Binding) -> &mut Self {
        self.released.insert(b);
        self
    }

    pub fn is_explicit(&self, key: ParamKey) -> bool {
        self.explicit.contains(&key)
    }

    pub fn build(&self) -> Result<SystemParams> {
        let mut p = self.values;
        for b in Binding::ALL {
            if self.released.contains(&b) {
                continue;
            }
            let (src, dep) = (b.source(), b.dependent());
            if self.explicit.contains(&dep) {
                if self.explicit.contains(&src) {
                    return Err(Error::Binding(format!(
                        "both {src} and {dep} are set while binding {} ({dep} = {} * {src}) is active; release it to set them independently",
                        b.name(),
                        b.factor()
                    )));
                }
                continue;
            }
            let v = b.factor() * p.get(src);
            p.set_raw(dep, v)?;
        }
        p.validate()?;
        Ok(p)
    }
}

/// Mean power gains `Omega = 1 / (1 + d^alpha)` of the four links.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelGains {
    pub omega_sd: f64,
    pub omega_sr: f64,
    pub omega_rd: f64,
    pub omega_rr: f64,
}

pub fn path_gain(d: f64, alpha: f64) -> f64 {
    1.0 / (1.0 + d.powf(alpha))
}

pub fn derive_gains(p: &SystemParams) -> ChannelGains {
    ChannelGains {
        omega_sd: path_gain(p.d_sd, p.alpha),
        omega_sr: path_gain(p.d_sr, p.alpha),
        omega_rd: path_gain(p.d_rd, p.alpha),
        omega_rr: path_gain(p.d_rr, p.alpha),
    }
}

/// Instantaneous power gains of one block.
///
/// `g_rd` feeds the relay-to-destination SINR; the covert detector instead
/// sees the estimate `g_rd_hat` and the estimation error `g_rd_tilde`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockChannels {
    pub g_sd: f64,
    pub g_sr: f64,
    pub g_rd: f64,
    pub g_rr: f64,
    pub g_rd_hat: f64,
    pub g_rd_tilde: f64,
}

/// Draws one block. The draw order is fixed so that a seeded stream is
/// reproducible.
pub fn sample_block<R: Rng + ?Sized>(
    gains: &ChannelGains,
    beta: f64,
    rng: &mut R,
) -> BlockChannels {
    let mut exp = |mean: f64| -> f64 { mean * rng.sample::<f64, _>(Exp1) };
    let g_sd = exp(gains.omega_sd);
    let g_sr = exp(gains.omega_sr);
    let g_rr = exp(gains.omega_rr);
    let g_rd = exp(gains.omega_rd);
    let g_rd_hat = exp((1.0 - beta) * gains.omega_rd);
    let g_rd_tilde = exp(beta * gains.omega_rd);
    BlockChannels {
        g_sd,
        g_sr,
        g_rd,
        g_rr,
        g_rd_hat,
        g_rd_tilde,
    }
}
