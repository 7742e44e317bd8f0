//! Finite-state Markov chain of the PEC level and its stationary law.
//!
//! Level `i` holds `i` units. A block that starts below `phi` units can
//! only harvest; otherwise it relays whenever the direct link misses the
//! SNR threshold (probability `q_SD`), spending `q_FS^C = phi` units and
//! harvesting `q_FS` units. All CDF differences are evaluated as survival
//! differences so that small transition probabilities keep their relative
//! accuracy.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::energy::{discretize_consume, fs_saturation, relay_power, unit};
use crate::error::{Error, Result};
use crate::params::{ChannelGains, SystemParams};
use crate::special::erlang2_cdf;

/// Probability that the direct link misses the SNR threshold,
/// `1 - exp(-sigma_D^2 gamma_th / (P_S Omega_SD))`.
pub fn q_sd(p: &SystemParams, g: &ChannelGains) -> f64 {
    -(-p.sigma2_d * p.gamma_th / (p.p_s * g.omega_sd)).exp_m1()
}

/// Scale `C_P / (eta P_S L)` turning PEH units into `g_SR` thresholds,
/// divided by `Omega_SR`.
fn peh_step(p: &SystemParams, g: &ChannelGains) -> f64 {
    unit(p) / (p.eta * p.p_s * g.omega_sr)
}

/// `Pr(q_PEH >= m)`.
pub fn prob_qpeh_ge(p: &SystemParams, g: &ChannelGains, m: u64) -> f64 {
    (-(m as f64) * peh_step(p, g)).exp()
}

/// `Pr(q_PEH = m)`.
pub fn prob_qpeh_eq(p: &SystemParams, g: &ChannelGains, m: u64) -> f64 {
    let s = peh_step(p, g);
    (-(m as f64) * s).exp() * -(-s).exp_m1()
}

/// Survival `Pr(X1 + X2 > x)` of independent exponentials with means `a`
/// and `b`.
fn hypoexp_survival(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if a == b {
        return 1.0 - erlang2_cdf(x, a).expect("positive scale");
    }
    if b == 0.0 {
        return (-x / a).exp();
    }
    if a == 0.0 {
        return (-x / b).exp();
    }
    let delta = x * (b - a) / (a * b);
    if delta.abs() < 1.0 {
        // Near-equal means: (a e^{-x/a} - b e^{-x/b}) / (a - b) rewritten
        // without the cancelling difference.
        (-x / a).exp() * (1.0 + (x / a) * delta.exp_m1() / delta)
    } else {
        (a * (-x / a).exp() - b * (-x / b).exp()) / (a - b)
    }
}

fn z_means(p: &SystemParams, g: &ChannelGains, covert: bool) -> (f64, f64) {
    (
        p.p_s * g.omega_sr,
        p.k * relay_power(p, covert) * g.omega_rr,
    )
}

/// CDF of `Z = P_S g_SR + k P_FS g_RR`, where `P_FS` includes the covert
/// power when `covert` is set. The equal-mean case is the Erlang-2 CDF.
pub fn cdf_z(p: &SystemParams, g: &ChannelGains, x: f64, covert: bool) -> f64 {
    1.0 - survival_z(p, g, x, covert)
}

pub fn survival_z(p: &SystemParams, g: &ChannelGains, x: f64, covert: bool) -> f64 {
    let (a, b) = z_means(p, g, covert);
    hypoexp_survival(a, b, x)
}

fn survival_z_mix(p: &SystemParams, g: &ChannelGains, x: f64, covert_mix: f64) -> f64 {
    let mut s = 0.0;
    if covert_mix < 1.0 {
        s += (1.0 - covert_mix) * survival_z(p, g, x, false);
    }
    if covert_mix > 0.0 {
        s += covert_mix * survival_z(p, g, x, true);
    }
    s
}

/// `Z` threshold at which a relaying block credits `m` units.
fn z_threshold(p: &SystemParams, m: u64) -> f64 {
    m as f64 * unit(p) / (p.eta * p.rho * p.eta_prime)
}

/// `Pr(q_FS >= m)` for a fraction `covert_mix` of covert blocks; zero
/// beyond the minor-battery saturation.
fn prob_qfs_ge_mix(p: &SystemParams, g: &ChannelGains, m: u64, covert_mix: f64) -> f64 {
    if m > fs_saturation(p) {
        0.0
    } else {
        survival_z_mix(p, g, z_threshold(p, m), covert_mix)
    }
}

fn prob_qfs_eq_mix(p: &SystemParams, g: &ChannelGains, m: u64, covert_mix: f64) -> f64 {
    let sat = fs_saturation(p);
    if m > sat {
        0.0
    } else if m == sat {
        survival_z_mix(p, g, z_threshold(p, m), covert_mix)
    } else {
        let lo = survival_z_mix(p, g, z_threshold(p, m), covert_mix);
        let hi = survival_z_mix(p, g, z_threshold(p, m + 1), covert_mix);
        (lo - hi).max(0.0)
    }
}

/// `Pr(q_FS - q_FS^C = d)` in a relaying block.
pub fn prob_qfs_minus_qc_eq(p: &SystemParams, g: &ChannelGains, d: i64, covert: bool) -> f64 {
    let m = d + discretize_consume(p) as i64;
    if m < 0 {
        return 0.0;
    }
    prob_qfs_eq_mix(p, g, m as u64, if covert { 1.0 } else { 0.0 })
}

/// Row-stochastic transition matrix over levels `0..=L`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    pub entries: DMatrix<f64>,
    pub levels: usize,
    /// Level needed to relay.
    pub phi: usize,
    /// Units a relaying block consumes.
    pub q_consume: usize,
}

impl TransitionMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn states(&self) -> usize {
        self.levels + 1
    }

    /// Wraps an arbitrary square matrix. Rows must sum to one.
    pub fn from_rows(rows: &[Vec<f64>], phi: usize) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParams(
                "transition matrix must be square and nonempty".into(),
            ));
        }
        let entries = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        let m = TransitionMatrix {
            entries,
            levels: n - 1,
            phi,
            q_consume: phi,
        };
        m.check_stochastic(1e-9)?;
        Ok(m)
    }

    pub fn check_stochastic(&self, tol: f64) -> Result<()> {
        for i in 0..self.states() {
            let row = self.entries.row(i);
            if row.iter().any(|v| !(*v >= 0.0 && *v <= 1.0 + tol)) {
                return Err(Error::NotStochastic {
                    row: i,
                    sum: row.sum(),
                });
            }
            let sum = row.sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::NotStochastic { row: i, sum });
            }
        }
        Ok(())
    }

    /// Whether every level reaches every other along positive entries.
    pub fn is_irreducible(&self) -> bool {
        let n = self.states();
        let reach_all = |forward: bool| {
            let mut seen = vec![false; n];
            let mut queue = VecDeque::from([0usize]);
            seen[0] = true;
            while let Some(u) = queue.pop_front() {
                for (v, s) in seen.iter_mut().enumerate() {
                    let w = if forward {
                        self.entries[(u, v)]
                    } else {
                        self.entries[(v, u)]
                    };
                    if w > 0.0 && !*s {
                        *s = true;
                        queue.push_back(v);
                    }
                }
            }
            seen.iter().all(|&s| s)
        };
        reach_all(true) && reach_all(false)
    }
}

/// Builds the level transition matrix. `covert_mix` is the long-run share
/// of relaying blocks that carry a covert message (0.5 under equal
/// priors); harvest probabilities blend the two relay powers accordingly.
///
/// The last column is filled from its own closed form and compared to the
/// residual of the row; a mismatch above 1e-6 means the case analysis is
/// incomplete and is reported as [`Error::RowCompletion`].
pub fn build_transition_matrix(
    p: &SystemParams,
    g: &ChannelGains,
    covert_mix: f64,
) -> Result<TransitionMatrix> {
    if !(0.0..=1.0).contains(&covert_mix) {
        return Err(Error::InvalidParams(format!(
            "covert_mix must lie in [0, 1], got {covert_mix}"
        )));
    }
    let l = p.levels;
    let qc = discretize_consume(p) as usize;
    let phi = qc;
    if qc > l {
        return Err(Error::InvalidParams(format!(
            "relaying needs {qc} units but the PEC only holds {l}"
        )));
    }
    let qsd = q_sd(p, g);
    let n = l + 1;
    let peh_eq: Vec<f64> = (0..n as u64).map(|m| prob_qpeh_eq(p, g, m)).collect();
    // Relaying credits range up to L + q_C units before clamping.
    let fs_eq: Vec<f64> = (0..(l + qc + 1) as u64)
        .map(|m| prob_qfs_eq_mix(p, g, m, covert_mix))
        .collect();

    let mut entries = DMatrix::zeros(n, n);
    for i in 0..n {
        let relays = i >= phi;
        for j in 0..l {
            let peh = if j >= i { peh_eq[j - i] } else { 0.0 };
            entries[(i, j)] = if relays {
                // credit j - i + q_C; drops larger than q_C are impossible
                let fs = (j + qc).checked_sub(i).map_or(0.0, |m| fs_eq[m]);
                (1.0 - qsd) * peh + qsd * fs
            } else {
                peh
            };
        }
        let to_top_peh = prob_qpeh_ge(p, g, (l - i) as u64);
        let closed = if relays {
            (1.0 - qsd) * to_top_peh + qsd * prob_qfs_ge_mix(p, g, (l - i + qc) as u64, covert_mix)
        } else {
            to_top_peh
        };
        let residual = 1.0 - entries.row(i).sum();
        if (residual - closed).abs() > 1e-6 {
            return Err(Error::RowCompletion {
                row: i,
                closed_form: closed,
                residual,
            });
        }
        entries[(i, l)] = closed;
    }
    let m = TransitionMatrix {
        entries,
        levels: l,
        phi,
        q_consume: qc,
    };
    m.check_stochastic(1e-9)?;
    Ok(m)
}

/// Long-run distribution over PEC levels.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    pub xi: Vec<f64>,
}

impl StationaryDistribution {
    /// `Pr(level >= phi)`.
    pub fn prob_energy_ok(&self, phi: usize) -> f64 {
        prob_energy_ok(self, phi)
    }
}

pub fn prob_energy_ok(xi: &StationaryDistribution, phi: usize) -> f64 {
    xi.xi.iter().skip(phi).sum()
}

/// Solves `xi = M^T xi`, `sum xi = 1` as `(M^T - I + B) xi = b` with `B`
/// all ones and `b` the ones vector. Chains that are irreducible but so
/// close to reducible that this system is numerically singular (levels
/// left with probability ~1e-20) are solved by state reduction instead.
pub fn stationary_distribution(m: &TransitionMatrix) -> Result<StationaryDistribution> {
    if !m.is_irreducible() {
        return Err(Error::Reducible(format!(
            "some of the {} levels do not communicate",
            m.states()
        )));
    }
    let n = m.states();
    let a = m.entries.transpose() - DMatrix::identity(n, n) + DMatrix::from_element(n, n, 1.0);
    let b = DVector::from_element(n, 1.0);
    let direct = a
        .lu()
        .solve(&b)
        .map(|sol| normalized(sol.iter().map(|v| v.max(0.0)).collect()));
    if let Some(xi) = direct {
        if stationary_residual(m, &xi) <= STATIONARY_TOL {
            return Ok(StationaryDistribution { xi });
        }
    }
    let xi = state_reduction(m)?;
    let residual = stationary_residual(m, &xi);
    if residual > STATIONARY_TOL {
        return Err(Error::StationaryResidual { residual });
    }
    Ok(StationaryDistribution { xi })
}

const STATIONARY_TOL: f64 = 1e-8;

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    v
}

fn stationary_residual(m: &TransitionMatrix, xi: &[f64]) -> f64 {
    if xi.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    let xv = DVector::from_column_slice(xi);
    (m.entries.transpose() * &xv - &xv).amax()
}

/// Grassmann-Taksar-Heyman elimination. Uses no subtractions, so tiny
/// transition probabilities keep full relative accuracy.
fn state_reduction(m: &TransitionMatrix) -> Result<Vec<f64>> {
    let n = m.states();
    let mut p = m.entries.clone();
    for k in (1..n).rev() {
        let s: f64 = (0..k).map(|j| p[(k, j)]).sum();
        if !(s > 0.0) {
            return Err(Error::Reducible(format!(
                "level {k} cannot reach any lower level"
            )));
        }
        for i in 0..k {
            p[(i, k)] /= s;
        }
        for i in 0..k {
            let f = p[(i, k)];
            if f != 0.0 {
                for j in 0..k {
                    p[(i, j)] += f * p[(k, j)];
                }
            }
        }
    }
    let mut xi = vec![0.0; n];
    xi[0] = 1.0;
    for k in 1..n {
        xi[k] = (0..k).map(|i| xi[i] * p[(i, k)]).sum();
    }
    Ok(normalized(xi))
}

/// Independent check of [`stationary_distribution`]: iterates the lazy
/// chain `(I + M) / 2`, which has the same fixed point and converges even
/// when `M` is periodic.
pub fn power_iteration(m: &TransitionMatrix, steps: usize) -> StationaryDistribution {
    let n = m.states();
    let lazy = (m.entries.clone() + DMatrix::identity(n, n)) * 0.5;
    let lazy_t = lazy.transpose();
    let mut v = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..steps {
        let next = &lazy_t * &v;
        let done = (&next - &v).amax() == 0.0;
        v = next;
        if done {
            break;
        }
    }
    let total = v.sum();
    StationaryDistribution {
        xi: v.iter().map(|x| x / total).collect(),
    }
}
