//! Harvested energy per block and its quantization onto the PEC lattice
//! of `L` units of `C_P / L` joules.

use crate::params::SystemParams;

/// Relative distance to an integer below which a ratio is treated as
/// lying exactly on the lattice. Keeps e.g. `0.6e-6 / 4e-8` from ceiling
/// to 16 through rounding noise.
const LATTICE_SNAP: f64 = 1e-9;

fn snap(ratio: f64) -> Option<f64> {
    let r = ratio.round();
    ((ratio - r).abs() <= LATTICE_SNAP * r.abs().max(1.0)).then_some(r)
}

fn floor_quanta(ratio: f64) -> u64 {
    snap(ratio).unwrap_or_else(|| ratio.floor()).max(0.0) as u64
}

fn ceil_quanta(ratio: f64) -> u64 {
    snap(ratio).unwrap_or_else(|| ratio.ceil()).max(0.0) as u64
}

/// Size of one energy unit, `C_P / L`.
pub fn unit(p: &SystemParams) -> f64 {
    p.c_p / p.levels as f64
}

/// Energy harvested in a pure-harvesting block: `eta P_S g_SR`.
pub fn harvest_peh(p: &SystemParams, g_sr: f64) -> f64 {
    p.eta * p.p_s * g_sr
}

/// Transmit power of a relaying block, raised by `P_Delta` when a covert
/// message rides along.
pub fn relay_power(p: &SystemParams, covert: bool) -> f64 {
    if covert {
        p.p_r + p.p_delta
    } else {
        p.p_r
    }
}

/// Energy harvested while relaying: `eta rho (P_S g_SR + k P_FS g_RR)`.
pub fn harvest_fs(p: &SystemParams, g_sr: f64, g_rr: f64, covert: bool) -> f64 {
    p.eta * p.rho * (p.p_s * g_sr + p.k * relay_power(p, covert) * g_rr)
}

/// Units credited for a pure-harvesting block, before clamping at `L`.
pub fn discretize_charge_peh(p: &SystemParams, e_peh: f64) -> u64 {
    floor_quanta(e_peh / unit(p))
}

/// Units credited for a relaying block: the minor battery caps the energy
/// at `C_M` and transfers it with efficiency `eta'`.
pub fn discretize_charge_fs(p: &SystemParams, e_fs: f64) -> u64 {
    floor_quanta(p.eta_prime * e_fs.min(p.c_m) / unit(p))
}

/// Largest charge a relaying block can credit.
pub fn fs_saturation(p: &SystemParams) -> u64 {
    discretize_charge_fs(p, p.c_m)
}

/// Units a relaying block consumes, `ceil(E_th / unit)`. This is also the
/// level a block must start from to be allowed to relay.
pub fn discretize_consume(p: &SystemParams) -> u64 {
    ceil_quanta(p.e_th / unit(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{default_params, derive_gains};
    use proptest::prelude::*;

    #[test]
    fn harvest_examples() {
        let p = default_params();
        let g = derive_gains(&p);
        assert_eq!(harvest_peh(&p, 0.0), 0.0);
        assert!((harvest_peh(&p, g.omega_sr) - 7.7973e-8).abs() < 1e-12);
        assert!(
            (harvest_peh(&p, 2.0 * g.omega_sr) - 2.0 * harvest_peh(&p, g.omega_sr)).abs() < 1e-22
        );
        let fs = harvest_fs(&p, g.omega_sr, g.omega_rr, false);
        // 0.2 * (1e-4 / 513 + 6e-7 / 1.001)
        assert!((fs - 1.588_665_2e-7).abs() < 1e-13);
        let diff = harvest_fs(&p, 1e-3, 0.7, true) - harvest_fs(&p, 1e-3, 0.7, false);
        assert!((diff - p.eta * p.rho * p.k * p.p_delta * 0.7).abs() < 1e-20);
        assert_eq!(harvest_fs(&p, 0.0, 0.0, true), 0.0);
    }

    #[test]
    fn discretization_examples() {
        let p = default_params();
        let u = unit(&p);
        assert!((u - 4e-8).abs() < 1e-22);
        assert_eq!(discretize_charge_peh(&p, u * (1.0 - 1e-6)), 0);
        assert_eq!(discretize_charge_peh(&p, 3.0 * u), 3);
        assert_eq!(discretize_charge_peh(&p, 7.7973e-8), 1);
        assert_eq!(discretize_charge_fs(&p, 1.588_665_2e-7), 3);
        assert_eq!(discretize_charge_fs(&p, 0.0), 0);
        assert_eq!(discretize_charge_fs(&p, 5.0), fs_saturation(&p));
        assert_eq!(fs_saturation(&p), 22);
        assert_eq!(discretize_consume(&p), 15);
        let with_l = |l| SystemParams { levels: l, ..p };
        assert_eq!(discretize_consume(&with_l(5)), 3);
        assert_eq!(discretize_consume(&with_l(7)), 5);
    }

    #[test]
    fn fine_lattice_tracks_energy() {
        let p = SystemParams {
            levels: 1000,
            ..default_params()
        };
        let u = unit(&p);
        for i in 0..500 {
            let e = i as f64 * 1.37e-9;
            let q = discretize_charge_peh(&p, e) as f64;
            assert!((q * u - e).abs() <= u);
        }
    }

    proptest! {
        #[test]
        fn floor_and_ceiling_properties(e in 0.0f64..2e-6, de in 0.0f64..1e-6, l in 1usize..400) {
            let p = SystemParams { levels: l, ..default_params() };
            let u = unit(&p);
            let q = discretize_charge_peh(&p, e);
            prop_assert!(q as f64 * u <= e * (1.0 + 1e-9));
            prop_assert!(discretize_charge_peh(&p, e + de) >= q);
            let qf = discretize_charge_fs(&p, e);
            prop_assert!(qf as f64 * u <= p.eta_prime * e.min(p.c_m) * (1.0 + 1e-9));
            prop_assert!(discretize_charge_fs(&p, e + de) >= qf);
            prop_assert!(discretize_consume(&p) as f64 * u >= p.e_th * (1.0 - 1e-9));
        }
    }
}
