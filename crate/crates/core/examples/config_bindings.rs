//! Parameter files, unit suffixes and the derived-parameter bindings.

use hor::params::{Binding, ParamKey, ParamsBuilder};

fn main() -> hor::Result<()> {
    let mut b = ParamsBuilder::new();
    b.apply_config_text("# a lower-power source\nP_S = -20dBm\nC_P = 2e-6 J\n")?;
    let p = b.build()?;
    // E_th, P_R and P_Delta follow C_P
    println!(
        "P_S {} W, C_P {}, E_th {}, P_R {}, P_Delta {}",
        p.p_s, p.c_p, p.e_th, p.p_r, p.p_delta
    );

    b.set(ParamKey::ETh, 0.5e-6)?;
    match b.build() {
        Err(e) => println!("{e}"),
        Ok(_) => unreachable!("C_P and E_th both set"),
    }
    b.release(Binding::EthFromCp);
    let p = b.build()?;
    println!(
        "released: E_th {}, P_R {} (still bound to E_th)",
        p.e_th, p.p_r
    );
    Ok(())
}
