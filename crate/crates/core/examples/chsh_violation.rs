//! Maximal Bell-CHSH values for the two entangled families.

use std::f64::consts::PI;

use thermalcat::chsh::{optimize_chsh, ChshConfig, ChshFamily, TSIRELSON_BOUND};
use thermalcat::factory::Sign;

fn main() -> thermalcat::Result<()> {
    println!("Tsirelson bound {TSIRELSON_BOUND:.6}");
    for family in [ChshFamily::TwoModeThermal, ChshFamily::BsEntangled] {
        for (v, d) in [(1.0, 2.0), (10.0, 10.0), (100.0, 100.0)] {
            let state = family.state(v, d, PI, Sign::Plus)?;
            let r = optimize_chsh(&state, &ChshConfig::for_family(family, v, d, PI))?;
            println!("{:<18} V = {v:>5} d = {d:>5}: B = {:.5}", family.name(), r.value);
        }
    }
    let state = ChshFamily::BsEntangled.state(1000.0, 0.0, PI, Sign::Plus)?;
    let r = optimize_chsh(&state, &ChshConfig::for_family(ChshFamily::BsEntangled, 1000.0, 0.0, PI))?;
    println!("bs_entangled at d = 0, V = 1000: B = {:.5}", r.value);
    Ok(())
}
