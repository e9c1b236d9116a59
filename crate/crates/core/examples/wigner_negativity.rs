//! Wigner negativity of thermal superpositions and of the qubit-field state.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use thermalcat::factory::{hybrid_min_wigner, qubit_field_entangled, thermal_superposition, Sign};
use thermalcat::kernel::{min_wigner, MinWignerConfig, SearchRegion};

fn main() -> thermalcat::Result<()> {
    let origin = [C64::new(0.0, 0.0)];
    println!("odd superposition at d = 0, value at the origin (-2/pi = {:.6}):", -2.0 / PI);
    // V = 1 would be the vacuum, which has no odd branch
    for v in [2.0, 10.0, 100.0] {
        let s = thermal_superposition(v, C64::new(0.0, 0.0), PI, Sign::Minus)?;
        println!("  V = {v:>5}: W(0) = {:.6}", s.wigner(&origin)?);
    }

    let even = thermal_superposition(100.0, C64::new(0.0, 0.0), PI, Sign::Plus)?;
    let m = min_wigner(&even, &SearchRegion::square(1, 6.0), &MinWignerConfig::default())?;
    println!("even superposition, V = 100: min W = {:.3e}", m.value);

    println!("qubit entangled with a thermal field:");
    let region = SearchRegion::square(2, 2.5);
    for (v, d) in [(1.0, 0.0), (1e4, 0.0), (1.0, 6.0)] {
        let h = qubit_field_entangled(v, C64::new(d, 0.0), PI)?;
        let m = hybrid_min_wigner(&h, &region, &MinWignerConfig::default())?;
        println!("  V = {v:>7}, d = {d}: min W = {:.5} at qubit {:.3}", m.value, m.point[0]);
    }
    Ok(())
}
