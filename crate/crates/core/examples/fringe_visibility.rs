//! Interference fringes survive arbitrarily high temperature.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use thermalcat::factory::{thermal_superposition, Sign};
use thermalcat::kernel::fringe_metrics;
use thermalcat::marginal::QuadratureConvention;

fn main() -> thermalcat::Result<()> {
    let d = 300.0;
    println!("{:>8} {:>14} {:>14}", "V", "visibility", "spacing");
    for v in [1.0, 10.0, 100.0, 1000.0] {
        let s = thermal_superposition(v, C64::new(d, 0.0), PI, Sign::Minus)?;
        let fm = fringe_metrics(&s, 0, PI / 2.0, QuadratureConvention::Quadrature)?;
        println!("{v:>8} {:>14.10} {:>14.8}", fm.visibility().unwrap_or(f64::NAN), fm.spacing().unwrap_or(f64::NAN));
    }

    // weak nonlinearity: fringes appear along φ/2 instead of π/2
    let phi = PI / 1000.0;
    let s = thermal_superposition(5.0, C64::new(2000.0, 0.0), phi, Sign::Minus)?;
    let fm = fringe_metrics(&s, 0, phi / 2.0, QuadratureConvention::Quadrature)?;
    println!("V = 5, d = 2000, phi = pi/1000: visibility {:.7}", fm.visibility().unwrap_or(f64::NAN));
    Ok(())
}
