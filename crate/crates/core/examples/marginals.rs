//! Quadrature densities in both abscissa conventions.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use thermalcat::factory::{thermal_superposition, Sign};
use thermalcat::kernel::marginal_distribution;
use thermalcat::marginal::QuadratureConvention;

fn main() -> thermalcat::Result<()> {
    let s = thermal_superposition(4.0, C64::new(3.0, 0.0), PI, Sign::Minus)?;
    for conv in [QuadratureConvention::Quadrature, QuadratureConvention::Amplitude] {
        let x = marginal_distribution(&s, 0, 0.0, conv)?;
        let p = marginal_distribution(&s, 0, PI / 2.0, conv)?;
        println!("{conv:?}: total {:.12}, support {:?}", x.total(), x.support());
        for t in [-1.0, -0.5, 0.0, 0.5, 1.0] {
            println!("  P_x({t:>4}) = {:.6}   P_p({t:>4}) = {:.6}", x.eval(t), p.eval(t));
        }
    }
    Ok(())
}
