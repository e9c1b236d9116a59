//! Conditional state as the cross-Kerr interaction time grows.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use thermalcat::factory::{kerr_time_series, Sign};

fn main() -> thermalcat::Result<()> {
    let thetas: Vec<f64> = (0..=8).map(|k| k as f64 * PI / 8.0).collect();
    let frames = kerr_time_series(5.0, C64::new(0.0, 0.0), &thetas, Sign::Minus)?;
    println!("{:>10} {:>12} {:>12}", "theta/pi", "P(-)", "W(0)");
    for f in frames {
        let w0 = match &f.state {
            Some(s) => format!("{:.6}", s.wigner(&[C64::new(0.0, 0.0)])?),
            None => "-".into(),
        };
        println!("{:>10.3} {:>12.6} {:>12}", f.theta / PI, f.probability, w0);
    }
    Ok(())
}
