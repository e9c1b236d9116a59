//! Teleporting a thermal-state qubit through a Ψ- channel.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;
use thermalcat::factory::BellLabel;
use thermalcat::teleport::{physical_overlap_curve, teleport, CorrectionMode, ThermalQubit};

fn main() -> thermalcat::Result<()> {
    let (a, b) = (C64::new(FRAC_1_SQRT_2, 0.0), C64::new(0.0, FRAC_1_SQRT_2));
    let q = ThermalQubit::new(a, b, 10.0, 4.0)?;
    for mode in [CorrectionMode::Formal, CorrectionMode::Physical] {
        println!("{mode:?}");
        for r in teleport(&q, BellLabel::PsiMinus, mode)? {
            println!(
                "  {:<5} p = {:.4}  {:<26} overlap {:.6}",
                r.outcome.name(),
                r.probability,
                format!("{:?}", r.correction),
                r.hs_overlap.unwrap_or(f64::NAN)
            );
        }
    }
    println!("physical sign flip, V = 1:");
    for (d, o) in physical_overlap_curve(a, b, 1.0, &[1.0, 2.0, 4.0, 8.0])? {
        println!("  d = {d}: overlap {o:.5}");
    }
    Ok(())
}
