//! Closed forms checked against the truncated Fock-space simulation at one
//! parameter point.

use thermalcat::oracle::{bell_parity_residual, bell_pipeline_oracle, oracle_cases_at, OracleConfig};

fn main() -> thermalcat::Result<()> {
    let cfg = OracleConfig { grid_points: 11, ..OracleConfig::default() };
    for case in oracle_cases_at(2.0, 1.0, &cfg)? {
        println!(
            "{:<28} phi={:<8} cutoff {:>3}  max |dW| {:.2e}  dP {}",
            case.constructor,
            case.phi.map_or("-".into(), |p| format!("{p:.4}")),
            case.cutoff,
            case.max_wigner_deviation,
            case.probability_deviation.map_or("-".into(), |p| format!("{p:.1e}"))
        );
    }
    println!("Bell parity residual (V=3, d=1): {:.2e}", bell_parity_residual(3.0, 1.0)?);
    let b = bell_pipeline_oracle(2.0, 1.0)?;
    println!("measurement pipeline: dP {:.2e}, density {:.2e}", b.max_probability_deviation, b.max_density_deviation);
    Ok(())
}
