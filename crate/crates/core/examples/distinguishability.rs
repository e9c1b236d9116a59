//! Probability of telling the Φ and Ψ branches apart with one homodyne
//! threshold, as a function of d.

use thermalcat::bell::distinguishability;

fn main() -> thermalcat::Result<()> {
    let vs = [1.0, 10.0, 20.0];
    println!("{:>6} {}", "d", vs.map(|v| format!("{:>12}", format!("V={v}"))).join(""));
    for k in 1..=24 {
        let d = k as f64 / 2.0;
        let row: Vec<String> = vs.iter().map(|&v| distinguishability(v, d).map(|p| format!("{p:>12.6}"))).collect::<Result<_, _>>()?;
        println!("{d:>6} {}", row.join(""));
    }
    Ok(())
}
