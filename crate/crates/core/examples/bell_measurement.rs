//! Thermal-Bell measurement: qubit statistics, homodyne densities and a
//! seeded Monte Carlo discrimination run.

use thermalcat::bell::{
    closed_form_probabilities, confusion_matrix, outcome_probabilities, BellModel, MonteCarloConfig, QubitOutcome,
};
use thermalcat::factory::BellLabel;

fn main() -> thermalcat::Result<()> {
    let (v, d) = (10.0, 10.0);
    for label in BellLabel::ALL {
        let p = outcome_probabilities(label, v, d)?;
        let q = closed_form_probabilities(label, v, d)?;
        let cells: Vec<String> = QubitOutcome::ALL.iter().map(|&o| format!("{o}: {:.6}", p.get(o))).collect();
        let dev = p.0.iter().zip(q.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!("{label:<5} {}  (closed form within {dev:.1e})", cells.join("  "));
    }

    let model = BellModel::new(v, d)?;
    let cm = confusion_matrix(&model, &MonteCarloConfig { trials: 20_000, seed: 7, ..MonteCarloConfig::default() });
    for (i, label) in cm.labels.iter().enumerate() {
        println!("{label:<5} -> {:?}  accuracy {:.5}", cm.counts[i], cm.accuracy(*label));
    }
    Ok(())
}
