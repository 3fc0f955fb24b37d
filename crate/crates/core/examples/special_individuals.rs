// Fits noiseless responses and lists the individuals with negative
// discrimination next to the ones planted by the simulation.

use fair_irt::analysis::special_individuals;
use fair_irt::fit::{fit_beta_irt, FitConfig};
use fair_irt::simulate::{simulate, SimulationSpec};

fn main() -> fair_irt::Result<()> {
    let spec = SimulationSpec {
        seed: 42,
        noiseless: true,
        ..SimulationSpec::default()
    };
    let (truth, matrix) = simulate(&spec)?;
    let report = fit_beta_irt(&matrix, &FitConfig { seed: 42, ..FitConfig::default() })?;

    let planted: Vec<&str> = truth
        .items()
        .iter()
        .zip(matrix.individual_ids())
        .filter(|(item, _)| item.discrimination() < 0.0)
        .map(|(_, id)| id.as_str())
        .collect();
    println!("planted: {planted:?}");
    for s in special_individuals(&report)? {
        println!("{}  a = {:+.3}  delta = {:.3}", s.individual_id, s.discrimination, s.difficulty);
    }
    Ok(())
}
