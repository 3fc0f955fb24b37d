// Ranks individuals by how little their expected treatment depends on the
// model, then checks the ranking against the raw spread of each ICC.

use fair_irt::analysis::{fitted_ability_range, flattest_individuals, flattest_individuals_in, FlatnessDomain};
use fair_irt::fit::{fit_beta_irt, FitConfig};
use fair_irt::irt::{beta_icc, Ability};
use fair_irt::simulate::{simulate, SimulationSpec};

fn main() -> fair_irt::Result<()> {
    let (_, matrix) = simulate(&SimulationSpec { seed: 42, ..SimulationSpec::default() })?;
    let report = fit_beta_irt(&matrix, &FitConfig { seed: 42, ..FitConfig::default() })?;
    let (lo, hi) = fitted_ability_range(&report).expect("models");
    println!("fitted abilities span [{lo:.3}, {hi:.3}]");

    for s in flattest_individuals(&report, 5)? {
        let item = &report.parameters.items()[report.individual_ids.iter().position(|id| *id == s.individual_id).unwrap()];
        let spread = beta_icc(Ability::new(hi)?, item) - beta_icc(Ability::new(lo)?, item);
        println!("{}  FI = {:.4}  a = {:+.3}  spread = {:+.4}", s.individual_id, s.flatness, s.discrimination, spread);
    }

    let grid: Vec<String> = flattest_individuals_in(&report, 5, FlatnessDomain::UniformGrid(99))?
        .into_iter()
        .map(|s| s.individual_id)
        .collect();
    println!("flattest over the whole ability range: {grid:?}");
    Ok(())
}
