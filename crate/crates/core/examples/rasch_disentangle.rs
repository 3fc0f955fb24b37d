// Splits unfairness into an individual part and a model part with the
// Rasch-constrained fit.

use fair_irt::analysis::{disentangle, rasch_decomposition};
use fair_irt::fit::{fit_beta_irt, FitConfig};
use fair_irt::metrics::FairnessFlag;
use fair_irt::simulate::{simulate, SimulationSpec};

fn main() -> fair_irt::Result<()> {
    // Published-style numbers: log delta 3.07, log theta -0.24.
    let (g, flag) = rasch_decomposition(3.07, -0.24);
    println!("g = {g:.2} -> {flag}");

    let spec = SimulationSpec {
        n_models: 6,
        n_individuals: 10,
        seed: 3,
        ..SimulationSpec::default()
    };
    let (_, matrix) = simulate(&spec)?;
    let full = fit_beta_irt(&matrix, &FitConfig::default())?;
    let rasch = fit_beta_irt(&matrix, &FitConfig { rasch: true, ..FitConfig::default() })?;
    println!("loss: full {:.4}, rasch {:.4}", full.final_loss, rasch.final_loss);

    let records = disentangle(&rasch)?;
    for r in records.iter().filter(|r| r.individual_id == "i01") {
        println!(
            "{} {}: log delta {:+.3} + log theta {:+.3} = {:+.3} {}",
            r.model_id, r.individual_id, r.log_delta, r.log_theta, r.g_value, r.flag
        );
    }
    let unfair = records.iter().filter(|r| r.flag == FairnessFlag::Unfair).count();
    println!("{unfair} of {} cells unfair", records.len());

    match disentangle(&full) {
        Err(e) => println!("full fit: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
