// Simulates the 20 x 50 scenario, fits it and reports how well the truth
// comes back.
//
//   cargo run --release --example recover_simulated -- [seed] [noiseless]

use fair_irt::analysis::special_individuals;
use fair_irt::fit::{fit_beta_irt, FitConfig};
use fair_irt::io::Recovery;
use fair_irt::simulate::{simulate, SimulationSpec};

fn main() -> fair_irt::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(42);
    let noiseless = args.next().is_some_and(|s| s == "noiseless");

    let spec = SimulationSpec {
        seed,
        noiseless,
        ..SimulationSpec::default()
    };
    let (truth, matrix) = simulate(&spec)?;
    let report = fit_beta_irt(&matrix, &FitConfig { seed, ..FitConfig::default() })?;
    let rec = Recovery::compute(&truth, &report.parameters, matrix.individual_ids())?;

    let fmt = |r: Option<f64>| r.map_or("n/a".to_string(), |r| format!("{r:.4}"));
    println!("seed {seed} noiseless {noiseless}");
    println!("  loss {:.5} after {} epochs (converged: {})", report.final_loss, report.epochs_run, report.converged);
    println!("  pearson ability      {}", fmt(rec.ability_pearson));
    println!("  pearson difficulty   {}", fmt(rec.difficulty_pearson));
    println!("  pearson discrimination {}", fmt(rec.discrimination_pearson));
    println!("  sign agreement {}/{}", rec.sign_agreement, rec.sign_checked);

    let mut found: Vec<String> = special_individuals(&report)?.into_iter().map(|s| s.individual_id).collect();
    found.sort();
    println!("  true special  {:?}", rec.true_special);
    println!("  found special {found:?}");
    Ok(())
}
