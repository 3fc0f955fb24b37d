// Runs the bundled scenario manifest end to end into a temporary directory.

use std::path::Path;

use fair_irt::io::{read_manifest, run_manifest};

fn main() -> fair_irt::Result<()> {
    let manifest_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/scenario.toml");
    let mut manifest = read_manifest(&manifest_path)?;
    manifest.output_dir = std::env::temp_dir().join("fair-irt-scenario");

    let summary = run_manifest(&manifest, manifest_path.parent().unwrap())?;
    println!("artifacts in {}", manifest.output_dir.display());
    println!("loss: full {:.4}, rasch {:.4}", summary.final_loss, summary.rasch_final_loss);
    println!("special: {:?}", summary.special_individuals);
    println!("flattest: {:?}", summary.flattest_individuals);
    if let Some(r) = summary.recovery {
        println!(
            "recovery: ability {:.3}, difficulty {:.3}, signs {}/{}",
            r.ability_pearson.unwrap_or(f64::NAN),
            r.difficulty_pearson.unwrap_or(f64::NAN),
            r.sign_agreement,
            r.sign_checked
        );
    }
    Ok(())
}
