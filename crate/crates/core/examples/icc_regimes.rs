// Prints the three ICC shapes (decreasing, flat-ish, steep) next to the
// classical logistic curve.

use fair_irt::analysis::tabulate_icc;
use fair_irt::irt::{icc_derivative, logistic_icc, Ability, ItemParams};

fn main() -> fair_irt::Result<()> {
    let items = [
        ("a = -1.5", ItemParams::new(0.4, -1.5)?),
        ("a = 0.5", ItemParams::new(0.4, 0.5)?),
        ("a = 3", ItemParams::new(0.4, 3.0)?),
    ];
    let tables: Vec<_> = items
        .iter()
        .map(|(_, item)| tabulate_icc(item, 11))
        .collect::<fair_irt::Result<_>>()?;

    print!("{:>6}", "theta");
    for (name, _) in &items {
        print!("{name:>10}");
    }
    println!("{:>10}", "logistic");
    for k in 0..11 {
        let theta = tables[0][k].0;
        print!("{theta:>6.2}");
        for table in &tables {
            print!("{:>10.4}", table[k].1);
        }
        // logistic model on the logit scale, same difficulty and a = 3
        let t = (theta / (1.0 - theta)).ln();
        let d = (0.4f64 / 0.6).ln();
        println!("{:>10.4}", logistic_icc(t, d, 3.0));
    }

    let mid = Ability::new(0.4)?;
    for (name, item) in &items {
        println!("slope at theta = delta for {name}: {:.4}", icc_derivative(mid, item));
    }
    Ok(())
}
