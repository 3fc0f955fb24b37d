// Turns prediction pairs into a response matrix, first as situation test
// scores for a classifier, then as equalised scores and regression scores.

use fair_irt::metrics::{
    build_response_matrix, fairness_flag, EsCondition, LambdaMode, MetricConfig, MetricKind, PredictionPairRecord,
    Task,
};

fn show(title: &str, config: &MetricConfig, records: &[PredictionPairRecord]) -> fair_irt::Result<()> {
    let built = build_response_matrix(records, config)?;
    let m = &built.matrix;
    println!("{title}");
    println!("  individuals: {:?}", m.individual_ids());
    for (i, model) in m.model_ids().iter().enumerate() {
        let cells: Vec<String> = m
            .grid()
            .row(i)
            .iter()
            .map(|&v| format!("{v:.3} {}", fairness_flag(v, config.epsilon)))
            .collect();
        println!("  {model}: {}", cells.join(", "));
    }
    if let Some(lambda) = built.lambda {
        println!("  lambda {lambda}, excluded {}, dropped {:?}", built.excluded_records, built.dropped_individuals);
    }
    if !built.unconditioned_individuals.is_empty() {
        println!("  left out by conditioning: {:?}", built.unconditioned_individuals);
    }
    Ok(())
}

fn main() -> fair_irt::Result<()> {
    let classifier = vec![
        PredictionPairRecord::new("logreg", "alice", 0.82, 0.80).with_label(true),
        PredictionPairRecord::new("logreg", "bob", 0.35, 0.71).with_label(false),
        PredictionPairRecord::new("logreg", "carol", 0.64, 0.12).with_label(true),
        PredictionPairRecord::new("forest", "alice", 0.91, 0.55).with_label(true),
        PredictionPairRecord::new("forest", "bob", 0.40, 0.42).with_label(false),
        PredictionPairRecord::new("forest", "carol", 0.58, 0.57).with_label(true),
    ];
    show("situation test scores", &MetricConfig::default(), &classifier)?;

    let es = MetricConfig {
        metric: MetricKind::Es,
        es_condition: EsCondition::Opportunity,
        ..MetricConfig::default()
    };
    show("equalised scores, positive label only", &es, &classifier)?;

    let regressor = vec![
        PredictionPairRecord::new("ridge", "alice", 52_000.0, 49_000.0),
        PredictionPairRecord::new("ridge", "bob", 0.0, 1_000.0),
        PredictionPairRecord::new("ridge", "carol", 30_000.0, 75_000.0),
        PredictionPairRecord::new("boost", "alice", 48_000.0, 48_500.0),
        PredictionPairRecord::new("boost", "bob", 20_000.0, 21_000.0),
        PredictionPairRecord::new("boost", "carol", 33_000.0, 35_000.0),
    ];
    let reg = MetricConfig {
        task: Task::Regression,
        lambda: LambdaMode::Auto,
        ..MetricConfig::default()
    };
    show("regression scores with automatic lambda", &reg, &regressor)
}
