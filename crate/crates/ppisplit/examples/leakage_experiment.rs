//! Runs the multi-sample experiment comparing split strategies by mean
//! near-duplicate leakage on the synthetic benchmark.
//!
//! ```text
//! cargo run --release --example leakage_experiment
//! ```

use std::collections::BTreeMap;

use ppisplit::audit::{run_experiment, ExperimentConfig, ExperimentInputs};
use ppisplit::descriptor::{embed_corpus, DescriptorConfig};
use ppisplit::interface::{extract_all_interfaces, InterfaceConfig};
use ppisplit::similarity::SimilarityConfig;
use ppisplit::synthetic::duplication_benchmark;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = duplication_benchmark(0);
    let mut interfaces = Vec::new();
    let mut dates = BTreeMap::new();
    let mut sequences = BTreeMap::new();
    for structure in &corpus {
        let extracted = extract_all_interfaces(structure, &InterfaceConfig::default())?;
        if extracted.is_empty() {
            continue;
        }
        if let Some(date) = structure.deposition_date {
            dates.insert(structure.pdb_code.clone(), date);
        }
        for chain in &structure.chains {
            sequences.insert(
                format!("{}_{}", structure.pdb_code, chain.id),
                chain.sequence(),
            );
        }
        interfaces.extend(extracted);
    }
    let store = embed_corpus(&interfaces, &DescriptorConfig::default())?;
    println!("corpus: {} interfaces from {} entries", store.len(), dates.len());

    let similarity = SimilarityConfig::default();
    let inputs = ExperimentInputs {
        store: &store,
        dates: &dates,
        sequences: &sequences,
        similarity: &similarity,
        min_seq_id: 0.3,
    };
    let config = ExperimentConfig {
        n_samples: 5,
        codes_per_sample: 250,
        seed: 1,
        ..ExperimentConfig::default()
    };
    let result = run_experiment(&inputs, &config)?;

    println!("\n{:<22} {:>8} {:>8}", "strategy", "mean", "stddev");
    for strategy in &result.strategies {
        println!(
            "{:<22} {:>8} {:>8}",
            strategy.strategy_name,
            strategy
                .mean
                .map(|m| format!("{m:.3}"))
                .unwrap_or_else(|| "-".to_string()),
            strategy
                .stddev
                .map(|s| format!("{s:.3}"))
                .unwrap_or_else(|| "-".to_string()),
        );
    }
    Ok(())
}
