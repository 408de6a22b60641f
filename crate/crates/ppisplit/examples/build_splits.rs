//! Builds train/test splits of one corpus under every grouping strategy
//! and prints the fold sizes.
//!
//! ```text
//! cargo run --example build_splits
//! ```

use std::collections::BTreeSet;

use ppisplit::descriptor::{embed_corpus, DescriptorConfig};
use ppisplit::interface::{extract_all_interfaces, InterfaceConfig};
use ppisplit::pipeline::build_split;
use ppisplit::similarity::SimilarityConfig;
use ppisplit::similarity::cluster_sequences;
use ppisplit::splits::{validate_split, SplitSpec, SplitStrategy};
use ppisplit::synthetic::duplication_benchmark;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = duplication_benchmark(3);
    let interface_config = InterfaceConfig::default();
    let mut interfaces = Vec::new();
    let mut dates = std::collections::BTreeMap::new();
    let mut chains = std::collections::BTreeMap::new();
    for structure in corpus.iter().take(60) {
        let extracted = extract_all_interfaces(structure, &interface_config)?;
        if !extracted.is_empty() {
            if let Some(date) = structure.deposition_date {
                dates.insert(structure.pdb_code.clone(), date);
            }
            for chain in &structure.chains {
                chains.insert(
                    format!("{}_{}", structure.pdb_code, chain.id),
                    chain.sequence(),
                );
            }
        }
        interfaces.extend(extracted);
    }
    let store = embed_corpus(&interfaces, &DescriptorConfig::default())?;
    let clusters = cluster_sequences(&chains, 0.3);
    let similarity = SimilarityConfig::default();
    let ppis: BTreeSet<String> = store.ids().map(str::to_string).collect();

    println!("{} interfaces from {} entries\n", store.len(), dates.len());
    for strategy in SplitStrategy::ALL {
        let spec = SplitSpec {
            test_fraction: Some(0.2),
            ..SplitSpec::fraction(strategy, 17)
        };
        let split = build_split(&store, &spec, &similarity, Some(&dates), Some(&clusters))?;
        assert!(validate_split(&split, &ppis).passed());
        let test = split.fold("test").map(|f| f.len()).unwrap_or(0);
        let train = split.fold("train").map(|f| f.len()).unwrap_or(0);
        let realized = split
            .provenance
            .as_ref()
            .and_then(|p| p.realized_test_fraction);
        println!(
            "{:<20} train {train:>3}  test {test:>3}  realized fraction {:?}",
            strategy.name(),
            realized.map(|f| (f * 1000.0).round() / 1000.0)
        );
    }
    Ok(())
}
