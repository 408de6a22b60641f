//! Splits a corpus two ways and measures how many test interfaces have a
//! near duplicate in training: the leakage an entry-code split hides and
//! a duplicate-graph split removes.
//!
//! ```text
//! cargo run --example audit_leakage
//! ```

use ppisplit::audit::audit_split;
use ppisplit::descriptor::{embed_corpus, DescriptorConfig};
use ppisplit::interface::{extract_all_interfaces, InterfaceConfig};
use ppisplit::pipeline::build_split;
use ppisplit::similarity::SimilarityConfig;
use ppisplit::splits::{SplitSpec, SplitStrategy};
use ppisplit::synthetic::duplication_benchmark;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = duplication_benchmark(9);
    let mut interfaces = Vec::new();
    for structure in corpus.iter().take(80) {
        interfaces.extend(extract_all_interfaces(structure, &InterfaceConfig::default())?);
    }
    let store = embed_corpus(&interfaces, &DescriptorConfig::default())?;
    let similarity = SimilarityConfig::default();

    for strategy in [SplitStrategy::PdbCode, SplitStrategy::InterfaceComponent] {
        let spec = SplitSpec {
            test_fraction: Some(0.2),
            ..SplitSpec::fraction(strategy, 4)
        };
        let split = build_split(&store, &spec, &similarity, None, None)?;
        let report = audit_split(&split, &store, &similarity)?;
        let pair = &report.fold_pairs[0];
        println!(
            "{:<20} {}/{} test interfaces leaked ({:.1}%)",
            strategy.name(),
            pair.leaked_count,
            pair.test_count,
            100.0 * report.mean_leakage_fraction
        );
        if let Some((id, hits)) = pair.hits.iter().find(|(_, h)| !h.is_empty()) {
            println!(
                "  e.g. test {id} sits {:.2e} from training {}",
                hits[0].distance, hits[0].ppi_id
            );
        }
    }
    Ok(())
}
