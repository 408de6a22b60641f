//! Embeds interfaces into fixed-length descriptors and finds which test
//! interfaces have a near duplicate in a training set.
//!
//! ```text
//! cargo run --example embed_and_query
//! ```

use ppisplit::descriptor::{embed_corpus, DescriptorConfig};
use ppisplit::interface::{extract_all_interfaces, InterfaceConfig};
use ppisplit::similarity::{query_near_duplicates, SimilarityConfig};
use ppisplit::synthetic::duplication_benchmark;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = duplication_benchmark(42);
    let interface_config = InterfaceConfig::default();
    let mut interfaces = Vec::new();
    for structure in corpus.iter().take(30) {
        interfaces.extend(extract_all_interfaces(structure, &interface_config)?);
    }
    let store = embed_corpus(&interfaces, &DescriptorConfig::default())?;
    println!("embedded {} interfaces", store.len());

    // Pretend the original depositions are training data and the planted
    // re-depositions/analogs are a held-out test set.
    let train = store.filtered(|id| id.as_bytes()[3] == b'p');
    let test = store.filtered(|id| id.as_bytes()[3] != b'p');
    println!("train {} / test {}", train.len(), test.len());

    let config = SimilarityConfig::default();
    let hits = query_near_duplicates(&train, &test, &config)?;
    let leaked = hits.values().filter(|h| !h.is_empty()).count();
    println!(
        "{leaked} of {} test interfaces have a training near duplicate (tau {})",
        hits.len(),
        config.duplicate_threshold
    );
    for (id, matches) in hits.iter().filter(|(_, m)| !m.is_empty()).take(5) {
        println!(
            "  {id} -> {} (distance {:.2e})",
            matches[0].ppi_id, matches[0].distance
        );
    }
    Ok(())
}
