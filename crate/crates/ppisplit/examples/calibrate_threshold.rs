//! Picks the duplicate-distance threshold from labeled descriptor pairs
//! by maximizing F1 over every decision boundary.
//!
//! ```text
//! cargo run --example calibrate_threshold
//! ```

use ppisplit::descriptor::{embed_corpus, DescriptorConfig};
use ppisplit::interface::{extract_all_interfaces, InterfaceConfig};
use ppisplit::similarity::calibrate_threshold_on_descriptors;
use ppisplit::synthetic::duplication_benchmark;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = duplication_benchmark(21);
    let mut interfaces = Vec::new();
    for structure in corpus.iter().take(40) {
        interfaces.extend(extract_all_interfaces(structure, &InterfaceConfig::default())?);
    }
    let store = embed_corpus(&interfaces, &DescriptorConfig::default())?;

    // Label pairs using what the generator planted: entries sharing a
    // family prefix are duplicates, entries from different families are not.
    let ids: Vec<String> = store.ids().map(str::to_string).collect();
    let mut pairs = Vec::new();
    for (i, a) in ids.iter().enumerate() {
        for b in ids.iter().skip(i + 1).take(6) {
            let same_family = a[..3] == b[..3];
            pairs.push((
                store.get(a).unwrap().clone(),
                store.get(b).unwrap().clone(),
                same_family,
            ));
        }
    }
    println!(
        "{} labeled pairs ({} positive)",
        pairs.len(),
        pairs.iter().filter(|(_, _, d)| *d).count()
    );

    let calibration = calibrate_threshold_on_descriptors(&pairs)?;
    println!(
        "tau {:.6}  F1 {:.3}  precision {:.3}  recall {:.3}  ({} candidates tried)",
        calibration.tau,
        calibration.f1,
        calibration.precision,
        calibration.recall,
        calibration.candidates_evaluated
    );
    Ok(())
}
