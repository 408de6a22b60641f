//! Writes a synthetic benchmark corpus as PDB files, ready for the CLI:
//!
//! ```text
//! cargo run --example generate_corpus -- /tmp/corpus 40
//! ppisplit extract /tmp/corpus --out interfaces.ndjson
//! ```
//!
//! The corpus plants known duplications (translated copies inside an
//! entry, re-deposited entries, convergent analogs), so leakage numbers
//! computed on it have known expected values.

use std::env;
use std::fs;
use std::path::PathBuf;

use ppisplit::structio::write_pdb;
use ppisplit::synthetic::duplication_benchmark;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "corpus".to_string()));
    let n_entries: usize = args
        .next()
        .map(|s| s.parse().expect("entry count must be a number"))
        .unwrap_or(usize::MAX);

    fs::create_dir_all(&dir)?;
    let corpus = duplication_benchmark(7);
    let total = corpus.len().min(n_entries);
    for structure in corpus.into_iter().take(n_entries) {
        let path = dir.join(format!("{}.pdb", structure.pdb_code));
        let mut bytes = Vec::new();
        write_pdb(&mut bytes, &structure)?;
        fs::write(path, bytes)?;
    }
    println!("wrote {total} entries to {}", dir.display());
    Ok(())
}
