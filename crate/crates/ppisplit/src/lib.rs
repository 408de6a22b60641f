//! Interface-level dataset hygiene for protein complex structures.
//!
//! The crate covers the full path from raw structure files to audited
//! train/test splits:
//!
//! * [`structio`] parses PDB / mmCIF files into a normalized model.
//! * [`interface`] finds chain-chain contacts and extracts interfaces.
//! * [`descriptor`] embeds each interface as a fixed-length vector.
//! * [`similarity`] finds structural near-duplicates, aligns and clusters
//!   sequences, and calibrates the duplicate threshold.
//! * [`splits`] builds train/test partitions under five grouping strategies.
//! * [`audit`] measures how much structural duplication leaks across a split.
//! * [`pipeline`] wires the stages together behind one config file; the
//!   `ppisplit` binary is a thin CLI over it.
//!
//! The `examples/` directory has one runnable program per capability; start
//! with `cargo run --example extract_interfaces`.

pub mod audit;
pub mod descriptor;
pub mod fingerprint;
pub mod geometry;
pub mod interface;
pub mod pipeline;
pub mod rng;
pub mod similarity;
pub mod splits;
pub mod structio;
pub mod synthetic;

pub use structio::{Atom, Chain, PpiId, Residue, Structure};
