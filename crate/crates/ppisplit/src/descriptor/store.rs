//! On-disk descriptor collection.
//!
//! Line-oriented text: one header, then one record per interface.
//!
//! ```text
//! ppisplit.descriptors.v1 feature_dim=21 config=<hex16> tool=<version> input=<hex16|->
//! <ppi_id> <n_residues> <v0> ... <v20>
//! ```
//!
//! Vectors are written with 17 significant digits, which round-trips f64
//! exactly; records are sorted by ppi id, so serialization is byte-stable.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::str::FromStr;

use super::{DescriptorError, InterfaceDescriptor, FEATURE_DIM};
use crate::structio::PpiId;

const MAGIC: &str = "ppisplit.descriptors.v1";

#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorStore {
    config_fingerprint: String,
    /// Input fingerprint recorded at load time ("-" when unknown).
    input_fingerprint: String,
    descriptors: BTreeMap<String, InterfaceDescriptor>,
}

impl DescriptorStore {
    pub fn new(config_fingerprint: String) -> Self {
        DescriptorStore {
            config_fingerprint,
            input_fingerprint: "-".to_string(),
            descriptors: BTreeMap::new(),
        }
    }

    pub fn config_fingerprint(&self) -> &str {
        &self.config_fingerprint
    }

    pub fn input_fingerprint(&self) -> &str {
        &self.input_fingerprint
    }

    pub fn insert(&mut self, d: InterfaceDescriptor) -> Result<(), DescriptorError> {
        let key = d.ppi_id.to_string();
        if self.descriptors.contains_key(&key) {
            return Err(DescriptorError::DuplicatePpiId(key));
        }
        self.descriptors.insert(key, d);
        Ok(())
    }

    pub fn get(&self, ppi_id: &str) -> Option<&InterfaceDescriptor> {
        self.descriptors.get(ppi_id)
    }

    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }

    /// Descriptors in ppi-id order.
    pub fn iter(&self) -> impl Iterator<Item = &InterfaceDescriptor> {
        self.descriptors.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.descriptors.keys().map(String::as_str)
    }

    /// A new store holding only the ids for which `keep` returns true.
    pub fn filtered(&self, mut keep: impl FnMut(&str) -> bool) -> DescriptorStore {
        DescriptorStore {
            config_fingerprint: self.config_fingerprint.clone(),
            input_fingerprint: self.input_fingerprint.clone(),
            descriptors: self
                .descriptors
                .iter()
                .filter(|(k, _)| keep(k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    pub fn write_to<W: Write>(&self, w: &mut W, input_fingerprint: &str) -> std::io::Result<()> {
        writeln!(
            w,
            "{MAGIC} feature_dim={FEATURE_DIM} config={} tool={} input={}",
            self.config_fingerprint,
            env!("CARGO_PKG_VERSION"),
            input_fingerprint,
        )?;
        for d in self.descriptors.values() {
            write!(w, "{} {}", d.ppi_id, d.n_residues)?;
            for v in &d.vector {
                write!(w, " {v:.16e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<DescriptorStore, DescriptorError> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| DescriptorError::BadHeader("empty file".to_string()))??;
        let mut fields = header.split_whitespace();
        if fields.next() != Some(MAGIC) {
            return Err(DescriptorError::BadHeader(format!(
                "expected {MAGIC}, got {:?}",
                header.chars().take(40).collect::<String>()
            )));
        }
        let mut feature_dim: Option<usize> = None;
        let mut config = None;
        let mut input = "-".to_string();
        for field in fields {
            if let Some((k, v)) = field.split_once('=') {
                match k {
                    "feature_dim" => {
                        feature_dim = Some(v.parse().map_err(|_| {
                            DescriptorError::BadHeader("bad feature_dim".to_string())
                        })?)
                    }
                    "config" => config = Some(v.to_string()),
                    "input" => input = v.to_string(),
                    _ => {}
                }
            }
        }
        let dim = feature_dim
            .ok_or_else(|| DescriptorError::BadHeader("missing feature_dim".to_string()))?;
        if dim != FEATURE_DIM {
            return Err(DescriptorError::BadHeader(format!(
                "feature_dim {dim} unsupported, this build uses {FEATURE_DIM}"
            )));
        }
        let config = config
            .ok_or_else(|| DescriptorError::BadHeader("missing config fingerprint".to_string()))?;

        let mut store = DescriptorStore::new(config.clone());
        store.input_fingerprint = input;
        for (idx, line) in lines.enumerate() {
            let lineno = idx + 2;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut toks = line.split_whitespace();
            let id_txt = toks.next().ok_or_else(|| DescriptorError::BadRecord {
                line: lineno,
                reason: "missing ppi id".to_string(),
            })?;
            let ppi_id = PpiId::from_str(id_txt).map_err(|e| DescriptorError::BadRecord {
                line: lineno,
                reason: e.to_string(),
            })?;
            let n_residues: usize = toks
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| DescriptorError::BadRecord {
                    line: lineno,
                    reason: "missing residue count".to_string(),
                })?;
            let vector: Vec<f64> = toks
                .map(|t| t.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| DescriptorError::BadRecord {
                    line: lineno,
                    reason: "bad vector component".to_string(),
                })?;
            if vector.len() != FEATURE_DIM {
                return Err(DescriptorError::BadRecord {
                    line: lineno,
                    reason: format!("expected {FEATURE_DIM} components, got {}", vector.len()),
                });
            }
            store.insert(InterfaceDescriptor {
                ppi_id,
                vector,
                n_residues,
                config_fingerprint: config.clone(),
            })?;
        }
        Ok(store)
    }
}
