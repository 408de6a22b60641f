//! Fixed-length interface descriptors.
//!
//! Each interface residue starts as a one-hot amino-acid feature; a few
//! rounds of distance-weighted averaging mix features between residues that
//! sit within the neighbor cutoff (across both sides of the interface), and
//! mean pooling gives one vector per interface. The construction is
//! invariant to rigid motion, to which chain is called "a", and to residue
//! order, and two interfaces with the same local composition and geometry
//! land close together in Euclidean distance.

mod store;

pub use store::DescriptorStore;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fingerprint;
use crate::geometry::Vec3;
use crate::interface::{Interface, InterfaceResidue};
use crate::structio::{PpiId, AA_COUNT};

/// Descriptor length: twenty amino acids plus unknown. Fixed by the feature
/// construction, not configurable.
pub const FEATURE_DIM: usize = AA_COUNT;

#[derive(Debug, Error)]
pub enum DescriptorError {
    #[error("interface {ppi_id} has {found} residues, need at least 2")]
    InterfaceTooSmall { ppi_id: String, found: usize },
    #[error("duplicate ppi id {0}")]
    DuplicatePpiId(String),
    #[error("invalid descriptor config: {0}")]
    BadConfig(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad descriptor store header: {0}")]
    BadHeader(String),
    #[error("descriptor store line {line}: {reason}")]
    BadRecord { line: usize, reason: String },
}

/// Where a residue's representative point sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidueAnchor {
    /// Mean of the residue's heavy atoms (default).
    HeavyCentroid,
    /// The CA atom, falling back to the heavy centroid when absent.
    AlphaCarbon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DescriptorConfig {
    /// Feature-mixing rounds; 0 leaves pure composition.
    pub rounds: usize,
    /// Residues farther apart than this (anchor distance, angstroms) do not
    /// exchange features.
    pub neighbor_cutoff: f64,
    /// Length scale of the distance weight exp(-d / weight_scale).
    pub weight_scale: f64,
    pub residue_anchor: ResidueAnchor,
}

impl Default for DescriptorConfig {
    fn default() -> Self {
        DescriptorConfig {
            rounds: 1,
            neighbor_cutoff: 10.0,
            weight_scale: 4.0,
            residue_anchor: ResidueAnchor::HeavyCentroid,
        }
    }
}

impl DescriptorConfig {
    pub fn validate(&self) -> Result<(), DescriptorError> {
        if !(self.neighbor_cutoff > 0.0) {
            return Err(DescriptorError::BadConfig("neighbor_cutoff must be positive".into()));
        }
        if !(self.weight_scale > 0.0) {
            return Err(DescriptorError::BadConfig("weight_scale must be positive".into()));
        }
        Ok(())
    }

    /// Identifies the embedding scheme; stores built under different
    /// fingerprints cannot be compared.
    pub fn fingerprint(&self) -> String {
        fingerprint::of_value("descriptor-config.v1", &(FEATURE_DIM, self))
    }
}

/// The embedded form of one interface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceDescriptor {
    pub ppi_id: PpiId,
    pub vector: Vec<f64>,
    pub n_residues: usize,
    pub config_fingerprint: String,
}

fn one_hot(index: usize) -> Vec<f64> {
    let mut v = vec![0.0; FEATURE_DIM];
    v[index] = 1.0;
    v
}

fn anchor_of(res: &InterfaceResidue, anchor: ResidueAnchor) -> Vec3 {
    match anchor {
        ResidueAnchor::HeavyCentroid => res.heavy_centroid(),
        ResidueAnchor::AlphaCarbon => res.alpha_carbon().unwrap_or_else(|| res.heavy_centroid()),
    }
}

/// One round of distance-weighted feature mixing:
/// h_i <- (h_i + sum_j w_ij h_j) / (1 + sum_j w_ij) over neighbors j != i
/// with anchor distance d_ij <= cutoff and w_ij = exp(-d_ij / scale).
pub fn message_passing_round(
    features: &[Vec<f64>],
    anchors: &[Vec3],
    config: &DescriptorConfig,
) -> Vec<Vec<f64>> {
    assert_eq!(features.len(), anchors.len());
    let n = features.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = features[i].clone();
        let mut weight_sum = 1.0f64;
        for j in 0..n {
            if j == i {
                continue;
            }
            let d = anchors[i].dist(anchors[j]);
            if d <= config.neighbor_cutoff {
                let w = (-d / config.weight_scale).exp();
                for (a, h) in acc.iter_mut().zip(&features[j]) {
                    *a += w * h;
                }
                weight_sum += w;
            }
        }
        for a in acc.iter_mut() {
            *a /= weight_sum;
        }
        out.push(acc);
    }
    out
}

/// Embeds one interface. Residues from both sides are pooled jointly, in a
/// canonical order, so the result does not depend on side naming or input
/// order.
pub fn embed_interface(
    interface: &Interface,
    config: &DescriptorConfig,
) -> Result<InterfaceDescriptor, DescriptorError> {
    config.validate()?;
    embed_with_fingerprint(interface, config, config.fingerprint())
}

fn embed_with_fingerprint(
    interface: &Interface,
    config: &DescriptorConfig,
    config_fingerprint: String,
) -> Result<InterfaceDescriptor, DescriptorError> {
    let n = interface.n_residues();
    if n < 2 {
        return Err(DescriptorError::InterfaceTooSmall {
            ppi_id: interface.ppi_id.to_string(),
            found: n,
        });
    }

    let mut residues: Vec<&InterfaceResidue> =
        interface.residues_a.iter().chain(interface.residues_b.iter()).collect();
    residues.sort_by_key(|r| r.order_key());

    let anchors: Vec<Vec3> =
        residues.iter().map(|r| anchor_of(r, config.residue_anchor)).collect();
    let mut features: Vec<Vec<f64>> =
        residues.iter().map(|r| one_hot(r.aa_type.index())).collect();

    for _ in 0..config.rounds {
        features = message_passing_round(&features, &anchors, config);
    }

    let mut pooled = vec![0.0f64; FEATURE_DIM];
    for h in &features {
        for (p, v) in pooled.iter_mut().zip(h) {
            *p += v;
        }
    }
    for p in pooled.iter_mut() {
        *p /= n as f64;
    }

    Ok(InterfaceDescriptor {
        ppi_id: interface.ppi_id.clone(),
        vector: pooled,
        n_residues: n,
        config_fingerprint,
    })
}

/// Embeds a batch of interfaces in parallel. The result is identical for
/// any worker count; duplicate ppi ids are an error.
pub fn embed_corpus(
    interfaces: &[Interface],
    config: &DescriptorConfig,
) -> Result<DescriptorStore, DescriptorError> {
    config.validate()?;
    let fp = config.fingerprint();
    let embedded: Vec<Result<InterfaceDescriptor, DescriptorError>> = interfaces
        .par_iter()
        .map(|iface| embed_with_fingerprint(iface, config, fp.clone()))
        .collect();
    let mut store = DescriptorStore::new(fp);
    for d in embedded {
        store.insert(d?)?;
    }
    Ok(store)
}
