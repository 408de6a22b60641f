//! Chain-chain contact detection and interface extraction.
//!
//! An interface is residue-level: a residue belongs to it when at least one
//! of its heavy atoms sits within the contact cutoff of any heavy atom on
//! the partner chain. Hydrogens never participate.

mod contacts;
mod sasa;

pub use contacts::find_contacts;
pub use sasa::{buried_surface_area, sasa_areas, vdw_radius, SasaSphere};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec3;
use crate::structio::{canonical_ppi_id, AminoAcid, IdError, PpiId, Residue, Structure};

#[derive(Debug, Error)]
pub enum InterfaceError {
    #[error("chain {0:?} not found in structure")]
    ChainNotFound(String),
    #[error(transparent)]
    Id(#[from] IdError),
    #[error("invalid interface config: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfaceConfig {
    /// Heavy-atom distance (angstroms) at or under which two residues are in
    /// contact.
    pub contact_cutoff: f64,
    /// Minimum contact residues required on each side.
    pub min_interface_residues: usize,
    /// Buried-surface-area floor in square angstroms; `None` disables the
    /// filter and skips the (comparatively expensive) SASA computation.
    pub bsa_threshold: Option<f64>,
    pub sasa_probe_radius: f64,
    pub sasa_sphere_points: usize,
}

impl Default for InterfaceConfig {
    fn default() -> Self {
        InterfaceConfig {
            contact_cutoff: 6.0,
            min_interface_residues: 2,
            bsa_threshold: Some(500.0),
            sasa_probe_radius: 1.4,
            sasa_sphere_points: 92,
        }
    }
}

impl InterfaceConfig {
    pub fn validate(&self) -> Result<(), InterfaceError> {
        if !(self.contact_cutoff > 0.0) {
            return Err(InterfaceError::BadConfig("contact_cutoff must be positive".into()));
        }
        if self.min_interface_residues == 0 {
            return Err(InterfaceError::BadConfig(
                "min_interface_residues must be at least 1".into(),
            ));
        }
        if !(self.sasa_probe_radius >= 0.0) {
            return Err(InterfaceError::BadConfig("sasa_probe_radius must be >= 0".into()));
        }
        if self.sasa_sphere_points < 12 {
            return Err(InterfaceError::BadConfig("sasa_sphere_points must be >= 12".into()));
        }
        if let Some(t) = self.bsa_threshold {
            if !(t >= 0.0) {
                return Err(InterfaceError::BadConfig("bsa_threshold must be >= 0".into()));
            }
        }
        Ok(())
    }
}

/// One heavy atom carried by an interface record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceAtom {
    pub name: String,
    pub element: String,
    pub coords: Vec3,
}

/// One interface residue; only heavy atoms are kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceResidue {
    pub chain_id: String,
    pub seq_num: i32,
    pub insertion_code: Option<char>,
    pub aa_type: AminoAcid,
    pub atoms: Vec<InterfaceAtom>,
}

impl InterfaceResidue {
    pub fn from_residue(r: &Residue) -> Self {
        InterfaceResidue {
            chain_id: r.chain_id.clone(),
            seq_num: r.seq_num,
            insertion_code: r.insertion_code,
            aa_type: r.aa_type,
            atoms: r
                .heavy_atoms()
                .map(|a| InterfaceAtom {
                    name: a.name.clone(),
                    element: a.element.clone(),
                    coords: a.coords,
                })
                .collect(),
        }
    }

    pub fn heavy_centroid(&self) -> Vec3 {
        let mut sum = Vec3::ZERO;
        for a in &self.atoms {
            sum = sum.add(a.coords);
        }
        sum.scale(1.0 / self.atoms.len().max(1) as f64)
    }

    pub fn alpha_carbon(&self) -> Option<Vec3> {
        self.atoms.iter().find(|a| a.name == "CA").map(|a| a.coords)
    }

    /// Sort key giving interfaces a canonical residue order.
    pub fn order_key(&self) -> (String, i32, u32) {
        (self.chain_id.clone(), self.seq_num, self.insertion_code.map_or(0, |c| c as u32))
    }
}

/// The extracted interface of one chain pair. Sides a/b follow the
/// lexicographic chain order of the [`PpiId`], independent of the order the
/// chains were passed in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interface {
    pub ppi_id: PpiId,
    pub residues_a: Vec<InterfaceResidue>,
    pub residues_b: Vec<InterfaceResidue>,
    /// Contact pairs as (index into residues_a, index into residues_b).
    pub contacts: Vec<(usize, usize)>,
    /// Buried surface area in square angstroms, when it was computed.
    pub bsa: Option<f64>,
}

impl Interface {
    pub fn n_residues(&self) -> usize {
        self.residues_a.len() + self.residues_b.len()
    }
}

/// Extracts the interface between two chains, or `None` when either side
/// has fewer than `min_interface_residues` contact residues. BSA is
/// computed only when `bsa_threshold` is set.
pub fn extract_interface(
    structure: &Structure,
    chain_x: &str,
    chain_y: &str,
    config: &InterfaceConfig,
) -> Result<Option<Interface>, InterfaceError> {
    config.validate()?;
    let ppi_id = canonical_ppi_id(&structure.pdb_code, chain_x, chain_y)?;
    let chain_a = structure
        .chain(&ppi_id.chain_a)
        .ok_or_else(|| InterfaceError::ChainNotFound(ppi_id.chain_a.clone()))?;
    let chain_b = structure
        .chain(&ppi_id.chain_b)
        .ok_or_else(|| InterfaceError::ChainNotFound(ppi_id.chain_b.clone()))?;

    let raw_contacts = find_contacts(chain_a, chain_b, config.contact_cutoff);

    let mut member_a: Vec<usize> = raw_contacts.iter().map(|c| c.0).collect();
    member_a.sort_unstable();
    member_a.dedup();
    let mut member_b: Vec<usize> = raw_contacts.iter().map(|c| c.1).collect();
    member_b.sort_unstable();
    member_b.dedup();

    if member_a.len() < config.min_interface_residues
        || member_b.len() < config.min_interface_residues
    {
        return Ok(None);
    }

    let index_a: std::collections::HashMap<usize, usize> =
        member_a.iter().enumerate().map(|(new, old)| (*old, new)).collect();
    let index_b: std::collections::HashMap<usize, usize> =
        member_b.iter().enumerate().map(|(new, old)| (*old, new)).collect();

    let residues_a: Vec<InterfaceResidue> =
        member_a.iter().map(|i| InterfaceResidue::from_residue(&chain_a.residues[*i])).collect();
    let residues_b: Vec<InterfaceResidue> =
        member_b.iter().map(|i| InterfaceResidue::from_residue(&chain_b.residues[*i])).collect();

    let mut contacts: Vec<(usize, usize)> =
        raw_contacts.iter().map(|(i, j)| (index_a[i], index_b[j])).collect();
    contacts.sort_unstable();

    let bsa = match config.bsa_threshold {
        Some(_) => Some(buried_surface_area(
            chain_a,
            chain_b,
            config.sasa_probe_radius,
            config.sasa_sphere_points,
        )),
        None => None,
    };

    Ok(Some(Interface { ppi_id, residues_a, residues_b, contacts, bsa }))
}

/// Why an interface failed the quality gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FilterFailure {
    TooFewResidues { side: char, found: usize, required: usize },
    BsaBelowThreshold { bsa: f64, threshold: f64 },
    BsaUnavailable { threshold: f64 },
}

/// Checks size and (when configured) BSA thresholds. The BSA test is
/// inclusive: exactly meeting the threshold passes.
pub fn passes_quality_filters(
    interface: &Interface,
    config: &InterfaceConfig,
) -> (bool, Vec<FilterFailure>) {
    let mut failures = Vec::new();
    if interface.residues_a.len() < config.min_interface_residues {
        failures.push(FilterFailure::TooFewResidues {
            side: 'a',
            found: interface.residues_a.len(),
            required: config.min_interface_residues,
        });
    }
    if interface.residues_b.len() < config.min_interface_residues {
        failures.push(FilterFailure::TooFewResidues {
            side: 'b',
            found: interface.residues_b.len(),
            required: config.min_interface_residues,
        });
    }
    if let Some(threshold) = config.bsa_threshold {
        match interface.bsa {
            Some(bsa) if bsa >= threshold => {}
            Some(bsa) => failures.push(FilterFailure::BsaBelowThreshold { bsa, threshold }),
            None => failures.push(FilterFailure::BsaUnavailable { threshold }),
        }
    }
    (failures.is_empty(), failures)
}

/// Extracts every qualifying interface of a structure, in canonical pair
/// order. Pairs failing size or BSA filters are omitted.
pub fn extract_all_interfaces(
    structure: &Structure,
    config: &InterfaceConfig,
) -> Result<Vec<Interface>, InterfaceError> {
    let mut out = Vec::new();
    for pair in crate::structio::chain_pairs(structure) {
        if let Some(iface) = extract_interface(structure, &pair.chain_a, &pair.chain_b, config)? {
            let (ok, _) = passes_quality_filters(&iface, config);
            if ok {
                out.push(iface);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::structio::{Atom, Chain, Residue};

    pub fn atom_at(name: &str, x: f64, y: f64, z: f64) -> Atom {
        Atom {
            name: name.to_string(),
            element: "C".to_string(),
            coords: Vec3::new(x, y, z),
            is_heavy: true,
        }
    }

    pub fn single_atom_residue(chain: &str, num: i32, x: f64, y: f64, z: f64) -> Residue {
        Residue {
            chain_id: chain.to_string(),
            seq_num: num,
            insertion_code: None,
            aa_type: AminoAcid::Ala,
            raw_name: "ALA".to_string(),
            atoms: vec![atom_at("CA", x, y, z)],
        }
    }

    pub fn chain_of(id: &str, residues: Vec<Residue>) -> Chain {
        Chain { id: id.to_string(), residues }
    }

    /// Two strands facing each other: residues 0..contact_pairs sit 4.0 A
    /// apart across the chains, the rest diverge far beyond any cutoff.
    pub fn two_strand_dimer(contact_pairs: usize, tail: usize) -> Structure {
        let mut res_a = Vec::new();
        let mut res_b = Vec::new();
        for i in 0..contact_pairs + tail {
            let x = i as f64 * 3.8;
            let lift = if i < contact_pairs { 0.0 } else { 40.0 + i as f64 };
            res_a.push(single_atom_residue("A", i as i32 + 1, x, 0.0, -lift));
            res_b.push(single_atom_residue("B", i as i32 + 1, x, 4.0, lift));
        }
        Structure::new(
            "1dim".to_string(),
            vec![chain_of("A", res_a), chain_of("B", res_b)],
            None,
            None,
        )
        .unwrap()
    }
}
