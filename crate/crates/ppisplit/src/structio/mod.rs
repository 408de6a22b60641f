//! Normalized in-memory model for protein complex structures plus PDB/mmCIF
//! readers and a PDB-subset writer.
//!
//! The model keeps polypeptide residues only: waters, nucleic acids and
//! small-molecule heterogroups are dropped at parse time. Hydrogens are
//! retained but flagged, so downstream geometry can stay heavy-atom only.

mod mmcif;
mod pdb;

pub use mmcif::parse_mmcif;
pub use pdb::{parse_pdb, write_pdb};

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use flate2::read::GzDecoder;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec3;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("unsupported format for {0}")]
    UnsupportedFormat(String),
    #[error("structure has no atoms after filtering")]
    EmptyStructure,
    #[error("duplicate chain id {0}")]
    DuplicateChain(String),
    #[error("chain id {0:?} cannot be written in PDB format")]
    UnwritableChainId(String),
    #[error("deposition date {0} outside the 1950-2049 window of the two-digit PDB year")]
    UnwritableDate(NaiveDate),
}

#[derive(Debug, Error)]
pub enum IdError {
    #[error("the two chains of a pair must differ, got {0:?} twice")]
    IdenticalChains(String),
    #[error("invalid ppi id {0:?}")]
    InvalidPpiId(String),
    #[error("chain id {0:?} may not be empty or contain '_'")]
    InvalidChainId(String),
    #[error("pdb code {0:?} does not match [0-9][a-z0-9]{{3}}")]
    InvalidPdbCode(String),
}

/// The twenty standard amino acids plus a catch-all for everything else.
/// Discriminants are the alphabetical index of the three-letter code, with
/// `Unknown` last; that index doubles as the feature index downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AminoAcid {
    Ala = 0,
    Arg = 1,
    Asn = 2,
    Asp = 3,
    Cys = 4,
    Gln = 5,
    Glu = 6,
    Gly = 7,
    His = 8,
    Ile = 9,
    Leu = 10,
    Lys = 11,
    Met = 12,
    Phe = 13,
    Pro = 14,
    Ser = 15,
    Thr = 16,
    Trp = 17,
    Tyr = 18,
    Val = 19,
    Unknown = 20,
}

pub const AA_COUNT: usize = 21;

impl AminoAcid {
    pub const STANDARD: [AminoAcid; 20] = [
        AminoAcid::Ala,
        AminoAcid::Arg,
        AminoAcid::Asn,
        AminoAcid::Asp,
        AminoAcid::Cys,
        AminoAcid::Gln,
        AminoAcid::Glu,
        AminoAcid::Gly,
        AminoAcid::His,
        AminoAcid::Ile,
        AminoAcid::Leu,
        AminoAcid::Lys,
        AminoAcid::Met,
        AminoAcid::Phe,
        AminoAcid::Pro,
        AminoAcid::Ser,
        AminoAcid::Thr,
        AminoAcid::Trp,
        AminoAcid::Tyr,
        AminoAcid::Val,
    ];

    pub fn from_three_letter(code: &str) -> AminoAcid {
        match code.trim().to_ascii_uppercase().as_str() {
            "ALA" => AminoAcid::Ala,
            "ARG" => AminoAcid::Arg,
            "ASN" => AminoAcid::Asn,
            "ASP" => AminoAcid::Asp,
            "CYS" => AminoAcid::Cys,
            "GLN" => AminoAcid::Gln,
            "GLU" => AminoAcid::Glu,
            "GLY" => AminoAcid::Gly,
            "HIS" => AminoAcid::His,
            "ILE" => AminoAcid::Ile,
            "LEU" => AminoAcid::Leu,
            "LYS" => AminoAcid::Lys,
            "MET" => AminoAcid::Met,
            "PHE" => AminoAcid::Phe,
            "PRO" => AminoAcid::Pro,
            "SER" => AminoAcid::Ser,
            "THR" => AminoAcid::Thr,
            "TRP" => AminoAcid::Trp,
            "TYR" => AminoAcid::Tyr,
            "VAL" => AminoAcid::Val,
            _ => AminoAcid::Unknown,
        }
    }

    pub fn from_one_letter(c: char) -> AminoAcid {
        match c.to_ascii_uppercase() {
            'A' => AminoAcid::Ala,
            'R' => AminoAcid::Arg,
            'N' => AminoAcid::Asn,
            'D' => AminoAcid::Asp,
            'C' => AminoAcid::Cys,
            'Q' => AminoAcid::Gln,
            'E' => AminoAcid::Glu,
            'G' => AminoAcid::Gly,
            'H' => AminoAcid::His,
            'I' => AminoAcid::Ile,
            'L' => AminoAcid::Leu,
            'K' => AminoAcid::Lys,
            'M' => AminoAcid::Met,
            'F' => AminoAcid::Phe,
            'P' => AminoAcid::Pro,
            'S' => AminoAcid::Ser,
            'T' => AminoAcid::Thr,
            'W' => AminoAcid::Trp,
            'Y' => AminoAcid::Tyr,
            'V' => AminoAcid::Val,
            _ => AminoAcid::Unknown,
        }
    }

    pub fn one_letter(self) -> char {
        match self {
            AminoAcid::Ala => 'A',
            AminoAcid::Arg => 'R',
            AminoAcid::Asn => 'N',
            AminoAcid::Asp => 'D',
            AminoAcid::Cys => 'C',
            AminoAcid::Gln => 'Q',
            AminoAcid::Glu => 'E',
            AminoAcid::Gly => 'G',
            AminoAcid::His => 'H',
            AminoAcid::Ile => 'I',
            AminoAcid::Leu => 'L',
            AminoAcid::Lys => 'K',
            AminoAcid::Met => 'M',
            AminoAcid::Phe => 'F',
            AminoAcid::Pro => 'P',
            AminoAcid::Ser => 'S',
            AminoAcid::Thr => 'T',
            AminoAcid::Trp => 'W',
            AminoAcid::Tyr => 'Y',
            AminoAcid::Val => 'V',
            AminoAcid::Unknown => 'X',
        }
    }

    pub fn three_letter(self) -> &'static str {
        match self {
            AminoAcid::Ala => "ALA",
            AminoAcid::Arg => "ARG",
            AminoAcid::Asn => "ASN",
            AminoAcid::Asp => "ASP",
            AminoAcid::Cys => "CYS",
            AminoAcid::Gln => "GLN",
            AminoAcid::Glu => "GLU",
            AminoAcid::Gly => "GLY",
            AminoAcid::His => "HIS",
            AminoAcid::Ile => "ILE",
            AminoAcid::Leu => "LEU",
            AminoAcid::Lys => "LYS",
            AminoAcid::Met => "MET",
            AminoAcid::Phe => "PHE",
            AminoAcid::Pro => "PRO",
            AminoAcid::Ser => "SER",
            AminoAcid::Thr => "THR",
            AminoAcid::Trp => "TRP",
            AminoAcid::Tyr => "TYR",
            AminoAcid::Val => "VAL",
            AminoAcid::Unknown => "UNK",
        }
    }

    /// Feature index: 0..=19 alphabetical by three-letter code, 20 for Unknown.
    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub name: String,
    pub element: String,
    pub coords: Vec3,
    /// False for hydrogen and deuterium; geometry downstream ignores those.
    pub is_heavy: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residue {
    pub chain_id: String,
    pub seq_num: i32,
    pub insertion_code: Option<char>,
    pub aa_type: AminoAcid,
    /// Residue name as it appeared in the source (e.g. "MSE" for a residue
    /// typed as Unknown). Keeps serialization lossless.
    pub raw_name: String,
    pub atoms: Vec<Atom>,
}

impl Residue {
    pub fn heavy_atoms(&self) -> impl Iterator<Item = &Atom> {
        self.atoms.iter().filter(|a| a.is_heavy)
    }

    /// Mean position of the heavy atoms; falls back to all atoms for a
    /// (pathological) hydrogen-only residue.
    pub fn heavy_centroid(&self) -> Vec3 {
        let mut sum = Vec3::ZERO;
        let mut n = 0usize;
        for a in self.heavy_atoms() {
            sum = sum.add(a.coords);
            n += 1;
        }
        if n == 0 {
            for a in &self.atoms {
                sum = sum.add(a.coords);
                n += 1;
            }
        }
        sum.scale(1.0 / n as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub id: String,
    pub residues: Vec<Residue>,
}

impl Chain {
    /// One-letter sequence in residue order; Unknown renders as 'X'.
    pub fn sequence(&self) -> String {
        self.residues.iter().map(|r| r.aa_type.one_letter()).collect()
    }

    pub fn heavy_atom_count(&self) -> usize {
        self.residues.iter().map(|r| r.heavy_atoms().count()).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Structure {
    /// Lowercase, matching `[0-9][a-z0-9]{3}`.
    pub pdb_code: String,
    pub chains: Vec<Chain>,
    pub deposition_date: Option<NaiveDate>,
    pub resolution: Option<f64>,
}

impl Structure {
    pub fn new(
        pdb_code: String,
        chains: Vec<Chain>,
        deposition_date: Option<NaiveDate>,
        resolution: Option<f64>,
    ) -> Result<Structure, IdError> {
        validate_pdb_code(&pdb_code)?;
        let mut seen = BTreeSet::new();
        for c in &chains {
            validate_chain_id(&c.id)?;
            if !seen.insert(c.id.clone()) {
                return Err(IdError::InvalidChainId(c.id.clone()));
            }
        }
        Ok(Structure { pdb_code, chains, deposition_date, resolution })
    }

    pub fn chain(&self, id: &str) -> Option<&Chain> {
        self.chains.iter().find(|c| c.id == id)
    }

    pub fn deposition_date(&self) -> Option<NaiveDate> {
        self.deposition_date
    }

    pub fn heavy_atom_count(&self) -> usize {
        self.chains.iter().map(Chain::heavy_atom_count).sum()
    }
}

/// Identifier of one chain pair within one entry. Chains are held in
/// lexicographic order regardless of construction order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PpiId {
    pub pdb_code: String,
    pub chain_a: String,
    pub chain_b: String,
}

impl fmt::Display for PpiId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}_{}", self.pdb_code, self.chain_a, self.chain_b)
    }
}

impl FromStr for PpiId {
    type Err = IdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split('_').collect();
        if parts.len() != 3 {
            return Err(IdError::InvalidPpiId(s.to_string()));
        }
        canonical_ppi_id(parts[0], parts[1], parts[2])
    }
}

impl PpiId {
    /// Key of one side, used to join against sequence records: `<pdb>_<chain>`.
    pub fn protein_key(&self, chain: &str) -> String {
        format!("{}_{}", self.pdb_code, chain)
    }
}

pub fn validate_pdb_code(code: &str) -> Result<(), IdError> {
    let ok = code.len() == 4
        && code.as_bytes()[0].is_ascii_digit()
        && code.bytes().skip(1).all(|b| b.is_ascii_lowercase() || b.is_ascii_digit());
    if ok {
        Ok(())
    } else {
        Err(IdError::InvalidPdbCode(code.to_string()))
    }
}

fn validate_chain_id(id: &str) -> Result<(), IdError> {
    if id.is_empty() || id.contains('_') || id.contains(char::is_whitespace) {
        return Err(IdError::InvalidChainId(id.to_string()));
    }
    Ok(())
}

/// Canonical pair identifier: the pdb code is lowercased and the two chain
/// ids are sorted, so both construction orders name the same pair.
pub fn canonical_ppi_id(pdb_code: &str, chain_x: &str, chain_y: &str) -> Result<PpiId, IdError> {
    let code = pdb_code.to_ascii_lowercase();
    validate_pdb_code(&code)?;
    validate_chain_id(chain_x)?;
    validate_chain_id(chain_y)?;
    if chain_x == chain_y {
        return Err(IdError::IdenticalChains(chain_x.to_string()));
    }
    let (a, b) = if chain_x < chain_y { (chain_x, chain_y) } else { (chain_y, chain_x) };
    Ok(PpiId { pdb_code: code, chain_a: a.to_string(), chain_b: b.to_string() })
}

/// All unordered pairs of distinct chains, each once, canonically ordered.
pub fn chain_pairs(structure: &Structure) -> Vec<PpiId> {
    let mut ids: Vec<&str> = structure.chains.iter().map(|c| c.id.as_str()).collect();
    ids.sort_unstable();
    let mut pairs = Vec::new();
    for i in 0..ids.len() {
        for j in i + 1..ids.len() {
            pairs.push(PpiId {
                pdb_code: structure.pdb_code.clone(),
                chain_a: ids[i].to_string(),
                chain_b: ids[j].to_string(),
            });
        }
    }
    pairs
}

/// Reads a structure file, picking the parser from the extension
/// (`.pdb`/`.ent` or `.cif`/`.mmcif`, optionally `.gz`-compressed).
///
/// The pdb code is taken from the file's own metadata when present,
/// otherwise from the file stem; if neither yields a valid code the
/// placeholder `0000` is used.
pub fn parse_structure(path: &Path) -> Result<Structure, ParseError> {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| ParseError::UnsupportedFormat(path.display().to_string()))?
        .to_ascii_lowercase();

    let (base, gz) = match name.strip_suffix(".gz") {
        Some(b) => (b.to_string(), true),
        None => (name.clone(), false),
    };

    let stem = base.rsplit_once('.').map(|(s, _)| s).unwrap_or(&base);
    let hint = stem.to_ascii_lowercase();
    let code_hint = if validate_pdb_code(&hint).is_ok() { Some(hint.as_str()) } else { None };

    let file = File::open(path)?;
    let reader: Box<dyn Read> =
        if gz { Box::new(GzDecoder::new(file)) } else { Box::new(file) };
    let reader = BufReader::new(reader);

    if base.ends_with(".pdb") || base.ends_with(".ent") {
        parse_pdb(reader, code_hint)
    } else if base.ends_with(".cif") || base.ends_with(".mmcif") {
        parse_mmcif(reader, code_hint)
    } else {
        Err(ParseError::UnsupportedFormat(path.display().to_string()))
    }
}

pub(crate) fn resolve_pdb_code(from_file: Option<String>, hint: Option<&str>) -> String {
    if let Some(c) = from_file {
        let c = c.to_ascii_lowercase();
        if validate_pdb_code(&c).is_ok() {
            return c;
        }
    }
    if let Some(h) = hint {
        let h = h.to_ascii_lowercase();
        if validate_pdb_code(&h).is_ok() {
            return h;
        }
    }
    "0000".to_string()
}

const WATER_NAMES: [&str; 3] = ["HOH", "DOD", "WAT"];

const NUCLEIC_NAMES: [&str; 12] =
    ["A", "C", "G", "U", "I", "DA", "DC", "DG", "DT", "DI", "DU", "N"];

/// Modified amino acids kept when they appear as HETATM records. They type
/// as Unknown but their geometry stays in the chain.
const POLYPEPTIDE_HETERO: [&str; 14] = [
    "MSE", "SEC", "PYL", "HYP", "MLY", "PTR", "SEP", "TPO", "CSO", "KCX", "LLP", "CME", "CSD",
    "FME",
];

pub(crate) fn is_water(resname: &str) -> bool {
    WATER_NAMES.contains(&resname)
}

pub(crate) fn is_nucleic(resname: &str) -> bool {
    NUCLEIC_NAMES.contains(&resname)
}

/// Retention rule for one record: ATOM keeps any non-water, non-nucleic
/// residue; HETATM keeps only residue names known to sit in polypeptide
/// chains (ligands, ions and such are dropped).
pub(crate) fn keep_residue(hetatm: bool, resname: &str) -> bool {
    if is_water(resname) || is_nucleic(resname) {
        return false;
    }
    if hetatm {
        return AminoAcid::from_three_letter(resname) != AminoAcid::Unknown
            || POLYPEPTIDE_HETERO.contains(&resname);
    }
    true
}

pub(crate) fn element_from_name(name: &str) -> String {
    let t = name.trim();
    if t.starts_with(|c: char| c.is_ascii_digit()) {
        return "H".to_string();
    }
    t.chars()
        .find(|c| c.is_ascii_alphabetic())
        .map(|c| c.to_ascii_uppercase().to_string())
        .unwrap_or_else(|| "X".to_string())
}

struct ResidueBuilder {
    residue: Residue,
    atom_names: std::collections::HashSet<String>,
}

struct ChainBuilder {
    id: String,
    residues: Vec<ResidueBuilder>,
}

/// Accumulates atom records from either parser, applying the shared
/// retention rules: polypeptide residues only, first alternate per atom,
/// hydrogens kept but flagged.
pub(crate) struct StructureBuilder {
    chains: Vec<ChainBuilder>,
}

impl StructureBuilder {
    pub(crate) fn new() -> Self {
        StructureBuilder { chains: Vec::new() }
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn add_atom(
        &mut self,
        hetatm: bool,
        chain_id: &str,
        seq_num: i32,
        icode: Option<char>,
        resname: &str,
        atom_name: &str,
        element: &str,
        coords: Vec3,
    ) {
        if !keep_residue(hetatm, resname) {
            return;
        }
        let element = if element.is_empty() {
            element_from_name(atom_name)
        } else {
            element.to_ascii_uppercase()
        };
        let is_heavy = element != "H" && element != "D";

        let chain = match self.chains.iter_mut().find(|c| c.id == chain_id) {
            Some(c) => c,
            None => {
                self.chains.push(ChainBuilder { id: chain_id.to_string(), residues: Vec::new() });
                self.chains.last_mut().unwrap()
            }
        };
        let key = (seq_num, icode);
        let rb = match chain
            .residues
            .iter_mut()
            .find(|r| (r.residue.seq_num, r.residue.insertion_code) == key)
        {
            Some(r) => r,
            None => {
                chain.residues.push(ResidueBuilder {
                    residue: Residue {
                        chain_id: chain_id.to_string(),
                        seq_num,
                        insertion_code: icode,
                        aa_type: AminoAcid::from_three_letter(resname),
                        raw_name: resname.to_string(),
                        atoms: Vec::new(),
                    },
                    atom_names: std::collections::HashSet::new(),
                });
                chain.residues.last_mut().unwrap()
            }
        };
        // Residue-level alternates (two residue names at one position) and
        // atom-level alternates both resolve to first-in-file.
        if rb.residue.raw_name != resname {
            return;
        }
        if !rb.atom_names.insert(atom_name.to_string()) {
            return;
        }
        rb.residue.atoms.push(Atom {
            name: atom_name.to_string(),
            element,
            coords,
            is_heavy,
        });
    }

    pub(crate) fn finish(
        self,
        code_from_file: Option<String>,
        code_hint: Option<&str>,
        date: Option<NaiveDate>,
        resolution: Option<f64>,
    ) -> Result<Structure, ParseError> {
        let chains: Vec<Chain> = self
            .chains
            .into_iter()
            .map(|cb| Chain {
                id: cb.id,
                residues: cb.residues.into_iter().map(|rb| rb.residue).collect(),
            })
            .collect();
        if chains.iter().all(|c| c.residues.is_empty()) {
            return Err(ParseError::EmptyStructure);
        }
        let code = resolve_pdb_code(code_from_file, code_hint);
        Structure::new(code, chains, date, resolution)
            .map_err(|e| ParseError::Malformed { line: 0, reason: e.to_string() })
    }
}
