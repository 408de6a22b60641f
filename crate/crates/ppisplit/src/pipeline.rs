//! Configuration and on-disk plumbing tying the stages together:
//! structure files -> interfaces -> descriptors -> splits -> reports.
//!
//! Every artifact embeds the tool version, the fingerprint of the
//! configuration that produced it, and a fingerprint of its input, so a
//! chain of commands refuses to mix incompatible pieces. All writers are
//! deterministic: rerunning a stage on the same inputs reproduces the
//! output byte for byte.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audit::{
    run_experiment, AuditError, ExperimentConfig, ExperimentInputs, ExperimentResult,
};
use crate::descriptor::{
    embed_corpus, DescriptorConfig, DescriptorError, DescriptorStore,
};
use crate::fingerprint;
use crate::interface::{
    extract_all_interfaces, Interface, InterfaceConfig, InterfaceError,
};
use crate::similarity::{
    build_duplicate_graph, calibrate_threshold_on_descriptors, cluster_sequences,
    external_cluster_adapter, Calibration, ExternalClusterError, SequenceClusters,
    SimilarityConfig, SimilarityError,
};
use crate::splits::{
    group_by_sequence_components, split_by_interface_components, split_by_pdb_code,
    split_by_ppi_code, split_by_time, split_groups, split_input_fingerprint, Split, SplitError,
    SplitSpec, SplitStrategy,
};
use crate::structio::{parse_structure, ParseError, Structure};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {reason}")]
    BadArtifact { path: PathBuf, reason: String },
    #[error("{what}: artifact carries {found}, current configuration gives {expected}")]
    FingerprintMismatch {
        what: String,
        found: String,
        expected: String,
    },
    #[error("no interfaces were extracted")]
    NothingExtracted,
    #[error(transparent)]
    Interface(#[from] InterfaceError),
    #[error(transparent)]
    Descriptor(#[from] DescriptorError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Audit(#[from] AuditError),
    #[error(transparent)]
    ExternalCluster(#[from] ExternalClusterError),
}

// ---------------------------------------------------------------------
// Configuration file.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InterfaceSection {
    pub contact_cutoff: f64,
    pub min_interface_residues: usize,
    /// When false, BSA is neither computed nor filtered on.
    pub bsa_filter_enabled: bool,
    pub bsa_threshold: f64,
    pub sasa_probe_radius: f64,
    pub sasa_sphere_points: usize,
}

impl Default for InterfaceSection {
    fn default() -> Self {
        let c = InterfaceConfig::default();
        InterfaceSection {
            contact_cutoff: c.contact_cutoff,
            min_interface_residues: c.min_interface_residues,
            bsa_filter_enabled: c.bsa_threshold.is_some(),
            bsa_threshold: c.bsa_threshold.unwrap_or(500.0),
            sasa_probe_radius: c.sasa_probe_radius,
            sasa_sphere_points: c.sasa_sphere_points,
        }
    }
}

impl InterfaceSection {
    pub fn to_config(&self) -> InterfaceConfig {
        InterfaceConfig {
            contact_cutoff: self.contact_cutoff,
            min_interface_residues: self.min_interface_residues,
            bsa_threshold: self.bsa_filter_enabled.then_some(self.bsa_threshold),
            sasa_probe_radius: self.sasa_probe_radius,
            sasa_sphere_points: self.sasa_sphere_points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusterSection {
    /// Identity floor for sequence clustering.
    pub min_seq_id: f64,
}

impl Default for ClusterSection {
    fn default() -> Self {
        ClusterSection { min_seq_id: 0.3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    pub n_samples: usize,
    pub codes_per_sample: usize,
    pub seed: u64,
    pub strategies: Vec<SplitSpec>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        let d = ExperimentConfig::default();
        ExperimentSection {
            n_samples: d.n_samples,
            codes_per_sample: d.codes_per_sample,
            seed: d.seed,
            strategies: d.strategies,
        }
    }
}

impl ExperimentSection {
    pub fn to_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            n_samples: self.n_samples,
            codes_per_sample: self.codes_per_sample,
            strategies: self.strategies.clone(),
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IoSection {
    /// Worker threads; 0 means one per available core.
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub interface: InterfaceSection,
    pub descriptor: DescriptorConfig,
    pub similarity: SimilarityConfig,
    pub cluster: ClusterSection,
    pub split: SplitSpec,
    pub experiment: ExperimentSection,
    pub io: IoSection,
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<PipelineConfig, PipelineError> {
        let config: PipelineConfig =
            toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<PipelineConfig, PipelineError> {
        let text = fs::read_to_string(path)?;
        PipelineConfig::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.interface
            .to_config()
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        self.descriptor
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        self.similarity
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        self.split
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        self.experiment
            .to_config()
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        if !(self.cluster.min_seq_id > 0.0 && self.cluster.min_seq_id <= 1.0) {
            return Err(PipelineError::Config(format!(
                "cluster.min_seq_id must lie in (0, 1], got {}",
                self.cluster.min_seq_id
            )));
        }
        Ok(())
    }

    /// Identifies the interface extraction scheme.
    pub fn interface_fingerprint(&self) -> String {
        fingerprint::of_value("interface-config.v1", &self.interface.to_config())
    }

    /// Identifies the embedding scheme (includes the feature layout).
    pub fn descriptor_fingerprint(&self) -> String {
        self.descriptor.fingerprint()
    }

    /// Identifies everything that shapes analysis results: extraction,
    /// embedding, duplicate threshold, and clustering floor. Runtime knobs
    /// (seeds, worker counts, split recipes) are deliberately excluded.
    pub fn analysis_fingerprint(&self) -> String {
        fingerprint::of_value(
            "analysis-config.v1",
            &(
                self.interface_fingerprint(),
                self.descriptor_fingerprint(),
                &self.similarity,
                &self.cluster,
            ),
        )
    }
}

/// The default configuration as a commented TOML document; parsing it
/// yields exactly `PipelineConfig::default()`.
pub fn default_config_toml() -> String {
    let mut out = String::from(
        "# ppisplit pipeline configuration.\n\
         # Every key is optional; omitted keys take the defaults shown here.\n\
         \n\
         [interface]\n\
         # Heavy-atom distance (angstroms) at or under which residues touch.\n\
         contact_cutoff = 6.0\n\
         # Minimum contact residues required on each side of an interface.\n\
         min_interface_residues = 2\n\
         # Disable to skip the buried-surface-area computation and filter.\n\
         bsa_filter_enabled = true\n\
         # Minimum buried surface area in square angstroms.\n\
         bsa_threshold = 500.0\n\
         sasa_probe_radius = 1.4\n\
         sasa_sphere_points = 92\n\
         \n\
         [descriptor]\n\
         # Feature-mixing rounds over the interface residue graph.\n\
         rounds = 1\n\
         # Residues farther apart than this do not exchange features.\n\
         neighbor_cutoff = 10.0\n\
         # Length scale of the distance weight exp(-d / weight_scale).\n\
         weight_scale = 4.0\n\
         # \"heavy_centroid\" or \"alpha_carbon\".\n\
         residue_anchor = \"heavy_centroid\"\n\
         \n\
         [similarity]\n\
         # Descriptor distance under which two interfaces are duplicates.\n\
         duplicate_threshold = 0.04\n\
         \n\
         [cluster]\n\
         # Sequence identity floor for clustering chains into families.\n\
         min_seq_id = 0.3\n\
         \n\
         [split]\n\
         # ppi_code | pdb_code | deposition_time | sequence_component |\n\
         # interface_component\n\
         strategy = \"ppi_code\"\n\
         test_fraction = 0.1\n\
         seed = 0\n\
         # \"random\" or \"largest_first\".\n\
         packing = \"random\"\n\
         \n\
         [experiment]\n\
         n_samples = 5\n\
         codes_per_sample = 15000\n\
         seed = 0\n",
    );
    for strategy in SplitStrategy::ALL {
        out.push_str(&format!(
            "\n[[experiment.strategies]]\nstrategy = \"{}\"\ntest_fraction = 0.1\nseed = 0\npacking = \"random\"\n",
            strategy.name()
        ));
    }
    out.push_str("\n[io]\n# Worker threads; 0 means one per available core.\nworkers = 0\n");
    out
}

/// Fingerprint of raw file bytes, used to chain artifacts together.
pub fn file_fingerprint(bytes: &[u8]) -> String {
    fingerprint::hex16(bytes)
}

// ---------------------------------------------------------------------
// Interfaces artifact: one JSON header line, then one JSON record per
// interface, sorted by ppi id.

pub const INTERFACES_FORMAT: &str = "ppisplit.interfaces.v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfacesHeader {
    pub format: String,
    pub tool_version: String,
    pub interface_fingerprint: String,
    pub input_fingerprint: String,
    pub n_records: usize,
}

pub fn write_interfaces<W: Write>(
    w: &mut W,
    interfaces: &[Interface],
    interface_fingerprint: &str,
    input_fingerprint: &str,
) -> Result<(), PipelineError> {
    let mut sorted: Vec<&Interface> = interfaces.iter().collect();
    sorted.sort_by_key(|i| i.ppi_id.to_string());
    let header = InterfacesHeader {
        format: INTERFACES_FORMAT.to_string(),
        tool_version: TOOL_VERSION.to_string(),
        interface_fingerprint: interface_fingerprint.to_string(),
        input_fingerprint: input_fingerprint.to_string(),
        n_records: sorted.len(),
    };
    writeln!(w, "{}", serde_json::to_string(&header)?)?;
    for iface in sorted {
        writeln!(w, "{}", serde_json::to_string(iface)?)?;
    }
    Ok(())
}

pub fn read_interfaces<R: BufRead>(
    r: R,
    path: &Path,
) -> Result<(InterfacesHeader, Vec<Interface>), PipelineError> {
    let bad = |reason: String| PipelineError::BadArtifact {
        path: path.to_path_buf(),
        reason,
    };
    let mut lines = r.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| bad("empty interfaces file".to_string()))??;
    let header: InterfacesHeader = serde_json::from_str(&header_line)
        .map_err(|e| bad(format!("unreadable header: {e}")))?;
    if header.format != INTERFACES_FORMAT {
        return Err(bad(format!(
            "format {:?}, this build reads {INTERFACES_FORMAT:?}",
            header.format
        )));
    }
    let mut interfaces = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let iface: Interface = serde_json::from_str(&line)
            .map_err(|e| bad(format!("record on line {}: {e}", idx + 2)))?;
        interfaces.push(iface);
    }
    if interfaces.len() != header.n_records {
        return Err(bad(format!(
            "header promises {} records, file holds {}",
            header.n_records,
            interfaces.len()
        )));
    }
    Ok((header, interfaces))
}

// ---------------------------------------------------------------------
// Sequence and date sidecars.

pub fn write_fasta<W: Write>(
    w: &mut W,
    sequences: &BTreeMap<String, String>,
) -> std::io::Result<()> {
    for (key, seq) in sequences {
        writeln!(w, ">{key}")?;
        writeln!(w, "{seq}")?;
    }
    Ok(())
}

pub fn read_fasta<R: BufRead>(r: R, path: &Path) -> Result<BTreeMap<String, String>, PipelineError> {
    let bad = |reason: String| PipelineError::BadArtifact {
        path: path.to_path_buf(),
        reason,
    };
    let mut out = BTreeMap::new();
    let mut current: Option<(String, String)> = None;
    for line in r.lines() {
        let line = line?;
        let line = line.trim_end();
        if let Some(name) = line.strip_prefix('>') {
            if let Some((key, seq)) = current.take() {
                if out.insert(key.clone(), seq).is_some() {
                    return Err(bad(format!("duplicate record {key:?}")));
                }
            }
            let key = name.split_whitespace().next().unwrap_or("").to_string();
            if key.is_empty() {
                return Err(bad("record with empty name".to_string()));
            }
            current = Some((key, String::new()));
        } else if !line.is_empty() {
            match current.as_mut() {
                Some((_, seq)) => seq.push_str(line.trim()),
                None => return Err(bad("sequence data before first header".to_string())),
            }
        }
    }
    if let Some((key, seq)) = current {
        if out.insert(key.clone(), seq).is_some() {
            return Err(bad(format!("duplicate record {key:?}")));
        }
    }
    for (key, seq) in &out {
        if seq.is_empty() {
            return Err(bad(format!("record {key:?} has no sequence")));
        }
    }
    Ok(out)
}

pub fn write_dates<W: Write>(
    w: &mut W,
    dates: &BTreeMap<String, NaiveDate>,
) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(dates)?;
    text.push('\n');
    w.write_all(text.as_bytes())?;
    Ok(())
}

pub fn read_dates<R: BufRead>(
    r: R,
    path: &Path,
) -> Result<BTreeMap<String, NaiveDate>, PipelineError> {
    serde_json::from_reader(r).map_err(|e| PipelineError::BadArtifact {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

// ---------------------------------------------------------------------
// Cluster artifact.

pub const CLUSTERS_FORMAT: &str = "ppisplit.clusters.v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClustersFile {
    pub format: String,
    pub tool_version: String,
    pub input_fingerprint: String,
    pub clusters: SequenceClusters,
}

pub fn write_clusters<W: Write>(
    w: &mut W,
    clusters: &SequenceClusters,
    input_fingerprint: &str,
) -> Result<(), PipelineError> {
    let file = ClustersFile {
        format: CLUSTERS_FORMAT.to_string(),
        tool_version: TOOL_VERSION.to_string(),
        input_fingerprint: input_fingerprint.to_string(),
        clusters: clusters.clone(),
    };
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    w.write_all(text.as_bytes())?;
    Ok(())
}

pub fn read_clusters<R: BufRead>(r: R, path: &Path) -> Result<ClustersFile, PipelineError> {
    let bad = |reason: String| PipelineError::BadArtifact {
        path: path.to_path_buf(),
        reason,
    };
    let file: ClustersFile = serde_json::from_reader(r).map_err(|e| bad(e.to_string()))?;
    if file.format != CLUSTERS_FORMAT {
        return Err(bad(format!(
            "format {:?}, this build reads {CLUSTERS_FORMAT:?}",
            file.format
        )));
    }
    Ok(file)
}

// ---------------------------------------------------------------------
// Calibration artifact.

pub const CALIBRATION_FORMAT: &str = "ppisplit.calibration.v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFile {
    pub format: String,
    pub tool_version: String,
    pub store_fingerprint: String,
    pub input_fingerprint: String,
    pub calibration: Calibration,
}

/// One labeled pair referencing descriptors by ppi id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledPairSpec {
    pub a: String,
    pub b: String,
    pub is_duplicate: bool,
}

// ---------------------------------------------------------------------
// Extraction stage.

const STRUCTURE_SUFFIXES: [&str; 8] = [
    ".pdb", ".ent", ".cif", ".mmcif", ".pdb.gz", ".ent.gz", ".cif.gz", ".mmcif.gz",
];

fn is_structure_file(path: &Path) -> bool {
    match path.file_name().and_then(|n| n.to_str()) {
        Some(name) => {
            let lower = name.to_ascii_lowercase();
            STRUCTURE_SUFFIXES.iter().any(|s| lower.ends_with(s))
        }
        None => false,
    }
}

/// Structure files directly inside `dir`, sorted by name.
pub fn list_structure_files(dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)?
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .map(|entry| entry.path())
        .filter(|p| p.is_file() && is_structure_file(p))
        .collect();
    out.sort();
    Ok(out)
}

/// Expands a mix of files and directories into a sorted file list.
pub fn expand_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, PipelineError> {
    let mut out = Vec::new();
    for input in inputs {
        if input.is_dir() {
            out.extend(list_structure_files(input)?);
        } else {
            out.push(input.clone());
        }
    }
    Ok(out)
}

#[derive(Debug)]
pub struct ExtractOutcome {
    pub interfaces: Vec<Interface>,
    /// Sequence per protein key (`<pdb>_<chain>`), covering every chain of
    /// every structure that yielded at least one interface.
    pub chains: BTreeMap<String, String>,
    /// Deposition date per PDB code, where the source recorded one.
    pub dates: BTreeMap<String, NaiveDate>,
    pub n_files: usize,
    pub failures: Vec<(PathBuf, String)>,
    /// Fingerprint over the sorted (file name, content fingerprint) list.
    pub input_fingerprint: String,
}

enum FileResult {
    Ok {
        structure: Structure,
        interfaces: Vec<Interface>,
    },
    Failed(String),
}

fn extract_one(path: &Path, config: &InterfaceConfig) -> (String, FileResult) {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) => return (String::new(), FileResult::Failed(e.to_string())),
    };
    let digest = file_fingerprint(&bytes);
    let structure = match parse_structure(path) {
        Ok(s) => s,
        Err(e) => return (digest, FileResult::Failed(parse_error_text(&e))),
    };
    match extract_all_interfaces(&structure, config) {
        Ok(interfaces) => (
            digest,
            FileResult::Ok {
                structure,
                interfaces,
            },
        ),
        Err(e) => (digest, FileResult::Failed(e.to_string())),
    }
}

fn parse_error_text(e: &ParseError) -> String {
    e.to_string()
}

/// Extracts every qualifying interface from the given structure files.
/// Files are processed in parallel; a file that cannot be read, parsed, or
/// processed becomes a recorded failure instead of aborting the batch.
pub fn extract_from_files(
    files: &[PathBuf],
    config: &InterfaceConfig,
) -> Result<ExtractOutcome, PipelineError> {
    config.validate()?;
    let results: Vec<(String, FileResult)> = files
        .par_iter()
        .map(|path| extract_one(path, config))
        .collect();

    let mut outcome = ExtractOutcome {
        interfaces: Vec::new(),
        chains: BTreeMap::new(),
        dates: BTreeMap::new(),
        n_files: files.len(),
        failures: Vec::new(),
        input_fingerprint: String::new(),
    };
    let mut digests: Vec<(String, String)> = Vec::new();
    let mut seen_codes: BTreeMap<String, PathBuf> = BTreeMap::new();

    for (path, (digest, result)) in files.iter().zip(results) {
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or("")
            .to_string();
        digests.push((name, digest));
        match result {
            FileResult::Failed(reason) => outcome.failures.push((path.clone(), reason)),
            FileResult::Ok {
                structure,
                interfaces,
            } => {
                if let Some(previous) = seen_codes.get(&structure.pdb_code) {
                    outcome.failures.push((
                        path.clone(),
                        format!(
                            "pdb code {} already contributed by {}",
                            structure.pdb_code,
                            previous.display()
                        ),
                    ));
                    continue;
                }
                seen_codes.insert(structure.pdb_code.clone(), path.clone());
                if interfaces.is_empty() {
                    continue;
                }
                for chain in &structure.chains {
                    outcome
                        .chains
                        .insert(format!("{}_{}", structure.pdb_code, chain.id), chain.sequence());
                }
                if let Some(date) = structure.deposition_date {
                    outcome.dates.insert(structure.pdb_code.clone(), date);
                }
                outcome.interfaces.extend(interfaces);
            }
        }
    }
    digests.sort();
    outcome.input_fingerprint = fingerprint::of_value("file-set.v1", &digests);
    outcome
        .interfaces
        .sort_by_key(|i| i.ppi_id.to_string());
    Ok(outcome)
}

/// Sidecar path: `<out>.chains.fasta`.
pub fn chains_sidecar(out: &Path) -> PathBuf {
    sidecar(out, "chains.fasta")
}

/// Sidecar path: `<out>.dates.json`.
pub fn dates_sidecar(out: &Path) -> PathBuf {
    sidecar(out, "dates.json")
}

fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".");
    name.push(suffix);
    out.with_file_name(name)
}

/// Writes the interfaces artifact plus its sequence and date sidecars.
pub fn write_extract_outputs(
    outcome: &ExtractOutcome,
    interface_fingerprint: &str,
    out: &Path,
) -> Result<(), PipelineError> {
    let mut buffer = Vec::new();
    write_interfaces(
        &mut buffer,
        &outcome.interfaces,
        interface_fingerprint,
        &outcome.input_fingerprint,
    )?;
    fs::write(out, buffer)?;

    let mut fasta = Vec::new();
    write_fasta(&mut fasta, &outcome.chains)?;
    fs::write(chains_sidecar(out), fasta)?;

    let mut dates = Vec::new();
    write_dates(&mut dates, &outcome.dates)?;
    fs::write(dates_sidecar(out), dates)?;
    Ok(())
}

/// Full extract stage: expand inputs, extract, write artifact + sidecars.
pub fn stage_extract(
    inputs: &[PathBuf],
    config: &PipelineConfig,
    out: &Path,
) -> Result<ExtractOutcome, PipelineError> {
    let files = expand_inputs(inputs)?;
    let outcome = extract_from_files(&files, &config.interface.to_config())?;
    write_extract_outputs(&outcome, &config.interface_fingerprint(), out)?;
    Ok(outcome)
}

// ---------------------------------------------------------------------
// Embed stage.

/// Reads an interfaces artifact, refuses fingerprint drift, embeds, and
/// writes the descriptor store.
pub fn stage_embed(
    interfaces_path: &Path,
    config: &PipelineConfig,
    out: &Path,
) -> Result<DescriptorStore, PipelineError> {
    let bytes = fs::read(interfaces_path)?;
    let (header, interfaces) = read_interfaces(bytes.as_slice(), interfaces_path)?;
    let expected = config.interface_fingerprint();
    if header.interface_fingerprint != expected {
        return Err(PipelineError::FingerprintMismatch {
            what: "interface configuration".to_string(),
            found: header.interface_fingerprint,
            expected,
        });
    }
    let store = embed_corpus(&interfaces, &config.descriptor)?;
    let mut buffer = Vec::new();
    store.write_to(&mut buffer, &file_fingerprint(&bytes))?;
    fs::write(out, buffer)?;
    Ok(store)
}

// ---------------------------------------------------------------------
// Cluster stage.

/// Clusters the chains of a FASTA file, either with the built-in greedy
/// method or through an external tool, and writes the cluster artifact.
pub fn stage_cluster(
    fasta_path: &Path,
    config: &PipelineConfig,
    tool: Option<&Path>,
    out: &Path,
) -> Result<SequenceClusters, PipelineError> {
    let bytes = fs::read(fasta_path)?;
    let sequences = read_fasta(bytes.as_slice(), fasta_path)?;
    if sequences.is_empty() {
        return Err(PipelineError::BadArtifact {
            path: fasta_path.to_path_buf(),
            reason: "no sequences".to_string(),
        });
    }
    let clusters = match tool {
        Some(tool_path) => {
            external_cluster_adapter(&sequences, config.cluster.min_seq_id, tool_path)?
        }
        None => cluster_sequences(&sequences, config.cluster.min_seq_id),
    };
    let mut buffer = Vec::new();
    write_clusters(&mut buffer, &clusters, &file_fingerprint(&bytes))?;
    fs::write(out, buffer)?;
    Ok(clusters)
}

// ---------------------------------------------------------------------
// Split stage.

fn load_store_checked(
    store_path: &Path,
    config: &PipelineConfig,
) -> Result<DescriptorStore, PipelineError> {
    let bytes = fs::read(store_path)?;
    let store =
        DescriptorStore::read_from(bytes.as_slice()).map_err(|e| PipelineError::BadArtifact {
            path: store_path.to_path_buf(),
            reason: e.to_string(),
        })?;
    let expected = config.descriptor_fingerprint();
    if store.config_fingerprint() != expected {
        return Err(PipelineError::FingerprintMismatch {
            what: "descriptor configuration".to_string(),
            found: store.config_fingerprint().to_string(),
            expected,
        });
    }
    Ok(store)
}

fn require_artifact<'a, T>(
    value: Option<&'a T>,
    strategy: SplitStrategy,
    what: &str,
) -> Result<&'a T, PipelineError> {
    value.ok_or_else(|| {
        PipelineError::Config(format!(
            "strategy {} needs {what}",
            strategy.name()
        ))
    })
}

/// Builds a split over every PPI of the store under the given recipe,
/// pulling in dates or sequence clusters when the strategy needs them.
pub fn build_split(
    store: &DescriptorStore,
    spec: &SplitSpec,
    similarity: &SimilarityConfig,
    dates: Option<&BTreeMap<String, NaiveDate>>,
    clusters: Option<&SequenceClusters>,
) -> Result<Split, PipelineError> {
    let ppis: std::collections::BTreeSet<String> = store.ids().map(str::to_string).collect();
    let split = match spec.strategy {
        SplitStrategy::PpiCode => split_by_ppi_code(&ppis, spec)?,
        SplitStrategy::PdbCode => split_by_pdb_code(&ppis, spec)?,
        SplitStrategy::DepositionTime => {
            let dates = require_artifact(dates, spec.strategy, "a dates artifact (--dates)")?;
            split_by_time(&ppis, dates, spec)?
        }
        SplitStrategy::SequenceComponent => {
            let clusters =
                require_artifact(clusters, spec.strategy, "a clusters artifact (--clusters)")?;
            let groups = group_by_sequence_components(&ppis, clusters)?;
            split_groups(&groups, spec)?
        }
        SplitStrategy::InterfaceComponent => {
            let graph = build_duplicate_graph(store, similarity)?;
            split_by_interface_components(&ppis, &graph, spec)?
        }
    };
    Ok(split)
}

/// Full split stage: load artifacts, verify fingerprints, build, write.
pub fn stage_split(
    store_path: &Path,
    dates_path: Option<&Path>,
    clusters_path: Option<&Path>,
    spec: &SplitSpec,
    config: &PipelineConfig,
    out: &Path,
) -> Result<Split, PipelineError> {
    spec.validate()?;
    let store = load_store_checked(store_path, config)?;
    let dates = match dates_path {
        Some(p) => {
            let bytes = fs::read(p)?;
            Some(read_dates(bytes.as_slice(), p)?)
        }
        None => None,
    };
    let clusters = match clusters_path {
        Some(p) => {
            let bytes = fs::read(p)?;
            let file = read_clusters(bytes.as_slice(), p)?;
            if file.clusters.min_seq_id != config.cluster.min_seq_id {
                return Err(PipelineError::FingerprintMismatch {
                    what: "cluster identity floor".to_string(),
                    found: format!("{}", file.clusters.min_seq_id),
                    expected: format!("{}", config.cluster.min_seq_id),
                });
            }
            Some(file.clusters)
        }
        None => None,
    };
    let split = build_split(
        &store,
        spec,
        &config.similarity,
        dates.as_ref(),
        clusters.as_ref(),
    )?;
    let mut buffer = Vec::new();
    split.write_to(&mut buffer)?;
    fs::write(out, buffer)?;
    Ok(split)
}

// ---------------------------------------------------------------------
// Audit, experiment, calibrate stages.

/// Loads a split and the store it belongs to, refusing when the split's
/// recorded input corpus does not match the store.
pub fn stage_audit(
    split_path: &Path,
    store_path: &Path,
    config: &PipelineConfig,
    fold_pair: Option<(&str, &str)>,
) -> Result<crate::audit::LeakageReport, PipelineError> {
    let store = load_store_checked(store_path, config)?;
    let bytes = fs::read(split_path)?;
    let split = Split::read_from(bytes.as_slice()).map_err(|e| PipelineError::BadArtifact {
        path: split_path.to_path_buf(),
        reason: e.to_string(),
    })?;
    if let Some(provenance) = &split.provenance {
        let current = split_input_fingerprint(&store.ids().map(str::to_string).collect());
        if provenance.input_fingerprint != current {
            return Err(PipelineError::FingerprintMismatch {
                what: "split input corpus".to_string(),
                found: provenance.input_fingerprint.clone(),
                expected: current,
            });
        }
    }
    let report = match fold_pair {
        Some((train, test)) => {
            crate::audit::leakage_ratio(&split, &store, &config.similarity, train, test)?
        }
        None => crate::audit::audit_split(&split, &store, &config.similarity)?,
    };
    Ok(report)
}

/// Loads corpus artifacts and runs the multi-sample leakage experiment.
pub fn stage_experiment(
    store_path: &Path,
    dates_path: &Path,
    fasta_path: &Path,
    config: &PipelineConfig,
) -> Result<ExperimentResult, PipelineError> {
    let store = load_store_checked(store_path, config)?;
    let dates_bytes = fs::read(dates_path)?;
    let dates = read_dates(dates_bytes.as_slice(), dates_path)?;
    let fasta_bytes = fs::read(fasta_path)?;
    let sequences = read_fasta(fasta_bytes.as_slice(), fasta_path)?;
    let inputs = ExperimentInputs {
        store: &store,
        dates: &dates,
        sequences: &sequences,
        similarity: &config.similarity,
        min_seq_id: config.cluster.min_seq_id,
    };
    let result = run_experiment(&inputs, &config.experiment.to_config())?;
    Ok(result)
}

/// Loads labeled pairs, resolves their descriptors, and calibrates the
/// duplicate threshold.
pub fn stage_calibrate(
    pairs_path: &Path,
    store_path: &Path,
    config: &PipelineConfig,
    out: &Path,
) -> Result<Calibration, PipelineError> {
    let store = load_store_checked(store_path, config)?;
    let bytes = fs::read(pairs_path)?;
    let specs: Vec<LabeledPairSpec> =
        serde_json::from_slice(&bytes).map_err(|e| PipelineError::BadArtifact {
            path: pairs_path.to_path_buf(),
            reason: e.to_string(),
        })?;
    let mut pairs = Vec::with_capacity(specs.len());
    let mut missing = Vec::new();
    for spec in &specs {
        match (store.get(&spec.a), store.get(&spec.b)) {
            (Some(a), Some(b)) => pairs.push((a.clone(), b.clone(), spec.is_duplicate)),
            _ => {
                for id in [&spec.a, &spec.b] {
                    if store.get(id).is_none() {
                        missing.push(id.clone());
                    }
                }
            }
        }
    }
    if !missing.is_empty() {
        missing.sort();
        missing.dedup();
        return Err(PipelineError::BadArtifact {
            path: pairs_path.to_path_buf(),
            reason: format!("no descriptors for: {}", missing.join(", ")),
        });
    }
    let calibration = calibrate_threshold_on_descriptors(&pairs)?;
    let file = CalibrationFile {
        format: CALIBRATION_FORMAT.to_string(),
        tool_version: TOOL_VERSION.to_string(),
        store_fingerprint: store.config_fingerprint().to_string(),
        input_fingerprint: file_fingerprint(&bytes),
        calibration: calibration.clone(),
    };
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    fs::write(out, text)?;
    Ok(calibration)
}

impl From<serde_json::Error> for PipelineError {
    fn from(e: serde_json::Error) -> Self {
        PipelineError::Config(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structio::write_pdb;
    use crate::synthetic::duplication_benchmark;
    use tempfile::TempDir;

    fn write_corpus_dir(dir: &Path, n_entries: usize) -> Vec<PathBuf> {
        let corpus = duplication_benchmark(3);
        let mut paths = Vec::new();
        for s in corpus.iter().take(n_entries) {
            let path = dir.join(format!("{}.pdb", s.pdb_code));
            let mut bytes = Vec::new();
            write_pdb(&mut bytes, s).unwrap();
            fs::write(&path, bytes).unwrap();
            paths.push(path);
        }
        paths
    }

    #[test]
    fn default_toml_parses_to_the_default_config() {
        let parsed = PipelineConfig::from_toml_str(&default_config_toml()).unwrap();
        assert_eq!(parsed, PipelineConfig::default());
    }

    #[test]
    fn partial_sections_fill_with_defaults_and_unknown_keys_are_refused() {
        let partial = "[descriptor]\nrounds = 2\n";
        let config = PipelineConfig::from_toml_str(partial).unwrap();
        assert_eq!(config.descriptor.rounds, 2);
        assert_eq!(config.descriptor.neighbor_cutoff, 10.0);
        assert_eq!(config.similarity, SimilarityConfig::default());

        let unknown = "[descriptor]\nrouds = 2\n";
        assert!(matches!(
            PipelineConfig::from_toml_str(unknown),
            Err(PipelineError::Config(_))
        ));
    }

    #[test]
    fn disabling_the_bsa_filter_drops_the_threshold() {
        let text = "[interface]\nbsa_filter_enabled = false\n";
        let config = PipelineConfig::from_toml_str(text).unwrap();
        assert_eq!(config.interface.to_config().bsa_threshold, None);
        assert_ne!(
            config.interface_fingerprint(),
            PipelineConfig::default().interface_fingerprint(),
            "switching the filter must change the fingerprint"
        );
    }

    #[test]
    fn extract_writes_interfaces_sequences_and_dates() {
        let dir = TempDir::new().unwrap();
        write_corpus_dir(dir.path(), 4);
        let config = PipelineConfig::default();
        let out = dir.path().join("interfaces.ndjson");
        let outcome = stage_extract(&[dir.path().to_path_buf()], &config, &out).unwrap();
        assert!(outcome.failures.is_empty(), "{:?}", outcome.failures);
        assert_eq!(outcome.n_files, 4);
        assert!(!outcome.interfaces.is_empty());

        let bytes = fs::read(&out).unwrap();
        let (header, interfaces) = read_interfaces(bytes.as_slice(), &out).unwrap();
        assert_eq!(header.interface_fingerprint, config.interface_fingerprint());
        assert_eq!(interfaces.len(), outcome.interfaces.len());

        let fasta = fs::read(chains_sidecar(&out)).unwrap();
        let sequences = read_fasta(fasta.as_slice(), &chains_sidecar(&out)).unwrap();
        assert!(sequences.keys().any(|k| k.ends_with("_A")));

        let dates_bytes = fs::read(dates_sidecar(&out)).unwrap();
        let dates = read_dates(dates_bytes.as_slice(), &dates_sidecar(&out)).unwrap();
        assert_eq!(dates.len(), 4, "every synthetic entry carries a date");
    }

    #[test]
    fn extract_is_idempotent_byte_for_byte() {
        let dir = TempDir::new().unwrap();
        write_corpus_dir(dir.path(), 3);
        let config = PipelineConfig::default();
        let out = dir.path().join("interfaces.ndjson");
        stage_extract(&[dir.path().to_path_buf()], &config, &out).unwrap();
        let first = fs::read(&out).unwrap();
        let first_fasta = fs::read(chains_sidecar(&out)).unwrap();
        stage_extract(&[dir.path().to_path_buf()], &config, &out).unwrap();
        assert_eq!(fs::read(&out).unwrap(), first);
        assert_eq!(fs::read(chains_sidecar(&out)).unwrap(), first_fasta);
    }

    #[test]
    fn extract_records_failures_without_aborting() {
        let dir = TempDir::new().unwrap();
        write_corpus_dir(dir.path(), 2);
        fs::write(dir.path().join("broken.pdb"), "not a structure\n").unwrap();
        let config = PipelineConfig::default();
        let out = dir.path().join("interfaces.ndjson");
        let outcome = stage_extract(&[dir.path().to_path_buf()], &config, &out).unwrap();
        assert_eq!(outcome.failures.len(), 1);
        assert!(outcome.failures[0].0.ends_with("broken.pdb"));
        assert!(!outcome.interfaces.is_empty());
    }

    #[test]
    fn duplicate_pdb_codes_across_files_are_rejected_per_file() {
        let dir = TempDir::new().unwrap();
        let paths = write_corpus_dir(dir.path(), 1);
        let copy = dir.path().join("zzz_copy.pdb");
        fs::copy(&paths[0], &copy).unwrap();
        let config = PipelineConfig::default();
        let out = dir.path().join("interfaces.ndjson");
        let outcome = stage_extract(&[dir.path().to_path_buf()], &config, &out).unwrap();
        assert_eq!(outcome.failures.len(), 1);
        assert!(outcome.failures[0].1.contains("already contributed"));
    }

    #[test]
    fn embed_refuses_interfaces_from_a_different_interface_config() {
        let dir = TempDir::new().unwrap();
        write_corpus_dir(dir.path(), 2);
        let config = PipelineConfig::default();
        let out = dir.path().join("interfaces.ndjson");
        stage_extract(&[dir.path().to_path_buf()], &config, &out).unwrap();

        let store_path = dir.path().join("descriptors.store");
        stage_embed(&out, &config, &store_path).unwrap();

        let mut drifted = PipelineConfig::default();
        drifted.interface.contact_cutoff = 5.0;
        match stage_embed(&out, &drifted, &store_path) {
            Err(PipelineError::FingerprintMismatch { what, .. }) => {
                assert!(what.contains("interface"));
            }
            other => panic!("expected FingerprintMismatch, got {other:?}"),
        }
    }

    #[test]
    fn embed_rejects_malformed_interfaces_files() {
        let dir = TempDir::new().unwrap();
        let path = dir.path().join("junk.ndjson");
        fs::write(&path, "this is not an artifact\n").unwrap();
        let config = PipelineConfig::default();
        assert!(matches!(
            stage_embed(&path, &config, &dir.path().join("out.store")),
            Err(PipelineError::BadArtifact { .. })
        ));
    }

    #[test]
    fn split_stage_builds_each_strategy_from_artifacts() {
        let dir = TempDir::new().unwrap();
        write_corpus_dir(dir.path(), 8);
        let config = PipelineConfig::default();
        let interfaces = dir.path().join("interfaces.ndjson");
        stage_extract(&[dir.path().to_path_buf()], &config, &interfaces).unwrap();
        let store_path = dir.path().join("descriptors.store");
        stage_embed(&interfaces, &config, &store_path).unwrap();
        let clusters_path = dir.path().join("clusters.json");
        stage_cluster(&chains_sidecar(&interfaces), &config, None, &clusters_path).unwrap();

        for strategy in SplitStrategy::ALL {
            let spec = SplitSpec {
                test_fraction: Some(0.25),
                ..SplitSpec::fraction(strategy, 7)
            };
            let out = dir.path().join(format!("split_{}.json", strategy.name()));
            let split = stage_split(
                &store_path,
                Some(&dates_sidecar(&interfaces)),
                Some(&clusters_path),
                &spec,
                &config,
                &out,
            )
            .unwrap();
            assert_eq!(split.folds.len(), 2, "{}", strategy.name());
            let report = stage_audit(&out, &store_path, &config, None).unwrap();
            assert!(report.mean_leakage_fraction >= 0.0);
        }
    }

    #[test]
    fn split_stage_demands_strategy_artifacts() {
        let dir = TempDir::new().unwrap();
        write_corpus_dir(dir.path(), 2);
        let config = PipelineConfig::default();
        let interfaces = dir.path().join("interfaces.ndjson");
        stage_extract(&[dir.path().to_path_buf()], &config, &interfaces).unwrap();
        let store_path = dir.path().join("descriptors.store");
        stage_embed(&interfaces, &config, &store_path).unwrap();

        let spec = SplitSpec {
            test_fraction: Some(0.5),
            ..SplitSpec::fraction(SplitStrategy::SequenceComponent, 1)
        };
        match stage_split(&store_path, None, None, &spec, &config, &dir.path().join("s.json")) {
            Err(PipelineError::Config(msg)) => assert!(msg.contains("clusters")),
            other => panic!("expected Config error, got {other:?}"),
        }
    }

    #[test]
    fn audit_refuses_a_split_from_a_different_corpus() {
        let dir = TempDir::new().unwrap();
        write_corpus_dir(dir.path(), 4);
        let config = PipelineConfig::default();
        let interfaces = dir.path().join("interfaces.ndjson");
        stage_extract(&[dir.path().to_path_buf()], &config, &interfaces).unwrap();
        let store_path = dir.path().join("descriptors.store");
        let store = stage_embed(&interfaces, &config, &store_path).unwrap();

        let spec = SplitSpec {
            test_fraction: Some(0.25),
            ..SplitSpec::default()
        };
        let split_path = dir.path().join("split.json");
        stage_split(&store_path, None, None, &spec, &config, &split_path).unwrap();

        // Shrink the store on disk: the split no longer matches.
        let first_id = store.ids().next().unwrap().to_string();
        let smaller = store.filtered(|id| id != first_id);
        let mut buffer = Vec::new();
        smaller.write_to(&mut buffer, "-").unwrap();
        fs::write(&store_path, buffer).unwrap();

        match stage_audit(&split_path, &store_path, &config, None) {
            Err(PipelineError::FingerprintMismatch { what, .. }) => {
                assert!(what.contains("split input"));
            }
            other => panic!("expected FingerprintMismatch, got {other:?}"),
        }
    }

    #[test]
    fn fasta_round_trips_and_rejects_duplicates() {
        let mut sequences = BTreeMap::new();
        sequences.insert("0001_A".to_string(), "ACDEFG".to_string());
        sequences.insert("0001_B".to_string(), "MNPQRS".to_string());
        let mut bytes = Vec::new();
        write_fasta(&mut bytes, &sequences).unwrap();
        let back = read_fasta(bytes.as_slice(), Path::new("x.fasta")).unwrap();
        assert_eq!(back, sequences);

        let dup = ">a\nACD\n>a\nACD\n";
        assert!(matches!(
            read_fasta(dup.as_bytes(), Path::new("x.fasta")),
            Err(PipelineError::BadArtifact { .. })
        ));
    }

    #[test]
    fn clusters_file_round_trips() {
        let mut sequences = BTreeMap::new();
        sequences.insert("p_A".to_string(), "ACDEFACDEF".to_string());
        sequences.insert("p_B".to_string(), "ACDEFACDEF".to_string());
        sequences.insert("p_C".to_string(), "MNPQRMNPQR".to_string());
        let clusters = cluster_sequences(&sequences, 0.3);
        let mut bytes = Vec::new();
        write_clusters(&mut bytes, &clusters, "feedfeedfeedfeed").unwrap();
        let back = read_clusters(bytes.as_slice(), Path::new("c.json")).unwrap();
        assert_eq!(back.clusters, clusters);
        assert_eq!(back.input_fingerprint, "feedfeedfeedfeed");
        assert_eq!(back.format, CLUSTERS_FORMAT);
    }

    #[test]
    fn calibrate_stage_reports_missing_ids() {
        let dir = TempDir::new().unwrap();
        write_corpus_dir(dir.path(), 2);
        let config = PipelineConfig::default();
        let interfaces = dir.path().join("interfaces.ndjson");
        stage_extract(&[dir.path().to_path_buf()], &config, &interfaces).unwrap();
        let store_path = dir.path().join("descriptors.store");
        stage_embed(&interfaces, &config, &store_path).unwrap();

        let pairs = dir.path().join("pairs.json");
        fs::write(
            &pairs,
            r#"[{"a": "zzzz_A_B", "b": "yyyy_A_B", "is_duplicate": true}]"#,
        )
        .unwrap();
        match stage_calibrate(&pairs, &store_path, &config, &dir.path().join("cal.json")) {
            Err(PipelineError::BadArtifact { reason, .. }) => {
                assert!(reason.contains("zzzz_A_B"));
                assert!(reason.contains("yyyy_A_B"));
            }
            other => panic!("expected BadArtifact, got {other:?}"),
        }
    }

    #[test]
    fn calibrate_stage_separates_planted_duplicates() {
        let dir = TempDir::new().unwrap();
        // Entries 000p and 000q are exact copies; 001p is unrelated.
        let corpus = duplication_benchmark(3);
        for s in corpus.iter().filter(|s| {
            ["000p", "000q", "001p"].contains(&s.pdb_code.as_str())
        }) {
            let mut bytes = Vec::new();
            write_pdb(&mut bytes, s).unwrap();
            fs::write(dir.path().join(format!("{}.pdb", s.pdb_code)), bytes).unwrap();
        }
        let config = PipelineConfig::default();
        let interfaces = dir.path().join("interfaces.ndjson");
        stage_extract(&[dir.path().to_path_buf()], &config, &interfaces).unwrap();
        let store_path = dir.path().join("descriptors.store");
        stage_embed(&interfaces, &config, &store_path).unwrap();

        let pairs = dir.path().join("pairs.json");
        fs::write(
            &pairs,
            r#"[
                {"a": "000p_A_B", "b": "000q_A_B", "is_duplicate": true},
                {"a": "000p_A_B", "b": "000p_C_D", "is_duplicate": true},
                {"a": "000p_A_B", "b": "001p_A_B", "is_duplicate": false},
                {"a": "000q_C_D", "b": "001p_C_D", "is_duplicate": false}
            ]"#,
        )
        .unwrap();
        let out = dir.path().join("cal.json");
        let calibration = stage_calibrate(&pairs, &store_path, &config, &out).unwrap();
        assert_eq!(calibration.f1, 1.0);

        let text = fs::read_to_string(&out).unwrap();
        let file: CalibrationFile = serde_json::from_str(&text).unwrap();
        assert_eq!(file.calibration, calibration);
    }

    #[test]
    fn sidecar_paths_append_suffixes() {
        let out = Path::new("/tmp/run1/interfaces.ndjson");
        assert_eq!(
            chains_sidecar(out),
            Path::new("/tmp/run1/interfaces.ndjson.chains.fasta")
        );
        assert_eq!(
            dates_sidecar(out),
            Path::new("/tmp/run1/interfaces.ndjson.dates.json")
        );
    }
}
