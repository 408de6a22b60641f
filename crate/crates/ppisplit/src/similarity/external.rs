//! Adapter around an external sequence clustering executable.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::process::Command;

use thiserror::Error;

use super::cluster::SequenceClusters;

#[derive(Debug, Error)]
pub enum ExternalClusterError {
    #[error("clustering tool {path:?} not found; install it or pass its location explicitly")]
    ToolNotFound { path: String },
    #[error("clustering tool exited with {status}; stderr:\n{stderr}")]
    ToolFailed { status: String, stderr: String },
    #[error("clustering tool output is unusable: {reason}")]
    BadOutput { reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn run_captured(cmd: &mut Command, path: &Path) -> Result<std::process::Output, ExternalClusterError> {
    cmd.output().map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            ExternalClusterError::ToolNotFound {
                path: path.display().to_string(),
            }
        } else {
            ExternalClusterError::Io(e)
        }
    })
}

/// Clusters sequences by invoking an `easy-cluster`-style external tool:
/// the sequences are written to a temporary FASTA, the tool is run with
/// the requested identity floor, and its tab-separated
/// representative/member output is read back. Meant for corpora beyond
/// the built-in clusterer's comfort zone.
///
/// The tool's self-reported version string is recorded in the result;
/// parameter semantics beyond the identity floor are whatever the
/// installed tool version defines.
pub fn external_cluster_adapter(
    proteins: &BTreeMap<String, String>,
    min_seq_id: f64,
    tool_path: &Path,
) -> Result<SequenceClusters, ExternalClusterError> {
    assert!(
        min_seq_id > 0.0 && min_seq_id <= 1.0,
        "min_seq_id must lie in (0, 1], got {min_seq_id}"
    );
    let dir = tempfile::tempdir()?;
    let fasta_path = dir.path().join("input.fasta");
    {
        let mut f = std::fs::File::create(&fasta_path)?;
        for (key, seq) in proteins {
            writeln!(f, ">{key}")?;
            writeln!(f, "{seq}")?;
        }
    }

    let version_out = run_captured(Command::new(tool_path).arg("version"), tool_path)?;
    let tool_version = if version_out.status.success() {
        let v = String::from_utf8_lossy(&version_out.stdout).trim().to_string();
        (!v.is_empty()).then_some(v)
    } else {
        None
    };

    let prefix = dir.path().join("clu");
    let tmp = dir.path().join("tmp");
    let out = run_captured(
        Command::new(tool_path)
            .arg("easy-cluster")
            .arg(&fasta_path)
            .arg(&prefix)
            .arg(&tmp)
            .arg("--min-seq-id")
            .arg(format!("{min_seq_id}")),
        tool_path,
    )?;
    if !out.status.success() {
        return Err(ExternalClusterError::ToolFailed {
            status: out.status.to_string(),
            stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
        });
    }

    let tsv_path = dir.path().join("clu_cluster.tsv");
    let tsv = std::fs::read_to_string(&tsv_path).map_err(|e| ExternalClusterError::BadOutput {
        reason: format!("expected cluster table at {}: {e}", tsv_path.display()),
    })?;

    let mut cluster_of_rep: BTreeMap<&str, usize> = BTreeMap::new();
    let mut representatives = Vec::new();
    let mut assignments = BTreeMap::new();
    for (i, line) in tsv.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let (Some(rep), Some(member)) = (parts.next(), parts.next()) else {
            return Err(ExternalClusterError::BadOutput {
                reason: format!("line {} is not rep<TAB>member: {line:?}", i + 1),
            });
        };
        let id = *cluster_of_rep.entry(rep).or_insert_with(|| {
            representatives.push(rep.to_string());
            representatives.len() - 1
        });
        if !proteins.contains_key(member) {
            return Err(ExternalClusterError::BadOutput {
                reason: format!("member {member:?} was never submitted"),
            });
        }
        if assignments.insert(member.to_string(), id).is_some() {
            return Err(ExternalClusterError::BadOutput {
                reason: format!("member {member:?} listed twice"),
            });
        }
    }
    if assignments.len() != proteins.len() {
        let missing: Vec<&str> = proteins
            .keys()
            .filter(|k| !assignments.contains_key(*k))
            .map(|k| k.as_str())
            .collect();
        return Err(ExternalClusterError::BadOutput {
            reason: format!("tool output omits {} sequences (e.g. {:?})", missing.len(), &missing[..missing.len().min(3)]),
        });
    }

    Ok(SequenceClusters {
        assignments,
        representatives,
        min_seq_id,
        tool_version,
    })
}
