//! Greedy sequence clustering at a minimum identity to the representative.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::align::{align_global, AlignmentParams};

const KMER_LEN: usize = 5;

/// A partition of protein chains into identity clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceClusters {
    /// Protein key (`<pdb>_<chain>`) to cluster id.
    pub assignments: BTreeMap<String, usize>,
    /// Cluster id to the key of its representative.
    pub representatives: Vec<String>,
    /// Identity floor the clusters were built at.
    pub min_seq_id: f64,
    /// Version string of the external tool, when one produced the
    /// clusters; None for the built-in clusterer.
    pub tool_version: Option<String>,
}

impl SequenceClusters {
    pub fn n_clusters(&self) -> usize {
        self.representatives.len()
    }

    pub fn cluster_of(&self, key: &str) -> Option<usize> {
        self.assignments.get(key).copied()
    }
}

fn kmer_set(seq: &[u8]) -> HashSet<&[u8]> {
    seq.windows(KMER_LEN).collect()
}

/// Greedy incremental clustering: sequences are visited from longest to
/// shortest (key order breaks ties) and each joins the first cluster
/// whose representative aligns at identity >= `min_seq_id`, else founds
/// its own. Representatives sharing no 5-mer with the candidate are
/// skipped without aligning; the prefilter is bypassed when either
/// sequence is too short to have 5-mers, so identical short sequences
/// still cluster together.
///
/// `min_seq_id` must lie in (0, 1] and sequences must be non-empty.
pub fn cluster_sequences(
    proteins: &BTreeMap<String, String>,
    min_seq_id: f64,
) -> SequenceClusters {
    assert!(
        min_seq_id > 0.0 && min_seq_id <= 1.0,
        "min_seq_id must lie in (0, 1], got {min_seq_id}"
    );
    let params = AlignmentParams::default();
    let mut order: Vec<(&str, &str)> = proteins
        .iter()
        .map(|(k, s)| (k.as_str(), s.as_str()))
        .collect();
    order.sort_by(|(ka, sa), (kb, sb)| sb.len().cmp(&sa.len()).then_with(|| ka.cmp(kb)));

    struct Rep<'a> {
        key: &'a str,
        seq: &'a str,
        kmers: HashSet<&'a [u8]>,
    }
    let mut reps: Vec<Rep> = Vec::new();
    let mut assignments = BTreeMap::new();

    for (key, seq) in order {
        assert!(!seq.is_empty(), "sequence for {key} is empty");
        let kmers = kmer_set(seq.as_bytes());
        let mut assigned = None;
        for (cluster_id, rep) in reps.iter().enumerate() {
            let prefilter_applies = !kmers.is_empty() && !rep.kmers.is_empty();
            if prefilter_applies && kmers.is_disjoint(&rep.kmers) {
                continue;
            }
            let result = align_global(seq, rep.seq, &params)
                .expect("sequences are validated non-empty");
            if result.identity >= min_seq_id {
                assigned = Some(cluster_id);
                break;
            }
        }
        match assigned {
            Some(id) => {
                assignments.insert(key.to_string(), id);
            }
            None => {
                let id = reps.len();
                reps.push(Rep { key, seq, kmers });
                assignments.insert(key.to_string(), id);
            }
        }
    }

    SequenceClusters {
        assignments,
        representatives: reps.iter().map(|r| r.key.to_string()).collect(),
        min_seq_id,
        tool_version: None,
    }
}
