//! Train/test and k-fold splits of PPI sets under five grouping strategies.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fingerprint;
use crate::rng::{seeded, shuffle};
use crate::similarity::{NearDuplicateGraph, SequenceClusters};
use crate::structio::PpiId;

/// How PPIs are grouped before being assigned to folds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitStrategy {
    /// Every PPI on its own: folds can separate nothing.
    PpiCode,
    /// All PPIs of one PDB entry stay together.
    PdbCode,
    /// Most recently deposited entries form the test fold.
    DepositionTime,
    /// Connected components of the protein graph (PPI partnership plus
    /// shared sequence cluster) stay together.
    SequenceComponent,
    /// Connected components of the near-duplicate interface graph stay
    /// together.
    InterfaceComponent,
}

impl SplitStrategy {
    pub const ALL: [SplitStrategy; 5] = [
        SplitStrategy::PpiCode,
        SplitStrategy::PdbCode,
        SplitStrategy::DepositionTime,
        SplitStrategy::SequenceComponent,
        SplitStrategy::InterfaceComponent,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SplitStrategy::PpiCode => "ppi_code",
            SplitStrategy::PdbCode => "pdb_code",
            SplitStrategy::DepositionTime => "deposition_time",
            SplitStrategy::SequenceComponent => "sequence_component",
            SplitStrategy::InterfaceComponent => "interface_component",
        }
    }
}

/// How groups are packed into folds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Packing {
    /// Seeded shuffle; the test fold is filled until it first reaches the
    /// target PPI count. In k-fold mode, shuffled groups go round-robin.
    #[default]
    Random,
    /// Groups descending by size; a group joins the test fold only if it
    /// does not overshoot the target, which tracks the ratio tighter. In
    /// k-fold mode, each group goes to the currently smallest fold.
    LargestFirst,
}

/// Recipe for one split: strategy, ratio or fold count, seed, packing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub strategy: SplitStrategy,
    /// Fraction of PPIs for the test fold; exclusive with `n_folds`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_fraction: Option<f64>,
    /// Number of cross-validation folds; exclusive with `test_fraction`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_folds: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub packing: Packing,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec::fraction(SplitStrategy::PpiCode, 0)
    }
}

impl SplitSpec {
    /// Train/test split at the default 10% test fraction.
    pub fn fraction(strategy: SplitStrategy, seed: u64) -> SplitSpec {
        SplitSpec {
            strategy,
            test_fraction: Some(0.10),
            n_folds: None,
            seed,
            packing: Packing::Random,
        }
    }

    pub fn validate(&self) -> Result<(), SplitError> {
        match (self.test_fraction, self.n_folds) {
            (Some(f), None) => {
                if !(f > 0.0 && f < 1.0) {
                    return Err(SplitError::BadSpec {
                        reason: format!("test_fraction must lie in (0, 1), got {f}"),
                    });
                }
            }
            (None, Some(k)) => {
                if k < 2 {
                    return Err(SplitError::BadSpec {
                        reason: format!("n_folds must be at least 2, got {k}"),
                    });
                }
                if self.strategy == SplitStrategy::DepositionTime {
                    return Err(SplitError::BadSpec {
                        reason: "deposition_time splits support only test_fraction mode"
                            .to_string(),
                    });
                }
            }
            (Some(_), Some(_)) | (None, None) => {
                return Err(SplitError::BadSpec {
                    reason: "exactly one of test_fraction and n_folds must be set".to_string(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SplitError {
    #[error("cannot split an empty PPI set")]
    EmptyInput,
    #[error("invalid split spec: {reason}")]
    BadSpec { reason: String },
    #[error("PPI id {id:?} is not of the form <pdb>_<chainA>_<chainB>")]
    BadPpiId { id: String },
    #[error("no deposition date for PDB codes: {}", codes.join(", "))]
    MissingDate { codes: Vec<String> },
    #[error("no sequence cluster for proteins: {}", keys.join(", "))]
    UnclusteredProtein { keys: Vec<String> },
    #[error("near-duplicate graph lacks PPIs: {}", ids.join(", "))]
    MissingFromGraph { ids: Vec<String> },
    #[error("split file is malformed: {reason}")]
    MalformedFile { reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A set of PPIs that one strategy refuses to separate across folds.
#[derive(Debug, Clone, PartialEq)]
pub struct PpiGroup {
    pub group_id: usize,
    pub members: BTreeSet<String>,
}

/// Provenance recorded alongside the folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitProvenance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_version: Option<String>,
    /// Fingerprint of the sorted input PPI id list.
    pub input_fingerprint: String,
    pub n_ppis: usize,
    pub n_groups: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realized_test_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Disjoint folds covering a PPI set, plus how they were made.
///
/// `spec` and `provenance` are absent on splits read from externally
/// authored fold files, which carry only `folds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<SplitSpec>,
    pub folds: BTreeMap<String, BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<SplitProvenance>,
}

impl Split {
    pub fn fold(&self, name: &str) -> Option<&BTreeSet<String>> {
        self.folds.get(name)
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        w.write_all(text.as_bytes())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Split, SplitError> {
        serde_json::from_reader(r).map_err(|e| SplitError::MalformedFile {
            reason: e.to_string(),
        })
    }
}

fn pdb_code_of(ppi_id: &str) -> Result<String, SplitError> {
    PpiId::from_str(ppi_id)
        .map(|p| p.pdb_code)
        .map_err(|_| SplitError::BadPpiId {
            id: ppi_id.to_string(),
        })
}

/// Fingerprint of a sorted PPI id set; recorded in split provenance so a
/// split can be matched against the corpus it was made from.
pub fn split_input_fingerprint(ppis: &BTreeSet<String>) -> String {
    let ids: Vec<&str> = ppis.iter().map(String::as_str).collect();
    fingerprint::of_value("split-input.v1", &ids)
}

/// Union-find over indexes with path halving.
pub(crate) struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    pub(crate) fn new(n: usize) -> Dsu {
        Dsu {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Groups sorted by their smallest member, ids assigned in that order.
fn groups_from_members(mut member_sets: Vec<BTreeSet<String>>) -> Vec<PpiGroup> {
    member_sets.sort_by(|a, b| a.iter().next().cmp(&b.iter().next()));
    member_sets
        .into_iter()
        .enumerate()
        .map(|(group_id, members)| PpiGroup { group_id, members })
        .collect()
}

fn singleton_groups(ppis: &BTreeSet<String>) -> Vec<PpiGroup> {
    groups_from_members(ppis.iter().map(|id| BTreeSet::from([id.clone()])).collect())
}

fn groups_by_code(ppis: &BTreeSet<String>) -> Result<Vec<PpiGroup>, SplitError> {
    let mut by_code: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for id in ppis {
        by_code.entry(pdb_code_of(id)?).or_default().insert(id.clone());
    }
    Ok(groups_from_members(by_code.into_values().collect()))
}

/// Random split over individual PPI ids at the requested ratio.
pub fn split_by_ppi_code(ppis: &BTreeSet<String>, spec: &SplitSpec) -> Result<Split, SplitError> {
    split_groups(&singleton_groups(ppis), spec)
}

/// Random split keeping all PPIs of one PDB entry in one fold.
pub fn split_by_pdb_code(ppis: &BTreeSet<String>, spec: &SplitSpec) -> Result<Split, SplitError> {
    split_groups(&groups_by_code(ppis)?, spec)
}

/// Puts the most recently deposited entries in the test fold: codes are
/// sorted ascending by (date, code) and taken from the end until the test
/// fold first reaches the target PPI count, so at a shared boundary date
/// the lexicographically larger code goes to test.
pub fn split_by_time(
    ppis: &BTreeSet<String>,
    dates: &BTreeMap<String, NaiveDate>,
    spec: &SplitSpec,
) -> Result<Split, SplitError> {
    spec.validate()?;
    let Some(test_fraction) = spec.test_fraction else {
        return Err(SplitError::BadSpec {
            reason: "deposition_time splits support only test_fraction mode".to_string(),
        });
    };
    if ppis.is_empty() {
        return Err(SplitError::EmptyInput);
    }
    let mut by_code: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for id in ppis {
        by_code.entry(pdb_code_of(id)?).or_default().insert(id.clone());
    }
    let undated: Vec<String> = by_code
        .keys()
        .filter(|c| !dates.contains_key(*c))
        .cloned()
        .collect();
    if !undated.is_empty() {
        return Err(SplitError::MissingDate { codes: undated });
    }

    let mut ordered: Vec<(&String, &BTreeSet<String>)> = by_code.iter().collect();
    ordered.sort_by(|(ca, _), (cb, _)| dates[*ca].cmp(&dates[*cb]).then_with(|| ca.cmp(cb)));

    let total = ppis.len();
    let target = test_fraction * total as f64;
    let mut test: BTreeSet<String> = BTreeSet::new();
    let mut train: BTreeSet<String> = BTreeSet::new();
    for (_, members) in ordered.iter().rev() {
        if (test.len() as f64) < target {
            test.extend(members.iter().cloned());
        } else {
            train.extend(members.iter().cloned());
        }
    }
    let mut warnings = Vec::new();
    if train.is_empty() {
        warnings.push("every PDB code was needed to reach the test target; train is empty".into());
    }
    let realized = test.len() as f64 / total as f64;
    Ok(Split {
        spec: Some(spec.clone()),
        folds: BTreeMap::from([("train".to_string(), train), ("test".to_string(), test)]),
        provenance: Some(SplitProvenance {
            tool_version: Some(env!("CARGO_PKG_VERSION").to_string()),
            input_fingerprint: split_input_fingerprint(ppis),
            n_ppis: total,
            n_groups: by_code.len(),
            realized_test_fraction: Some(realized),
            warnings,
        }),
    })
}

/// Connected components of the protein graph whose edges are PPI
/// partnership and shared sequence cluster; each PPI lands in the single
/// component holding both its proteins.
pub fn group_by_sequence_components(
    ppis: &BTreeSet<String>,
    clusters: &SequenceClusters,
) -> Result<Vec<PpiGroup>, SplitError> {
    let mut proteins: BTreeSet<String> = BTreeSet::new();
    let mut pairs: Vec<(String, String)> = Vec::new();
    for id in ppis {
        let ppi = PpiId::from_str(id).map_err(|_| SplitError::BadPpiId { id: id.clone() })?;
        let a = format!("{}_{}", ppi.pdb_code, ppi.chain_a);
        let b = format!("{}_{}", ppi.pdb_code, ppi.chain_b);
        proteins.insert(a.clone());
        proteins.insert(b.clone());
        pairs.push((a, b));
    }
    let unclustered: Vec<String> = proteins
        .iter()
        .filter(|p| clusters.cluster_of(p).is_none())
        .cloned()
        .collect();
    if !unclustered.is_empty() {
        return Err(SplitError::UnclusteredProtein { keys: unclustered });
    }

    let index: BTreeMap<&str, usize> = proteins
        .iter()
        .enumerate()
        .map(|(i, p)| (p.as_str(), i))
        .collect();
    let mut dsu = Dsu::new(proteins.len());
    for (a, b) in &pairs {
        dsu.union(index[a.as_str()], index[b.as_str()]);
    }
    // All proteins of one cluster form a clique; chaining to the first
    // member is enough for connectivity.
    let mut first_of_cluster: BTreeMap<usize, usize> = BTreeMap::new();
    for p in &proteins {
        let cluster = clusters.cluster_of(p).expect("checked above");
        let i = index[p.as_str()];
        match first_of_cluster.get(&cluster) {
            Some(&j) => dsu.union(i, j),
            None => {
                first_of_cluster.insert(cluster, i);
            }
        }
    }

    let mut members_by_root: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
    for (id, (a, _)) in ppis.iter().zip(&pairs) {
        let root = dsu.find(index[a.as_str()]);
        members_by_root.entry(root).or_default().insert(id.clone());
    }
    Ok(groups_from_members(members_by_root.into_values().collect()))
}

/// Connected components of the near-duplicate graph, over its node set.
pub fn group_by_interface_components(graph: &NearDuplicateGraph) -> Vec<PpiGroup> {
    let index: BTreeMap<&str, usize> = graph
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let mut dsu = Dsu::new(graph.nodes.len());
    for e in &graph.edges {
        if let (Some(&a), Some(&b)) = (index.get(e.a.as_str()), index.get(e.b.as_str())) {
            dsu.union(a, b);
        }
    }
    let mut members_by_root: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
    for (i, node) in graph.nodes.iter().enumerate() {
        members_by_root
            .entry(dsu.find(i))
            .or_default()
            .insert(node.clone());
    }
    groups_from_members(members_by_root.into_values().collect())
}

/// Splits PPIs grouped by interface components, first checking that the
/// graph covers the PPI set.
pub fn split_by_interface_components(
    ppis: &BTreeSet<String>,
    graph: &NearDuplicateGraph,
    spec: &SplitSpec,
) -> Result<Split, SplitError> {
    let covered: BTreeSet<&str> = graph.nodes.iter().map(String::as_str).collect();
    let missing: Vec<String> = ppis
        .iter()
        .filter(|id| !covered.contains(id.as_str()))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(SplitError::MissingFromGraph { ids: missing });
    }
    let groups: Vec<PpiGroup> = group_by_interface_components(graph)
        .into_iter()
        .filter(|g| g.members.iter().any(|m| ppis.contains(m)))
        .map(|g| PpiGroup {
            group_id: g.group_id,
            members: g.members.intersection(ppis).cloned().collect(),
        })
        .collect();
    split_groups(&groups, spec)
}

/// Packs whole groups into folds. Groups never straddle folds; the
/// realized ratio is recorded in provenance. A group too large for the
/// train side (more than 1 - test_fraction of all PPIs) degrades the
/// ratio; it is pinned to train and flagged as a warning rather than
/// failing the split.
pub fn split_groups(groups: &[PpiGroup], spec: &SplitSpec) -> Result<Split, SplitError> {
    spec.validate()?;
    let total: usize = groups.iter().map(|g| g.members.len()).sum();
    if total == 0 {
        return Err(SplitError::EmptyInput);
    }
    let all_members = || groups.iter().flat_map(|g| g.members.iter().cloned());
    let input_fp = split_input_fingerprint(&all_members().collect());

    let mut warnings = Vec::new();
    let folds = match (spec.test_fraction, spec.n_folds) {
        (Some(fraction), None) => {
            let target = fraction * total as f64;
            let max_train_share = (1.0 - fraction) * total as f64;

            let mut oversized: Vec<usize> = Vec::new();
            let mut packable: Vec<usize> = Vec::new();
            for (i, g) in groups.iter().enumerate() {
                if g.members.len() as f64 > max_train_share {
                    oversized.push(i);
                    warnings.push(format!(
                        "group {} holds {} of {} PPIs, more than the train share; ratio is degraded",
                        g.group_id,
                        g.members.len(),
                        total
                    ));
                } else {
                    packable.push(i);
                }
            }

            let mut test: BTreeSet<String> = BTreeSet::new();
            let mut train: BTreeSet<String> =
                oversized.iter().flat_map(|&i| groups[i].members.iter().cloned()).collect();
            match spec.packing {
                Packing::Random => {
                    let mut rng = seeded(spec.seed);
                    shuffle(&mut rng, &mut packable);
                    for &i in &packable {
                        if (test.len() as f64) < target {
                            test.extend(groups[i].members.iter().cloned());
                        } else {
                            train.extend(groups[i].members.iter().cloned());
                        }
                    }
                }
                Packing::LargestFirst => {
                    packable.sort_by(|&i, &j| {
                        groups[j]
                            .members
                            .len()
                            .cmp(&groups[i].members.len())
                            .then_with(|| groups[i].group_id.cmp(&groups[j].group_id))
                    });
                    for &i in &packable {
                        if test.len() as f64 + groups[i].members.len() as f64 <= target {
                            test.extend(groups[i].members.iter().cloned());
                        } else {
                            train.extend(groups[i].members.iter().cloned());
                        }
                    }
                    if test.is_empty() {
                        // Every group overshoots; concede the smallest one
                        // (the last in the packing order) so test is usable.
                        if let Some(&i) = packable.last() {
                            for m in &groups[i].members {
                                train.remove(m);
                            }
                            test.extend(groups[i].members.iter().cloned());
                        }
                    }
                }
            }
            if test.is_empty() {
                warnings.push("test fold is empty".to_string());
            }
            if train.is_empty() {
                warnings.push("train fold is empty".to_string());
            }
            BTreeMap::from([("train".to_string(), train), ("test".to_string(), test)])
        }
        (None, Some(k)) => {
            let mut order: Vec<usize> = (0..groups.len()).collect();
            let mut folds: Vec<BTreeSet<String>> = vec![BTreeSet::new(); k];
            match spec.packing {
                Packing::Random => {
                    let mut rng = seeded(spec.seed);
                    shuffle(&mut rng, &mut order);
                    for (slot, &i) in order.iter().enumerate() {
                        folds[slot % k].extend(groups[i].members.iter().cloned());
                    }
                }
                Packing::LargestFirst => {
                    order.sort_by(|&i, &j| {
                        groups[j]
                            .members
                            .len()
                            .cmp(&groups[i].members.len())
                            .then_with(|| groups[i].group_id.cmp(&groups[j].group_id))
                    });
                    for &i in &order {
                        let smallest = (0..k).min_by_key(|&f| (folds[f].len(), f)).unwrap();
                        folds[smallest].extend(groups[i].members.iter().cloned());
                    }
                }
            }
            if folds.iter().any(BTreeSet::is_empty) {
                warnings.push(format!("{k}-fold split over {} groups left empty folds", groups.len()));
            }
            folds
                .into_iter()
                .enumerate()
                .map(|(i, members)| (format!("fold{i:02}"), members))
                .collect()
        }
        _ => unreachable!("validate() enforces exactly one mode"),
    };

    let realized = spec
        .test_fraction
        .map(|_| folds["test"].len() as f64 / total as f64);
    Ok(Split {
        spec: Some(spec.clone()),
        folds,
        provenance: Some(SplitProvenance {
            tool_version: Some(env!("CARGO_PKG_VERSION").to_string()),
            input_fingerprint: input_fp,
            n_ppis: total,
            n_groups: groups.len(),
            realized_test_fraction: realized,
            warnings,
        }),
    })
}

/// One validation check with its outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Machine-readable well-formedness report for a split.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitValidation {
    pub checks: Vec<CheckResult>,
}

impl SplitValidation {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Permitted drift between requested and realized test fraction before
/// the ratio check fails; whole-group packing cannot honor arbitrary
/// ratios exactly.
pub const RATIO_TOLERANCE: f64 = 0.25;

/// Checks fold disjointness, coverage of the PPI set, absence of unknown
/// ids, non-empty folds, and (when a fraction was requested) the realized
/// ratio. Failures are reported, never thrown.
pub fn validate_split(split: &Split, ppis: &BTreeSet<String>) -> SplitValidation {
    let mut checks = Vec::new();

    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for fold in split.folds.values() {
        for id in fold {
            *seen.entry(id.as_str()).or_insert(0) += 1;
        }
    }
    let dupes: Vec<&str> = seen.iter().filter(|(_, &n)| n > 1).map(|(id, _)| *id).collect();
    checks.push(CheckResult {
        name: "disjoint",
        passed: dupes.is_empty(),
        detail: if dupes.is_empty() {
            "no PPI appears in two folds".to_string()
        } else {
            format!("{} PPIs appear in multiple folds (e.g. {:?})", dupes.len(), &dupes[..dupes.len().min(3)])
        },
    });

    let missing: Vec<&str> = ppis
        .iter()
        .map(String::as_str)
        .filter(|id| !seen.contains_key(*id))
        .collect();
    checks.push(CheckResult {
        name: "coverage",
        passed: missing.is_empty(),
        detail: if missing.is_empty() {
            "every input PPI is in a fold".to_string()
        } else {
            format!("{} PPIs absent from all folds (e.g. {:?})", missing.len(), &missing[..missing.len().min(3)])
        },
    });

    let unknown: Vec<&str> = seen
        .keys()
        .filter(|id| !ppis.contains(**id))
        .copied()
        .collect();
    checks.push(CheckResult {
        name: "no_unknown_ids",
        passed: unknown.is_empty(),
        detail: if unknown.is_empty() {
            "folds contain only input PPIs".to_string()
        } else {
            format!("{} fold members are not input PPIs (e.g. {:?})", unknown.len(), &unknown[..unknown.len().min(3)])
        },
    });

    let empty: Vec<&str> = split
        .folds
        .iter()
        .filter(|(_, members)| members.is_empty())
        .map(|(name, _)| name.as_str())
        .collect();
    checks.push(CheckResult {
        name: "non_empty_folds",
        passed: !split.folds.is_empty() && empty.is_empty(),
        detail: if split.folds.is_empty() {
            "split has no folds".to_string()
        } else if empty.is_empty() {
            "every fold is non-empty".to_string()
        } else {
            format!("empty folds: {empty:?}")
        },
    });

    let ratio_check = match split.spec.as_ref().and_then(|s| s.test_fraction) {
        Some(expected) => {
            let total: usize = split.folds.values().map(BTreeSet::len).sum();
            match split.fold("test") {
                Some(test) if total > 0 => {
                    let realized = test.len() as f64 / total as f64;
                    let drift = (realized - expected).abs();
                    CheckResult {
                        name: "ratio",
                        passed: drift <= RATIO_TOLERANCE,
                        detail: format!(
                            "requested test fraction {expected}, realized {realized:.4} (drift {drift:.4}, tolerance {RATIO_TOLERANCE})"
                        ),
                    }
                }
                _ => CheckResult {
                    name: "ratio",
                    passed: false,
                    detail: "fraction-mode split lacks a usable test fold".to_string(),
                },
            }
        }
        None => CheckResult {
            name: "ratio",
            passed: true,
            detail: "no requested fraction to compare against".to_string(),
        },
    };
    checks.push(ratio_check);

    SplitValidation { checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptor::{DescriptorStore, InterfaceDescriptor};
    use crate::rng::{gen_below, seeded};
    use crate::similarity::{build_duplicate_graph, SimilarityConfig};

    fn ppi_set(ids: &[&str]) -> BTreeSet<String> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    fn numbered_ppis(n: usize) -> BTreeSet<String> {
        (0..n).map(|i| format!("{:04}_A_B", i)).collect()
    }

    /// Reference component finder: breadth-first traversal over an
    /// explicit adjacency list, no union-find.
    fn bfs_components(nodes: &[String], edges: &[(String, String)]) -> Vec<BTreeSet<String>> {
        use std::collections::VecDeque;
        let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for n in nodes {
            adj.entry(n.as_str()).or_default();
        }
        for (a, b) in edges {
            adj.entry(a.as_str()).or_default().push(b.as_str());
            adj.entry(b.as_str()).or_default().push(a.as_str());
        }
        let mut visited: BTreeSet<&str> = BTreeSet::new();
        let mut components = Vec::new();
        for n in adj.keys().copied().collect::<Vec<_>>() {
            if visited.contains(n) {
                continue;
            }
            let mut comp = BTreeSet::new();
            let mut q = VecDeque::from([n]);
            visited.insert(n);
            while let Some(cur) = q.pop_front() {
                comp.insert(cur.to_string());
                for &next in &adj[cur] {
                    if visited.insert(next) {
                        q.push_back(next);
                    }
                }
            }
            components.push(comp);
        }
        components.sort_by(|a, b| a.iter().next().cmp(&b.iter().next()));
        components
    }

    #[test]
    fn ten_ppis_split_nine_one() {
        let ppis = numbered_ppis(10);
        let spec = SplitSpec::fraction(SplitStrategy::PpiCode, 42);
        let split = split_by_ppi_code(&ppis, &spec).unwrap();
        assert_eq!(split.fold("test").unwrap().len(), 1);
        assert_eq!(split.fold("train").unwrap().len(), 9);
        assert!(validate_split(&split, &ppis).passed());
    }

    #[test]
    fn same_seed_reproduces_the_split_byte_for_byte() {
        let ppis = numbered_ppis(37);
        for strategy in [SplitStrategy::PpiCode, SplitStrategy::PdbCode] {
            let spec = SplitSpec::fraction(strategy, 7);
            let a = split_by_ppi_code(&ppis, &spec).unwrap();
            let b = split_by_ppi_code(&ppis, &spec).unwrap();
            let mut ba = Vec::new();
            let mut bb = Vec::new();
            a.write_to(&mut ba).unwrap();
            b.write_to(&mut bb).unwrap();
            assert_eq!(ba, bb);
        }
    }

    #[test]
    fn different_seeds_eventually_differ() {
        let ppis = numbered_ppis(30);
        let splits: BTreeSet<Vec<u8>> = (0..5)
            .map(|seed| {
                let spec = SplitSpec::fraction(SplitStrategy::PpiCode, seed);
                let mut buf = Vec::new();
                split_by_ppi_code(&ppis, &spec).unwrap().write_to(&mut buf).unwrap();
                buf
            })
            .collect();
        assert!(splits.len() > 1, "five seeds never changed the test fold");
    }

    #[test]
    fn ppi_code_can_separate_entry_mates_but_pdb_code_cannot() {
        // One entry contributing three PPIs plus filler entries.
        let mut ids = vec![
            "1abc_A_B".to_string(),
            "1abc_B_C".to_string(),
            "1abc_A_C".to_string(),
        ];
        for i in 0..27 {
            ids.push(format!("{:04}_A_B", i));
        }
        let ppis: BTreeSet<String> = ids.into_iter().collect();

        let mut ppi_code_separated = false;
        for seed in 0..40 {
            let spec = SplitSpec::fraction(SplitStrategy::PpiCode, seed);
            let split = split_by_ppi_code(&ppis, &spec).unwrap();
            let test = split.fold("test").unwrap();
            let in_test = ["1abc_A_B", "1abc_B_C", "1abc_A_C"]
                .iter()
                .filter(|id| test.contains(**id))
                .count();
            if in_test > 0 && in_test < 3 {
                ppi_code_separated = true;
            }

            let spec = SplitSpec {
                strategy: SplitStrategy::PdbCode,
                ..SplitSpec::fraction(SplitStrategy::PdbCode, seed)
            };
            let split = split_by_pdb_code(&ppis, &spec).unwrap();
            let test = split.fold("test").unwrap();
            let in_test = ["1abc_A_B", "1abc_B_C", "1abc_A_C"]
                .iter()
                .filter(|id| test.contains(**id))
                .count();
            assert!(in_test == 0 || in_test == 3, "pdb_code split tore an entry apart");
        }
        assert!(ppi_code_separated, "no seed ever separated the entry mates");
    }

    #[test]
    fn small_code_is_a_legal_test_fold_at_quarter_fraction() {
        let ppis = ppi_set(&["1xxx_A_B", "1xxx_A_C", "1xxx_B_C", "2yyy_A_B"]);
        let spec = SplitSpec {
            test_fraction: Some(0.25),
            ..SplitSpec::fraction(SplitStrategy::PdbCode, 0)
        };
        for seed in 0..10 {
            let split = split_by_pdb_code(&ppis, &SplitSpec { seed, ..spec.clone() }).unwrap();
            let test = split.fold("test").unwrap();
            // Whatever the seed picks, folds hold whole codes.
            assert!(validate_split(&split, &ppis).checks[0].passed);
            assert!(test.len() == 1 || test.len() == 3);
        }
    }

    #[test]
    fn most_recent_code_lands_in_test() {
        let ppis = ppi_set(&["1old_A_B", "2mid_A_B", "3new_A_B"]);
        let dates = BTreeMap::from([
            ("1old".to_string(), NaiveDate::from_ymd_opt(1999, 1, 1).unwrap()),
            ("2mid".to_string(), NaiveDate::from_ymd_opt(2005, 6, 15).unwrap()),
            ("3new".to_string(), NaiveDate::from_ymd_opt(2024, 3, 2).unwrap()),
        ]);
        let spec = SplitSpec {
            test_fraction: Some(1.0 / 3.0),
            ..SplitSpec::fraction(SplitStrategy::DepositionTime, 0)
        };
        let split = split_by_time(&ppis, &dates, &spec).unwrap();
        assert_eq!(split.fold("test").unwrap(), &ppi_set(&["3new_A_B"]));
        assert!(validate_split(&split, &ppis).passed());
    }

    #[test]
    fn date_ties_send_the_lexicographically_larger_code_to_test() {
        let ppis = ppi_set(&["1aaa_A_B", "1bbb_A_B", "1ccc_A_B"]);
        let d = NaiveDate::from_ymd_opt(2010, 5, 5).unwrap();
        let dates = BTreeMap::from([
            ("1aaa".to_string(), d),
            ("1bbb".to_string(), d),
            ("1ccc".to_string(), d),
        ]);
        let spec = SplitSpec {
            test_fraction: Some(1.0 / 3.0),
            ..SplitSpec::fraction(SplitStrategy::DepositionTime, 0)
        };
        let split = split_by_time(&ppis, &dates, &spec).unwrap();
        assert_eq!(split.fold("test").unwrap(), &ppi_set(&["1ccc_A_B"]));
    }

    #[test]
    fn missing_dates_are_named() {
        let ppis = ppi_set(&["1aaa_A_B", "1bbb_A_B"]);
        let dates = BTreeMap::from([(
            "1aaa".to_string(),
            NaiveDate::from_ymd_opt(2010, 5, 5).unwrap(),
        )]);
        let spec = SplitSpec::fraction(SplitStrategy::DepositionTime, 0);
        match split_by_time(&ppis, &dates, &spec) {
            Err(SplitError::MissingDate { codes }) => assert_eq!(codes, vec!["1bbb"]),
            other => panic!("expected MissingDate, got {other:?}"),
        }
    }

    #[test]
    fn kfold_mode_is_rejected_for_time_splits() {
        let spec = SplitSpec {
            strategy: SplitStrategy::DepositionTime,
            test_fraction: None,
            n_folds: Some(3),
            seed: 0,
            packing: Packing::Random,
        };
        assert!(matches!(
            spec.validate(),
            Err(SplitError::BadSpec { .. })
        ));
    }

    fn clusters_of(assignments: &[(&str, usize)]) -> SequenceClusters {
        let n = assignments.iter().map(|(_, c)| c + 1).max().unwrap_or(0);
        SequenceClusters {
            assignments: assignments
                .iter()
                .map(|(k, c)| (k.to_string(), *c))
                .collect(),
            representatives: (0..n).map(|i| format!("rep{i}")).collect(),
            min_seq_id: 0.3,
            tool_version: None,
        }
    }

    #[test]
    fn unrelated_ppis_form_two_sequence_groups() {
        let ppis = ppi_set(&["1aaa_A_B", "2bbb_C_D"]);
        let clusters = clusters_of(&[
            ("1aaa_A", 0),
            ("1aaa_B", 1),
            ("2bbb_C", 2),
            ("2bbb_D", 3),
        ]);
        let groups = group_by_sequence_components(&ppis, &clusters).unwrap();
        assert_eq!(groups.len(), 2);
    }

    #[test]
    fn shared_cluster_bridges_two_ppis_into_one_group() {
        let ppis = ppi_set(&["1aaa_A_B", "2bbb_C_D"]);
        // B and C sit in one cluster, which connects the two PPIs.
        let clusters = clusters_of(&[
            ("1aaa_A", 0),
            ("1aaa_B", 1),
            ("2bbb_C", 1),
            ("2bbb_D", 2),
        ]);
        let groups = group_by_sequence_components(&ppis, &clusters).unwrap();
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].members.len(), 2);
    }

    #[test]
    fn unclustered_protein_is_an_error() {
        let ppis = ppi_set(&["1aaa_A_B"]);
        let clusters = clusters_of(&[("1aaa_A", 0)]);
        match group_by_sequence_components(&ppis, &clusters) {
            Err(SplitError::UnclusteredProtein { keys }) => {
                assert_eq!(keys, vec!["1aaa_B"]);
            }
            other => panic!("expected UnclusteredProtein, got {other:?}"),
        }
    }

    #[test]
    fn random_sequence_groups_match_a_bfs_oracle() {
        let mut rng = seeded(2024);
        for round in 0..5 {
            // Random PPIs over a small pool of entries and chains, plus a
            // random cluster assignment for every protein.
            let mut ppis: BTreeSet<String> = BTreeSet::new();
            while ppis.len() < 50 {
                let code = format!("{:04}", gen_below(&mut rng, 20));
                let a = (b'A' + gen_below(&mut rng, 6) as u8) as char;
                let b = (b'A' + gen_below(&mut rng, 6) as u8) as char;
                if a == b {
                    continue;
                }
                let (a, b) = if a < b { (a, b) } else { (b, a) };
                ppis.insert(format!("{code}_{a}_{b}"));
            }
            let mut proteins: BTreeSet<String> = BTreeSet::new();
            for id in &ppis {
                let p = PpiId::from_str(id).unwrap();
                proteins.insert(format!("{}_{}", p.pdb_code, p.chain_a));
                proteins.insert(format!("{}_{}", p.pdb_code, p.chain_b));
            }
            let n_clusters = 12;
            let assignments: Vec<(String, usize)> = proteins
                .iter()
                .map(|p| (p.clone(), gen_below(&mut rng, n_clusters) as usize))
                .collect();
            let clusters = SequenceClusters {
                assignments: assignments.iter().cloned().collect(),
                representatives: (0..n_clusters).map(|i| format!("rep{i}")).collect(),
                min_seq_id: 0.3,
                tool_version: None,
            };

            let got = group_by_sequence_components(&ppis, &clusters).unwrap();

            // Oracle: enumerate every edge explicitly and BFS, then map
            // each PPI to the component of its first protein.
            let nodes: Vec<String> = proteins.iter().cloned().collect();
            let mut edges: Vec<(String, String)> = Vec::new();
            for id in &ppis {
                let p = PpiId::from_str(id).unwrap();
                edges.push((
                    format!("{}_{}", p.pdb_code, p.chain_a),
                    format!("{}_{}", p.pdb_code, p.chain_b),
                ));
            }
            let by_cluster: BTreeMap<usize, Vec<&String>> = assignments.iter().fold(
                BTreeMap::new(),
                |mut acc, (p, c)| {
                    acc.entry(*c).or_default().push(p);
                    acc
                },
            );
            for members in by_cluster.values() {
                for pair in members.windows(2) {
                    edges.push((pair[0].clone(), pair[1].clone()));
                }
            }
            let comps = bfs_components(&nodes, &edges);
            let mut want_sets: Vec<BTreeSet<String>> = Vec::new();
            for comp in &comps {
                let members: BTreeSet<String> = ppis
                    .iter()
                    .filter(|id| {
                        let p = PpiId::from_str(id).unwrap();
                        comp.contains(&format!("{}_{}", p.pdb_code, p.chain_a))
                    })
                    .cloned()
                    .collect();
                if !members.is_empty() {
                    want_sets.push(members);
                }
            }
            want_sets.sort_by(|a, b| a.iter().next().cmp(&b.iter().next()));
            let got_sets: Vec<BTreeSet<String>> =
                got.iter().map(|g| g.members.clone()).collect();
            assert_eq!(got_sets, want_sets, "round {round}");
        }
    }

    fn graph_from_edges(nodes: &[&str], edges: &[(&str, &str)]) -> NearDuplicateGraph {
        NearDuplicateGraph {
            nodes: nodes.iter().map(|s| s.to_string()).collect(),
            edges: edges
                .iter()
                .map(|(a, b)| crate::similarity::DuplicateEdge {
                    a: a.to_string(),
                    b: b.to_string(),
                    distance: 0.01,
                })
                .collect(),
            tau: 0.04,
            config_fingerprint: "cafecafecafecafe".to_string(),
        }
    }

    #[test]
    fn edgeless_graph_yields_singleton_groups() {
        let g = graph_from_edges(&["0001_A_B", "0002_A_B", "0003_A_B"], &[]);
        let groups = group_by_interface_components(&g);
        assert_eq!(groups.len(), 3);
        assert!(groups.iter().all(|g| g.members.len() == 1));
    }

    #[test]
    fn clique_collapses_to_one_group() {
        let g = graph_from_edges(
            &["0001_A_B", "0002_A_B", "0003_A_B"],
            &[
                ("0001_A_B", "0002_A_B"),
                ("0001_A_B", "0003_A_B"),
                ("0002_A_B", "0003_A_B"),
            ],
        );
        let groups = group_by_interface_components(&g);
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].members.len(), 3);
    }

    #[test]
    fn random_graph_components_match_a_bfs_oracle() {
        let mut rng = seeded(31);
        let nodes: Vec<String> = (0..60).map(|i| format!("{:04}_A_B", i)).collect();
        let mut edges: Vec<(String, String)> = Vec::new();
        for _ in 0..45 {
            let a = gen_below(&mut rng, 60) as usize;
            let b = gen_below(&mut rng, 60) as usize;
            if a != b {
                edges.push((nodes[a.min(b)].clone(), nodes[a.max(b)].clone()));
            }
        }
        let g = graph_from_edges(
            &nodes.iter().map(String::as_str).collect::<Vec<_>>(),
            &edges
                .iter()
                .map(|(a, b)| (a.as_str(), b.as_str()))
                .collect::<Vec<_>>(),
        );
        let got: Vec<BTreeSet<String>> = group_by_interface_components(&g)
            .into_iter()
            .map(|g| g.members)
            .collect();
        let want = bfs_components(&nodes, &edges);
        assert_eq!(got, want);
    }

    #[test]
    fn interface_component_splits_cut_no_duplicate_edges() {
        // Store with clusters of exact copies so the graph has real edges.
        let mut store = DescriptorStore::new("cafecafecafecafe".to_string());
        for i in 0..40 {
            let family = i / 4;
            let mut v = vec![0.0; 21];
            v[family % 21] = 1.0 + family as f64;
            store
                .insert(InterfaceDescriptor {
                    ppi_id: format!("{:04}_A_B", i).parse::<PpiId>().unwrap(),
                    n_residues: 4,
                    vector: v,
                    config_fingerprint: "cafecafecafecafe".to_string(),
                })
                .unwrap();
        }
        let graph = build_duplicate_graph(&store, &SimilarityConfig::default()).unwrap();
        assert!(!graph.edges.is_empty());
        let ppis: BTreeSet<String> = store.ids().map(str::to_string).collect();
        for seed in 0..8 {
            let spec = SplitSpec::fraction(SplitStrategy::InterfaceComponent, seed);
            let split = split_by_interface_components(&ppis, &graph, &spec).unwrap();
            assert!(validate_split(&split, &ppis).passed());
            let test = split.fold("test").unwrap();
            let train = split.fold("train").unwrap();
            for e in &graph.edges {
                let crosses = (test.contains(&e.a) && train.contains(&e.b))
                    || (test.contains(&e.b) && train.contains(&e.a));
                assert!(!crosses, "edge {} - {} crosses folds", e.a, e.b);
            }
        }
    }

    #[test]
    fn oversized_group_degrades_with_a_warning_not_a_failure() {
        // One group holds 95% of PPIs.
        let big = PpiGroup {
            group_id: 0,
            members: (0..95).map(|i| format!("{:04}_A_B", i)).collect(),
        };
        let rest: Vec<PpiGroup> = (0..5)
            .map(|i| PpiGroup {
                group_id: 1 + i,
                members: BTreeSet::from([format!("9{:03}_A_B", i)]),
            })
            .collect();
        let mut groups = vec![big];
        groups.extend(rest);

        let spec = SplitSpec::fraction(SplitStrategy::InterfaceComponent, 3);
        let split = split_groups(&groups, &spec).unwrap();
        let provenance = split.provenance.as_ref().unwrap();
        assert!(!provenance.warnings.is_empty(), "expected a ratio warning");
        let test = split.fold("test").unwrap();
        assert!(!test.is_empty());
        assert!(test.iter().all(|id| id.starts_with('9')), "test drew from the big group");
    }

    #[test]
    fn largest_first_packs_closer_to_the_target() {
        let groups: Vec<PpiGroup> = (0..20)
            .map(|i| PpiGroup {
                group_id: i,
                members: ((i * 10)..(i * 10 + 1 + i % 5))
                    .map(|j| format!("{:04}_A_B", j))
                    .collect(),
            })
            .collect();
        let spec = SplitSpec {
            packing: Packing::LargestFirst,
            ..SplitSpec::fraction(SplitStrategy::PdbCode, 0)
        };
        let split = split_groups(&groups, &spec).unwrap();
        let total: usize = groups.iter().map(|g| g.members.len()).sum();
        let realized = split.fold("test").unwrap().len() as f64 / total as f64;
        assert!(realized <= 0.10 + 1e-12, "largest_first overshot: {realized}");
        assert!(realized > 0.0);
    }

    #[test]
    fn kfold_round_robin_balances_singletons() {
        let ppis = numbered_ppis(12);
        let spec = SplitSpec {
            strategy: SplitStrategy::PpiCode,
            test_fraction: None,
            n_folds: Some(3),
            seed: 9,
            packing: Packing::Random,
        };
        let split = split_by_ppi_code(&ppis, &spec).unwrap();
        assert_eq!(split.folds.len(), 3);
        for members in split.folds.values() {
            assert_eq!(members.len(), 4);
        }
        assert!(validate_split(&split, &ppis).passed());
    }

    #[test]
    fn every_strategy_and_seed_yields_a_valid_split() {
        let ppis = numbered_ppis(40);
        for seed in 0..6 {
            for strategy in [SplitStrategy::PpiCode, SplitStrategy::PdbCode] {
                let spec = SplitSpec::fraction(strategy, seed);
                let split = match strategy {
                    SplitStrategy::PpiCode => split_by_ppi_code(&ppis, &spec).unwrap(),
                    SplitStrategy::PdbCode => split_by_pdb_code(&ppis, &spec).unwrap(),
                    _ => unreachable!(),
                };
                let v = validate_split(&split, &ppis);
                assert!(v.passed(), "{strategy:?} seed {seed}: {:?}", v.checks);
            }
        }
    }

    #[test]
    fn split_file_round_trips() {
        let ppis = numbered_ppis(15);
        let spec = SplitSpec::fraction(SplitStrategy::PpiCode, 11);
        let split = split_by_ppi_code(&ppis, &spec).unwrap();
        let mut buf = Vec::new();
        split.write_to(&mut buf).unwrap();
        let back = Split::read_from(buf.as_slice()).unwrap();
        assert_eq!(split, back);
        // A second serialization is byte-identical.
        let mut again = Vec::new();
        back.write_to(&mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn externally_authored_folds_only_files_are_accepted() {
        let text = r#"{"folds": {"train": ["0001_A_B", "0002_A_B"], "test": ["0003_A_B"]}}"#;
        let split = Split::read_from(text.as_bytes()).unwrap();
        assert!(split.spec.is_none());
        assert_eq!(split.fold("test").unwrap().len(), 1);
        let ppis = ppi_set(&["0001_A_B", "0002_A_B", "0003_A_B"]);
        assert!(validate_split(&split, &ppis).passed());
    }

    #[test]
    fn validation_calls_out_each_defect() {
        let ppis = ppi_set(&["0001_A_B", "0002_A_B", "0003_A_B"]);
        // 0001 duplicated, 0003 missing, plus a stranger.
        let split = Split {
            spec: None,
            folds: BTreeMap::from([
                (
                    "train".to_string(),
                    ppi_set(&["0001_A_B", "0002_A_B", "ffff_A_B"]),
                ),
                ("test".to_string(), ppi_set(&["0001_A_B"])),
            ]),
            provenance: None,
        };
        let v = validate_split(&split, &ppis);
        let by_name: BTreeMap<&str, bool> =
            v.checks.iter().map(|c| (c.name, c.passed)).collect();
        assert!(!by_name["disjoint"]);
        assert!(!by_name["coverage"]);
        assert!(!by_name["no_unknown_ids"]);
        assert!(by_name["non_empty_folds"]);
    }

    #[test]
    fn empty_input_is_an_error() {
        let spec = SplitSpec::fraction(SplitStrategy::PpiCode, 0);
        assert!(matches!(
            split_by_ppi_code(&BTreeSet::new(), &spec),
            Err(SplitError::EmptyInput)
        ));
    }
}
