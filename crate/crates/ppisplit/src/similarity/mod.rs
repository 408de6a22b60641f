//! Near-duplicate detection over interface descriptors, threshold
//! calibration, sequence alignment, and sequence clustering.

pub mod align;
pub mod cluster;
pub mod external;

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::descriptor::{DescriptorStore, InterfaceDescriptor};

pub use align::{align_global, AlignError, AlignmentParams, AlignmentResult, ALPHABET, BLOSUM62};
pub use cluster::{cluster_sequences, SequenceClusters};
pub use external::{external_cluster_adapter, ExternalClusterError};

/// Near-duplicate decision rule: two interfaces are near duplicates when
/// the Euclidean distance between their descriptors is strictly below
/// `duplicate_threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimilarityConfig {
    pub duplicate_threshold: f64,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig {
            duplicate_threshold: 0.04,
        }
    }
}

impl SimilarityConfig {
    pub fn validate(&self) -> Result<(), SimilarityError> {
        if self.duplicate_threshold.is_finite() && self.duplicate_threshold >= 0.0 {
            Ok(())
        } else {
            Err(SimilarityError::BadThreshold {
                tau: self.duplicate_threshold,
            })
        }
    }
}

#[derive(Debug, Error)]
pub enum SimilarityError {
    #[error("descriptor configs differ ({left} vs {right}); re-embed with one config")]
    ConfigMismatch { left: String, right: String },
    #[error("duplicate threshold must be a finite non-negative number (got {tau})")]
    BadThreshold { tau: f64 },
    #[error("threshold calibration needs both duplicate and non-duplicate examples")]
    DegenerateLabels,
    #[error("graph file is malformed at line {line}: {reason}")]
    MalformedGraph { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Euclidean distance between two descriptors of the same configuration.
pub fn idist_distance(
    d1: &InterfaceDescriptor,
    d2: &InterfaceDescriptor,
) -> Result<f64, SimilarityError> {
    if d1.config_fingerprint != d2.config_fingerprint {
        return Err(SimilarityError::ConfigMismatch {
            left: d1.config_fingerprint.clone(),
            right: d2.config_fingerprint.clone(),
        });
    }
    Ok(euclidean(&d1.vector, &d2.vector))
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        sum += d * d;
    }
    sum.sqrt()
}

/// One near-duplicate hit: a training-side interface and its distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub ppi_id: String,
    pub distance: f64,
}

fn check_compatible(
    train: &DescriptorStore,
    test: &DescriptorStore,
) -> Result<(), SimilarityError> {
    if train.config_fingerprint() != test.config_fingerprint() {
        return Err(SimilarityError::ConfigMismatch {
            left: train.config_fingerprint().to_string(),
            right: test.config_fingerprint().to_string(),
        });
    }
    Ok(())
}

/// Spatial index over descriptor vectors: a uniform grid with cell edge
/// tau on the three highest-variance dimensions. Queries scan every cell
/// that can contain a point within tau of the probe, so lookups are exact;
/// the grid only prunes.
struct DescriptorGrid<'a> {
    tau: f64,
    dims: [usize; 3],
    cells: HashMap<[i64; 3], Vec<&'a InterfaceDescriptor>>,
}

impl<'a> DescriptorGrid<'a> {
    /// Builds the grid, or None when gridding cannot help: a non-positive
    /// edge, or so few occupied cells that brute force is just as fast.
    fn build(store: &'a DescriptorStore, tau: f64) -> Option<DescriptorGrid<'a>> {
        if !(tau > 0.0) || !tau.is_finite() || store.is_empty() {
            return None;
        }
        let dim = store.iter().next().map(|d| d.vector.len())?;
        if dim < 3 {
            return None;
        }
        let n = store.len() as f64;
        let mut mean = vec![0.0; dim];
        for d in store.iter() {
            for (m, v) in mean.iter_mut().zip(&d.vector) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut variance = vec![0.0; dim];
        for d in store.iter() {
            for k in 0..dim {
                let dv = d.vector[k] - mean[k];
                variance[k] += dv * dv;
            }
        }
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&i, &j| variance[j].total_cmp(&variance[i]).then(i.cmp(&j)));
        let dims = [order[0], order[1], order[2]];

        let mut cells: HashMap<[i64; 3], Vec<&InterfaceDescriptor>> = HashMap::new();
        for d in store.iter() {
            cells.entry(Self::cell_of(&d.vector, dims, tau)).or_default().push(d);
        }
        if cells.len() < 4 {
            return None;
        }
        Some(DescriptorGrid { tau, dims, cells })
    }

    fn cell_of(v: &[f64], dims: [usize; 3], tau: f64) -> [i64; 3] {
        let mut c = [0i64; 3];
        for (k, &d) in dims.iter().enumerate() {
            c[k] = (v[d] / tau).floor() as i64;
        }
        c
    }

    /// All stored descriptors within strict distance tau of the probe.
    ///
    /// Per grid dimension a stored point u with |u - v| < tau satisfies
    /// v - tau < u < v + tau. Cell assignment floor(x / tau) is monotone
    /// in x (division by a positive constant and rounding both preserve
    /// order), so nudging the bounds outward by one ulp before taking
    /// their cells yields a range that provably contains u's cell. The
    /// scan is therefore exhaustive and the result matches brute force.
    fn query(&self, probe: &InterfaceDescriptor) -> Vec<Hit> {
        let mut lo = [0i64; 3];
        let mut hi = [0i64; 3];
        for (k, &d) in self.dims.iter().enumerate() {
            let v = probe.vector[d];
            lo[k] = (((v - self.tau).next_down()) / self.tau).floor() as i64;
            hi[k] = (((v + self.tau).next_up()) / self.tau).floor() as i64;
        }
        let mut hits = Vec::new();
        for x in lo[0]..=hi[0] {
            for y in lo[1]..=hi[1] {
                for z in lo[2]..=hi[2] {
                    let Some(bucket) = self.cells.get(&[x, y, z]) else {
                        continue;
                    };
                    for d in bucket {
                        let dist = euclidean(&probe.vector, &d.vector);
                        if dist < self.tau {
                            hits.push(Hit {
                                ppi_id: d.ppi_id.to_string(),
                                distance: dist,
                            });
                        }
                    }
                }
            }
        }
        sort_hits(&mut hits);
        hits
    }
}

fn sort_hits(hits: &mut [Hit]) {
    hits.sort_by(|a, b| a.distance.total_cmp(&b.distance).then_with(|| a.ppi_id.cmp(&b.ppi_id)));
}

fn brute_query(train: &DescriptorStore, probe: &InterfaceDescriptor, tau: f64) -> Vec<Hit> {
    let mut hits = Vec::new();
    for d in train.iter() {
        let dist = euclidean(&probe.vector, &d.vector);
        if dist < tau {
            hits.push(Hit {
                ppi_id: d.ppi_id.to_string(),
                distance: dist,
            });
        }
    }
    sort_hits(&mut hits);
    hits
}

/// For every test descriptor, all training descriptors at distance
/// strictly below the threshold, sorted by distance then id.
///
/// Results are identical to an all-pairs scan; the grid index is only an
/// accelerator. Queries run in parallel over test ids and the output map
/// is keyed, so worker count cannot change the result.
pub fn query_near_duplicates(
    train: &DescriptorStore,
    test: &DescriptorStore,
    config: &SimilarityConfig,
) -> Result<BTreeMap<String, Vec<Hit>>, SimilarityError> {
    config.validate()?;
    check_compatible(train, test)?;
    let tau = config.duplicate_threshold;
    let grid = DescriptorGrid::build(train, tau);
    let probes: Vec<&InterfaceDescriptor> = test.iter().collect();
    let results: Vec<(String, Vec<Hit>)> = probes
        .par_iter()
        .map(|probe| {
            let hits = match &grid {
                Some(g) => g.query(probe),
                None => brute_query(train, probe, tau),
            };
            (probe.ppi_id.to_string(), hits)
        })
        .collect();
    Ok(results.into_iter().collect())
}

/// Undirected near-duplicate graph over one descriptor store.
#[derive(Debug, Clone, PartialEq)]
pub struct NearDuplicateGraph {
    /// All interface ids, sorted; isolated interfaces appear here too.
    pub nodes: Vec<String>,
    /// Edges with `a < b`, sorted by (a, b); one entry per unordered pair.
    pub edges: Vec<DuplicateEdge>,
    pub tau: f64,
    pub config_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DuplicateEdge {
    pub a: String,
    pub b: String,
    pub distance: f64,
}

/// Builds the near-duplicate graph of a store: an edge per unordered pair
/// at distance strictly below the threshold, no self loops.
pub fn build_duplicate_graph(
    store: &DescriptorStore,
    config: &SimilarityConfig,
) -> Result<NearDuplicateGraph, SimilarityError> {
    let hits_by_id = query_near_duplicates(store, store, config)?;
    let mut edges = Vec::new();
    for (id, hits) in &hits_by_id {
        for hit in hits {
            // Keep each unordered pair once and drop self hits.
            if *id < hit.ppi_id {
                edges.push(DuplicateEdge {
                    a: id.clone(),
                    b: hit.ppi_id.clone(),
                    distance: hit.distance,
                });
            }
        }
    }
    edges.sort_by(|e, f| e.a.cmp(&f.a).then_with(|| e.b.cmp(&f.b)));
    Ok(NearDuplicateGraph {
        nodes: store.ids().map(str::to_string).collect(),
        edges,
        tau: config.duplicate_threshold,
        config_fingerprint: store.config_fingerprint().to_string(),
    })
}

impl NearDuplicateGraph {
    /// Writes the graph as text: a header, one `node` line per interface,
    /// one `edge` line per near-duplicate pair. Node lines make isolated
    /// interfaces survive a round trip.
    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(
            w,
            "ppisplit.nndup-graph.v1 tau={:.16e} config={} n_nodes={} n_edges={}",
            self.tau,
            self.config_fingerprint,
            self.nodes.len(),
            self.edges.len()
        )?;
        for n in &self.nodes {
            writeln!(w, "node {n}")?;
        }
        for e in &self.edges {
            writeln!(w, "edge {} {} {:.16e}", e.a, e.b, e.distance)?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<NearDuplicateGraph, SimilarityError> {
        let mut lines = r.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| SimilarityError::MalformedGraph {
                line: 1,
                reason: "empty file".into(),
            })
            .and_then(|(i, l)| l.map(|l| (i, l)).map_err(SimilarityError::Io))?;
        let bad = |line: usize, reason: &str| SimilarityError::MalformedGraph {
            line,
            reason: reason.to_string(),
        };
        let mut fields = header.split_whitespace();
        if fields.next() != Some("ppisplit.nndup-graph.v1") {
            return Err(bad(1, "unrecognized header"));
        }
        let mut tau = None;
        let mut config = None;
        for f in fields {
            if let Some(v) = f.strip_prefix("tau=") {
                tau = v.parse::<f64>().ok();
            } else if let Some(v) = f.strip_prefix("config=") {
                config = Some(v.to_string());
            }
        }
        let tau = tau.ok_or_else(|| bad(1, "missing or unparsable tau"))?;
        let config_fingerprint = config.ok_or_else(|| bad(1, "missing config fingerprint"))?;

        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        for (i, line) in lines {
            let line = line?;
            let lineno = i + 1;
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("node") => {
                    let id = parts.next().ok_or_else(|| bad(lineno, "node line without id"))?;
                    nodes.push(id.to_string());
                }
                Some("edge") => {
                    let a = parts.next().ok_or_else(|| bad(lineno, "edge line missing fields"))?;
                    let b = parts.next().ok_or_else(|| bad(lineno, "edge line missing fields"))?;
                    let d = parts
                        .next()
                        .and_then(|s| s.parse::<f64>().ok())
                        .ok_or_else(|| bad(lineno, "edge line missing or unparsable distance"))?;
                    edges.push(DuplicateEdge {
                        a: a.to_string(),
                        b: b.to_string(),
                        distance: d,
                    });
                }
                Some(other) => {
                    return Err(bad(lineno, &format!("unrecognized record kind {other:?}")))
                }
                None => continue,
            }
        }
        Ok(NearDuplicateGraph {
            nodes,
            edges,
            tau,
            config_fingerprint,
        })
    }
}

/// A labeled example for threshold calibration.
#[derive(Debug, Clone)]
pub struct LabeledPair {
    pub distance: f64,
    pub is_duplicate: bool,
}

/// Calibration outcome: the chosen threshold and its quality on the
/// labeled pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub tau: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub candidates_evaluated: usize,
}

fn f1_counts(pairs: &[LabeledPair], tau: f64) -> (f64, f64, f64) {
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut fne = 0u64;
    for p in pairs {
        let predicted = p.distance < tau;
        match (predicted, p.is_duplicate) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fne += 1,
            (false, false) => {}
        }
    }
    let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = if tp + fne == 0 { 0.0 } else { tp as f64 / (tp + fne) as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    (f1, precision, recall)
}

/// Picks the threshold maximizing F1 over the candidate set given by the
/// midpoints of consecutive sorted pair distances. Ties go to the
/// smallest candidate. A duplicate is predicted when distance < tau.
pub fn calibrate_threshold(pairs: &[LabeledPair]) -> Result<Calibration, SimilarityError> {
    let n_dup = pairs.iter().filter(|p| p.is_duplicate).count();
    if n_dup == 0 || n_dup == pairs.len() {
        return Err(SimilarityError::DegenerateLabels);
    }
    let mut distances: Vec<f64> = pairs.iter().map(|p| p.distance).collect();
    distances.sort_by(f64::total_cmp);
    let mut candidates: Vec<f64> = distances
        .windows(2)
        .map(|w| w[0] + (w[1] - w[0]) / 2.0)
        .collect();
    candidates.dedup();

    let mut best: Option<Calibration> = None;
    for tau in candidates.iter().copied() {
        let (f1, precision, recall) = f1_counts(pairs, tau);
        let better = match &best {
            None => true,
            Some(b) => f1 > b.f1,
        };
        if better {
            best = Some(Calibration {
                tau,
                f1,
                precision,
                recall,
                candidates_evaluated: candidates.len(),
            });
        }
    }
    best.ok_or(SimilarityError::DegenerateLabels)
}

/// Computes distances for descriptor pairs and calibrates on them.
pub fn calibrate_threshold_on_descriptors(
    pairs: &[(InterfaceDescriptor, InterfaceDescriptor, bool)],
) -> Result<Calibration, SimilarityError> {
    let labeled = pairs
        .iter()
        .map(|(a, b, dup)| {
            Ok(LabeledPair {
                distance: idist_distance(a, b)?,
                is_duplicate: *dup,
            })
        })
        .collect::<Result<Vec<_>, SimilarityError>>()?;
    calibrate_threshold(&labeled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structio::PpiId;

    fn descriptor(id: &str, vector: Vec<f64>) -> InterfaceDescriptor {
        InterfaceDescriptor {
            ppi_id: id.parse::<PpiId>().unwrap(),
            n_residues: 4,
            vector,
            config_fingerprint: "cafecafecafecafe".to_string(),
        }
    }

    fn store_of(descriptors: Vec<InterfaceDescriptor>) -> DescriptorStore {
        let mut store = DescriptorStore::new("cafecafecafecafe".to_string());
        for d in descriptors {
            store.insert(d).unwrap();
        }
        store
    }

    fn random_store(n: usize, dim: usize, seed: u64, spread: f64) -> DescriptorStore {
        use crate::rng::{gen_unit, seeded};
        let mut rng = seeded(seed);
        let mut ds = Vec::new();
        for i in 0..n {
            let v: Vec<f64> = (0..dim).map(|_| gen_unit(&mut rng) * spread).collect();
            ds.push(descriptor(&format!("{:04}_A_B", i), v));
        }
        store_of(ds)
    }

    /// Reference scan: all pairs, no index.
    fn brute_map(
        train: &DescriptorStore,
        test: &DescriptorStore,
        tau: f64,
    ) -> BTreeMap<String, Vec<Hit>> {
        let mut out = BTreeMap::new();
        for probe in test.iter() {
            out.insert(probe.ppi_id.to_string(), brute_query(train, probe, tau));
        }
        out
    }

    #[test]
    fn distance_of_descriptor_with_itself_is_zero() {
        let d = descriptor("1abc_A_B", vec![0.25; 21]);
        assert_eq!(idist_distance(&d, &d).unwrap(), 0.0);
    }

    #[test]
    fn distance_of_unit_basis_vectors_is_sqrt_two() {
        let mut u = vec![0.0; 21];
        let mut v = vec![0.0; 21];
        u[0] = 1.0;
        v[1] = 1.0;
        let du = descriptor("1abc_A_B", u);
        let dv = descriptor("1abc_C_D", v);
        assert_eq!(idist_distance(&du, &dv).unwrap(), 2.0f64.sqrt());
    }

    #[test]
    fn distance_rejects_mismatched_configs() {
        let mut a = descriptor("1abc_A_B", vec![0.0; 21]);
        let b = descriptor("1abc_C_D", vec![0.0; 21]);
        a.config_fingerprint = "0000000000000000".to_string();
        assert!(matches!(
            idist_distance(&a, &b),
            Err(SimilarityError::ConfigMismatch { .. })
        ));
    }

    #[test]
    fn far_apart_descriptors_yield_empty_hit_lists() {
        let train = store_of(vec![descriptor("0001_A_B", vec![0.0; 21])]);
        let test = store_of(vec![descriptor("0002_A_B", vec![10.0; 21])]);
        let hits = query_near_duplicates(&train, &test, &SimilarityConfig::default()).unwrap();
        assert!(hits["0002_A_B"].is_empty());
    }

    #[test]
    fn querying_a_store_against_itself_hits_every_id_at_zero() {
        let store = random_store(40, 21, 7, 1.0);
        let hits = query_near_duplicates(&store, &store, &SimilarityConfig::default()).unwrap();
        for (id, list) in &hits {
            assert!(
                list.iter().any(|h| h.ppi_id == *id && h.distance == 0.0),
                "{id} did not hit its own copy"
            );
        }
    }

    #[test]
    fn grid_query_equals_brute_force_on_random_stores() {
        // Spread chosen so cells are well occupied at each tau.
        let train = random_store(300, 21, 11, 0.2);
        let test = random_store(80, 21, 13, 0.2);
        for tau in [0.01, 0.04, 0.1, 0.3, 1.0] {
            let config = SimilarityConfig {
                duplicate_threshold: tau,
            };
            let got = query_near_duplicates(&train, &test, &config).unwrap();
            let want = brute_map(&train, &test, tau);
            assert_eq!(got, want, "mismatch at tau={tau}");
        }
    }

    #[test]
    fn zero_threshold_matches_nothing() {
        let store = random_store(10, 21, 3, 1.0);
        let config = SimilarityConfig {
            duplicate_threshold: 0.0,
        };
        let hits = query_near_duplicates(&store, &store, &config).unwrap();
        assert!(hits.values().all(|v| v.is_empty()));
    }

    #[test]
    fn graph_of_single_store_has_one_node_no_edges() {
        let store = store_of(vec![descriptor("0001_A_B", vec![0.5; 21])]);
        let g = build_duplicate_graph(&store, &SimilarityConfig::default()).unwrap();
        assert_eq!(g.nodes, vec!["0001_A_B"]);
        assert!(g.edges.is_empty());
    }

    #[test]
    fn exact_copies_form_a_clique() {
        let v = vec![0.3; 21];
        let store = store_of(
            (0..5)
                .map(|i| descriptor(&format!("{:04}_A_B", i), v.clone()))
                .collect(),
        );
        let g = build_duplicate_graph(&store, &SimilarityConfig::default()).unwrap();
        assert_eq!(g.edges.len(), 5 * 4 / 2);
        assert!(g.edges.iter().all(|e| e.distance == 0.0 && e.a < e.b));
    }

    #[test]
    fn graph_edges_equal_brute_force_thresholding() {
        let store = random_store(150, 21, 17, 0.05);
        let config = SimilarityConfig {
            duplicate_threshold: 0.08,
        };
        let g = build_duplicate_graph(&store, &config).unwrap();
        let all: Vec<&InterfaceDescriptor> = store.iter().collect();
        let mut want = Vec::new();
        for i in 0..all.len() {
            for j in (i + 1)..all.len() {
                let d = euclidean(&all[i].vector, &all[j].vector);
                if d < config.duplicate_threshold {
                    let (a, b) = (all[i].ppi_id.to_string(), all[j].ppi_id.to_string());
                    let (a, b) = if a < b { (a, b) } else { (b, a) };
                    want.push(DuplicateEdge { a, b, distance: d });
                }
            }
        }
        want.sort_by(|e, f| e.a.cmp(&f.a).then_with(|| e.b.cmp(&f.b)));
        assert_eq!(g.edges, want);
        assert!(!want.is_empty(), "fixture should produce some edges");
    }

    #[test]
    fn graph_round_trips_through_text() {
        let store = random_store(30, 21, 23, 0.1);
        let config = SimilarityConfig {
            duplicate_threshold: 0.15,
        };
        let g = build_duplicate_graph(&store, &config).unwrap();
        let mut buf = Vec::new();
        g.write_to(&mut buf).unwrap();
        let back = NearDuplicateGraph::read_from(buf.as_slice()).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn separable_labels_calibrate_to_perfect_f1() {
        let mut pairs = Vec::new();
        for d in [0.001, 0.004, 0.008, 0.01] {
            pairs.push(LabeledPair {
                distance: d,
                is_duplicate: true,
            });
        }
        for d in [0.1, 0.2, 0.5, 0.9] {
            pairs.push(LabeledPair {
                distance: d,
                is_duplicate: false,
            });
        }
        let c = calibrate_threshold(&pairs).unwrap();
        assert_eq!(c.f1, 1.0);
        assert!(c.tau > 0.01 && c.tau < 0.1, "tau={}", c.tau);
    }

    #[test]
    fn inverted_labels_report_imperfect_f1_honestly() {
        let pairs: Vec<LabeledPair> = [0.001, 0.004, 0.008]
            .iter()
            .map(|&d| LabeledPair {
                distance: d,
                is_duplicate: false,
            })
            .chain([0.1, 0.2, 0.5].iter().map(|&d| LabeledPair {
                distance: d,
                is_duplicate: true,
            }))
            .collect();
        let c = calibrate_threshold(&pairs).unwrap();
        assert!(c.f1 < 1.0);
    }

    #[test]
    fn calibration_matches_exhaustive_sweep_on_noisy_labels() {
        use crate::rng::{gen_unit, seeded};
        let mut rng = seeded(99);
        let mut pairs = Vec::new();
        // Overlapping classes so the optimum is not at a clean boundary.
        for _ in 0..60 {
            pairs.push(LabeledPair {
                distance: gen_unit(&mut rng) * 0.08,
                is_duplicate: true,
            });
            pairs.push(LabeledPair {
                distance: 0.03 + gen_unit(&mut rng) * 0.4,
                is_duplicate: false,
            });
        }
        let got = calibrate_threshold(&pairs).unwrap();

        // Independent sweep over the same candidate definition.
        let mut ds: Vec<f64> = pairs.iter().map(|p| p.distance).collect();
        ds.sort_by(f64::total_cmp);
        let mut best: Option<(f64, f64)> = None;
        for w in ds.windows(2) {
            let tau = w[0] + (w[1] - w[0]) / 2.0;
            let (f1, _, _) = f1_counts(&pairs, tau);
            let better = match best {
                None => true,
                Some((bf1, btau)) => f1 > bf1 || (f1 == bf1 && tau < btau),
            };
            if better {
                best = Some((f1, tau));
            }
        }
        let (want_f1, want_tau) = best.unwrap();
        assert_eq!(got.f1, want_f1);
        assert_eq!(got.tau, want_tau);
        // The winner is at least as good as every candidate.
        for w in ds.windows(2) {
            let tau = w[0] + (w[1] - w[0]) / 2.0;
            assert!(got.f1 >= f1_counts(&pairs, tau).0);
        }
    }

    #[test]
    fn single_class_labels_are_rejected() {
        let pairs = vec![
            LabeledPair {
                distance: 0.1,
                is_duplicate: true,
            },
            LabeledPair {
                distance: 0.2,
                is_duplicate: true,
            },
        ];
        assert!(matches!(
            calibrate_threshold(&pairs),
            Err(SimilarityError::DegenerateLabels)
        ));
        assert!(matches!(
            calibrate_threshold(&[]),
            Err(SimilarityError::DegenerateLabels)
        ));
    }
}
