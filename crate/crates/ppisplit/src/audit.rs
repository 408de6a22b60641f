//! Leakage quantification for splits and the randomized multi-sample
//! leakage experiment.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::str::FromStr;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::descriptor::DescriptorStore;
use crate::rng::{derive_seed, sample_without_replacement, seeded};
use crate::similarity::{
    build_duplicate_graph, cluster_sequences, query_near_duplicates, Hit, SimilarityConfig,
    SimilarityError,
};
use crate::splits::{
    group_by_sequence_components, split_by_interface_components, split_by_pdb_code,
    split_by_ppi_code, split_by_time, split_groups, Split, SplitError, SplitSpec, SplitStrategy,
};
use crate::structio::PpiId;

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("split has no fold named {name:?}")]
    UnknownFold { name: String },
    #[error("no descriptors for PPIs: {}", ids.join(", "))]
    MissingDescriptor { ids: Vec<String> },
    #[error("experiment config invalid: {reason}")]
    BadConfig { reason: String },
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Split(#[from] SplitError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Leakage of one (train fold, test fold) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPairAudit {
    pub train_fold: String,
    pub test_fold: String,
    pub leaked_count: usize,
    pub test_count: usize,
    /// leaked_count / test_count; 0 when the test fold is empty.
    pub leakage_fraction: f64,
    /// Set when the test fold had no members, which forces fraction 0.
    pub empty_test: bool,
    /// Near-duplicate training hits per test PPI; leaked test PPIs are
    /// exactly those with a non-empty list.
    pub hits: BTreeMap<String, Vec<Hit>>,
}

/// Leakage audit of a whole split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub tool_version: String,
    pub tau: f64,
    pub config_fingerprint: String,
    pub split_spec: Option<SplitSpec>,
    /// Average of the per-pair fractions; for a plain train/test split
    /// this is the single pair's fraction.
    pub mean_leakage_fraction: f64,
    pub fold_pairs: Vec<FoldPairAudit>,
}

/// Leakage of `test_fold` against `train_fold`: the fraction of test PPIs
/// with at least one training descriptor within strict distance tau.
pub fn leakage_ratio(
    split: &Split,
    store: &DescriptorStore,
    config: &SimilarityConfig,
    train_fold: &str,
    test_fold: &str,
) -> Result<LeakageReport, AuditError> {
    let pair = audit_fold_pair(split, store, config, train_fold, test_fold)?;
    Ok(LeakageReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        tau: config.duplicate_threshold,
        config_fingerprint: store.config_fingerprint().to_string(),
        split_spec: split.spec.clone(),
        mean_leakage_fraction: pair.leakage_fraction,
        fold_pairs: vec![pair],
    })
}

fn audit_fold_pair(
    split: &Split,
    store: &DescriptorStore,
    config: &SimilarityConfig,
    train_fold: &str,
    test_fold: &str,
) -> Result<FoldPairAudit, AuditError> {
    let train = split.fold(train_fold).ok_or_else(|| AuditError::UnknownFold {
        name: train_fold.to_string(),
    })?;
    let test = split.fold(test_fold).ok_or_else(|| AuditError::UnknownFold {
        name: test_fold.to_string(),
    })?;
    audit_sets(store, config, train, test, train_fold, test_fold)
}

fn audit_sets(
    store: &DescriptorStore,
    config: &SimilarityConfig,
    train: &BTreeSet<String>,
    test: &BTreeSet<String>,
    train_fold: &str,
    test_fold: &str,
) -> Result<FoldPairAudit, AuditError> {
    let missing: Vec<String> = train
        .iter()
        .chain(test.iter())
        .filter(|id| store.get(id).is_none())
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(AuditError::MissingDescriptor { ids: missing });
    }

    let train_store = store.filtered(|id| train.contains(id));
    let test_store = store.filtered(|id| test.contains(id));
    let hits = query_near_duplicates(&train_store, &test_store, config)?;
    let leaked_count = hits.values().filter(|list| !list.is_empty()).count();
    let test_count = test.len();
    let empty_test = test_count == 0;
    let leakage_fraction = if empty_test {
        0.0
    } else {
        leaked_count as f64 / test_count as f64
    };
    Ok(FoldPairAudit {
        train_fold: train_fold.to_string(),
        test_fold: test_fold.to_string(),
        leaked_count,
        test_count,
        leakage_fraction,
        empty_test,
        hits,
    })
}

/// Audits a whole split. A plain train/test split is the single ordered
/// pair (train, test); any other fold layout is treated as
/// cross-validation: each fold plays test against the union of the rest,
/// and the fractions are averaged.
pub fn audit_split(
    split: &Split,
    store: &DescriptorStore,
    config: &SimilarityConfig,
) -> Result<LeakageReport, AuditError> {
    let names: Vec<&String> = split.folds.keys().collect();
    let plain = names.len() == 2
        && split.folds.contains_key("train")
        && split.folds.contains_key("test");
    if plain {
        return leakage_ratio(split, store, config, "train", "test");
    }

    let mut fold_pairs = Vec::new();
    for name in split.folds.keys() {
        let test = &split.folds[name];
        let rest: BTreeSet<String> = split
            .folds
            .iter()
            .filter(|(other, _)| *other != name)
            .flat_map(|(_, members)| members.iter().cloned())
            .collect();
        fold_pairs.push(audit_sets(
            store,
            config,
            &rest,
            test,
            &format!("all-but-{name}"),
            name,
        )?);
    }
    let mean = if fold_pairs.is_empty() {
        0.0
    } else {
        fold_pairs.iter().map(|p| p.leakage_fraction).sum::<f64>() / fold_pairs.len() as f64
    };
    Ok(LeakageReport {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        tau: config.duplicate_threshold,
        config_fingerprint: store.config_fingerprint().to_string(),
        split_spec: split.spec.clone(),
        mean_leakage_fraction: mean,
        fold_pairs,
    })
}

/// Shape of the randomized leakage experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_samples: usize,
    pub codes_per_sample: usize,
    pub strategies: Vec<SplitSpec>,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_samples: 5,
            codes_per_sample: 15_000,
            strategies: SplitStrategy::ALL
                .iter()
                .map(|&s| SplitSpec::fraction(s, 0))
                .collect(),
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), AuditError> {
        if self.n_samples < 1 {
            return Err(AuditError::BadConfig {
                reason: "n_samples must be at least 1".to_string(),
            });
        }
        if self.codes_per_sample < 1 {
            return Err(AuditError::BadConfig {
                reason: "codes_per_sample must be at least 1".to_string(),
            });
        }
        if self.strategies.is_empty() {
            return Err(AuditError::BadConfig {
                reason: "strategies must not be empty".to_string(),
            });
        }
        for s in &self.strategies {
            s.validate()?;
        }
        Ok(())
    }
}

/// Everything the experiment consumes, already extracted and embedded.
pub struct ExperimentInputs<'a> {
    /// Descriptors for every PPI of the corpus.
    pub store: &'a DescriptorStore,
    /// Deposition date per PDB code, for time splits.
    pub dates: &'a BTreeMap<String, NaiveDate>,
    /// Sequence per protein key (`<pdb>_<chain>`), for sequence splits.
    pub sequences: &'a BTreeMap<String, String>,
    pub similarity: &'a SimilarityConfig,
    /// Identity floor for the per-sample sequence clustering.
    pub min_seq_id: f64,
}

/// Outcome of one (strategy, sample) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub sample: usize,
    pub n_ppis: usize,
    pub leakage_fraction: Option<f64>,
    pub error: Option<String>,
}

/// Per-strategy curve: one leakage fraction per sample plus aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyOutcome {
    pub strategy_name: String,
    pub spec: SplitSpec,
    pub samples: Vec<SampleOutcome>,
    /// Mean over successful samples; absent if all samples failed.
    pub mean: Option<f64>,
    /// Population standard deviation over successful samples.
    pub stddev: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub tool_version: String,
    pub seed: u64,
    pub n_samples: usize,
    pub codes_per_sample: usize,
    pub warnings: Vec<String>,
    pub strategies: Vec<StrategyOutcome>,
}

fn mean_stddev(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn sample_split(
    spec: &SplitSpec,
    ppis: &BTreeSet<String>,
    inputs: &ExperimentInputs,
    sample_store: &DescriptorStore,
) -> Result<Split, AuditError> {
    match spec.strategy {
        SplitStrategy::PpiCode => Ok(split_by_ppi_code(ppis, spec)?),
        SplitStrategy::PdbCode => Ok(split_by_pdb_code(ppis, spec)?),
        SplitStrategy::DepositionTime => Ok(split_by_time(ppis, inputs.dates, spec)?),
        SplitStrategy::SequenceComponent => {
            let mut proteins: BTreeSet<String> = BTreeSet::new();
            for id in ppis {
                let p = PpiId::from_str(id).map_err(|_| SplitError::BadPpiId { id: id.clone() })?;
                proteins.insert(format!("{}_{}", p.pdb_code, p.chain_a));
                proteins.insert(format!("{}_{}", p.pdb_code, p.chain_b));
            }
            let mut sample_sequences: BTreeMap<String, String> = BTreeMap::new();
            let mut missing = Vec::new();
            for key in &proteins {
                match inputs.sequences.get(key) {
                    Some(seq) => {
                        sample_sequences.insert(key.clone(), seq.clone());
                    }
                    None => missing.push(key.clone()),
                }
            }
            if !missing.is_empty() {
                return Err(SplitError::UnclusteredProtein { keys: missing }.into());
            }
            let clusters = cluster_sequences(&sample_sequences, inputs.min_seq_id);
            let groups = group_by_sequence_components(ppis, &clusters)?;
            Ok(split_groups(&groups, spec)?)
        }
        SplitStrategy::InterfaceComponent => {
            let graph = build_duplicate_graph(sample_store, inputs.similarity)?;
            Ok(split_by_interface_components(ppis, &graph, spec)?)
        }
    }
}

/// Runs the randomized experiment: per sample, PDB codes are drawn
/// without replacement (seeded), their PPIs split under every strategy,
/// and the test-fold leakage measured. Samples run in parallel; cells
/// fail independently so one degenerate sample cannot void the rest.
pub fn run_experiment(
    inputs: &ExperimentInputs,
    config: &ExperimentConfig,
) -> Result<ExperimentResult, AuditError> {
    config.validate()?;
    if inputs.store.is_empty() {
        return Err(AuditError::BadConfig {
            reason: "descriptor store is empty".to_string(),
        });
    }

    let mut code_set: BTreeSet<String> = BTreeSet::new();
    for id in inputs.store.ids() {
        let p = PpiId::from_str(id).map_err(|_| SplitError::BadPpiId { id: id.to_string() })?;
        code_set.insert(p.pdb_code);
    }
    let codes: Vec<String> = code_set.into_iter().collect();

    let mut warnings = Vec::new();
    let draw = config.codes_per_sample.min(codes.len());
    if draw < config.codes_per_sample {
        warnings.push(format!(
            "requested {} codes per sample but only {} exist; sampling all of them",
            config.codes_per_sample,
            codes.len()
        ));
    }

    // One cell per (sample, strategy). Samples are independent; the
    // per-sample artifacts (ppi set, filtered store) are shared by the
    // strategies within the sample.
    let cells: Vec<Vec<SampleOutcome>> = (0..config.n_samples)
        .into_par_iter()
        .map(|sample| {
            let mut rng = seeded(derive_seed(config.seed, sample as u64));
            let drawn = sample_without_replacement(&mut rng, &codes, draw);
            let drawn: BTreeSet<&String> = drawn.iter().collect();
            let ppis: BTreeSet<String> = inputs
                .store
                .ids()
                .filter(|id| {
                    let code = id.split('_').next().unwrap_or_default();
                    drawn.iter().any(|c| c.as_str() == code)
                })
                .map(str::to_string)
                .collect();
            let sample_store = inputs.store.filtered(|id| ppis.contains(id));

            config
                .strategies
                .iter()
                .map(|spec| {
                    // Every sample re-splits with its own derived seed so
                    // the error bars reflect sampling, not one fixed split.
                    let spec = SplitSpec {
                        seed: derive_seed(spec.seed, sample as u64),
                        ..spec.clone()
                    };
                    let outcome = sample_split(&spec, &ppis, inputs, &sample_store)
                        .and_then(|split| audit_split(&split, &sample_store, inputs.similarity));
                    match outcome {
                        Ok(report) => SampleOutcome {
                            sample,
                            n_ppis: ppis.len(),
                            leakage_fraction: Some(report.mean_leakage_fraction),
                            error: None,
                        },
                        Err(e) => SampleOutcome {
                            sample,
                            n_ppis: ppis.len(),
                            leakage_fraction: None,
                            error: Some(e.to_string()),
                        },
                    }
                })
                .collect()
        })
        .collect();

    let strategies = config
        .strategies
        .iter()
        .enumerate()
        .map(|(si, spec)| {
            let samples: Vec<SampleOutcome> =
                cells.iter().map(|row| row[si].clone()).collect();
            let ok: Vec<f64> = samples.iter().filter_map(|s| s.leakage_fraction).collect();
            let (mean, stddev) = if ok.is_empty() {
                (None, None)
            } else {
                let (m, s) = mean_stddev(&ok);
                (Some(m), Some(s))
            };
            StrategyOutcome {
                strategy_name: spec.strategy.name().to_string(),
                spec: spec.clone(),
                samples,
                mean,
                stddev,
            }
        })
        .collect();

    Ok(ExperimentResult {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        n_samples: config.n_samples,
        codes_per_sample: config.codes_per_sample,
        warnings,
        strategies,
    })
}

// ---------------------------------------------------------------------
// Report emission. Floats are rendered with 17 significant digits, which
// round-trips f64 exactly: parsing an emitted file and re-emitting it
// reproduces the bytes.

pub(crate) fn json_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn json_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn json_opt_f64(x: Option<f64>) -> String {
    x.map(json_f64).unwrap_or_else(|| "null".to_string())
}

fn render_spec(spec: &SplitSpec, out: &mut String) {
    out.push_str("{\"strategy\":");
    out.push_str(&json_str(spec.strategy.name()));
    if let Some(f) = spec.test_fraction {
        out.push_str(",\"test_fraction\":");
        out.push_str(&json_f64(f));
    }
    if let Some(k) = spec.n_folds {
        out.push_str(&format!(",\"n_folds\":{k}"));
    }
    out.push_str(&format!(",\"seed\":{}", spec.seed));
    out.push_str(",\"packing\":");
    out.push_str(&json_str(match spec.packing {
        crate::splits::Packing::Random => "random",
        crate::splits::Packing::LargestFirst => "largest_first",
    }));
    out.push('}');
}

/// Renders an experiment result as JSON with exact float round-tripping.
pub fn render_experiment_json(result: &ExperimentResult) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    out.push_str(&format!(
        "  \"tool_version\": {},\n",
        json_str(&result.tool_version)
    ));
    out.push_str(&format!("  \"seed\": {},\n", result.seed));
    out.push_str(&format!("  \"n_samples\": {},\n", result.n_samples));
    out.push_str(&format!(
        "  \"codes_per_sample\": {},\n",
        result.codes_per_sample
    ));
    out.push_str("  \"warnings\": [");
    for (i, w) in result.warnings.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&json_str(w));
    }
    out.push_str("],\n");
    out.push_str("  \"strategies\": [");
    for (i, s) in result.strategies.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str("\n    {\n");
        out.push_str(&format!(
            "      \"strategy_name\": {},\n",
            json_str(&s.strategy_name)
        ));
        out.push_str("      \"spec\": ");
        render_spec(&s.spec, &mut out);
        out.push_str(",\n      \"samples\": [");
        for (j, sample) in s.samples.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str("\n        {");
            out.push_str(&format!("\"sample\":{},", sample.sample));
            out.push_str(&format!("\"n_ppis\":{},", sample.n_ppis));
            out.push_str(&format!(
                "\"leakage_fraction\":{},",
                json_opt_f64(sample.leakage_fraction)
            ));
            out.push_str(&format!(
                "\"error\":{}",
                sample
                    .error
                    .as_deref()
                    .map(json_str)
                    .unwrap_or_else(|| "null".to_string())
            ));
            out.push('}');
        }
        if !s.samples.is_empty() {
            out.push_str("\n      ");
        }
        out.push_str("],\n");
        out.push_str(&format!("      \"mean\": {},\n", json_opt_f64(s.mean)));
        out.push_str(&format!("      \"stddev\": {}\n", json_opt_f64(s.stddev)));
        out.push_str("    }");
    }
    if !result.strategies.is_empty() {
        out.push_str("\n  ");
    }
    out.push_str("]\n}\n");
    out
}

/// Renders an experiment result as CSV: one row per (strategy, sample)
/// with the first three columns filled, one summary row per strategy with
/// mean and stddev filled.
pub fn render_experiment_csv(result: &ExperimentResult) -> String {
    let mut out = String::from("strategy,sample,leakage_fraction,mean,stddev\n");
    for s in &result.strategies {
        for sample in &s.samples {
            out.push_str(&format!(
                "{},{},{},,\n",
                s.strategy_name,
                sample.sample,
                sample.leakage_fraction.map(json_f64).unwrap_or_default()
            ));
        }
        out.push_str(&format!(
            "{},,,{},{}\n",
            s.strategy_name,
            s.mean.map(json_f64).unwrap_or_default(),
            s.stddev.map(json_f64).unwrap_or_default()
        ));
    }
    out
}

/// Renders a leakage report as JSON with exact float round-tripping.
pub fn render_leakage_json(report: &LeakageReport) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    out.push_str(&format!(
        "  \"tool_version\": {},\n",
        json_str(&report.tool_version)
    ));
    out.push_str(&format!("  \"tau\": {},\n", json_f64(report.tau)));
    out.push_str(&format!(
        "  \"config_fingerprint\": {},\n",
        json_str(&report.config_fingerprint)
    ));
    out.push_str("  \"split_spec\": ");
    match &report.split_spec {
        Some(spec) => render_spec(spec, &mut out),
        None => out.push_str("null"),
    }
    out.push_str(",\n");
    out.push_str(&format!(
        "  \"mean_leakage_fraction\": {},\n",
        json_f64(report.mean_leakage_fraction)
    ));
    out.push_str("  \"fold_pairs\": [");
    for (i, p) in report.fold_pairs.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str("\n    {\n");
        out.push_str(&format!(
            "      \"train_fold\": {},\n",
            json_str(&p.train_fold)
        ));
        out.push_str(&format!("      \"test_fold\": {},\n", json_str(&p.test_fold)));
        out.push_str(&format!("      \"leaked_count\": {},\n", p.leaked_count));
        out.push_str(&format!("      \"test_count\": {},\n", p.test_count));
        out.push_str(&format!(
            "      \"leakage_fraction\": {},\n",
            json_f64(p.leakage_fraction)
        ));
        out.push_str(&format!("      \"empty_test\": {},\n", p.empty_test));
        out.push_str("      \"hits\": {");
        for (j, (id, hits)) in p.hits.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str("\n        ");
            out.push_str(&json_str(id));
            out.push_str(": [");
            for (k, h) in hits.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                out.push_str(&format!(
                    "{{\"ppi_id\":{},\"distance\":{}}}",
                    json_str(&h.ppi_id),
                    json_f64(h.distance)
                ));
            }
            out.push(']');
        }
        if !p.hits.is_empty() {
            out.push_str("\n      ");
        }
        out.push_str("}\n    }");
    }
    if !report.fold_pairs.is_empty() {
        out.push_str("\n  ");
    }
    out.push_str("]\n}\n");
    out
}

/// Renders a leakage report as CSV: one row per fold pair plus a summary
/// row with the mean.
pub fn render_leakage_csv(report: &LeakageReport) -> String {
    let mut out = String::from("train_fold,test_fold,leaked_count,test_count,leakage_fraction\n");
    for p in &report.fold_pairs {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.train_fold,
            p.test_fold,
            p.leaked_count,
            p.test_count,
            json_f64(p.leakage_fraction)
        ));
    }
    out.push_str(&format!(",,,,{}\n", json_f64(report.mean_leakage_fraction)));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

pub fn emit_experiment_report<W: Write>(
    result: &ExperimentResult,
    format: ReportFormat,
    w: &mut W,
) -> std::io::Result<()> {
    let text = match format {
        ReportFormat::Json => render_experiment_json(result),
        ReportFormat::Csv => render_experiment_csv(result),
    };
    w.write_all(text.as_bytes())
}

pub fn emit_leakage_report<W: Write>(
    report: &LeakageReport,
    format: ReportFormat,
    w: &mut W,
) -> std::io::Result<()> {
    let text = match format {
        ReportFormat::Json => render_leakage_json(report),
        ReportFormat::Csv => render_leakage_csv(report),
    };
    w.write_all(text.as_bytes())
}
