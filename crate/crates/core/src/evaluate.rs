//! Clustering evaluation: cluster purity, correlation ratio (η²) with its
//! F-test, and frequency-cutoff robustness sweeps.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::ClusterAssignment;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::numfmt::format_sig;
use crate::pipeline::{cluster_features, drop_constant_columns, ClusterConfig};
use crate::selection::{select_top_frequency, top_fraction_count};
use crate::stats::f_pvalue;

/// Ground-truth class per document id.
pub type Truth = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterComposition {
    pub label: usize,
    pub majority: String,
    pub majority_count: usize,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub purity: f64,
    pub per_cluster: Vec<ClusterComposition>,
    pub k: usize,
    pub n: usize,
}

/// Share of documents that belong to the majority class of their cluster.
///
/// Majority ties go to the lexicographically smaller class.
pub fn cluster_purity(assignment: &ClusterAssignment, truth: &Truth) -> Result<EvaluationReport> {
    let assigned: BTreeSet<&String> = assignment.doc_ids.iter().collect();
    let known: BTreeSet<&String> = truth.keys().collect();
    if assigned != known || assigned.len() != assignment.doc_ids.len() {
        let diff: Vec<String> = assigned.symmetric_difference(&known).map(|s| s.to_string()).collect();
        return Err(Error::LabelMismatch(diff));
    }
    let mut per_cluster = Vec::with_capacity(assignment.k);
    let mut correct = 0usize;
    for (idx, members) in assignment.clusters().into_iter().enumerate() {
        let mut tally: BTreeMap<&str, usize> = BTreeMap::new();
        for m in &members {
            *tally.entry(truth[m].as_str()).or_default() += 1;
        }
        let (majority, count) =
            tally.iter().fold(("", 0usize), |best, (&class, &c)| if c > best.1 { (class, c) } else { best });
        correct += count;
        per_cluster.push(ClusterComposition {
            label: idx + 1,
            majority: majority.to_string(),
            majority_count: count,
            members,
        });
    }
    let n = assignment.doc_ids.len();
    Ok(EvaluationReport { purity: correct as f64 / n as f64, per_cluster, k: assignment.k, n })
}

/// One-way ANOVA summary of a feature against cluster labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaRow {
    pub feature: String,
    pub eta_squared: f64,
    pub p_value: f64,
    pub f_statistic: f64,
    pub ss_between: f64,
    pub ss_within: f64,
    pub ss_total: f64,
    /// Set for constant features, where η² is 0 and p is 1 by convention.
    pub degenerate: bool,
}

/// Correlation ratio `SS_between / SS_total` and the upper-tail p-value of
/// `F = (SS_between / (k - 1)) / (SS_within / (n - k))` under `F(k - 1, n - k)`.
pub fn eta_squared(feature: &str, values: &[f64], labels: &[usize]) -> Result<EtaRow> {
    if values.len() != labels.len() {
        return Err(Error::InvalidArgument("values and labels differ in length".into()));
    }
    let mut groups: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for (&v, &l) in values.iter().zip(labels) {
        let g = groups.entry(l).or_insert((0.0, 0));
        g.0 += v;
        g.1 += 1;
    }
    let n = values.len();
    let k = groups.len();
    if k < 2 || n <= k {
        return Err(Error::InvalidArgument(format!(
            "η² needs at least 2 groups and more values than groups (n = {n}, k = {k})"
        )));
    }
    let grand = values.iter().sum::<f64>() / n as f64;
    let means: BTreeMap<usize, f64> = groups.iter().map(|(&l, &(s, c))| (l, s / c as f64)).collect();
    let ss_total: f64 = values.iter().map(|v| (v - grand).powi(2)).sum();
    let ss_within: f64 = values.iter().zip(labels).map(|(v, l)| (v - means[l]).powi(2)).sum();
    let ss_between: f64 = groups.iter().map(|(l, &(_, c))| c as f64 * (means[l] - grand).powi(2)).sum();
    if !(ss_total > 0.0) {
        return Ok(EtaRow {
            feature: feature.to_string(),
            eta_squared: 0.0,
            p_value: 1.0,
            f_statistic: 0.0,
            ss_between,
            ss_within,
            ss_total,
            degenerate: true,
        });
    }
    let eta = (ss_between / ss_total).clamp(0.0, 1.0);
    let (df1, df2) = ((k - 1) as u32, (n - k) as u32);
    let f = if ss_within > 0.0 { (ss_between / df1 as f64) / (ss_within / df2 as f64) } else { f64::INFINITY };
    Ok(EtaRow {
        feature: feature.to_string(),
        eta_squared: eta,
        p_value: f_pvalue(f, df1, df2),
        f_statistic: f,
        ss_between,
        ss_within,
        ss_total,
        degenerate: false,
    })
}

/// η² of every matrix column against the assignment, strongest first.
pub fn eta_table(matrix: &FeatureMatrix, assignment: &ClusterAssignment) -> Result<Vec<EtaRow>> {
    let labels: Vec<usize> = matrix
        .doc_ids
        .iter()
        .map(|id| assignment.label_of(id).ok_or_else(|| Error::LabelMismatch(vec![id.clone()])))
        .collect::<Result<_>>()?;
    let mut rows: Vec<EtaRow> = (0..matrix.n_features())
        .into_par_iter()
        .map(|j| eta_squared(&matrix.feature_names[j], &matrix.column(j).to_vec(), &labels))
        .collect::<Result<_>>()?;
    rows.sort_by(|a, b| b.eta_squared.total_cmp(&a.eta_squared).then_with(|| a.feature.cmp(&b.feature)));
    Ok(rows)
}

/// Human-readable p-value; underflowed values print as `< 1e-300`.
pub fn format_p_value(p: f64) -> String {
    if p < 1e-300 {
        "< 1e-300".to_string()
    } else {
        format!("{p:.2e}")
    }
}

/// `feature,eta_squared,p_value`
pub fn write_eta_csv<W: Write>(rows: &[EtaRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["feature", "eta_squared", "p_value"])?;
    for r in rows {
        let p = if r.p_value < 1e-300 { 0.0 } else { r.p_value };
        w.write_record([r.feature.clone(), format_sig(r.eta_squared), format_sig(p)])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SweepLevel {
    /// Top fraction of features by corpus frequency.
    Fraction(f64),
    /// The reliability-selection reference run.
    Reference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cutoff: SweepLevel,
    pub n_features: usize,
    /// Purity against alleged authors; `None` when the row is flagged.
    pub purity_authors: Option<f64>,
    /// Purity against the reference clustering.
    pub purity_reference: Option<f64>,
    pub note: Option<String>,
}

/// `cutoff,n_features,purity_authors,purity_reference`
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cutoff", "n_features", "purity_authors", "purity_reference"])?;
    let opt = |v: Option<f64>| v.map(format_sig).unwrap_or_default();
    for r in rows {
        let cutoff = match r.cutoff {
            SweepLevel::Fraction(f) => format_sig(f),
            SweepLevel::Reference => "RS".to_string(),
        };
        w.write_record([cutoff, r.n_features.to_string(), opt(r.purity_authors), opt(r.purity_reference)])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

/// Number of distinct truth classes among the matrix documents.
pub fn truth_class_count(matrix: &FeatureMatrix, truth: &Truth) -> Result<usize> {
    let classes: BTreeSet<&String> = matrix
        .doc_ids
        .iter()
        .map(|id| truth.get(id).ok_or_else(|| Error::LabelMismatch(vec![id.clone()])))
        .collect::<Result<_>>()?;
    Ok(classes.len())
}

/// Re-clusters the matrix under each frequency cutoff and scores the
/// k-cut (k = number of truth classes) against the truth and the reference.
///
/// Cutoffs leaving fewer than two varying features, or whose distances
/// cannot be computed, give a flagged row instead of an error.
pub fn robustness_sweep(
    matrix: &FeatureMatrix,
    config: &ClusterConfig,
    truth: &Truth,
    cutoffs: &[f64],
    reference: &ClusterAssignment,
) -> Result<Vec<SweepRow>> {
    if cutoffs.is_empty() {
        return Err(Error::InvalidArgument("no cutoffs given".into()));
    }
    let k = truth_class_count(matrix, truth)?;
    let reference_truth: Truth =
        reference.doc_ids.iter().cloned().zip(reference.labels.iter().map(|l| l.to_string())).collect();
    cutoffs
        .par_iter()
        .map(|&fraction| {
            let columns = select_top_frequency(matrix, fraction)?;
            debug_assert_eq!(columns.len(), top_fraction_count(matrix.n_features(), fraction));
            let selected = matrix.select_columns(&columns);
            let usable = drop_constant_columns(&selected);
            let flagged = |note: String| SweepRow {
                cutoff: SweepLevel::Fraction(fraction),
                n_features: columns.len(),
                purity_authors: None,
                purity_reference: None,
                note: Some(note),
            };
            if usable.n_features() < 2 {
                return Ok(flagged("insufficient features".to_string()));
            }
            let run = match cluster_features(&usable, config, k) {
                Ok(run) => run,
                Err(e) if !e.is_input_error() => return Ok(flagged(e.to_string())),
                Err(e) => return Err(e),
            };
            let pa = cluster_purity(&run.assignment, truth)?.purity;
            let pr = cluster_purity(&run.assignment, &reference_truth)?.purity;
            Ok(SweepRow {
                cutoff: SweepLevel::Fraction(fraction),
                n_features: columns.len(),
                purity_authors: Some(pa),
                purity_reference: Some(pr),
                note: None,
            })
        })
        .collect()
}
