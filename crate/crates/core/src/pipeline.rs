//! End-to-end analysis: features → selection → distances → Ward → cut →
//! evaluation, plus the file bundle each run leaves behind.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cluster::{
    agglomerative_coefficient, cut, ward_cluster, AcMode, AgglomerativeCoefficient, ClusterAssignment, Dendrogram,
    Linkage,
};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::evaluate::{
    cluster_purity, robustness_sweep, truth_class_count, EvaluationReport, SweepLevel, SweepRow, Truth,
};
use crate::export::{to_dot, to_newick, to_svg, SvgCaption};
use crate::features::{build_matrix, FeatureMatrix, FeatureSpec};
use crate::metrics::{DistanceChoice, DistanceMatrix};
use crate::selection::{select_reliable, select_top_frequency, SelectionParams, SelectionReport};
use crate::stats::sample_sd;

/// Default robustness-sweep cutoffs.
pub const DEFAULT_SWEEP_CUTOFFS: [f64; 6] = [0.01, 0.10, 0.25, 0.50, 0.75, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub distance: DistanceChoice,
    pub linkage: Linkage,
    pub ac_mode: AcMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterRun {
    pub distances: DistanceMatrix,
    pub dendrogram: Dendrogram,
    pub assignment: ClusterAssignment,
    pub ac: AgglomerativeCoefficient,
}

/// Distances, Ward tree, agglomerative coefficient and k-cut of a
/// relative-frequency matrix.
pub fn cluster_features(matrix: &FeatureMatrix, config: &ClusterConfig, k: usize) -> Result<ClusterRun> {
    let distances = config.distance.compute(matrix)?;
    let dendrogram = ward_cluster(&distances, config.linkage)?;
    let ac = agglomerative_coefficient(&dendrogram, config.ac_mode)?;
    let assignment = cut(&dendrogram, k)?;
    Ok(ClusterRun { distances, dendrogram, assignment, ac })
}

/// Drops columns that do not vary across documents.
pub fn drop_constant_columns(matrix: &FeatureMatrix) -> FeatureMatrix {
    let keep: Vec<usize> = (0..matrix.n_features()).filter(|&j| sample_sd(&matrix.column(j).to_vec()) > 0.0).collect();
    matrix.select_columns(&keep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SelectionMode {
    /// Minimum-sample-size reliability criterion.
    Reliable,
    /// Top fraction of features by corpus frequency.
    TopFraction(f64),
    All,
}

impl FromStr for SelectionMode {
    type Err = String;

    /// `reliable`, `all`, or `top:<percent>` such as `top:10`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "reliable" => Ok(SelectionMode::Reliable),
            "all" => Ok(SelectionMode::All),
            _ => {
                let pct =
                    s.strip_prefix("top:").ok_or_else(|| format!("unknown selection `{s}`"))?.trim_end_matches('%');
                let pct: f64 = pct.parse().map_err(|_| format!("bad percentage in `{s}`"))?;
                if !(pct > 0.0 && pct <= 100.0) {
                    return Err(format!("percentage must lie in (0, 100], got {pct}"));
                }
                Ok(SelectionMode::TopFraction(pct / 100.0))
            }
        }
    }
}

impl fmt::Display for SelectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionMode::Reliable => f.write_str("reliable"),
            SelectionMode::All => f.write_str("all"),
            SelectionMode::TopFraction(x) => write!(f, "top:{}", crate::numfmt::format_sig(x * 100.0)),
        }
    }
}

/// Applies a selection mode. Constant columns are always removed; the
/// report is present for reliability selection only.
pub fn select_features(
    matrix: &FeatureMatrix,
    mode: SelectionMode,
    params: &SelectionParams,
) -> Result<(FeatureMatrix, Option<SelectionReport>)> {
    match mode {
        SelectionMode::Reliable => {
            let report = select_reliable(matrix, params)?;
            Ok((matrix.select_features(&report.retained), Some(report)))
        }
        SelectionMode::TopFraction(f) => {
            let cols = select_top_frequency(matrix, f)?;
            Ok((drop_constant_columns(&matrix.select_columns(&cols)), None))
        }
        SelectionMode::All => Ok((drop_constant_columns(matrix), None)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub features: FeatureSpec,
    pub selection: SelectionMode,
    pub confidence_z: f64,
    pub margin_multiplier: f64,
    /// Overrides the shortest-document sample size used by reliability selection.
    pub min_doc_len: Option<u64>,
    pub cluster: ClusterConfig,
    /// Number of clusters; defaults to the number of alleged authors.
    pub k: Option<usize>,
}

impl AnalysisOptions {
    pub fn new(features: FeatureSpec) -> Self {
        AnalysisOptions {
            features,
            selection: SelectionMode::Reliable,
            confidence_z: SelectionParams::DEFAULT_Z,
            margin_multiplier: SelectionParams::DEFAULT_MARGIN_MULTIPLIER,
            min_doc_len: None,
            cluster: ClusterConfig::default(),
            k: None,
        }
    }

    pub fn selection_params(&self, matrix: &FeatureMatrix) -> Result<SelectionParams> {
        let mut params = match self.min_doc_len {
            Some(n) => SelectionParams::new(n),
            None => SelectionParams::for_matrix(matrix)?,
        };
        params.confidence_z = self.confidence_z;
        params.margin_multiplier = self.margin_multiplier;
        Ok(params)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub matrix: FeatureMatrix,
    pub selection: Option<SelectionReport>,
    pub selected: FeatureMatrix,
    pub run: ClusterRun,
    pub evaluation: Option<EvaluationReport>,
    pub k: usize,
}

/// Runs selection, clustering and (when `truth` is given) purity on a
/// prepared relative-frequency matrix.
pub fn analyze_matrix(matrix: FeatureMatrix, opts: &AnalysisOptions, truth: Option<&Truth>) -> Result<Analysis> {
    let params = match opts.selection {
        SelectionMode::Reliable => opts.selection_params(&matrix)?,
        _ => SelectionParams::new(1),
    };
    let (selected, selection) = select_features(&matrix, opts.selection, &params)?;
    if selected.n_features() == 0 {
        return Err(Error::SelectionEmpty);
    }
    let k = match (opts.k, truth) {
        (Some(k), _) => k,
        (None, Some(t)) => truth_class_count(&matrix, t)?,
        (None, None) => {
            return Err(Error::InvalidArgument("number of clusters unknown: pass k or truth labels".into()))
        }
    };
    let run = cluster_features(&selected, &opts.cluster, k)?;
    let evaluation = truth.map(|t| cluster_purity(&run.assignment, t)).transpose()?;
    Ok(Analysis { matrix, selection, selected, run, evaluation, k })
}

/// Feature extraction followed by [`analyze_matrix`], with alleged
/// authors as truth.
pub fn analyze(corpus: &Corpus, opts: &AnalysisOptions) -> Result<Analysis> {
    let matrix = build_matrix(corpus, &opts.features)?;
    analyze_matrix(matrix, opts, Some(&corpus.authors()))
}

/// The robustness sweep over `cutoffs` followed by the reference (RS) row.
///
/// The reference run uses reliability selection with the other options
/// unchanged; every sweep row is cut at k = number of truth classes.
pub fn sweep_with_reference(
    matrix: &FeatureMatrix,
    opts: &AnalysisOptions,
    truth: &Truth,
    cutoffs: &[f64],
) -> Result<Vec<SweepRow>> {
    let k = truth_class_count(matrix, truth)?;
    let reference_opts = AnalysisOptions { selection: SelectionMode::Reliable, k: Some(k), ..opts.clone() };
    let reference = analyze_matrix(matrix.clone(), &reference_opts, Some(truth))?;
    let mut rows = robustness_sweep(matrix, &opts.cluster, truth, cutoffs, &reference.run.assignment)?;
    rows.push(SweepRow {
        cutoff: SweepLevel::Reference,
        n_features: reference.selected.n_features(),
        purity_authors: reference.evaluation.as_ref().map(|e| e.purity),
        purity_reference: None,
        note: None,
    });
    Ok(rows)
}

/// The three figures printed with every dendrogram, plus run context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub n_features: usize,
    pub ac: f64,
    pub purity: Option<f64>,
    pub k: usize,
    pub n_documents: usize,
    pub ac_degenerate: bool,
}

impl Analysis {
    pub fn summary(&self) -> ClusterSummary {
        ClusterSummary {
            n_features: self.selected.n_features(),
            ac: self.run.ac.value,
            purity: self.evaluation.as_ref().map(|e| e.purity),
            k: self.k,
            n_documents: self.selected.n_docs(),
            ac_degenerate: self.run.ac.degenerate,
        }
    }

    /// Writes `dendrogram.nwk`, `dendrogram.dot`, `dendrogram.svg`,
    /// `assignment.csv`, `distances.csv` and `summary.json` into `dir`.
    pub fn write_cluster_outputs(&self, dir: &Path, truth: Option<&Truth>) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let dend = &self.run.dendrogram;
        write_file(&dir.join("dendrogram.nwk"), to_newick(dend).as_bytes())?;
        write_file(&dir.join("dendrogram.dot"), to_dot(dend).as_bytes())?;
        let summary = self.summary();
        let caption = SvgCaption { n_features: summary.n_features, ac: summary.ac, purity: summary.purity };
        write_file(&dir.join("dendrogram.svg"), to_svg(dend, truth, &caption).as_bytes())?;
        let mut buf = Vec::new();
        self.run.assignment.write_csv(&mut buf)?;
        write_file(&dir.join("assignment.csv"), &buf)?;
        let mut buf = Vec::new();
        self.run.distances.write_csv(&mut buf)?;
        write_file(&dir.join("distances.csv"), &buf)?;
        write_json(&dir.join("summary.json"), &summary)?;
        Ok(())
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, text.as_bytes())
}
