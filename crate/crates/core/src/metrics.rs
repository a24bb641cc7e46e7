//! Column transforms and pairwise document dissimilarities.
//!
//! Standard deviations use the sample (`n - 1`) convention everywhere.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, Scale};
use crate::numfmt::format_sig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Measure {
    BurrowsDelta,
    MinMax,
    Manhattan,
    Euclidean,
}

/// Symmetric document × document dissimilarities with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub doc_ids: Vec<String>,
    pub values: Array2<f64>,
    pub measure: Measure,
}

impl DistanceMatrix {
    /// Builds and validates a matrix.
    pub fn new(doc_ids: Vec<String>, values: Array2<f64>, measure: Measure) -> Result<Self> {
        let d = DistanceMatrix { doc_ids, values, measure };
        d.validate()?;
        Ok(d)
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }

    /// Checks shape, finiteness, non-negativity, zero diagonal and exact symmetry.
    pub fn validate(&self) -> Result<()> {
        let n = self.doc_ids.len();
        if self.values.shape() != [n, n] {
            return Err(Error::InvalidMatrix(format!("expected {n}×{n}, got {:?}", self.values.shape())));
        }
        for i in 0..n {
            if self.values[[i, i]] != 0.0 {
                return Err(Error::InvalidMatrix(format!("non-zero diagonal at `{}`", self.doc_ids[i])));
            }
            for j in 0..n {
                let v = self.values[[i, j]];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidMatrix(format!("entry ({i}, {j}) = {v} is not a finite dissimilarity")));
                }
                if v != self.values[[j, i]] {
                    return Err(Error::InvalidMatrix(format!("asymmetric entries at ({i}, {j})")));
                }
            }
        }
        Ok(())
    }

    /// Square CSV with the document ids as header row and first column.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["doc_id".to_string()];
        header.extend(self.doc_ids.iter().cloned());
        w.write_record(&header)?;
        for (i, id) in self.doc_ids.iter().enumerate() {
            let mut rec = vec![id.clone()];
            rec.extend(self.values.row(i).iter().map(|&v| format_sig(v)));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

fn column_sd(col: ArrayView1<'_, f64>) -> f64 {
    col.std(1.0)
}

fn require_docs(m: &FeatureMatrix, needed: usize) -> Result<()> {
    if m.n_docs() < needed {
        return Err(Error::TooFewDocuments { needed, got: m.n_docs() });
    }
    Ok(())
}

/// Standardizes every column to mean 0 and sample standard deviation 1.
pub fn zscore_transform(m: &FeatureMatrix) -> Result<FeatureMatrix> {
    require_docs(m, 2)?;
    let mut out = m.clone();
    for (j, mut col) in out.values.axis_iter_mut(Axis(1)).enumerate() {
        let mean = col.mean().expect("non-empty");
        let sd = column_sd(col.view());
        if !(sd > 0.0) {
            return Err(Error::ZeroVariance(m.feature_names[j].clone()));
        }
        col.mapv_inplace(|v| (v - mean) / sd);
    }
    out.scale = Scale::ZScore;
    Ok(out)
}

/// Divides every row by its Euclidean norm.
pub fn l2_normalize_rows(m: &FeatureMatrix) -> Result<FeatureMatrix> {
    let mut out = m.clone();
    for (i, mut row) in out.values.axis_iter_mut(Axis(0)).enumerate() {
        let norm = row.dot(&row).sqrt();
        if !(norm > 0.0) {
            return Err(Error::ZeroRow(m.doc_ids[i].clone()));
        }
        row.mapv_inplace(|v| v / norm);
    }
    out.scale = Scale::L2NormalizedZScore;
    Ok(out)
}

/// Divides every column by its standard deviation without centering, so
/// non-negative input stays non-negative.
pub fn tfsd_transform(m: &FeatureMatrix) -> Result<FeatureMatrix> {
    require_docs(m, 2)?;
    let mut out = m.clone();
    for (j, mut col) in out.values.axis_iter_mut(Axis(1)).enumerate() {
        let sd = column_sd(col.view());
        if !(sd > 0.0) {
            return Err(Error::ZeroVariance(m.feature_names[j].clone()));
        }
        col.mapv_inplace(|v| v / sd);
    }
    out.scale = Scale::Tfsd;
    Ok(out)
}

fn pairwise<F>(m: &FeatureMatrix, measure: Measure, f: F) -> Result<DistanceMatrix>
where
    F: Fn(ArrayView1<'_, f64>, ArrayView1<'_, f64>) -> Result<f64> + Sync,
{
    require_docs(m, 2)?;
    let n = m.n_docs();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| ((i + 1)..n).map(|j| f(m.row(i), m.row(j))).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let mut values = Array2::zeros((n, n));
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + 1 + off;
            values[[i, j]] = v;
            values[[j, i]] = v;
        }
    }
    Ok(DistanceMatrix { doc_ids: m.doc_ids.clone(), values, measure })
}

fn l1(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum()
}

pub fn manhattan_distances(m: &FeatureMatrix) -> Result<DistanceMatrix> {
    pairwise(m, Measure::Manhattan, |a, b| Ok(l1(a, b)))
}

pub fn euclidean_distances(m: &FeatureMatrix) -> Result<DistanceMatrix> {
    pairwise(m, Measure::Euclidean, |a, b| {
        Ok(a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
    })
}

/// Burrows' delta on relative frequencies: z-scores, then unit-length
/// rows, then Manhattan distance.
pub fn burrows_delta(m: &FeatureMatrix) -> Result<DistanceMatrix> {
    let z = zscore_transform(m)?;
    let unit = l2_normalize_rows(&z)?;
    let mut d = manhattan_distances(&unit)?;
    d.measure = Measure::BurrowsDelta;
    Ok(d)
}

/// `1 - Σ min / Σ max` between rows of a tfsd-scaled matrix.
pub fn minmax_distance(m: &FeatureMatrix) -> Result<DistanceMatrix> {
    if m.scale != Scale::Tfsd {
        return Err(Error::InvalidArgument(format!("MinMax expects a tfsd matrix, got {:?}", m.scale)));
    }
    if m.values.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidMatrix("MinMax requires non-negative values".into()));
    }
    let ids = &m.doc_ids;
    let n = m.n_docs();
    require_docs(m, 2)?;
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..n)
                .map(|j| {
                    let (mut lo, mut hi) = (0.0, 0.0);
                    for (a, b) in m.row(i).iter().zip(m.row(j).iter()) {
                        lo += a.min(*b);
                        hi += a.max(*b);
                    }
                    if hi > 0.0 {
                        Ok((1.0 - lo / hi).clamp(0.0, 1.0))
                    } else {
                        Err(Error::MinMaxUndefined(ids[i].clone(), ids[j].clone()))
                    }
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut values = Array2::zeros((n, n));
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            values[[i, i + 1 + off]] = v;
            values[[i + 1 + off, i]] = v;
        }
    }
    Ok(DistanceMatrix { doc_ids: ids.clone(), values, measure: Measure::MinMax })
}

/// Distance pipelines available from relative frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceChoice {
    #[default]
    Delta,
    MinMax,
    Manhattan,
    Euclidean,
}

impl DistanceChoice {
    /// Applies the full pipeline to a relative-frequency matrix.
    pub fn compute(self, m: &FeatureMatrix) -> Result<DistanceMatrix> {
        match self {
            DistanceChoice::Delta => burrows_delta(m),
            DistanceChoice::MinMax => minmax_distance(&tfsd_transform(m)?),
            DistanceChoice::Manhattan => manhattan_distances(m),
            DistanceChoice::Euclidean => euclidean_distances(m),
        }
    }
}

impl FromStr for DistanceChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "delta" => DistanceChoice::Delta,
            "minmax" => DistanceChoice::MinMax,
            "manhattan" => DistanceChoice::Manhattan,
            "euclidean" => DistanceChoice::Euclidean,
            other => return Err(format!("unknown distance `{other}`")),
        })
    }
}

impl fmt::Display for DistanceChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistanceChoice::Delta => "delta",
            DistanceChoice::MinMax => "minmax",
            DistanceChoice::Manhattan => "manhattan",
            DistanceChoice::Euclidean => "euclidean",
        })
    }
}
